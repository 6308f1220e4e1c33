"""Run config parsing, presets and overrides"""

import orjson
import pytest

from src.config.run_config import PresetName, RunConfig, load_config, parse_config
from src.core.errors import ConfigParseError, ConfigurationError
from src.core.field_model import VariantType
from src.pipeline.tasks.base import TaskType
from src.pipeline.tasks.oracles import ShapeType


@pytest.mark.unit
class TestParseConfig:
    def test_empty_file_gives_defaults(self):
        config = parse_config("")
        assert config.run.task == TaskType.image
        assert config.run.variant == VariantType.full
        assert config.resolved_preset == PresetName.tokyo
        assert (config.model.alpha, config.model.width, config.model.n_levels) == (100.0, 96, 8)
        assert (config.grid.n_min, config.grid.c_g, config.grid.log2_hashmap_size) == (64, 1.5, 19)
        assert (config.fourier.sigma_min, config.fourier.c_f) == (5.0, 2.0)
        assert (config.optim.beta1, config.optim.beta2, config.optim.base_lr) == (0.9, 0.99, 1e-4)

    def test_sdf_preset(self):
        config = parse_config("task = sdf\n")
        assert config.model.alpha == 45.0
        assert config.model.n_levels == 5
        assert (config.grid.n_min, config.grid.c_g) == (8, 1.3)
        assert (config.fourier.sigma_min, config.fourier.c_f) == (5.0, 1.2)
        assert config.run.batch_size == 49152

    def test_einstein_preset(self):
        config = parse_config("preset = einstein")
        assert (config.model.width, config.grid.c_g, config.fourier.sigma_min) == (256, 2.0, 10.0)
        assert config.grid.log2_hashmap_size == 17

    def test_written_keys_override_preset(self):
        config = parse_config("[run]\ntask = sdf\n[model]\nalpha = 30 # lower\n")
        assert config.model.alpha == 30.0
        assert config.model.n_levels == 5

    def test_sections_comments_and_lists(self):
        text = """
        # experiment
        [run]
        steps = 200
        deterministic = true
        [model]
        n_levels = 3
        alpha_per_layer = 10, 20, 30
        [sdf]
        center = 0.1, 0, -0.1
        """
        config = parse_config(text)
        assert config.run.steps == 200 and config.run.deterministic
        assert config.model.alpha_per_layer == [10.0, 20.0, 30.0]
        assert config.sdf.center == (0.1, 0.0, -0.1)

    def test_type_mismatch_names_key_and_line(self):
        with pytest.raises(ConfigParseError) as excinfo:
            parse_config("steps = 10\nalpha = banana\n")
        assert excinfo.value.key == "alpha"
        assert excinfo.value.line == 2
        assert "line 2" in str(excinfo.value)

    def test_unknown_key(self):
        with pytest.raises(ConfigParseError) as excinfo:
            parse_config("\n\nalhpa = 3\n")
        assert excinfo.value.line == 3

    def test_key_in_wrong_section(self):
        with pytest.raises(ConfigParseError):
            parse_config("[grid]\nalpha = 3\n")

    @pytest.mark.parametrize(
        "text",
        ["[nosuch]\n", "just some words\n", "steps = 1\nsteps = 2\n", "[run\n", "task = video\n"],
    )
    def test_malformed(self, text):
        with pytest.raises(ConfigParseError):
            parse_config(text)

    def test_file_shape_needs_points(self):
        with pytest.raises(ConfigParseError) as excinfo:
            parse_config("task = sdf\n[sdf]\nshape = file\n")
        assert excinfo.value.line == 3

    def test_image_command_needs_image_path(self):
        with pytest.raises(ConfigParseError) as excinfo:
            parse_config("steps = 5\ntask = image\nalpha = 30\n", task="image")
        assert excinfo.value.key == "image_path"
        assert excinfo.value.line == 2

    def test_missing_image_path_without_task_line_points_at_end(self):
        with pytest.raises(ConfigParseError) as excinfo:
            parse_config("steps = 5\n[image]\nexhaustive = true\n", task="image")
        assert excinfo.value.line == 3

    def test_command_line_image_satisfies_input_check(self):
        config = parse_config("task = image\n", task="image", overrides={"image_path": "a.ppm", "seed": None})
        assert config.image.image_path == "a.ppm"
        assert config.run.seed == 0

    def test_overrides_win_over_file(self):
        config = parse_config("steps = 5\nseed = 1\n", overrides={"steps": 9, "shape": ShapeType.torus})
        assert (config.run.steps, config.run.seed, config.sdf.shape) == (9, 1, ShapeType.torus)

    def test_unknown_override(self):
        with pytest.raises(ConfigParseError):
            parse_config("", overrides={"nonsense": 1})

    def test_generic_parse_does_not_require_inputs(self):
        assert parse_config("task = image\n").image.image_path is None

    def test_alpha_per_layer_length(self):
        with pytest.raises(ConfigParseError):
            parse_config("n_levels = 2\nalpha_per_layer = 1, 2, 3\n")

    def test_command_task_conflict(self):
        with pytest.raises(ConfigParseError):
            parse_config("task = image\n", task=TaskType.sdf)

    def test_command_task_selects_preset(self):
        assert parse_config("", task="sdf").model.alpha == 45.0

    def test_errors_are_configuration_errors(self):
        with pytest.raises(ConfigurationError):
            parse_config("width = -4\n")

    def test_load_config(self, tmp_path):
        path = tmp_path / "run.cfg"
        path.write_text("[run]\nseed = 9\n", encoding="utf-8")
        assert load_config(path).run.seed == 9
        assert load_config(None).run.seed == 0
        with pytest.raises(ConfigParseError):
            load_config(tmp_path / "missing.cfg")


@pytest.mark.unit
class TestRunConfig:
    def test_echo_round_trip(self):
        config = parse_config("task = sdf\nalpha_per_layer = 1, 2, 3, 4, 5\nsteps = 17\n")
        assert parse_config(config.echo()) == config

    def test_json_round_trip(self):
        config = parse_config("preset = einstein\nseed = 4\n")
        assert RunConfig.from_json(config.to_json()) == config
        assert orjson.loads(config.to_json())["grid"]["log2_hashmap_size"] == 17

    def test_filter_bank_config(self):
        image = parse_config("").filter_bank_config()
        sdf = parse_config("task = sdf").filter_bank_config()
        assert (image.n_input, image.d_out) == (2, 3)
        assert (sdf.n_input, sdf.d_out, sdf.n_levels, sdf.alpha) == (3, 1, 5, 45.0)

    def test_overrides(self):
        config = parse_config("").with_overrides(steps=5, shape=ShapeType.torus, output_dir=None)
        assert config.run.steps == 5
        assert config.sdf.shape == ShapeType.torus
        with pytest.raises(ConfigurationError):
            config.with_overrides(nonsense=1)

    def test_with_param(self):
        config = parse_config("")
        assert config.with_param("sigma_min", 8).fourier.sigma_min == 8.0
        assert config.with_param("n_min", 32.0).grid.n_min == 32
        with pytest.raises(ConfigurationError):
            config.with_param("n_min", 2.5)
        with pytest.raises(ConfigurationError):
            config.with_param("seed", 1)

    def test_require_inputs(self):
        with pytest.raises(ConfigurationError):
            parse_config("").require_inputs()
        parse_config("image_path = a.ppm").require_inputs()
