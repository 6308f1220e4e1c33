"""Ablation variants"""

import numpy as np
import pytest

from src.core.ablations import GridFourierModel, OnlyGridModel, OnlyMlpModel, matched_width, mlp_parameter_count
from src.core.field_model import VariantType, make_variant
from src.core.filter_bank import parameter_count


@pytest.mark.unit
class TestVariants:
    @pytest.mark.parametrize("variant", list(VariantType))
    def test_output_shape(self, tiny_config, rng, variant):
        model = make_variant(tiny_config, variant)
        assert model.variant == variant
        assert model.predict(rng.uniform(size=(10, 2))).shape == (10, 3)

    def test_factory_types(self, tiny_config):
        assert isinstance(make_variant(tiny_config, "only_grid"), OnlyGridModel)
        assert isinstance(make_variant(tiny_config, "grid_ff"), GridFourierModel)
        assert isinstance(make_variant(tiny_config, "only_mlp"), OnlyMlpModel)

    def test_only_grid_zero_tables_give_constant(self, tiny_config, rng):
        model = make_variant(tiny_config, "only_grid")
        for i in range(tiny_config.n_levels):
            model.params[f"grid.{i}.table"][...] = 0.0
        values = model.predict(rng.uniform(size=(20, 2)))
        np.testing.assert_allclose(values, np.tile(values[0], (20, 1)), atol=1e-15)

    def test_only_grid_lift_starts_as_identity(self, tiny_config):
        model = make_variant(tiny_config, "only_grid")
        np.testing.assert_array_equal(model.params["lift.0.weight"], np.eye(tiny_config.width, 2))

    def test_grid_ff_has_no_trunk(self, tiny_config):
        names = list(make_variant(tiny_config, "grid_ff").params)
        assert "fourier.1.B" in names
        assert not any(name.startswith("mlp.") for name in names)

    def test_only_mlp_matches_parameter_budget(self, tiny_config):
        model = make_variant(tiny_config, "only_mlp")
        target = parameter_count(tiny_config)
        assert not any(name.startswith("grid.") for name in model.params)

        def distance(width):
            return abs(mlp_parameter_count(2, width, tiny_config.n_levels, 3) - target)

        assert model.parameter_count == mlp_parameter_count(2, model.width, tiny_config.n_levels, 3)
        assert distance(model.width) <= distance(model.width - 1)
        assert distance(model.width) <= distance(model.width + 1)

    def test_matched_width_explicit_target(self, tiny_config):
        target = mlp_parameter_count(2, 20, tiny_config.n_levels, 3)
        assert matched_width(tiny_config, target) == 20
