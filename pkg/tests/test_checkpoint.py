"""Checkpoint save/load and metrics CSV"""

import struct

import numpy as np
import pytest

from src.config.run_config import parse_config
from src.core.errors import CheckpointError
from src.core.field_model import Precision, make_variant
from src.core.optimizer import AdamState, adam_step
from src.models.entities import MetricsRow
from src.repository.checkpoint import MAGIC, load_checkpoint, save_checkpoint
from src.repository.metrics_csv import HEADER, MetricsWriter, read_metrics


def _trained_state(model, rng) -> AdamState:
    state = AdamState.zeros(model.params.size, model.params.dtype)
    for _ in range(2):
        grads = rng.normal(size=model.params.size).astype(model.params.dtype)
        updated, state = adam_step(model.params.data, grads, state, lr=1e-3)
        model.params.assign(updated)
    return state


@pytest.mark.unit
class TestCheckpoint:
    @pytest.mark.parametrize("variant", ["full", "only_grid", "grid_ff", "only_mlp"])
    def test_round_trip_is_bit_identical(self, tiny_config, tmp_path, rng, variant):
        model = make_variant(tiny_config, variant)
        state = _trained_state(model, rng)
        path = save_checkpoint(model, state, tmp_path / "m.ckpt", step=42)

        loaded = load_checkpoint(path)
        assert loaded.step == 42
        assert loaded.model.variant == model.variant
        assert loaded.model.config == model.config
        assert loaded.state.t == state.t == 2
        assert loaded.model.params.data.tobytes() == model.params.data.tobytes()
        assert loaded.state.m.tobytes() == state.m.tobytes()
        assert loaded.state.v.tobytes() == state.v.tobytes()

    def test_float32_layout(self, tiny_config, tmp_path, rng):
        config = tiny_config.model_copy(update={"precision": Precision.float32})
        model = make_variant(config)
        state = AdamState.zeros(model.params.size, np.float32)
        data = save_checkpoint(model, state, tmp_path / "m.ckpt", step=3).read_bytes()

        magic, version, config_len = struct.unpack_from("<4sII", data, 0)
        real_bytes, step, adam_t, n = struct.unpack_from("<BQQQ", data, 12 + config_len)
        assert (magic, version, real_bytes, step, adam_t, n) == (MAGIC, 1, 4, 3, 0, model.params.size)
        assert len(data) == 12 + config_len + 25 + 3 * 4 * n

    def test_run_config_echo(self, tiny_model, tmp_path):
        run = parse_config("steps = 77\n")
        path = save_checkpoint(
            tiny_model, AdamState.zeros(tiny_model.params.size, np.float64), tmp_path / "m.ckpt", 0, run
        )
        assert load_checkpoint(path).run_config == run

    def test_corrupted_magic(self, tiny_model, tmp_path):
        path = save_checkpoint(tiny_model, AdamState.zeros(tiny_model.params.size, np.float64), tmp_path / "m.ckpt", 0)
        path.write_bytes(b"XXXX" + path.read_bytes()[4:])
        with pytest.raises(CheckpointError, match="magic"):
            load_checkpoint(path)

    def test_unsupported_version(self, tiny_model, tmp_path):
        path = save_checkpoint(tiny_model, AdamState.zeros(tiny_model.params.size, np.float64), tmp_path / "m.ckpt", 0)
        data = bytearray(path.read_bytes())
        data[4:8] = struct.pack("<I", 2)
        path.write_bytes(bytes(data))
        with pytest.raises(CheckpointError, match="version"):
            load_checkpoint(path)

    def test_truncated(self, tiny_model, tmp_path):
        path = save_checkpoint(tiny_model, AdamState.zeros(tiny_model.params.size, np.float64), tmp_path / "m.ckpt", 0)
        path.write_bytes(path.read_bytes()[:-8])
        with pytest.raises(CheckpointError, match="truncated"):
            load_checkpoint(path)

    def test_parameter_count_mismatch(self, tiny_model, tmp_path):
        path = save_checkpoint(tiny_model, AdamState.zeros(tiny_model.params.size, np.float64), tmp_path / "m.ckpt", 0)
        data = path.read_bytes()
        (config_len,) = struct.unpack_from("<I", data, 8)
        offset = 12 + config_len + 17
        n = tiny_model.params.size - 1
        forged = data[:offset] + struct.pack("<Q", n) + data[offset + 8 : offset + 8 + 3 * 8 * n]
        path.write_bytes(forged)
        with pytest.raises(CheckpointError, match="parameters"):
            load_checkpoint(path)

    def test_missing_file(self, tmp_path):
        with pytest.raises(CheckpointError):
            load_checkpoint(tmp_path / "none.ckpt")


@pytest.mark.unit
class TestMetricsCsv:
    def _row(self, step):
        return MetricsRow(step=step, loss=0.1 * step, metric=20.0 + step, lr=1e-4, wall_seconds=0.0)

    def test_write_and_read(self, tmp_path):
        writer = MetricsWriter(tmp_path / "metrics.csv")
        writer.write_all([self._row(5), self._row(10)])
        lines = (tmp_path / "metrics.csv").read_text().splitlines()
        assert lines[0] == HEADER == "step,loss,metric,lr,wall_seconds"
        assert lines[1] == "5,0.5,25.0,0.0001,0.0"
        assert read_metrics(tmp_path / "metrics.csv") == [self._row(5), self._row(10)]

    def test_infinite_psnr(self, tmp_path):
        row = MetricsRow(step=1, loss=0.0, metric=float("inf"), lr=1e-4, wall_seconds=0.0)
        assert row.to_csv() == "1,0.0,inf,0.0001,0.0"
        MetricsWriter(tmp_path / "m.csv").write(row)
        assert read_metrics(tmp_path / "m.csv")[0].metric == float("inf")

    def test_resume_keeps_rows_up_to_step(self, tmp_path):
        path = tmp_path / "metrics.csv"
        MetricsWriter(path).write_all([self._row(s) for s in (5, 10, 15)])
        MetricsWriter(path, resume_step=10).write(self._row(15))
        assert [row.step for row in read_metrics(path)] == [5, 10, 15]

    def test_rejects_foreign_csv(self, tmp_path):
        path = tmp_path / "x.csv"
        path.write_text("a,b\n1,2\n")
        from src.core.errors import ImageFormatError

        with pytest.raises(ImageFormatError):
            read_metrics(path)
