"""Binary checkpoints

Layout v1 (little-endian):

    "NFFB" | u32 version | u32 config_len | config JSON |
    u8 real_bytes | u64 step | u64 adam_t | u64 n_params |
    params[n] | m[n] | v[n]

config JSON은 모델 재구성에 필요한 FilterBankConfig, variant, 그리고 (있다면) RunConfig를 담습니다.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np
import orjson

from src.config.run_config import RunConfig
from src.core.errors import CheckpointError, ConfigurationError
from src.core.field_model import FieldModel, FilterBankConfig, make_variant
from src.core.optimizer import AdamState
from src.utils.logger import get_logger

logger = get_logger(__name__)

MAGIC = b"NFFB"
VERSION = 1

_PREFIX = struct.Struct("<4sII")
_COUNTERS = struct.Struct("<BQQQ")
_REAL_DTYPES = {4: np.dtype("<f4"), 8: np.dtype("<f8")}


@dataclass
class Checkpoint:
    model: FieldModel
    state: AdamState
    step: int
    run_config: Optional[RunConfig] = None


def encode_checkpoint(
    model: FieldModel,
    state: AdamState,
    step: int,
    run_config: RunConfig | None = None,
) -> bytes:
    real_bytes = model.params.dtype.itemsize
    if real_bytes not in _REAL_DTYPES:
        raise CheckpointError(f"unsupported parameter dtype {model.params.dtype}")
    dtype = _REAL_DTYPES[real_bytes]

    header = orjson.dumps(
        {
            "model": model.config.model_dump(mode="json"),
            "variant": model.variant.value,
            "run": None if run_config is None else orjson.loads(run_config.to_json()),
        },
        option=orjson.OPT_SORT_KEYS,
    )
    n = model.params.size
    return b"".join(
        [
            _PREFIX.pack(MAGIC, VERSION, len(header)),
            header,
            _COUNTERS.pack(real_bytes, step, state.t, n),
            model.params.data.astype(dtype, copy=False).tobytes(),
            state.m.astype(dtype, copy=False).tobytes(),
            state.v.astype(dtype, copy=False).tobytes(),
        ]
    )


def save_checkpoint(
    model: FieldModel,
    state: AdamState,
    path: str | Path,
    step: int,
    run_config: RunConfig | None = None,
) -> Path:
    """Write parameters, Adam state and step; the file is replaced atomically"""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    try:
        tmp.write_bytes(encode_checkpoint(model, state, step, run_config))
        tmp.replace(path)
    except OSError as e:
        raise CheckpointError(f"cannot write checkpoint {path}: {e}") from e
    logger.info(f"Saved checkpoint {path} (step {step})")
    return path


def decode_checkpoint(data: bytes) -> Checkpoint:
    if len(data) < _PREFIX.size:
        raise CheckpointError("checkpoint truncated in header")
    magic, version, config_len = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise CheckpointError(f"bad checkpoint magic {magic!r}")
    if version != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {version} (expected {VERSION})")

    pos = _PREFIX.size
    if len(data) < pos + config_len + _COUNTERS.size:
        raise CheckpointError("checkpoint truncated in config block")
    try:
        header = orjson.loads(data[pos : pos + config_len])
        config = FilterBankConfig.from_values(**header["model"])
        run_config = None if header.get("run") is None else RunConfig.from_data(header["run"])
        variant = header["variant"]
    except (orjson.JSONDecodeError, KeyError, TypeError, ConfigurationError) as e:
        raise CheckpointError(f"invalid checkpoint config block: {e}") from e
    pos += config_len

    real_bytes, step, adam_t, n = _COUNTERS.unpack_from(data, pos)
    pos += _COUNTERS.size
    if real_bytes not in _REAL_DTYPES:
        raise CheckpointError(f"unsupported real width {real_bytes}")
    dtype = _REAL_DTYPES[real_bytes]
    if len(data) != pos + 3 * n * real_bytes:
        raise CheckpointError(f"checkpoint truncated: expected {3 * n} reals after the header")

    try:
        model = make_variant(config, variant)
    except ConfigurationError as e:
        raise CheckpointError(f"checkpoint describes an invalid model: {e}") from e
    if model.params.size != n:
        raise CheckpointError(f"checkpoint holds {n} parameters, config builds {model.params.size}")

    arrays = np.frombuffer(data, dtype=dtype, count=3 * n, offset=pos).reshape(3, n)
    model.params.assign(arrays[0].astype(model.params.dtype))
    state = AdamState(
        m=arrays[1].astype(model.params.dtype),
        v=arrays[2].astype(model.params.dtype),
        t=int(adam_t),
    )
    return Checkpoint(model=model, state=state, step=int(step), run_config=run_config)


def load_checkpoint(path: str | Path) -> Checkpoint:
    """Read a checkpoint; nothing is returned unless the whole file validates"""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise CheckpointError(f"cannot read checkpoint {path}: {e}") from e
    return decode_checkpoint(data)
