"""Multi-resolution hash grid

레벨별 lookup table(특징 벡터)과 공간 해시, n-linear 보간을 제공합니다.
정점 수가 테이블 용량 이하인 coarse 레벨은 충돌 없는 dense 인덱싱을 쓰고,
나머지는 XOR 소수 해시로 테이블에 접습니다.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from .errors import ConfigurationError, InputError
from .tape import Tape, Var

HASH_PRIMES = (np.uint32(1), np.uint32(2654435761), np.uint32(805459861))
TABLE_INIT_RANGE = 1e-4


class IndexingMode(str, Enum):
    """테이블 인덱싱 방식"""

    dense = "dense"
    hashed = "hashed"


class GridLevelConfig(BaseModel):
    """One resolution level of the grid"""

    model_config = ConfigDict(extra="forbid", frozen=True)

    level_index: int = Field(ge=0)
    n_min: int = Field(ge=1)
    c_g: float = Field(ge=1.0)
    t_max: int = Field(ge=1)
    n_features: int = Field(default=2, ge=1)
    n_input: int = 2

    @field_validator("t_max")
    @classmethod
    def _power_of_two(cls, value: int) -> int:
        if value & (value - 1):
            raise ValueError(f"table capacity must be a power of two, got {value}")
        return value

    @field_validator("n_input")
    @classmethod
    def _supported_dim(cls, value: int) -> int:
        if value not in (2, 3):
            raise ValueError(f"input dimension must be 2 or 3, got {value}")
        return value

    @property
    def resolution(self) -> int:
        return level_resolution(self.level_index, self.n_min, self.c_g)


def level_resolution(level: int, n_min: int, c_g: float) -> int:
    """``⌊N_min · c_g^l⌋``"""
    if n_min < 1 or c_g < 1.0:
        raise ConfigurationError(f"invalid grid growth: n_min={n_min}, c_g={c_g}")
    return max(1, int(math.floor(n_min * c_g**level)))


def corner_coords(x: np.ndarray, resolution: int) -> tuple[np.ndarray, np.ndarray]:
    """Lower cell vertex and in-cell weights for points in ``[0,1]^n``.

    The lower vertex is clamped to ``resolution - 1`` so the upper vertex stays
    on the lattice; points on the far boundary get weight 1.
    """
    x = np.asarray(x)
    if np.any(x < 0.0) or np.any(x > 1.0) or not np.all(np.isfinite(x)):
        raise InputError("grid coordinates must lie in [0, 1]")
    scaled = x * resolution
    lower = np.minimum(np.floor(scaled), resolution - 1).astype(np.int64)
    weights = np.clip(scaled - lower, 0.0, 1.0)
    return lower, weights


def hash_vertex(vertex: np.ndarray, table_size: int, mode: IndexingMode, resolution: int | None = None) -> np.ndarray:
    """Table row for integer lattice vertices (last axis = coordinate).

    Hashed mode XORs ``x_i · π_i`` in wrapping uint32 arithmetic and reduces
    mod ``table_size``; dense mode is the row-major index with stride
    ``resolution + 1``.
    """
    vertex = np.asarray(vertex)
    if mode == IndexingMode.dense:
        if resolution is None:
            raise ConfigurationError("dense indexing needs the level resolution")
        index = np.zeros(vertex.shape[:-1], dtype=np.int64)
        stride = 1
        for axis in range(vertex.shape[-1]):
            index += vertex[..., axis].astype(np.int64) * stride
            stride *= resolution + 1
        return index

    coords = vertex.astype(np.uint32)
    acc = np.zeros(vertex.shape[:-1], dtype=np.uint32)
    for axis in range(vertex.shape[-1]):
        acc ^= coords[..., axis] * HASH_PRIMES[axis]
    return (acc % np.uint32(table_size)).astype(np.int64)


@dataclass
class GridLevel:
    """Lookup table of one level; the table itself lives in ModelParams under ``table_name``"""

    config: GridLevelConfig
    table_name: str

    @property
    def resolution(self) -> int:
        return self.config.resolution

    @property
    def vertex_count(self) -> int:
        return (self.resolution + 1) ** self.config.n_input

    @property
    def mode(self) -> IndexingMode:
        return IndexingMode.dense if self.vertex_count <= self.config.t_max else IndexingMode.hashed

    @property
    def table_rows(self) -> int:
        """T_eff = min(T_max, (N_l+1)^n)"""
        return min(self.config.t_max, self.vertex_count)

    @property
    def table_shape(self) -> tuple[int, int]:
        return (self.table_rows, self.config.n_features)

    def init_table(self, rng: np.random.Generator, dtype: np.dtype | str = np.float32) -> np.ndarray:
        return rng.uniform(-TABLE_INIT_RANGE, TABLE_INIT_RANGE, size=self.table_shape).astype(dtype)

    def corners(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Rows and weights of the 2^n cell corners for every point.

        Returns ``rows`` (B, 2^n) and ``weights`` (B, 2^n); corner ``k`` uses
        the upper vertex along axis ``j`` when bit ``j`` of ``k`` is set.
        """
        lower, w = corner_coords(x, self.resolution)
        n = self.config.n_input
        batch = lower.shape[0]
        rows = np.empty((batch, 2**n), dtype=np.int64)
        weights = np.empty((batch, 2**n), dtype=w.dtype)
        for k, bits in enumerate(itertools.product((0, 1), repeat=n)):
            # itertools yields the most significant axis first
            offset = np.array(bits[::-1], dtype=np.int64)
            rows[:, k] = hash_vertex(lower + offset, self.table_rows, self.mode, self.resolution)
            weight = np.ones(batch, dtype=w.dtype)
            for axis in range(n):
                weight = weight * (w[:, axis] if offset[axis] else 1.0 - w[:, axis])
            weights[:, k] = weight
        return rows, weights


def interpolate(tape: Tape, x: np.ndarray, level: GridLevel) -> Var:
    """n-linear blend of the 2^n corner features of each point's cell"""
    table = tape.param(level.table_name)
    rows, weights = level.corners(x)
    weights = weights.astype(table.dtype, copy=False)
    out = np.einsum("bk,bkf->bf", weights, table[rows])

    def _backward(upstream: np.ndarray):
        interpolate_backward(tape, level, rows, weights, upstream)
        return ()

    return tape.record("interpolate", out, (), _backward)


def interpolate_backward(
    tape: Tape,
    level: GridLevel,
    rows: np.ndarray,
    weights: np.ndarray,
    upstream: np.ndarray,
) -> None:
    """Scatter ``weight · upstream`` of every corner into the touched table rows"""
    contributions = weights[:, :, None] * upstream[:, None, :]
    tape.scatter(level.table_name, rows.reshape(-1), contributions.reshape(-1, upstream.shape[1]))
