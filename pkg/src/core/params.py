"""Flat parameter storage

모든 학습 파라미터(테이블, B 행렬, MLP 가중치/편향, head)를 하나의 1차원 버퍼에 담고
이름별 view를 제공합니다. 버퍼의 오프셋이 곧 안정적인 flat index입니다.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np


@dataclass(frozen=True)
class ParamSpec:
    """One named tensor inside the flat buffer"""

    name: str
    shape: tuple[int, ...]
    offset: int
    size: int

    @property
    def stop(self) -> int:
        return self.offset + self.size


class ModelParams:
    """All trainable tensors of a model backed by one contiguous vector.

    The index map is fixed at construction: tensor ``k`` occupies
    ``data[offset_k : offset_k + size_k]`` in C order, for the lifetime of the
    object and across checkpoint save/load.
    """

    def __init__(self, shapes: list[tuple[str, tuple[int, ...]]], dtype: np.dtype | str = np.float32):
        self.dtype = np.dtype(dtype)
        self._specs: dict[str, ParamSpec] = {}
        offset = 0
        for name, shape in shapes:
            if name in self._specs:
                raise ValueError(f"Duplicate parameter name: {name}")
            size = int(np.prod(shape, dtype=np.int64)) if shape else 1
            self._specs[name] = ParamSpec(name=name, shape=tuple(shape), offset=offset, size=size)
            offset += size
        self.data = np.zeros(offset, dtype=self.dtype)
        self._views = self.views_of(self.data)

    @classmethod
    def pack(cls, arrays: Mapping[str, np.ndarray], dtype: np.dtype | str = np.float32) -> ModelParams:
        """Build from named arrays, keeping their insertion order as the index map"""
        params = cls([(name, np.shape(value)) for name, value in arrays.items()], dtype=dtype)
        for name, value in arrays.items():
            params[name][...] = value
        return params

    def views_of(self, buffer: np.ndarray) -> dict[str, np.ndarray]:
        """같은 레이아웃으로 다른 flat 버퍼(예: gradient)를 이름별로 나눈 view"""
        if buffer.shape != (self.size,):
            raise ValueError(f"Buffer length {buffer.shape} does not match parameter count {self.size}")
        return {
            spec.name: buffer[spec.offset : spec.stop].reshape(spec.shape)
            for spec in self._specs.values()
        }

    def __getitem__(self, name: str) -> np.ndarray:
        return self._views[name]

    def __contains__(self, name: str) -> bool:
        return name in self._specs

    def __iter__(self) -> Iterator[str]:
        return iter(self._specs)

    @property
    def size(self) -> int:
        return int(self.data.shape[0])

    @property
    def specs(self) -> list[ParamSpec]:
        return list(self._specs.values())

    def spec(self, name: str) -> ParamSpec:
        return self._specs[name]

    def name_of(self, flat_index: int) -> str:
        """flat index가 속한 텐서 이름"""
        for spec in self._specs.values():
            if spec.offset <= flat_index < spec.stop:
                return spec.name
        raise IndexError(flat_index)

    def layout(self) -> list[tuple[str, tuple[int, ...]]]:
        return [(spec.name, spec.shape) for spec in self._specs.values()]

    def assign(self, flat: np.ndarray) -> None:
        if flat.shape != self.data.shape:
            raise ValueError(f"Expected {self.data.shape} parameters, got {flat.shape}")
        self.data[...] = flat

    def copy(self) -> ModelParams:
        clone = ModelParams(self.layout(), dtype=self.dtype)
        clone.data[...] = self.data
        return clone
