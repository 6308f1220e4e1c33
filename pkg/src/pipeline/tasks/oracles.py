"""Signed distance oracles

SDF 학습의 정답값을 제공합니다. 음수는 내부, 양수는 외부입니다.
해석적 primitive(sphere, box, torus, 두 도형의 union)와 샘플 포인트 파일 기반 oracle을 지원합니다.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from enum import Enum

import numpy as np
from scipy.spatial import cKDTree

from src.core.errors import ConfigurationError

MAX_REJECTION_ROUNDS = 64


class ShapeType(str, Enum):
    """SDF 도형 유형"""

    sphere = "sphere"
    box = "box"
    torus = "torus"
    union = "union"
    file = "file"


def _as_points(p: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(p, dtype=np.float64))


class SdfOracle(ABC):
    """Signed distance over [−1,1]³ with surface sampling"""

    @abstractmethod
    def distance(self, p: np.ndarray) -> np.ndarray:
        """Signed distance for points of shape (N, 3)"""
        pass

    @abstractmethod
    def sample_surface(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Points on the zero level set, shape (count, 3)"""
        pass

    @property
    @abstractmethod
    def surface_weight(self) -> float:
        """Relative share of surface samples a Union draws from this shape (the area for analytic shapes)"""
        pass


class Sphere(SdfOracle):
    def __init__(self, radius: float = 0.5, center=(0.0, 0.0, 0.0)):
        if radius <= 0:
            raise ConfigurationError(f"sphere radius must be positive, got {radius}")
        self.radius = float(radius)
        self.center = np.asarray(center, dtype=np.float64)

    def distance(self, p: np.ndarray) -> np.ndarray:
        return np.linalg.norm(_as_points(p) - self.center, axis=1) - self.radius

    def sample_surface(self, rng: np.random.Generator, count: int) -> np.ndarray:
        directions = rng.normal(size=(count, 3))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        return self.center + self.radius * directions

    @property
    def surface_weight(self) -> float:
        return 4.0 * np.pi * self.radius**2


class Box(SdfOracle):
    """Axis-aligned box given by its half extents"""

    def __init__(self, half_extents=(0.3, 0.3, 0.3), center=(0.0, 0.0, 0.0)):
        self.half_extents = np.asarray(half_extents, dtype=np.float64)
        if self.half_extents.shape != (3,) or np.any(self.half_extents <= 0):
            raise ConfigurationError(f"box half extents must be three positive values, got {half_extents}")
        self.center = np.asarray(center, dtype=np.float64)

    def distance(self, p: np.ndarray) -> np.ndarray:
        q = np.abs(_as_points(p) - self.center) - self.half_extents
        outside = np.linalg.norm(np.maximum(q, 0.0), axis=1)
        inside = np.minimum(q.max(axis=1), 0.0)
        return outside + inside

    def _face_areas(self) -> np.ndarray:
        a, b, c = self.half_extents
        # one face per axis and sign
        return 4.0 * np.array([b * c, a * c, a * b])

    def sample_surface(self, rng: np.random.Generator, count: int) -> np.ndarray:
        areas = self._face_areas()
        axes = rng.choice(3, size=count, p=areas / areas.sum())
        signs = rng.choice(np.array([-1.0, 1.0]), size=count)
        points = rng.uniform(-1.0, 1.0, size=(count, 3)) * self.half_extents
        points[np.arange(count), axes] = signs * self.half_extents[axes]
        return self.center + points

    @property
    def surface_weight(self) -> float:
        return float(2.0 * self._face_areas().sum())


class Torus(SdfOracle):
    """Ring of radius ``major`` in the xz-plane with tube radius ``minor``"""

    def __init__(self, major: float = 0.5, minor: float = 0.2, center=(0.0, 0.0, 0.0)):
        if major <= 0 or minor <= 0:
            raise ConfigurationError(f"torus radii must be positive, got R={major}, r={minor}")
        self.major = float(major)
        self.minor = float(minor)
        self.center = np.asarray(center, dtype=np.float64)

    def distance(self, p: np.ndarray) -> np.ndarray:
        local = _as_points(p) - self.center
        ring = np.hypot(local[:, 0], local[:, 2]) - self.major
        return np.hypot(ring, local[:, 1]) - self.minor

    def sample_surface(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if count == 0:
            return np.zeros((0, 3))
        # the area element grows with R + r·cos(φ); rejection keeps sampling uniform
        phis: list[np.ndarray] = []
        have = 0
        while have < count:
            phi = rng.uniform(0.0, 2.0 * np.pi, size=2 * (count - have))
            keep = rng.uniform(0.0, self.major + self.minor, size=phi.size) < self.major + self.minor * np.cos(phi)
            phis.append(phi[keep])
            have += int(keep.sum())
        phi = np.concatenate(phis)[:count]
        theta = rng.uniform(0.0, 2.0 * np.pi, size=count)
        radial = self.major + self.minor * np.cos(phi)
        local = np.stack([radial * np.cos(theta), self.minor * np.sin(phi), radial * np.sin(theta)], axis=1)
        return self.center + local

    @property
    def surface_weight(self) -> float:
        return 4.0 * np.pi**2 * self.major * self.minor


class Union(SdfOracle):
    """``min`` of two children: exact outside, a lower bound on depth inside"""

    def __init__(self, first: SdfOracle, second: SdfOracle, tolerance: float = 1e-9):
        self.children = (first, second)
        self.tolerance = tolerance

    def distance(self, p: np.ndarray) -> np.ndarray:
        p = _as_points(p)
        return np.minimum(self.children[0].distance(p), self.children[1].distance(p))

    def sample_surface(self, rng: np.random.Generator, count: int) -> np.ndarray:
        if count == 0:
            return np.zeros((0, 3))
        weights = np.array([child.surface_weight for child in self.children])
        accepted: list[np.ndarray] = []
        have = 0
        for _ in range(MAX_REJECTION_ROUNDS):
            if have >= count:
                break
            picks = rng.choice(2, size=count - have, p=weights / weights.sum())
            for index, child in enumerate(self.children):
                n = int((picks == index).sum())
                if n == 0:
                    continue
                points = child.sample_surface(rng, n)
                other = self.children[1 - index]
                points = points[other.distance(points) >= -self.tolerance]
                accepted.append(points)
                have += points.shape[0]
        if have < count:
            raise ConfigurationError("union surface is (almost) entirely hidden inside one child")
        return np.concatenate(accepted, axis=0)[:count]

    @property
    def surface_weight(self) -> float:
        return float(sum(child.surface_weight for child in self.children))


class SampledPointOracle(SdfOracle):
    """Oracle backed by (point, sdf) records from a point file.

    Arbitrary points take the value of their nearest record; surface samples are
    records with ``|sdf| <= surface_tolerance``. The records carry no area, so the
    weight this oracle gets inside a Union is given explicitly.
    """

    def __init__(
        self,
        points: np.ndarray,
        sdf: np.ndarray,
        surface_tolerance: float = 1e-3,
        surface_weight: float = 1.0,
    ):
        if surface_weight <= 0:
            raise ConfigurationError(f"surface weight must be positive, got {surface_weight}")
        self._surface_weight = float(surface_weight)
        self.points = np.asarray(points, dtype=np.float64)
        self.sdf = np.asarray(sdf, dtype=np.float64)
        if self.points.ndim != 2 or self.points.shape[1] != 3 or self.points.shape[0] != self.sdf.shape[0]:
            raise ConfigurationError("point oracle needs N×3 points and N distances")
        if self.points.shape[0] == 0:
            raise ConfigurationError("point oracle has no records")
        self._tree = cKDTree(self.points)
        self._surface = np.flatnonzero(np.abs(self.sdf) <= surface_tolerance)
        if self._surface.size == 0:
            raise ConfigurationError(f"no records within {surface_tolerance} of the surface; oracle undefined")

    def distance(self, p: np.ndarray) -> np.ndarray:
        _, nearest = self._tree.query(_as_points(p))
        return self.sdf[nearest]

    def sample_surface(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.points[rng.choice(self._surface, size=count)]

    @property
    def surface_weight(self) -> float:
        return self._surface_weight


def analytic_sdf(oracle: SdfOracle, p: np.ndarray) -> np.ndarray:
    """Signed distance of ``oracle`` at one point or a batch of points"""
    values = oracle.distance(p)
    return values[0] if np.ndim(p) == 1 else values


def make_shape(
    shape: ShapeType | str,
    *,
    radius: float = 0.5,
    half_extents=(0.3, 0.3, 0.3),
    major_radius: float = 0.5,
    minor_radius: float = 0.2,
    center=(0.0, 0.0, 0.0),
) -> SdfOracle:
    """Primitive 팩토리 함수"""
    shape = ShapeType(shape)
    if shape == ShapeType.sphere:
        return Sphere(radius, center)
    elif shape == ShapeType.box:
        return Box(half_extents, center)
    elif shape == ShapeType.torus:
        return Torus(major_radius, minor_radius, center)
    else:
        raise ConfigurationError(f"'{shape.value}' is not a primitive shape")
