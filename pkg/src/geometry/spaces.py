"""Norms, product rho-metrics, dual rho-norms and the duality mapping.

All norm evaluations in the package funnel through ``_row_norms`` so that a
quantity computed for one point and the same quantity computed inside a
vectorized sweep agree bit for bit.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional

import numpy as np

from src.utils.errors import DimensionMismatchError, InputError

logger = logging.getLogger(__name__)


class NormKind(Enum):
    """Norms available on a finite-dimensional space."""
    EUCLIDEAN = "euclidean"
    MAX = "max"
    P_NORM = "p_norm"


def _row_norms(diff: np.ndarray, order: float) -> np.ndarray:
    """Norms along the last axis."""
    if order == 2.0:
        return np.sqrt(np.sum(diff * diff, axis=-1))
    if np.isinf(order):
        return np.max(np.abs(diff), axis=-1)
    if order == 1.0:
        return np.sum(np.abs(diff), axis=-1)
    return np.sum(np.abs(diff) ** order, axis=-1) ** (1.0 / order)


def conjugate_exponent(order: float) -> float:
    """Hölder conjugate of ``order`` (1 <-> inf, 2 <-> 2)."""
    if order == 1.0:
        return float("inf")
    if np.isinf(order):
        return 1.0
    return order / (order - 1.0)


@dataclass(frozen=True)
class NormedSpaceSpec:
    """R^dim with a chosen norm; the dual space carries the dual norm."""
    dim: int
    norm_kind: NormKind = NormKind.EUCLIDEAN
    p: Optional[float] = None

    def __post_init__(self):
        if isinstance(self.norm_kind, str):
            try:
                object.__setattr__(self, "norm_kind", NormKind(self.norm_kind))
            except ValueError:
                raise InputError(f"unknown norm kind '{self.norm_kind}'") from None
        if isinstance(self.dim, bool) or not isinstance(self.dim, (int, np.integer)):
            raise TypeError(f"dim must be int, got {type(self.dim).__name__}")
        if self.dim < 1:
            raise InputError(f"dim must be positive, got {self.dim}")
        if self.norm_kind is NormKind.P_NORM:
            if self.p is None:
                raise InputError("p_norm requires an exponent p")
            if not np.isinf(self.p) and self.p < 1.0:
                raise InputError(f"p must be >= 1, got {self.p}")

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "NormedSpaceSpec":
        """Create a space from a spec block such as ``{dim: 2, norm: max}``."""
        if "dim" not in config:
            raise InputError("space description needs 'dim'")
        p = config.get("p")
        return cls(
            dim=int(config["dim"]),
            norm_kind=config.get("norm", config.get("norm_kind", "euclidean")),
            p=float(p) if p is not None else None,
        )

    def to_config(self) -> Dict[str, Any]:
        config: Dict[str, Any] = {"dim": int(self.dim), "norm": self.norm_kind.value}
        if self.p is not None:
            config["p"] = float(self.p)
        return config

    @property
    def order(self) -> float:
        if self.norm_kind is NormKind.EUCLIDEAN:
            return 2.0
        if self.norm_kind is NormKind.MAX:
            return float("inf")
        return float(self.p)

    @property
    def dual_order(self) -> float:
        return conjugate_exponent(self.order)

    def conform(self, v) -> np.ndarray:
        """Return ``v`` as a float vector of length dim."""
        arr = np.asarray(v, dtype=float)
        if arr.ndim == 0 and self.dim == 1:
            arr = arr.reshape(1)
        if arr.shape != (self.dim,):
            raise DimensionMismatchError(
                f"expected a vector of dimension {self.dim}, got shape {arr.shape}"
            )
        return arr

    def conform_rows(self, rows) -> np.ndarray:
        """Return ``rows`` as an (n, dim) float array."""
        arr = np.asarray(rows, dtype=float)
        if arr.ndim == 1 and self.dim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2 or arr.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"expected rows of dimension {self.dim}, got shape {arr.shape}"
            )
        return arr

    def norms(self, rows: np.ndarray) -> np.ndarray:
        return _row_norms(np.asarray(rows, dtype=float), self.order)

    def dual_norms(self, rows: np.ndarray) -> np.ndarray:
        return _row_norms(np.asarray(rows, dtype=float), self.dual_order)

    def norm(self, v) -> float:
        return float(self.norms(self.conform(v)[None, :])[0])

    def dual_norm(self, v) -> float:
        return float(self.dual_norms(self.conform(v)[None, :])[0])

    def dist(self, a, b) -> float:
        return self.norm(self.conform(a) - self.conform(b))


class DualSetKind(Enum):
    SINGLETON = "singleton"
    CONE_FACE = "cone_face"
    POLYTOPE = "polytope"
    SPHERE_FLAG = "sphere_flag"
    EMPTY = "empty"


@dataclass
class DualVectorSet:
    """Finite description of a set of dual vectors.

    ``SINGLETON`` and ``POLYTOPE`` are convex hulls of the generators,
    ``CONE_FACE`` is the cone of nonnegative combinations, ``SPHERE_FLAG``
    stands for the whole dual unit sphere. A positive ``radius`` enlarges the
    set by that multiple of the closed dual unit ball; ``recession`` rows add
    their nonnegative combinations to a hull.
    """
    generators: np.ndarray
    kind: DualSetKind
    dim: int
    radius: float = 0.0
    scores: Optional[np.ndarray] = None
    notes: list = field(default_factory=list)
    recession: Optional[np.ndarray] = None

    def __post_init__(self):
        gens = np.asarray(self.generators, dtype=float)
        if gens.size == 0:
            gens = gens.reshape(0, self.dim)
        gens = np.atleast_2d(gens)
        if gens.shape[1] != self.dim:
            raise DimensionMismatchError(
                f"generators must have dimension {self.dim}, got {gens.shape[1]}"
            )
        self.generators = gens
        if self.kind is DualSetKind.SINGLETON and gens.shape[0] != 1:
            raise InputError("a singleton needs exactly one generator")
        if self.radius < 0:
            raise InputError(f"radius must be nonnegative, got {self.radius}")
        if self.recession is not None:
            self.recession = np.asarray(self.recession, dtype=float).reshape(-1, self.dim)
            if self.recession.shape[0] == 0:
                self.recession = None

    @classmethod
    def singleton(cls, v) -> "DualVectorSet":
        v = np.atleast_1d(np.asarray(v, dtype=float))
        return cls(v[None, :], DualSetKind.SINGLETON, v.shape[0])

    @classmethod
    def polytope(cls, vertices) -> "DualVectorSet":
        vertices = np.atleast_2d(np.asarray(vertices, dtype=float))
        if vertices.shape[0] == 1:
            return cls(vertices, DualSetKind.SINGLETON, vertices.shape[1])
        return cls(vertices, DualSetKind.POLYTOPE, vertices.shape[1])

    @classmethod
    def cone(cls, generators, dim: int) -> "DualVectorSet":
        return cls(np.asarray(generators, dtype=float).reshape(-1, dim), DualSetKind.CONE_FACE, dim)

    @classmethod
    def sphere(cls, dim: int) -> "DualVectorSet":
        return cls(np.zeros((0, dim)), DualSetKind.SPHERE_FLAG, dim)

    @classmethod
    def empty(cls, dim: int) -> "DualVectorSet":
        return cls(np.zeros((0, dim)), DualSetKind.EMPTY, dim)

    @property
    def is_empty(self) -> bool:
        return self.kind is DualSetKind.EMPTY

    def representative(self) -> np.ndarray:
        """Lexicographically smallest generator."""
        if self.generators.shape[0] == 0:
            raise InputError(f"a {self.kind.value} set has no representative generator")
        order = np.lexsort(self.generators.T[::-1])
        return self.generators[order[0]].copy()

    def enlarged(self, radius: float) -> "DualVectorSet":
        return DualVectorSet(self.generators.copy(), self.kind, self.dim,
                             radius=self.radius + radius, scores=self.scores, notes=list(self.notes),
                             recession=self.recession)

    def scaled(self, t: float) -> "DualVectorSet":
        if t < 0:
            raise InputError("only nonnegative scalings are supported")
        return DualVectorSet(self.generators * t, self.kind, self.dim,
                             radius=self.radius * t, scores=self.scores, notes=list(self.notes),
                             recession=self.recession if t > 0 else None)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind.value,
            "generators": self.generators.tolist(),
            "radius": float(self.radius),
        }
        if self.scores is not None:
            data["scores"] = np.asarray(self.scores, dtype=float).tolist()
        if self.recession is not None:
            data["recession"] = self.recession.tolist()
        return data


def duality_mapping(y, space: NormedSpaceSpec) -> DualVectorSet:
    """Unit dual vectors y* with <y*, y> = ||y||."""
    y = space.conform(y)
    norm_y = space.norm(y)
    if norm_y == 0.0:
        return DualVectorSet.sphere(space.dim)
    if space.dim == 1:
        return DualVectorSet.singleton(np.sign(y))
    order = space.order
    if order == 2.0:
        return DualVectorSet.singleton(y / norm_y)
    if np.isinf(order):
        active = np.flatnonzero(np.abs(y) == norm_y)
        vertices = np.zeros((active.size, space.dim))
        vertices[np.arange(active.size), active] = np.sign(y[active])
        return DualVectorSet.polytope(vertices)
    if order == 1.0:
        free = np.flatnonzero(y == 0.0)
        base = np.sign(y)
        if free.size == 0:
            return DualVectorSet.singleton(base)
        vertices = []
        for signs in itertools.product((-1.0, 1.0), repeat=free.size):
            vertex = base.copy()
            vertex[free] = signs
            vertices.append(vertex)
        return DualVectorSet.polytope(np.array(vertices))
    return DualVectorSet.singleton(np.sign(y) * (np.abs(y) / norm_y) ** (order - 1.0))


@dataclass
class ProductPoint:
    """A point (x, y) of X x Y."""
    x: np.ndarray
    y: np.ndarray

    def __post_init__(self):
        self.x = np.atleast_1d(np.asarray(self.x, dtype=float)).copy()
        self.y = np.atleast_1d(np.asarray(self.y, dtype=float)).copy()
        if self.x.ndim != 1 or self.y.ndim != 1:
            raise DimensionMismatchError("product point components must be vectors")

    def as_tuple(self) -> tuple:
        return tuple(self.x.tolist()) + tuple(self.y.tolist())

    def to_dict(self) -> Dict[str, Any]:
        return {"x": self.x.tolist(), "y": self.y.tolist()}

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> "ProductPoint":
        if "x" not in config or "y" not in config:
            raise InputError("a product point needs 'x' and 'y'")
        return cls(config["x"], config["y"])


@dataclass(frozen=True)
class ProductSpace:
    """X x Y with the parametric metrics d_rho (max) and d_rho^1 (sum)."""
    x_space: NormedSpaceSpec
    y_space: NormedSpaceSpec

    @classmethod
    def euclidean(cls, dim_x: int = 1, dim_y: int = 1) -> "ProductSpace":
        return cls(NormedSpaceSpec(dim_x), NormedSpaceSpec(dim_y))

    def conform(self, p: ProductPoint) -> ProductPoint:
        self.x_space.conform(p.x)
        self.y_space.conform(p.y)
        return p

    @staticmethod
    def _check_rho(rho: float) -> None:
        if not rho > 0:
            raise InputError(f"rho must be positive, got {rho}")

    def rho_dists(self, xs: np.ndarray, ys: np.ndarray, us: np.ndarray, vs: np.ndarray,
                  rho: float, metric: str = "max") -> np.ndarray:
        """Vectorized d_rho between broadcast-compatible point arrays."""
        dx = self.x_space.norms(xs - us)
        dy = self.y_space.norms(ys - vs)
        if metric == "max":
            return np.maximum(dx, rho * dy)
        if metric == "sum":
            return dx + rho * dy
        raise InputError(f"unknown product metric '{metric}'")

    def rho_dist(self, p: ProductPoint, q: ProductPoint, rho: float) -> float:
        """max{d(x,u), rho d(y,v)}."""
        self._check_rho(rho)
        self.conform(p)
        self.conform(q)
        return float(self.rho_dists(p.x[None, :], p.y[None, :], q.x[None, :], q.y[None, :], rho)[0])

    def rho_sum_dist(self, p: ProductPoint, q: ProductPoint, rho: float) -> float:
        """d(x,u) + rho d(y,v)."""
        self._check_rho(rho)
        self.conform(p)
        self.conform(q)
        return float(self.rho_dists(p.x[None, :], p.y[None, :], q.x[None, :], q.y[None, :],
                                    rho, metric="sum")[0])

    def rho_dual_norm(self, xstar, ystar, rho: float) -> float:
        """||x*|| + ||y*|| / rho in the dual norms."""
        self._check_rho(rho)
        return self.x_space.dual_norm(xstar) + self.y_space.dual_norm(ystar) / rho
