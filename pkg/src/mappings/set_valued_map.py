"""Representations of a set-valued mapping F: X => Y by its graph.

Three variants share one interface: a smooth single-valued map with a
Jacobian, a finite sampled graph, and convex graphs given by inequalities
(see ``convex_graph``). Every slope and modulus estimator talks to a map only
through this interface.
"""
from __future__ import annotations

import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import brentq, minimize, minimize_scalar

from src.geometry.spaces import ProductPoint, ProductSpace
from src.utils.errors import DimensionMismatchError, InputError

logger = logging.getLogger(__name__)

# inverse-image candidates closer than this are merged
ROOT_MERGE_TOL = 1e-6


@dataclass
class GraphSample:
    """Finite, ordered set of graph points."""
    xs: np.ndarray
    ys: np.ndarray
    diagnostics: List[str] = field(default_factory=list)

    @property
    def size(self) -> int:
        return int(self.xs.shape[0])

    def point(self, i: int) -> ProductPoint:
        return ProductPoint(self.xs[i], self.ys[i])

    def subset(self, mask: np.ndarray) -> "GraphSample":
        return GraphSample(self.xs[mask], self.ys[mask], list(self.diagnostics))


def lexicographic_first(rows: np.ndarray) -> int:
    """Index of the lexicographically smallest row."""
    order = np.lexsort(np.asarray(rows).T[::-1])
    return int(order[0])


def _axis_offsets(dim: int, radius: float, points: int) -> np.ndarray:
    """Punctured stencil: +-k/points * radius along every coordinate axis."""
    steps = radius * np.arange(1, points + 1) / points
    offsets = []
    for axis in range(dim):
        for sign in (-1.0, 1.0):
            block = np.zeros((points, dim))
            block[:, axis] = sign * steps
            offsets.append(block)
    return np.vstack(offsets)


def _grid(center: np.ndarray, radius: float, resolution: int) -> np.ndarray:
    """Uniform tensor grid with ``resolution`` points per axis."""
    axes = [np.linspace(c - radius, c + radius, resolution) if radius > 0 else np.array([c])
            for c in center]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


class SetValuedMap(ABC):
    """A set-valued map together with its reference point (xbar, ybar) in gph F."""

    variant = "abstract"

    def __init__(self, space: ProductSpace, reference: ProductPoint, name: str = "F",
                 convex: bool = False, closed_graph: bool = True, graph_tol: float = 1e-10):
        self.space = space
        self.reference = space.conform(reference)
        self.name = name
        self.convex = convex
        self.closed_graph = closed_graph
        self.graph_tol = graph_tol
        self._inverse_cache: Dict[Tuple, np.ndarray] = {}

    @property
    def dim_x(self) -> int:
        return self.space.x_space.dim

    @property
    def dim_y(self) -> int:
        return self.space.y_space.dim

    @property
    def xbar(self) -> np.ndarray:
        return self.reference.x

    @property
    def ybar(self) -> np.ndarray:
        return self.reference.y

    def _validate_reference(self) -> None:
        if not self.contains(self.reference):
            raise InputError(f"reference point {self.reference.to_dict()} is not on the graph of {self.name}")

    # graph membership

    @abstractmethod
    def contains_many(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Boolean mask of rows (x, y) lying in gph F."""

    def contains(self, p: ProductPoint) -> bool:
        self.space.conform(p)
        return bool(self.contains_many(p.x[None, :], p.y[None, :])[0])

    def require_on_graph(self, p: ProductPoint) -> None:
        if not self.contains(p):
            raise InputError(f"point {p.to_dict()} is not on the graph of {self.name}")

    # sampling

    @abstractmethod
    def graph_sample(self, center: ProductPoint, radius: float, resolution: int,
                     fiber_resolution: int = 5) -> GraphSample:
        """Deterministic graph points within d_1 distance ``radius`` of ``center``."""

    @abstractmethod
    def local_neighbors(self, xs: np.ndarray, ys: np.ndarray, radius: float,
                        points: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Graph points near each row (x, y).

        Returns ``(qx, qy, mask)`` with shapes (N, K, dim_x), (N, K, dim_y) and
        (N, K); ``mask`` marks the entries that are genuine graph points.
        """

    def _finish_sample(self, center: ProductPoint, xs: np.ndarray, ys: np.ndarray,
                       radius: float) -> GraphSample:
        x_space, y_space = self.space.x_space, self.space.y_space
        keep = np.maximum(x_space.norms(xs - center.x), y_space.norms(ys - center.y)) <= radius
        xs, ys = xs[keep], ys[keep]
        is_center = np.all(xs == center.x, axis=1) & np.all(ys == center.y, axis=1)
        if not np.any(is_center):
            xs = np.vstack([xs, center.x[None, :]])
            ys = np.vstack([ys, center.y[None, :]])
        diagnostics = []
        if xs.shape[0] == 1:
            diagnostics.append("isolated point: the sample contains only the center")
            logger.warning(f"{self.name}: graph sample around {center.to_dict()} is isolated")
        return GraphSample(xs, ys, diagnostics)

    # inverse image and distances

    @abstractmethod
    def inverse_image_points(self, ybar: Optional[np.ndarray] = None,
                             window: Optional[float] = None) -> np.ndarray:
        """Sampled points of F^-1(ybar) within ``window`` of xbar, as rows."""

    @abstractmethod
    def distance_to_target(self, xs: np.ndarray, ybar: Optional[np.ndarray] = None) -> np.ndarray:
        """d(ybar, F(x)) for every row x; +inf where F(x) is empty."""

    def default_inverse_window(self, xs: np.ndarray) -> float:
        return float(np.max(self.space.x_space.norms(xs - self.xbar), initial=0.0)) * 10.0 + 1.0

    def dist_to_inverse_image_many(self, xs: np.ndarray, ybar: Optional[np.ndarray] = None,
                                   window: Optional[float] = None) -> np.ndarray:
        xs = self.space.x_space.conform_rows(xs)
        if window is None:
            window = self.default_inverse_window(xs)
        inverse = self.inverse_image_points(ybar, window)
        if inverse.shape[0] == 0:
            raise InputError(f"the inverse image of {self.name} at the target is empty")
        dists = self.space.x_space.norms(xs[:, None, :] - inverse[None, :, :])
        return np.min(dists, axis=1)

    def dist_to_inverse_image(self, x, ybar=None, window: Optional[float] = None) -> float:
        x = self.space.x_space.conform(x)
        return float(self.dist_to_inverse_image_many(x[None, :], ybar, window)[0])

    def _target(self, ybar) -> np.ndarray:
        return self.ybar if ybar is None else self.space.y_space.conform(ybar)

    # export

    def to_sampled_graph(self, radius: float, resolution: int, fiber_resolution: int = 5) -> "SampledGraphMap":
        sample = self.graph_sample(self.reference, radius, resolution, fiber_resolution)
        xs, ys = sample.xs, sample.ys
        _, unique = np.unique(np.hstack([xs, ys]), axis=0, return_index=True)
        unique = np.sort(unique)
        return SampledGraphMap(self.space, self.reference, xs[unique], ys[unique],
                               name=f"{self.name}|sampled", graph_tol=self.graph_tol)

    def midpoint_convexity_check(self, trials: int = 1000, seed: int = 0, radius: float = 1.0,
                                 resolution: int = 41) -> bool:
        """Random midpoint test of a declared convex graph on a local sample."""
        sample = self.graph_sample(self.reference, radius, resolution)
        if sample.size < 2:
            return True
        rng = np.random.default_rng(seed)
        first = rng.integers(0, sample.size, trials)
        second = rng.integers(0, sample.size, trials)
        mid_x = 0.5 * (sample.xs[first] + sample.xs[second])
        mid_y = 0.5 * (sample.ys[first] + sample.ys[second])
        ok = bool(np.all(self.contains_many(mid_x, mid_y)))
        if not ok:
            logger.warning(f"{self.name} is declared convex but fails the midpoint test")
        return ok

    @abstractmethod
    def to_config(self) -> Dict[str, Any]:
        """Mapping block of a problem spec."""


class SmoothSingleValuedMap(SetValuedMap):
    """F(x) = {h(x)} for a smooth h with a (possibly finite-difference) Jacobian."""

    variant = "smooth"

    def __init__(self, space: ProductSpace, reference: ProductPoint,
                 evaluator: Callable[[np.ndarray], np.ndarray],
                 jacobian: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 name: str = "F", convex: bool = False, fd_step: float = 1e-6,
                 graph_tol: float = 1e-10, root_grid: int = 4001,
                 config: Optional[Dict[str, Any]] = None):
        super().__init__(space, reference, name=name, convex=convex, closed_graph=True,
                         graph_tol=graph_tol)
        self.evaluator = evaluator
        self.jacobian_fn = jacobian
        self.fd_step = fd_step
        self.root_grid = root_grid
        self._config = config or {"kind": "custom"}
        self._validate_reference()

    def evaluate(self, xs: np.ndarray) -> np.ndarray:
        xs = self.space.x_space.conform_rows(xs)
        ys = np.asarray(self.evaluator(xs), dtype=float).reshape(xs.shape[0], -1)
        if ys.shape[1] != self.dim_y:
            raise DimensionMismatchError(f"{self.name} returned values of dimension {ys.shape[1]}, "
                                         f"expected {self.dim_y}")
        return ys

    def value(self, x) -> np.ndarray:
        return self.evaluate(self.space.x_space.conform(x)[None, :])[0]

    def jacobians(self, xs: np.ndarray) -> np.ndarray:
        """Jacobians as an (N, dim_y, dim_x) array."""
        xs = self.space.x_space.conform_rows(xs)
        if self.jacobian_fn is not None:
            return np.asarray(self.jacobian_fn(xs), dtype=float).reshape(xs.shape[0], self.dim_y, self.dim_x)
        h = self.fd_step
        columns = []
        for axis in range(self.dim_x):
            step = np.zeros(self.dim_x)
            step[axis] = h
            columns.append((self.evaluate(xs + step) - self.evaluate(xs - step)) / (2.0 * h))
        return np.stack(columns, axis=2)

    def jacobian(self, x) -> np.ndarray:
        return self.jacobians(self.space.x_space.conform(x)[None, :])[0]

    def contains_many(self, xs, ys) -> np.ndarray:
        ys = self.space.y_space.conform_rows(ys)
        return self.space.y_space.norms(self.evaluate(xs) - ys) <= self.graph_tol

    def graph_sample(self, center, radius, resolution, fiber_resolution=5) -> GraphSample:
        if radius < 0:
            raise InputError(f"radius must be nonnegative, got {radius}")
        xs = _grid(center.x, radius, resolution)
        return self._finish_sample(center, xs, self.evaluate(xs), radius)

    def local_neighbors(self, xs, ys, radius, points):
        offsets = _axis_offsets(self.dim_x, radius, points)
        qx = xs[:, None, :] + offsets[None, :, :]
        qy = self.evaluate(qx.reshape(-1, self.dim_x)).reshape(xs.shape[0], offsets.shape[0], self.dim_y)
        return qx, qy, np.ones(qx.shape[:2], dtype=bool)

    def distance_to_target(self, xs, ybar=None) -> np.ndarray:
        return self.space.y_space.norms(self.evaluate(xs) - self._target(ybar))

    def inverse_image_points(self, ybar=None, window=None) -> np.ndarray:
        target = self._target(ybar)
        if window is None:
            window = 1.0
        key = (tuple(target.tolist()), float(window))
        if key not in self._inverse_cache:
            if self.dim_x == 1:
                roots = self._roots_1d(target, window)
            else:
                roots = self._grid_inverse(target, window)
            self._inverse_cache[key] = roots
        return self._inverse_cache[key]

    def _residual(self, target: np.ndarray) -> Callable[[float], float]:
        if self.dim_y == 1:
            return lambda u: float(self.evaluate(np.array([[u]]))[0, 0] - target[0])
        return lambda u: float(self.space.y_space.norms(self.evaluate(np.array([[u]]))[0] - target))

    def _roots_1d(self, target: np.ndarray, window: float) -> np.ndarray:
        """Roots of F(u) = ybar on [xbar - window, xbar + window].

        Sign changes are refined with brentq; local minima of |F(u) - ybar|
        are refined with a bounded scalar minimization and kept when the
        residual is below the graph tolerance (double roots).
        """
        center = float(self.xbar[0])
        grid = np.linspace(center - window, center + window, self.root_grid)
        residual = self._residual(target)
        values = self.evaluate(grid[:, None]) - target
        signed = values[:, 0] if self.dim_y == 1 else self.space.y_space.norms(values)
        magnitude = np.abs(signed)

        candidates: List[float] = []
        if self.distance_to_target(self.xbar[None, :], target)[0] <= self.graph_tol:
            candidates.append(center)
        candidates.extend(grid[signed == 0.0].tolist())
        if self.dim_y == 1:
            for i in np.flatnonzero(signed[:-1] * signed[1:] < 0):
                candidates.append(brentq(residual, grid[i], grid[i + 1], xtol=1e-14))
        interior = np.arange(1, grid.size - 1)
        minima = interior[(magnitude[interior] <= magnitude[interior - 1])
                          & (magnitude[interior] <= magnitude[interior + 1])
                          & (magnitude[interior] > 0)]
        for i in minima:
            result = minimize_scalar(lambda u: abs(residual(u)), bounds=(grid[i - 1], grid[i + 1]),
                                     method="bounded", options={"xatol": 1e-12})
            if abs(residual(result.x)) <= self.graph_tol:
                candidates.append(float(result.x))

        kept: List[float] = []
        for u in candidates:
            if all(abs(u - k) > ROOT_MERGE_TOL * (1.0 + abs(k)) for k in kept):
                kept.append(u)
        return np.sort(np.array(kept, dtype=float)).reshape(-1, 1)

    def _grid_inverse(self, target: np.ndarray, window: float) -> np.ndarray:
        """Inverse points in dim_x > 1: xbar plus grid points refined by projection."""
        points = []
        if self.distance_to_target(self.xbar[None, :], target)[0] <= self.graph_tol:
            points.append(self.xbar.copy())
        resolution = max(3, int(round(self.root_grid ** (1.0 / self.dim_x))) | 1)
        grid = _grid(self.xbar, window, min(resolution, 41))
        close = grid[self.distance_to_target(grid, target) <= self.graph_tol]
        points.extend(list(close))
        if not points:
            return np.zeros((0, self.dim_x))
        return np.unique(np.array(points), axis=0)

    def dist_to_inverse_image_many(self, xs, ybar=None, window=None) -> np.ndarray:
        if self.dim_x == 1:
            return super().dist_to_inverse_image_many(xs, ybar, window)
        base = super().dist_to_inverse_image_many(xs, ybar, window)
        target = self._target(ybar)
        refined = []
        for x, current in zip(self.space.x_space.conform_rows(xs), base):
            refined.append(min(current, self._project_inverse(x, target)))
        return np.array(refined)

    def _project_inverse(self, x: np.ndarray, target: np.ndarray) -> float:
        norm = self.space.x_space.norms
        result = minimize(
            lambda u: float(np.sum((u - x) ** 2)),
            x0=self.xbar.copy(),
            constraints=[{"type": "eq", "fun": lambda u: self.evaluate(u[None, :])[0] - target}],
            method="SLSQP",
        )
        if not result.success or self.distance_to_target(result.x[None, :], target)[0] > 1e-8:
            return float("inf")
        return float(norm((result.x - x)[None, :])[0])

    def to_config(self) -> Dict[str, Any]:
        return {"variant": self.variant, **self._config}


class SampledGraphMap(SetValuedMap):
    """Finite graph {(x_i, y_i)}; F(x) = {y_i : x_i = x}."""

    variant = "sampled"

    def __init__(self, space: ProductSpace, reference: ProductPoint, xs, ys, name: str = "F",
                 graph_tol: float = 1e-10):
        super().__init__(space, reference, name=name, convex=False, closed_graph=False,
                         graph_tol=graph_tol)
        self.xs = space.x_space.conform_rows(np.array(xs, dtype=float))
        self.ys = space.y_space.conform_rows(np.array(ys, dtype=float))
        if self.xs.shape[0] != self.ys.shape[0]:
            raise InputError("sampled graph needs as many x samples as y samples")
        if self.xs.shape[0] == 0:
            raise InputError("sampled graph is empty")
        stacked = np.hstack([self.xs, self.ys])
        if np.unique(stacked, axis=0).shape[0] != stacked.shape[0]:
            raise InputError("sampled graph contains duplicate points")
        self._validate_reference()

    @property
    def size(self) -> int:
        return int(self.xs.shape[0])

    def contains_many(self, xs, ys) -> np.ndarray:
        xs = self.space.x_space.conform_rows(xs)
        ys = self.space.y_space.conform_rows(ys)
        match = (np.all(xs[:, None, :] == self.xs[None, :, :], axis=2)
                 & np.all(ys[:, None, :] == self.ys[None, :, :], axis=2))
        return np.any(match, axis=1)

    def graph_sample(self, center, radius, resolution=0, fiber_resolution=5) -> GraphSample:
        if radius < 0:
            raise InputError(f"radius must be nonnegative, got {radius}")
        return self._finish_sample(center, self.xs, self.ys, radius)

    def local_neighbors(self, xs, ys, radius, points=0):
        """All samples within ``radius`` (d_1) of each row, the row itself excluded."""
        n = xs.shape[0]
        qx = np.broadcast_to(self.xs[None, :, :], (n,) + self.xs.shape)
        qy = np.broadcast_to(self.ys[None, :, :], (n,) + self.ys.shape)
        dx = self.space.x_space.norms(qx - xs[:, None, :])
        dy = self.space.y_space.norms(qy - ys[:, None, :])
        mask = (np.maximum(dx, dy) <= radius) & ((dx > 0) | (dy > 0))
        return qx, qy, mask

    def inverse_image_points(self, ybar=None, window=None) -> np.ndarray:
        target = self._target(ybar)
        hit = self.space.y_space.norms(self.ys - target) <= self.graph_tol
        if window is not None:
            hit &= self.space.x_space.norms(self.xs - self.xbar) <= window
        return np.unique(self.xs[hit], axis=0)

    def dist_to_inverse_image_many(self, xs, ybar=None, window=None) -> np.ndarray:
        # the whole finite inverse image, unless a window is given explicitly
        xs = self.space.x_space.conform_rows(xs)
        inverse = self.inverse_image_points(ybar, window)
        if inverse.shape[0] == 0:
            raise InputError(f"the inverse image of {self.name} at the target is empty")
        return np.min(self.space.x_space.norms(xs[:, None, :] - inverse[None, :, :]), axis=1)

    def distance_to_target(self, xs, ybar=None) -> np.ndarray:
        xs = self.space.x_space.conform_rows(xs)
        target = self._target(ybar)
        same_x = np.all(xs[:, None, :] == self.xs[None, :, :], axis=2)
        dists = self.space.y_space.norms(self.ys - target)
        return np.min(np.where(same_x, dists[None, :], np.inf), axis=1)

    def diameter(self) -> float:
        stacked_x = self.space.x_space.norms(self.xs[:, None, :] - self.xs[None, :, :])
        stacked_y = self.space.y_space.norms(self.ys[:, None, :] - self.ys[None, :, :])
        return float(np.max(np.maximum(stacked_x, stacked_y)))

    def to_config(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "samples": [{"x": x.tolist(), "y": y.tolist()} for x, y in zip(self.xs, self.ys)],
        }
