"""Graphs cut out by convex inequalities on z = (x, y).

Each constraint reads ``0.5 z^T Q z + a^T z <= b`` with Q positive
semidefinite; the polyhedral variant is the Q = 0 case. For dim_y = 1 every
fiber F(x) is an interval computed in closed form, which keeps sampling,
distances and inverse images exact.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import linprog, minimize

from src.geometry.spaces import ProductPoint, ProductSpace
from src.mappings.set_valued_map import GraphSample, SetValuedMap, _axis_offsets, _grid
from src.utils.errors import DimensionMismatchError, InputError

logger = logging.getLogger(__name__)

# local competitors farther than this multiple of the stencil radius are dropped
NEIGHBOR_REACH = 8.0


@dataclass
class QuadraticConstraint:
    """0.5 z^T Q z + a^T z <= b."""
    Q: np.ndarray
    a: np.ndarray
    b: float

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        n = self.a.shape[0]
        self.Q = np.zeros((n, n)) if self.Q is None else np.asarray(self.Q, dtype=float)
        if self.Q.shape != (n, n):
            raise DimensionMismatchError(f"Q must be {n}x{n}, got {self.Q.shape}")
        if not np.allclose(self.Q, self.Q.T):
            raise InputError("Q must be symmetric")
        if np.min(np.linalg.eigvalsh(self.Q), initial=0.0) < -1e-12:
            raise InputError("Q must be positive semidefinite")
        self.b = float(self.b)

    @property
    def is_linear(self) -> bool:
        return not np.any(self.Q)

    def to_config(self) -> Dict[str, Any]:
        config: Dict[str, Any] = {"a": self.a.tolist(), "b": self.b}
        if not self.is_linear:
            config["Q"] = self.Q.tolist()
        return config


class ConvexInequalityGraphMap(SetValuedMap):
    """gph F = {z : every constraint holds}; convex and closed."""

    variant = "convex_quadratic"

    def __init__(self, space: ProductSpace, reference: ProductPoint,
                 constraints: Sequence[QuadraticConstraint], name: str = "F",
                 graph_tol: float = 1e-10, active_tol: float = 1e-9):
        super().__init__(space, reference, name=name, convex=True, closed_graph=True,
                         graph_tol=graph_tol)
        if not constraints:
            raise InputError("a convex graph needs at least one constraint")
        n = self.dim_x + self.dim_y
        for c in constraints:
            if c.a.shape[0] != n:
                raise DimensionMismatchError(f"constraint vectors must have length {n}")
        self.constraints = list(constraints)
        self.active_tol = active_tol
        self._Q = np.stack([c.Q for c in self.constraints])
        self._a = np.stack([c.a for c in self.constraints])
        self._b = np.array([c.b for c in self.constraints])
        self._validate_reference()

    @property
    def is_polyhedral(self) -> bool:
        return all(c.is_linear for c in self.constraints)

    def _stack(self, xs, ys) -> np.ndarray:
        return np.hstack([self.space.x_space.conform_rows(xs), self.space.y_space.conform_rows(ys)])

    def constraint_values(self, zs: np.ndarray) -> np.ndarray:
        """Constraint residuals, shape (N, m); nonpositive means satisfied."""
        quad = 0.5 * np.einsum("ni,kij,nj->nk", zs, self._Q, zs)
        return quad + zs @ self._a.T - self._b

    def gradients(self, z: np.ndarray) -> np.ndarray:
        """Constraint gradients Q z + a at one point, shape (m, n)."""
        return np.einsum("kij,j->ki", self._Q, z) + self._a

    def active_set(self, p: ProductPoint) -> np.ndarray:
        z = np.concatenate([p.x, p.y])
        values = self.constraint_values(z[None, :])[0]
        return np.flatnonzero(values >= -self.active_tol)

    def contains_many(self, xs, ys) -> np.ndarray:
        return np.all(self.constraint_values(self._stack(xs, ys)) <= self.graph_tol, axis=1)

    # fibers (dim_y = 1)

    def coordinate_intervals(self, free: int, rest: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Feasible interval of coordinate ``free`` of z with the others fixed to ``rest``.

        ``rest`` holds the remaining coordinates in order, shape (N, n - 1).
        Returns (lo, hi); lo > hi marks an empty section.
        """
        keep = [i for i in range(self.dim_x + self.dim_y) if i != free]
        lo = np.full(rest.shape[0], -np.inf)
        hi = np.full(rest.shape[0], np.inf)
        for c in self.constraints:
            q_rr = c.Q[np.ix_(keep, keep)]
            q2 = 0.5 * c.Q[free, free]
            q1 = rest @ c.Q[keep, free] + c.a[free]
            q0 = 0.5 * np.einsum("ni,ij,nj->n", rest, q_rr, rest) + rest @ c.a[keep] - c.b
            if q2 > 0:
                disc = q1 * q1 - 4.0 * q2 * q0
                root = np.sqrt(np.maximum(disc, 0.0))
                c_lo = np.where(disc >= 0, (-q1 - root) / (2.0 * q2), np.inf)
                c_hi = np.where(disc >= 0, (-q1 + root) / (2.0 * q2), -np.inf)
            else:
                with np.errstate(divide="ignore", invalid="ignore"):
                    bound = -q0 / q1
                c_lo = np.where(q1 < 0, bound, np.where((q1 == 0) & (q0 > 0), np.inf, -np.inf))
                c_hi = np.where(q1 > 0, bound, np.where((q1 == 0) & (q0 > 0), -np.inf, np.inf))
            lo = np.maximum(lo, c_lo)
            hi = np.minimum(hi, c_hi)
        return lo, hi

    def fiber_intervals(self, xs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Bounds (lo, hi) of F(x) for every row x; lo > hi marks an empty fiber."""
        if self.dim_y != 1:
            raise InputError("closed-form fibers need dim_y = 1")
        xs = self.space.x_space.conform_rows(xs)
        return self.coordinate_intervals(self.dim_x, xs)

    def _fiber_points(self, lo: float, hi: float, center_y: float, radius: float,
                      fiber_resolution: int) -> np.ndarray:
        lo_c, hi_c = max(lo, center_y - radius), min(hi, center_y + radius)
        if lo_c > hi_c:
            return np.zeros(0)
        return np.unique(np.linspace(lo_c, hi_c, fiber_resolution + 2))

    # sampling

    def graph_sample(self, center, radius, resolution, fiber_resolution=5) -> GraphSample:
        if radius < 0:
            raise InputError(f"radius must be nonnegative, got {radius}")
        grid = _grid(center.x, radius, resolution)
        if self.dim_y == 1:
            lo, hi = self.fiber_intervals(grid)
            xs, ys = [], []
            for x, l, h in zip(grid, lo, hi):
                fiber = self._fiber_points(l, h, float(center.y[0]), radius, fiber_resolution)
                xs.extend([x] * fiber.size)
                ys.extend(fiber.tolist())
            xs = np.array(xs).reshape(-1, self.dim_x)
            ys = np.array(ys).reshape(-1, 1)
        else:
            y_grid = _grid(center.y, radius, fiber_resolution + 2)
            xs = np.repeat(grid, y_grid.shape[0], axis=0)
            ys = np.tile(y_grid, (grid.shape[0], 1))
            keep = self.contains_many(xs, ys)
            xs, ys = xs[keep], ys[keep]
        return self._finish_sample(center, xs, ys, radius)

    def local_neighbors(self, xs, ys, radius, points):
        n = xs.shape[0]
        if self.dim_y == 1:
            x_offsets = np.vstack([np.zeros((1, self.dim_x)), _axis_offsets(self.dim_x, radius, points)])
            y_steps = radius * np.arange(-points, points + 1) / points
            qx = xs[:, None, :] + x_offsets[None, :, :]
            lo, hi = self.fiber_intervals(qx.reshape(-1, self.dim_x))
            lo, hi = lo.reshape(n, -1), hi.reshape(n, -1)
            candidates = ys[:, 0][:, None, None] + y_steps[None, None, :]
            candidates = np.clip(candidates, lo[:, :, None], hi[:, :, None])
            candidates = np.concatenate([candidates, lo[:, :, None], hi[:, :, None]], axis=2)
            k = candidates.shape[2]
            qx = np.repeat(qx, k, axis=1)
            qy = candidates.reshape(n, -1, 1)
            nonempty = np.repeat(lo <= hi, k, axis=1)
            finite = np.isfinite(qy[:, :, 0])
            qy = np.where(finite[:, :, None], qy, ys[:, None, :])
            reach = np.maximum(self.space.x_space.norms(qx - xs[:, None, :]),
                               self.space.y_space.norms(qy - ys[:, None, :]))
            mask = nonempty & finite & (reach <= NEIGHBOR_REACH * radius) & (reach > 0)
            return qx, qy, mask
        dim = self.dim_x + self.dim_y
        directions = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=dim) if any(d)])
        steps = radius * np.arange(1, points + 1) / points
        offsets = (steps[:, None, None] * directions[None, :, :]).reshape(-1, dim)
        qz = np.hstack([xs, ys])[:, None, :] + offsets[None, :, :]
        qx, qy = qz[:, :, :self.dim_x], qz[:, :, self.dim_x:]
        mask = self.contains_many(qx.reshape(-1, self.dim_x), qy.reshape(-1, self.dim_y)).reshape(n, -1)
        return qx, qy, mask

    # distances and inverse images

    def distance_to_target(self, xs, ybar=None) -> np.ndarray:
        xs = self.space.x_space.conform_rows(xs)
        target = self._target(ybar)
        if self.dim_y == 1:
            lo, hi = self.fiber_intervals(xs)
            dist = np.maximum(np.maximum(lo - target[0], target[0] - hi), 0.0)
            return np.where(lo <= hi, dist, np.inf)
        return np.array([self._project(np.concatenate([x, target]), fixed="x") for x in xs])

    def _inverse_interval(self, target: np.ndarray) -> Tuple[float, float]:
        """F^-1(ybar) for dim_x = 1, as an interval."""
        lo, hi = self.coordinate_intervals(0, target[None, :])
        return float(lo[0]), float(hi[0])

    def inverse_image_points(self, ybar=None, window=None) -> np.ndarray:
        target = self._target(ybar)
        if window is None:
            window = 1.0
        key = (tuple(target.tolist()), float(window))
        if key in self._inverse_cache:
            return self._inverse_cache[key]
        if self.dim_x == 1 and self.dim_y == 1:
            lo, hi = self._inverse_interval(target)
            center = float(self.xbar[0])
            lo, hi = max(lo, center - window), min(hi, center + window)
            points = np.unique(np.append(np.linspace(lo, hi, 65), center)) if lo <= hi else np.zeros(0)
            points = points.reshape(-1, 1)
        else:
            grid = np.vstack([self.xbar[None, :], _grid(self.xbar, window, 21)])
            keep = self.contains_many(grid, np.repeat(target[None, :], grid.shape[0], axis=0))
            points = np.unique(grid[keep], axis=0)
        self._inverse_cache[key] = points
        return points

    def dist_to_inverse_image_many(self, xs, ybar=None, window=None) -> np.ndarray:
        xs = self.space.x_space.conform_rows(xs)
        target = self._target(ybar)
        if self.dim_x == 1 and self.dim_y == 1:
            lo, hi = self._inverse_interval(target)
            if lo > hi:
                raise InputError(f"the inverse image of {self.name} at the target is empty")
            return np.maximum(np.maximum(lo - xs[:, 0], xs[:, 0] - hi), 0.0)
        if self.inverse_image_points(target, window).shape[0] == 0:
            raise InputError(f"the inverse image of {self.name} at the target is empty")
        return np.array([self._project(np.concatenate([x, target]), fixed="y") for x in xs])

    def _project(self, z: np.ndarray, fixed: str) -> float:
        """Distance from z to the graph along the free component.

        ``fixed="y"`` moves x only (distance to F^-1(y)), ``fixed="x"`` moves y
        only (distance from y to F(x)).
        """
        dx = self.dim_x
        free = slice(0, dx) if fixed == "y" else slice(dx, None)
        space = self.space.x_space if fixed == "y" else self.space.y_space
        start = z[free].copy()
        order = space.order
        if self.is_polyhedral and order in (1.0, np.inf):
            return self._project_lp(z, free, order)

        def assemble(u):
            w = z.copy()
            w[free] = u
            return w

        result = minimize(
            lambda u: float(np.sum((u - start) ** 2)),
            x0=start,
            constraints=[{"type": "ineq", "fun": lambda u: -self.constraint_values(assemble(u)[None, :])[0]}],
            method="SLSQP",
        )
        if not result.success or np.any(self.constraint_values(assemble(result.x)[None, :])[0] > 1e-8):
            logger.warning(f"{self.name}: projection did not converge; reporting +inf")
            return float("inf")
        return float(space.norms((result.x - start)[None, :])[0])

    def _project_lp(self, z: np.ndarray, free: slice, order: float) -> float:
        """Exact l1 / l-inf projection onto a polyhedral fiber by linear programming."""
        idx = np.arange(z.shape[0])[free]
        k = idx.size
        a_free = self._a[:, idx]
        rhs = self._b - np.delete(self._a, idx, axis=1) @ np.delete(z, idx)
        start = z[idx]
        # variables: u (k), t (k or 1)
        t_count = k if order == 1.0 else 1
        cost = np.concatenate([np.zeros(k), np.ones(t_count)])
        rows = [np.hstack([a_free, np.zeros((a_free.shape[0], t_count))])]
        bounds_rhs = [rhs]
        for sign in (1.0, -1.0):
            block = np.zeros((k, k + t_count))
            block[:, :k] = sign * np.eye(k)
            if t_count == k:
                block[:, k:] = -np.eye(k)
            else:
                block[:, k] = -1.0
            rows.append(block)
            bounds_rhs.append(sign * start)
        result = linprog(cost, A_ub=np.vstack(rows), b_ub=np.concatenate(bounds_rhs),
                         bounds=[(None, None)] * k + [(0, None)] * t_count, method="highs")
        if result.status == 2:
            return float("inf")
        return float(result.fun)

    def to_config(self) -> Dict[str, Any]:
        return {"variant": self.variant, "constraints": [c.to_config() for c in self.constraints]}

    @classmethod
    def from_config(cls, config: Dict[str, Any], space: ProductSpace, reference: ProductPoint,
                    name: str = "F", **kwargs) -> "ConvexInequalityGraphMap":
        constraints = []
        for entry in config.get("constraints", []):
            if "a" not in entry or "b" not in entry:
                raise InputError("every constraint needs 'a' and 'b'")
            constraints.append(QuadraticConstraint(Q=entry.get("Q"), a=entry["a"], b=entry["b"]))
        return cls(space, reference, constraints, name=name, **kwargs)


class ConvexPolyhedralGraphMap(ConvexInequalityGraphMap):
    """gph F = {z : a_i^T z <= b_i}."""

    variant = "polyhedral"

    def __init__(self, space: ProductSpace, reference: ProductPoint, inequalities: Sequence[Tuple],
                 name: str = "F", **kwargs):
        constraints = [QuadraticConstraint(Q=None, a=a, b=b) for a, b in inequalities]
        super().__init__(space, reference, constraints, name=name, **kwargs)

    def to_config(self) -> Dict[str, Any]:
        return {
            "variant": self.variant,
            "inequalities": [{"a": c.a.tolist(), "b": c.b} for c in self.constraints],
        }

    @classmethod
    def from_config(cls, config: Dict[str, Any], space: ProductSpace, reference: ProductPoint,
                    name: str = "F", **kwargs) -> "ConvexPolyhedralGraphMap":
        inequalities: List[Tuple] = []
        for entry in config.get("inequalities", []):
            if "a" not in entry or "b" not in entry:
                raise InputError("every inequality needs 'a' and 'b'")
            inequalities.append((entry["a"], entry["b"]))
        if not inequalities:
            raise InputError("a polyhedral graph needs at least one inequality")
        return cls(space, reference, inequalities, name=name, **kwargs)
