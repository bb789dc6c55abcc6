"""Fréchet normal cones, coderivatives and minimum-norm coderivative elements.

A graph point of a smooth or convex map carries a linear description of its
normal cone: every normal is ``(P z, -R z)`` for some parameter vector ``z``,
with ``z`` free for smooth maps and ``z >= 0`` for convex ones. Coderivative
elements are then pairs ``(y*, x*) = (R z, P z)`` and all dual slopes reduce to
small minimum-norm problems over ``z``.
"""
from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize, nnls

from src.geometry.spaces import DualSetKind, DualVectorSet, ProductPoint
from src.mappings.convex_graph import ConvexInequalityGraphMap
from src.mappings.set_valued_map import SetValuedMap, SmoothSingleValuedMap
from src.utils.errors import InputError, UnsupportedStructureError

logger = logging.getLogger(__name__)

ACTIVE_TOL = 1e-9
# relative slack accepted on the dual ball constraint of an SLSQP solution
BALL_SLACK = 1e-6


@dataclass
class NormalParametrization:
    """N_gph F(x, y) = {(P z, -R z) : z in R^k, z >= 0 when ``nonnegative``}."""
    P: np.ndarray
    R: np.ndarray
    nonnegative: bool

    @property
    def size(self) -> int:
        return int(self.P.shape[1])


@dataclass
class MinNormResult:
    value: float
    xstar: Optional[np.ndarray] = None
    ystar: Optional[np.ndarray] = None

    @property
    def feasible(self) -> bool:
        return self.xstar is not None


def require_dual_structure(mapping: SetValuedMap) -> None:
    if not isinstance(mapping, (SmoothSingleValuedMap, ConvexInequalityGraphMap)):
        raise UnsupportedStructureError(
            f"{mapping.name}: a {mapping.variant} graph carries no structure for normal cones; "
            "dual quantities need a smooth or convex representation"
        )


def active_gradients(mapping: ConvexInequalityGraphMap, x: np.ndarray, y: np.ndarray,
                     active_tol: float = ACTIVE_TOL) -> np.ndarray:
    """Gradients of the constraints active at (x, y), shape (k, dim_x + dim_y)."""
    z = np.concatenate([x, y])
    values = mapping.constraint_values(z[None, :])[0]
    return mapping.gradients(z)[values >= -active_tol]


def parametrize_normals(mapping: SetValuedMap, p: ProductPoint,
                        active_tol: float = ACTIVE_TOL) -> NormalParametrization:
    require_dual_structure(mapping)
    if isinstance(mapping, SmoothSingleValuedMap):
        J = mapping.jacobian(p.x)
        return NormalParametrization(J.T.copy(), np.eye(mapping.dim_y), nonnegative=False)
    G = active_gradients(mapping, p.x, p.y, active_tol)
    dx = mapping.dim_x
    return NormalParametrization(G[:, :dx].T.copy(), -G[:, dx:].T.copy(), nonnegative=True)


# normal cones and coderivatives

def _candidate_directions(n: int) -> np.ndarray:
    """Unit directions tested as normals of a sampled graph."""
    if n == 2:
        angles = 2.0 * np.pi * np.arange(32) / 32
        return np.stack([np.cos(angles), np.sin(angles)], axis=1)
    eye = np.eye(n)
    rows = [eye, -eye]
    for i, j in itertools.combinations(range(n), 2):
        for si, sj in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
            v = np.zeros(n)
            v[i], v[j] = si, sj
            rows.append(v[None, :] / np.sqrt(2.0))
    return np.vstack(rows)


def sampled_normal_candidates(mapping: SetValuedMap, p: ProductPoint, radius: float,
                              tol: float = 1e-2) -> DualVectorSet:
    """Shrinking-quotient test on a finite graph.

    A direction n is kept when <n, q - p> / |q - p| <= tol for every sample q
    within ``radius``; its score is that worst quotient.
    """
    mapping.require_on_graph(p)
    qx, qy, mask = mapping.local_neighbors(p.x[None, :], p.y[None, :], radius, 1)
    diffs = np.hstack([qx[0][mask[0]], qy[0][mask[0]]]) - np.concatenate([p.x, p.y])
    n = mapping.dim_x + mapping.dim_y
    directions = _candidate_directions(n)
    if diffs.shape[0] == 0:
        cone = DualVectorSet.cone(directions, n)
        cone.scores = np.full(directions.shape[0], -np.inf)
        cone.notes.append("no samples within the radius: every direction passes")
        return cone
    units = diffs / np.sqrt(np.sum(diffs * diffs, axis=1))[:, None]
    scores = np.max(units @ directions.T, axis=0)
    keep = scores <= tol
    cone = DualVectorSet.cone(directions[keep], n)
    cone.scores = scores[keep]
    if not np.any(keep):
        cone = DualVectorSet.singleton(np.zeros(n))
        cone.notes.append("no candidate direction passes; only the zero normal remains")
    return cone


def normal_cone(mapping: SetValuedMap, p: ProductPoint, radius: float = 1e-3,
                active_tol: float = ACTIVE_TOL) -> DualVectorSet:
    """Fréchet normal cone to gph F at p, as vectors (x*, y*) of X* x Y*."""
    mapping.require_on_graph(p)
    n = mapping.dim_x + mapping.dim_y
    if mapping.variant == "sampled":
        return sampled_normal_candidates(mapping, p, radius)
    normals = parametrize_normals(mapping, p, active_tol)
    if normals.size == 0:
        return DualVectorSet.singleton(np.zeros(n))
    generators = np.hstack([normals.P.T, -normals.R.T])
    if not normals.nonnegative:
        # a subspace: both signs of every spanning vector
        generators = np.vstack([generators, -generators])
    return DualVectorSet.cone(generators, n)


def _extreme_points(ystar_set: DualVectorSet) -> np.ndarray:
    """Finitely many points whose hull covers the input set (exact when dim_y = 1)."""
    if ystar_set.kind in (DualSetKind.SPHERE_FLAG, DualSetKind.CONE_FACE):
        raise InputError(f"coderivative inputs must be bounded hulls, got {ystar_set.kind.value}")
    points = ystar_set.generators
    if ystar_set.radius > 0:
        dim = ystar_set.dim
        offsets = ystar_set.radius * np.vstack([np.eye(dim), -np.eye(dim)])
        points = (points[:, None, :] + offsets[None, :, :]).reshape(-1, dim)
    return points


def _basic_solutions(normals: NormalParametrization, ystar: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vertices and extreme rays of {P z : R z = y*, z >= 0}."""
    R, P = normals.R, normals.P
    k = normals.size
    rank = np.linalg.matrix_rank(R) if k else 0
    vertices, rays = [], []
    if not np.any(ystar):
        vertices.append(np.zeros(P.shape[0]))
    for size in range(1, min(k, rank) + 1):
        for subset in itertools.combinations(range(k), size):
            cols = R[:, subset]
            if np.linalg.matrix_rank(cols) < size:
                continue
            z_s, _, _, _ = np.linalg.lstsq(cols, ystar, rcond=None)
            if np.any(z_s < 0) or np.linalg.norm(cols @ z_s - ystar) > 1e-10 * (1.0 + np.linalg.norm(ystar)):
                continue
            vertices.append(P[:, subset] @ z_s)
    for size in range(1, min(k, rank + 1) + 1):
        for subset in itertools.combinations(range(k), size):
            cols = R[:, subset]
            _, s, vt = np.linalg.svd(cols)
            null_dim = size - int(np.sum(s > 1e-12))
            if null_dim != 1:
                continue
            direction = vt[-1]
            if np.all(direction <= 0):
                direction = -direction
            if np.all(direction > 0):
                ray = P[:, subset] @ direction
                if np.any(np.abs(ray) > 1e-14):
                    rays.append(ray / np.max(np.abs(ray)))
    dim = P.shape[0]
    vertices = np.unique(np.array(vertices).reshape(-1, dim), axis=0)
    rays = np.unique(np.array(rays).reshape(-1, dim), axis=0)
    return vertices, rays


def coderivative(mapping: SetValuedMap, p: ProductPoint, ystar_set: DualVectorSet,
                 active_tol: float = ACTIVE_TOL) -> DualVectorSet:
    """D*F(x, y)(S): every x* with (x*, -y*) normal to gph F at p for some y* in S."""
    mapping.require_on_graph(p)
    if mapping.variant == "sampled":
        raise UnsupportedStructureError(f"{mapping.name}: coderivatives need a smooth or convex graph")
    if ystar_set.dim != mapping.dim_y:
        raise InputError(f"y* must have dimension {mapping.dim_y}, got {ystar_set.dim}")
    if ystar_set.is_empty:
        return DualVectorSet.empty(mapping.dim_x)
    normals = parametrize_normals(mapping, p, active_tol)
    points = _extreme_points(ystar_set)
    if not normals.nonnegative:
        images = points @ normals.P.T
        result = DualVectorSet.polytope(np.unique(images, axis=0) if images.shape[0] > 1 else images)
        if ystar_set.radius > 0 and mapping.dim_y > 1:
            result.notes.append("ball image approximated by its axis vertices")
        return result
    vertices, rays = [], []
    for ystar in points:
        v, r = _basic_solutions(normals, ystar)
        vertices.append(v)
        rays.append(r)
    vertices = np.vstack(vertices)
    rays = np.vstack(rays)
    if vertices.shape[0] == 0:
        return DualVectorSet.empty(mapping.dim_x)
    vertices = np.unique(vertices, axis=0) if vertices.shape[0] > 1 else vertices
    result = DualVectorSet.polytope(vertices)
    if rays.shape[0]:
        result.recession = np.unique(rays, axis=0)
    return result


def coderivative_residual(mapping: SetValuedMap, p: ProductPoint, xstar, ystar,
                          active_tol: float = ACTIVE_TOL) -> float:
    """How far (x*, -y*) is from N_gph F(p); zero for genuine coderivative pairs."""
    normals = parametrize_normals(mapping, p, active_tol)
    xstar = mapping.space.x_space.conform(xstar)
    ystar = mapping.space.y_space.conform(ystar)
    if not normals.nonnegative:
        return mapping.space.x_space.dual_norm(xstar - normals.P @ ystar)
    target = np.concatenate([xstar, ystar])
    if normals.size == 0:
        return float(np.linalg.norm(target))
    _, residual = nnls(np.vstack([normals.P, normals.R]), target)
    return float(residual)


# minimum-norm elements

def interval_min_norm(lo, hi, m_plus, m_minus, open_ball: bool = False):
    """inf of |w| m(w) over w in [lo, hi] (or (lo, hi)), m = m_plus for w > 0, m_minus for w < 0.

    ``m_plus`` and ``m_minus`` are the smallest coderivative norms at y* = +1
    and y* = -1; w = 0 always contributes the zero coderivative element.
    Returns (value, w) with the minimizing w.
    """
    lo, hi = np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)
    m_plus, m_minus = np.asarray(m_plus, dtype=float), np.asarray(m_minus, dtype=float)
    if open_ball:
        contains_zero = (lo < 0) & (hi > 0)
    else:
        contains_zero = (lo <= 0) & (hi >= 0)
    with np.errstate(invalid="ignore"):
        right = np.where(lo == 0, np.where(np.isfinite(m_plus), 0.0, np.inf), lo * m_plus)
        left = np.where(hi == 0, np.where(np.isfinite(m_minus), 0.0, np.inf), -hi * m_minus)
    value = np.where(contains_zero, 0.0, np.where(lo >= 0, right, left))
    w = np.where(contains_zero, 0.0, np.where(lo >= 0, lo, hi))
    return value, w


@dataclass
class DirectionalModuli:
    """Smallest coderivative elements at y* = +1 and y* = -1 (dim_y = 1)."""
    m_plus: np.ndarray
    m_minus: np.ndarray
    u_plus: np.ndarray
    u_minus: np.ndarray

    def element(self, w: np.ndarray) -> np.ndarray:
        """Minimum-norm x* in D*F(w) for scalar rows w, by positive homogeneity."""
        w = np.asarray(w, dtype=float)
        with np.errstate(invalid="ignore"):
            out = np.where((w > 0)[:, None], self.u_plus * w[:, None],
                           np.where((w < 0)[:, None], self.u_minus * (-w)[:, None], 0.0))
        return np.nan_to_num(out, nan=0.0)


def directional_moduli(mapping: SetValuedMap, xs: np.ndarray, ys: np.ndarray,
                       active_tol: float = ACTIVE_TOL) -> DirectionalModuli:
    require_dual_structure(mapping)
    if mapping.dim_y != 1:
        raise InputError("directional moduli are defined for dim_y = 1")
    x_space = mapping.space.x_space
    if isinstance(mapping, SmoothSingleValuedMap):
        J = mapping.jacobians(xs)[:, 0, :]
        m = x_space.dual_norms(J)
        return DirectionalModuli(m, m.copy(), J, -J)

    dx = mapping.dim_x
    zs = np.hstack([xs, ys])
    values = mapping.constraint_values(zs)
    active = values >= -active_tol
    counts = active.sum(axis=1)
    n = xs.shape[0]
    m_plus, m_minus = np.full(n, np.inf), np.full(n, np.inf)
    u_plus, u_minus = np.full((n, dx), np.nan), np.full((n, dx), np.nan)

    single = np.flatnonzero(counts == 1)
    if single.size:
        which = np.argmax(active[single], axis=1)
        G = np.einsum("kij,nj->nki", mapping._Q, zs[single])[np.arange(single.size), which] \
            + mapping._a[which]
        a_x, a_y = G[:, :dx], G[:, dx]
        with np.errstate(divide="ignore", invalid="ignore"):
            u = a_x / np.abs(a_y)[:, None]
        norms = x_space.dual_norms(u)
        plus, minus = a_y < 0, a_y > 0
        m_plus[single[plus]] = norms[plus]
        u_plus[single[plus]] = u[plus]
        m_minus[single[minus]] = norms[minus]
        u_minus[single[minus]] = u[minus]

    for i in np.flatnonzero(counts >= 2):
        p = ProductPoint(xs[i], ys[i])
        for sign, m_out, u_out in ((1.0, m_plus, u_plus), (-1.0, m_minus, u_minus)):
            result = min_norm_coderivative(mapping, p, np.array([[sign]]), 0.0, active_tol)
            if result.feasible:
                m_out[i] = result.value
                u_out[i] = result.xstar
    return DirectionalModuli(m_plus, m_minus, u_plus, u_minus)


def _lp_ready(order: float, dim: int) -> bool:
    return dim == 1 or order in (1.0, np.inf)


def min_norm_coderivative(mapping: SetValuedMap, p: ProductPoint, centers: np.ndarray, radius: float,
                          active_tol: float = ACTIVE_TOL) -> MinNormResult:
    """inf ||x*|| over x* in D*F(p)(conv(centers) + radius B*).

    Linear programming handles l1 / l-inf dual norms exactly; other norms go
    through SLSQP on the squared objective.
    """
    normals = parametrize_normals(mapping, p, active_tol)
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    x_space, y_space = mapping.space.x_space, mapping.space.y_space
    if centers.shape[1] != y_space.dim:
        raise InputError(f"centers must have dimension {y_space.dim}")
    if _lp_ready(x_space.dual_order, x_space.dim) and _lp_ready(y_space.dual_order, y_space.dim):
        result = _min_norm_lp(normals, centers, radius, x_space.dual_order, y_space.dual_order)
    else:
        result = _min_norm_slsqp(normals, centers, radius, x_space.dual_order, y_space.dual_order)
    if result.feasible:
        result.value = float(x_space.dual_norms(result.xstar[None, :])[0])
    return result


def _min_norm_lp(normals: NormalParametrization, centers: np.ndarray, radius: float,
                 x_order: float, y_order: float) -> MinNormResult:
    P, R = normals.P, normals.R
    dx, dy, nz = P.shape[0], R.shape[0], normals.size
    k = centers.shape[0]
    nu = 1 if (np.isinf(x_order) and dx > 1) else dx
    ns = dy if (y_order == 1.0 and dy > 1) else 0
    total = nz + k + nu + ns
    cost = np.zeros(total)
    cost[nz + k:nz + k + nu] = 1.0

    rows, rhs = [], []
    for sign in (1.0, -1.0):
        block = np.zeros((dx, total))
        block[:, :nz] = sign * P
        block[:, nz + k:nz + k + nu] = -np.eye(dx) if nu == dx else -np.ones((dx, 1))
        rows.append(block)
        rhs.append(np.zeros(dx))
    for sign in (1.0, -1.0):
        block = np.zeros((dy, total))
        block[:, :nz] = sign * R
        block[:, nz:nz + k] = -sign * centers.T
        if ns:
            block[:, nz + k + nu:] = -np.eye(dy)
            rhs.append(np.zeros(dy))
        else:
            rhs.append(np.full(dy, radius))
        rows.append(block)
    if ns:
        ball_row = np.zeros((1, total))
        ball_row[0, nz + k + nu:] = 1.0
        rows.append(ball_row)
        rhs.append(np.array([radius]))
    simplex = np.zeros((1, total))
    simplex[0, nz:nz + k] = 1.0
    bounds = ([(0, None)] * nz if normals.nonnegative else [(None, None)] * nz) + [(0, None)] * (k + nu + ns)
    result = linprog(cost, A_ub=np.vstack(rows), b_ub=np.concatenate(rhs), A_eq=simplex, b_eq=[1.0],
                     bounds=bounds, method="highs")
    if result.status != 0:
        return MinNormResult(float("inf"))
    z = result.x[:nz]
    return MinNormResult(float(result.fun), xstar=P @ z, ystar=R @ z)


def _min_norm_slsqp(normals: NormalParametrization, centers: np.ndarray, radius: float,
                    x_order: float, y_order: float) -> MinNormResult:
    P, R = normals.P, normals.R
    nz, k = normals.size, centers.shape[0]

    def x_norm(v):
        return float(np.sum(np.abs(v) ** x_order)) ** (1.0 / x_order) if np.any(v) else 0.0

    def y_norm(v):
        if np.isinf(y_order):
            return float(np.max(np.abs(v)))
        return float(np.sum(np.abs(v) ** y_order)) ** (1.0 / y_order) if np.any(v) else 0.0

    def split(v):
        return v[:nz], v[nz:]

    def ball(v):
        z, mu = split(v)
        return radius - y_norm(R @ z - centers.T @ mu)

    mu0 = np.full(k, 1.0 / k)
    target = centers.T @ mu0
    if normals.nonnegative:
        z0 = nnls(R, target)[0] if nz else np.zeros(0)
    else:
        z0 = np.linalg.lstsq(R, target, rcond=None)[0]
    bounds = ([(0, None)] * nz if normals.nonnegative else [(None, None)] * nz) + [(0, 1)] * k
    result = minimize(
        lambda v: x_norm(P @ split(v)[0]) ** 2,
        x0=np.concatenate([z0, mu0]),
        bounds=bounds,
        constraints=[{"type": "ineq", "fun": ball},
                     {"type": "eq", "fun": lambda v: np.sum(split(v)[1]) - 1.0}],
        method="SLSQP",
    )
    z, _ = split(result.x)
    if ball(result.x) < -BALL_SLACK * (1.0 + radius):
        logger.debug("min-norm problem reported infeasible by SLSQP")
        return MinNormResult(float("inf"))
    return MinNormResult(x_norm(P @ z), xstar=P @ z, ystar=R @ z)
