"""Subdifferential slopes and limiting outer coderivatives.

Every dual slope is an infimum of ||x*|| over coderivative elements
x* in D*F(x, y)(C + rho B*), C being a subdifferential of the gauge. For
dim_y = 1 the enlarged set is an interval and the infimum has a closed form
in the two directional moduli at y* = +1 and y* = -1; otherwise a small
minimum-norm program is solved per point.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from src.geometry.spaces import ProductPoint
from src.mappings.gauges import GaugeFunction, ModulationFunction, g_from_phi
from src.mappings.lifted_function import LiftedFunction
from src.mappings.set_valued_map import SetValuedMap
from src.slopes.coderivatives import (
    DirectionalModuli,
    coderivative_residual,
    directional_moduli,
    interval_min_norm,
    min_norm_coderivative,
    require_dual_structure,
)
from src.slopes.primal_slopes import PrimalSlopeEstimator
from src.slopes.slope_estimate import INF, SlopeEstimate, encode_ext, guarded_ratio
from src.slopes.slope_settings import RhoSchedule, SamplingSettings, ToleranceSettings
from src.utils.errors import DomainError, InputError, UnsupportedStructureError

logger = logging.getLogger(__name__)

SUBDIFF_VARIANTS = ("plain", "approximate", "modified", "approximate_modified")
GAUGE_KINDS = ("f", "g", "phi")

# (values, y*, x*) per point
DualValues = Tuple[np.ndarray, np.ndarray, np.ndarray]


class DualSlopeEstimator:
    """Subdifferential slopes of F around the reference point (smooth or convex graphs)."""

    def __init__(self, mapping: SetValuedMap, gauge: GaugeFunction,
                 sampling: Optional[SamplingSettings] = None,
                 schedule: Optional[RhoSchedule] = None,
                 tolerances: Optional[ToleranceSettings] = None,
                 primal: Optional[PrimalSlopeEstimator] = None):
        require_dual_structure(mapping)
        self.primal = primal or PrimalSlopeEstimator(mapping, gauge, sampling, schedule, tolerances)
        if self.primal.mapping is not mapping:
            raise InputError("the primal estimator belongs to another mapping")
        self.mapping = mapping
        self.gauge = gauge
        self.sampling = self.primal.sampling
        self.schedule = self.primal.schedule
        self.tolerances = self.primal.tolerances
        self.space = mapping.space
        self.distance_gauge = g_from_phi(ModulationFunction.identity(), mapping.ybar, self.space.y_space)
        self._moduli: Dict[Tuple[bytes, bytes], DirectionalModuli] = {}

    # building blocks

    def moduli(self, xs: np.ndarray, ys: np.ndarray) -> DirectionalModuli:
        key = (xs.tobytes(), ys.tobytes())
        if key not in self._moduli:
            self._moduli[key] = directional_moduli(self.mapping, xs, ys, self.tolerances.active_tol)
        return self._moduli[key]

    def subgradient_interval(self, gauge: GaugeFunction, ys: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """Bounds of the scalar subdifferential of g at every row y (dim_y = 1)."""
        if gauge.phi is not None:
            d = ys[:, 0] - gauge.ybar[0]
            t = np.abs(d)
            if np.any(t == 0):
                raise DomainError("the subdifferential of phi(||. - ybar||) is only used away from ybar")
            c = gauge.phi.derivative(t) * np.sign(d)
            return c, c.copy()
        lo, hi = np.empty(ys.shape[0]), np.empty(ys.shape[0])
        for i, y in enumerate(ys):
            subgradients = gauge.subdifferential(y)
            lo[i] = np.min(subgradients.generators[:, 0]) - subgradients.radius
            hi[i] = np.max(subgradients.generators[:, 0]) + subgradients.radius
        return lo, hi

    def rho_values(self, xs: np.ndarray, ys: np.ndarray, rho, gauge: Optional[GaugeFunction] = None,
                   open_ball: bool = False, ys_sub: Optional[np.ndarray] = None) -> DualValues:
        """inf ||x*|| over x* in D*F(x, y)(dg(y') + rho B*) per row, with y' = ``ys_sub`` or y."""
        gauge = gauge or self.gauge
        ys_sub = ys if ys_sub is None else ys_sub
        rho = np.broadcast_to(np.asarray(rho, dtype=float), (xs.shape[0],))
        if self.mapping.dim_y == 1:
            lo_c, hi_c = self.subgradient_interval(gauge, ys_sub)
            moduli = self.moduli(xs, ys)
            values, w = interval_min_norm(lo_c - rho, hi_c + rho, moduli.m_plus, moduli.m_minus, open_ball)
            return values, w[:, None], moduli.element(w)
        values = np.empty(xs.shape[0])
        ystars = np.zeros((xs.shape[0], self.mapping.dim_y))
        xstars = np.zeros((xs.shape[0], self.mapping.dim_x))
        for i in range(xs.shape[0]):
            subgradients = gauge.subdifferential(ys_sub[i])
            result = min_norm_coderivative(self.mapping, ProductPoint(xs[i], ys[i]), subgradients.generators,
                                           subgradients.radius + rho[i], self.tolerances.active_tol)
            values[i] = result.value
            if result.feasible:
                ystars[i], xstars[i] = result.ystar, result.xstar
        return values, ystars, xstars

    def approximate_table(self, xs: np.ndarray, ys: np.ndarray, rho, gauge: Optional[GaugeFunction] = None
                          ) -> np.ndarray:
        """Approximate (g, rho)-slope per row (rows) and ring level (columns).

        Level j takes the minimum over y' in {y, y +- delta_j e_i} with
        delta_j = min(slope_radius, ||y - ybar|| / 2) * 2**-j.
        """
        gauge = gauge or self.gauge
        t = self.space.y_space.norms(ys - self.mapping.ybar)
        base = np.minimum(self.sampling.slope_radius, 0.5 * t)
        center, _, _ = self.rho_values(xs, ys, rho, gauge)
        dim = self.mapping.dim_y
        directions = np.vstack([np.eye(dim), -np.eye(dim)])
        levels = self.sampling.nesting_levels + 1
        table = np.empty((xs.shape[0], levels))
        for j in range(levels):
            delta = base * 0.5 ** j
            best = center.copy()
            for direction in directions:
                shifted = ys + delta[:, None] * direction[None, :]
                values, _, _ = self.rho_values(xs, ys, rho, gauge, ys_sub=shifted)
                best = np.minimum(best, values)
            table[:, j] = best
        return table

    def _check_rho(self, rho: float) -> None:
        self.space._check_rho(rho)

    def _at_reference_fiber(self, p: ProductPoint) -> bool:
        return self.space.y_space.norm(p.y - self.mapping.ybar) == 0.0

    @staticmethod
    def _dual_witness(ystar: np.ndarray, xstar: np.ndarray) -> Dict[str, List[float]]:
        return {"xstar": np.asarray(xstar, dtype=float).tolist(), "ystar": np.asarray(ystar, dtype=float).tolist()}

    def _zero_at_ybar(self, p: ProductPoint, rho: float, label: str) -> SlopeEstimate:
        # g >= 0 = g(ybar) puts 0 in dg(ybar), and 0 lies in every coderivative image
        estimate = SlopeEstimate.exact(0.0, rho=rho, witness=p,
                                       dual_witness=self._dual_witness(np.zeros(self.mapping.dim_y),
                                                                       np.zeros(self.mapping.dim_x)))
        estimate.diagnostics.append(f"{label}: y = ybar, so y* = 0 is admissible")
        return estimate

    # subdifferential rho-slopes at a point

    def subdiff_rho_slope_f(self, f: LiftedFunction, p: ProductPoint, rho: float) -> SlopeEstimate:
        """inf ||x*|| over (x*, y*) in df(x, y) with ||y*|| < rho.

        df = N_gph F + {0} x dg is exact when g is differentiable away from
        ybar or when F and g are both convex.
        """
        if f.mapping is not self.mapping:
            raise InputError("the lifted function belongs to another mapping")
        self._check_rho(rho)
        f.require_finite(p)
        if not (f.gauge.smooth_away_from_ybar or (self.mapping.convex and f.gauge.convex)):
            raise UnsupportedStructureError(
                "df has no exact sum rule here: g is nonsmooth and F, g are not both convex"
            )
        if self._at_reference_fiber(p):
            return self._zero_at_ybar(p, rho, "subdifferential rho-slope of f")
        values, ystars, xstars = self.rho_values(p.x[None, :], p.y[None, :], rho, f.gauge, open_ball=True)
        return SlopeEstimate.exact(float(values[0]), rho=rho, witness=p,
                                   dual_witness=self._dual_witness(ystars[0], xstars[0]))

    def g_subdiff_rho_slope(self, p: ProductPoint, rho: float, approximate: bool = False,
                            gauge: Optional[GaugeFunction] = None) -> SlopeEstimate:
        """inf ||x*|| over x* in D*F(x, y)(dg(y) + rho B*); the approximate form
        takes a further liminf over y' -> y in dg(y')."""
        self._check_rho(rho)
        self.mapping.require_on_graph(p)
        gauge = gauge or self.gauge
        if self._at_reference_fiber(p):
            return self._zero_at_ybar(p, rho, "subdifferential (g, rho)-slope")
        xs, ys = p.x[None, :], p.y[None, :]
        values, ystars, xstars = self.rho_values(xs, ys, rho, gauge)
        witness = self._dual_witness(ystars[0], xstars[0])
        if not approximate:
            return SlopeEstimate.exact(float(values[0]), rho=rho, witness=p, dual_witness=witness)
        table = self.approximate_table(xs, ys, rho, gauge)[0]
        t = self.space.y_space.norm(p.y - self.mapping.ybar)
        base = min(self.sampling.slope_radius, 0.5 * t)
        trajectory = [(base * 0.5 ** j, float(v), 2 * self.mapping.dim_y + 1) for j, v in enumerate(table)]
        return SlopeEstimate.from_levels(table, rho=rho, witness=p, trajectory=trajectory)

    def phi_subdiff_rho_slope(self, p: ProductPoint, rho: float, approximate: bool = False) -> SlopeEstimate:
        """The phi-free subdifferential rho-slope, built on J(y - ybar).

        ``components`` carries phi'(||y - ybar||) times the slope at
        xi_phi(y) rho (``scaled``) and the (g, rho)-slope of g = phi(||y - ybar||)
        (``g_slope``); the two agree for every phi.
        """
        phi = self.gauge.phi
        if phi is None:
            raise InputError("the phi-family needs a gauge built from phi")
        self._check_rho(rho)
        self.mapping.require_on_graph(p)
        if self._at_reference_fiber(p):
            raise DomainError("subdifferential rho-slopes of the phi-family need y != ybar")
        xs, ys = p.x[None, :], p.y[None, :]
        t = self.space.y_space.norm(p.y - self.mapping.ybar)
        d = float(phi.derivative(t))
        if approximate:
            plain = self.approximate_table(xs, ys, rho, self.distance_gauge)[0]
            scaled = d * self.approximate_table(xs, ys, rho / d, self.distance_gauge)[0, -1]
            g_slope = self.approximate_table(xs, ys, rho, self.gauge)[0, -1]
            estimate = SlopeEstimate.from_levels(plain, rho=rho, witness=p)
        else:
            values, ystars, xstars = self.rho_values(xs, ys, rho, self.distance_gauge)
            scaled = d * float(self.rho_values(xs, ys, rho / d, self.distance_gauge)[0][0])
            g_slope = float(self.rho_values(xs, ys, rho, self.gauge)[0][0])
            estimate = SlopeEstimate.exact(float(values[0]), rho=rho, witness=p,
                                           dual_witness=self._dual_witness(ystars[0], xstars[0]))
        estimate.components.update({"scaled": float(scaled), "g_slope": float(g_slope), "phi_derivative": d})
        if np.isfinite(scaled) and np.isfinite(g_slope):
            gap = abs(scaled - g_slope)
            if gap > self.tolerances.identity_tol * max(1.0, abs(g_slope)):
                estimate.diagnostics.append(f"scaled and g-form slopes differ by {gap:.3e}")
                logger.warning(f"{self.mapping.name}: {estimate.diagnostics[-1]}")
        elif np.isfinite(scaled) != np.isfinite(g_slope):
            estimate.diagnostics.append("scaled and g-form slopes disagree on finiteness")
            logger.warning(f"{self.mapping.name}: {estimate.diagnostics[-1]}")
        return estimate

    # strict subdifferential slopes

    def family_values(self, xs: np.ndarray, ys: np.ndarray, rho: float, family: str,
                      xi_free: bool = False) -> DualValues:
        """Per-point subdifferential slope of one family, with the g-form y* and x*."""
        if family == "f":
            return self.rho_values(xs, ys, rho, self.gauge, open_ball=True)
        if family == "g":
            return self.rho_values(xs, ys, rho, self.gauge)
        d = self.gauge.phi.derivative(self.space.y_space.norms(ys - self.mapping.ybar))
        radius = rho if xi_free else rho / d
        values, ystars, xstars = self.rho_values(xs, ys, radius, self.distance_gauge)
        return d * values, d[:, None] * ystars, d[:, None] * xstars

    def _family_table(self, xs: np.ndarray, ys: np.ndarray, rho: float, family: str,
                      xi_free: bool) -> np.ndarray:
        if family == "g":
            return self.approximate_table(xs, ys, rho, self.gauge)
        d = self.gauge.phi.derivative(self.space.y_space.norms(ys - self.mapping.ybar))
        radius = rho if xi_free else rho / d
        return d[:, None] * self.approximate_table(xs, ys, radius, self.distance_gauge)

    def strict_subdiff_slope(self, gauge_kind: str = "g", variant: str = "plain",
                             xi_free: bool = False) -> SlopeEstimate:
        """Strict subdifferential slope: inf over the admissible points at each rho_k.

        ``variant`` is one of plain, approximate, modified and
        approximate_modified; modified variants take the max with
        g(y) / ||x - xbar||. ``xi_free`` drops the xi_phi(y) rescaling of rho in
        the phi-family.
        """
        if gauge_kind not in GAUGE_KINDS:
            raise InputError(f"unknown gauge kind '{gauge_kind}'")
        if variant not in SUBDIFF_VARIANTS:
            raise InputError(f"unknown strict subdifferential variant '{variant}'")
        if gauge_kind == "phi" and self.gauge.phi is None:
            raise InputError("the phi-family needs a gauge built from phi")
        if gauge_kind == "f" and variant.startswith("approximate"):
            raise InputError("the f-family has no approximate strict subdifferential slope")
        if xi_free and gauge_kind != "phi":
            raise InputError("xi_free applies to the phi-family only")
        approximate = variant.startswith("approximate")
        modified = variant.endswith("modified")
        guard = self.tolerances.division_guard

        def inner(xs, ys, rho):
            if approximate:
                table = self._family_table(xs, ys, rho, gauge_kind, xi_free)
                value, low, high = table[:, -1], np.min(table, axis=1), np.max(table, axis=1)
            else:
                value = self.family_values(xs, ys, rho, gauge_kind, xi_free)[0]
                low = high = value
            if modified:
                ratio = guarded_ratio(self.gauge.values(ys), self.space.x_space.norms(xs - self.mapping.xbar),
                                      guard, skip=0.0)
                value, low, high = np.maximum(value, ratio), np.maximum(low, ratio), np.maximum(high, ratio)
            return value, low, high

        form = "f" if gauge_kind == "f" else "g"
        label = f"{variant} strict subdifferential {gauge_kind}-slope" + (" (xi-free)" if xi_free else "")
        estimate = self.primal.over_schedule(inner, form, label, self.primal._metric(None))
        if estimate.witness is not None:
            w = estimate.witness
            _, ystars, xstars = self.family_values(w.x[None, :], w.y[None, :], self.schedule.final,
                                                   gauge_kind, xi_free)
            estimate.dual_witness = self._dual_witness(ystars[0], xstars[0])
        return estimate

    # limiting outer coderivatives

    def limiting_outer_coderivative(self, kind: str = "g", approximate: bool = False) -> "LimitingCoderivativeSample":
        """Limit pairs (y*, x*) of coderivative elements along admissible sequences.

        At each rho_k every admissible point contributes, per direction of y*,
        the smallest-norm element x*_k in D*F(x_k, y_k)(y*_k) with
        ||y*_k - v*_k|| <= rho_k, v*_k in dg(y_k). Candidates are clustered by
        the directions of y*_k and x*_k; a cluster that persists over the last
        ``persistence_levels`` levels emits a limit pair.
        """
        if kind not in ("g", "phi"):
            raise InputError(f"limiting coderivatives come in 'g' and 'phi' kinds, got '{kind}'")
        if kind == "phi":
            if self.gauge.phi is None:
                raise InputError("the phi kind needs a gauge built from phi")
            gauge = g_from_phi(self.gauge.phi, self.mapping.ybar, self.space.y_space)
        else:
            gauge = self.gauge
        search = _SequenceSearch(self, gauge, allow_zero_branch=kind == "g")
        sample = search.run()
        sample.kind = kind
        sample.approximate = approximate
        if approximate:
            sample.notes.append("the limiting subdifferential of g coincides with dg away from ybar "
                                "for the gauges in use")
        return sample


@dataclass
class CoderivativeTuple:
    """One term (x_k, y_k, x*_k, y*_k, v*_k) of an admissible sequence."""
    rho: float
    x: np.ndarray
    y: np.ndarray
    xstar: np.ndarray
    ystar: np.ndarray
    vstar: np.ndarray
    gap: float        # ||y*_k - v*_k||
    residual: float   # distance of (x*_k, -y*_k) from the normal cone

    def to_dict(self) -> Dict[str, Any]:
        return {
            "rho": float(self.rho),
            "x": self.x.tolist(),
            "y": self.y.tolist(),
            "xstar": self.xstar.tolist(),
            "ystar": self.ystar.tolist(),
            "vstar": self.vstar.tolist(),
            "gap": float(self.gap),
            "residual": float(self.residual),
        }


@dataclass
class LimitPair:
    ystar: np.ndarray
    xstar: np.ndarray
    norm: float
    sequence: List[CoderivativeTuple]

    def to_dict(self) -> Dict[str, Any]:
        return {
            "ystar": self.ystar.tolist(),
            "xstar": self.xstar.tolist(),
            "norm": encode_ext(self.norm),
            "persisted_levels": len(self.sequence),
            "sequence": [t.to_dict() for t in self.sequence],
        }


@dataclass
class LimitingCoderivativeSample:
    """Limit pairs of a limiting outer coderivative with y* on the unit sphere.

    The zero branch (y*_k = 0 for all k) is kept apart from the sphere image;
    ``inf_norm_with_zero_branch`` folds it back in.
    """
    pairs: List[LimitPair]
    inf_norm: SlopeEstimate
    inf_norm_with_zero_branch: SlopeEstimate
    zero_branch: bool
    kernel_contains_zero: bool
    kind: str = "g"
    approximate: bool = False
    diagnostics: List[str] = field(default_factory=list)
    notes: List[str] = field(default_factory=list)

    @property
    def is_empty(self) -> bool:
        return not self.pairs and not self.zero_branch

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "kind": self.kind,
            "approximate": self.approximate,
            "pairs": [pair.to_dict() for pair in self.pairs],
            "inf_norm": self.inf_norm.to_dict(),
            "inf_norm_with_zero_branch": self.inf_norm_with_zero_branch.to_dict(),
            "zero_branch": self.zero_branch,
            "kernel_contains_zero": self.kernel_contains_zero,
        }
        if self.diagnostics:
            data["diagnostics"] = list(self.diagnostics)
        if self.notes:
            data["notes"] = list(self.notes)
        return data


class _SequenceSearch:
    """Clusters coderivative candidates level by level along the rho schedule."""

    def __init__(self, estimator: DualSlopeEstimator, gauge: GaugeFunction, allow_zero_branch: bool):
        self.estimator = estimator
        self.gauge = gauge
        self.allow_zero_branch = allow_zero_branch
        self.mapping = estimator.mapping
        self.space = estimator.space
        self.tolerances = estimator.tolerances
        self.y_reps: List[np.ndarray] = []
        self.x_reps: List[np.ndarray] = []

    def _cluster(self, reps: List[np.ndarray], v: np.ndarray) -> int:
        norm = float(np.linalg.norm(v))
        if norm == 0.0:
            return -1
        u = v / norm
        for i, rep in enumerate(reps):
            if np.linalg.norm(u - rep) <= self.tolerances.angular_tol:
                return i
        reps.append(u)
        return len(reps) - 1

    def _ordered(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        """Admissible points nearest to the reference point first, ties lexicographic."""
        dist = np.maximum(self.space.x_space.norms(xs - self.mapping.xbar),
                          self.space.y_space.norms(ys - self.mapping.ybar))
        keys = [dist] + [xs[:, j] for j in range(xs.shape[1])] + [ys[:, j] for j in range(ys.shape[1])]
        return np.lexsort(keys[::-1])

    def _candidates(self, xs: np.ndarray, ys: np.ndarray, rho: float):
        """(index, y*, x*, v*) per candidate; y* = 0 marks the zero branch."""
        out = []
        if self.mapping.dim_y == 1:
            lo_c, hi_c = self.estimator.subgradient_interval(self.gauge, ys)
            lo, hi = lo_c - rho, hi_c + rho
            moduli = self.estimator.moduli(xs, ys)
            small = rho * rho
            for i in range(xs.shape[0]):
                if hi[i] > 0 and np.isfinite(moduli.m_plus[i]):
                    w = lo[i] if lo[i] > 0 else min(hi[i], small)
                    out.append((i, np.array([w]), moduli.u_plus[i] * w, np.clip([w], lo_c[i], hi_c[i])))
                if lo[i] < 0 and np.isfinite(moduli.m_minus[i]):
                    w = hi[i] if hi[i] < 0 else max(lo[i], -small)
                    out.append((i, np.array([w]), moduli.u_minus[i] * (-w), np.clip([w], lo_c[i], hi_c[i])))
                if self.allow_zero_branch and lo_c[i] - rho <= 0 <= hi_c[i] + rho:
                    out.append((i, np.zeros(1), np.zeros(self.mapping.dim_x), np.clip([0.0], lo_c[i], hi_c[i])))
            return out
        for i in range(xs.shape[0]):
            p = ProductPoint(xs[i], ys[i])
            subgradients = self.gauge.subdifferential(ys[i])
            result = min_norm_coderivative(self.mapping, p, subgradients.generators, subgradients.radius + rho,
                                           self.tolerances.active_tol)
            if not result.feasible:
                continue
            nearest = subgradients.generators[np.argmin(
                self.space.y_space.dual_norms(subgradients.generators - result.ystar))]
            if not np.any(result.ystar):
                if self.allow_zero_branch:
                    out.append((i, result.ystar, np.zeros(self.mapping.dim_x), nearest))
                continue
            out.append((i, result.ystar, result.xstar, nearest))
        return out

    def run(self) -> LimitingCoderivativeSample:
        primal = self.estimator.primal
        sample = primal.window_sample()
        rhos = self.estimator.schedule.rhos
        # best[key][level] = (norm, tuple)
        best: Dict[Tuple[int, int], Dict[int, Tuple[float, CoderivativeTuple]]] = {}
        zero_levels: Dict[int, CoderivativeTuple] = {}
        x_norms = self.space.x_space.dual_norms
        for level, rho in enumerate(rhos):
            mask = primal.admissible_mask(rho, "g", sample)
            xs, ys = sample.xs[mask], sample.ys[mask]
            if xs.shape[0] == 0:
                continue
            order = self._ordered(xs, ys)
            xs, ys = xs[order], ys[order]
            for i, ystar, xstar, vstar in self._candidates(xs, ys, float(rho)):
                term = CoderivativeTuple(
                    rho=float(rho), x=xs[i], y=ys[i], xstar=np.asarray(xstar, dtype=float),
                    ystar=np.asarray(ystar, dtype=float), vstar=np.asarray(vstar, dtype=float),
                    gap=float(self.space.y_space.dual_norms((np.asarray(ystar) - np.asarray(vstar))[None, :])[0]),
                    residual=0.0,
                )
                norm = float(x_norms(term.xstar[None, :])[0])
                if not np.any(term.ystar):
                    if level not in zero_levels:
                        zero_levels[level] = term
                    continue
                key = (self._cluster(self.y_reps, term.ystar), self._cluster(self.x_reps, term.xstar))
                slot = best.setdefault(key, {})
                if level not in slot or norm < slot[level][0]:
                    slot[level] = (norm, term)

        needed = min(self.tolerances.persistence_levels, rhos.size)
        final = rhos.size - 1

        def persisted(levels) -> int:
            run = 0
            for level in range(final, -1, -1):
                if level not in levels:
                    break
                run += 1
            return run

        pairs: List[LimitPair] = []
        for key in sorted(best):
            slot = best[key]
            run = persisted(slot)
            if run < needed:
                continue
            sequence = [slot[level][1] for level in range(final - run + 1, final + 1)]
            for term in sequence:
                term.residual = coderivative_residual(self.mapping, ProductPoint(term.x, term.y),
                                                      term.xstar, term.ystar, self.tolerances.active_tol)
            last = sequence[-1]
            unit_y = last.ystar / self.space.y_space.dual_norm(last.ystar)
            pairs.append(LimitPair(ystar=unit_y, xstar=last.xstar.copy(), norm=slot[final][0], sequence=sequence))
        pairs.sort(key=lambda pair: (pair.norm, tuple(pair.ystar.tolist()), tuple(pair.xstar.tolist())))

        zero_branch = self.allow_zero_branch and persisted(zero_levels) >= needed
        diagnostics: List[str] = []
        if not pairs and not zero_branch:
            diagnostics.append("no admissible sequences found: the coderivative sample is empty")
            logger.warning(f"{self.mapping.name}: {diagnostics[-1]}")

        inf_norm = self._inf_norm(best, pairs, needed, final)
        with_zero = inf_norm
        if zero_branch:
            with_zero = SlopeEstimate.exact(0.0, schedule=rhos.tolist(), rho=float(rhos[-1]))
        kernel = any(pair.norm <= self.tolerances.positivity_tol for pair in pairs)
        return LimitingCoderivativeSample(
            pairs=pairs,
            inf_norm=inf_norm,
            inf_norm_with_zero_branch=with_zero,
            zero_branch=zero_branch,
            kernel_contains_zero=kernel,
            diagnostics=diagnostics,
        )

    def _inf_norm(self, best, pairs: List[LimitPair], needed: int, final: int) -> SlopeEstimate:
        rhos = self.estimator.schedule.rhos
        if not pairs:
            return SlopeEstimate.exact(INF, rho=float(rhos[-1]), schedule=rhos.tolist())
        kept = [key for key in best if len(best[key]) and all(
            level in best[key] for level in range(final - needed + 1, final + 1))]
        levels, trajectory = [], []
        for level in range(final - needed + 1, final + 1):
            value = min(best[key][level][0] for key in kept)
            levels.append(value)
            trajectory.append((float(rhos[level]), value, len(kept)))
        witness_pair = pairs[0]
        last = witness_pair.sequence[-1]
        return SlopeEstimate.from_levels(
            levels, rho=float(rhos[-1]), schedule=rhos.tolist(), trajectory=trajectory,
            witness=ProductPoint(last.x, last.y),
            dual_witness={"xstar": witness_pair.xstar.tolist(), "ystar": witness_pair.ystar.tolist()},
        )
