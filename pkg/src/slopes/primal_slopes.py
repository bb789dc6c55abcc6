"""Primal slopes, strict slopes and the error bound / subregularity moduli.

Every quantity is evaluated on the graph sample of the mapping. Local slopes
of smooth and convex graphs use a punctured stencil at nested radii; sampled
graphs use all samples within ``slope_radius``. Strict slopes and moduli are
realized along the rho schedule and report the value at its final level.
"""
from __future__ import annotations

import logging
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from src.geometry.spaces import ProductPoint
from src.mappings.gauges import GaugeFunction, ModulationFunction, g_from_phi
from src.mappings.lifted_function import LiftedFunction
from src.mappings.set_valued_map import GraphSample, SetValuedMap, lexicographic_first
from src.slopes.slope_estimate import INF, SlopeEstimate, guarded_ratio, positive_part
from src.slopes.slope_settings import RhoSchedule, SamplingSettings, ToleranceSettings
from src.utils.errors import DomainError, InputError

logger = logging.getLogger(__name__)

CHUNK = 256

STRICT_VARIANTS = ("strict", "modified", "uniform")
FAMILIES = ("f", "g", "phi")
MODULUS_KINDS = ("f", "g", "phi")

# (value, lower, upper) per admissible point
InnerValues = Tuple[np.ndarray, np.ndarray, np.ndarray]


class PrimalSlopeEstimator:
    """Slopes of F (equivalently of f = g + i_gph F) around the reference point."""

    def __init__(self, mapping: SetValuedMap, gauge: GaugeFunction,
                 sampling: Optional[SamplingSettings] = None,
                 schedule: Optional[RhoSchedule] = None,
                 tolerances: Optional[ToleranceSettings] = None):
        self.mapping = mapping
        self.gauge = gauge
        self.sampling = sampling or SamplingSettings()
        self.schedule = schedule or RhoSchedule()
        self.tolerances = tolerances or ToleranceSettings()
        self.space = mapping.space
        self._sample: Optional[GraphSample] = None
        self._competitors: Optional[Tuple[np.ndarray, np.ndarray]] = None
        self._inverse_dist: Dict[Tuple, float] = {}
        self._geometry: Optional[Tuple[np.ndarray, ...]] = None
        self._distance_gauge = g_from_phi(ModulationFunction.identity(), mapping.ybar, self.space.y_space)

    # shared samples

    @property
    def is_sampled(self) -> bool:
        return self.mapping.variant == "sampled"

    def _metric(self, metric: Optional[str]) -> str:
        return metric or self.sampling.metric

    def window_sample(self) -> GraphSample:
        """Graph points around the reference point; admissible sets are drawn from it."""
        if self._sample is None:
            if self.is_sampled:
                radius = INF if self.sampling.window is None else self.sampling.window
            else:
                radius = self.sampling.window if self.sampling.window is not None else self.sampling.radius
            self._sample = self.mapping.graph_sample(self.mapping.reference, radius,
                                                     self.sampling.resolution,
                                                     self.sampling.fiber_resolution)
            for note in self._sample.diagnostics:
                logger.warning(f"{self.mapping.name}: {note}")
        return self._sample

    def competitors(self) -> Tuple[np.ndarray, np.ndarray]:
        """Nonlocal competitor set: the window sample plus (u, ybar), u in F^-1(ybar)."""
        if self._competitors is None:
            sample = self.window_sample()
            xs, ys = sample.xs, sample.ys
            if not self.is_sampled:
                window = self.sampling.inverse_window or self.sampling.window or self.sampling.radius
                inverse = self.mapping.inverse_image_points(self.mapping.ybar, window)
                xs = np.vstack([xs, inverse])
                ys = np.vstack([ys, np.repeat(self.mapping.ybar[None, :], inverse.shape[0], axis=0)])
            self._competitors = (xs, ys)
        return self._competitors

    def inverse_distances(self, xs: np.ndarray) -> np.ndarray:
        """d(x, F^-1(ybar)) for rows of xs, memoized per row."""
        out = np.empty(xs.shape[0])
        missing = []
        for i, x in enumerate(xs):
            key = tuple(x.tolist())
            if key in self._inverse_dist:
                out[i] = self._inverse_dist[key]
            else:
                missing.append(i)
        if missing:
            window = self.sampling.inverse_window
            if window is None and not self.is_sampled:
                window = self.mapping.default_inverse_window(self.window_sample().xs)
            dists = self.mapping.dist_to_inverse_image_many(xs[missing], window=window)
            for i, d in zip(missing, dists):
                self._inverse_dist[tuple(xs[i].tolist())] = d
                out[i] = d
        return out

    def _sampling_info(self, metric: str) -> Dict:
        return {
            "radius": float(self.sampling.radius),
            "resolution": int(self.sampling.resolution),
            "slope_radius": float(self.sampling.slope_radius),
            "metric": metric,
        }

    # local slopes

    def local_radii(self) -> np.ndarray:
        if self.is_sampled:
            return np.array([self.sampling.slope_radius])
        return self.sampling.stencil_radii

    def _local_level(self, xs: np.ndarray, ys: np.ndarray, radius: float, rho: float,
                     gauge: GaugeFunction, metric: str):
        """Per-point max decrease ratio against the competitors at one radius."""
        qx, qy, mask = self.mapping.local_neighbors(xs, ys, radius, self.sampling.stencil_points)
        n, k = mask.shape
        gp = gauge.values(ys)
        gq = gauge.values(qy.reshape(n * k, -1)).reshape(n, k)
        num = positive_part(gp[:, None] - gq)
        den = self.space.rho_dists(xs[:, None, :], ys[:, None, :], qx, qy, rho, metric)
        ratio = guarded_ratio(num, den, self.tolerances.division_guard, skip=0.0)
        ratio = np.where(mask, ratio, 0.0)
        return ratio, qx, qy, mask

    def local_table(self, xs: np.ndarray, ys: np.ndarray, rho: float, gauge: Optional[GaugeFunction] = None,
                    metric: Optional[str] = None) -> np.ndarray:
        """Local slope per point (rows) and stencil level (columns)."""
        gauge = gauge or self.gauge
        metric = self._metric(metric)
        radii = self.local_radii()
        table = np.zeros((xs.shape[0], radii.size))
        for start in range(0, xs.shape[0], CHUNK):
            part = slice(start, start + CHUNK)
            for j, r in enumerate(radii):
                ratio, _, _, _ = self._local_level(xs[part], ys[part], r, rho, gauge, metric)
                table[part, j] = np.max(ratio, axis=1, initial=0.0)
        return table

    def local_slope(self, p: ProductPoint, rho: float, gauge: Optional[GaugeFunction] = None,
                    metric: Optional[str] = None) -> SlopeEstimate:
        """limsup of [g(y) - g(v)]_+ / d_rho((u, v), (x, y)) over graph points (u, v) -> (x, y)."""
        self.space._check_rho(rho)
        self.mapping.require_on_graph(p)
        gauge = gauge or self.gauge
        metric = self._metric(metric)
        xs, ys = p.x[None, :], p.y[None, :]
        radii = self.local_radii()
        levels, trajectory = [], []
        witness = None
        for r in radii:
            ratio, qx, qy, mask = self._local_level(xs, ys, r, rho, gauge, metric)
            best = float(np.max(ratio[0], initial=0.0))
            levels.append(best)
            trajectory.append((float(r), best, int(mask[0].sum())))
            if best > 0:
                hits = np.flatnonzero(ratio[0] == best)
                rows = np.hstack([qx[0, hits], qy[0, hits]])
                i = hits[lexicographic_first(rows)]
                witness = ProductPoint(qx[0, i], qy[0, i])
            else:
                witness = None
        return SlopeEstimate.from_levels(
            levels, rho=rho, sampling=self._sampling_info(metric), witness=witness, trajectory=trajectory,
        )

    def local_rho_slope_f(self, f: LiftedFunction, p: ProductPoint, rho: float,
                          metric: Optional[str] = None) -> SlopeEstimate:
        """Local slope of the lifted function f at p."""
        self._check_lifted(f)
        f.require_finite(p)
        return self.local_slope(p, rho, gauge=f.gauge, metric=metric)

    def rho_slope_F(self, p: ProductPoint, rho: float, metric: Optional[str] = None) -> SlopeEstimate:
        """Local slope with numerator [d(y, ybar) - d(v, ybar)]_+."""
        return self.local_slope(p, rho, gauge=self._distance_gauge, metric=metric)

    def g_rho_slope_F(self, p: ProductPoint, rho: float, metric: Optional[str] = None) -> SlopeEstimate:
        """(g, rho)-slope; for g = phi(||y - ybar||) also the factorized phi'(d) * rho-slope."""
        if self.gauge.phi is not None and self.space.y_space.norm(p.y - self.mapping.ybar) == 0.0:
            raise DomainError("phi' is only evaluated away from ybar")
        estimate = self.local_slope(p, rho, metric=metric)
        if self.gauge.phi is not None:
            t = self.space.y_space.norm(p.y - self.mapping.ybar)
            plain = self.rho_slope_F(p, rho, metric=metric)
            estimate.components["factorized"] = float(self.gauge.phi.derivative(t) * plain.value)
            estimate.components["rho_slope"] = plain.value
        return estimate

    def _check_lifted(self, f: LiftedFunction) -> None:
        if f.mapping is not self.mapping:
            raise InputError("the lifted function belongs to another mapping")

    # nonlocal slopes

    def nonlocal_values(self, xs: np.ndarray, ys: np.ndarray, rho: float,
                        gauge: Optional[GaugeFunction] = None, metric: Optional[str] = None) -> np.ndarray:
        """sup over all competitors (u, v) of [g(y) - g(v)]_+ / d_rho, per point."""
        gauge = gauge or self.gauge
        metric = self._metric(metric)
        cx, cy = self.competitors()
        gc = gauge.values(cy)
        gp = gauge.values(ys)
        out = np.zeros(xs.shape[0])
        for start in range(0, xs.shape[0], CHUNK):
            part = slice(start, start + CHUNK)
            num = positive_part(gp[part, None] - gc[None, :])
            den = self.space.rho_dists(xs[part, None, :], ys[part, None, :], cx[None, :, :], cy[None, :, :],
                                       rho, metric)
            ratio = guarded_ratio(num, den, self.tolerances.division_guard, skip=0.0)
            out[part] = np.max(ratio, axis=1, initial=0.0)
        if not self.is_sampled and xs.shape[0]:
            out = np.maximum(out, np.max(self.local_table(xs, ys, rho, gauge, metric), axis=1))
        return out

    def nonlocal_slope(self, p: ProductPoint, rho: float, gauge: Optional[GaugeFunction] = None,
                       metric: Optional[str] = None) -> SlopeEstimate:
        """Nonlocal (g, rho)-slope at a graph point; 0 without competitors."""
        self.space._check_rho(rho)
        self.mapping.require_on_graph(p)
        gauge = gauge or self.gauge
        metric = self._metric(metric)
        value = float(self.nonlocal_values(p.x[None, :], p.y[None, :], rho, gauge, metric)[0])
        witness = None
        if value > 0:
            cx, cy = self.competitors()
            num = positive_part(gauge.value(p.y) - gauge.values(cy))
            den = self.space.rho_dists(p.x[None, :], p.y[None, :], cx, cy, rho, metric)
            ratio = guarded_ratio(num, den, self.tolerances.division_guard, skip=0.0)
            hits = np.flatnonzero(ratio == value)
            if hits.size:
                i = hits[lexicographic_first(np.hstack([cx[hits], cy[hits]]))]
                witness = ProductPoint(cx[i], cy[i])
        return SlopeEstimate.exact(value, rho=rho, sampling=self._sampling_info(metric), witness=witness)

    def nonlocal_rho_slope(self, f: LiftedFunction, p: ProductPoint, rho: float,
                           metric: Optional[str] = None) -> SlopeEstimate:
        self._check_lifted(f)
        f.require_finite(p)
        return self.nonlocal_slope(p, rho, gauge=f.gauge, metric=metric)

    # admissible sets

    def admissible_mask(self, rho: float, form: str = "g", sample: Optional[GraphSample] = None) -> np.ndarray:
        """Sample points admissible at level rho.

        ``form="g"``: d(x, xbar) < rho, d(y, ybar) < rho, x not in F^-1(ybar).
        ``form="f"``: d(x, xbar) < rho, 0 < g(y) < rho.
        ``form="x"``: d(x, xbar) < rho, x not in F^-1(ybar).
        ``form="positive"``: d(x, xbar) < rho, g(y) > 0.
        """
        if sample is None or sample is self.window_sample():
            dx, dy, outside, gv = self._sample_geometry()
        else:
            dx = self.space.x_space.norms(sample.xs - self.mapping.xbar)
            dy = self.space.y_space.norms(sample.ys - self.mapping.ybar)
            outside = self.mapping.distance_to_target(sample.xs) > self.tolerances.graph_tol
            gv = self.gauge.values(sample.ys)
        near = dx < rho
        if form == "x":
            return near & outside
        if form == "g":
            return near & (dy < rho) & outside
        if form == "f":
            return near & (gv > 0) & (gv < rho)
        if form == "positive":
            return near & (gv > 0)
        raise InputError(f"unknown admissible form '{form}'")

    def _sample_geometry(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
        """d(x, xbar), d(y, ybar), x-outside-F^-1(ybar) and g(y) over the window sample."""
        if self._geometry is None:
            sample = self.window_sample()
            self._geometry = (
                self.space.x_space.norms(sample.xs - self.mapping.xbar),
                self.space.y_space.norms(sample.ys - self.mapping.ybar),
                self.mapping.distance_to_target(sample.xs) > self.tolerances.graph_tol,
                self.gauge.values(sample.ys),
            )
        return self._geometry

    def over_schedule(self, inner: Callable[[np.ndarray, np.ndarray, float], InnerValues], form: str,
                       label: str, metric: str) -> SlopeEstimate:
        """inf of ``inner`` over the admissible set at every rho_k."""
        sample = self.window_sample()
        trajectory: List[tuple] = []
        values, lowers, uppers = [], [], []
        witness = None
        diagnostics: List[str] = []
        for rho in self.schedule.rhos:
            mask = self.admissible_mask(rho, form, sample)
            count = int(mask.sum())
            if count == 0:
                v = lo = hi = INF
                witness = None
            else:
                xs, ys = sample.xs[mask], sample.ys[mask]
                vals, low, high = inner(xs, ys, rho)
                v, lo, hi = float(np.min(vals)), float(np.min(low)), float(np.min(high))
                hits = np.flatnonzero(vals == v)
                i = hits[lexicographic_first(np.hstack([xs[hits], ys[hits]]))]
                witness = ProductPoint(xs[i], ys[i])
            values.append(v)
            lowers.append(lo)
            uppers.append(hi)
            trajectory.append((float(rho), v, count))
        if trajectory[-1][2] == 0:
            diagnostics.append(f"{label}: empty admissible set at rho = {self.schedule.final:g}; inf over the empty set is +inf")
            logger.warning(f"{self.mapping.name}: {diagnostics[-1]}")
        return SlopeEstimate(
            value=values[-1],
            lower=min(lowers),
            upper=max(uppers),
            rho=self.schedule.final,
            schedule=self.schedule.rhos.tolist(),
            sampling=self._sampling_info(metric),
            witness=witness,
            trajectory=trajectory,
            diagnostics=diagnostics,
        )

    # strict slopes

    def strict_inner(self, variant: str, family: str, metric: Optional[str] = None
                     ) -> Callable[[np.ndarray, np.ndarray, float], InnerValues]:
        """The quantity whose infimum over admissible points defines a strict slope."""
        if variant not in STRICT_VARIANTS:
            raise InputError(f"unknown strict slope variant '{variant}'")
        if family not in FAMILIES:
            raise InputError(f"unknown slope family '{family}'")
        if family == "phi" and self.gauge.phi is None:
            raise InputError("the phi family needs a gauge built from phi")
        metric = self._metric(metric)

        def inner(xs, ys, rho):
            if variant == "uniform":
                v = self.nonlocal_values(xs, ys, rho, self.gauge, metric)
                return v, v, v
            if family == "phi":
                t = self.space.y_space.norms(ys - self.mapping.ybar)
                scale = self.gauge.phi.derivative(t)
                table = scale[:, None] * self.local_table(xs, ys, rho, self._distance_gauge, metric)
            else:
                table = self.local_table(xs, ys, rho, self.gauge, metric)
            value, low, high = table[:, -1], np.min(table, axis=1), np.max(table, axis=1)
            if variant == "modified":
                ratio = guarded_ratio(self.gauge.values(ys), self.space.x_space.norms(xs - self.mapping.xbar),
                                      self.tolerances.division_guard, skip=0.0)
                value, low, high = np.maximum(value, ratio), np.maximum(low, ratio), np.maximum(high, ratio)
            return value, low, high

        return inner

    def strict_slope(self, variant: str = "strict", family: str = "g",
                     metric: Optional[str] = None) -> SlopeEstimate:
        """Strict, modified strict or uniform strict slope of the f-, g- or phi-family."""
        metric = self._metric(metric)
        inner = self.strict_inner(variant, family, metric)
        form = "f" if family == "f" else "g"
        return self.over_schedule(inner, form, f"{variant} {family}-slope", metric)

    # moduli

    def error_bound_modulus(self, f: Optional[LiftedFunction] = None) -> SlopeEstimate:
        """liminf of f(x, y) / d(x, S(f)) over x -> xbar with f(x, y) > 0."""
        if f is not None:
            self._check_lifted(f)
        gauge = f.gauge if f is not None else self.gauge
        guard = self.tolerances.division_guard

        def inner(xs, ys, rho):
            ratio = guarded_ratio(gauge.values(ys), self.inverse_distances(xs), guard, skip=INF)
            return ratio, ratio, ratio

        return self.over_schedule(inner, "positive", "error bound modulus", self._metric(None))

    def subregularity_modulus(self, kind: str = "g", phi: Optional[ModulationFunction] = None) -> SlopeEstimate:
        """liminf over x -> xbar, x not in F^-1(ybar), of gauge(y) / d(x, F^-1(ybar)).

        ``f`` uses d(ybar, F(x)), ``phi`` uses phi(d(ybar, F(x))) and ``g``
        takes g(y) over the sampled y in F(x).
        """
        if kind not in MODULUS_KINDS:
            raise InputError(f"unknown modulus kind '{kind}'")
        if kind == "phi":
            phi = phi or self.gauge.phi
            if phi is None:
                raise InputError("the phi modulus needs a modulation function")
        guard = self.tolerances.division_guard

        def inner(xs, ys, rho):
            if kind == "g":
                num = self.gauge.values(ys)
            else:
                num = self.mapping.distance_to_target(xs)
                if kind == "phi":
                    num = phi.value(num)
            ratio = guarded_ratio(num, self.inverse_distances(xs), guard, skip=INF)
            return ratio, ratio, ratio

        return self.over_schedule(inner, "x", f"{kind}-subregularity modulus", self._metric(None))

    def outer_growth_rate(self) -> SlopeEstimate:
        """liminf of g(y) / d(x, xbar) over x -> xbar, x not in F^-1(ybar), y in F(x)."""
        guard = self.tolerances.division_guard

        def inner(xs, ys, rho):
            ratio = guarded_ratio(self.gauge.values(ys), self.space.x_space.norms(xs - self.mapping.xbar),
                                  guard, skip=INF)
            return ratio, ratio, ratio

        return self.over_schedule(inner, "x", "outer growth rate", self._metric(None))
