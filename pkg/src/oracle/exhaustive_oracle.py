"""Brute-force evaluation of slopes and moduli on finite sampled graphs.

Every quantity is computed by plain enumeration over points and pairs of the
sample, one pair at a time, without the vectorized machinery of the
estimators. A limsup or liminf over a finite set is the max or min over its
admissible subset; the local slope's competitors are the samples within
``slope_radius`` of the point (the point itself excluded).
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.geometry.spaces import ProductPoint
from src.mappings.gauges import GaugeFunction, ModulationFunction
from src.mappings.problem_spec import ProblemSpec
from src.mappings.set_valued_map import SampledGraphMap
from src.slopes.slope_estimate import INF, encode_ext
from src.slopes.slope_settings import RhoSchedule, SamplingSettings, ToleranceSettings
from src.utils.errors import InputError, UnsupportedStructureError

logger = logging.getLogger(__name__)

POINTWISE_QUANTITIES = ("local_slope", "rho_slope", "nonlocal_slope")
LIMIT_QUANTITIES = (
    "strict_slope",
    "modified_strict_slope",
    "uniform_strict_slope",
    "error_bound_modulus",
    "subregularity_modulus",
    "outer_growth_rate",
)
QUANTITIES = POINTWISE_QUANTITIES + LIMIT_QUANTITIES

# condition letter -> quantity, per corollary, for the conditions with a primal meaning
PRIMAL_CONDITIONS: Dict[str, Dict[str, str]] = {
    "cor1": {"a": "subregularity_modulus", "b": "uniform_strict_slope", "c": "outer_growth_rate",
             "d": "strict_slope", "e": "modified_strict_slope"},
    "cor2": {"a": "uniform_strict_slope", "b": "outer_growth_rate", "c": "strict_slope",
             "d": "modified_strict_slope"},
}
PRIMAL_CONDITIONS["cor3"] = dict(PRIMAL_CONDITIONS["cor1"])
PRIMAL_CONDITIONS["cor4"] = dict(PRIMAL_CONDITIONS["cor2"])

PHI_COROLLARIES = ("cor3", "cor4")
QUALITATIVE_COROLLARIES = ("cor2", "cor4")
# (source, target) of the quantitative arrows that compare with the uniform strict slope
LIMIT_ARROWS = (("e", "b"), ("a", "b"))


@dataclass(frozen=True)
class OracleParams:
    """Everything an enumeration needs besides the graph and the gauge.

    ``rho`` parametrizes the pointwise slopes; the limit quantities are
    evaluated at ``final_rho``, the last level of the rho schedule.
    """
    rho: float = 1.0
    point: Optional[ProductPoint] = None
    final_rho: float = RhoSchedule().final
    slope_radius: float = SamplingSettings().slope_radius
    family: str = "g"
    kind: str = "g"
    metric: str = "max"
    division_guard: float = ToleranceSettings().division_guard
    graph_tol: float = ToleranceSettings().graph_tol

    @classmethod
    def from_settings(cls, sampling: SamplingSettings, schedule: RhoSchedule,
                      tolerances: ToleranceSettings, **overrides) -> "OracleParams":
        values = dict(
            final_rho=schedule.final,
            slope_radius=float(sampling.slope_radius),
            metric=sampling.metric,
            division_guard=float(tolerances.division_guard),
            graph_tol=float(tolerances.graph_tol),
        )
        values.update(overrides)
        return cls(**values)


@dataclass
class ExhaustiveResult:
    """Exact value of a quantity over a finite sample.

    ``attaining`` is the lexicographically first element attaining the
    value: a competitor for pointwise slopes, an admissible point for limit
    quantities. ``enumerated`` counts the competitors or admissible points.
    """
    quantity: str
    value: float
    attaining: Optional[ProductPoint]
    enumerated: int

    def to_dict(self) -> Dict:
        return {
            "quantity": self.quantity,
            "value": encode_ext(self.value),
            "attaining": self.attaining.to_dict() if self.attaining is not None else None,
            "enumerated": self.enumerated,
        }


@dataclass
class ImplicationTruth:
    """Truth of both ends of a corollary edge at one gamma."""
    edge: str
    gamma: float
    source: bool
    target: bool
    source_value: float
    target_value: float
    vacuous: bool

    @property
    def consistent(self) -> bool:
        return (not self.source) or self.target

    def to_dict(self) -> Dict:
        return {
            "edge": self.edge,
            "gamma": self.gamma,
            "source": self.source,
            "target": self.target,
            "consistent": self.consistent,
            "vacuous": self.vacuous,
        }


Instance = Union[ProblemSpec, SampledGraphMap]


class _SampleTables:
    """Per-point and pair distances of one sample, shared by every family."""

    def __init__(self, mapping: SampledGraphMap, gauge: GaugeFunction, graph_tol: float):
        self.mapping = mapping
        self.gauge = gauge
        self.graph_tol = graph_tol
        self.x_space = mapping.space.x_space
        self.y_space = mapping.space.y_space
        self.points = [(mapping.xs[i], mapping.ys[i]) for i in range(mapping.size)]

    @cached_property
    def dx(self) -> List[List[float]]:
        return [[self.x_space.norm(x - u) for u, _ in self.points] for x, _ in self.points]

    @cached_property
    def dy(self) -> List[List[float]]:
        return [[self.y_space.norm(y - v) for _, v in self.points] for _, y in self.points]

    @cached_property
    def gs(self) -> List[float]:
        return [self.gauge.value(y) for _, y in self.points]

    @cached_property
    def ts(self) -> List[float]:
        """d(y, ybar) per point."""
        return [self.y_space.norm(y - self.mapping.ybar) for _, y in self.points]

    @cached_property
    def xn(self) -> List[float]:
        """d(x, xbar) per point."""
        return [self.x_space.norm(x - self.mapping.xbar) for x, _ in self.points]

    @cached_property
    def fibers(self) -> List[float]:
        """d(ybar, F(x)) per point: the nearest sampled value over x."""
        ts = self.ts
        return [min(ts[j] for j, (u, _) in enumerate(self.points) if np.array_equal(u, x))
                for x, _ in self.points]

    @cached_property
    def inverse(self) -> Optional[List[float]]:
        """d(x, F^-1(ybar)) per point, None when the finite inverse image is empty."""
        members = [j for j, t in enumerate(self.ts) if t <= self.graph_tol]
        if not members:
            return None
        return [min(row[j] for j in members) for row in self.dx]


class _Enumerator:
    """Scalar, pair-by-pair evaluation over one sampled graph."""

    def __init__(self, mapping: SampledGraphMap, gauge: GaugeFunction, params: OracleParams,
                 tables: Optional[_SampleTables] = None):
        self.mapping = mapping
        self.gauge = gauge
        self.params = params
        self.tables = tables or _SampleTables(mapping, gauge, params.graph_tol)
        self.x_space = mapping.space.x_space
        self.y_space = mapping.space.y_space
        self.points = self.tables.points
        self.xbar = mapping.xbar
        self.ybar = mapping.ybar

    # scalar building blocks

    def g(self, y: np.ndarray) -> float:
        return self.gauge.value(y)

    def dist_gauge(self, y: np.ndarray) -> float:
        return self.y_space.norm(y - self.ybar)

    def metric(self, dx: float, dy: float, rho: float) -> float:
        if self.params.metric == "max":
            return max(dx, rho * dy)
        if self.params.metric == "sum":
            return dx + rho * dy
        raise InputError(f"unknown product metric '{self.params.metric}'")

    def d_rho(self, x, y, u, v, rho: float) -> float:
        return self.metric(self.x_space.norm(x - u), self.y_space.norm(y - v), rho)

    def ratio(self, num: float, den: float, skip: float) -> float:
        if den < self.params.division_guard:
            return INF if num > 0 else skip
        return num / den

    def inverse_at(self, i: int) -> float:
        inverse = self.tables.inverse
        if inverse is None:
            raise InputError(f"the inverse image of {self.mapping.name} at the target is empty")
        return inverse[i]

    # pointwise slopes at an arbitrary graph point

    def local(self, x, y, rho: float, numerator) -> Tuple[float, Optional[Tuple], int]:
        radius = self.params.slope_radius
        best, attaining, count = 0.0, None, 0
        top = numerator(y)
        for u, v in self.points:
            dx = self.x_space.norm(u - x)
            dy = self.y_space.norm(v - y)
            if not (max(dx, dy) <= radius and (dx > 0 or dy > 0)):
                continue
            count += 1
            value = self.ratio(max(top - numerator(v), 0.0), self.d_rho(x, y, u, v, rho), skip=0.0)
            best, attaining = _take_max(best, attaining, value, u, v)
        return best, (attaining if best > 0 else None), count

    def nonlocal_(self, x, y, rho: float) -> Tuple[float, Optional[Tuple], int]:
        best, attaining = 0.0, None
        top = self.g(y)
        for u, v in self.points:
            value = self.ratio(max(top - self.g(v), 0.0), self.d_rho(x, y, u, v, rho), skip=0.0)
            best, attaining = _take_max(best, attaining, value, u, v)
        return best, (attaining if best > 0 else None), len(self.points)

    # the same slopes at sample i, read from the tables

    def local_at(self, i: int, rho: float, numerators: List[float]) -> float:
        radius = self.params.slope_radius
        dxs, dys = self.tables.dx[i], self.tables.dy[i]
        top, best = numerators[i], 0.0
        for j, (dx, dy) in enumerate(zip(dxs, dys)):
            if not (max(dx, dy) <= radius and (dx > 0 or dy > 0)):
                continue
            best = max(best, self.ratio(max(top - numerators[j], 0.0), self.metric(dx, dy, rho), skip=0.0))
        return best

    def nonlocal_at(self, i: int, rho: float) -> float:
        gs = self.tables.gs
        top, best = gs[i], 0.0
        for gv, dx, dy in zip(gs, self.tables.dx[i], self.tables.dy[i]):
            best = max(best, self.ratio(max(top - gv, 0.0), self.metric(dx, dy, rho), skip=0.0))
        return best

    # admissible sets at one level

    def admissible(self, i: int, rho: float, form: str) -> bool:
        tables = self.tables
        near = tables.xn[i] < rho
        if form == "x":
            return near and tables.fibers[i] > self.params.graph_tol
        if form == "g":
            return near and tables.ts[i] < rho and tables.fibers[i] > self.params.graph_tol
        if form == "f":
            return near and 0 < tables.gs[i] < rho
        if form == "positive":
            return near and tables.gs[i] > 0
        raise InputError(f"unknown admissible form '{form}'")

    def limit(self, rho: float, form: str, inner) -> Tuple[float, Optional[Tuple], int]:
        best, attaining, count = INF, None, 0
        for i, (x, y) in enumerate(self.points):
            if not self.admissible(i, rho, form):
                continue
            count += 1
            best, attaining = _take_min(best, attaining, inner(i, rho), x, y)
        return best, attaining, count

    def strict_inner(self, variant: str):
        family = self.params.family
        phi = self.gauge.phi
        tables = self.tables

        def inner(i, rho):
            if variant == "uniform":
                return self.nonlocal_at(i, rho)
            if family == "phi":
                value = phi.derivative(tables.ts[i]) * self.local_at(i, rho, tables.ts)
            else:
                value = self.local_at(i, rho, tables.gs)
            if variant == "modified":
                value = max(value, self.ratio(tables.gs[i], tables.xn[i], skip=0.0))
            return value

        return inner

    def dominates(self, rho: float) -> bool:
        if self.params.metric != "max":
            return False
        tables, phi = self.tables, self.gauge.phi
        for i in range(len(self.points)):
            if not self.admissible(i, rho, "g"):
                continue
            t = tables.ts[i]
            if rho * t > self.inverse_at(i):
                return False
            if self.params.family != "phi":
                continue
            slope, top = float(phi.derivative(t)), float(phi.value(t))
            for s, dx, dy in zip(tables.ts, tables.dx[i], tables.dy[i]):
                if s >= t or max(dx, dy) > self.params.slope_radius:
                    continue
                if slope * (t - s) > top - float(phi.value(s)) + self.params.division_guard:
                    return False
        return True


def _key(u: np.ndarray, v: np.ndarray) -> Tuple[float, ...]:
    return tuple(u.tolist()) + tuple(v.tolist())


def _take_max(best: float, attaining, value: float, u, v):
    if value > best or (value == best and attaining is not None and _key(u, v) < _key(*attaining)):
        return value, (u, v)
    if value == best and attaining is None and value > 0:
        return value, (u, v)
    return best, attaining


def _take_min(best: float, attaining, value: float, u, v):
    if attaining is None or value < best or (value == best and _key(u, v) < _key(*attaining)):
        return value, (u, v)
    return best, attaining


def _unpack(instance: Instance, gauge: Optional[GaugeFunction]) -> Tuple[SampledGraphMap, GaugeFunction]:
    if isinstance(instance, ProblemSpec):
        mapping = instance.mapping
        gauge = gauge or instance.gauge()
    else:
        mapping = instance
    if not isinstance(mapping, SampledGraphMap):
        raise UnsupportedStructureError(
            f"the oracle enumerates finite sampled graphs only; export '{mapping.name}' with to_sampled_graph first"
        )
    if gauge is None:
        raise InputError("a sampled graph needs an explicit gauge")
    return mapping, gauge


class SampleEnumeration:
    """One finite sampled graph, enumerated once for any quantity and family.

    The pair distances and per-point values are computed on first use and
    shared; ``params`` passed to a call replace the defaults for that call.
    """

    def __init__(self, instance: Instance, params: OracleParams, gauge: Optional[GaugeFunction] = None):
        self.mapping, self.gauge = _unpack(instance, gauge)
        self.params = params
        self.tables = _SampleTables(self.mapping, self.gauge, params.graph_tol)

    def _walker(self, params: Optional[OracleParams]) -> _Enumerator:
        params = params or self.params
        if params.family not in ("f", "g", "phi"):
            raise InputError(f"unknown slope family '{params.family}'")
        if (params.family == "phi" or params.kind == "phi") and self.gauge.phi is None:
            raise InputError("the phi family needs a gauge built from phi")
        return _Enumerator(self.mapping, self.gauge, params, self.tables)

    def slope(self, quantity_id: str, params: Optional[OracleParams] = None) -> ExhaustiveResult:
        """Evaluate one slope or modulus by full enumeration over the sample."""
        if quantity_id not in QUANTITIES:
            raise InputError(f"unknown quantity '{quantity_id}'; choose one of {list(QUANTITIES)}")
        walker = self._walker(params)
        params = walker.params

        if quantity_id in POINTWISE_QUANTITIES:
            if params.point is None:
                raise InputError(f"'{quantity_id}' is evaluated at a point; params.point is missing")
            p = self.mapping.space.conform(params.point)
            self.mapping.require_on_graph(p)
            if quantity_id == "local_slope":
                value, attaining, count = walker.local(p.x, p.y, params.rho, walker.g)
            elif quantity_id == "rho_slope":
                value, attaining, count = walker.local(p.x, p.y, params.rho, walker.dist_gauge)
            else:
                value, attaining, count = walker.nonlocal_(p.x, p.y, params.rho)
            return _result(quantity_id, value, attaining, count)

        rho = params.final_rho
        guard_skip = INF
        tables = self.tables
        if quantity_id in ("strict_slope", "modified_strict_slope", "uniform_strict_slope"):
            variant = quantity_id.split("_")[0]
            form = "f" if params.family == "f" else "g"
            value, attaining, count = walker.limit(rho, form, walker.strict_inner(variant))
        elif quantity_id == "error_bound_modulus":
            value, attaining, count = walker.limit(
                rho, "positive", lambda i, r: walker.ratio(tables.gs[i], walker.inverse_at(i), guard_skip))
        elif quantity_id == "subregularity_modulus":
            value, attaining, count = walker.limit(rho, "x", _modulus_inner(walker, params.kind, guard_skip))
        else:
            value, attaining, count = walker.limit(
                rho, "x", lambda i, r: walker.ratio(tables.gs[i], tables.xn[i], guard_skip))
        return _result(quantity_id, value, attaining, count)

    def dominates(self, params: Optional[OracleParams] = None) -> bool:
        """Whether the uniform strict slope bounds the modulus and the modified
        strict slope already at the final level.

        Between limits both inequalities always hold; at a fixed level rho
        they do when the product metric is the max metric, every g-admissible
        sample has ``rho d(y, ybar) <= d(x, F^-1(ybar))``, and, for the phi
        family, ``phi'(t) (t - s) <= phi(t) - phi(s)`` on every pair the local
        slope compares.
        """
        walker = self._walker(params)
        return walker.dominates(walker.params.final_rho)


def exhaustive_slope(quantity_id: str, instance: Instance, params: OracleParams,
                     gauge: Optional[GaugeFunction] = None) -> ExhaustiveResult:
    """Evaluate one slope or modulus by full enumeration over a finite sample."""
    return SampleEnumeration(instance, params, gauge).slope(quantity_id)


def finite_level_dominance(instance: Instance, params: OracleParams,
                           gauge: Optional[GaugeFunction] = None) -> bool:
    return SampleEnumeration(instance, params, gauge).dominates()


def _modulus_inner(walker: _Enumerator, kind: str, skip: float):
    if kind not in ("f", "g", "phi"):
        raise InputError(f"unknown modulus kind '{kind}'")
    phi: Optional[ModulationFunction] = walker.gauge.phi
    tables = walker.tables

    def inner(i, rho):
        if kind == "g":
            num = tables.gs[i]
        else:
            num = tables.fibers[i]
            if kind == "phi":
                num = phi.value(num)
        return walker.ratio(num, walker.inverse_at(i), skip)

    return inner


def _result(quantity_id: str, value: float, attaining, count: int) -> ExhaustiveResult:
    point = ProductPoint(attaining[0].copy(), attaining[1].copy()) if attaining is not None else None
    return ExhaustiveResult(quantity=quantity_id, value=float(value), attaining=point, enumerated=count)


def parse_edge(edge: Union[str, Sequence[str]]) -> Tuple[str, str, str]:
    """``"cor1:d=>e"`` or ``("cor1", "d", "e")`` -> (corollary, source, target)."""
    if isinstance(edge, str):
        try:
            corollary, arrow = edge.split(":")
            source, target = arrow.split("=>")
        except ValueError:
            raise InputError(f"malformed edge '{edge}', expected 'corN:s=>t'") from None
    else:
        corollary, source, target = edge
    corollary, source, target = corollary.strip(), source.strip(), target.strip()
    if corollary not in PRIMAL_CONDITIONS:
        raise InputError(f"unknown corollary '{corollary}'")
    return corollary, source, target


def exhaustive_implication_truth(instance: Instance, corollary_edge: Union[str, Sequence[str]], gamma: float,
                                 params: OracleParams, gauge: Optional[GaugeFunction] = None
                                 ) -> ImplicationTruth:
    """Evaluate both ends of a primal corollary edge by enumeration.

    A condition holds when its quantity exceeds gamma (0 for the qualitative
    corollaries). Condition (a) of the quantitative corollaries is read as
    "subregular with some tau > gamma", so edge (a) => (b) carries its
    gamma < tau hypothesis.
    """
    corollary, source, target = parse_edge(corollary_edge)
    table = PRIMAL_CONDITIONS[corollary]
    for letter in (source, target):
        if letter not in table:
            raise InputError(f"condition ({letter}) of {corollary} has no primal enumeration")
    if corollary in QUALITATIVE_COROLLARIES:
        gamma = 0.0
    family = "phi" if corollary in PHI_COROLLARIES else "g"
    local = replace(params, family=family, kind=family)
    enumeration = SampleEnumeration(instance, local, gauge)
    results = [enumeration.slope(table[letter]) for letter in (source, target)]
    return ImplicationTruth(
        edge=f"{corollary}:{source}=>{target}",
        gamma=float(gamma),
        source=results[0].value > gamma,
        target=results[1].value > gamma,
        source_value=results[0].value,
        target_value=results[1].value,
        vacuous=results[0].enumerated == 0,
    )


def oracle_edges() -> List[str]:
    """Primal edges of the corollaries with an enumerable truth.

    On a finite sample every edge but the ones in ``LIMIT_ARROWS`` holds at
    each level; those hold where :meth:`SampleEnumeration.dominates` does.
    """
    edges = []
    for corollary in ("cor1", "cor3"):
        edges += [f"{corollary}:c=>e", f"{corollary}:d=>e", f"{corollary}:e=>b", f"{corollary}:a=>b"]
    for corollary in ("cor2", "cor4"):
        edges += [f"{corollary}:b=>d", f"{corollary}:c=>d", f"{corollary}:d=>a"]
    return edges
