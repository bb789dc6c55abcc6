"""Quantitative and qualitative regularity criteria at the reference point.

Each condition of the four criteria corollaries is tied to one slope or
coderivative quantity; a condition "quantity > gamma" is certified with a
margin, and the qualitative "quantity > 0" with a positivity tolerance plus a
trend test along the rho schedule.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple, Union

from src.mappings.gauges import GaugeFunction, ModulationFunction, vartheta
from src.mappings.problem_spec import ProblemSpec
from src.slopes.dual_slopes import DualSlopeEstimator, LimitingCoderivativeSample
from src.slopes.primal_slopes import PrimalSlopeEstimator
from src.slopes.slope_estimate import SlopeEstimate, encode_ext
from src.slopes.slope_settings import RhoSchedule, SamplingSettings, ToleranceSettings
from src.criteria.certificates import Certificate, Verdict
from src.criteria.criteria_settings import CriteriaSettings
from src.utils.errors import InputError, PreconditionError, UnsupportedStructureError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ConditionSpec:
    letter: str
    quantity: str
    statement: str
    dual: bool = False


def _conditions(rows) -> Dict[str, ConditionSpec]:
    return {letter: ConditionSpec(letter, quantity, statement, quantity.startswith(("subdiff", "limiting")))
            for letter, quantity, statement in rows}


def finite_level_slack(rho: float, *values: float) -> float:
    """Slack for comparing limit quantities evaluated at the final level rho."""
    finite = [abs(v) for v in values if math.isfinite(v)]
    return rho * max([1.0] + finite)


CONDITIONS: Dict[str, Dict[str, ConditionSpec]] = {
    "cor1": _conditions([
        ("a", "modulus:g", "F is metrically g-subregular with some tau > gamma"),
        ("b", "uniform:g", "uniform strict outer g-slope > gamma"),
        ("c", "growth", "liminf g(y) / d(x, xbar) > gamma"),
        ("d", "strict:g", "strict outer g-slope > gamma"),
        ("e", "modified:g", "modified strict outer g-slope > gamma"),
        ("f", "subdiff:g:approximate", "approximate strict subdifferential g-slope > gamma"),
        ("g", "subdiff:g:approximate_modified", "approximate modified strict subdifferential g-slope > gamma"),
        ("h", "subdiff:g:plain", "strict subdifferential g-slope > gamma"),
        ("i", "subdiff:g:modified", "modified strict subdifferential g-slope > gamma"),
        ("j", "limiting_approx:g", "||x*|| > gamma on the approximate limiting outer g-coderivative of the unit sphere"),
        ("k", "limiting:g", "||x*|| > gamma on the limiting outer g-coderivative of the unit sphere"),
    ]),
    "cor2": _conditions([
        ("a", "uniform:g", "uniform strict outer g-slope > 0"),
        ("b", "growth", "liminf g(y) / d(x, xbar) > 0"),
        ("c", "strict:g", "strict outer g-slope > 0"),
        ("d", "modified:g", "modified strict outer g-slope > 0"),
        ("e", "subdiff:g:approximate", "approximate strict subdifferential g-slope > 0"),
        ("f", "subdiff:g:approximate_modified", "approximate modified strict subdifferential g-slope > 0"),
        ("g", "subdiff:g:plain", "strict subdifferential g-slope > 0"),
        ("h", "subdiff:g:modified", "modified strict subdifferential g-slope > 0"),
        ("i", "limiting_approx:g", "0 not in the approximate limiting outer g-coderivative of the unit sphere"),
        ("j", "limiting:g", "0 not in the limiting outer g-coderivative of the unit sphere"),
    ]),
    "cor3": _conditions([
        ("a", "modulus:phi", "F is metrically phi-subregular with some tau > gamma"),
        ("b", "uniform:phi", "uniform strict outer phi-slope > gamma"),
        ("c", "growth", "liminf phi(d(y, ybar)) / d(x, xbar) > gamma"),
        ("d", "strict:phi", "strict outer phi-slope > gamma"),
        ("e", "modified:phi", "modified strict outer phi-slope > gamma"),
        ("f", "subdiff:phi:approximate", "approximate strict subdifferential phi-slope > gamma"),
        ("g", "subdiff:phi:approximate_modified", "approximate modified strict subdifferential phi-slope > gamma"),
        ("h", "subdiff:phi:plain", "strict subdifferential phi-slope > gamma"),
        ("i", "subdiff:phi:modified", "modified strict subdifferential phi-slope > gamma"),
        ("j", "limiting:phi", "||x*|| > gamma on the limiting outer phi-coderivative of the unit sphere"),
    ]),
    "cor4": _conditions([
        ("a", "uniform:phi", "uniform strict outer phi-slope > 0"),
        ("b", "growth", "liminf phi(d(y, ybar)) / d(x, xbar) > 0"),
        ("c", "strict:phi", "strict outer phi-slope > 0"),
        ("d", "modified:phi", "modified strict outer phi-slope > 0"),
        ("e", "subdiff:phi:approximate", "approximate strict subdifferential phi-slope > 0"),
        ("f", "subdiff:phi:approximate_modified", "approximate modified strict subdifferential phi-slope > 0"),
        ("g", "subdiff:phi:plain", "strict subdifferential phi-slope > 0"),
        ("h", "subdiff:phi:modified", "modified strict subdifferential phi-slope > 0"),
        ("i", "limiting:phi", "0 not in the limiting outer phi-coderivative of the unit sphere"),
    ]),
}


@dataclass(frozen=True)
class GaugeSelection:
    """Which family of criteria to evaluate and with which phi.

    ``f`` is plain metric subregularity (g = ||y - ybar||), ``g`` uses the
    problem's phi inside g, ``phi`` the phi-family, ``holder:q`` the
    phi-family with phi(t) = t**q.
    """
    label: str
    family: str
    phi: ModulationFunction

    @classmethod
    def parse(cls, text: str, spec: ProblemSpec) -> "GaugeSelection":
        text = str(text).strip()
        if text == "f":
            return cls("f", "g", ModulationFunction.identity())
        if text == "g":
            return cls("g", "g", spec.phi)
        if text in ("phi", "φ"):
            return cls("phi", "phi", spec.phi)
        if text.startswith("holder"):
            _, _, q = text.partition(":")
            try:
                exponent = float(q)
            except ValueError:
                raise InputError(f"malformed Hölder gauge '{text}', expected holder:q") from None
            return cls(text, "phi", ModulationFunction.holder(exponent))
        raise InputError(f"unknown gauge '{text}'; choose f, g, phi or holder:q")


class SlopeQuantities:
    """Lazily computed slope, modulus and coderivative values for one problem and gauge.

    Quantities are addressed by names such as ``strict:g``, ``modulus:phi``
    or ``subdiff:phi:approximate``; ``overrides`` replace computed values by
    name (negative controls).
    """

    def __init__(self, spec: ProblemSpec, phi: ModulationFunction,
                 sampling: Optional[SamplingSettings] = None,
                 schedule: Optional[RhoSchedule] = None,
                 tolerances: Optional[ToleranceSettings] = None,
                 overrides: Optional[Dict[str, Any]] = None):
        self.spec = spec
        self.phi = phi
        self.gauge: GaugeFunction = spec.gauge(phi)
        self.primal = PrimalSlopeEstimator(spec.mapping, self.gauge, sampling, schedule, tolerances)
        self.sampling = self.primal.sampling
        self.schedule = self.primal.schedule
        self.tolerances = self.primal.tolerances
        self.overrides = dict(spec.overrides if overrides is None else overrides)
        self._dual: Optional[DualSlopeEstimator] = None
        self._dual_error: Optional[UnsupportedStructureError] = None
        self._values: Dict[str, SlopeEstimate] = {}
        self._limits: Dict[Tuple[str, bool], LimitingCoderivativeSample] = {}
        self._shared: Dict[str, "SlopeQuantities"] = {}

    @property
    def dual(self) -> DualSlopeEstimator:
        if self._dual is None and self._dual_error is None:
            try:
                self._dual = DualSlopeEstimator(self.spec.mapping, self.gauge, primal=self.primal)
            except UnsupportedStructureError as e:
                self._dual_error = e
        if self._dual_error is not None:
            raise self._dual_error
        return self._dual

    def share(self, other: "SlopeQuantities", names) -> None:
        """Read ``names`` from ``other``, which must be built on the same gauge."""
        for name in names:
            self._shared[name] = other

    def vartheta(self) -> float:
        return vartheta(self.phi)

    def limiting(self, kind: str, approximate: bool = False) -> LimitingCoderivativeSample:
        key = (kind, approximate)
        if key not in self._limits:
            self._limits[key] = self.dual.limiting_outer_coderivative(kind, approximate=approximate)
        return self._limits[key]

    def get(self, name: str) -> SlopeEstimate:
        if name in self.overrides:
            value = float(self.overrides[name])
            estimate = SlopeEstimate.exact(value, rho=self.schedule.final)
            estimate.diagnostics.append(f"value of '{name}' overridden to {value:g}")
            return estimate
        if name in self._shared:
            return self._shared[name].get(name)
        if name not in self._values:
            logger.debug(f"{self.spec.name}: computing {name}")
            self._values[name] = self._compute(name)
        return self._values[name]

    def _compute(self, name: str) -> SlopeEstimate:
        head, _, rest = name.partition(":")
        if head == "modulus":
            return self.primal.subregularity_modulus(rest, phi=self.phi if rest == "phi" else None)
        if head == "error_bound":
            return self.primal.error_bound_modulus()
        if head == "growth":
            return self.primal.outer_growth_rate()
        if head in ("strict", "modified", "uniform"):
            return self.primal.strict_slope(variant=head, family=rest)
        if head == "subdiff":
            family, _, variant = rest.partition(":")
            return self.dual.strict_subdiff_slope(family, variant)
        if head == "subdiff_xi_free":
            return self.dual.strict_subdiff_slope("phi", rest, xi_free=True)
        if head in ("limiting", "limiting_approx"):
            return self.limiting(rest, approximate=head == "limiting_approx").inf_norm
        raise InputError(f"unknown quantity '{name}'")


@dataclass
class ConvexBoundResult:
    """vartheta[phi] * sr_phi against the strict subdifferential phi-slope."""
    vartheta: float
    modulus: SlopeEstimate
    slope: SlopeEstimate
    lhs: float
    rhs: float
    tolerance: float
    satisfied: bool
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        data = {
            "vartheta": self.vartheta,
            "modulus": self.modulus.to_dict(),
            "strict_subdifferential_phi_slope": self.slope.to_dict(),
            "lhs": encode_ext(self.lhs),
            "rhs": encode_ext(self.rhs),
            "tolerance": self.tolerance,
            "satisfied": self.satisfied,
        }
        if self.notes:
            data["notes"] = list(self.notes)
        return data


class CriteriaChecker:
    """Certificates for the regularity criteria of one problem."""

    def __init__(self, spec: ProblemSpec, gauge: Union[str, GaugeSelection] = "g",
                 sampling: Optional[SamplingSettings] = None,
                 schedule: Optional[RhoSchedule] = None,
                 tolerances: Optional[ToleranceSettings] = None,
                 criteria: Optional[CriteriaSettings] = None,
                 quantities: Optional[SlopeQuantities] = None):
        self.spec = spec
        self.selection = gauge if isinstance(gauge, GaugeSelection) else GaugeSelection.parse(gauge, spec)
        self.criteria = criteria or CriteriaSettings()
        self.quantities = quantities or SlopeQuantities(spec, self.selection.phi, sampling, schedule, tolerances)
        self.tolerances = self.quantities.tolerances
        self.sampling = self.quantities.sampling
        self.schedule = self.quantities.schedule

    @property
    def family(self) -> str:
        return self.selection.family

    def corollary(self, mode: str) -> str:
        if mode not in ("quantitative", "qualitative"):
            raise InputError(f"unknown criteria mode '{mode}'")
        quantitative = mode == "quantitative"
        if self.family == "g":
            return "cor1" if quantitative else "cor2"
        return "cor3" if quantitative else "cor4"

    # public checks

    def check_quantitative(self, gamma: float) -> List[Certificate]:
        if not gamma > 0:
            raise InputError(f"gamma must be positive, got {gamma}")
        table = CONDITIONS[self.corollary("quantitative")]
        return [self.certificate(letter, "quantitative", gamma) for letter in sorted(table)]

    def check_qualitative(self) -> List[Certificate]:
        table = CONDITIONS[self.corollary("qualitative")]
        return [self.certificate(letter, "qualitative") for letter in sorted(table)]

    def certificate(self, letter: str, mode: str, gamma: Optional[float] = None) -> Certificate:
        corollary = self.corollary(mode)
        if letter not in CONDITIONS[corollary]:
            raise InputError(f"{corollary} has no condition ({letter}); choose one of {sorted(CONDITIONS[corollary])}")
        condition = CONDITIONS[corollary][letter]
        if mode == "quantitative" and (gamma is None or not gamma > 0):
            raise InputError(f"gamma must be positive, got {gamma}")
        provenance = {
            "corollary": corollary,
            "condition": letter,
            "statement": condition.statement,
            "quantity": condition.quantity,
            "gauge": self.selection.label,
            "problem": self.spec.name,
        }
        tolerances = self._certificate_tolerances(mode, gamma)
        try:
            estimate = self.quantities.get(condition.quantity)
        except UnsupportedStructureError as e:
            logger.warning(f"{self.spec.name}: condition ({letter}) of {corollary} is inconclusive: {e}")
            return Certificate(
                criterion_id=letter, family=self.family, mode=mode, gamma=gamma,
                verdict=Verdict.INCONCLUSIVE, quantity=condition.quantity,
                tolerances=tolerances, provenance=provenance,
                notes=[f"unsupported structure: {e}"],
            )
        verdict = self._verdict(estimate, mode, gamma)
        certificate = Certificate(
            criterion_id=letter, family=self.family, mode=mode, gamma=gamma, verdict=verdict,
            quantity=condition.quantity, value=estimate, rho_used=estimate.rho,
            witnesses=self._witnesses(condition, estimate), tolerances=tolerances, provenance=provenance,
            notes=list(estimate.diagnostics),
        )
        certificate.notes.extend(self._annotations(corollary, letter))
        return certificate

    def quantity_verdict(self, quantity: str, mode: str, gamma: Optional[float] = None) -> Verdict:
        """Verdict on "quantity > gamma" (or "> 0") outside any corollary table."""
        try:
            estimate = self.quantities.get(quantity)
        except UnsupportedStructureError:
            return Verdict.INCONCLUSIVE
        return self._verdict(estimate, mode, gamma)

    # verdict rules

    def _verdict(self, estimate: SlopeEstimate, mode: str, gamma: Optional[float]) -> Verdict:
        if mode == "quantitative":
            return self._margin_verdict(estimate.value, gamma)
        return self._positivity_verdict(estimate)

    def _certificate_tolerances(self, mode: str, gamma: Optional[float]) -> Dict[str, float]:
        if mode == "quantitative":
            return {"margin": self.tolerances.margin(gamma)}
        return {"positivity": self.tolerances.positivity_tol}

    def _margin_verdict(self, value: float, gamma: float) -> Verdict:
        tol = self.tolerances.margin(gamma)
        if value > gamma + tol:
            return Verdict.HOLDS
        if value < gamma - tol:
            return Verdict.FAILS
        return Verdict.INCONCLUSIVE

    def _positivity_verdict(self, estimate: SlopeEstimate) -> Verdict:
        if estimate.value > self.tolerances.positivity_tol:
            return Verdict.HOLDS
        values = [v for _, v, _ in estimate.trajectory]
        tail = values[len(values) // 2:]
        tol = self.tolerances
        if all(later <= earlier + max(tol.identity_tol, tol.sample_rel_tol * abs(earlier))
               for earlier, later in zip(tail, tail[1:])):
            return Verdict.FAILS
        return Verdict.INCONCLUSIVE

    def _witnesses(self, condition: ConditionSpec, estimate: SlopeEstimate) -> List[Dict[str, Any]]:
        witnesses: List[Dict[str, Any]] = []
        if estimate.witness is not None:
            witnesses.append({"kind": "graph_point", **estimate.witness.to_dict()})
        if estimate.dual_witness:
            witnesses.append({"kind": "dual_vectors",
                              **{k: [float(v) for v in vec] for k, vec in sorted(estimate.dual_witness.items())}})
        if not witnesses:
            admissible = estimate.trajectory[-1][2] if estimate.trajectory else 0
            witnesses.append({
                "kind": "exhausted_search",
                "rho": estimate.rho,
                "admissible": int(admissible),
                "radius": float(self.sampling.radius),
                "resolution": int(self.sampling.resolution),
            })
        return witnesses

    def _annotations(self, corollary: str, letter: str) -> List[str]:
        notes = []
        hypotheses = self.spec.hypotheses
        gauge = self.quantities.gauge
        smooth = gauge.smooth_away_from_ybar
        if corollary in ("cor2", "cor4") and letter == "a":
            if hypotheses.closed_graph:
                notes.append("necessary and sufficient: the graph is declared locally closed")
            else:
                notes.append("necessary; sufficiency needs a locally closed graph")
        if corollary == "cor2" and letter in ("g", "h") and not (
                smooth or (hypotheses.convex and gauge.convex)):
            notes.append("sufficiency needs g differentiable away from ybar or F and g convex")
        if corollary == "cor2" and letter == "j" and not (hypotheses.convex and (gauge.convex or smooth)):
            notes.append("sufficiency needs F convex and g convex or differentiable away from ybar")
        if corollary == "cor4" and letter in ("g", "h") and not (
                smooth or (hypotheses.convex and self.selection.phi.convex_near_0)):
            notes.append("sufficiency needs a smooth norm on Y or F convex with phi convex")
        if corollary == "cor4" and letter == "g" and hypotheses.convex:
            theta = self.quantities.vartheta()
            if theta > 0:
                notes.append(f"also necessary: F is declared convex and vartheta[phi] = {theta:g} > 0")
        return notes

    # convex bound

    def convex_necessity_bound(self) -> ConvexBoundResult:
        """vartheta[phi] sr_phi <= strict subdifferential phi-slope, for convex F."""
        if not self.spec.hypotheses.convex:
            raise PreconditionError(f"{self.spec.name} is not declared convex")
        notes = []
        if not self.spec.mapping.midpoint_convexity_check(trials=self.criteria.convexity_trials,
                                                          radius=self.sampling.radius):
            notes.append("the declared convex graph fails the midpoint spot-check")
        theta = self.quantities.vartheta()
        modulus = self.quantities.get("modulus:phi")
        slope = self.quantities.get("subdiff:phi:plain")
        lhs = 0.0 if theta == 0.0 else theta * modulus.value
        rhs = slope.value
        # subdifferential slopes at a finite level fall short of their limit by up to rho
        tol = self.tolerances.margin_abs + finite_level_slack(self.quantities.schedule.final, lhs, rhs)
        satisfied = bool(lhs <= rhs + tol)
        if not satisfied:
            logger.warning(f"{self.spec.name}: convex bound fails, {lhs:.6g} > {rhs:.6g} + {tol:g}")
        return ConvexBoundResult(vartheta=theta, modulus=modulus, slope=slope, lhs=lhs, rhs=rhs,
                                 tolerance=tol, satisfied=satisfied, notes=notes)


def check_quantitative(spec: ProblemSpec, gauge_kind: str, gamma: float, **settings) -> List[Certificate]:
    return CriteriaChecker(spec, gauge_kind, **settings).check_quantitative(gamma)


def check_qualitative(spec: ProblemSpec, gauge_kind: str, **settings) -> List[Certificate]:
    return CriteriaChecker(spec, gauge_kind, **settings).check_qualitative()


def convex_necessity_bound(spec: ProblemSpec, phi: Optional[ModulationFunction] = None,
                           **settings) -> ConvexBoundResult:
    if phi is None:
        selection = GaugeSelection("phi", "phi", spec.phi)
    else:
        selection = GaugeSelection("phi", "phi", phi)
    return CriteriaChecker(spec, selection, **settings).convex_necessity_bound()
