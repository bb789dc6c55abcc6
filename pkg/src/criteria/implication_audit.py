"""Audit of the implication diagrams of the regularity criteria.

Every arrow of the four corollaries is evaluated on a problem: both ends are
certified with the margins of :class:`CriteriaChecker`, and an arrow whose
source holds while its target fails is a violation. Arrows whose hypotheses
the problem does not declare are skipped. Next to the arrows, the
inequalities between the slope quantities themselves are checked, and on
finite sampled graphs the estimators are compared with exhaustive
enumeration.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Callable, Dict, Iterable, List, Optional, Tuple

import numpy as np
from tqdm import tqdm

from src.mappings.problem_spec import ProblemSpec
from src.mappings.set_valued_map import SampledGraphMap
from src.oracle.exhaustive_oracle import (
    LIMIT_ARROWS, PRIMAL_CONDITIONS, QUALITATIVE_COROLLARIES, ImplicationTruth, OracleParams, SampleEnumeration,
    oracle_edges, parse_edge,
)
from src.slopes.slope_settings import RhoSchedule, SamplingSettings, ToleranceSettings
from src.criteria.certificates import EdgeResult, EdgeStatus, HierarchyResult, ImplicationAuditReport, Verdict
from src.criteria.criteria_checker import (
    CONDITIONS, CriteriaChecker, GaugeSelection, SlopeQuantities, finite_level_slack,
)
from src.criteria.criteria_settings import AuditConfig, CriteriaSettings
from src.utils.errors import UnsupportedStructureError
from src.utils.performance_monitor import PerformanceMonitor

logger = logging.getLogger(__name__)

# hypotheses are conjunctions of clauses, a clause is a disjunction of flags
Requirement = Tuple[Tuple[str, ...], ...]

CLOSED: Requirement = (("closed_graph",),)
ASPLUND_CLOSED: Requirement = (("asplund",), ("closed_graph",))
SMOOTH_GAUGE: Requirement = (("gauge_smooth",), ("closed_graph", "convex"))
CONVEX_GAUGE: Requirement = (("convex",), ("gauge_convex",))
CONVEX_PHI: Requirement = (("convex",), ("phi_convex",))
FINITE_DIM: Requirement = (("finite_dim",),)

# gamma rules of an arrow: the configured levels, or a level below the measured modulus
CONFIGURED, MATCHED, MATCHED_VARTHETA = "configured", "matched", "matched_vartheta"


@dataclass(frozen=True)
class Edge:
    corollary: str
    source: str
    target: str
    requires: Requirement = ()
    gamma_rule: str = CONFIGURED

    @property
    def label(self) -> str:
        return f"{self.corollary}:{self.source}=>{self.target}"

    @property
    def mode(self) -> str:
        return "qualitative" if self.corollary in QUALITATIVE_COROLLARIES else "quantitative"


def _arrows(corollary: str, arrows: str, requires: Requirement = (), gamma_rule: str = CONFIGURED) -> List[Edge]:
    """``"c>e d>e"`` -> one edge per arrow."""
    edges = []
    for arrow in arrows.split():
        source, target = arrow.split(">")
        edges.append(Edge(corollary, source, target, requires, gamma_rule))
    return edges


def _equivalent(corollary: str, chain: str, requires: Requirement = ()) -> List[Edge]:
    """Both directions between consecutive letters of an equivalence chain."""
    letters = chain.split()
    edges = []
    for a, b in zip(letters, letters[1:]):
        edges += [Edge(corollary, a, b, requires), Edge(corollary, b, a, requires)]
    return edges


EDGE_TABLES: Dict[str, List[Edge]] = {
    "cor1": (
        _arrows("cor1", "c>e d>e e>b f>g g>i f>h h>i j>k")
        + _arrows("cor1", "a>b", gamma_rule=MATCHED)
        + _arrows("cor1", "b>a", CLOSED)
        + _arrows("cor1", "f>d g>e", ASPLUND_CLOSED)
        + _equivalent("cor1", "h d", SMOOTH_GAUGE) + _equivalent("cor1", "i e", SMOOTH_GAUGE)
        + _equivalent("cor1", "b d e h i", CONVEX_GAUGE)
        + _equivalent("cor1", "f j", FINITE_DIM) + _equivalent("cor1", "h k", FINITE_DIM)
    ),
    "cor2": (
        _arrows("cor2", "sr>a")
        + _arrows("cor2", "b>d c>d d>a e>f f>h e>g g>h i>j")
        + _arrows("cor2", "e>c f>d", ASPLUND_CLOSED)
        + _equivalent("cor2", "e c", SMOOTH_GAUGE) + _equivalent("cor2", "f d", SMOOTH_GAUGE)
        + _equivalent("cor2", "a c d g h", CONVEX_GAUGE)
        + _equivalent("cor2", "e i", FINITE_DIM) + _equivalent("cor2", "g j", FINITE_DIM)
    ),
    "cor3": (
        _arrows("cor3", "c>e d>e e>b f>g g>i f>h h>i")
        + _arrows("cor3", "a>b", gamma_rule=MATCHED)
        + _arrows("cor3", "b>a", CLOSED)
        + _arrows("cor3", "a>h", (("convex",),), gamma_rule=MATCHED_VARTHETA)
        + _arrows("cor3", "f>d g>e", ASPLUND_CLOSED)
        + _equivalent("cor3", "h d", SMOOTH_GAUGE) + _equivalent("cor3", "i e", SMOOTH_GAUGE)
        + _equivalent("cor3", "b d e h i", CONVEX_PHI)
        + _equivalent("cor3", "f h j", FINITE_DIM)
    ),
    "cor4": (
        _arrows("cor4", "sr>a")
        + _arrows("cor4", "b>d c>d d>a e>f f>h e>g g>h")
        + _arrows("cor4", "e>c f>d", ASPLUND_CLOSED)
        + _equivalent("cor4", "e c", SMOOTH_GAUGE) + _equivalent("cor4", "f d", SMOOTH_GAUGE)
        + _arrows("cor4", "sr>g", (("convex",), ("vartheta_positive",)))
        + _equivalent("cor4", "a c d g h", CONVEX_PHI)
        + _equivalent("cor4", "e g i", FINITE_DIM)
    ),
}

# oracle quantity -> estimator quantity, per family
ORACLE_QUANTITIES = {
    "strict_slope": "strict:{family}",
    "modified_strict_slope": "modified:{family}",
    "uniform_strict_slope": "uniform:{family}",
    "subregularity_modulus": "modulus:{family}",
    "outer_growth_rate": "growth",
    "error_bound_modulus": "error_bound",
}
# depend on the gauge only, which both families share
GAUGE_QUANTITIES = ("outer_growth_rate", "error_bound_modulus")

UNDECIDED_AT_LEVEL = "fails at the final level, where the limit inequality need not hold yet"


def _both_infinite(a: float, b: float) -> bool:
    return math.isinf(a) and math.isinf(b)


class _FamilyAudit:
    """Edges and hierarchy checks of one gauge family on one problem."""

    def __init__(self, spec: ProblemSpec, family: str, sampling: SamplingSettings, schedule: RhoSchedule,
                 tolerances: ToleranceSettings, criteria: CriteriaSettings):
        self.spec = spec
        self.family = family
        self.criteria = criteria
        self.checker = CriteriaChecker(spec, GaugeSelection(family, family, spec.phi), sampling=sampling,
                                       schedule=schedule, tolerances=tolerances, criteria=criteria)
        self.quantities: SlopeQuantities = self.checker.quantities
        self.tolerances = self.checker.tolerances
        self._verdicts: Dict[Tuple[str, str, Optional[float]], Verdict] = {}
        # on sampled graphs, whether the limit inequalities with the uniform slope hold at the final level
        self.dominated: Optional[bool] = None

    # hypotheses

    def flags(self) -> Dict[str, bool]:
        hypotheses = self.spec.hypotheses
        gauge = self.quantities.gauge
        return {
            "asplund": hypotheses.finite_dim,
            "closed_graph": hypotheses.closed_graph,
            "convex": hypotheses.convex,
            "finite_dim": hypotheses.finite_dim,
            "gauge_convex": gauge.convex,
            "gauge_smooth": gauge.smooth_away_from_ybar,
            "phi_convex": self.spec.phi.convex_near_0,
            "vartheta_positive": self.quantities.vartheta() > 0,
        }

    @staticmethod
    def satisfied(requires: Requirement, flags: Dict[str, bool]) -> bool:
        return all(any(flags[name] for name in clause) for clause in requires)

    # edges

    def verdict(self, letter: str, mode: str, gamma: Optional[float]) -> Verdict:
        key = (letter, mode, gamma)
        if key not in self._verdicts:
            if letter == "sr":
                quantity = f"modulus:{self.family}"
            else:
                quantity = CONDITIONS[self.checker.corollary(mode)][letter].quantity
            self._verdicts[key] = self.checker.quantity_verdict(quantity, mode, gamma)
        return self._verdicts[key]

    def edge_gammas(self, edge: Edge, gammas: List[float]) -> Tuple[List[Optional[float]], str]:
        if edge.mode == "qualitative":
            return [None], ""
        if edge.gamma_rule == CONFIGURED:
            return list(gammas), ""
        tau = self.quantities.get(f"modulus:{self.family}").value
        if edge.gamma_rule == MATCHED_VARTHETA:
            tau *= self.quantities.vartheta()
        if math.isinf(tau):
            return list(gammas), "modulus is infinite, every configured gamma lies below it"
        if not tau > 0:
            return [], "no positive gamma lies below a zero modulus"
        return [self.criteria.gamma_match_factor * tau], ""

    def edges(self, gammas: List[float], flags: Dict[str, bool]) -> List[EdgeResult]:
        results = []
        for mode in ("quantitative", "qualitative"):
            for edge in EDGE_TABLES[self.checker.corollary(mode)]:
                hypotheses = sorted({name for clause in edge.requires for name in clause})
                if not self.satisfied(edge.requires, flags):
                    results.append(EdgeResult(edge.corollary, edge.source, edge.target, EdgeStatus.SKIPPED,
                                              hypotheses=hypotheses, note="hypotheses not declared"))
                    continue
                levels, note = self.edge_gammas(edge, gammas)
                if not levels:
                    results.append(EdgeResult(edge.corollary, edge.source, edge.target, EdgeStatus.SKIPPED,
                                              hypotheses=hypotheses, note=note))
                for gamma in levels:
                    source = self.verdict(edge.source, mode, gamma)
                    target = self.verdict(edge.target, mode, gamma)
                    status, edge_note = _edge_status(source, target), note
                    if status is EdgeStatus.VIOLATED and self.dominated is False and (
                            edge.mode == "quantitative" and (edge.source, edge.target) in LIMIT_ARROWS):
                        status, edge_note = EdgeStatus.UNDETERMINED, UNDECIDED_AT_LEVEL
                    if status is EdgeStatus.VIOLATED:
                        logger.warning(f"{self.spec.name}: {edge.label} violated at gamma={gamma}")
                    results.append(EdgeResult(edge.corollary, edge.source, edge.target, status, gamma=gamma,
                                              hypotheses=hypotheses, source_verdict=source,
                                              target_verdict=target, note=edge_note))
        return results

    # hierarchy

    def _value(self, name: str) -> float:
        return self.quantities.get(name).value

    def _at_most(self, check_id: str, description: str, lhs: float, rhs: float,
                 tol: Optional[float] = None) -> HierarchyResult:
        if tol is None:
            tol = self.tolerances.margin(rhs) if math.isfinite(rhs) else self.tolerances.margin_abs
        status = EdgeStatus.CONSISTENT if lhs <= rhs + tol else EdgeStatus.VIOLATED
        return HierarchyResult(f"{self.family}:{check_id}", description, lhs, rhs, tol, status)

    def _limit_at_most(self, check_id: str, description: str, lhs_name: str, rhs_name: str) -> HierarchyResult:
        """lhs <= rhs between limits, compared at the final level.

        A failure counts as a violation when the inequality is known to hold
        at that level already (sampled graphs with ``dominated``), or else
        when the brackets of the two estimates separate over the schedule.
        """
        lhs, rhs = self.quantities.get(lhs_name), self.quantities.get(rhs_name)
        result = self._at_most(check_id, description, lhs.value, rhs.value)
        if result.status is EdgeStatus.CONSISTENT or self.dominated:
            return result
        if self.dominated is None and lhs.lower > rhs.upper + result.tolerance:
            return result
        result.status = EdgeStatus.UNDETERMINED
        result.note = UNDECIDED_AT_LEVEL
        return result

    def _equal(self, check_id: str, description: str, lhs: float, rhs: float,
               slack: float = 0.0) -> HierarchyResult:
        check_id = f"{self.family}:{check_id}"
        if _both_infinite(lhs, rhs):
            return HierarchyResult(check_id, description, lhs, rhs, 0.0, EdgeStatus.CONSISTENT)
        if math.isinf(lhs) or math.isinf(rhs):
            return HierarchyResult(check_id, description, lhs, rhs, 0.0, EdgeStatus.UNDETERMINED,
                                   note="one side has no admissible points at the final level")
        tol = max(self.tolerances.margin_abs, self.tolerances.equality_rel * max(abs(lhs), abs(rhs))) + slack
        status = EdgeStatus.CONSISTENT if abs(lhs - rhs) <= tol else EdgeStatus.VIOLATED
        return HierarchyResult(check_id, description, lhs, rhs, tol, status)

    def _level_equal(self, check_id: str, lhs_name: str, rhs_name: str) -> HierarchyResult:
        lhs, rhs = self._value(lhs_name), self._value(rhs_name)
        return self._equal(check_id, "", lhs, rhs, finite_level_slack(self.quantities.schedule.final, lhs, rhs))

    def _guarded(self, check_id: str, description: str, build: Callable[[], HierarchyResult]) -> HierarchyResult:
        try:
            return build()
        except UnsupportedStructureError as e:
            return HierarchyResult(f"{self.family}:{check_id}", description, float("nan"), float("nan"), 0.0,
                                   EdgeStatus.SKIPPED, note=str(e))

    def hierarchy(self, flags: Dict[str, bool]) -> List[HierarchyResult]:
        fam = self.family
        sampled = isinstance(self.spec.mapping, SampledGraphMap)
        results = [
            self._limit_at_most("modulus_le_uniform", "subregularity modulus <= uniform strict slope",
                                f"modulus:{fam}", f"uniform:{fam}"),
            self._at_most("strict_le_modified", "strict slope <= modified strict slope",
                          self._value(f"strict:{fam}"), self._value(f"modified:{fam}")),
            self._limit_at_most("modified_le_uniform", "modified strict slope <= uniform strict slope",
                                f"modified:{fam}", f"uniform:{fam}"),
            self._at_most("growth_le_modified", "outer growth rate <= modified strict slope",
                          self._value("growth"), self._value(f"modified:{fam}")),
        ]
        if fam == "g":
            results.append(self._equal("error_bound_eq_modulus", "error bound modulus = g-subregularity modulus",
                                       self._value("error_bound"), self._value("modulus:g")))
        if flags["closed_graph"] and not sampled:
            results.append(self._equal("modulus_eq_uniform", "subregularity modulus = uniform strict slope",
                                       self._value(f"modulus:{fam}"), self._value(f"uniform:{fam}")))
        results += self._pointwise()
        results += self._dual_checks(flags)
        return results

    def _pointwise(self) -> List[HierarchyResult]:
        """Nonlocal slope against its two lower bounds at the strict slope's witness."""
        strict = self.quantities.get(f"strict:{self.family}")
        if strict.witness is None:
            return []
        primal = self.quantities.primal
        p, rho = strict.witness, self.quantities.schedule.final
        nonlocal_value = primal.nonlocal_slope(p, rho).value
        if self.quantities.sampling.metric == "sum":
            ratio_den = self.spec.space.rho_sum_dist(p, self.spec.reference, rho)
        else:
            ratio_den = self.spec.space.rho_dist(p, self.spec.reference, rho)
        reference_ratio = self.quantities.gauge.value(p.y) / ratio_den if ratio_den > 0 else 0.0
        tol = self.tolerances.identity_tol
        return [
            self._at_most("nonlocal_ge_local", "local slope <= nonlocal slope at the witness",
                          primal.local_slope(p, rho).value, nonlocal_value, tol),
            self._at_most("nonlocal_ge_reference", "g(y) / d_rho((x, y), (xbar, ybar)) <= nonlocal slope",
                          reference_ratio, nonlocal_value, tol),
        ]

    def _dual_checks(self, flags: Dict[str, bool]) -> List[HierarchyResult]:
        fam = self.family
        sub = f"subdiff:{fam}"
        checks = [
            ("approx_le_plain", "approximate <= plain strict subdifferential slope",
             lambda: self._at_most("approx_le_plain", "", self._value(f"{sub}:approximate"),
                                   self._value(f"{sub}:plain"))),
            ("plain_le_modified", "plain <= modified strict subdifferential slope",
             lambda: self._at_most("plain_le_modified", "", self._value(f"{sub}:plain"),
                                   self._value(f"{sub}:modified"))),
            ("approx_le_approx_modified", "approximate <= approximate modified strict subdifferential slope",
             lambda: self._at_most("approx_le_approx_modified", "", self._value(f"{sub}:approximate"),
                                   self._value(f"{sub}:approximate_modified"))),
            ("approx_modified_le_modified", "approximate modified <= modified strict subdifferential slope",
             lambda: self._at_most("approx_modified_le_modified", "", self._value(f"{sub}:approximate_modified"),
                                   self._value(f"{sub}:modified"))),
            ("approx_subdiff_le_strict", "approximate strict subdifferential slope <= strict slope",
             lambda: self._at_most("approx_subdiff_le_strict", "", self._value(f"{sub}:approximate"),
                                   self._value(f"strict:{fam}"))),
            ("subdiff_eq_limiting", "strict subdifferential slope = inf ||x*|| over the limiting coderivative",
             lambda: self._level_equal("subdiff_eq_limiting", f"{sub}:plain", f"limiting:{fam}")),
        ]
        if fam == "g":
            checks.append(("approx_subdiff_eq_limiting",
                           "approximate strict subdifferential slope = inf ||x*|| over the approximate limit",
                           lambda: self._level_equal("approx_subdiff_eq_limiting", f"{sub}:approximate",
                                                     "limiting_approx:g")))
        if fam == "phi":
            checks.append(("xi_scaled_ge_xi_free", "xi-scaled >= xi-free strict subdifferential phi-slope",
                           self._xi_check))
        if flags["convex"]:
            if fam == "g" and flags["gauge_convex"]:
                checks.append(("convex_equality_chain", "uniform, strict, modified and subdifferential slopes agree",
                               self._convex_chain))
            if fam == "phi":
                checks.append(("convex_bound", "vartheta[phi] * sr_phi <= strict subdifferential phi-slope",
                               self._convex_bound))
        results = []
        for check_id, description, build in checks:
            result = self._guarded(check_id, description, build)
            result.description = description
            results.append(result)
        return results

    def _xi_check(self) -> HierarchyResult:
        phi = self.spec.phi
        ts = np.geomspace(1e-8, self.quantities.schedule.final, 64)
        scaled = self._value("subdiff:phi:plain")
        free = self._value("subdiff_xi_free:plain")
        if np.any(phi.derivative(ts) < 1.0):
            return HierarchyResult("phi:xi_scaled_ge_xi_free", "", free, scaled, 0.0, EdgeStatus.SKIPPED,
                                   note="phi' drops below 1 near 0, the scaled balls are not nested")
        if phi.derivative(1e-16) < 1e6:
            return self._equal("xi_scaled_ge_xi_free", "", free, scaled)
        return self._at_most("xi_scaled_ge_xi_free", "", free, scaled)

    def _convex_chain(self) -> HierarchyResult:
        names = ["uniform:g", "strict:g", "modified:g", "subdiff:g:plain", "subdiff:g:modified"]
        values = [self._value(name) for name in names]
        slack = finite_level_slack(self.quantities.schedule.final, *values)
        return self._equal("convex_equality_chain", "", min(values), max(values), slack)

    def _convex_bound(self) -> HierarchyResult:
        bound = self.checker.convex_necessity_bound()
        result = self._at_most("convex_bound", "", bound.lhs, bound.rhs, bound.tolerance)
        if bound.notes:
            result.note = "; ".join(bound.notes)
        return result


def _edge_status(source: Verdict, target: Verdict) -> EdgeStatus:
    if source is Verdict.FAILS:
        return EdgeStatus.VACUOUS
    if source is Verdict.HOLDS and target is Verdict.FAILS:
        return EdgeStatus.VIOLATED
    if source is Verdict.HOLDS and target is Verdict.HOLDS:
        return EdgeStatus.CONSISTENT
    return EdgeStatus.UNDETERMINED


class ImplicationAuditor:
    """Runs the implication audit over a corpus of problems."""

    def __init__(self, sampling: Optional[SamplingSettings] = None,
                 schedule: Optional[RhoSchedule] = None,
                 tolerances: Optional[ToleranceSettings] = None,
                 criteria: Optional[CriteriaSettings] = None,
                 audit: Optional[AuditConfig] = None,
                 monitor: Optional[PerformanceMonitor] = None):
        self.sampling = sampling or SamplingSettings()
        self.schedule = schedule or RhoSchedule()
        self.tolerances = tolerances or ToleranceSettings()
        self.criteria = criteria or CriteriaSettings()
        self.audit = audit or AuditConfig()
        self.monitor = monitor

    def audit_instance(self, spec: ProblemSpec) -> ImplicationAuditReport:
        sampling = spec.sampling_settings(self.sampling)
        schedule = spec.rho_schedule(self.schedule)
        gammas = list(self.criteria.gammas)
        report = ImplicationAuditReport(instance_id=spec.name, gammas=gammas)
        families = [_FamilyAudit(spec, family, sampling, schedule, self.tolerances, self.criteria)
                    for family in ("g", "phi")]
        families[1].quantities.share(families[0].quantities, ("growth", "error_bound"))
        enumeration = None
        if isinstance(spec.mapping, SampledGraphMap):
            params = OracleParams.from_settings(sampling, schedule, self.tolerances)
            enumeration = SampleEnumeration(spec, params, families[0].quantities.gauge)
            for family in families:
                family.dominated = enumeration.dominates(replace(params, family=family.family, kind=family.family))
        for family in families:
            flags = family.flags()
            report.hypotheses.update(flags)
            report.edges += family.edges(gammas, flags)
            report.hierarchy += family.hierarchy(flags)
        if enumeration is not None:
            edges, checks = self._oracle_checks(enumeration, families, gammas)
            report.edges += edges
            report.hierarchy += checks
        if spec.overrides:
            report.diagnostics.append(f"overridden quantities: {sorted(spec.overrides)}")
        if report.violations:
            logger.warning(f"{spec.name}: {len(report.violations)} violations: {report.violations}")
        else:
            logger.info(f"{spec.name}: audit clean, {report.status_counts()}")
        return report

    def _oracle_checks(self, enumeration: SampleEnumeration, families: List[_FamilyAudit], gammas: List[float]
                       ) -> Tuple[List[EdgeResult], List[HierarchyResult]]:
        """Estimators against enumeration, and the enumerated truth of the oracle edges."""
        exact: Dict[Tuple[str, str], float] = {}
        checks = []
        for audit in families:
            local = replace(enumeration.params, family=audit.family, kind=audit.family)
            for oracle_id, pattern in ORACLE_QUANTITIES.items():
                if oracle_id in GAUGE_QUANTITIES and audit is not families[0]:
                    value = exact[(families[0].family, oracle_id)]
                else:
                    value = enumeration.slope(oracle_id, local).value
                exact[(audit.family, oracle_id)] = value
                estimate = audit.quantities.get(pattern.format(family=audit.family)).value
                tol = self.tolerances.identity_tol * max(1.0, abs(value)) if math.isfinite(value) else 0.0
                agree = _both_infinite(value, estimate) or abs(estimate - value) <= tol
                checks.append(HierarchyResult(
                    f"{audit.family}:oracle:{oracle_id}", "estimator agrees with exhaustive enumeration",
                    estimate, value, tol, EdgeStatus.CONSISTENT if agree else EdgeStatus.VIOLATED,
                ))
        dominated = {audit.family: audit.dominated for audit in families}
        edges = []
        for label in oracle_edges():
            corollary, source, target = parse_edge(label)
            family = "phi" if corollary in ("cor3", "cor4") else "g"
            table = PRIMAL_CONDITIONS[corollary]
            qualitative = corollary in QUALITATIVE_COROLLARIES
            levels = [0.0] if qualitative else gammas
            for gamma in levels:
                s, t = exact[(family, table[source])], exact[(family, table[target])]
                truth = ImplicationTruth(edge=label, gamma=gamma, source=s > gamma, target=t > gamma,
                                         source_value=s, target_value=t, vacuous=not s > gamma)
                note = "exhaustive enumeration"
                if not truth.source:
                    status = EdgeStatus.VACUOUS
                elif truth.consistent:
                    status = EdgeStatus.CONSISTENT
                elif not qualitative and (source, target) in LIMIT_ARROWS and not dominated[family]:
                    status, note = EdgeStatus.UNDETERMINED, f"{note}; {UNDECIDED_AT_LEVEL}"
                else:
                    status = EdgeStatus.VIOLATED
                edges.append(EdgeResult(corollary, source, target, status,
                                        gamma=None if qualitative else gamma, note=note))
        return edges, checks

    def audit_implications(self, instances: Iterable[ProblemSpec]) -> List[ImplicationAuditReport]:
        instances = list(instances)
        reports = []
        for spec in tqdm(instances, desc="audit", unit="instance", disable=not self.audit.progress):
            if self.monitor is not None:
                with self.monitor.stage(f"audit:{spec.name}"):
                    reports.append(self.audit_instance(spec))
            else:
                reports.append(self.audit_instance(spec))
        return reports


def audit_implications(instances: Iterable[ProblemSpec], **settings) -> List[ImplicationAuditReport]:
    return ImplicationAuditor(**settings).audit_implications(instances)
