"""Verdicts, certificates and implication audit reports."""
from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional

from src.slopes.slope_estimate import SlopeEstimate, encode_ext


class Verdict(Enum):
    HOLDS = "holds"
    FAILS = "fails"
    INCONCLUSIVE = "inconclusive"


class EdgeStatus(Enum):
    """Outcome of auditing one arrow of an implication diagram."""
    CONSISTENT = "consistent"      # source and target both hold
    VACUOUS = "vacuous"            # source fails, nothing to check
    UNDETERMINED = "undetermined"  # an end is inconclusive
    SKIPPED = "skipped"            # hypotheses of the arrow not satisfied
    VIOLATED = "violated"          # source holds, target fails


FAMILY_COROLLARIES = {
    ("g", "quantitative"): "cor1",
    ("g", "qualitative"): "cor2",
    ("phi", "quantitative"): "cor3",
    ("phi", "qualitative"): "cor4",
}


@dataclass
class Certificate:
    """Verdict on one condition of a regularity criterion.

    ``witnesses`` hold graph points and dual vectors attaining the value, or
    an exhausted-search entry recording the admissible counts and the
    resolution when there is no attaining element.
    """
    criterion_id: str
    family: str
    mode: str
    gamma: Optional[float]
    verdict: Verdict
    quantity: str
    value: Optional[SlopeEstimate] = None
    rho_used: Optional[float] = None
    witnesses: List[Dict[str, Any]] = field(default_factory=list)
    tolerances: Dict[str, float] = field(default_factory=dict)
    provenance: Dict[str, Any] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    @property
    def corollary(self) -> str:
        return FAMILY_COROLLARIES[(self.family, self.mode)]

    @property
    def key(self) -> str:
        return f"{self.corollary}:{self.criterion_id}"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "criterion_id": self.criterion_id,
            "family": self.family,
            "mode": self.mode,
            "corollary": self.corollary,
            "gamma": self.gamma,
            "verdict": self.verdict.value,
            "quantity": self.quantity,
            "value": self.value.to_dict() if self.value is not None else None,
            "rho_used": self.rho_used,
            "witnesses": list(self.witnesses),
            "tolerances": dict(sorted(self.tolerances.items())),
            "provenance": dict(self.provenance),
        }
        if self.notes:
            data["notes"] = list(self.notes)
        return data


@dataclass
class EdgeResult:
    corollary: str
    source: str
    target: str
    status: EdgeStatus
    gamma: Optional[float] = None
    hypotheses: List[str] = field(default_factory=list)
    source_verdict: Optional[Verdict] = None
    target_verdict: Optional[Verdict] = None
    note: str = ""

    @property
    def edge(self) -> str:
        return f"{self.corollary}:{self.source}=>{self.target}"

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "edge": self.edge,
            "status": self.status.value,
            "gamma": self.gamma,
            "hypotheses": list(self.hypotheses),
            "source": self.source_verdict.value if self.source_verdict else None,
            "target": self.target_verdict.value if self.target_verdict else None,
        }
        if self.note:
            data["note"] = self.note
        return data


@dataclass
class HierarchyResult:
    """One inequality between slope quantities: lhs <= rhs within tolerance."""
    check_id: str
    description: str
    lhs: float
    rhs: float
    tolerance: float
    status: EdgeStatus
    note: str = ""

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "check": self.check_id,
            "description": self.description,
            "lhs": encode_ext(self.lhs),
            "rhs": encode_ext(self.rhs),
            "tolerance": self.tolerance,
            "status": self.status.value,
        }
        if self.note:
            data["note"] = self.note
        return data


@dataclass
class ImplicationAuditReport:
    """Per-edge statuses of one instance; no edge may be violated."""
    instance_id: str
    hypotheses: Dict[str, bool] = field(default_factory=dict)
    gammas: List[float] = field(default_factory=list)
    edges: List[EdgeResult] = field(default_factory=list)
    hierarchy: List[HierarchyResult] = field(default_factory=list)
    diagnostics: List[str] = field(default_factory=list)

    @property
    def violations(self) -> List[str]:
        bad = [e.edge + (f"@{e.gamma:g}" if e.gamma is not None else "")
               for e in self.edges if e.status is EdgeStatus.VIOLATED]
        bad += [h.check_id for h in self.hierarchy if h.status is EdgeStatus.VIOLATED]
        return bad

    def status_counts(self) -> Dict[str, int]:
        counts = {status.value: 0 for status in EdgeStatus}
        for item in list(self.edges) + list(self.hierarchy):
            counts[item.status.value] += 1
        return counts

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "instance_id": self.instance_id,
            "hypotheses": dict(sorted(self.hypotheses.items())),
            "gammas": [float(g) for g in self.gammas],
            "edges": [e.to_dict() for e in self.edges],
            "hierarchy": [h.to_dict() for h in self.hierarchy],
            "counts": self.status_counts(),
            "violations": self.violations,
        }
        if self.diagnostics:
            data["diagnostics"] = list(self.diagnostics)
        return data
