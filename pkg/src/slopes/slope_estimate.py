"""Extended-real slope values with brackets and provenance."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Union

import numpy as np

from src.geometry.spaces import ProductPoint
from src.utils.errors import InvariantViolationError

INF = float("inf")

ExtReal = Union[float, str, None]


def encode_ext(value: float) -> ExtReal:
    """JSON-friendly form of an extended real."""
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    value = float(value)
    if math.isinf(value):
        return "+inf" if value > 0 else "-inf"
    return value


def decode_ext(value: ExtReal) -> float:
    if value is None:
        return float("nan")
    if isinstance(value, str):
        return {"+inf": INF, "inf": INF, "-inf": -INF}[value]
    return float(value)


def positive_part(values):
    return np.maximum(values, 0.0)


def guarded_ratio(num: np.ndarray, den: np.ndarray, guard: float, skip: float) -> np.ndarray:
    """num / den, with +inf where den < guard and num > 0, ``skip`` where den < guard and num <= 0."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    small = den < guard
    out = np.divide(num, np.where(small, 1.0, den))
    out = np.where(small, np.where(num > 0, INF, skip), out)
    return out


@dataclass
class SlopeEstimate:
    """An extended nonnegative value with bracketing bounds.

    ``trajectory`` lists ``(rho_k or r_j, value, admissible count)`` per level
    for quantities realized as limits; ``components`` carries cross-check
    values computed along the way (for example a factorized form);
    ``dual_witness`` holds the x* and y* attaining a dual slope at ``witness``.
    """
    value: float
    lower: float
    upper: float
    rho: Optional[float] = None
    schedule: Optional[List[float]] = None
    sampling: Dict[str, Any] = field(default_factory=dict)
    witness: Optional[ProductPoint] = None
    trajectory: List[tuple] = field(default_factory=list)
    components: Dict[str, float] = field(default_factory=dict)
    diagnostics: List[str] = field(default_factory=list)
    dual_witness: Dict[str, List[float]] = field(default_factory=dict)

    def __post_init__(self):
        self.value = float(self.value)
        self.lower = float(self.lower)
        self.upper = float(self.upper)
        if not self.lower <= self.value <= self.upper:
            raise InvariantViolationError(
                f"bracket [{self.lower}, {self.upper}] does not contain {self.value}"
            )

    @classmethod
    def exact(cls, value: float, **kwargs) -> "SlopeEstimate":
        return cls(value=value, lower=value, upper=value, **kwargs)

    @classmethod
    def from_levels(cls, levels: Sequence[float], **kwargs) -> "SlopeEstimate":
        """Final-level value bracketed by the cross-level extremes."""
        levels = [float(v) for v in levels]
        return cls(value=levels[-1], lower=min(levels), upper=max(levels), **kwargs)

    @property
    def is_infinite(self) -> bool:
        return math.isinf(self.value)

    def bracket(self) -> Dict[str, ExtReal]:
        return {
            "value": encode_ext(self.value),
            "lower": encode_ext(self.lower),
            "upper": encode_ext(self.upper),
        }

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = self.bracket()
        if self.rho is not None:
            data["rho"] = float(self.rho)
        if self.schedule is not None:
            data["schedule"] = [float(r) for r in self.schedule]
        if self.witness is not None:
            data["witness"] = self.witness.to_dict()
        if self.dual_witness:
            data["dual_witness"] = {k: [float(v) for v in vec] for k, vec in sorted(self.dual_witness.items())}
        if self.trajectory:
            data["trajectory"] = [
                {"level": float(level), "value": encode_ext(value), "admissible": int(count)}
                for level, value, count in self.trajectory
            ]
        if self.components:
            data["components"] = {k: encode_ext(v) for k, v in sorted(self.components.items())}
        if self.diagnostics:
            data["diagnostics"] = list(self.diagnostics)
        return data
