"""f(x, y) = g(y) + indicator of gph F."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from src.geometry.spaces import ProductPoint
from src.mappings.gauges import GaugeFunction
from src.mappings.set_valued_map import SetValuedMap
from src.utils.errors import InputError

logger = logging.getLogger(__name__)


@dataclass
class LiftedFunction:
    """The lower semicontinuous function whose error bounds encode subregularity of F."""
    mapping: SetValuedMap
    gauge: GaugeFunction

    def values(self, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
        on_graph = self.mapping.contains_many(xs, ys)
        return np.where(on_graph, self.gauge.values(ys), np.inf)

    def value(self, p: ProductPoint) -> float:
        self.mapping.space.conform(p)
        return float(self.values(p.x[None, :], p.y[None, :])[0])

    def require_finite(self, p: ProductPoint) -> float:
        value = self.value(p)
        if not np.isfinite(value):
            raise InputError(f"f is infinite at {p.to_dict()}: the point is off the graph")
        return value


def lift(mapping: SetValuedMap, gauge: GaugeFunction, tol: float = 1e-10) -> LiftedFunction:
    """Build f = g + i_gph F; needs g(ybar) = 0 at the reference point."""
    if not np.array_equal(gauge.ybar, mapping.ybar):
        raise InputError("gauge and mapping disagree on ybar")
    if abs(gauge.value(mapping.ybar)) > tol:
        raise InputError(f"gauge must vanish at ybar, got {gauge.value(mapping.ybar)}")
    return LiftedFunction(mapping, gauge)
