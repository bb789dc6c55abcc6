"""Modulation functions phi, gauges g and the constant vartheta[phi]."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Optional, Sequence

import numpy as np

from src.geometry.spaces import DualVectorSet, NormedSpaceSpec, NormKind, duality_mapping
from src.utils.errors import DomainError, InputError, InvariantViolationError

logger = logging.getLogger(__name__)

VARTHETA_SCHEDULE = 0.5 ** np.arange(1, 21)


def _as_float_array(t):
    arr = np.asarray(t, dtype=float)
    return arr, arr.ndim == 0


@dataclass
class ModulationFunction:
    """phi: R+ -> R+ with phi(0) = 0 and phi' > 0; phi'(0) may be +inf."""
    name: str
    value_fn: Callable[[np.ndarray], np.ndarray]
    derivative_fn: Callable[[np.ndarray], np.ndarray]
    convex_near_0: bool = False
    holder_exponent: Optional[float] = None
    params: Dict[str, Any] = field(default_factory=dict)

    def value(self, t):
        arr, scalar = _as_float_array(t)
        if np.any(arr < 0):
            raise DomainError(f"{self.name}: phi is defined on R+ only")
        out = self.value_fn(arr)
        return float(out) if scalar else out

    def derivative(self, t):
        arr, scalar = _as_float_array(t)
        if np.any(arr < 0):
            raise DomainError(f"{self.name}: phi' is defined on R+ only")
        out = self.derivative_fn(arr)
        return float(out) if scalar else out

    def xi(self, t):
        """(phi'(t))^-1, the rescaling of rho in the phi-family dual slopes."""
        return 1.0 / self.derivative(t)

    def validate(self, grid: Optional[np.ndarray] = None) -> None:
        """Check phi(0) = 0, phi' > 0 and strict increase on a grid."""
        if grid is None:
            grid = np.concatenate(([0.0], np.geomspace(1e-8, 2.0, 400)))
        if abs(self.value(0.0)) > 0.0:
            raise InvariantViolationError(f"{self.name}: phi(0) must be 0, got {self.value(0.0)}")
        values = self.value(grid)
        derivatives = self.derivative(grid[grid > 0])
        if np.any(~(derivatives > 0)):
            raise InvariantViolationError(f"{self.name}: phi' must be positive on (0, inf)")
        if np.any(np.diff(values) <= 0):
            raise InvariantViolationError(f"{self.name}: phi must be strictly increasing")

    @classmethod
    def identity(cls) -> "ModulationFunction":
        return cls(
            name="identity",
            value_fn=lambda t: t.copy(),
            derivative_fn=lambda t: np.ones_like(t),
            convex_near_0=True,
            holder_exponent=1.0,
            params={"kind": "identity"},
        )

    @classmethod
    def holder(cls, q: float) -> "ModulationFunction":
        """phi(t) = t**q, q in (0, 1]."""
        q = float(q)
        if not 0 < q <= 1:
            raise InputError(f"Hölder exponent must lie in (0, 1], got {q}")

        def derivative(t):
            with np.errstate(divide="ignore"):
                out = q * np.power(t, q - 1.0)
            return np.where(t == 0, 1.0 if q == 1.0 else np.inf, out)

        return cls(
            name=f"holder:{q}",
            value_fn=lambda t: np.power(t, q),
            derivative_fn=derivative,
            convex_near_0=q == 1.0,
            holder_exponent=q,
            params={"kind": "holder", "q": q},
        )

    @classmethod
    def arccos_branch(cls) -> "ModulationFunction":
        """arccos(1 - t) on [0, 1/2), continued linearly with slope 2/sqrt(3)."""
        def value(t):
            # stable form of arccos(1 - t)
            near = 2.0 * np.arcsin(np.sqrt(np.minimum(t, 0.5) / 2.0))
            far = np.pi / 3.0 + (2.0 * t - 1.0) / np.sqrt(3.0)
            return np.where(t < 0.5, near, far)

        def derivative(t):
            inner = np.clip(t, 0.0, 0.5)
            with np.errstate(divide="ignore"):
                near = 1.0 / np.sqrt(inner * (2.0 - inner))
            return np.where(t < 0.5, near, 2.0 / np.sqrt(3.0))

        return cls(
            name="arccos_branch",
            value_fn=value,
            derivative_fn=derivative,
            convex_near_0=False,
            params={"kind": "arccos_branch"},
        )

    @classmethod
    def from_table(cls, ts: Sequence[float], values: Sequence[float]) -> "ModulationFunction":
        """Monotone C1 interpolation of tabulated values, extended linearly."""
        from scipy.interpolate import PchipInterpolator

        ts = np.asarray(ts, dtype=float)
        values = np.asarray(values, dtype=float)
        if ts.ndim != 1 or ts.shape != values.shape or ts.size < 2:
            raise InputError("a phi table needs matching 't' and 'values' lists of length >= 2")
        if ts[0] != 0.0 or values[0] != 0.0:
            raise InvariantViolationError("a phi table must start at (0, 0)")
        if np.any(np.diff(ts) <= 0) or np.any(np.diff(values) <= 0):
            raise InvariantViolationError("phi table entries must be strictly increasing")
        interp = PchipInterpolator(ts, values)
        slope = interp.derivative()
        t_max, v_max, d_max = ts[-1], values[-1], float(slope(ts[-1]))

        def value(t):
            return np.where(t <= t_max, interp(np.minimum(t, t_max)), v_max + d_max * (t - t_max))

        def derivative(t):
            return np.where(t <= t_max, slope(np.minimum(t, t_max)), d_max)

        return cls(
            name="table",
            value_fn=value,
            derivative_fn=derivative,
            params={"kind": "table", "t": ts.tolist(), "values": values.tolist()},
        )

    @classmethod
    def from_config(cls, config: Optional[Dict[str, Any]]) -> "ModulationFunction":
        """Build phi from a spec block such as ``{kind: holder, q: 0.5}``."""
        if not config:
            return cls.identity()
        kind = config.get("kind", "identity")
        if kind == "identity":
            phi = cls.identity()
        elif kind == "holder":
            if "q" not in config:
                raise InputError("holder phi needs 'q'")
            phi = cls.holder(config["q"])
        elif kind == "arccos_branch":
            phi = cls.arccos_branch()
        elif kind == "table":
            phi = cls.from_table(config.get("t", []), config.get("values", []))
        else:
            raise InputError(f"unknown phi kind '{kind}'")
        phi.validate()
        return phi

    def to_config(self) -> Dict[str, Any]:
        return dict(self.params)


def vartheta_profile(phi: ModulationFunction, t_schedule: Optional[Sequence[float]] = None) -> np.ndarray:
    """t phi'(t) / phi(t) along a decreasing schedule."""
    ts = np.asarray(VARTHETA_SCHEDULE if t_schedule is None else t_schedule, dtype=float)
    if ts.size == 0 or np.any(ts <= 0) or np.any(np.diff(ts) >= 0):
        raise InputError("t_schedule must be a nonempty, strictly decreasing positive grid")
    values = phi.value(ts)
    if np.any(values <= 0):
        raise InvariantViolationError(f"{phi.name}: phi vanishes at a positive t")
    return ts * phi.derivative(ts) / values


def vartheta(phi: ModulationFunction, t_schedule: Optional[Sequence[float]] = None) -> float:
    """liminf_{t -> 0} t phi'(t) / phi(t); exactly q for a declared Hölder phi."""
    if phi.holder_exponent is not None:
        return float(phi.holder_exponent)
    ratios = vartheta_profile(phi, t_schedule)
    return float(np.min(ratios[ratios.size // 2:]))


@dataclass
class GaugeFunction:
    """g: Y -> R+ vanishing at ybar, with a subdifferential oracle."""
    y_space: NormedSpaceSpec
    ybar: np.ndarray
    values_fn: Callable[[np.ndarray], np.ndarray]
    subdifferential_fn: Optional[Callable[[np.ndarray], DualVectorSet]] = None
    convex: bool = False
    smooth_away_from_ybar: bool = True
    phi: Optional[ModulationFunction] = None
    name: str = "custom"

    def __post_init__(self):
        self.ybar = self.y_space.conform(self.ybar)

    def values(self, ys: np.ndarray) -> np.ndarray:
        return np.asarray(self.values_fn(self.y_space.conform_rows(ys)), dtype=float)

    def value(self, y) -> float:
        return float(self.values(self.y_space.conform(y)[None, :])[0])

    def subdifferential(self, y) -> DualVectorSet:
        if self.subdifferential_fn is None:
            raise DomainError(f"gauge '{self.name}' has no subdifferential oracle")
        return self.subdifferential_fn(self.y_space.conform(y))

    def check_positivity(self, ys: np.ndarray) -> bool:
        """g(y) > 0 at every sampled y != ybar."""
        ys = self.y_space.conform_rows(ys)
        away = self.y_space.norms(ys - self.ybar) > 0
        return bool(np.all(self.values(ys[away]) > 0))

    def growth_ratio(self, radius: float = 1.0, resolution: int = 64) -> float:
        """Sampled liminf of g(y) / d(y, ybar) as y -> ybar.

        A positive result means the growth condition is not refuted at this
        resolution; a finite sample can never prove it.
        """
        directions = self._test_directions()
        ts = radius * np.geomspace(1.0, 1e-6, resolution)
        ys = self.ybar + (ts[:, None, None] * directions[None, :, :]).reshape(-1, self.y_space.dim)
        ratios = self.values(ys) / self.y_space.norms(ys - self.ybar)
        tail = ratios.reshape(ts.size, -1)[ts.size // 2:]
        return float(np.min(tail))

    def continuity_spot_check(self, radius: float = 1e-8, tol: float = 1e-4) -> bool:
        """g stays small on a tiny sphere around ybar."""
        ys = self.ybar + radius * self._test_directions()
        ok = bool(np.all(self.values(ys) <= tol))
        if not ok:
            logger.warning(f"gauge '{self.name}' fails the continuity spot-check at ybar")
        return ok

    def _test_directions(self) -> np.ndarray:
        eye = np.eye(self.y_space.dim)
        directions = np.vstack([eye, -eye])
        return directions / self.y_space.norms(directions)[:, None]


def g_from_phi(phi: ModulationFunction, ybar, y_space: NormedSpaceSpec) -> GaugeFunction:
    """g(y) = phi(||y - ybar||) with subdifferential phi'(||y - ybar||) J(y - ybar)."""
    ybar = y_space.conform(ybar)

    def values(ys):
        return phi.value(y_space.norms(ys - ybar))

    def subdifferential(y):
        t = y_space.norm(y - ybar)
        if t == 0.0:
            raise DomainError("the subdifferential of phi(||. - ybar||) is only used away from ybar")
        return duality_mapping(y - ybar, y_space).scaled(phi.derivative(t))

    smooth_norm = y_space.dim == 1 or y_space.norm_kind is NormKind.EUCLIDEAN or (
        y_space.norm_kind is NormKind.P_NORM and 1.0 < y_space.order < np.inf
    )
    return GaugeFunction(
        y_space=y_space,
        ybar=ybar,
        values_fn=values,
        subdifferential_fn=subdifferential,
        convex=phi.convex_near_0,
        smooth_away_from_ybar=smooth_norm,
        phi=phi,
        name=f"{phi.name}(||y - ybar||)",
    )
