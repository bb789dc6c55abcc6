from dataclasses import dataclass
from typing import Optional

import numpy as np


def _check_types(settings, expected_types: dict) -> None:
	"""Raise TypeError for any field whose value does not match its expected type."""
	for field_name, expected_type in expected_types.items():
		value = getattr(settings, field_name)
		types = expected_type if isinstance(expected_type, tuple) else (expected_type,)
		# bool is an int subclass; never a valid numeric setting
		if isinstance(value, bool) or not isinstance(value, types):
			expected = " or ".join([t.__name__ for t in types])
			raise TypeError(f"{field_name} must be {expected}, got {type(value).__name__}")


_NUMBER = (float, int)


@dataclass
class SamplingSettings:
	"""How graphs are sampled around the reference point."""
	radius: float = 1.0              # window around the reference point
	resolution: int = 2001           # grid points per x axis
	slope_radius: float = 1e-3       # first stencil radius for local limsups
	nesting_levels: int = 6          # stencil radii slope_radius * 2**-j, j = 0..J
	stencil_points: int = 4          # stencil offsets per direction and level
	window: Optional[float] = None   # nonlocal competitor window, None = sample window
	inverse_window: Optional[float] = None
	fiber_resolution: int = 5        # interior points per fiber of a convex graph
	metric: str = "max"

	def __post_init__(self):
		_check_types(self, {
			'radius': _NUMBER,
			'resolution': int,
			'slope_radius': _NUMBER,
			'nesting_levels': int,
			'stencil_points': int,
			'window': _NUMBER + (type(None),),
			'inverse_window': _NUMBER + (type(None),),
			'fiber_resolution': int,
		})
		if not isinstance(self.metric, str):
			raise TypeError(f"metric must be str, got {type(self.metric).__name__}")
		if self.radius < 0:
			raise ValueError(f"radius must be nonnegative, got {self.radius}")
		if self.resolution < 1:
			raise ValueError(f"resolution must be positive, got {self.resolution}")
		if self.slope_radius <= 0:
			raise ValueError(f"slope_radius must be positive, got {self.slope_radius}")
		if self.nesting_levels < 0 or self.stencil_points < 1 or self.fiber_resolution < 0:
			raise ValueError("nesting_levels, stencil_points and fiber_resolution must be nonnegative counts")
		if self.metric not in ("max", "sum"):
			raise ValueError(f"metric must be 'max' or 'sum', got '{self.metric}'")

	@property
	def stencil_radii(self) -> np.ndarray:
		return self.slope_radius * 0.5 ** np.arange(self.nesting_levels + 1)

	@classmethod
	def from_config(cls, config: dict) -> 'SamplingSettings':
		"""Create SamplingSettings from a configuration dictionary."""
		window = config.get('window')
		inverse_window = config.get('inverse_window')
		return cls(
			radius=float(config.get('radius', 1.0)),
			resolution=int(config.get('resolution', 2001)),
			slope_radius=float(config.get('slope_radius', 1e-3)),
			nesting_levels=int(config.get('nesting_levels', 6)),
			stencil_points=int(config.get('stencil_points', 4)),
			window=float(window) if window is not None else None,
			inverse_window=float(inverse_window) if inverse_window is not None else None,
			fiber_resolution=int(config.get('fiber_resolution', 5)),
			metric=config.get('metric', 'max'),
		)

	def to_config(self) -> dict:
		return {
			'radius': float(self.radius),
			'resolution': int(self.resolution),
			'slope_radius': float(self.slope_radius),
			'nesting_levels': int(self.nesting_levels),
			'stencil_points': int(self.stencil_points),
			'window': self.window,
			'inverse_window': self.inverse_window,
			'fiber_resolution': int(self.fiber_resolution),
			'metric': self.metric,
		}


@dataclass
class RhoSchedule:
	"""Geometric schedule rho_k = rho_0 * factor**k realizing rho -> 0."""
	rho_0: float = 1.0
	factor: float = 0.5
	steps: int = 8

	def __post_init__(self):
		_check_types(self, {'rho_0': _NUMBER, 'factor': _NUMBER, 'steps': int})
		if self.rho_0 <= 0:
			raise ValueError(f"rho_0 must be positive, got {self.rho_0}")
		if not 0 < self.factor < 1:
			raise ValueError(f"factor must lie in (0, 1), got {self.factor}")
		if self.steps < 1:
			raise ValueError(f"steps must be positive, got {self.steps}")

	@property
	def rhos(self) -> np.ndarray:
		return self.rho_0 * self.factor ** np.arange(self.steps)

	@property
	def final(self) -> float:
		return float(self.rhos[-1])

	@classmethod
	def from_config(cls, config: dict) -> 'RhoSchedule':
		return cls(
			rho_0=float(config.get('rho_0', 1.0)),
			factor=float(config.get('factor', 0.5)),
			steps=int(config.get('steps', 8)),
		)

	def to_config(self) -> dict:
		return {'rho_0': float(self.rho_0), 'factor': float(self.factor), 'steps': int(self.steps)}


@dataclass
class ToleranceSettings:
	"""Numerical tolerances shared by all estimators."""
	graph_tol: float = 1e-10         # graph membership
	identity_tol: float = 1e-8       # closed-form identities
	sample_rel_tol: float = 1e-2     # sampled-limit comparisons
	division_guard: float = 1e-14
	margin_abs: float = 1e-2         # strict-inequality margins of criteria
	margin_rel: float = 2e-2
	positivity_tol: float = 2e-2
	equality_rel: float = 5e-2
	active_tol: float = 1e-9         # active constraints of convex graphs
	fd_step: float = 1e-6
	angular_tol: float = 1e-3        # direction clustering of coderivative limits
	persistence_levels: int = 4

	def __post_init__(self):
		expected = {name: _NUMBER for name in (
			'graph_tol', 'identity_tol', 'sample_rel_tol', 'division_guard', 'margin_abs',
			'margin_rel', 'positivity_tol', 'equality_rel', 'active_tol', 'fd_step', 'angular_tol')}
		expected['persistence_levels'] = int
		_check_types(self, expected)
		for name, kind in expected.items():
			if kind is _NUMBER and getattr(self, name) < 0:
				raise ValueError(f"{name} must be nonnegative, got {getattr(self, name)}")

	def margin(self, gamma: float) -> float:
		"""Half-width of the inconclusive band around gamma."""
		return max(self.margin_abs, self.margin_rel * abs(gamma))

	@classmethod
	def from_config(cls, config: dict) -> 'ToleranceSettings':
		defaults = cls()
		values = {}
		for name in defaults.__dataclass_fields__:
			raw = config.get(name, getattr(defaults, name))
			values[name] = int(raw) if name == 'persistence_levels' else float(raw)
		return cls(**values)
