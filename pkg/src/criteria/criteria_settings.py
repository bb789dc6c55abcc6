from dataclasses import dataclass, field
from typing import List

from src.slopes.slope_settings import _NUMBER, _check_types


@dataclass
class CriteriaSettings:
	"""Gamma levels and hypothesis spot-checks used when certifying criteria."""
	gammas: List[float] = field(default_factory=lambda: [0.25, 0.5, 0.9])
	gamma_match_factor: float = 0.9   # audit gamma = factor * measured modulus
	convexity_trials: int = 1000

	def __post_init__(self):
		_check_types(self, {'gamma_match_factor': _NUMBER, 'convexity_trials': int})
		if not isinstance(self.gammas, list):
			raise TypeError(f"gammas must be list, got {type(self.gammas).__name__}")
		for gamma in self.gammas:
			if isinstance(gamma, bool) or not isinstance(gamma, _NUMBER):
				raise TypeError(f"gammas must hold numbers, got {type(gamma).__name__}")
			if gamma <= 0:
				raise ValueError(f"gammas must be positive, got {gamma}")
		if not 0 < self.gamma_match_factor < 1:
			raise ValueError(f"gamma_match_factor must lie in (0, 1), got {self.gamma_match_factor}")
		if self.convexity_trials < 1:
			raise ValueError(f"convexity_trials must be positive, got {self.convexity_trials}")

	@classmethod
	def from_config(cls, config: dict) -> 'CriteriaSettings':
		return cls(
			gammas=[float(g) for g in config.get('gammas', [0.25, 0.5, 0.9])],
			gamma_match_factor=float(config.get('gamma_match_factor', 0.9)),
			convexity_trials=int(config.get('convexity_trials', 1000)),
		)


@dataclass
class AuditConfig:
	"""Size and seed of the implication audit."""
	random_instances: int = 200
	max_points: int = 50
	seed: int = 0
	progress: bool = False

	def __post_init__(self):
		_check_types(self, {'random_instances': int, 'max_points': int, 'seed': int})
		if not isinstance(self.progress, bool):
			raise TypeError(f"progress must be bool, got {type(self.progress).__name__}")
		if self.random_instances < 0:
			raise ValueError(f"random_instances must be nonnegative, got {self.random_instances}")
		if self.max_points < 4:
			raise ValueError(f"max_points must be at least 4, got {self.max_points}")

	@classmethod
	def from_config(cls, config: dict) -> 'AuditConfig':
		return cls(
			random_instances=int(config.get('random_instances', 200)),
			max_points=int(config.get('max_points', 50)),
			seed=int(config.get('seed', 0)),
			progress=bool(config.get('progress', False)),
		)
