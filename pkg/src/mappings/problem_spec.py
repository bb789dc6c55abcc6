"""Problem specs: a mapping, its reference point, phi and declared hypotheses."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional

import numpy as np
import yaml

from src.geometry.spaces import NormedSpaceSpec, ProductPoint, ProductSpace
from src.mappings.convex_graph import ConvexInequalityGraphMap, ConvexPolyhedralGraphMap
from src.mappings.gauges import GaugeFunction, ModulationFunction, g_from_phi
from src.mappings.set_valued_map import SampledGraphMap, SetValuedMap
from src.mappings.smooth_library import build_smooth_map
from src.slopes.slope_settings import RhoSchedule, SamplingSettings
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

DEFAULT_PROBLEMS_DIR = Path(__file__).resolve().parents[2] / "config" / "problems"


@dataclass
class Hypotheses:
    """User-declared structure; convexity is spot-checked, never decided."""
    convex: bool = False
    closed_graph: bool = True
    finite_dim: bool = True

    def to_config(self) -> Dict[str, bool]:
        return {"convex": self.convex, "closed_graph": self.closed_graph, "finite_dim": self.finite_dim}


def build_mapping(config: Dict[str, Any], space: ProductSpace, reference: ProductPoint,
                  name: str = "F", graph_tol: float = 1e-10) -> SetValuedMap:
    """Instantiate the mapping block of a problem spec."""
    variant = config.get("variant")
    if variant == "smooth":
        return build_smooth_map(config, space, reference, name=name, graph_tol=graph_tol)
    if variant == "sampled":
        samples = config.get("samples")
        if not samples:
            raise InputError("a sampled mapping needs a nonempty 'samples' list")
        try:
            xs = [np.atleast_1d(np.asarray(s["x"], dtype=float)) for s in samples]
            ys = [np.atleast_1d(np.asarray(s["y"], dtype=float)) for s in samples]
        except (KeyError, TypeError) as e:
            raise InputError(f"malformed sample entry: {e}") from None
        return SampledGraphMap(space, reference, np.array(xs), np.array(ys), name=name, graph_tol=graph_tol)
    if variant == "polyhedral":
        return ConvexPolyhedralGraphMap.from_config(config, space, reference, name=name, graph_tol=graph_tol)
    if variant == "convex_quadratic":
        return ConvexInequalityGraphMap.from_config(config, space, reference, name=name, graph_tol=graph_tol)
    raise InputError(f"unknown mapping variant '{variant}'")


@dataclass
class ProblemSpec:
    name: str
    space: ProductSpace
    reference: ProductPoint
    mapping: SetValuedMap
    phi: ModulationFunction
    hypotheses: Hypotheses = field(default_factory=Hypotheses)
    sampling: Dict[str, Any] = field(default_factory=dict)
    schedule: Dict[str, Any] = field(default_factory=dict)
    overrides: Dict[str, Any] = field(default_factory=dict)
    description: str = ""

    def gauge(self, phi: Optional[ModulationFunction] = None) -> GaugeFunction:
        """g = phi(||y - ybar||), with the spec's phi unless another is given."""
        return g_from_phi(phi or self.phi, self.reference.y, self.space.y_space)

    def distance_gauge(self) -> GaugeFunction:
        return g_from_phi(ModulationFunction.identity(), self.reference.y, self.space.y_space)

    def sampling_settings(self, base: Optional[SamplingSettings] = None,
                          flags: Optional[Dict[str, Any]] = None) -> SamplingSettings:
        """Configuration defaults, overridden by the spec's block, overridden by flags."""
        merged = (base or SamplingSettings()).to_config()
        merged.update(self.sampling)
        merged.update({k: v for k, v in (flags or {}).items() if v is not None})
        return SamplingSettings.from_config(merged)

    def rho_schedule(self, base: Optional[RhoSchedule] = None,
                     flags: Optional[Dict[str, Any]] = None) -> RhoSchedule:
        merged = (base or RhoSchedule()).to_config()
        merged.update(self.schedule)
        merged.update({k: v for k, v in (flags or {}).items() if v is not None})
        return RhoSchedule.from_config(merged)

    @classmethod
    def from_dict(cls, data: Dict[str, Any], graph_tol: float = 1e-10) -> "ProblemSpec":
        if not isinstance(data, dict):
            raise InputError("a problem spec must be a mapping")
        for key in ("spaces", "mapping", "reference_point"):
            if key not in data:
                raise InputError(f"problem spec is missing '{key}'")
        spaces = data["spaces"]
        if "x" not in spaces or "y" not in spaces:
            raise InputError("'spaces' needs 'x' and 'y'")
        space = ProductSpace(NormedSpaceSpec.from_config(spaces["x"]), NormedSpaceSpec.from_config(spaces["y"]))
        reference = space.conform(ProductPoint.from_config(data["reference_point"]))
        name = str(data.get("name", "problem"))
        mapping = build_mapping(data["mapping"], space, reference, name=name, graph_tol=graph_tol)

        declared = data.get("hypotheses") or {}
        hypotheses = Hypotheses(
            convex=bool(declared.get("convex", mapping.convex)),
            closed_graph=bool(declared.get("closed_graph", mapping.closed_graph)),
            finite_dim=bool(declared.get("finite_dim", True)),
        )
        mapping.convex = hypotheses.convex
        mapping.closed_graph = hypotheses.closed_graph

        sampling = dict(data.get("sampling") or {})
        schedule = dict(sampling.pop("rho_schedule", None) or data.get("schedule") or {})
        return cls(
            name=name,
            space=space,
            reference=reference,
            mapping=mapping,
            phi=ModulationFunction.from_config(data.get("phi")),
            hypotheses=hypotheses,
            sampling=sampling,
            schedule=schedule,
            overrides=dict(data.get("overrides") or {}),
            description=str(data.get("description", "")),
        )

    def to_dict(self) -> Dict[str, Any]:
        sampling = dict(self.sampling)
        if self.schedule:
            sampling["rho_schedule"] = dict(self.schedule)
        data: Dict[str, Any] = {
            "name": self.name,
            "description": self.description,
            "spaces": {"x": self.space.x_space.to_config(), "y": self.space.y_space.to_config()},
            "reference_point": self.reference.to_dict(),
            "mapping": self.mapping.to_config(),
            "phi": self.phi.to_config(),
            "hypotheses": self.hypotheses.to_config(),
        }
        if sampling:
            data["sampling"] = sampling
        if self.overrides:
            data["overrides"] = dict(self.overrides)
        return data

    @classmethod
    def load(cls, path: Path, graph_tol: float = 1e-10) -> "ProblemSpec":
        """Read a spec from a .json, .yaml or .yml file."""
        path = Path(path)
        with open(path, "r") as f:
            if path.suffix.lower() == ".json":
                data = json.load(f)
            else:
                data = yaml.safe_load(f)
        return cls.from_dict(data, graph_tol=graph_tol)

    def save(self, path: Path) -> None:
        path = Path(path)
        with open(path, "w") as f:
            if path.suffix.lower() == ".json":
                json.dump(self.to_dict(), f, sort_keys=True, indent=2)
            else:
                yaml.dump(self.to_dict(), f, default_flow_style=False)


class ProblemLibrary:
	"""Built-in problem specs stored as YAML files."""

	def __init__(self, problems_dir: Path = DEFAULT_PROBLEMS_DIR):
		self.problems_dir = Path(problems_dir)
		self.problems_dir.mkdir(parents=True, exist_ok=True)
		self.problems: Dict[str, Dict[str, Any]] = {}
		self.load_problems()

	def load_problems(self) -> None:
		"""Load every problem spec in the directory; broken files are logged and skipped."""
		for problem_file in sorted(self.problems_dir.glob("*.yaml")):
			try:
				with open(problem_file, 'r') as f:
					data = yaml.safe_load(f)
				name = data.get('name', problem_file.stem)
				self.problems[name] = data
			except Exception as e:
				logger.error(f"Error loading problem {problem_file}: {e}")

	def get_problem(self, name: str, graph_tol: float = 1e-10) -> Optional[ProblemSpec]:
		"""Build the named problem, or None if unknown."""
		data = self.problems.get(name)
		if data is None:
			return None
		return ProblemSpec.from_dict(data, graph_tol=graph_tol)

	def list_problems(self) -> Dict[str, str]:
		"""Problem names and their descriptions."""
		return {name: data.get('description', '') for name, data in sorted(self.problems.items())}

	def save_problem(self, spec: ProblemSpec) -> bool:
		"""Write a spec into the library directory."""
		try:
			file_path = self.problems_dir / f"{spec.name.lower().replace(' ', '_')}.yaml"
			with open(file_path, 'w') as f:
				yaml.dump(spec.to_dict(), f, default_flow_style=False)
			self.problems[spec.name] = spec.to_dict()
			return True
		except Exception as e:
			logger.error(f"Error saving problem: {e}")
			return False


def resolve_problem(reference: str, library: Optional[ProblemLibrary] = None,
                    graph_tol: float = 1e-10) -> ProblemSpec:
	"""A path to a spec file, or the name of a built-in problem."""
	path = Path(reference)
	if path.suffix.lower() in ('.json', '.yaml', '.yml') or path.exists():
		return ProblemSpec.load(path, graph_tol=graph_tol)
	library = library or ProblemLibrary()
	spec = library.get_problem(reference, graph_tol=graph_tol)
	if spec is None:
		raise InputError(f"unknown problem '{reference}'; built-in problems: {sorted(library.problems)}")
	return spec
