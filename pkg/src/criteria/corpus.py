"""Problem corpora for the implication audit.

The built-in corpus is the problem library; the random corpus draws finite
sampled graphs with a seeded generator. Off the inverse image, every sampled
value lies in a random direction from ybar at a log-uniform distance in
[0.01, 1], independent of x.
"""
from __future__ import annotations

import logging
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import yaml

from src.geometry.spaces import NormedSpaceSpec
from src.mappings.problem_spec import ProblemLibrary, ProblemSpec, resolve_problem
from src.utils.errors import InputError

logger = logging.getLogger(__name__)

NORM_CHOICES = ({"norm": "euclidean"}, {"norm": "max"}, {"norm": "p_norm", "p": 1.0})
PHI_CHOICES = ({"kind": "identity"}, {"kind": "holder", "q": 0.5}, {"kind": "holder", "q": 0.75})

# sampling and schedule of the random graphs; the schedule ends at rho = 0.25
RANDOM_SAMPLING = {"slope_radius": 0.25, "radius": 1.0}
RANDOM_SCHEDULE = {"rho_0": 1.0, "factor": 0.5, "steps": 3}


def builtin_corpus(library: Optional[ProblemLibrary] = None) -> List[ProblemSpec]:
    """Every problem of the library; broken entries are logged and left out."""
    library = library or ProblemLibrary()
    specs = []
    for name in library.list_problems():
        try:
            specs.append(library.get_problem(name))
        except InputError as e:
            logger.error(f"Error building problem {name}: {e}")
    return specs


def _unit(rng: np.random.Generator, space: NormedSpaceSpec) -> np.ndarray:
    while True:
        v = rng.normal(size=space.dim)
        n = space.norm(v)
        if n > 1e-3:
            return v / n


def random_problem_dict(seed: int, index: int, max_points: int = 50) -> Dict[str, Any]:
    """Spec dictionary of one random sampled graph, reproducible from (seed, index)."""
    if max_points < 4:
        raise InputError(f"max_points must be at least 4, got {max_points}")
    rng = np.random.default_rng([seed, index])
    x_config = {"dim": int(rng.integers(1, 3)), **NORM_CHOICES[int(rng.integers(len(NORM_CHOICES)))]}
    y_config = {"dim": int(rng.integers(1, 3)), **NORM_CHOICES[int(rng.integers(len(NORM_CHOICES)))]}
    x_space, y_space = NormedSpaceSpec.from_config(x_config), NormedSpaceSpec.from_config(y_config)

    xbar = np.zeros(x_space.dim)
    ybar = np.round(rng.uniform(-1.0, 1.0, y_space.dim), 3)
    count = int(rng.integers(4, max_points + 1))
    xs = np.unique(np.round(rng.uniform(-0.5, 0.5, (count, x_space.dim)), 4), axis=0)
    xs = xs[x_space.norms(xs - xbar) > 0]
    rng.shuffle(xs)

    inverse = np.vstack([xbar[None, :], xs[:int(rng.integers(0, 3))]])
    samples = [{"x": x.tolist(), "y": ybar.tolist()} for x in inverse]
    remaining = max_points - len(samples)
    for x in xs[inverse.shape[0] - 1:]:
        if remaining <= 0:
            break
        values = 2 if rng.random() < 0.2 and remaining >= 2 else 1
        for _ in range(values):
            y = ybar + 10.0 ** rng.uniform(-2.0, 0.0) * _unit(rng, y_space)
            samples.append({"x": x.tolist(), "y": y.tolist()})
            remaining -= 1

    return {
        "name": f"random-{seed}-{index:03d}",
        "description": "random finite sampled graph",
        "spaces": {"x": x_config, "y": y_config},
        "reference_point": {"x": xbar.tolist(), "y": ybar.tolist()},
        "mapping": {"variant": "sampled", "samples": samples},
        "phi": dict(PHI_CHOICES[int(rng.integers(len(PHI_CHOICES)))]),
        "hypotheses": {"convex": False, "closed_graph": False},
        "sampling": {**RANDOM_SAMPLING, "rho_schedule": dict(RANDOM_SCHEDULE)},
    }


def random_corpus(count: int, max_points: int = 50, seed: int = 0) -> List[ProblemSpec]:
    """``count`` random sampled graphs, reproducible from ``seed``."""
    return [ProblemSpec.from_dict(random_problem_dict(seed, i, max_points)) for i in range(count)]


def load_corpus(path: Path, library: Optional[ProblemLibrary] = None) -> List[ProblemSpec]:
    """A directory of spec files, or a YAML corpus file.

    A corpus file lists ``instances`` (built-in names, spec paths relative to
    the file, or inline specs) and an optional ``random`` block with
    ``count``, ``max_points`` and ``seed``.
    """
    path = Path(path)
    if path.is_dir():
        files = sorted(p for p in path.iterdir() if p.suffix.lower() in (".yaml", ".yml", ".json"))
        return [ProblemSpec.load(p) for p in files]
    if not path.exists():
        raise InputError(f"corpus file {path} does not exist")
    with open(path, "r") as f:
        data = yaml.safe_load(f) or {}
    if "instances" not in data and "random" not in data:
        # a single problem spec
        return [ProblemSpec.from_dict(data)]
    specs = []
    for entry in data.get("instances") or []:
        if isinstance(entry, dict):
            specs.append(ProblemSpec.from_dict(entry))
        else:
            candidate = path.parent / str(entry)
            specs.append(resolve_problem(str(candidate) if candidate.exists() else str(entry), library))
    block = data.get("random")
    if block:
        specs += random_corpus(int(block.get("count", 0)), int(block.get("max_points", 50)),
                               int(block.get("seed", 0)))
    return specs
