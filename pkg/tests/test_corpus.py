# tests/test_corpus.py

import numpy as np
import pytest
import yaml
from src.criteria.corpus import builtin_corpus, load_corpus, random_corpus, random_problem_dict
from src.geometry.spaces import NormedSpaceSpec
from src.mappings.problem_spec import ProblemSpec
from src.utils.errors import InputError

def test_random_problems_are_reproducible():
    """Test that (seed, index) fixes the random graph."""
    assert random_problem_dict(7, 2) == random_problem_dict(7, 2)
    assert random_problem_dict(7, 2) != random_problem_dict(8, 2)
    assert [spec.name for spec in random_corpus(3, seed=7)] == ["random-7-000", "random-7-001", "random-7-002"]

def test_random_problem_size():
    """Test the bounds on the number of samples."""
    for index in range(10):
        data = random_problem_dict(1, index, max_points=8)
        assert 2 <= len(data["mapping"]["samples"]) <= 8
    with pytest.raises(InputError):
        random_problem_dict(1, 0, max_points=3)

def test_random_graph_values():
    """Test that values off the inverse image lie in [0.01, 1] from ybar, unrelated to d(x, F^-1(ybar))."""
    ratios = []
    for index in range(20):
        data = random_problem_dict(3, index, max_points=20)
        x_space = NormedSpaceSpec.from_config(data["spaces"]["x"])
        y_space = NormedSpaceSpec.from_config(data["spaces"]["y"])
        ybar = np.array(data["reference_point"]["y"])
        xs = np.array([s["x"] for s in data["mapping"]["samples"]])
        ys = np.array([s["y"] for s in data["mapping"]["samples"]])
        t = y_space.norms(ys - ybar)
        inverse = xs[t == 0]
        assert inverse.shape[0] >= 1
        for x, ty in zip(xs[t > 0], t[t > 0]):
            assert 0.01 - 1e-9 <= ty <= 1.0 + 1e-9
            ratios.append(ty / np.min(x_space.norms(x[None, :] - inverse)))
    assert max(ratios) > 1.0
    assert min(ratios) < 0.05

def test_random_problems_build():
    """Test that random specs build into sampled graphs with their own schedule."""
    for spec in random_corpus(5, max_points=12, seed=4):
        assert spec.mapping.variant == "sampled"
        assert spec.mapping.contains(spec.reference)
        assert spec.rho_schedule().final == pytest.approx(0.25)
        assert spec.sampling_settings().slope_radius == 0.25

def test_builtin_corpus():
    """Test that the built-in corpus holds every library problem."""
    names = [spec.name for spec in builtin_corpus()]
    assert "identity" in names
    assert "cos_example" in names
    assert len(names) == 7

def test_load_corpus_directory(tmp_path):
    """Test loading every spec file of a directory."""
    for i in range(2):
        ProblemSpec.from_dict(random_problem_dict(2, i, max_points=6)).save(tmp_path / f"p{i}.yaml")
    (tmp_path / "notes.txt").write_text("not a spec")

    specs = load_corpus(tmp_path)
    assert [spec.name for spec in specs] == ["random-2-000", "random-2-001"]

def test_load_corpus_file(tmp_path):
    """Test a corpus file mixing names, relative paths, inline specs and a random block."""
    ProblemSpec.from_dict(random_problem_dict(5, 0, max_points=6)).save(tmp_path / "local.yaml")
    corpus = {
        "instances": ["identity", "local.yaml", random_problem_dict(6, 0, max_points=6)],
        "random": {"count": 2, "max_points": 6, "seed": 9},
    }
    path = tmp_path / "corpus.yaml"
    path.write_text(yaml.safe_dump(corpus))

    names = [spec.name for spec in load_corpus(path)]
    assert names == ["identity", "random-5-000", "random-6-000", "random-9-000", "random-9-001"]

def test_load_corpus_single_spec(tmp_path):
    """Test that a plain spec file is a corpus of one."""
    path = tmp_path / "one.yaml"
    ProblemSpec.from_dict(random_problem_dict(1, 1, max_points=6)).save(path)
    assert [spec.name for spec in load_corpus(path)] == ["random-1-001"]

def test_load_corpus_missing_file(tmp_path):
    """Test that a missing corpus file is an input error."""
    with pytest.raises(InputError):
        load_corpus(tmp_path / "missing.yaml")
