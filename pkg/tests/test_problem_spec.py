# tests/test_problem_spec.py

import pytest
import yaml
from src.mappings.problem_spec import ProblemLibrary, ProblemSpec, resolve_problem
from src.slopes.slope_settings import RhoSchedule, SamplingSettings
from src.utils.errors import InputError

@pytest.fixture
def sampled_dict():
    return {
        "name": "three-points",
        "spaces": {"x": {"dim": 1, "norm": "euclidean"}, "y": {"dim": 1, "norm": "max"}},
        "reference_point": {"x": [0.0], "y": [0.0]},
        "mapping": {"variant": "sampled", "samples": [
            {"x": [0.0], "y": [0.0]},
            {"x": [1.0], "y": [0.5]},
            {"x": [-1.0], "y": [0.25]},
        ]},
        "phi": {"kind": "holder", "q": 0.5},
        "sampling": {"radius": 2.0, "rho_schedule": {"steps": 3}},
        "overrides": {"modulus:g": 0.0},
    }

def test_spec_from_dict(sampled_dict):
    """Test building a sampled problem from a spec dictionary."""
    spec = ProblemSpec.from_dict(sampled_dict)

    assert spec.name == "three-points"
    assert spec.mapping.variant == "sampled"
    assert spec.phi.holder_exponent == 0.5
    assert spec.hypotheses.closed_graph is False
    assert spec.hypotheses.convex is False
    assert spec.overrides == {"modulus:g": 0.0}
    assert spec.schedule == {"steps": 3}
    assert spec.gauge().value([0.25]) == pytest.approx(0.5)
    assert spec.distance_gauge().value([0.25]) == pytest.approx(0.25)

def test_spec_missing_blocks(sampled_dict):
    """Test that each required block is checked."""
    for key in ("spaces", "mapping", "reference_point"):
        broken = dict(sampled_dict)
        del broken[key]
        with pytest.raises(InputError) as exc_info:
            ProblemSpec.from_dict(broken)
        assert key in str(exc_info.value)

    with pytest.raises(InputError):
        ProblemSpec.from_dict([1, 2, 3])

def test_unknown_mapping_variant(sampled_dict):
    """Test that an unknown mapping variant is rejected."""
    sampled_dict["mapping"] = {"variant": "spline"}
    with pytest.raises(InputError):
        ProblemSpec.from_dict(sampled_dict)

def test_settings_precedence(sampled_dict):
    """Test that flags override the spec block, which overrides the configuration."""
    spec = ProblemSpec.from_dict(sampled_dict)
    base = SamplingSettings(radius=0.5, resolution=11)

    merged = spec.sampling_settings(base)
    assert merged.radius == 2.0
    assert merged.resolution == 11

    flagged = spec.sampling_settings(base, {"radius": 3.0, "resolution": None})
    assert flagged.radius == 3.0
    assert flagged.resolution == 11

    schedule = spec.rho_schedule(RhoSchedule(rho_0=2.0, steps=8), {"factor": 0.25})
    assert schedule.rho_0 == 2.0
    assert schedule.steps == 3
    assert schedule.factor == 0.25

def test_spec_save_and_load(sampled_dict, tmp_path):
    """Test writing a spec to YAML and JSON and reading it back."""
    spec = ProblemSpec.from_dict(sampled_dict)
    for suffix in (".yaml", ".json"):
        path = tmp_path / f"problem{suffix}"
        spec.save(path)
        loaded = ProblemSpec.load(path)
        assert loaded.name == spec.name
        assert loaded.mapping.size == 3
        assert loaded.schedule == {"steps": 3}
        assert loaded.to_dict() == spec.to_dict()

def test_library_loads_builtin_problems():
    """Test that the built-in problems are available by name."""
    library = ProblemLibrary()
    names = library.list_problems()

    for name in ("cos_example", "identity", "parabola", "parabola_sqrt",
                 "abs_epigraph", "parabola_epigraph", "constant"):
        assert name in names
    cos = library.get_problem("cos_example")
    assert cos.phi.name == "arccos_branch"
    assert cos.hypotheses.closed_graph
    assert library.get_problem("missing") is None

def test_library_skips_broken_files(tmp_path):
    """Test that unreadable problem files are skipped."""
    (tmp_path / "good.yaml").write_text(yaml.dump({"name": "good", "spaces": {}}))
    (tmp_path / "bad.yaml").write_text("name: [unclosed")
    library = ProblemLibrary(tmp_path)
    assert list(library.problems) == ["good"]

def test_library_save_problem(sampled_dict, tmp_path):
    """Test storing a new problem in the library."""
    library = ProblemLibrary(tmp_path)
    assert library.save_problem(ProblemSpec.from_dict(sampled_dict))
    assert (tmp_path / "three-points.yaml").exists()
    assert "three-points" in ProblemLibrary(tmp_path).problems

def test_resolve_problem(sampled_dict, tmp_path):
    """Test resolving a path or a built-in name."""
    path = tmp_path / "p.yaml"
    ProblemSpec.from_dict(sampled_dict).save(path)

    assert resolve_problem(str(path)).name == "three-points"
    assert resolve_problem("identity").name == "identity"
    with pytest.raises(InputError) as exc_info:
        resolve_problem("no_such_problem")
    assert "no_such_problem" in str(exc_info.value)
    with pytest.raises(OSError):
        resolve_problem(str(tmp_path / "missing.yaml"))
