# tests/test_implication_audit.py

import copy

import pytest
from src.criteria.certificates import EdgeStatus
from src.criteria.corpus import random_corpus
from src.criteria.implication_audit import EDGE_TABLES, ImplicationAuditor, audit_implications
from src.mappings.problem_spec import ProblemLibrary, ProblemSpec
from src.slopes.slope_settings import RhoSchedule
from src.utils.performance_monitor import PerformanceMonitor

@pytest.fixture
def library():
    return ProblemLibrary()

@pytest.fixture
def identity_dict(library):
    return copy.deepcopy(library.problems["identity"])

def test_edge_tables():
    """Test that every arrow names conditions of its own corollary."""
    for corollary, edges in EDGE_TABLES.items():
        assert edges
        for edge in edges:
            assert edge.corollary == corollary
            assert edge.label.startswith(f"{corollary}:")
    assert EDGE_TABLES["cor2"][0].label == "cor2:sr=>a"
    assert EDGE_TABLES["cor2"][0].mode == "qualitative"
    assert EDGE_TABLES["cor1"][0].mode == "quantitative"

def test_identity_audit_is_clean(library):
    """Test that F(x) = x violates no arrow and no inequality."""
    report = ImplicationAuditor().audit_instance(library.get_problem("identity"))

    assert report.instance_id == "identity"
    assert report.violations == []
    counts = report.status_counts()
    assert counts["violated"] == 0
    assert counts["consistent"] > 0
    # an affine map is convex, so the arrows needing convexity are evaluated
    assert report.hypotheses["closed_graph"]
    assert report.hypotheses["convex"]
    convex_arrow = [e for e in report.edges if e.edge == "cor3:a=>h"]
    assert convex_arrow
    assert all(e.status not in (EdgeStatus.SKIPPED, EdgeStatus.VIOLATED) for e in convex_arrow)
    checks = {h.check_id: h for h in report.hierarchy}
    assert checks["g:convex_equality_chain"].status is EdgeStatus.CONSISTENT
    assert checks["phi:convex_bound"].status is EdgeStatus.CONSISTENT

def test_convex_checks_on_a_short_schedule(library):
    """Test that limit equalities allow for subdifferential slopes evaluated at a coarse final rho."""
    report = ImplicationAuditor(schedule=RhoSchedule(steps=4)).audit_instance(library.get_problem("identity"))
    checks = {h.check_id: h for h in report.hierarchy}

    for check_id in ("g:convex_equality_chain", "phi:convex_bound"):
        assert checks[check_id].status is EdgeStatus.CONSISTENT, check_id
        assert checks[check_id].tolerance >= 0.125

def test_override_negative_control(identity_dict):
    """Test that forcing the uniform strict slope to zero is caught."""
    identity_dict["overrides"] = {"uniform:g": 0.0}
    report = ImplicationAuditor().audit_instance(ProblemSpec.from_dict(identity_dict))

    assert any(v.startswith("cor1:a=>b") for v in report.violations)
    assert "g:modulus_le_uniform" in report.violations
    assert report.diagnostics == ["overridden quantities: ['uniform:g']"]

def test_random_corpus_matches_enumeration():
    """Test that estimators agree with exhaustive enumeration on random sampled graphs."""
    reports = audit_implications(random_corpus(3, max_points=12, seed=3))

    assert [r.instance_id for r in reports] == ["random-3-000", "random-3-001", "random-3-002"]
    for report in reports:
        oracle_checks = [h for h in report.hierarchy if ":oracle:" in h.check_id]
        assert len(oracle_checks) == 12
        assert all(h.status is EdgeStatus.CONSISTENT for h in oracle_checks), report.instance_id
        enumerated = [e for e in report.edges if e.note.startswith("exhaustive enumeration")]
        assert enumerated
        assert all(e.status is not EdgeStatus.VIOLATED for e in enumerated)
        # a finite graph carries no normal-cone structure
        dual = [h for h in report.hierarchy if h.check_id.endswith("subdiff_eq_limiting")]
        assert all(h.status is EdgeStatus.SKIPPED for h in dual)

def test_sampled_level_effects_are_undetermined():
    """Test that a sample with the modified slope above the uniform one is not counted as a violation."""
    spec = ProblemSpec.from_dict({
        "name": "steep-pair",
        "spaces": {"x": {"dim": 1}, "y": {"dim": 1}},
        "reference_point": {"x": [0.0], "y": [0.0]},
        "mapping": {"variant": "sampled", "samples": [
            {"x": [0.0], "y": [0.0]},
            {"x": [0.1], "y": [0.5]},
        ]},
        "sampling": {"slope_radius": 1.0, "rho_schedule": {"rho_0": 1.0, "steps": 1}},
    })
    report = ImplicationAuditor().audit_instance(spec)
    checks = {h.check_id: h for h in report.hierarchy}

    assert report.violations == []
    for family in ("g", "phi"):
        modified = checks[f"{family}:modified_le_uniform"]
        assert modified.lhs == pytest.approx(5.0)
        assert modified.rhs == pytest.approx(1.0)
        assert modified.status is EdgeStatus.UNDETERMINED
        assert checks[f"{family}:modulus_le_uniform"].status is EdgeStatus.UNDETERMINED
    matched = [e for e in report.edges if e.edge == "cor1:a=>b" and e.source_verdict is not None]
    assert [e.status for e in matched] == [EdgeStatus.UNDETERMINED]
    assert "final level" in matched[0].note

def test_report_to_dict(library):
    """Test the serialized audit report."""
    report = ImplicationAuditor().audit_instance(library.get_problem("identity"))
    data = report.to_dict()

    assert data["instance_id"] == "identity"
    assert data["gammas"] == [0.25, 0.5, 0.9]
    assert data["violations"] == []
    assert set(data["counts"]) == {s.value for s in EdgeStatus}

def test_auditor_records_stages(tmp_path):
    """Test that a monitor receives one stage per instance."""
    monitor = PerformanceMonitor(log_dir=tmp_path)
    auditor = ImplicationAuditor(monitor=monitor)
    auditor.audit_implications(random_corpus(2, max_points=8, seed=1))

    summary = monitor.get_performance_summary()
    assert summary["stages"] == 2
    assert set(summary["durations"]) == {"audit:random-1-000", "audit:random-1-001"}
