# tests/test_exhaustive_oracle.py

from dataclasses import replace

import pytest
from src.criteria.corpus import random_corpus
from src.geometry.spaces import ProductPoint, ProductSpace
from src.mappings.gauges import ModulationFunction, g_from_phi
from src.mappings.problem_spec import ProblemLibrary
from src.mappings.set_valued_map import SampledGraphMap
from src.oracle.exhaustive_oracle import (
    LIMIT_ARROWS, OracleParams, SampleEnumeration, exhaustive_implication_truth, exhaustive_slope,
    finite_level_dominance, oracle_edges, parse_edge,
)
from src.slopes.primal_slopes import PrimalSlopeEstimator
from src.slopes.slope_estimate import INF
from src.slopes.slope_settings import ToleranceSettings
from src.utils.errors import InputError, UnsupportedStructureError

@pytest.fixture
def three_points():
    space = ProductSpace.euclidean()
    origin = ProductPoint([0.0], [0.0])
    return SampledGraphMap(space, origin, [[0.0], [1.0], [-1.0]], [[0.0], [0.5], [1.0]])

@pytest.fixture
def gauge(three_points):
    return g_from_phi(ModulationFunction.identity(), three_points.ybar, three_points.space.y_space)

def test_three_point_modulus(three_points, gauge):
    """Test the enumerated modulus and its attaining point."""
    result = exhaustive_slope("subregularity_modulus", three_points, OracleParams(final_rho=2.0), gauge)

    assert result.value == pytest.approx(0.5)
    assert result.enumerated == 2
    assert result.attaining.to_dict() == {"x": [1.0], "y": [0.5]}

def test_three_point_limit_quantities(three_points, gauge):
    """Test every primal limit quantity of the three-point graph."""
    params = OracleParams(final_rho=2.0)
    for quantity in ("uniform_strict_slope", "error_bound_modulus", "outer_growth_rate"):
        assert exhaustive_slope(quantity, three_points, params, gauge).value == pytest.approx(0.5)
    assert exhaustive_slope("strict_slope", three_points, params, gauge).value == 0.0

def test_empty_admissible_set(three_points, gauge):
    """Test that a limit over no admissible point is +inf with nothing enumerated."""
    result = exhaustive_slope("subregularity_modulus", three_points, OracleParams(final_rho=0.5), gauge)
    assert result.value == INF
    assert result.enumerated == 0
    assert result.attaining is None

def test_pointwise_slopes(three_points, gauge):
    """Test local and nonlocal slopes at a sample point."""
    point = ProductPoint([1.0], [0.5])
    nonlocal_slope = exhaustive_slope("nonlocal_slope", three_points, OracleParams(rho=2.0, point=point), gauge)
    assert nonlocal_slope.value == pytest.approx(0.5)
    assert nonlocal_slope.attaining.to_dict() == {"x": [0.0], "y": [0.0]}

    local = exhaustive_slope("local_slope", three_points, OracleParams(rho=2.0, point=point), gauge)
    assert local.value == 0.0
    assert local.enumerated == 0

    wide = exhaustive_slope("local_slope", three_points,
                            OracleParams(rho=2.0, point=point, slope_radius=1.5), gauge)
    assert wide.value == pytest.approx(0.5)
    assert wide.enumerated == 1

def test_pointwise_slope_needs_point(three_points, gauge):
    """Test that pointwise slopes need a graph point."""
    with pytest.raises(InputError):
        exhaustive_slope("local_slope", three_points, OracleParams(), gauge)
    with pytest.raises(InputError):
        exhaustive_slope("rho_slope", three_points, OracleParams(point=ProductPoint([1.0], [0.0])), gauge)

def test_oracle_rejects_unsupported_input(three_points, gauge):
    """Test unknown quantities, missing gauges and non-sampled graphs."""
    with pytest.raises(InputError):
        exhaustive_slope("steepness", three_points, OracleParams(), gauge)
    with pytest.raises(InputError):
        exhaustive_slope("strict_slope", three_points, OracleParams())
    with pytest.raises(UnsupportedStructureError):
        exhaustive_slope("strict_slope", ProblemLibrary().get_problem("identity"), OracleParams())

def test_parse_edge():
    """Test edge parsing from strings and tuples."""
    assert parse_edge("cor1:d=>e") == ("cor1", "d", "e")
    assert parse_edge(("cor2", "b", "d")) == ("cor2", "b", "d")
    with pytest.raises(InputError):
        parse_edge("cor1-d-e")
    with pytest.raises(InputError):
        parse_edge("cor9:a=>b")

def test_implication_truth(three_points, gauge):
    """Test the truth of a primal edge at one gamma."""
    truth = exhaustive_implication_truth(three_points, "cor1:a=>b", 0.25, OracleParams(final_rho=2.0), gauge)
    assert truth.source and truth.target
    assert truth.consistent
    assert not truth.vacuous

    qualitative = exhaustive_implication_truth(three_points, "cor2:c=>d", 0.9, OracleParams(final_rho=2.0), gauge)
    assert qualitative.gamma == 0.0
    assert not qualitative.source
    assert qualitative.consistent

    with pytest.raises(InputError):
        exhaustive_implication_truth(three_points, "cor1:f=>g", 0.5, OracleParams(), gauge)

def test_oracle_edges_on_random_corpus():
    """Test that oracle edges hold on random graphs wherever the sample decides them."""
    tolerances = ToleranceSettings()
    for spec in random_corpus(8, max_points=20, seed=11):
        params = OracleParams.from_settings(spec.sampling_settings(), spec.rho_schedule(), tolerances)
        enumeration = SampleEnumeration(spec, params)
        for edge in oracle_edges():
            corollary, source, target = parse_edge(edge)
            family = "phi" if corollary in ("cor3", "cor4") else "g"
            dominated = enumeration.dominates(replace(params, family=family, kind=family))
            if (source, target) in LIMIT_ARROWS and not dominated:
                continue
            for gamma in (0.1, 0.5):
                assert exhaustive_implication_truth(spec, edge, gamma, params).consistent, (spec.name, edge, gamma)

@pytest.fixture
def steep_pair():
    """(0.1, 0.5) sits close to the inverse image but far above ybar."""
    space = ProductSpace.euclidean()
    return SampledGraphMap(space, ProductPoint([0.0], [0.0]), [[0.0], [0.1]], [[0.0], [0.5]])

def test_uniform_slope_below_modified_at_a_level(steep_pair):
    """Test that a finite level can put the modified slope and the modulus above the uniform slope."""
    gauge = g_from_phi(ModulationFunction.identity(), steep_pair.ybar, steep_pair.space.y_space)
    params = OracleParams(final_rho=1.0, slope_radius=1.0)
    enumeration = SampleEnumeration(steep_pair, params, gauge)

    assert enumeration.slope("uniform_strict_slope").value == pytest.approx(1.0)
    assert enumeration.slope("modified_strict_slope").value == pytest.approx(5.0)
    assert enumeration.slope("subregularity_modulus").value == pytest.approx(5.0)
    assert not enumeration.dominates()
    assert not exhaustive_implication_truth(steep_pair, "cor1:e=>b", 2.0, params, gauge).consistent

@pytest.fixture
def flat_pair():
    space = ProductSpace.euclidean()
    return SampledGraphMap(space, ProductPoint([0.0], [0.0]), [[0.0], [1.0]], [[0.0], [0.5]])

def test_dominance_condition(three_points, gauge, flat_pair):
    """Test the dominance condition against rho d(y, ybar) <= d(x, F^-1(ybar))."""
    # (-1, 1) is admissible at rho = 2 and 2 * 1 > 1
    assert SampleEnumeration(three_points, OracleParams(final_rho=2.0), gauge).dominates() is False

    flat_gauge = g_from_phi(ModulationFunction.identity(), flat_pair.ybar, flat_pair.space.y_space)
    params = OracleParams(final_rho=1.5)
    assert finite_level_dominance(flat_pair, params, flat_gauge)
    assert not finite_level_dominance(flat_pair, replace(params, metric="sum"), flat_gauge)

    modified = exhaustive_slope("modified_strict_slope", flat_pair, params, flat_gauge).value
    assert modified <= exhaustive_slope("uniform_strict_slope", flat_pair, params, flat_gauge).value

def test_phi_dominance_needs_concave_secants(flat_pair):
    """Test that phi'(t) (t - s) > phi(t) - phi(s) breaks the dominance of the phi-family."""
    concave = g_from_phi(ModulationFunction.holder(0.5), flat_pair.ybar, flat_pair.space.y_space)
    convex = g_from_phi(ModulationFunction.from_table([0.0, 0.5, 1.0], [0.0, 0.25, 1.0]),
                        flat_pair.ybar, flat_pair.space.y_space)
    params = OracleParams(final_rho=1.5, slope_radius=2.0, family="phi", kind="phi")

    assert SampleEnumeration(flat_pair, params, concave).dominates()
    assert not SampleEnumeration(flat_pair, params, convex).dominates()
    assert SampleEnumeration(flat_pair, replace(params, family="g", kind="g"), convex).dominates()

def test_enumeration_is_shared_across_families(three_points, gauge):
    """Test that one enumeration serves several families and matches single evaluations."""
    params = OracleParams(final_rho=2.0)
    enumeration = SampleEnumeration(three_points, params, gauge)
    for family in ("f", "g", "phi"):
        local = replace(params, family=family, kind=family)
        for quantity in ("strict_slope", "uniform_strict_slope", "subregularity_modulus"):
            assert enumeration.slope(quantity, local).value == exhaustive_slope(quantity, three_points, local,
                                                                                gauge).value
    with pytest.raises(InputError):
        enumeration.slope("strict_slope", replace(params, family="h"))

def _estimator_pairs(estimator):
    pairs = {}
    for family in ("f", "g", "phi"):
        for variant, oracle_id in (("strict", "strict_slope"), ("modified", "modified_strict_slope"),
                                   ("uniform", "uniform_strict_slope")):
            pairs[(oracle_id, family)] = estimator.strict_slope(variant, family)
        pairs[("subregularity_modulus", family)] = estimator.subregularity_modulus(family)
    pairs[("error_bound_modulus", "g")] = estimator.error_bound_modulus()
    pairs[("outer_growth_rate", "g")] = estimator.outer_growth_rate()
    return pairs

def test_estimator_matches_enumeration():
    """Test that the vectorized primal estimator equals the enumeration on 100 random graphs."""
    tolerances = ToleranceSettings()
    pointwise = {
        "local_slope": lambda e, p, rho: e.local_slope(p, rho),
        "rho_slope": lambda e, p, rho: e.rho_slope_F(p, rho),
        "nonlocal_slope": lambda e, p, rho: e.nonlocal_slope(p, rho),
    }
    compared = 0
    for spec in random_corpus(100, max_points=20, seed=5):
        sampling, schedule = spec.sampling_settings(), spec.rho_schedule()
        estimator = PrimalSlopeEstimator(spec.mapping, spec.gauge(), sampling, schedule, tolerances)
        params = OracleParams.from_settings(sampling, schedule, tolerances)
        enumeration = SampleEnumeration(spec, params)
        for (oracle_id, family), estimate in _estimator_pairs(estimator).items():
            expected = enumeration.slope(oracle_id, replace(params, family=family, kind=family)).value
            assert estimate.value == expected, (spec.name, oracle_id, family)
            compared += 1

        mapping = spec.mapping
        for i in sorted({0, mapping.size // 2, mapping.size - 1}):
            p = ProductPoint(mapping.xs[i], mapping.ys[i])
            for rho in (schedule.final, 1.0):
                for oracle_id, compute in pointwise.items():
                    expected = enumeration.slope(oracle_id, replace(params, rho=rho, point=p)).value
                    assert compute(estimator, p, rho).value == expected, (spec.name, oracle_id, i, rho)
                    compared += 1
    assert compared > 2000
