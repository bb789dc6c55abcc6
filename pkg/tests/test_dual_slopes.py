# tests/test_dual_slopes.py

import numpy as np
import pytest
from src.geometry.spaces import ProductPoint, ProductSpace
from src.mappings.convex_graph import ConvexPolyhedralGraphMap
from src.mappings.gauges import ModulationFunction, g_from_phi
from src.mappings.lifted_function import lift
from src.mappings.set_valued_map import SampledGraphMap
from src.mappings.smooth_library import build_smooth_map
from src.slopes.dual_slopes import DualSlopeEstimator
from src.slopes.slope_settings import RhoSchedule, SamplingSettings
from src.utils.errors import DomainError, InputError, UnsupportedStructureError

@pytest.fixture
def space():
    return ProductSpace.euclidean()

@pytest.fixture
def origin():
    return ProductPoint([0.0], [0.0])

@pytest.fixture
def identity_estimator(space, origin):
    mapping = build_smooth_map({"kind": "identity"}, space, origin)
    gauge = g_from_phi(ModulationFunction.identity(), origin.y, space.y_space)
    return DualSlopeEstimator(mapping, gauge, SamplingSettings(resolution=201), RhoSchedule(steps=4))

@pytest.fixture
def sqrt_estimator(space, origin):
    """F(x) = x with g(y) = sqrt|y|."""
    mapping = build_smooth_map({"kind": "identity"}, space, origin)
    gauge = g_from_phi(ModulationFunction.holder(0.5), origin.y, space.y_space)
    return DualSlopeEstimator(mapping, gauge, SamplingSettings(resolution=201), RhoSchedule(steps=4))

@pytest.fixture
def abs_estimator(space, origin):
    mapping = ConvexPolyhedralGraphMap(space, origin, [([1.0, -1.0], 0.0), ([-1.0, -1.0], 0.0)])
    gauge = g_from_phi(ModulationFunction.identity(), origin.y, space.y_space)
    return DualSlopeEstimator(mapping, gauge, SamplingSettings(resolution=101), RhoSchedule(steps=4))

def test_sampled_graph_is_unsupported(space, origin):
    """Test that dual slopes refuse finite graphs."""
    mapping = SampledGraphMap(space, origin, [[0.0], [1.0]], [[0.0], [0.5]])
    gauge = g_from_phi(ModulationFunction.identity(), origin.y, space.y_space)
    with pytest.raises(UnsupportedStructureError):
        DualSlopeEstimator(mapping, gauge)

def test_g_subdiff_rho_slope(identity_estimator):
    """Test that the (g, rho)-slope of F(x) = x at y > 0 is 1 - rho."""
    estimate = identity_estimator.g_subdiff_rho_slope(ProductPoint([0.5], [0.5]), 0.25)
    assert estimate.value == pytest.approx(0.75)
    assert np.allclose(estimate.dual_witness["ystar"], [0.75])
    assert np.allclose(estimate.dual_witness["xstar"], [0.75])

    negative = identity_estimator.g_subdiff_rho_slope(ProductPoint([-0.5], [-0.5]), 0.25)
    assert negative.value == pytest.approx(0.75)
    assert np.allclose(negative.dual_witness["xstar"], [-0.75])

def test_g_subdiff_rho_slope_at_reference_fiber(identity_estimator, origin):
    """Test that y = ybar admits y* = 0."""
    estimate = identity_estimator.g_subdiff_rho_slope(origin, 0.25)
    assert estimate.value == 0.0
    assert estimate.diagnostics

def test_approximate_g_subdiff_rho_slope(identity_estimator):
    """Test the approximate slope and its ring levels."""
    estimate = identity_estimator.g_subdiff_rho_slope(ProductPoint([0.5], [0.5]), 0.25, approximate=True)
    assert estimate.value == pytest.approx(0.75)
    assert len(estimate.trajectory) == identity_estimator.sampling.nesting_levels + 1

def test_subdiff_rho_slope_f(identity_estimator):
    """Test the open-ball slope of the lifted function."""
    f = lift(identity_estimator.mapping, identity_estimator.gauge)
    p = ProductPoint([0.5], [0.5])

    assert identity_estimator.subdiff_rho_slope_f(f, p, 0.25).value == pytest.approx(0.75)
    assert identity_estimator.subdiff_rho_slope_f(f, p, 1.5).value == 0.0
    with pytest.raises(InputError):
        identity_estimator.subdiff_rho_slope_f(f, ProductPoint([0.5], [0.0]), 0.25)
    with pytest.raises(InputError):
        identity_estimator.subdiff_rho_slope_f(f, p, 0.0)

def test_phi_subdiff_rho_slope(sqrt_estimator):
    """Test that the scaled and g-form slopes agree for g = sqrt|y|."""
    estimate = sqrt_estimator.phi_subdiff_rho_slope(ProductPoint([1.0], [1.0]), 0.25)

    assert estimate.value == pytest.approx(0.75)
    assert estimate.components["phi_derivative"] == pytest.approx(0.5)
    assert estimate.components["scaled"] == pytest.approx(0.25)
    assert estimate.components["g_slope"] == pytest.approx(0.25)
    assert not estimate.diagnostics

def test_phi_subdiff_rho_slope_needs_y_off_ybar(sqrt_estimator, origin):
    """Test that the phi-family slope is undefined on the reference fiber."""
    with pytest.raises(DomainError):
        sqrt_estimator.phi_subdiff_rho_slope(origin, 0.25)

def test_identity_strict_subdiff_slopes(identity_estimator):
    """Test the strict subdifferential slopes of F(x) = x at the final rho."""
    assert identity_estimator.strict_subdiff_slope("g", "plain").value == pytest.approx(0.875)
    assert identity_estimator.strict_subdiff_slope("g", "approximate").value == pytest.approx(0.875)
    assert identity_estimator.strict_subdiff_slope("g", "modified").value == pytest.approx(1.0)
    assert identity_estimator.strict_subdiff_slope("f", "plain").value == pytest.approx(0.875)

    phi_slope = identity_estimator.strict_subdiff_slope("phi", "plain", xi_free=True)
    assert phi_slope.value == pytest.approx(0.875)
    assert phi_slope.dual_witness

def test_abs_epigraph_strict_subdiff_slope(abs_estimator):
    """Test that the boundary of the epigraph of |x| carries the infimum."""
    plain = abs_estimator.strict_subdiff_slope("g", "plain")
    assert plain.value == pytest.approx(0.875)
    assert abs(plain.witness.y[0]) == pytest.approx(abs(plain.witness.x[0]))
    assert abs_estimator.strict_subdiff_slope("g", "modified").value == pytest.approx(1.0)

def test_strict_subdiff_slope_rejects_bad_variants(identity_estimator):
    """Test unknown kinds and variants, and the family restrictions."""
    with pytest.raises(InputError):
        identity_estimator.strict_subdiff_slope("h", "plain")
    with pytest.raises(InputError):
        identity_estimator.strict_subdiff_slope("g", "lazy")
    with pytest.raises(InputError):
        identity_estimator.strict_subdiff_slope("f", "approximate")
    with pytest.raises(InputError):
        identity_estimator.strict_subdiff_slope("g", "plain", xi_free=True)

def test_limiting_outer_coderivative(space, origin):
    """Test the limit pairs of F(x) = x along the admissible sequences."""
    mapping = build_smooth_map({"kind": "identity"}, space, origin)
    gauge = g_from_phi(ModulationFunction.identity(), origin.y, space.y_space)
    estimator = DualSlopeEstimator(mapping, gauge, SamplingSettings(resolution=201), RhoSchedule(steps=5))
    sample = estimator.limiting_outer_coderivative("g")

    assert len(sample.pairs) == 2
    assert np.allclose(sample.pairs[0].ystar, [-1.0])
    assert np.allclose(sample.pairs[0].xstar, [-0.9375])
    assert sample.inf_norm.value == pytest.approx(0.9375)
    assert sample.inf_norm.lower == pytest.approx(0.5)
    assert not sample.zero_branch
    assert not sample.kernel_contains_zero
    assert not sample.is_empty
    assert all(term.residual == pytest.approx(0.0, abs=1e-12) for term in sample.pairs[0].sequence)

    data = sample.to_dict()
    assert data["kind"] == "g"
    assert len(data["pairs"]) == 2

def test_limiting_outer_coderivative_kinds(identity_estimator):
    """Test the phi kind, the approximate note and unknown kinds."""
    sample = identity_estimator.limiting_outer_coderivative("phi", approximate=True)
    assert sample.kind == "phi"
    assert sample.notes
    with pytest.raises(InputError):
        identity_estimator.limiting_outer_coderivative("f")
