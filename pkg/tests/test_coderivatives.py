# tests/test_coderivatives.py

import numpy as np
import pytest
from src.geometry.spaces import DualSetKind, DualVectorSet, NormedSpaceSpec, ProductPoint, ProductSpace
from src.mappings.convex_graph import ConvexPolyhedralGraphMap
from src.mappings.set_valued_map import SampledGraphMap
from src.mappings.smooth_library import build_smooth_map
from src.slopes.coderivatives import (
    coderivative, coderivative_residual, directional_moduli, interval_min_norm,
    min_norm_coderivative, normal_cone, require_dual_structure,
)
from src.utils.errors import InputError, UnsupportedStructureError

@pytest.fixture
def space():
    return ProductSpace.euclidean()

@pytest.fixture
def origin():
    return ProductPoint([0.0], [0.0])

@pytest.fixture
def identity(space, origin):
    return build_smooth_map({"kind": "identity"}, space, origin)

@pytest.fixture
def abs_epigraph(space, origin):
    return ConvexPolyhedralGraphMap(space, origin, [([1.0, -1.0], 0.0), ([-1.0, -1.0], 0.0)])

@pytest.fixture
def three_points(space, origin):
    return SampledGraphMap(space, origin, [[0.0], [1.0], [-1.0]], [[0.0], [0.5], [1.0]])

def _rows(dual_set):
    return sorted(tuple(row) for row in np.round(dual_set.generators, 12).tolist())

def test_smooth_normal_cone(identity, origin):
    """Test that the normal cone of F(x) = x is the line spanned by (1, -1)."""
    cone = normal_cone(identity, origin)
    assert cone.kind is DualSetKind.CONE_FACE
    assert _rows(cone) == [(-1.0, 1.0), (1.0, -1.0)]

def test_polyhedral_normal_cone(abs_epigraph, origin):
    """Test the normal cone of the epigraph of |x| at the kink and inside."""
    cone = normal_cone(abs_epigraph, origin)
    assert _rows(cone) == [(-1.0, -1.0), (1.0, -1.0)]

    interior = normal_cone(abs_epigraph, ProductPoint([0.5], [1.0]))
    assert interior.kind is DualSetKind.SINGLETON
    assert np.allclose(interior.generators, [[0.0, 0.0]])

def test_sampled_normal_candidates(three_points, origin):
    """Test the shrinking-quotient test on a finite graph."""
    cone = normal_cone(three_points, origin, radius=2.0)
    assert np.all(cone.scores <= 1e-2)
    assert np.any(np.all(np.isclose(cone.generators, [0.0, -1.0]), axis=1))
    assert not np.any(np.all(np.isclose(cone.generators, [1.0, 0.0]), axis=1))

    lonely = normal_cone(three_points, origin, radius=0.1)
    assert lonely.generators.shape[0] == 32
    assert lonely.notes

def test_smooth_coderivative(space, origin):
    """Test D*F(x)(y*) = J^T y* for a smooth map."""
    square = build_smooth_map({"kind": "power", "exponent": 2.0, "coefficient": 3.0}, space, origin)
    image = coderivative(square, ProductPoint([1.0], [3.0]), DualVectorSet.singleton([0.5]))
    assert image.kind is DualSetKind.SINGLETON
    assert np.allclose(image.generators, [[3.0]])

def test_polyhedral_coderivative(abs_epigraph, origin):
    """Test the coderivative of the epigraph of |x| at the kink."""
    image = coderivative(abs_epigraph, origin, DualVectorSet.singleton([1.0]))
    assert _rows(image) == [(-1.0,), (1.0,)]

    assert coderivative(abs_epigraph, origin, DualVectorSet.singleton([-1.0])).is_empty

    edge = coderivative(abs_epigraph, ProductPoint([0.5], [0.5]), DualVectorSet.singleton([1.0]))
    assert np.allclose(edge.generators, [[1.0]])

    inside = ProductPoint([0.5], [1.0])
    assert coderivative(abs_epigraph, inside, DualVectorSet.singleton([1.0])).is_empty
    assert np.allclose(coderivative(abs_epigraph, inside, DualVectorSet.singleton([0.0])).generators, [[0.0]])

def test_coderivative_rejects_bad_input(identity, three_points, origin):
    """Test sampled graphs, wrong dimensions and unbounded inputs."""
    with pytest.raises(UnsupportedStructureError):
        coderivative(three_points, origin, DualVectorSet.singleton([1.0]))
    with pytest.raises(UnsupportedStructureError):
        require_dual_structure(three_points)
    with pytest.raises(InputError):
        coderivative(identity, origin, DualVectorSet.singleton([1.0, 0.0]))
    with pytest.raises(InputError):
        coderivative(identity, origin, DualVectorSet.sphere(1))

def test_coderivative_residual(identity, abs_epigraph, origin):
    """Test the distance of (x*, -y*) from the normal cone."""
    assert coderivative_residual(identity, origin, [1.0], [1.0]) == pytest.approx(0.0)
    assert coderivative_residual(identity, origin, [2.0], [1.0]) == pytest.approx(1.0)
    assert coderivative_residual(abs_epigraph, origin, [0.5], [1.0]) == pytest.approx(0.0, abs=1e-12)
    assert coderivative_residual(abs_epigraph, origin, [0.0], [-1.0]) == pytest.approx(1.0)

def test_interval_min_norm():
    """Test the closed form of inf |w| m(w) over an interval of y*."""
    value, w = interval_min_norm(np.array([0.5, -1.0, -1.0]), np.array([1.0, -0.5, 1.0]),
                                 np.array([2.0, 2.0, 2.0]), np.array([3.0, 3.0, 3.0]))
    assert np.allclose(value, [1.0, 1.5, 0.0])
    assert np.allclose(w, [0.5, -0.5, 0.0])

    blocked, _ = interval_min_norm(np.array([0.5]), np.array([1.0]), np.array([np.inf]), np.array([1.0]))
    assert blocked[0] == np.inf

def test_interval_min_norm_open_ball():
    """Test that an open interval touching zero only contains zero in the closure."""
    closed, _ = interval_min_norm(np.array([0.0]), np.array([1.0]), np.array([2.0]), np.array([2.0]))
    opened, _ = interval_min_norm(np.array([0.0]), np.array([1.0]), np.array([np.inf]), np.array([2.0]),
                                  open_ball=True)
    assert closed[0] == 0.0
    assert opened[0] == np.inf

def test_directional_moduli(identity, abs_epigraph):
    """Test the smallest coderivative elements at y* = +1 and y* = -1."""
    smooth = directional_moduli(identity, np.array([[0.3]]), np.array([[0.3]]))
    assert smooth.m_plus[0] == pytest.approx(1.0)
    assert smooth.m_minus[0] == pytest.approx(1.0)
    assert np.allclose(smooth.element(np.array([2.0, -1.0, 0.0])), [[2.0], [-1.0], [0.0]])

    convex = directional_moduli(abs_epigraph, np.array([[0.5], [0.0]]), np.array([[0.5], [0.0]]))
    assert convex.m_plus[0] == pytest.approx(1.0)
    assert convex.m_minus[0] == np.inf
    assert convex.m_plus[1] == pytest.approx(0.0, abs=1e-9)
    assert convex.m_minus[1] == np.inf

def test_min_norm_coderivative(identity, abs_epigraph, origin):
    """Test minimum-norm coderivative elements over an enlarged y* set."""
    result = min_norm_coderivative(identity, origin, np.array([[1.0]]), 0.5)
    assert result.feasible
    assert result.value == pytest.approx(0.5)

    blocked = min_norm_coderivative(abs_epigraph, origin, np.array([[-1.0]]), 0.5)
    assert not blocked.feasible
    assert blocked.value == np.inf

def test_sampled_normal_scores(three_points, origin):
    """Test that each kept direction scores its worst quotient over the nearby samples."""
    cone = normal_cone(three_points, origin, radius=2.0)
    diffs = np.array([[1.0, 0.5], [-1.0, 1.0]])
    units = diffs / np.linalg.norm(diffs, axis=1)[:, None]

    assert cone.scores.shape == (cone.generators.shape[0],)
    assert np.allclose(cone.scores, np.max(units @ cone.generators.T, axis=0))
    down = np.flatnonzero(np.all(np.isclose(cone.generators, [0.0, -1.0]), axis=1))
    assert cone.scores[down[0]] == pytest.approx(-1.0 / np.sqrt(5.0))

def test_sampled_normal_cone_collapses_to_zero(space, origin):
    """Test that a graph surrounding the point leaves only the zero normal."""
    mapping = SampledGraphMap(space, origin, [[0.0], [1.0], [1.0], [-1.0], [-1.0]],
                              [[0.0], [1.0], [-1.0], [1.0], [-1.0]])
    cone = normal_cone(mapping, origin, radius=2.0)

    assert cone.kind is DualSetKind.SINGLETON
    assert np.allclose(cone.generators, [[0.0, 0.0]])
    assert "only the zero normal remains" in cone.notes[0]

def test_min_norm_with_l1_dual_ball():
    """Test the linear program when the dual ball on Y is the l1 ball."""
    space = ProductSpace(NormedSpaceSpec(1), NormedSpaceSpec(2, "max"))
    origin = ProductPoint([0.0], [0.0, 0.0])
    mapping = build_smooth_map({"kind": "linear", "A": [[1.0], [2.0]]}, space, origin)
    result = min_norm_coderivative(mapping, origin, np.array([[1.0, 0.0]]), 0.25)

    # y* = (1, -0.25) is the best l1 move; a box ball would reach 0.25
    assert result.feasible
    assert result.value == pytest.approx(0.5, abs=1e-7)
    assert np.allclose(result.ystar, [1.0, -0.25], atol=1e-7)

def test_min_norm_slsqp_infeasible():
    """Test that SLSQP reports +inf when no normal reaches the enlarged center."""
    space = ProductSpace.euclidean(1, 2)
    origin = ProductPoint([0.0], [0.0, 0.0])
    mapping = ConvexPolyhedralGraphMap(space, origin, [([1.0, -1.0, 0.0], 0.0), ([-1.0, -1.0, 0.0], 0.0)])
    result = min_norm_coderivative(mapping, origin, np.array([[0.0, 1.0]]), 0.5)

    assert not result.feasible
    assert result.value == np.inf
