# tests/test_spaces.py

import numpy as np
import pytest
from src.geometry.spaces import (
    DualSetKind, DualVectorSet, NormKind, NormedSpaceSpec, ProductPoint, ProductSpace,
    conjugate_exponent, duality_mapping,
)
from src.utils.errors import DimensionMismatchError, InputError

def test_norm_kinds_and_orders():
    """Test that each norm kind evaluates the right norm and dual norm."""
    v = [3.0, -4.0]
    euclidean = NormedSpaceSpec(2)
    maximum = NormedSpaceSpec(2, NormKind.MAX)
    one = NormedSpaceSpec(2, NormKind.P_NORM, p=1.0)

    assert euclidean.norm(v) == pytest.approx(5.0)
    assert maximum.norm(v) == pytest.approx(4.0)
    assert one.norm(v) == pytest.approx(7.0)
    # dual of max is the 1-norm and vice versa
    assert maximum.dual_norm(v) == pytest.approx(7.0)
    assert one.dual_norm(v) == pytest.approx(4.0)

def test_conjugate_exponent():
    """Test the Hölder conjugate pairs."""
    assert conjugate_exponent(1.0) == float("inf")
    assert conjugate_exponent(float("inf")) == 1.0
    assert conjugate_exponent(2.0) == pytest.approx(2.0)
    assert conjugate_exponent(3.0) == pytest.approx(1.5)

def test_space_from_config_round_trip():
    """Test reading a space block and writing it back."""
    space = NormedSpaceSpec.from_config({"dim": 3, "norm": "p_norm", "p": 3})
    assert space.dim == 3
    assert space.norm_kind is NormKind.P_NORM
    assert space.to_config() == {"dim": 3, "norm": "p_norm", "p": 3.0}

def test_invalid_spaces():
    """Test that malformed space descriptions raise input errors."""
    with pytest.raises(InputError):
        NormedSpaceSpec(0)
    with pytest.raises(InputError):
        NormedSpaceSpec(2, "taxicab")
    with pytest.raises(InputError):
        NormedSpaceSpec(2, NormKind.P_NORM)
    with pytest.raises(InputError):
        NormedSpaceSpec(2, NormKind.P_NORM, p=0.5)
    with pytest.raises(InputError):
        NormedSpaceSpec.from_config({"norm": "max"})

def test_conform_rejects_wrong_dimension():
    """Test that vectors of the wrong length are rejected."""
    space = NormedSpaceSpec(2)
    with pytest.raises(DimensionMismatchError):
        space.conform([1.0, 2.0, 3.0])
    assert NormedSpaceSpec(1).conform(2.0).shape == (1,)

def test_rho_metrics():
    """Test d_rho and the sum metric on the product space."""
    space = ProductSpace.euclidean()
    p = ProductPoint([0.0], [0.0])
    q = ProductPoint([1.0], [4.0])

    assert space.rho_dist(p, q, 0.5) == pytest.approx(2.0)
    assert space.rho_dist(p, q, 0.1) == pytest.approx(1.0)
    assert space.rho_sum_dist(p, q, 0.5) == pytest.approx(3.0)
    assert space.rho_dual_norm([1.0], [2.0], 0.5) == pytest.approx(5.0)

def test_rho_must_be_positive():
    """Test that rho = 0 is rejected by every metric."""
    space = ProductSpace.euclidean()
    p = ProductPoint([0.0], [0.0])
    with pytest.raises(InputError):
        space.rho_dist(p, p, 0.0)
    with pytest.raises(InputError):
        space.rho_sum_dist(p, p, -1.0)

def test_duality_mapping():
    """Test the duality mapping for euclidean, max and 1-norms."""
    euclidean = duality_mapping([3.0, 4.0], NormedSpaceSpec(2))
    assert euclidean.kind is DualSetKind.SINGLETON
    assert np.allclose(euclidean.generators[0], [0.6, 0.8])

    maximum = duality_mapping([2.0, -2.0], NormedSpaceSpec(2, NormKind.MAX))
    assert maximum.kind is DualSetKind.POLYTOPE
    assert {tuple(g) for g in maximum.generators} == {(1.0, 0.0), (0.0, -1.0)}

    one = duality_mapping([1.0, 0.0], NormedSpaceSpec(2, NormKind.P_NORM, p=1.0))
    assert {tuple(g) for g in one.generators} == {(1.0, -1.0), (1.0, 1.0)}

    assert duality_mapping([0.0, 0.0], NormedSpaceSpec(2)).kind is DualSetKind.SPHERE_FLAG

def test_dual_vector_set_operations():
    """Test representatives, scaling and enlargement of dual sets."""
    polytope = DualVectorSet.polytope([[1.0, 0.0], [0.0, -1.0]])
    assert np.allclose(polytope.representative(), [0.0, -1.0])

    scaled = polytope.scaled(2.0).enlarged(0.5)
    assert np.allclose(scaled.generators, [[2.0, 0.0], [0.0, -2.0]])
    assert scaled.radius == pytest.approx(0.5)

    with pytest.raises(InputError):
        polytope.scaled(-1.0)
    with pytest.raises(InputError):
        DualVectorSet.empty(2).representative()
