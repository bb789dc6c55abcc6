# tests/test_gauges.py

import numpy as np
import pytest
from src.geometry.spaces import NormedSpaceSpec
from src.mappings.gauges import ModulationFunction, g_from_phi, vartheta, vartheta_profile
from src.utils.errors import DomainError, InputError, InvariantViolationError

def test_identity_phi():
    """Test the identity modulation function."""
    phi = ModulationFunction.identity()
    assert phi.value(0.3) == pytest.approx(0.3)
    assert phi.derivative(0.0) == pytest.approx(1.0)
    assert phi.xi(0.7) == pytest.approx(1.0)
    assert vartheta(phi) == 1.0

def test_holder_phi():
    """Test t**q with its infinite derivative at 0."""
    phi = ModulationFunction.holder(0.5)
    assert phi.value(0.25) == pytest.approx(0.5)
    assert phi.derivative(0.25) == pytest.approx(1.0)
    assert phi.derivative(0.0) == float("inf")
    assert vartheta(phi) == 0.5

def test_holder_exponent_range():
    """Test that exponents outside (0, 1] are rejected."""
    with pytest.raises(InputError):
        ModulationFunction.holder(0.0)
    with pytest.raises(InputError):
        ModulationFunction.holder(1.5)

def test_arccos_branch():
    """Test the arccos branch and its linear continuation."""
    phi = ModulationFunction.arccos_branch()
    assert phi.value(0.25) == pytest.approx(np.arccos(0.75))
    assert phi.value(0.5) == pytest.approx(np.pi / 3.0)
    assert phi.value(1.0) == pytest.approx(np.pi / 3.0 + 1.0 / np.sqrt(3.0))
    assert phi.derivative(1.0) == pytest.approx(2.0 / np.sqrt(3.0))
    # t phi'(t) / phi(t) -> 1/2 as t -> 0
    assert vartheta(phi) == pytest.approx(0.5, abs=1e-3)

def test_phi_rejects_negative_arguments():
    """Test that phi is only defined on R+."""
    phi = ModulationFunction.identity()
    with pytest.raises(DomainError):
        phi.value(-1.0)
    with pytest.raises(DomainError):
        phi.derivative(np.array([0.5, -0.5]))

def test_table_phi():
    """Test a tabulated phi and its validation."""
    phi = ModulationFunction.from_table([0.0, 0.5, 1.0], [0.0, 0.5, 1.0])
    assert phi.value(0.25) == pytest.approx(0.25)
    assert phi.value(2.0) == pytest.approx(2.0)

    with pytest.raises(InvariantViolationError):
        ModulationFunction.from_table([0.0, 1.0], [0.1, 1.0])
    with pytest.raises(InvariantViolationError):
        ModulationFunction.from_table([0.0, 1.0, 2.0], [0.0, 1.0, 1.0])

def test_phi_from_config():
    """Test building phi from spec blocks."""
    assert ModulationFunction.from_config(None).name == "identity"
    assert ModulationFunction.from_config({"kind": "holder", "q": 0.75}).holder_exponent == 0.75
    assert ModulationFunction.from_config({"kind": "holder", "q": 0.75}).to_config() == {"kind": "holder", "q": 0.75}
    with pytest.raises(InputError):
        ModulationFunction.from_config({"kind": "holder"})
    with pytest.raises(InputError):
        ModulationFunction.from_config({"kind": "exp"})

def test_vartheta_profile_schedule_checks():
    """Test that the t schedule must be positive and decreasing."""
    phi = ModulationFunction.identity()
    assert np.allclose(vartheta_profile(phi, [0.5, 0.25]), [1.0, 1.0])
    with pytest.raises(InputError):
        vartheta_profile(phi, [0.25, 0.5])
    with pytest.raises(InputError):
        vartheta_profile(phi, [])

def test_gauge_from_phi():
    """Test g(y) = phi(||y - ybar||) and its spot checks."""
    space = NormedSpaceSpec(2)
    gauge = g_from_phi(ModulationFunction.holder(0.5), np.array([1.0, 0.0]), space)

    assert gauge.value([1.0, 0.0]) == pytest.approx(0.0)
    assert gauge.value([1.0, 4.0]) == pytest.approx(2.0)
    assert gauge.check_positivity(np.array([[1.0, 0.0], [2.0, 0.0], [1.0, -1.0]]))
    # sqrt grows faster than the distance near ybar
    assert gauge.growth_ratio() > 1.0

def test_distance_gauge_growth_ratio():
    """Test that the distance gauge has growth ratio 1."""
    space = NormedSpaceSpec(1)
    gauge = g_from_phi(ModulationFunction.identity(), np.array([0.0]), space)
    assert gauge.growth_ratio() == pytest.approx(1.0)
    assert gauge.continuity_spot_check()
