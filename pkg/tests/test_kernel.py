import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nonlocal_plate import kernel as K
from nonlocal_plate.errors import KernelDomainError, SingularityError

# normalization constants and pi values from 30-digit mpmath quadrature
NORMALIZATION = {
    ("bump", 2): 2.143565775792236601,
    ("bump", 3): 2.2671167396083264584,
    ("polynomial", 2): 1.5915494309189533577,  # 5/pi
    ("polynomial", 3): 2.1541870227086614783,
}
PI_AT_DELTA_01 = {
    "bump": {0.05: 190.06217395489028529, 0.3: 52.300073743280551873, 0.7: 3.7078683650349269577},
    "polynomial": {0.05: 311.79348475693687392, 0.3: 52.622025333466604886,
                   0.7: 0.96844870734264704269},
}
THIRD_MOMENT_DELTA_01 = {"bump": 0.00041588969709673697151, "polynomial": 0.00026525823848649222628}

families = st.sampled_from(["bump", "polynomial"])
deltas = st.floats(min_value=1e-3, max_value=10.0)


@pytest.mark.parametrize("family,dim", sorted(NORMALIZATION))
def test_normalization_matches_high_precision_oracle(family, dim):
    spec = K.KernelSpec(family, 0.1, dim)
    assert spec.normalization == pytest.approx(NORMALIZATION[family, dim], rel=1e-13)


def test_polynomial_normalization_closed_form():
    assert K.KernelSpec("polynomial", 1.0).normalization == pytest.approx(5 / math.pi, rel=1e-14)


@pytest.mark.parametrize("family", ["bump", "polynomial"])
@pytest.mark.parametrize("dim", [2, 3])
@pytest.mark.parametrize("delta", [0.2, 0.1, 0.05, 0.025])
def test_unit_mass_and_scaling_constant(family, dim, delta):
    spec = K.KernelSpec(family, delta, dim)
    assert abs(K.mass(spec) - 1) <= 1e-12
    assert abs(K.c_delta(spec) - 1 / (2 * dim)) <= 1e-8
    assert spec.sigma == 2 * dim


def test_kernel_scalars():
    s = K.kernel_scalars(K.KernelSpec("bump", 0.1, 2))
    assert s.sigma == 4
    assert s.c_delta == pytest.approx(0.25, abs=1e-10)
    assert s.omega_dm1 == pytest.approx(2 * math.pi)
    assert K.sphere_measure(3) == pytest.approx(4 * math.pi)


@pytest.mark.parametrize("family", ["bump", "polynomial"])
@pytest.mark.parametrize("t", [0.05, 0.3, 0.7])
def test_pi_matches_oracle(family, t):
    spec = K.KernelSpec(family, 0.1)
    assert K.pi_of(spec, t * 0.1) == pytest.approx(PI_AT_DELTA_01[family][t], rel=1e-11)


@pytest.mark.parametrize("family", ["bump", "polynomial"])
def test_radial_moment_matches_oracle(family):
    spec = K.KernelSpec(family, 0.1)
    assert K.radial_moment(spec, 3) == pytest.approx(THIRD_MOMENT_DELTA_01[family], rel=1e-11)


def test_pi_limits():
    spec = K.KernelSpec("bump", 0.1)
    assert K.pi_of(spec, 0.0) == math.inf
    assert K.pi_of(spec, 0.1) == 0.0
    assert K.pi_of(spec, 0.5) == 0.0
    arr = K.pi_of(spec, np.array([0.01, 0.02]))
    assert arr.shape == (2,) and arr[0] > arr[1] > 0


def test_rho_support_and_example_values():
    spec = K.KernelSpec("bump", 0.1)
    assert K.rho(spec, 0.1) == 0.0
    assert K.rho(spec, 0.2) == 0.0
    # centre value: c * delta^-2 * e^-1
    assert K.rho(spec, 0.0) == pytest.approx(NORMALIZATION["bump", 2] * 100 * math.exp(-1), rel=1e-14)
    assert K.rho(K.KernelSpec("polynomial", 0.1), 0.0) == pytest.approx(100 * 5 / math.pi, rel=1e-14)


def test_mu_is_rho_over_r2_and_singular_at_zero():
    spec = K.KernelSpec("polynomial", 0.2)
    r = np.array([0.01, 0.05, 0.1])
    np.testing.assert_allclose(K.mu(spec, r), K.rho(spec, r) / r ** 2, rtol=1e-15)
    with pytest.raises(SingularityError):
        K.mu(spec, 0.0)
    with pytest.raises(SingularityError):
        K.mu(spec, np.array([0.0, 0.1]))


@pytest.mark.parametrize("bad", [-1.0, 0.0, float("nan"), float("inf"), "x"])
def test_invalid_delta_rejected(bad):
    with pytest.raises(KernelDomainError):
        K.KernelSpec("bump", bad)


def test_invalid_family_and_radius_rejected():
    with pytest.raises(KernelDomainError):
        K.KernelSpec("gaussian", 0.1)
    with pytest.raises(KernelDomainError):
        K.KernelSpec("bump", 0.1, dim=1)
    with pytest.raises(KernelDomainError):
        K.rho(K.KernelSpec("bump", 0.1), -0.01)


@settings(max_examples=60, deadline=None)
@given(families, deltas, st.floats(min_value=0.0, max_value=1.5))
def test_rho_scales_with_delta(family, delta, t):
    base = K.KernelSpec(family, 1.0)
    spec = base.with_delta(delta)
    assert K.rho(spec, t * delta) == pytest.approx(delta ** -2 * K.rho(base, t), rel=1e-12, abs=0)


@settings(max_examples=60, deadline=None)
@given(families, deltas, st.lists(st.floats(min_value=0.0, max_value=1.2), min_size=2, max_size=20))
def test_rho_nonnegative_and_nonincreasing(family, delta, ts):
    spec = K.KernelSpec(family, delta)
    r = np.sort(np.array(ts)) * delta
    vals = K.rho(spec, r)
    assert np.all(vals >= 0)
    assert np.all(np.diff(vals) <= 0)
    assert np.all(vals[r >= delta] == 0)
