import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate, special as sp

from oracles import k0_oracle
from weakcoupling.special import (EULER_GAMMA, K0_CROSSOVER, LOG2, BranchCutError, bessel_k0,
                                  k0_log_regular, principal_log, principal_sqrt)


def test_principal_log_examples():
    assert principal_log(1) == 0
    assert principal_log(1j) == pytest.approx(1j * math.pi / 2, abs=1e-15)
    assert principal_log(math.e ** 2) == pytest.approx(2.0, abs=1e-15)


def test_principal_sqrt_examples():
    assert principal_sqrt(4) == 2
    assert principal_sqrt(2j) == pytest.approx(1 + 1j, abs=1e-15)
    with pytest.raises(BranchCutError):
        principal_sqrt(-1 + 0j)


@pytest.mark.parametrize("w", [0, -1, -1e-300, complex(-2, 0)])
def test_cut_is_rejected(w):
    with pytest.raises(BranchCutError):
        principal_log(w)
    with pytest.raises(BranchCutError):
        principal_sqrt(w)


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        principal_log(complex(float("nan"), 1))
    with pytest.raises(ValueError):
        bessel_k0(complex(float("inf"), 0))


@pytest.mark.parametrize("w", [0, -1, 1j, complex(-1, 3)])
def test_k0_domain(w):
    with pytest.raises(BranchCutError):
        bessel_k0(w)


def test_k0_small_argument_limit():
    for arg in (0.0, 0.7, -1.2):
        w = 1e-6 * cmath.exp(1j * arg)
        assert abs(bessel_k0(w) + cmath.log(w) - (LOG2 - EULER_GAMMA)) < 1e-6
        assert abs(k0_log_regular(w) - (LOG2 - EULER_GAMMA)) < 1e-6
    assert LOG2 - EULER_GAMMA == pytest.approx(0.11593152, abs=1e-8)


def test_k0_at_one_matches_integral():
    # exp(-cosh t) < 1e-300 beyond t = 7.5, so the tail past 40 is exactly negligible
    oracle = integrate.quad(lambda t: math.exp(-math.cosh(t)), 0, 40, epsrel=1e-14, limit=200)[0]
    assert abs(bessel_k0(1.0) - oracle) < 1e-8 * oracle


def test_k0_large_argument():
    lead = math.sqrt(math.pi / 60) * math.exp(-30)
    assert abs(bessel_k0(30.0) - lead) <= 1e-2 * lead


def test_k0_against_scipy_on_wide_range():
    # scipy's kv is an independent AMOS implementation
    r = np.logspace(-8, math.log10(50), 40)
    for arg in (0.0, 0.5, -1.0, 1.45):
        w = r * np.exp(1j * arg)
        ours = bessel_k0(w)
        ref = sp.kv(0, w)
        assert np.max(np.abs(ours - ref) / np.abs(ref)) < 1e-10


def test_k0_continuous_at_crossover():
    for arg in (0.0, 0.9, -1.3):
        u = np.exp(1j * arg)
        lo, hi = bessel_k0(K0_CROSSOVER * (1 - 1e-12) * u), bessel_k0(K0_CROSSOVER * (1 + 1e-12) * u)
        # the two points differ by 4e-12 relative, so only the slope term separates them
        assert abs(lo - hi) < 1e-10 * abs(lo)


def test_k0_log_regular_matches_definition_away_from_zero():
    w = np.array([0.3 + 0.1j, 1.0, 1.9 - 0.5j, 2.5 + 1j, 10.0])
    assert np.allclose(k0_log_regular(w), bessel_k0(w) + np.log(w), rtol=0, atol=1e-14)


def test_k0_array_shape_and_scalar():
    w = np.full((3, 2), 1.5 + 0.5j)
    assert bessel_k0(w).shape == (3, 2)
    assert isinstance(bessel_k0(1.5), complex)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 40), st.floats(-1.5, 1.5))
def test_k0_conjugate_symmetry(r, arg):
    w = r * cmath.exp(1j * arg)
    assert bessel_k0(w.conjugate()) == pytest.approx(bessel_k0(w).conjugate(), rel=1e-14, abs=0)


def test_log_product_identity_random():
    rng = np.random.default_rng(7)
    n = 10_000
    a1 = rng.uniform(-math.pi, math.pi, n)
    a2 = rng.uniform(-math.pi, math.pi, n)
    keep = np.abs(a1 + a2) < math.pi - 1e-9
    r1 = np.exp(rng.uniform(-5, 5, n))
    r2 = np.exp(rng.uniform(-5, 5, n))
    for a, b, s, t in zip(r1[keep], r2[keep], a1[keep], a2[keep]):
        w1, w2 = a * cmath.exp(1j * s), b * cmath.exp(1j * t)
        assert abs(principal_log(w1 * w2) - principal_log(w1) - principal_log(w2)) < 1e-14 * max(
            1.0, abs(principal_log(w1 * w2)))


def test_log_modulus_bounds_random():
    rng = np.random.default_rng(11)
    r = np.exp(rng.uniform(-20, 20, 10_000))
    a = rng.uniform(-math.pi, math.pi, 10_000)
    for rr, aa in zip(r, a):
        w = rr * cmath.exp(1j * aa)
        if w.imag == 0 and w.real <= 0:
            continue
        L = abs(principal_log(w))
        assert abs(math.log(abs(w))) <= L + 1e-15
        assert L < abs(math.log(abs(w))) + math.pi


@settings(max_examples=300, deadline=None)
@given(st.complex_numbers(max_magnitude=1e6, allow_nan=False, allow_infinity=False))
def test_sqrt_squares_back(w):
    if w.imag == 0 and w.real <= 0:
        with pytest.raises(BranchCutError):
            principal_sqrt(w)
        return
    r = principal_sqrt(w)
    # Re r = |Im w| / (2 |r|) may underflow for subnormal Im w just above the cut
    assert r.real > 0 or (r.real == 0 and abs(w.imag) < 1e-300)
    assert abs(r * r - w) <= 1e-14 * abs(w) + 1e-300


@pytest.mark.parametrize("w", [0.05, 0.3 + 0.25j, 1 - 1j, 4 + 3j, 25 - 20j])
def test_k0_matches_integral_oracle(w):
    ref = k0_oracle(w)
    assert abs(bessel_k0(w) - ref) < 1e-8 * abs(ref)
