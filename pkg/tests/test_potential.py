import numpy as np
import pytest

from weakcoupling.potential import (Potential, PotentialError, alpha_star, box_1d, box_2d,
                                    complex_box_1d, compute_U, compute_U1, gaussian_1d,
                                    gaussian_2d, grid_potential, l1_norm, moments, rollnik_value,
                                    v_alpha)
from weakcoupling.quadrature import gauss_rule, log_box_integral

UNIT2 = ((0.0, 1.0), (0.0, 1.0))
# Cross integral int int (1 + x1) log|x - y| sign(y1 - 1/2) over the unit square,
# from nested adaptive quadrature (scipy dblquad inside a 16x16 Gauss rule per half);
# successive refinements agreed to 5e-10.
CROSS_ORACLE_ALPHA_STAR = 0.04930199073282777

SIGN_IM = grid_potential([[-1.0], [1.0]], UNIT2)


def builtins():
    return [
        box_1d(),
        gaussian_1d(1.0, 0.5),
        complex_box_1d([(0, 1, 1 + 0.5j), (0.4, 1.5, -0.3j)]),
        grid_potential([0.5, 1.0, 0.25], (0, 1.5)),
        box_2d(),
        gaussian_2d(1.0, 0.3, cutoff=6.0, normalized=True),
        v_alpha(box_2d(), SIGN_IM, 2.0),
    ]


def test_box_U_and_U1():
    V = box_1d()
    r = V.rule(8)
    assert abs(compute_U(V, r) - 1) < 1e-12
    assert abs(compute_U1(V, r) - 1 / 6) < 1e-8


def test_box_U1_brute_force_oracle():
    n = 2001
    x = np.linspace(0, 1, n)
    w = np.full(n, 1.0 / (n - 1))
    w[[0, -1]] *= 0.5
    brute = 0.5 * (w @ np.abs(x[:, None] - x[None, :]) @ w)
    assert abs(compute_U1(box_1d(), box_1d().rule(8)) - brute) < 1e-6


def test_box_rollnik():
    V = box_1d()
    assert abs(rollnik_value(V, V.rule(8)) - 1 / 24) < 1e-8


def test_zero_potential():
    V = box_1d(height=0)
    r = V.rule(4)
    assert compute_U(V, r) == 0
    assert rollnik_value(V, r) == 0


def test_v_alpha_U():
    re = gaussian_2d(1.0, 0.4, cutoff=5.0)
    for alpha in (-1.5, 0.3, 2.0):
        V = v_alpha(re, box_2d(((-2, 2), (-2, 2)), 0.0), alpha)
        assert compute_U(V, V.rule(12)) == pytest.approx(alpha * compute_U(re, re.rule(12)), rel=1e-12)
    V = v_alpha(box_2d(), SIGN_IM, 0.7)
    assert abs(compute_U(V, V.rule(6)) - 0.7) < 1e-14


@pytest.mark.parametrize("V", builtins(), ids=lambda V: V.label)
def test_scaling_laws(V):
    r = V.rule(6)
    c = 1.7 - 0.6j
    assert abs(compute_U(V.scaled(c), r) - c * compute_U(V, r)) <= 1e-12 * abs(c * compute_U(V, r)) + 1e-15
    u1 = compute_U1(V, r)
    assert abs(compute_U1(V.scaled(c), r) - c * c * u1) <= 1e-12 * abs(c * c * u1)
    rn = rollnik_value(V, r)
    assert abs(rollnik_value(V.scaled(2.5), r) - 6.25 * rn) <= 1e-12 * 6.25 * rn


@pytest.mark.parametrize("V", [box_1d(), gaussian_1d(2.0, 0.3), grid_potential([0, 1, 3], (0, 2))],
                         ids=lambda V: V.label)
def test_nonnegative_1d_U1_positive(V):
    u1 = compute_U1(V, V.rule(8))
    assert u1.real > 0 and u1.imag == 0


@pytest.mark.parametrize("V", builtins(), ids=lambda V: V.label)
def test_quadrature_convergence_monotone(V):
    vals = [compute_U1(V, V.rule(n)) for n in (3, 6, 12)]
    d1, d2 = abs(vals[1] - vals[0]), abs(vals[2] - vals[1])
    assert d2 < d1 or d2 < 1e-14 * abs(vals[2])


@pytest.mark.parametrize("V", builtins(), ids=lambda V: V.label)
def test_U1_bounded_by_l1_and_rollnik(V):
    m = moments(V, V.rule(8))
    assert m.rollnik >= 0
    assert all(np.isfinite(m.error_estimates))
    assert abs(m.U1) <= m.l1 ** 2 + m.rollnik


def test_evaluate_outside_box_is_zero():
    V = box_1d(0, 1, 3.0)
    assert np.allclose(V.evaluate(np.array([-0.5, 0.5, 1.5])), [0, 3, 0])
    with pytest.raises(PotentialError):
        box_2d().evaluate(np.zeros((3, 1)))


def test_rule_must_cover_support():
    V = box_1d(0, 2)
    with pytest.raises(PotentialError):
        compute_U(V, gauss_rule(4, (0, 1)))
    with pytest.raises(PotentialError):
        compute_U(V, gauss_rule(4, UNIT2))


def test_non_finite_potential_rejected():
    V = Potential(1, lambda p: np.full(p.shape[0], np.inf), ((0, 1),))
    with pytest.raises(PotentialError):
        compute_U(V, V.rule(3))


def test_gaussian_mass():
    V = gaussian_1d(1.0, 0.5)
    assert compute_U(V, V.rule(20, 4)) == pytest.approx(0.5 * np.sqrt(2 * np.pi), rel=1e-13)
    W = gaussian_2d(3.0, 0.4, normalized=True)
    assert compute_U(W, W.rule(20, 4)) == pytest.approx(3.0, rel=1e-12)


def test_alpha_star_zero_imaginary_part():
    zero_im = box_2d(height=0.0)
    assert alpha_star(box_2d(), zero_im, gauss_rule(6, UNIT2)) == 0


def test_alpha_star_sign_example_against_dense_oracle():
    # dense midpoint quadrature of int sign(y1 - 1/2) L(y) dy with L the box log-potential
    n = 400
    t = (np.arange(n) + 0.5) / n
    Y1, Y2 = np.meshgrid(t, t, indexing="ij")
    pts = np.column_stack([Y1.ravel(), Y2.ravel()])
    cross = np.sum(np.sign(pts[:, 0] - 0.5) * log_box_integral(pts, UNIT2)) / n ** 2
    oracle = 4 / np.pi * abs(cross)
    rule = gauss_rule(8, UNIT2, breaks=((0.5,), ()))
    assert abs(alpha_star(box_2d(), SIGN_IM, rule) - oracle) < 1e-6


def test_alpha_star_nonsymmetric_against_frozen_oracle():
    re = Potential(2, lambda p: 1 + p[:, 0], UNIT2)
    rule = gauss_rule(8, UNIT2, breaks=((0.5,), ()))
    assert abs(alpha_star(re, SIGN_IM, rule) - CROSS_ORACLE_ALPHA_STAR) < 1e-6


def test_alpha_star_scales_with_imaginary_part():
    re = Potential(2, lambda p: 1 + p[:, 0], UNIT2)
    rule = gauss_rule(8, UNIT2, breaks=((0.5,), ()))
    base = alpha_star(re, SIGN_IM, rule)
    for c in (-3.0, 0.5):
        scaled = grid_potential([[-c], [c]], UNIT2)
        assert alpha_star(re, scaled, rule) == pytest.approx(abs(c) * base, rel=1e-12)


def test_alpha_star_preconditions():
    rule = gauss_rule(6, UNIT2, breaks=((0.5,), ()))
    with pytest.raises(PotentialError, match="int ImV = 0"):
        alpha_star(box_2d(), box_2d(height=0.1), rule)
    with pytest.raises(PotentialError, match="int ReV > 0"):
        alpha_star(box_2d(height=-1.0), SIGN_IM, rule)
    with pytest.raises(PotentialError, match="d=2"):
        alpha_star(box_1d(), box_1d(), gauss_rule(4, (0, 1)))
