from __future__ import annotations

import json

import mpmath as mp
import pytest

from diffortho.construct import (
    DiffOrthoPoly,
    coeff_growth_report,
    diff_orthogonality_residuals,
    eigen_residual,
    q_with_root,
    qhat,
    quasi_orthogonality_residuals,
    with_root,
)
from diffortho.measures import MeasureSpec, inner_mu, pn_construct
from diffortho.polycore import BasisPoly, Case, squared_norm
from diffortho.precision import tol, working_precision
from diffortho.spectra import critical_points, roots, zero_stats
from tests import oracles

LAG0 = Case.laguerre(0)
HERM = Case.hermite()
TIGHT = mp.ldexp(1, -200)


def test_classical_reduction():
    d = qhat(MeasureSpec(LAG0, (1,)), 7)
    assert d.qhat.coeffs == BasisPoly.basis(LAG0, 7).coeffs


def test_qhat_scales_by_eigenvalue_ratio(lag_spec):
    with mp.workprec(512):
        p3 = oracles.gram_schmidt(oracles.rational_laguerre_moments(8), 3)[3]
        # monic L_2 = x^2 - 4x + 2, L_3 = x^3 - 9x^2 + 18x - 6: b_{3,2} = coefficient of x^2 + 9
        b32 = p3[2] + 9
    got = qhat(lag_spec, 3).qhat.coeffs[2]
    assert abs(got - mp.mpf(3) / 2 * b32) <= tol(30)


def test_hermite_structure_through_half_laguerre(herm_spec):
    # Qhat_4(z) = L_2^{-1/2}(z^2) + c L_1^{-1/2}(z^2): the difference vanishes where z^2 = 1/2
    # and is linear in z^2.
    q = qhat(herm_spec, 4).qhat
    l2 = BasisPoly.basis(Case.laguerre("-0.5"), 2)
    diff = lambda z: q(z) - l2(z * z)  # noqa: E731
    assert abs(diff(1 / mp.sqrt(2))) <= tol(30)
    c = diff(0) / (-mp.mpf(1) / 2)
    for z in (mp.mpf("0.3"), mp.mpf(2), mp.mpc(1, 1)):
        assert abs(diff(z) - c * (z * z - mp.mpf(1) / 2)) <= tol(30) * max(1, abs(q(z)))


def test_q_with_root_examples(lag_spec):
    d = q_with_root(MeasureSpec(HERM, (1,)), 2, 0)
    assert d.q.coeffs == (mp.mpf(1) / 2, 0, 1)  # x^2
    d = q_with_root(lag_spec, 3, 5)
    assert abs(d.q(5)) <= tol(20) * abs(d.qhat(5))
    z0 = roots(qhat(lag_spec, 5).qhat).zeros[2]
    d = with_root(qhat(lag_spec, 5), z0)
    assert abs(d.q_const) <= tol(0, mp.mp.prec // 2)


def test_q_derivative_unchanged(lag_spec):
    from diffortho.polycore import derivative_in_basis

    d = q_with_root(lag_spec, 6, mp.mpc(1, 2))
    assert derivative_in_basis(d.q).coeffs == derivative_in_basis(d.qhat).coeffs


def test_diff_orthogonality_classical():
    d = qhat(MeasureSpec(HERM, (1,)), 8)
    assert max(diff_orthogonality_residuals(d, 7)) <= tol(30)


def test_diff_orthogonality_example(lag_spec):
    d = q_with_root(lag_spec, 6, 5)
    res = diff_orthogonality_residuals(d, 6)
    assert max(res[:6]) <= TIGHT
    # k = n: <L Q_n, x^n>_mu = lambda_n ||P_n||_mu^2, so the normalised value is ||P_n||_mu / ||x^n||_mu
    with working_precision(64):
        p = pn_construct(lag_spec, 6)
        x6 = BasisPoly.monomial(LAG0, 6)
        want = mp.sqrt(inner_mu(p, p, lag_spec, "gauss") / inner_mu(x6, x6, lag_spec, "gauss"))
    assert abs(res[6] - want) <= 1e-12 * want


@pytest.mark.parametrize("spec,n", [(MeasureSpec(LAG0, (1,)), 5), (MeasureSpec(Case.laguerre("0.5"), (2, 1)), 10),
                                    (MeasureSpec(HERM, (4, 0, 1)), 12)])
def test_eigen_residual_examples(spec, n):
    assert eigen_residual(qhat(spec, n)) <= TIGHT


def test_residual_equivalence_detects_corruption(herm_spec):
    d = qhat(herm_spec, 10)
    assert eigen_residual(d) <= TIGHT and max(diff_orthogonality_residuals(d, 9)) <= TIGHT
    cs = list(d.qhat.coeffs)
    cs[8] *= 1 + mp.mpf("1e-20")
    bad = DiffOrthoPoly(BasisPoly(HERM, tuple(cs)), herm_spec, 10, d.pn)
    assert eigen_residual(bad) > TIGHT and max(diff_orthogonality_residuals(bad, 9)) > TIGHT


@pytest.mark.parametrize("c", [0, 3, mp.mpf("-1e5")])
def test_additive_constant_degeneracy(lag_spec, c):
    d = qhat(lag_spec, 7)
    shifted = DiffOrthoPoly(d.qhat.add_constant(c), lag_spec, 7, d.pn)
    assert max(diff_orthogonality_residuals(shifted, 6)) <= TIGHT


@pytest.mark.parametrize("n", [7, 8])
def test_parity_for_even_rho(herm_spec, n):
    q = qhat(herm_spec, n).qhat
    assert all(c == 0 for j, c in enumerate(q.coeffs) if (n - j) % 2)


def test_quasi_orthogonality(lag_spec, herm_spec):
    assert max(quasi_orthogonality_residuals(MeasureSpec(LAG0, (1,)), 6)[:-1]) <= tol(30)
    res = quasi_orthogonality_residuals(lag_spec, 6)
    assert max(res[:-1]) <= TIGHT
    assert quasi_orthogonality_residuals(herm_spec, 6, kmax=5)[5] <= TIGHT


def test_quasi_orthogonality_boundary_value(lag_spec):
    # at k = n - m the pairing is b_{n,n-m} tau_{n-m}, which does not vanish
    n = 6
    p = pn_construct(lag_spec, n)
    res = quasi_orthogonality_residuals(lag_spec, n)[-1]
    xk = BasisPoly.monomial(LAG0, n - 1)
    from diffortho.measures import inner_w

    want = abs(p.coeffs[n - 1]) * squared_norm(LAG0, n - 1) / mp.sqrt(inner_w(p, p) * inner_w(xk, xk))
    assert res > 0.01 and abs(res - want) <= tol(20) * want


@pytest.mark.parametrize("n", [6, 8, 15])
def test_zero_count_floor(lag_spec, herm_spec, n):
    for spec in (lag_spec, herm_spec):
        d = qhat(spec, n)
        assert zero_stats(roots(d.qhat), spec.case).real_in_delta >= n - spec.m
        assert zero_stats(critical_points(d.qhat), spec.case.shifted()).real_in_delta >= n - spec.m - 1


def test_coeff_growth(lag_spec, herm_spec):
    assert all(r["ratio"] == 0 for r in coeff_growth_report(MeasureSpec(HERM, (1,)), [10, 20]))
    rows = coeff_growth_report(lag_spec, [10, 20, 40, 80])
    assert max(r["ratio"] for r in rows) <= 2 * rows[0]["ratio"]
    rows = [r for r in coeff_growth_report(herm_spec, [10, 20, 40, 80]) if r["k"] == 2]
    assert max(r["ratio"] for r in rows) <= 2 * rows[0]["ratio"]


def test_json_round_trip(herm_spec):
    d = q_with_root(herm_spec, 6, mp.mpc("0.5", "1.5"))
    obj = json.loads(json.dumps(d.to_json()))
    back = DiffOrthoPoly.from_json(obj)
    assert back.qhat.coeffs == d.qhat.coeffs
    assert back.zeta == d.zeta and back.q_const == d.q_const
    assert all(abs(a - b) <= tol(10) for a, b in zip(back.pn.coeffs, d.pn.coeffs))


def test_degree_must_exceed_m(herm_spec):
    with pytest.raises(ValueError):
        qhat(herm_spec, 2)
