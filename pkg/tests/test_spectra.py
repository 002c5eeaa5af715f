from __future__ import annotations

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diffortho.construct import qhat
from diffortho.errors import ShapeError
from diffortho.measures import MeasureSpec, pn_construct
from diffortho.polycore import BasisPoly, Case, mrs_constant, recurrence_table
from diffortho.spectra import (
    LimitDensity,
    ZeroCloud,
    critical_points,
    interlace_check,
    ks_distance,
    roots,
    zero_stats,
)
from diffortho.precision import tol

LAG0 = Case.laguerre(0)
HERM = Case.hermite()


def _close_sets(got, want, eps):
    # greedy nearest matching; sorting is fragile when real parts tie
    pool = list(want)
    if len(got) != len(pool):
        return False
    for z in got:
        j = min(range(len(pool)), key=lambda i: abs(pool[i] - z))
        if abs(pool.pop(j) - z) > eps:
            return False
    return True


@pytest.mark.parametrize("case,n,want", [
    (HERM, 2, [-1 / mp.sqrt(2), 1 / mp.sqrt(2)]),
    (LAG0, 1, [mp.mpf(1)]),
    (LAG0, 2, [2 - mp.sqrt(2), 2 + mp.sqrt(2)]),
])
def test_roots_examples(case, n, want):
    zc = roots(BasisPoly.basis(case, n))
    assert zc.n == n
    assert _close_sets(zc.zeros, want, tol(10))


def _sum_of_roots(p: BasisPoly):
    # x^{n-1} coefficient of d_n L_n + d_{n-1} L_{n-1}, from the recurrence diagonal
    n = p.degree
    a, _ = recurrence_table(p.case, n)
    sub = -p.coeffs[n] * mp.fsum(a[:n]) + p.coeffs[n - 1]
    return -sub / p.coeffs[n]


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=3, max_size=16), st.booleans())
def test_conjugate_pairs_and_root_sum(cs, herm):
    cs[-1] = cs[-1] or 1
    p = BasisPoly(HERM if herm else Case.laguerre("1.5"), tuple(mp.mpf(c) for c in cs))
    zs = roots(p).zeros
    assert len(zs) == p.degree
    scale = max(1, max(abs(z) for z in zs))
    assert abs(mp.fsum(zs) - _sum_of_roots(p)) <= tol(0, mp.mp.prec // 4) * scale * len(zs)
    conj = [mp.conj(z) for z in zs]
    assert _close_sets(zs, conj, tol(0, mp.mp.prec // 4) * scale)


def test_roots_meet_backward_bound(lag_spec):
    p = qhat(lag_spec, 30).qhat
    for z in roots(p).zeros:
        # |p(z)| against the value scale of p near z
        assert abs(p(z)) <= mp.ldexp(1, -mp.mp.prec // 2) * max(abs(p(z * (1 + mp.mpf("1e-6")))), tol(0))


def test_zero_stats_examples(lag_spec):
    st6 = zero_stats(roots(BasisPoly.basis(HERM, 6)), HERM)
    assert st6.real_in_delta == 6 and st6.max_imag == 0
    zc = roots(qhat(lag_spec, 8).qhat)
    st8 = zero_stats(zc, lag_spec.case)
    assert st8.real_in_delta >= 7
    assert all(mp.im(z) == 0 for z in zc.zeros)
    one = zero_stats(ZeroCloud((mp.mpf("0.5"),), 1, mp.mpf(4), True), LAG0)
    assert one.max_abs == mp.mpf("0.5") and one.min_gap is None


def test_zero_stats_boundary_counts_inside():
    zc = ZeroCloud((mp.mpf(0), mp.mpf(-1) * tol(0, 100), mp.mpf(-1)), 3, mp.mpf(1))
    assert zero_stats(zc, LAG0).real_in_delta == 2


def test_limit_density_mass_and_median():
    for case in (LAG0, HERM):
        ld = LimitDensity(case)
        assert ld.mass() == 1
        lo, hi = ld.support
        # endpoint singularities limit quad's accuracy
        assert abs(mp.quad(ld.density, [lo, (lo + hi) / 2, hi]) - 1) <= 1e-30
        med = mp.findroot(lambda t: ld.cdf(t) - mp.mpf(1) / 2, (lo + hi) / 2 + mp.mpf("0.01"))
        assert ks_distance(ZeroCloud((med,), 1, mp.mpf(1), True), ld) == pytest.approx(0.5, abs=1e-30)


def test_ks_requires_normalized():
    with pytest.raises(ValueError):
        ks_distance(ZeroCloud((mp.mpf(1),), 1, mp.mpf(1), False), LimitDensity(LAG0))


def test_ks_hermite_semicircle():
    zc = roots(BasisPoly.basis(HERM, 100)).scaled()
    assert ks_distance(zc, LimitDensity(HERM)) <= 0.1


def test_ks_trend(herm_spec):
    ds = [ks_distance(roots(qhat(herm_spec, n).qhat).scaled(), LimitDensity(HERM)) for n in (25, 50, 100)]
    assert all(b <= 1.1 * a for a, b in zip(ds, ds[1:]))


def test_distance_to_support_shrinks(lag_spec):
    far = []
    for n in (25, 50, 100):
        zs = roots(qhat(lag_spec, n).qhat).scaled().zeros
        far.append(max(max(0, mp.re(z) - 1, -mp.re(z)) + abs(mp.im(z)) for z in zs))
    assert all(b <= 1.1 * a + tol(0, 64) for a, b in zip(far, far[1:]))


def test_interlace_examples(lag_spec):
    assert interlace_check([1, 3], [0, 2, 4]) is True
    # 0 < 1 < 1.2 < 1.5 < 4 does interlace
    assert interlace_check([1, 1.5], [0, 1.2, 4]) is True
    assert interlace_check([1, 1.1], [0, 1.2, 4]) is False
    assert interlace_check([1, 4], [0, 2, 4]) is False
    crit = critical_points(qhat(lag_spec, 6).qhat).real_parts()
    zeros = roots(pn_construct(lag_spec, 6)).real_parts()
    assert interlace_check(crit, zeros)


def test_interlace_shape_errors():
    with pytest.raises(ShapeError):
        interlace_check([1], [0, 2, 4])
    with pytest.raises(ShapeError):
        interlace_check([3, 1], [0, 2, 4])


def test_critical_points_use_parent_scale(herm_spec):
    d = qhat(herm_spec, 10).qhat
    cp = critical_points(d)
    assert cp.n == 9 and cp.c_n == mrs_constant(HERM, 10)


def test_csv_columns_and_order():
    zc = roots(BasisPoly.basis(LAG0, 3))
    lines = zc.csv_text().splitlines()
    assert lines[0] == "n,index,re,im,normalized,c_n"
    res = [float(l.split(",")[2]) for l in lines[1:]]
    assert res == sorted(res)


def test_roots_of_complex_polynomial():
    # (x - i)(x + 2): monomial -> basis through the constant and x terms
    from diffortho.polycore import from_monomial

    p = from_monomial(HERM, [mp.mpc(0, -2), mp.mpc(2, -1), 1])
    assert _close_sets(roots(p).zeros, [mp.mpc(0, 1), mp.mpc(-2, 0)], tol(10))
