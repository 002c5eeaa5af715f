"""Zeros of basis polynomials, zero statistics and limit distributions."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .errors import EigenError, ShapeError
from .polycore import BasisPoly, Case, eval_with_derivative, mrs_constant, recurrence_table
from .precision import fmt, get_precision, tol


@dataclass(frozen=True)
class ZeroCloud:
    zeros: tuple
    n: int
    c_n: mp.mpf
    normalized: bool = False

    def scaled(self) -> "ZeroCloud":
        """The cloud divided by ``c_n``."""
        if self.normalized:
            return self
        return ZeroCloud(tuple(z / self.c_n for z in self.zeros), self.n, self.c_n, True)

    def real_parts(self) -> list:
        return sorted(mp.re(z) for z in self.zeros)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "index", "re", "im", "normalized", "c_n"])
        for i, z in enumerate(_ordered(self.zeros)):
            z = mp.mpc(z)
            w.writerow([self.n, i, fmt(z.real), fmt(z.imag), int(self.normalized), fmt(self.c_n)])
        return buf.getvalue()


def _ordered(zs):
    return sorted(zs, key=lambda z: (mp.re(z), mp.im(z)))


# ------------------------------------------------------------------ seeding


def _scaled_coeffs(p: BasisPoly, s):
    """Coefficients of ``p(s t) / (lead * s^n)`` in the basis scaled by ``s``."""
    n = p.degree
    lead = p.leading
    return [p.coeffs[j] * mp.power(s, j - n) / lead for j in range(n + 1)]


def _comrade_seeds(case: Case, e, s) -> np.ndarray:
    """Eigenvalues of the scaled comrade matrix (double precision)."""
    n = len(e) - 1
    a, b = recurrence_table(case, n)
    at = [a[j] / s for j in range(n)]
    bt = [b[j] / (s * s) for j in range(n + 1)]
    M = np.zeros((n, n), dtype=complex)
    for j in range(n):
        M[j, j] = float(at[j])
        if j + 1 < n:
            off = float(mp.sqrt(bt[j + 1]))
            M[j, j + 1] = off
            M[j + 1, j] = off
    # sqrt(tau_j / tau_n) in the scaled basis
    ratio = mp.mpf(1)
    scale = [mp.mpf(0)] * n
    for j in range(n - 1, -1, -1):
        ratio /= mp.sqrt(bt[j + 1])
        scale[j] = ratio
    top = mp.sqrt(bt[n])
    for j in range(n):
        M[n - 1, j] -= complex(top * e[j] * scale[j])
    try:
        vals = np.linalg.eigvals(M)
    except np.linalg.LinAlgError as exc:
        raise EigenError(str(exc)) from exc
    if not np.all(np.isfinite(vals)):
        raise EigenError("comrade matrix produced non-finite eigenvalues")
    return vals


def _newton_ratio(case: Case, e, s, t: np.ndarray) -> np.ndarray:
    """``f(t) / f'(t)`` in double for the scaled coefficients ``e``.

    The running state is homogeneous, so it is rescaled whenever it grows
    large; only the ratio is returned.
    """
    n = len(e) - 1
    a, b = recurrence_table(case, n)
    ec = np.array([complex(c) for c in e])
    av = np.array([float(a[k] / s) for k in range(n)])
    bv = np.array([float(b[k] / (s * s)) for k in range(n)])
    l_prev = np.zeros_like(t)
    l_cur = np.ones_like(t)
    d_prev = np.zeros_like(t)
    d_cur = np.zeros_like(t)
    f = ec[0] * l_cur
    df = np.zeros_like(t)
    for k in range(n):
        l_next = (t - av[k]) * l_cur - bv[k] * l_prev
        d_next = l_cur + (t - av[k]) * d_cur - bv[k] * d_prev
        l_prev, l_cur, d_prev, d_cur = l_cur, l_next, d_cur, d_next
        f = f + ec[k + 1] * l_cur
        df = df + ec[k + 1] * d_cur
        big = np.maximum.reduce([np.abs(l_cur), np.abs(f), np.abs(d_cur), np.abs(df)])
        over = big > 1e150
        if over.any():
            sc = np.where(over, 1.0 / np.where(over, big, 1.0), 1.0)
            l_prev, l_cur, d_prev, d_cur = l_prev * sc, l_cur * sc, d_prev * sc, d_cur * sc
            f, df = f * sc, df * sc
    return f / df


def _aberth_double(case: Case, e, s, t: np.ndarray, iters: int = 100):
    """Aberth-Ehrlich sweeps; returns ``(roots, converged)``."""
    t = t.astype(complex).copy()
    converged = False
    with np.errstate(all="ignore"):
        for _ in range(iters):
            ratio = _newton_ratio(case, e, s, t)
            diff = t[:, None] - t[None, :]
            np.fill_diagonal(diff, 1.0)
            inv = 1.0 / diff
            np.fill_diagonal(inv, 0.0)
            corr = ratio / (1.0 - ratio * inv.sum(axis=1))
            ok = np.isfinite(corr)
            t[ok] = t[ok] - corr[ok]
            if ok.all() and np.all(np.abs(corr) <= 1e-13 * np.maximum(1.0, np.abs(t))):
                converged = True
                break
    return t, converged and bool(np.all(np.isfinite(t)))


def _circle_seeds(case: Case, e, s) -> np.ndarray:
    """Seeds on a circle about the root centroid, radius from a Fujiwara-type
    bound in the scaled basis."""
    n = len(e) - 1
    a, _ = recurrence_table(case, n)
    centre = complex((mp.fsum(a[:n]) / s - e[n - 1]) / n)
    radius = max(
        [1.0] + [float(abs(e[j]) ** (mp.mpf(1) / (n - j))) for j in range(n) if e[j] != 0]
    )
    k = np.arange(n)
    return centre + radius * np.exp(2j * np.pi * (k + 0.25) / n)


def _seeds(case: Case, e, s) -> np.ndarray:
    try:
        t = _comrade_seeds(case, e, s)
    except EigenError:
        t = None
    if t is not None:
        t, ok = _aberth_double(case, e, s, t)
        if ok:
            return t
    t, ok = _aberth_double(case, e, s, _circle_seeds(case, e, s), iters=1000)
    if not np.all(np.isfinite(t)):
        raise EigenError("double-precision root iteration diverged")
    return t


# ---------------------------------------------------------------- polishing


def _newton(p: BasisPoly, z, real: bool):
    prec = get_precision()
    done = tol(0)
    loose = tol(0, prec // 2)
    last = None
    with mp.workprec(prec + 32):
        z = mp.mpf(z) if real else mp.mpc(z)
        for _ in range(60):
            f, df = eval_with_derivative(p, z)
            if df == 0:
                return None
            step = f / df
            z -= step
            size = abs(step) / max(abs(z), 1)
            if size <= done or (last is not None and size <= loose and size >= last):
                return +z
            last = size
    return None


def _sign_change(p: BasisPoly, x) -> bool:
    d = tol(0, get_precision() // 2) * max(abs(x), 1)
    lo, hi = p(x - d), p(x + d)
    return mp.re(lo) * mp.re(hi) < 0


def _aberth_mp(p: BasisPoly, zs: list, iters: int = 200) -> list:
    eps = tol(2)
    zs = [mp.mpc(z) for z in zs]
    n = len(zs)
    for _ in range(iters):
        worst = mp.mpf(0)
        for i in range(n):
            f, df = eval_with_derivative(p, zs[i])
            ratio = f / df
            s = mp.fsum(1 / (zs[i] - zs[j]) for j in range(n) if j != i)
            corr = ratio / (1 - ratio * s)
            zs[i] -= corr
            worst = max(worst, abs(corr) / max(abs(zs[i]), 1))
        if worst <= eps:
            break
    return zs


def _backward_error(p: BasisPoly, z) -> mp.mpf:
    """``|p(z)|`` relative to the recurrence run on absolute values at
    ``max(|z|, 1)``, matching the absolute step test used near the origin."""
    from .polycore import basis_values

    n = p.degree
    a, b = recurrence_table(p.case, n)
    r = max(abs(z), 1)
    m_prev, m_cur = mp.mpf(0), mp.mpf(1)
    scale = abs(p.coeffs[0])
    for k in range(n):
        m_prev, m_cur = m_cur, (r + abs(a[k])) * m_cur + abs(b[k]) * m_prev
        scale += abs(p.coeffs[k + 1]) * m_cur
    val = mp.fsum(c * v for c, v in zip(p.coeffs, basis_values(p.case, n, z)))
    return abs(val) / scale if scale else abs(val)


def roots(p: BasisPoly, c_n=None) -> ZeroCloud:
    """All zeros of ``p`` (unnormalised), with ``c_n`` recorded for scaling.

    Seeds come from the comrade matrix of the basis, are improved by a
    double-precision Aberth-Ehrlich sweep and then polished by Newton at
    working precision.  For real polynomials a near-real seed is refined on
    the real line and kept real only if ``p`` changes sign across it.
    """
    p = p.trimmed()
    n = p.degree
    if n < 1 or p.leading == 0:
        raise ValueError("roots need degree >= 1 and a nonzero leading coefficient")
    case = p.case
    s = mrs_constant(case, n)
    c_n = s if c_n is None else mp.mpf(c_n)
    e = _scaled_coeffs(p, s)
    seeds = _seeds(case, e, s)
    real_poly = p.is_real
    if real_poly:
        p = BasisPoly(case, tuple(mp.re(c) for c in p.coeffs))
    zs = []
    for t in seeds:
        z0 = complex(t) * float(s)
        z = None
        if real_poly and abs(z0.imag) <= 1e-6 * max(1.0, abs(z0)):
            z = _newton(p, z0.real, real=True)
            if z is not None and not _sign_change(p, z):
                z = None
        if z is None:
            z = _newton(p, z0, real=False)
        if z is None:
            z = mp.mpc(z0)
        zs.append(z)
    if _clustered(zs):
        zs = _aberth_mp(p, [complex(t) * float(s) for t in seeds])
        if real_poly:
            zs = [_realify(p, z) for z in zs]
    limit = tol(0, get_precision() // 2)
    for z in zs:
        if _backward_error(p, z) > limit:
            raise EigenError(f"root refinement failed near {mp.nstr(z, 10)}")
    return ZeroCloud(tuple(_ordered(zs)), n, c_n, False)


def _realify(p: BasisPoly, z):
    z = mp.mpc(z)
    if abs(z.imag) <= tol(0, get_precision() // 4) * max(1, abs(z)) and _sign_change(p, z.real):
        return z.real
    return z


def _clustered(zs) -> bool:
    eps = tol(0, get_precision() // 4)
    pts = sorted(zs, key=lambda z: (mp.re(z), mp.im(z)))
    for i, z in enumerate(pts):
        for w in pts[i + 1:]:
            if mp.re(w) - mp.re(z) > eps * max(1, abs(z)):
                break
            if abs(w - z) <= eps * max(1, abs(z)):
                return True
    return False


def critical_points(p: BasisPoly, c_n=None) -> ZeroCloud:
    """Zeros of ``p'`` (computed in the derivative's own basis)."""
    from .polycore import derivative_in_basis

    if c_n is None:
        c_n = mrs_constant(p.case, p.degree)
    return roots(derivative_in_basis(p), c_n=c_n)


# -------------------------------------------------------------- statistics


@dataclass(frozen=True)
class ZeroStats:
    n: int
    real_in_delta: int
    max_imag: mp.mpf
    min_gap: mp.mpf | None
    max_abs: mp.mpf
    real_zeros: tuple = field(repr=False, default=())


def zero_stats(zc: ZeroCloud, case: Case) -> ZeroStats:
    """Counts and extremes of a zero cloud.

    A zero is called real when ``|Im z| <= 2**-(B/4) * max(|z|, 1)``; real
    zeros within that tolerance of the boundary of the support count as
    inside.
    """
    eps = tol(0, get_precision() // 4)
    real = []
    max_imag = mp.mpf(0)
    max_abs = mp.mpf(0)
    for z in zc.zeros:
        z = mp.mpc(z)
        max_imag = max(max_imag, abs(z.imag))
        max_abs = max(max_abs, abs(z))
        scale = eps * max(abs(z), 1)
        if abs(z.imag) <= scale and case.in_support(z.real, slack=scale):
            real.append(z.real)
    real.sort()
    gap = min((b - a for a, b in zip(real, real[1:])), default=None)
    return ZeroStats(zc.n, len(real), max_imag, gap, max_abs, tuple(real))


@dataclass(frozen=True)
class LimitDensity:
    """Limit distribution of normalised zeros on ``[0,1]`` or ``[-1,1]``."""

    case: Case

    @property
    def support(self) -> tuple[int, int]:
        return self.case.contracted_support

    def density(self, t):
        t = mp.mpf(t)
        lo, hi = self.support
        if t <= lo or t >= hi:
            return mp.mpf(0)
        if self.case.is_laguerre:
            return 2 / mp.pi * mp.sqrt((1 - t) / t)
        return 2 / mp.pi * mp.sqrt(1 - t * t)

    def cdf(self, t):
        t = mp.mpf(t)
        lo, hi = self.support
        if t <= lo:
            return mp.mpf(0)
        if t >= hi:
            return mp.mpf(1)
        if self.case.is_laguerre:
            return 2 / mp.pi * (mp.asin(mp.sqrt(t)) + mp.sqrt(t * (1 - t)))
        return mp.mpf(0.5) + (t * mp.sqrt(1 - t * t) + mp.asin(t)) / mp.pi

    def mass(self):
        lo, hi = self.support
        return self.cdf(hi) - self.cdf(lo)


def ks_distance(zc: ZeroCloud, ld: LimitDensity) -> mp.mpf:
    """Kolmogorov-Smirnov distance between the real parts of a normalised
    cloud and ``ld``; the supremum is taken over the sample points (both
    one-sided limits) and the midpoints between them."""
    if not zc.normalized:
        raise ValueError("ks_distance expects a normalised zero cloud")
    xs = zc.real_parts()
    n = len(xs)
    if n == 0:
        raise ValueError("empty zero cloud")
    d = mp.mpf(0)
    for i, x in enumerate(xs):
        F = ld.cdf(x)
        d = max(d, abs(F - mp.mpf(i) / n), abs(F - mp.mpf(i + 1) / n))
    for i, (x0, x1) in enumerate(zip(xs, xs[1:])):
        d = max(d, abs(ld.cdf((x0 + x1) / 2) - mp.mpf(i + 1) / n))
    return d


def interlace_check(crit, zeros) -> bool:
    """True iff ``zeros[i] < crit[i] < zeros[i+1]`` for every ``i``."""
    crit = list(crit)
    zeros = list(zeros)
    if len(crit) != len(zeros) - 1:
        raise ShapeError(f"need {len(zeros) - 1} critical points, got {len(crit)}")
    for seq in (crit, zeros):
        if any(not b > a for a, b in zip(seq, seq[1:])):
            raise ShapeError("inputs must be strictly increasing")
    return all(zeros[i] < crit[i] < zeros[i + 1] for i in range(len(crit)))
