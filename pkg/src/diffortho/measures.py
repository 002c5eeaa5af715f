"""Measures ``mu = w / rho`` and their monic orthogonal polynomials ``P_n``.

Two routes compute ``<p, q>_mu = int p q / rho dw``:

``transform`` (default)
    Partial fractions ``1/rho = sum_r c_r / (x - a_r)`` reduce every entry of
    the Gram matrix to ``-sum_r c_r L_i(a_r) F_j(a_r)`` (``i <= j``), where
    ``F_j(a) = int L_j(x) / (a - x) dw(x)`` is the function of the second kind.
    ``F_0`` has a closed form (incomplete gamma / Faddeeva) and ``F_j`` obeys
    the same three-term recurrence as ``L_j``.

``gauss``
    Gauss rules for ``w`` applied to the rational integrand, doubling the
    node count until two successive values agree.  Convergence is only
    ``exp(-c sqrt(N))`` because of the poles of ``1/rho``, so this route is
    meant for moderate precision and serves as an independent check.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import mpmath as mp
import numpy as np
from scipy.linalg import LinAlgError, eigh_tridiagonal

from .errors import ConvergenceError, EigenError, MeasureError, SingularError, BasisError
from .polycore import (
    HERMITE,
    LAGUERRE,
    BasisPoly,
    Case,
    basis_values,
    recurrence_table,
    squared_norm,
)
from .precision import fmt, get_precision, parse_scalar, tol

GAUSS_N_MAX = 2**15


@dataclass(frozen=True)
class MeasureSpec:
    """``mu = w / rho`` with ``rho`` given by monomial coefficients, low to high."""

    case: Case
    rho: tuple

    def __post_init__(self):
        object.__setattr__(self, "rho", tuple(mp.mpf(c) for c in self.rho))

    @property
    def m(self) -> int:
        return len(self.rho) - 1

    @property
    def rho_plus(self) -> mp.mpf:
        return max(abs(c) for c in self.rho)

    def rho_at(self, x):
        return mp.polyval(list(reversed(self.rho)), x)

    def to_json(self) -> dict:
        return {
            "case": self.case.kind,
            "alpha": fmt(self.case.alpha) if self.case.is_laguerre else None,
            "rho": [fmt(c) for c in self.rho],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MeasureSpec":
        kind = obj["case"]
        if kind == LAGUERRE:
            case = Case.laguerre(parse_scalar(obj.get("alpha") or "0"))
        elif kind == HERMITE:
            case = Case.hermite()
        else:
            raise MeasureError(f"unknown case {kind!r}")
        return validate_spec(cls(case, tuple(parse_scalar(c) for c in obj["rho"])))

    def __str__(self) -> str:
        rho = ",".join(mp.nstr(c, 10) for c in self.rho)
        return f"{self.case} rho=[{rho}]"


def classical_spec(case: Case) -> MeasureSpec:
    return MeasureSpec(case, (1,))


@lru_cache(maxsize=256)
def _rho_roots(rho: tuple, prec: int) -> tuple:
    m = len(rho) - 1
    if m == 0:
        return ()
    if m == 1:
        return (-rho[0] / rho[1],)
    roots = mp.polyroots(list(reversed(rho)), maxsteps=400, extraprec=2 * prec)
    return tuple(roots)


def rho_roots(spec: MeasureSpec) -> tuple:
    return _rho_roots(spec.rho, get_precision())


def validate_spec(spec: MeasureSpec) -> MeasureSpec:
    """Check that ``rho`` is positive on the support and return a normalised copy.

    Trailing zero coefficients are dropped.  Raises :class:`MeasureError` when
    ``rho`` vanishes or changes sign on ``R+`` (Laguerre) or ``R`` (Hermite).
    """
    rho = list(spec.rho)
    while len(rho) > 1 and rho[-1] == 0:
        rho.pop()
    if not rho or rho[-1] == 0:
        raise MeasureError("rho is identically zero")
    spec = MeasureSpec(spec.case, tuple(rho))
    eps = tol(0, get_precision() // 2)
    for a in rho_roots(spec):
        a = mp.mpc(a)
        if abs(a.imag) <= eps * max(1, abs(a)) and spec.case.in_support(a.real, slack=eps):
            raise MeasureError(f"rho vanishes at {mp.nstr(a.real, 12)} inside the support")
    probe = mp.mpf(1) if spec.case.is_laguerre else mp.mpf(0)
    if not spec.rho_at(probe) > 0:
        raise MeasureError("rho is negative on the support")
    return spec


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True)
class QuadRule:
    case: Case
    nodes: tuple
    weights: tuple

    @property
    def N(self) -> int:
        return len(self.nodes)

    def integrate(self, f):
        return mp.fsum(w * f(x) for x, w in zip(self.nodes, self.weights))


_rule_cache: dict = {}
_rule_lock = threading.Lock()


def _polish_node(case: Case, N: int, x, a, b):
    prec = get_precision()
    done = tol(0)
    loose = tol(0, prec // 2)
    last = None
    with mp.workprec(prec + 32):
        for _ in range(100):
            l_prev, l_cur = mp.mpf(0), mp.mpf(1)
            d_prev, d_cur = mp.mpf(0), mp.mpf(0)
            for k in range(N):
                l_prev, l_cur, d_prev, d_cur = (
                    l_cur,
                    (x - a[k]) * l_cur - b[k] * l_prev,
                    d_cur,
                    l_cur + (x - a[k]) * d_cur - b[k] * d_prev,
                )
            step = l_cur / d_cur
            x -= step
            size = abs(step) / max(abs(x), 1)
            if size <= done or (last is not None and size <= loose and size >= last):
                return +x
            last = size
    raise EigenError(f"Gauss node refinement stalled near {mp.nstr(x, 10)}")


def gauss_rule(case: Case, N: int) -> QuadRule:
    """``N``-point Gauss rule for the classical weight of ``case``.

    Nodes are the eigenvalues of the symmetric Jacobi matrix (computed in
    double precision and refined by Newton at working precision); weights are
    ``mu_0`` times the squared first eigenvector components, i.e. the
    reciprocal Christoffel sums ``1 / sum_j L_j(x)^2 / tau_j``.
    """
    if N < 1:
        raise ValueError("a Gauss rule needs at least one node")
    key = (case, N, get_precision())
    with _rule_lock:
        hit = _rule_cache.get(key)
    if hit is not None:
        return hit
    a, b = recurrence_table(case, N)
    diag = np.array([float(x) for x in a[:N]])
    off = np.sqrt(np.array([float(x) for x in b[1:N]]))
    try:
        seeds = eigh_tridiagonal(diag, off, eigvals_only=True) if N > 1 else diag
    except LinAlgError as exc:
        raise EigenError(str(exc)) from exc
    taus = [squared_norm(case, j) for j in range(N)]
    nodes, weights = [], []
    for s in np.sort(seeds):
        x = _polish_node(case, N, mp.mpf(float(s)), a, b)
        vals = basis_values(case, N - 1, x)
        weights.append(1 / mp.fsum(v * v / t for v, t in zip(vals, taus)))
        nodes.append(x)
    for x0, x1 in zip(nodes, nodes[1:]):
        if not x1 > x0:
            raise EigenError("Gauss nodes failed to separate")
    rule = QuadRule(case, tuple(nodes), tuple(weights))
    with _rule_lock:
        _rule_cache.setdefault(key, rule)
    return rule


# ------------------------------------------------------------ inner products


def inner_w(p: BasisPoly, q: BasisPoly) -> mp.mpf:
    """``<p, q>_w`` from basis orthogonality, ``sum_j p_j q_j tau_j``."""
    if p.case != q.case:
        raise BasisError(f"basis mismatch: {p.case} vs {q.case}")
    n = min(p.degree, q.degree)
    return mp.fsum(p.coeffs[j] * q.coeffs[j] * squared_norm(p.case, j) for j in range(n + 1))


def _second_kind_start(case: Case, a) -> mp.mpc:
    """``F_0(a) = int dw(x) / (a - x)`` for ``a`` off the support."""
    a = mp.mpc(a)
    if case.is_laguerre:
        s = -a
        al = case.alpha
        return -mp.gamma(al + 1) * mp.exp(s) * mp.power(s, al) * mp.gammainc(-al, s)
    if a.imag > 0:
        return -1j * mp.pi * mp.exp(-a * a) * mp.erfc(-1j * a)
    if a.imag < 0:
        return mp.conj(_second_kind_start(case, mp.conj(a)))
    raise MeasureError("Hermite Stieltjes transform needs a non-real point")


def second_kind_values(case: Case, a, n: int) -> list:
    """``[F_0(a), ..., F_n(a)]`` with ``F_j(a) = int L_j(x) / (a - x) dw(x)``.

    ``F_j`` is the minimal solution of the recurrence, so the forward sweep
    runs with guard bits that are doubled until the top value is stable.
    """
    prec = get_precision()
    target = tol(2)
    guard = 64
    previous = None
    while guard <= 8192:
        with mp.workprec(prec + guard):
            aa, bb = recurrence_table(case, n)
            z = mp.mpc(a)
            f = [_second_kind_start(case, z)]
            if n >= 1:
                f.append((z - aa[0]) * f[0] - squared_norm(case, 0))
            for k in range(1, n):
                f.append((z - aa[k]) * f[k] - bb[k] * f[k - 1])
        if previous is not None and abs(f[-1] - previous[-1]) <= target * abs(f[-1]):
            return [+v for v in f]
        previous = f
        guard *= 2
    raise ConvergenceError("second-kind recurrence did not stabilise")


class GramTable:
    """``<L_i, L_j>_mu`` for ``i, j <= n`` via the transform route."""

    def __init__(self, spec: MeasureSpec, n: int):
        self.spec = spec
        self.n = n
        case = spec.case
        self._classical = spec.m == 0
        if self._classical:
            self._rho0 = spec.rho[0]
            return
        roots = rho_roots(spec)
        self._check_distinct(roots)
        rho_desc = list(reversed(spec.rho))
        self._terms = []
        for r in roots:
            r = mp.mpc(r)
            c = 1 / mp.polyval(rho_desc, r, derivative=True)[1]
            self._terms.append((c, basis_values(case, n, r), second_kind_values(case, r, n)))

    @staticmethod
    def _check_distinct(roots) -> None:
        eps = tol(0, get_precision() // 2)
        for i, x in enumerate(roots):
            for y in roots[i + 1:]:
                if abs(x - y) <= eps * max(1, abs(x)):
                    raise MeasureError("rho has a repeated root; use method='gauss'")

    def entry(self, i: int, j: int) -> mp.mpf:
        if self._classical:
            return squared_norm(self.spec.case, i) / self._rho0 if i == j else mp.mpf(0)
        if i > j:
            i, j = j, i
        s = mp.fsum(c * lv[i] * fv[j] for c, lv, fv in self._terms)
        return -mp.re(s)

    def inner(self, p: BasisPoly, q: BasisPoly) -> mp.mpf:
        if p.case != self.spec.case or q.case != self.spec.case:
            raise BasisError("polynomial basis does not match the measure")
        if max(p.degree, q.degree) > self.n:
            raise ValueError("Gram table too small for these degrees")
        if self._classical:
            return inner_w(p, q) / self._rho0
        pc = list(p.coeffs) + [0] * (self.n + 1 - len(p.coeffs))
        qc = list(q.coeffs) + [0] * (self.n + 1 - len(q.coeffs))
        top = max(p.degree, q.degree)
        total = mp.mpc(0)
        for c, lv, fv in self._terms:
            # sum_{i<=j} p_i q_j L_i F_j + sum_{i<j} q_i p_j L_i F_j
            acc_p = acc_q = mp.mpf(0)
            s = mp.mpc(0)
            for j in range(top + 1):
                acc_p += pc[j] * lv[j]
                s += fv[j] * (qc[j] * acc_p + pc[j] * acc_q)
                acc_q += qc[j] * lv[j]
            total += c * s
        return -mp.re(total)


_gram_cache: dict = {}
_gram_lock = threading.Lock()


def gram_table(spec: MeasureSpec, n: int) -> GramTable:
    """Cached Gram table covering degrees ``0..n`` (at least)."""
    key = (spec, get_precision())
    with _gram_lock:
        hit = _gram_cache.get(key)
    if hit is not None and hit.n >= n:
        return hit
    table = GramTable(spec, max(n, 8))
    with _gram_lock:
        cur = _gram_cache.get(key)
        if cur is None or cur.n < table.n:
            _gram_cache[key] = table
    return table


def inner_mu_gauss(p: BasisPoly, q: BasisPoly, spec: MeasureSpec, n_max: int = GAUSS_N_MAX):
    """Gauss-w quadrature of ``p q / rho`` with node doubling.

    Stops when two successive values differ by at most ``2**-(B-30)`` times
    the quadrature of ``|p q| / rho``; raises :class:`ConvergenceError` past
    ``n_max`` nodes.
    """
    deg = p.degree + q.degree
    N = 8
    while N < deg // 2 + 2:
        N *= 2
    eps = tol(30)
    prev = None
    while N <= n_max:
        rule = gauss_rule(spec.case, N)
        vals = []
        for x, w in zip(rule.nodes, rule.weights):
            vals.append(w * p(x) * q(x) / spec.rho_at(x))
        cur = mp.fsum(vals)
        scale = mp.fsum(abs(v) for v in vals)
        if prev is not None and abs(cur - prev) <= eps * scale:
            return cur
        prev = cur
        N *= 2
    raise ConvergenceError(f"Gauss quadrature of p q / rho did not settle by {n_max} nodes")


def inner_mu(p: BasisPoly, q: BasisPoly, spec: MeasureSpec, method: str = "transform"):
    """``<p, q>_mu = int p q / rho dw``."""
    if p.case != spec.case or q.case != spec.case:
        raise BasisError("polynomial basis does not match the measure")
    if method == "gauss":
        return inner_mu_gauss(p, q, spec)
    if method != "transform":
        raise ValueError(f"unknown method {method!r}")
    return gram_table(spec, max(p.degree, q.degree)).inner(p, q)


# ------------------------------------------------------ orthogonal polynomials


def _check_degree(spec: MeasureSpec, n: int) -> None:
    if spec.m > 0 and n <= spec.m:
        raise ValueError(f"n={n} must exceed deg rho = {spec.m}")


def pn_construct(spec: MeasureSpec, n: int) -> BasisPoly:
    """Monic ``P_n = sum_{k<=m} b_{n,n-k} L_{n-k}`` from the m x m Gram system.

    The unknowns ``b_{n,n-k}`` (``k = 1..m``) solve
    ``<P_n, L_{n-j}>_mu = 0`` for ``j = 1..m``.
    """
    _check_degree(spec, n)
    case = spec.case
    m = spec.m
    if m == 0:
        return BasisPoly.basis(case, n)
    g = gram_table(spec, n)
    d = [1 / mp.sqrt(squared_norm(case, n - k)) for k in range(m + 1)]
    A = mp.matrix(m, m)
    rhs = mp.matrix(m, 1)
    for j in range(1, m + 1):
        for k in range(1, m + 1):
            A[j - 1, k - 1] = g.entry(n - j, n - k) * d[j] * d[k]
        rhs[j - 1] = -g.entry(n - j, n) * d[j] * d[0]
    try:
        inv = mp.inverse(A)
    except ZeroDivisionError as exc:
        raise SingularError("Gram system is singular") from exc
    if mp.mnorm(A, 1) * mp.mnorm(inv, 1) > mp.ldexp(1, get_precision() // 2):
        raise SingularError("Gram system is numerically singular")
    y = mp.lu_solve(A, rhs)
    coeffs = [mp.mpf(0)] * (n + 1)
    coeffs[n] = mp.mpf(1)
    for k in range(1, m + 1):
        coeffs[n - k] = y[k - 1] * d[k] / d[0]
    return BasisPoly(case, tuple(coeffs))


def expansion_coefficients(p: BasisPoly, spec: MeasureSpec) -> list:
    """``[(k, b_{n,n-k})]`` for ``k = 0..m``."""
    n = p.degree
    return [(k, p.coeffs[n - k]) for k in range(min(spec.m, n) + 1)]


def pn_stieltjes(spec: MeasureSpec, n: int, method: str = "transform") -> BasisPoly:
    """Monic ``P_n`` from the Stieltjes procedure on ``mu``.

    Builds ``beta_k = <x p_k, p_k> / <p_k, p_k>`` and
    ``alpha_k^2 = <p_k, p_k> / <p_{k-1}, p_{k-1}>`` and unrolls
    ``p_{k+1} = (x - beta_k) p_k - alpha_k^2 p_{k-1}``.
    """
    case = spec.case
    if method == "transform":
        table = gram_table(spec, n)
        inner = table.inner
    else:
        def inner(p, q):
            return inner_mu(p, q, spec, method)
    p_prev = None
    p_cur = BasisPoly.constant(case, 1)
    h_prev = None
    h_cur = inner(p_cur, p_cur)
    for _ in range(n):
        xp = p_cur.times_x()
        beta = inner(xp, p_cur) / h_cur
        nxt = xp - p_cur * beta
        if p_prev is not None:
            nxt = nxt - p_prev * (h_cur / h_prev)
        p_prev, p_cur = p_cur, nxt
        h_prev, h_cur = h_cur, inner(nxt, nxt)
    return p_cur


def parse_rho(items: Sequence) -> tuple:
    return tuple(parse_scalar(x) for x in items)
