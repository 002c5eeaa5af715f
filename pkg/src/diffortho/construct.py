"""Differential-orthogonal polynomials ``Qhat_n`` and ``Q_n`` and their identities."""
from __future__ import annotations

from dataclasses import dataclass

import mpmath as mp

from .measures import (
    MeasureSpec,
    gram_table,
    inner_w,
    pn_construct,
)
from .polycore import BasisPoly, apply_operator, squared_norm
from .precision import fmt, fmt_complex, parse_complex, parse_scalar


@dataclass(frozen=True, eq=False)
class DiffOrthoPoly:
    """``Qhat_n`` together with the optional root constraint ``Q_n(zeta) = 0``.

    ``pn`` is the orthogonal polynomial ``P_n`` of the measure that ``qhat``
    was built from; ``L[Qhat_n] = -n P_n``.
    """

    qhat: BasisPoly
    spec: MeasureSpec
    n: int
    pn: BasisPoly
    zeta: mp.mpc | None = None
    q_const: mp.mpc | None = None

    @property
    def q(self) -> BasisPoly:
        """``Q_n = Qhat_n - Qhat_n(zeta)`` (or ``Qhat_n`` without a root)."""
        if self.q_const is None:
            return self.qhat
        c = self.q_const
        if isinstance(c, mp.mpc) and c.imag == 0:
            c = c.real
        return self.qhat.add_constant(-c)

    def to_json(self) -> dict:
        out = self.spec.to_json()
        out.update(
            n=self.n,
            zeta=None if self.zeta is None else fmt_complex(self.zeta),
            coeffs_basis=[fmt(c) for c in self.qhat.coeffs],
            q_const=None if self.q_const is None else fmt_complex(self.q_const),
        )
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DiffOrthoPoly":
        spec = MeasureSpec.from_json(obj)
        qhat = BasisPoly(spec.case, tuple(parse_scalar(c) for c in obj["coeffs_basis"]))
        n = int(obj["n"])
        pn = _pn_from_qhat(qhat, spec, n)
        zeta = None if obj.get("zeta") is None else parse_complex(obj["zeta"])
        qc = None if obj.get("q_const") is None else parse_complex(obj["q_const"])
        return cls(qhat, spec, n, pn, zeta, qc)


def _pn_from_qhat(qhat: BasisPoly, spec: MeasureSpec, n: int) -> BasisPoly:
    cs = list(qhat.coeffs)
    for k in range(1, min(spec.m, n) + 1):
        cs[n - k] = cs[n - k] * (n - k) / n
    return BasisPoly(spec.case, tuple(cs))


def qhat(spec: MeasureSpec, n: int) -> DiffOrthoPoly:
    """``Qhat_n = sum_k (lambda_n / lambda_{n-k}) b_{n,n-k} L_{n-k}``, with the
    ratio taken as the exact rational ``n / (n - k)``."""
    p = pn_construct(spec, n)
    cs = list(p.coeffs)
    for k in range(1, min(spec.m, n) + 1):
        cs[n - k] = cs[n - k] * n / (n - k)
    return DiffOrthoPoly(BasisPoly(spec.case, tuple(cs)), spec, n, p)


def q_with_root(spec: MeasureSpec, n: int, zeta) -> DiffOrthoPoly:
    """``Q_n = Qhat_n - Qhat_n(zeta)``, the polynomial solution vanishing at ``zeta``."""
    d = qhat(spec, n)
    zeta = mp.mpc(zeta)
    return DiffOrthoPoly(d.qhat, spec, n, d.pn, zeta, mp.mpc(d.qhat(zeta)))


def with_root(d: DiffOrthoPoly, zeta) -> DiffOrthoPoly:
    zeta = mp.mpc(zeta)
    return DiffOrthoPoly(d.qhat, d.spec, d.n, d.pn, zeta, mp.mpc(d.qhat(zeta)))


def _mu_norm(table, p: BasisPoly):
    return mp.sqrt(table.inner(p, p))


def diff_orthogonality_residuals(d: DiffOrthoPoly, kmax: int) -> list:
    """``<L[Q_n], x^k>_mu / (||L[Q_n]||_mu ||x^k||_mu)`` for ``k = 0..kmax``."""
    lq = apply_operator(d.spec.case, d.q)
    table = gram_table(d.spec, max(kmax, d.n))
    norm_lq = _mu_norm(table, lq)
    out = []
    xk = BasisPoly.constant(d.spec.case, 1)
    for k in range(kmax + 1):
        out.append(abs(table.inner(lq, xk)) / (norm_lq * _mu_norm(table, xk)))
        xk = xk.times_x()
    return out


def eigen_residual(d: DiffOrthoPoly) -> mp.mpf:
    """Largest coefficient deviation of ``L[Qhat_n]`` from ``lambda_n P_n``.

    Each coefficient is weighted by the basis norm ``sqrt(tau_j)`` and the
    maximum is divided by ``||lambda_n P_n||_w``.
    """
    case = d.spec.case
    lq = apply_operator(case, d.qhat)
    target = d.pn * (-d.n)
    diff = lq - target
    dev = max(abs(c) * mp.sqrt(squared_norm(case, j)) for j, c in enumerate(diff.coeffs))
    return dev / mp.sqrt(inner_w(target, target))


def quasi_orthogonality_residuals(spec: MeasureSpec, n: int, kmax: int | None = None) -> list:
    """``<P_n, x^k>_w / (||P_n||_w ||x^k||_w)`` for ``k = 0..kmax`` (default ``n-m``)."""
    p = pn_construct(spec, n)
    norm_p = mp.sqrt(inner_w(p, p))
    out = []
    xk = BasisPoly.constant(spec.case, 1)
    for k in range((n - spec.m if kmax is None else kmax) + 1):
        out.append(abs(inner_w(p, xk)) / (norm_p * mp.sqrt(inner_w(xk, xk))))
        xk = xk.times_x()
    return out


def coeff_growth_report(spec: MeasureSpec, n_list) -> list[dict]:
    """Rows ``n, k, |b_{n,n-k}|`` and the scaled ratio ``|b|/n^k`` (Laguerre)
    or ``|b|/n^(k/2)`` (Hermite)."""
    rows = []
    for n in n_list:
        p = pn_construct(spec, n)
        for k in range(1, spec.m + 1):
            b = abs(p.coeffs[n - k])
            power = k if spec.case.is_laguerre else mp.mpf(k) / 2
            rows.append({"n": n, "k": k, "abs_b": b, "ratio": b / mp.power(n, power)})
    return rows
