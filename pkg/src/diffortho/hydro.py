"""Point-singularity flow whose stagnation points are the zeros of ``P_n``.

Each point ``w_i`` carries the strength ``f_i = R''(w_i)/R'(w_i)`` with
``R = prod (z - w_i)``.  The complex velocities are

    Laguerre: V' = sum[-1 + (1+alpha-w_i)/(z-w_i) + f_i (1 + w_i/(z-w_i))]
    Hermite:  V' = sum[-1 + (f_i/2 - w_i)/(z-w_i)]

and reduce to ``L[R]/R`` for the respective operator ``L``.
"""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import mpmath as mp

from .construct import eigen_residual, qhat
from .errors import CollisionError, DegenerateError, MeasureError, PoleError
from .measures import MeasureSpec
from .polycore import Case
from .precision import fmt, get_precision, parse_scalar, tol
from .spectra import roots


def gap_floor():
    return tol(0, get_precision() // 2)


@dataclass(frozen=True)
class FlowSystem:
    case: Case
    points: tuple
    strengths: tuple

    @property
    def alpha(self):
        return self.case.alpha

    def to_json(self) -> dict:
        pair = lambda z: [fmt(mp.re(z)), fmt(mp.im(z))]  # noqa: E731
        return {
            "case": self.case.kind,
            "alpha": None if self.case.alpha is None else fmt(self.case.alpha),
            "points": [pair(w) for w in self.points],
            "strengths": [pair(f) for f in self.strengths],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FlowSystem":
        case = Case.laguerre(parse_scalar(obj["alpha"])) if obj["case"] == "laguerre" else Case.hermite()
        unpair = lambda p: mp.mpc(parse_scalar(p[0]), parse_scalar(p[1]))  # noqa: E731
        return cls(case, tuple(unpair(p) for p in obj["points"]), tuple(unpair(p) for p in obj["strengths"]))


def f_values(points) -> list:
    """``f_i = 2 sum_{j != i} 1/(w_i - w_j)``."""
    pts = [mp.mpc(w) for w in points]
    floor = gap_floor()
    out = []
    for i, wi in enumerate(pts):
        terms = []
        for j, wj in enumerate(pts):
            if i == j:
                continue
            d = wi - wj
            if abs(d) <= floor * max(1, abs(wi)):
                raise CollisionError(f"points {i} and {j} are closer than the gap floor")
            terms.append(1 / d)
        out.append(mp.mpc(2 * mp.fsum(terms)))
    return out


def build_system(case: Case, points) -> FlowSystem:
    pts = tuple(mp.mpc(w) for w in points)
    return FlowSystem(case, pts, tuple(f_values(pts)))


def _velocity_terms(sys: FlowSystem, z) -> list:
    z = mp.mpc(z)
    floor = gap_floor()
    terms = []
    for w, f in zip(sys.points, sys.strengths):
        d = z - w
        if abs(d) <= floor * max(1, abs(w)):
            raise PoleError("z is within the gap floor of a singular point")
        if sys.case.is_laguerre:
            terms += [mp.mpf(-1), (1 + sys.alpha - w) / d, f, f * w / d]
        else:
            terms += [mp.mpf(-1), (f / 2 - w) / d]
    return terms


def velocity(sys: FlowSystem, z) -> mp.mpc:
    return mp.fsum(_velocity_terms(sys, z))


def velocity_derivative(sys: FlowSystem, z) -> mp.mpc:
    z = mp.mpc(z)
    out = []
    for w, f in zip(sys.points, sys.strengths):
        d2 = (z - w) ** 2
        if sys.case.is_laguerre:
            out.append(-((1 + sys.alpha - w) + f * w) / d2)
        else:
            out.append(-(f / 2 - w) / d2)
    return mp.fsum(out)


def potential_and_velocity(sys: FlowSystem, z) -> tuple:
    """``(V(z), V'(z))`` with principal logarithms in ``V``.

    ``V`` jumps across the branch cuts of ``log(z - w_i)``; ``V'`` is
    single-valued.
    """
    z = mp.mpc(z)
    vp = velocity(sys, z)
    acc = []
    for w, f in zip(sys.points, sys.strengths):
        lg = mp.log(z - w)
        if sys.case.is_laguerre:
            acc += [-z, (1 + sys.alpha - w) * lg, (z + w * lg) * f]
        else:
            acc += [-z, (f - 2 * w) / 2 * lg]
    return mp.fsum(acc), vp


def partial_fraction_residual(sys: FlowSystem, x) -> mp.mpf:
    """``|sum f_i/(x - w_i) - R''(x)/R(x)|``, relative to the larger side."""
    x = mp.mpc(x)
    lhs = mp.fsum(f / (x - w) for w, f in zip(sys.points, sys.strengths))
    # R''/R = (sum 1/(x-w))^2 - sum 1/(x-w)^2
    s1 = mp.fsum(1 / (x - w) for w in sys.points)
    s2 = mp.fsum(1 / (x - w) ** 2 for w in sys.points)
    rhs = s1 * s1 - s2
    return abs(lhs - rhs) / max(abs(lhs), abs(rhs), mp.mpf(1))


# ------------------------------------------------------------- stagnation


@dataclass(frozen=True)
class StagnationReport:
    n: int
    stagnation_points: tuple
    residuals: tuple
    max_residual: mp.mpf
    recovered: tuple
    max_recovery_distance: mp.mpf
    unrecovered: int
    eigen_residual: mp.mpf


def is_proved_class(spec: MeasureSpec) -> bool:
    """Laguerre with ``deg rho = 1`` or Hermite with ``rho ~ x^2 + x1^2``."""
    if spec.case.is_laguerre:
        return spec.m == 1
    r = spec.rho
    return spec.m == 2 and r[1] == 0 and r[0] > 0


def _newton_velocity(sys: FlowSystem, z, iters: int = 60):
    """Damped Newton on ``V'``: each step is halved until ``|V'|`` decreases.

    The damping matters because a seed can sit across a nearby pole.
    """
    prec = get_precision()
    done = tol(8)
    loose = tol(0, prec // 2)
    with mp.workprec(prec + 32):
        z = mp.mpc(z)
        try:
            v = velocity(sys, z)
        except PoleError:
            return None
        for _ in range(iters):
            dv = velocity_derivative(sys, z)
            if dv == 0:
                return None
            step = v / dv
            lam = mp.mpf(1)
            for _ in range(40):
                try:
                    zn = z - lam * step
                    vn = velocity(sys, zn)
                except PoleError:
                    vn = None
                if vn is not None and abs(vn) < abs(v):
                    break
                lam /= 2
            else:
                # no decrease: converged only if already at the noise floor
                return +z if abs(step) <= loose * max(1, abs(z)) else None
            z, v = zn, vn
            if abs(lam * step) <= done * max(1, abs(z)):
                return +z
    return None


def stagnation_verify(spec: MeasureSpec, n: int, strict: bool = True, zeta=None) -> StagnationReport:
    """Place the system at the zeros of ``Qhat_n`` and check that ``V'``
    vanishes at every zero of ``P_n``.

    With ``zeta`` the points are the zeros of ``Q_n = Qhat_n - Qhat_n(zeta)``
    instead (an experiment; nothing is asserted about it).

    Residuals are ``|sum terms| / sum |terms|`` over the summands of ``V'``.
    Damped Newton on ``V'`` is started from ``x_k (1 + 1e-3)``; a seed that
    fails within 60 steps counts as unrecovered.
    """
    if spec.m < 1:
        raise MeasureError("the flow model needs deg rho >= 1")
    if strict and not is_proved_class(spec):
        raise MeasureError("measure is outside the proved classes (pass strict=False to experiment)")
    d = qhat(spec, n)
    r = d.qhat if zeta is None else d.qhat.add_constant(-d.qhat(mp.mpc(zeta)))
    w = roots(r).zeros
    sys = build_system(spec.case, w)
    xs = roots(d.pn).zeros
    floor = gap_floor()
    for x in xs:
        for wi in w:
            if abs(x - wi) <= floor * max(1, abs(x)):
                raise DegenerateError("a zero of P_n coincides with a zero of Qhat_n")
    residuals = []
    for x in xs:
        terms = _velocity_terms(sys, x)
        residuals.append(abs(mp.fsum(terms)) / mp.fsum(abs(t) for t in terms))
    recovered = []
    for x in xs:
        seed = x * (1 + mp.mpf("1e-3")) if x != 0 else mp.mpf("1e-3")
        z = _newton_velocity(sys, seed)
        recovered.append(None if z is None else abs(z - x))
    found = [r for r in recovered if r is not None]
    return StagnationReport(
        n=n,
        stagnation_points=tuple(xs),
        residuals=tuple(residuals),
        max_residual=max(residuals),
        recovered=tuple(recovered),
        max_recovery_distance=max(found) if found else mp.inf,
        unrecovered=len(recovered) - len(found),
        eigen_residual=eigen_residual(d),
    )


# ------------------------------------------------------------------ field

FIELD_HEADER = (
    "# u = Re(conj V'), v = Im(conj V'), psi_stream = Im V (principal logs); "
    "mask = 1 marks grid points within the gap floor of a singular point"
)


def sample_field(sys: FlowSystem, window, step) -> list[dict]:
    """Velocity and stream function on the grid ``window = (xmin, xmax, ymin, ymax)``."""
    x0, x1, y0, y1 = (mp.mpf(v) for v in window)
    step = mp.mpf(step)
    nx = int(mp.nint((x1 - x0) / step)) + 1
    ny = int(mp.nint((y1 - y0) / step)) + 1
    rows = []
    for i in range(ny):
        y = y0 + i * step
        for j in range(nx):
            x = x0 + j * step
            z = mp.mpc(x, y)
            try:
                V, vp = potential_and_velocity(sys, z)
            except PoleError:
                rows.append(dict(re=x, im=y, u=None, v=None, psi_stream=None, mask=1))
                continue
            c = mp.conj(vp)
            rows.append(dict(re=x, im=y, u=c.real, v=c.imag, psi_stream=V.imag, mask=0))
    return rows


def field_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    buf.write(FIELD_HEADER + "\n")
    w = csv.writer(buf, lineterminator="\n")
    cols = ("re", "im", "u", "v", "psi_stream", "mask")
    w.writerow(cols)
    for r in rows:
        w.writerow(["" if r[c] is None else (r[c] if c == "mask" else fmt(r[c])) for c in cols])
    return buf.getvalue()
