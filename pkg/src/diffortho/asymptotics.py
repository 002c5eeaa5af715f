"""Exterior maps, comparison function, nth-root and ratio asymptotics, and the
level curve that attracts the zeros of ``Q_n``."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import mpmath as mp
import numpy as np

from .construct import qhat
from .errors import BranchError, EmptyCurveError, RangeError, RegionError
from .measures import MeasureSpec
from .polycore import BasisPoly, Case, mrs_constant
from .precision import fmt, fmt_complex, get_precision, tol
from .spectra import roots

CURVE_RTOL = 1e-3


@dataclass(frozen=True)
class MapValues:
    phi: mp.mpc
    psi: mp.mpc
    capital_psi: mp.mpf
    nth_root_limit: mp.mpf


def support_distance(case: Case, z) -> mp.mpf:
    """Distance from ``z`` to the contracted support."""
    z = mp.mpc(z)
    lo, hi = case.contracted_support
    x = min(max(z.real, lo), hi)
    return abs(z - x)


def support_far_distance(case: Case, z) -> mp.mpf:
    """``sup |z - x|`` over the contracted support."""
    z = mp.mpc(z)
    lo, hi = case.contracted_support
    return max(abs(z - lo), abs(z - hi))


def _on_support(case: Case, z) -> bool:
    return support_distance(case, z) <= tol(0, get_precision() // 2) * max(1, abs(z))


def phi_map(z):
    z = mp.mpc(z)
    return z + mp.sqrt(z - 1) * mp.sqrt(z + 1)


def psi_map(z):
    z = mp.mpc(z)
    return 2 * z - 1 + 2 * mp.sqrt(z) * mp.sqrt(z - 1)


def log_capital_psi(case: Case, z) -> mp.mpf:
    """``log Psi(z)``.

    Hermite: ``Psi = |phi| exp(Re z/phi)``.  Laguerre: ``Psi = |psi| exp(Re 1/psi)``,
    which is the Hermite function at ``sqrt z`` squared (``psi(z) = phi(sqrt z)^2``).
    """
    if case.is_laguerre:
        s = psi_map(z)
        return mp.log(abs(s)) + mp.re(1 / s)
    f = phi_map(z)
    return mp.log(abs(f)) + mp.re(mp.mpc(z) / f)


def _limit_constant(case: Case):
    return mp.mpf(4) if case.is_laguerre else 2 * mp.sqrt(mp.e)


def conformal_maps(case: Case, z) -> MapValues:
    """``phi``, ``psi``, ``Psi`` and the nth-root limit at ``z`` off the support."""
    z = mp.mpc(z)
    if _on_support(case, z):
        raise BranchError(f"{fmt_complex(z)} lies on the contracted support")
    lp = log_capital_psi(case, z)
    cap = mp.exp(lp)
    return MapValues(phi_map(z), psi_map(z), cap, cap / _limit_constant(case))


def log_abs_normalized(p: BasisPoly, z, c) -> mp.mpf:
    """``log |c^-n p(c z)|`` with ``n = deg p``."""
    v = abs(p(mp.mpc(z) * c))
    if v == 0:
        return mp.mpf("-inf")
    out = mp.log(v) - p.degree * mp.log(c)
    if not mp.isfinite(out):
        raise RangeError("log-magnitude is not finite")
    return out


# ------------------------------------------------------------------ reports

NTH_ROOT_COLUMNS = ("z", "n", "value", "limit", "rel_error")
RATIO_COLUMNS = ("z", "n", "region", "ratio", "abs_error")


def nth_root_report(spec: MeasureSpec, z_set, n_set) -> list[dict]:
    """Rows comparing ``|Qhat_n(z)|^(1/n)`` (normalised) with its limit."""
    case = spec.case
    limits = {z: conformal_maps(case, z).nth_root_limit for z in z_set}
    rows = []
    for n in n_set:
        d = qhat(spec, n)
        c = mrs_constant(case, n)
        for z in z_set:
            val = mp.exp(log_abs_normalized(d.qhat, z, c) / n)
            lim = limits[z]
            rows.append(dict(z=mp.mpc(z), n=n, value=val, limit=lim, rel_error=abs(val - lim) / lim))
    return rows


def classify_region(case: Case, z, zeta) -> str:
    """``outer`` if ``Psi(z) > Psi(zeta)``, ``inner`` if smaller.

    Points on the contracted support count as inner when ``d(zeta) > 2``.
    """
    lz = log_capital_psi(case, zeta)
    if _on_support(case, z):
        if support_distance(case, zeta) > 2:
            return "inner"
        raise BranchError(f"{fmt_complex(mp.mpc(z))} lies on the contracted support")
    g = log_capital_psi(case, z) - lz
    if abs(g) <= CURVE_RTOL * abs(lz):
        raise RegionError(f"{fmt_complex(mp.mpc(z))} is within tolerance of the level curve")
    return "outer" if g > 0 else "inner"


def ratio_report(spec: MeasureSpec, z_set, n_set, zeta=None) -> list[dict]:
    """Ratio asymptotics in normalised coordinates.

    Without ``zeta`` each row holds ``P_n(z)/Qhat_n(z)`` (target 1, region
    ``outer``).  With ``zeta`` the root is placed at ``c_n zeta`` and rows hold
    ``Q_n(z)/P_n(z)`` (outer, target 1) or ``Q_n(z)/P_n(zeta)`` (inner,
    target -1).
    """
    case = spec.case
    regions = {}
    if zeta is not None:
        zeta = mp.mpc(zeta)
        regions = {z: classify_region(case, z, zeta) for z in z_set}
    rows = []
    for n in n_set:
        d = qhat(spec, n)
        c = mrs_constant(case, n)
        if zeta is not None:
            qc = d.qhat(c * zeta)
            p_zeta = d.pn(c * zeta)
        for z in z_set:
            w = c * mp.mpc(z)
            if zeta is None:
                region, ratio, target = "outer", d.pn(w) / d.qhat(w), 1
            elif regions[z] == "outer":
                region, ratio, target = "outer", (d.qhat(w) - qc) / d.pn(w), 1
            else:
                region, ratio, target = "inner", (d.qhat(w) - qc) / p_zeta, -1
            rows.append(dict(z=mp.mpc(z), n=n, region=region, ratio=mp.mpc(ratio),
                             abs_error=abs(ratio - target)))
    return rows


def report_csv(rows: list[dict], columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_cell(r[c]) for c in columns])
    return buf.getvalue()


def _cell(v):
    if isinstance(v, mp.mpc):
        return fmt_complex(v)
    if isinstance(v, mp.mpf):
        return fmt(v)
    return str(v)


# -------------------------------------------------------------- level curve


def _log_psi_grid(case: Case, z: np.ndarray) -> np.ndarray:
    if case.is_laguerre:
        s = 2 * z - 1 + 2 * np.sqrt(z) * np.sqrt(z - 1)
        return np.log(np.abs(s)) + (1 / s).real
    f = z + np.sqrt(z - 1) * np.sqrt(z + 1)
    return np.log(np.abs(f)) + (z / f).real


def _support_distance_grid(case: Case, z: np.ndarray) -> np.ndarray:
    lo, hi = case.contracted_support
    return np.abs(z - np.clip(z.real, lo, hi))


@dataclass(frozen=True)
class LevelCurve:
    polylines: tuple
    zeta: mp.mpc
    case: Case
    resolution: float
    tolerance: float
    window: tuple = field(default=(0, 0, 0, 0))

    def vertices(self) -> np.ndarray:
        if not self.polylines:
            return np.zeros(0, dtype=complex)
        return np.concatenate([np.asarray(pl, dtype=complex) for pl in self.polylines])

    def max_residual(self) -> mp.mpf:
        """Largest ``|log Psi(v) - log Psi(zeta)|`` over vertices, at working precision."""
        lz = log_capital_psi(self.case, self.zeta)
        return max((abs(log_capital_psi(self.case, complex(v)) - lz) for v in self.vertices()),
                   default=mp.mpf(0))

    def distance(self, points) -> np.ndarray:
        """Distance from each point to the nearest curve segment."""
        pts = np.asarray(points, dtype=complex)
        a = np.concatenate([np.asarray(pl[:-1], dtype=complex) for pl in self.polylines if len(pl) > 1] or [np.zeros(0, complex)])
        b = np.concatenate([np.asarray(pl[1:], dtype=complex) for pl in self.polylines if len(pl) > 1] or [np.zeros(0, complex)])
        if a.size == 0:
            v = self.vertices()
            return np.min(np.abs(pts[:, None] - v[None, :]), axis=1)
        ab = b - a
        L2 = np.abs(ab) ** 2
        L2[L2 == 0] = 1.0
        t = ((pts[:, None] - a[None, :]) * np.conj(ab)[None, :]).real / L2[None, :]
        t = np.clip(t, 0.0, 1.0)
        proj = a[None, :] + t * ab[None, :]
        return np.min(np.abs(pts[:, None] - proj), axis=1)

    def csv_text(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["polyline_id", "vertex_index", "re", "im"])
        for pid, pl in enumerate(self.polylines):
            for k, v in enumerate(pl):
                w.writerow([pid, k, fmt(mp.mpf(v.real)), fmt(mp.mpf(v.imag))])
        return buf.getvalue()


def trace_level_curve(case: Case, zeta, window, step) -> LevelCurve:
    """Marching squares on ``G = log Psi - log Psi(zeta)``.

    ``window`` is ``(xmin, xmax, ymin, ymax)``.  Grid nodes closer than
    ``step`` to the contracted support are masked, saddle cells are split by
    the sign of ``G`` at the cell centre and crossings are refined by
    bisection along the grid edge.
    """
    zeta = mp.mpc(zeta)
    if _on_support(case, zeta):
        raise BranchError("zeta lies on the contracted support")
    x0, x1, y0, y1 = (float(v) for v in window)
    step = float(step)
    if not (x1 > x0 and y1 > y0 and step > 0):
        raise ValueError("window must be (xmin, xmax, ymin, ymax) with positive extent and step")
    lz = float(log_capital_psi(case, zeta))
    curve_tol = CURVE_RTOL * abs(lz)
    nx = int(round((x1 - x0) / step)) + 1
    ny = int(round((y1 - y0) / step)) + 1
    xs = x0 + step * np.arange(nx)
    ys = y0 + step * np.arange(ny)
    Z = xs[None, :] + 1j * ys[:, None]

    def G(z):
        with np.errstate(all="ignore"):
            return _log_psi_grid(case, z) - lz

    g = G(Z)
    g[_support_distance_grid(case, Z) < step] = np.nan
    pos = g >= 0
    valid = ~np.isnan(g)

    # cell corners: 0=(i,j) 1=(i,j+1) 2=(i+1,j+1) 3=(i+1,j); edges 0:bottom 1:right 2:top 3:left
    c0, c1, c2, c3 = pos[:-1, :-1], pos[:-1, 1:], pos[1:, 1:], pos[1:, :-1]
    ok = valid[:-1, :-1] & valid[:-1, 1:] & valid[1:, 1:] & valid[1:, :-1]
    idx = (c0.astype(int) | (c1.astype(int) << 1) | (c2.astype(int) << 2) | (c3.astype(int) << 3))
    idx[~ok] = 0
    centre = G(Z[:-1, :-1] + (step + 1j * step) / 2) >= 0

    table = {
        1: [(3, 0)], 2: [(0, 1)], 3: [(3, 1)], 4: [(1, 2)], 6: [(0, 2)], 7: [(3, 2)],
        8: [(2, 3)], 9: [(0, 2)], 11: [(1, 2)], 12: [(1, 3)], 13: [(0, 1)], 14: [(3, 0)],
    }
    segments = []
    for i, j in zip(*np.nonzero((idx != 0) & (idx != 15))):
        k = int(idx[i, j])
        if k in (5, 10):
            # saddle: corners 0,2 share a sign; centre decides the pairing
            if bool(centre[i, j]) == bool(c0[i, j]):
                pairs = [(3, 2), (0, 1)]  # corners 0 and 2 connected
            else:
                pairs = [(3, 0), (1, 2)]
        else:
            pairs = table[k]
        for ea, eb in pairs:
            segments.append((_edge_key(i, j, ea), _edge_key(i, j, eb)))
    if not segments:
        raise EmptyCurveError("no sign change of the level function in the window")

    keys = sorted({k for s in segments for k in s})
    pts = _refine_edges(keys, xs, ys, G)
    lines = _chain(segments)
    polylines = tuple(tuple(pts[k] for k in line) for line in lines)
    return LevelCurve(polylines, zeta, case, step, curve_tol, (x0, x1, y0, y1))


def _edge_key(i, j, e):
    # horizontal edge ('h', i, j) joins nodes (i,j)-(i,j+1); vertical ('v', i, j) joins (i,j)-(i+1,j)
    return {0: ("h", i, j), 1: ("v", i, j + 1), 2: ("h", i + 1, j), 3: ("v", i, j)}[e]


def _refine_edges(keys, xs, ys, G, iters: int = 60) -> dict:
    a = np.array([xs[j] + 1j * ys[i] for _, i, j in keys])
    b = np.array([xs[j + 1] + 1j * ys[i] if d == "h" else xs[j] + 1j * ys[i + 1] for d, i, j in keys])
    ga = G(a)
    for _ in range(iters):
        mid = (a + b) / 2
        gm = G(mid)
        same = (gm >= 0) == (ga >= 0)
        a = np.where(same, mid, a)
        ga = np.where(same, gm, ga)
        b = np.where(same, b, mid)
    return {k: complex(v) for k, v in zip(keys, (a + b) / 2)}


def _chain(segments) -> list:
    adj: dict = {}
    for u, v in segments:
        adj.setdefault(u, []).append(v)
        adj.setdefault(v, []).append(u)
    for k in adj:
        adj[k].sort()
    used = set()
    lines = []

    def walk(start):
        line = [start]
        prev, cur = None, start
        while True:
            nxt = None
            for cand in adj[cur]:
                edge = (min(cur, cand), max(cur, cand))
                if edge not in used:
                    nxt = cand
                    used.add(edge)
                    break
            if nxt is None:
                return line
            line.append(nxt)
            prev, cur = cur, nxt
            if cur == start:
                return line

    for k in sorted(adj):
        if len(adj[k]) == 1 and any((min(k, v), max(k, v)) not in used for v in adj[k]):
            lines.append(walk(k))
    for k in sorted(adj):
        if any((min(k, v), max(k, v)) not in used for v in adj[k]):
            lines.append(walk(k))
    return lines


# ------------------------------------------------------------ localisation


@dataclass(frozen=True)
class ZeroLocus:
    n: int
    zeros: tuple
    curve_distance: tuple
    support_distance: tuple
    summary: mp.mpf
    bounded: bool
    tube_free: bool | None
    simple: bool
    min_gap: mp.mpf


def default_window(case: Case, zeta, margin: float = 2.0) -> tuple:
    r = float(support_far_distance(case, zeta)) + margin
    lo, hi = case.contracted_support
    c = (lo + hi) / 2
    return (c - r, c + r, -r, r)


def zero_locus_distances(spec: MeasureSpec, zeta, n: int, step: float = 0.01,
                         curve: LevelCurve | None = None) -> ZeroLocus:
    """Distances of the normalised zeros of ``Q_n`` (root at ``c_n zeta``)
    to the level curve through ``zeta`` and to the contracted support.

    For ``zeta`` on the support the curve distances are ``inf``.
    """
    case = spec.case
    zeta = mp.mpc(zeta)
    on_support = _on_support(case, zeta)
    if curve is None and not on_support:
        curve = trace_level_curve(case, zeta, default_window(case, zeta), step)
    c = mrs_constant(case, n)
    d = qhat(spec, n)
    q = d.qhat.add_constant(-d.qhat(c * zeta))
    zc = roots(q, c_n=c).scaled()
    zs = zc.zeros
    pts = np.array([complex(z) for z in zs])
    # zeta on the support: no level curve, only the support is a target
    dc = np.full(len(pts), np.inf) if curve is None else curve.distance(pts)
    ds = [support_distance(case, z) for z in zs]
    summary = max(min(mp.mpf(float(a)), b) for a, b in zip(dc, ds))
    bound = support_far_distance(case, zeta) + 2
    bounded = all(abs(z) <= bound for z in zs)
    dz = support_distance(case, zeta)
    tube_free = None
    if dz > 2:
        tube_free = all(s >= (dz - 2) / 2 for s in ds)
    gap = min(abs(a - b) for i, a in enumerate(zs) for b in zs[i + 1:]) if len(zs) > 1 else mp.inf
    simple = gap > tol(0, get_precision() // 4) * max(1, max(abs(z) for z in zs))
    return ZeroLocus(n, tuple(zs), tuple(float(x) for x in dc), tuple(ds), summary,
                     bounded, tube_free, simple, gap)
