"""Command line front end.

Exit statuses: 0 success, 2 bad input, 3 numerical failure, 4 internal
invariant violation.  Every file is written atomically and depends only on
the arguments, so identical invocations give byte-identical output.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from dataclasses import dataclass
from pathlib import Path

import mpmath as mp
import numpy as np

from . import __version__
from .errors import DiffOrthoError, InvariantError, MeasureError, ShapeError
from .measures import MeasureSpec, parse_rho, validate_spec
from .polycore import Case, mrs_constant
from .precision import DEFAULT_PRECISION, PRECISION_ENV, fmt, fmt_complex, parse_complex, parse_scalar, set_precision

BAD_INPUT = {"E_MEASURE", "E_SHAPE", "E_BASIS", "E_BRANCH", "E_REGION", "E_EMPTY",
             "E_COLLIDE", "E_POLE", "E_DEGENERATE"}
NUMERICAL = {"E_NOCONV", "E_EIG", "E_SINGULAR", "E_RANGE"}
MIN_CLI_PRECISION = 64


@dataclass(frozen=True)
class RunConfig:
    precision_bits: int
    spec: MeasureSpec
    degrees: tuple
    zeta: mp.mpc | None
    output_dir: Path
    seed: int


def exit_code(err: BaseException) -> int:
    if isinstance(err, DiffOrthoError):
        if err.code in BAD_INPUT:
            return 2
        if err.code in NUMERICAL:
            return 3
        return 4
    if isinstance(err, ValueError):
        return 2
    return 4


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, mp.mpc):
        return fmt_complex(v)
    if isinstance(v, (mp.mpf, float)):
        return fmt(v)
    return str(v)


def _complex_list(text: str) -> list:
    return [parse_complex(t) for t in text.split(",") if t.strip()]


def _window(text: str) -> tuple:
    parts = [float(t) for t in text.split(",")]
    if len(parts) != 4:
        raise ShapeError("--window needs xmin,xmax,ymin,ymax")
    return tuple(parts)


def _degrees(args) -> tuple:
    if args.degrees:
        out = tuple(int(t) for t in args.degrees.split(",") if t.strip())
    elif args.n is not None:
        out = (args.n,)
    else:
        raise ShapeError("give --n or --degrees")
    return out


def make_config(args) -> RunConfig:
    if args.prec < MIN_CLI_PRECISION:
        raise ShapeError(f"--prec must be at least {MIN_CLI_PRECISION}")
    set_precision(args.prec)
    try:
        case = Case.laguerre(parse_scalar(args.alpha)) if args.case == "laguerre" else Case.hermite()
    except ValueError as exc:
        raise MeasureError(str(exc)) from exc
    spec = validate_spec(MeasureSpec(case, parse_rho(args.rho.split(","))))
    degrees = _degrees(args) if hasattr(args, "n") else ()
    for n in degrees:
        if n <= spec.m:
            raise ShapeError(f"degree {n} must exceed deg rho = {spec.m}")
    zeta = parse_complex(args.zeta) if getattr(args, "zeta", None) else None
    return RunConfig(args.prec, spec, degrees, zeta, Path(args.out), args.seed)


def _say(text: str) -> None:
    sys.stdout.write(text + "\n")


# ---------------------------------------------------------------- commands


def cmd_construct(cfg: RunConfig, args) -> None:
    from .construct import q_with_root, qhat

    for n in cfg.degrees:
        d = qhat(cfg.spec, n) if cfg.zeta is None else q_with_root(cfg.spec, n, cfg.zeta)
        path = cfg.output_dir / f"construct_n{n}.json"
        write_atomic(path, _json_text(d.to_json()))
        _say(f"wrote {path}")


def cmd_verify(cfg: RunConfig, args) -> None:
    from .construct import (coeff_growth_report, diff_orthogonality_residuals, eigen_residual,
                            q_with_root, qhat, quasi_orthogonality_residuals)

    rows = []
    for n in cfg.degrees:
        d = qhat(cfg.spec, n) if cfg.zeta is None else q_with_root(cfg.spec, n, cfg.zeta)
        for k, r in enumerate(diff_orthogonality_residuals(d, n - 1)):
            rows.append(("diff_orthogonality", n, k, r))
        rows.append(("eigen", n, "", eigen_residual(d)))
        for k, r in enumerate(quasi_orthogonality_residuals(cfg.spec, n)):
            rows.append(("quasi_orthogonality", n, k, r))
    for row in coeff_growth_report(cfg.spec, cfg.degrees):
        rows.append(("coeff_growth", row["n"], row["k"], row["ratio"]))
    path = cfg.output_dir / "verify.csv"
    write_atomic(path, _csv_text(("check", "n", "k", "value"), [[_cell(v) for v in r] for r in rows]))
    for check in ("diff_orthogonality", "eigen", "quasi_orthogonality", "coeff_growth"):
        vals = [r[3] for r in rows if r[0] == check]
        if vals:
            _say(f"{check}: max {mp.nstr(max(vals), 5)}")
    _say(f"wrote {path}")


def cmd_zeros(cfg: RunConfig, args) -> None:
    from .construct import qhat
    from .spectra import LimitDensity, critical_points, ks_distance, roots, zero_stats

    ld = LimitDensity(cfg.spec.case)
    stats_rows = []
    for n in cfg.degrees:
        d = qhat(cfg.spec, n)
        c = mrs_constant(cfg.spec.case, n)
        p = d.qhat
        if cfg.zeta is not None:
            p = p.add_constant(-p(c * cfg.zeta))
        zc = critical_points(p, c_n=c) if args.derivative else roots(p, c_n=c)
        st = zero_stats(zc, cfg.spec.case)
        scaled = zc.scaled()
        ks = ks_distance(scaled, ld)
        path = cfg.output_dir / f"zeros_n{n}.csv"
        write_atomic(path, scaled.csv_text())
        stats_rows.append([n, st.real_in_delta, _cell(st.max_imag), _cell(st.min_gap),
                           _cell(st.max_abs), _cell(ks)])
        _say(f"n={n}: {st.real_in_delta} real zeros in the support, KS {mp.nstr(ks, 5)}")
    write_atomic(cfg.output_dir / "zero_stats.csv",
                 _csv_text(("n", "real_in_delta", "max_imag", "min_gap", "max_abs", "ks"), stats_rows))


def _test_points(cfg: RunConfig, args) -> list:
    if args.points:
        return _complex_list(args.points)
    rng = np.random.default_rng(cfg.seed)
    lo, hi = cfg.spec.case.contracted_support
    out = []
    from .asymptotics import support_distance

    while len(out) < args.count:
        z = complex(rng.uniform(lo - 2, hi + 2), rng.uniform(-2, 2))
        if support_distance(cfg.spec.case, z) >= args.min_distance:
            out.append(mp.mpc(mp.mpf(f"{z.real:.6f}"), mp.mpf(f"{z.imag:.6f}")))
    return out


def cmd_asympt(cfg: RunConfig, args) -> None:
    from .asymptotics import NTH_ROOT_COLUMNS, RATIO_COLUMNS, nth_root_report, ratio_report, report_csv

    pts = _test_points(cfg, args)
    nth = nth_root_report(cfg.spec, pts, cfg.degrees)
    rat = ratio_report(cfg.spec, pts, cfg.degrees, cfg.zeta)
    write_atomic(cfg.output_dir / "nth_root.csv", report_csv(nth, NTH_ROOT_COLUMNS))
    write_atomic(cfg.output_dir / "ratio.csv", report_csv(rat, RATIO_COLUMNS))
    last = max(cfg.degrees)
    _say(f"n={last}: nth-root max rel error {mp.nstr(max(r['rel_error'] for r in nth if r['n'] == last), 5)}, "
         f"ratio max error {mp.nstr(max(r['abs_error'] for r in rat if r['n'] == last), 5)}")


def cmd_curve(cfg: RunConfig, args) -> None:
    from .asymptotics import default_window, trace_level_curve

    if cfg.zeta is None:
        raise ShapeError("curve needs --zeta")
    window = _window(args.window) if args.window else default_window(cfg.spec.case, cfg.zeta)
    cv = trace_level_curve(cfg.spec.case, cfg.zeta, window, args.step)
    worst = cv.max_residual()
    if worst > cv.tolerance:
        raise InvariantError(f"curve vertex off the level set by {mp.nstr(worst, 5)}")
    path = cfg.output_dir / "curve.csv"
    write_atomic(path, cv.csv_text())
    _say(f"{len(cv.polylines)} polyline(s), {len(cv.vertices())} vertices, max |G| {mp.nstr(worst, 3)}")


def cmd_flow(cfg: RunConfig, args) -> None:
    from .hydro import build_system, field_csv, sample_field, stagnation_verify

    rows = []
    for n in cfg.degrees:
        rep = stagnation_verify(cfg.spec, n, strict=not args.experimental, zeta=cfg.zeta)
        for k, (x, r, dist) in enumerate(zip(rep.stagnation_points, rep.residuals, rep.recovered)):
            rows.append([n, k, fmt(mp.re(x)), fmt(mp.im(x)), _cell(r), _cell(dist)])
        _say(f"n={n}: max residual {mp.nstr(rep.max_residual, 5)}, "
             f"max recovery distance {mp.nstr(rep.max_recovery_distance, 5)}, unrecovered {rep.unrecovered}")
    write_atomic(cfg.output_dir / "stagnation.csv",
                 _csv_text(("n", "index", "re", "im", "residual", "recovery_distance"), rows))
    if args.window:
        from .construct import qhat
        from .spectra import roots

        n = max(cfg.degrees)
        d = qhat(cfg.spec, n)
        r = d.qhat if cfg.zeta is None else d.qhat.add_constant(-d.qhat(cfg.zeta))
        sys_ = build_system(cfg.spec.case, roots(r).zeros)
        write_atomic(cfg.output_dir / "system.json", _json_text(sys_.to_json()))
        write_atomic(cfg.output_dir / "field.csv", field_csv(sample_field(sys_, _window(args.window), args.step)))


COMMANDS = {
    "construct": cmd_construct,
    "verify": cmd_verify,
    "zeros": cmd_zeros,
    "asympt": cmd_asympt,
    "curve": cmd_curve,
    "flow": cmd_flow,
}


def build_parser() -> argparse.ArgumentParser:
    env_prec = int(os.environ.get(PRECISION_ENV) or DEFAULT_PRECISION)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", choices=("laguerre", "hermite"), required=True)
    common.add_argument("--alpha", default="0", help="Laguerre parameter (> -1)")
    common.add_argument("--rho", default="1", help="coefficients of rho, low to high, comma separated")
    common.add_argument("--prec", type=int, default=env_prec, help="mantissa bits (default from $%s)" % PRECISION_ENV)
    common.add_argument("--out", default=".", help="output directory")
    common.add_argument("--seed", type=int, default=0, help="seed for random test points")

    degrees = argparse.ArgumentParser(add_help=False)
    degrees.add_argument("--n", type=int)
    degrees.add_argument("--degrees", help="comma separated list of degrees")

    p = argparse.ArgumentParser(prog="diffortho", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    c = sub.add_parser("construct", parents=[common, degrees], help="emit Qhat_n / Q_n as JSON")
    c.add_argument("--zeta", help="root location of Q_n (unnormalised), as a+bi")

    v = sub.add_parser("verify", parents=[common, degrees], help="residual tables")
    v.add_argument("--zeta", help="check Q_n with this root (unnormalised)")

    z = sub.add_parser("zeros", parents=[common, degrees], help="zero clouds, statistics and KS distance")
    z.add_argument("--zeta", help="zeros of Q_n with root c_n*zeta (normalised zeta)")
    z.add_argument("--derivative", action="store_true", help="use the critical points instead")

    a = sub.add_parser("asympt", parents=[common, degrees], help="nth-root and ratio tables")
    a.add_argument("--zeta", help="normalised zeta for the relative asymptotics")
    a.add_argument("--points", help="comma separated test points (normalised)")
    a.add_argument("--count", type=int, default=4, help="random points when --points is absent")
    a.add_argument("--min-distance", type=float, default=0.25, help="distance of random points from the support")

    cv = sub.add_parser("curve", parents=[common], help="trace the level curve through zeta")
    cv.add_argument("--zeta", required=True, help="normalised zeta")
    cv.add_argument("--window", help="xmin,xmax,ymin,ymax")
    cv.add_argument("--step", type=float, default=0.02)

    f = sub.add_parser("flow", parents=[common, degrees], help="stagnation report and field samples")
    f.add_argument("--zeta", help="place the system at the zeros of Q_n with this root (unnormalised)")
    f.add_argument("--experimental", action="store_true", help="allow specs outside the proved classes")
    f.add_argument("--window", help="field grid xmin,xmax,ymin,ymax")
    f.add_argument("--step", type=float, default=0.5)
    return p


VALUE_FLAGS = ("--alpha", "--rho", "--zeta", "--window", "--points")


def _glue_values(argv: list) -> list:
    """Join ``--rho -1,1`` into ``--rho=-1,1`` so argparse does not read the
    value as an option."""
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in VALUE_FLAGS and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def execute(argv=None) -> int:
    parser = build_parser()
    argv = _glue_values(list(sys.argv[1:] if argv is None else argv))
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = make_config(args)
        COMMANDS[args.command](cfg, args)
    except Exception as exc:  # noqa: BLE001  (mapped onto the exit contract)
        code = exit_code(exc)
        msg = str(exc) if isinstance(exc, DiffOrthoError) else f"{type(exc).__name__}: {exc}"
        if isinstance(exc, ValueError) and not isinstance(exc, DiffOrthoError):
            msg = f"E_SHAPE: {exc}"
        sys.stderr.write(f"diffortho: {msg}\n")
        return code
    return 0


def main() -> None:
    sys.exit(execute())


if __name__ == "__main__":
    main()
