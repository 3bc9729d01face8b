"""Command-line surface: reproducible experiments with JSON/CSV output.

Every command is deterministic given its flags (including --seed); floats are
emitted in shortest round-trip form in JSON and with 17 significant digits in
CSV.  Exit codes: 0 success, 2 usage/domain error, 3 compute-budget error,
4 fit failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys as _sys
from fractions import Fraction

import numpy as np
from scipy import integrate

from . import core, gausskuzmin, measure, rscc, transfer
from .errors import BudgetExceededError, FitError

SCHEMA_VERSION = 1


def _parse_x(text: str) -> object:
    """Accept 'p/q' exactly or a decimal literal."""
    if "/" in text:
        return Fraction(text)
    return float(text)


def _emit(payload: dict, fmt: str, out_path, csv_rows=None, csv_header=None):
    if fmt == "json":
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
    else:
        if csv_rows is None:
            raise ValueError("this command has no CSV form")
        lines = [",".join(csv_header)]
        for row in csv_rows:
            lines.append(",".join(
                f"{v:.17g}" if isinstance(v, float) else str(v) for v in row))
        text = "\n".join(lines) + "\n"
    if out_path:
        with open(out_path, "w") as fh:
            fh.write(text)
    else:
        _sys.stdout.write(text)


def _cmd_expand(args):
    params = core.NcfParams(args.n)
    x = _parse_x(args.x)
    seq = core.digits(x, params, args.max_len)
    payload = {"schema": f"ncf-expand-v{SCHEMA_VERSION}", "n": args.n,
               "digits": list(seq.digits), "terminated": seq.terminated}
    rows = [(k + 1, d) for k, d in enumerate(seq.digits)]
    _emit(payload, args.format, args.out, rows, ("k", "digit"))
    return 0


def _cmd_eval(args):
    params = core.NcfParams(args.n)
    ds = [int(t) for t in args.digits.split(",")]
    value = core.evaluate(ds, params)
    convs = core.convergents(ds, params)
    payload = {"schema": f"ncf-eval-v{SCHEMA_VERSION}", "n": args.n,
               "digits": ds, "value": str(value), "value_float": float(value),
               "convergents": [str(c) for c in convs]}
    rows = [(k + 1, str(c), float(c)) for k, c in enumerate(convs)]
    _emit(payload, args.format, args.out, rows, ("k", "convergent", "convergent_float"))
    return 0


def _cmd_digit_law(args):
    gm = measure.GaussMeasure(core.NcfParams(args.n))
    imax = args.n + args.grid
    items = [(i, measure.digit_law(i, gm)) for i in range(args.n, imax + 1)]
    payload = {"schema": f"ncf-digit-law-v{SCHEMA_VERSION}", "n": args.n,
               "law": [{"digit": i, "probability": p} for i, p in items]}
    _emit(payload, args.format, args.out, items, ("digit", "probability"))
    return 0


def _cmd_invariance(args):
    params = core.NcfParams(args.n)
    gm = measure.GaussMeasure(params)
    sys_ = rscc.make_ncf_rscc(params)
    rows = []
    for u in np.linspace(1.0 / args.grid, 1.0, args.grid):
        u = float(u)
        brk = args.n / u - math.floor(args.n / u)
        pts = [brk] if 0.0 < brk < 1.0 else None
        val, _ = integrate.quad(
            lambda x: rscc.q_kernel_interval(sys_, float(x), u) * gm.density(x),
            0.0, 1.0, points=pts, limit=200, epsabs=1e-12)
        rows.append((u, val, measure.gn_cdf(u, gm), abs(val - measure.gn_cdf(u, gm))))
    worst = max(r[3] for r in rows)
    payload = {"schema": f"ncf-invariance-v{SCHEMA_VERSION}", "n": args.n,
               "grid": args.grid, "max_abs_error": worst,
               "curve": [{"u": r[0], "integral": r[1], "cdf": r[2], "abs_error": r[3]}
                         for r in rows]}
    _emit(payload, args.format, args.out, rows,
          ("u", "kernel_integral", "cdf", "abs_error"))
    return 0


def _cmd_transfer(args):
    params = core.NcfParams(args.n)
    gm = measure.GaussMeasure(params)
    f = transfer.GridFunction.from_callable(lambda x: x, args.grid)
    c_f = transfer.integrate_against(f, gm)
    rows = []
    g = f
    for k in range(1, args.nmax + 1):
        g = transfer.apply_transfer(g, params)
        sup_err = float(np.max(np.abs(g.values - c_f)))
        lip_err = transfer.lipschitz_norm(transfer.GridFunction(g.values - c_f)).total
        rows.append((k, sup_err, lip_err))
    payload = {"schema": f"ncf-transfer-v{SCHEMA_VERSION}", "n": args.n,
               "grid": args.grid, "limit_value": c_f,
               "curve": [{"step": r[0], "sup_error": r[1], "lipschitz_error": r[2]}
                         for r in rows]}
    _emit(payload, args.format, args.out, rows, ("step", "sup_error", "lipschitz_error"))
    return 0


def _cmd_gap(args):
    params = core.NcfParams(args.n)
    f = transfer.GridFunction.from_callable(lambda x: x, args.grid)
    est = transfer.estimate_gap(f, params, args.nmax)
    payload = {"schema": f"ncf-gap-v{SCHEMA_VERSION}", "n": args.n,
               "grid": args.grid, "q_hat": est.q_hat, "k_hat": est.k_hat,
               "fit_window": list(est.n_window),
               "residuals": [float(r) for r in est.residuals],
               "sup_errors": [float(e) for e in est.sup_errors],
               "lipschitz_errors": [float(e) for e in est.lip_errors]}
    rows = list(zip(range(1, args.nmax + 1),
                    (float(e) for e in est.sup_errors),
                    (float(e) for e in est.lip_errors)))
    _emit(payload, args.format, args.out, rows, ("step", "sup_error", "lipschitz_error"))
    return 0


_MEASURES = {
    "lebesgue": lambda params: gausskuzmin.lebesgue_measure(),
    "gauss": lambda params: gausskuzmin.gauss_initial(params),
    "tilted": lambda params: gausskuzmin.tilted_measure(),
}


def _cmd_gk(args):
    params = core.NcfParams(args.n)
    try:
        mu = _MEASURES[args.mu](params)
    except KeyError:
        raise ValueError(f"unknown measure {args.mu!r}; choose from {sorted(_MEASURES)}")
    rng = np.random.default_rng(args.seed)
    report = gausskuzmin.run_experiment(
        mu, params, n_max=args.nmax, m=args.grid, rng=rng,
        require_fit=args.require_fit or args.mu != "gauss")
    payload = {"schema": f"ncf-gk-v{SCHEMA_VERSION}", "n": args.n, "mu": args.mu,
               "seed": args.seed, **report.to_dict()}
    rows = list(zip(report.n_values, report.sup_errors))
    _emit(payload, args.format, args.out, rows, ("step", "sup_error"))
    return 0


def _cmd_rscc_mealy(args):
    m = rscc.MealySystem(args.alpha, args.beta)
    if args.dot:
        text = rscc.mealy_dot_export(m)
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            _sys.stdout.write(text)
        return 0
    kernel = m.kernel()
    sys_ = rscc.make_mealy_rscc(args.alpha, args.beta)
    cesaro = [rscc.q_cesaro(sys_, args.nmax, 1.0, [s]) for s in (1, 2)]
    payload = {"schema": f"ncf-rscc-mealy-v{SCHEMA_VERSION}",
               "alpha": args.alpha, "beta": args.beta,
               "kernel": kernel.tolist(),
               "stationary": m.stationary().tolist(),
               "cesaro_from_1": cesaro, "cesaro_steps": args.nmax}
    rows = [(i + 1, kernel[i][0], kernel[i][1]) for i in range(2)]
    _emit(payload, args.format, args.out, rows, ("state", "to_1", "to_2"))
    return 0


def _cmd_contraction(args):
    sys_ = rscc.make_ncf_rscc(core.NcfParams(args.n))
    rng = np.random.default_rng(args.seed)
    rep = rscc.contraction_coefficients(sys_, k_max=args.kmax, grid=args.grid, rng=rng)
    payload = {"schema": f"ncf-contraction-v{SCHEMA_VERSION}", "n": args.n,
               "r_values": list(rep.r_values), "big_r": rep.big_r,
               "certified": rep.certified}
    rows = [(k + 1, r) for k, r in enumerate(rep.r_values)]
    _emit(payload, args.format, args.out, rows, ("k", "r_k"))
    return 0


def _cmd_regularity(args):
    sys_ = rscc.make_ncf_rscc(core.NcfParams(args.n))
    starts = [float(t) for t in args.starts.split(",")]
    rep = rscc.regularity_witness(sys_, starts, args.nmax)
    payload = {"schema": f"ncf-regularity-v{SCHEMA_VERSION}", "n": args.n,
               "x_star": rep.x_star, "ratio_limit": rep.ratio_limit,
               "starts": list(rep.starts),
               "final_distances": [float(c[-1]) for c in rep.dist_curves]}
    rows = [(s, float(c[-1])) for s, c in zip(rep.starts, rep.dist_curves)]
    _emit(payload, args.format, args.out, rows, ("start", "final_distance"))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ncf", description="N-continued-fraction experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, grid=1024, nmax=40, seed=0):
        p.add_argument("--n", type=int, default=1, help="expansion parameter N")
        p.add_argument("--grid", type=int, default=grid)
        p.add_argument("--nmax", type=int, default=nmax)
        p.add_argument("--seed", type=int, default=seed)
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--out", default=None)

    p = sub.add_parser("expand", help="digit expansion of a point")
    p.add_argument("--x", required=True, help="point in (0,1], 'p/q' or decimal")
    p.add_argument("--max-len", type=int, default=64)
    common(p)
    p.set_defaults(fn=_cmd_expand)

    p = sub.add_parser("eval", help="evaluate a finite digit sequence exactly")
    p.add_argument("--digits", required=True, help="comma-separated digits")
    common(p)
    p.set_defaults(fn=_cmd_eval)

    p = sub.add_parser("digit-law", help="invariant law of the first digit")
    common(p, grid=30)
    p.set_defaults(fn=_cmd_digit_law)

    p = sub.add_parser("invariance", help="kernel-integral invariance check")
    common(p, grid=64)
    p.set_defaults(fn=_cmd_invariance)

    p = sub.add_parser("transfer", help="operator iteration error curve for f(x)=x")
    common(p)
    p.set_defaults(fn=_cmd_transfer)

    p = sub.add_parser("gap", help="geometric-rate estimate for f(x)=x")
    common(p, grid=2048, nmax=30)
    p.set_defaults(fn=_cmd_gap)

    p = sub.add_parser("gk", help="Gauss-Kuzmin experiment report")
    p.add_argument("--mu", default="lebesgue",
                   help="initial measure: lebesgue | gauss | tilted")
    p.add_argument("--require-fit", action="store_true",
                   help="fail (exit 4) if no geometric rate can be fitted")
    common(p)
    p.set_defaults(fn=_cmd_gk)

    p = sub.add_parser("rscc-mealy", help="two-state Mealy machine")
    p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--beta", type=float, required=True)
    p.add_argument("--dot", action="store_true", help="emit a GraphViz diagram")
    common(p, nmax=1000)
    p.set_defaults(fn=_cmd_rscc_mealy)

    p = sub.add_parser("contraction", help="contraction-coefficient report")
    p.add_argument("--kmax", type=int, default=2)
    common(p, grid=512)
    p.set_defaults(fn=_cmd_contraction)

    p = sub.add_parser("regularity", help="orbit witness of kernel-support collapse")
    p.add_argument("--starts", default="0,0.25,0.5,0.75,1")
    common(p, nmax=200)
    p.set_defaults(fn=_cmd_regularity)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except BudgetExceededError as exc:
        print(f"ncf: budget error: {exc}", file=_sys.stderr)
        return 3
    except FitError as exc:
        print(f"ncf: fit error: {exc}", file=_sys.stderr)
        return 4
    except (ValueError, ZeroDivisionError) as exc:
        print(f"ncf: error: {exc}", file=_sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
