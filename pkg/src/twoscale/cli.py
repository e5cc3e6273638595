"""Command-line front end.

Commands
--------
approx          tail approximation for a model at (n, u), direct or series mode
oracle          exact / importance-sampling / plain Monte Carlo tail values
tables          write the two reference comparison tables (CSV + JSON sidecar)
edgeworth       tilted-CDF approximation vs the exact tilted law on an x grid
overdispersion  all arrival-count approximations for one (K, u_bar, mu_bar)

Every command emits machine-readable output (JSON by default); identical
configuration and seed produce byte-identical files.  Exit codes: 0 success,
2 invalid input (the error class name goes to stderr), 1 internal failure.
The TAILSCALE_THREADS environment variable sets the default worker count.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

from . import asymptotics, edgeworth, overdispersion
from .errors import ParamError, TwoscaleError
from .levy import CharExponent, ModelPair, PowerScaling, load_model
from .models import WorkedModel, exact_law
from .oracle import (
    StatisticalBound,
    compound_poisson_gamma_tail,
    is_tail,
    negbin_tail,
    plain_mc_tail,
)
from .overdispersion import ArrivalQuery, format_sig

__all__ = ["main"]


def _default_workers() -> int:
    raw = os.environ.get("TAILSCALE_THREADS", "1")
    try:
        w = int(raw)
    except ValueError as exc:
        raise ParamError(f"TAILSCALE_THREADS must be an integer, got {raw!r}") from exc
    if w < 1:
        raise ParamError(f"TAILSCALE_THREADS must be >= 1, got {w}")
    return w


def _add_model_args(p: argparse.ArgumentParser, with_f: bool = True) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--model", metavar="PATH", help="model spec JSON file")
    src.add_argument(
        "--poisson-gamma",
        nargs=3,
        type=float,
        metavar=("LAM", "R", "MU"),
        help="inline Poisson(LAM) outer process on a Gamma(R, MU) clock",
    )
    src.add_argument(
        "--gamma-poisson",
        nargs=3,
        type=float,
        metavar=("R", "MU", "LAM"),
        help="inline Gamma(R, MU) outer process on a Poisson(LAM) clock",
    )
    if with_f:
        p.add_argument("--f", type=float, default=None,
                       help="timescale exponent (required with inline parameters)")


def _resolve_model(args) -> tuple[ModelPair, PowerScaling]:
    if args.model is not None:
        model, scaling = load_model(args.model)
        if getattr(args, "f", None) is not None:
            scaling = PowerScaling(args.f)
        return model, scaling
    if getattr(args, "f", None) is None:
        raise ParamError("--f is required when the model is given inline")
    if args.poisson_gamma is not None:
        lam, r, mu = args.poisson_gamma
        pair = ModelPair(CharExponent.poisson(lam), CharExponent.gamma(r, mu))
    else:
        r, mu, lam = args.gamma_poisson
        pair = ModelPair(CharExponent.gamma(r, mu), CharExponent.poisson(lam))
    return pair, PowerScaling(args.f)


def _emit(args, payload: dict, csv_text: str | None = None) -> None:
    fmt = getattr(args, "format", "json")
    if fmt == "json":
        text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    elif fmt == "csv":
        if csv_text is None:
            raise ParamError("csv output is not available for this command")
        text = csv_text
    else:
        sig = getattr(args, "sig", 3)
        lines = []
        for key in sorted(payload):
            val = payload[key]
            if isinstance(val, float):
                val = format_sig(val, sig)
            lines.append(f"{key}: {val}")
        text = "\n".join(lines) + "\n"
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _estimate_payload(est, regime: str) -> dict:
    return {
        "regime": regime,
        "prefactor": est.prefactor,
        "exponent_terms": [[label, value] for label, value in est.exponent_terms],
        "log_value": est.log_value,
        "value": est.value,
        "mode": est.mode,
        "series_order": est.series_order,
        "lattice_adjusted": est.lattice_adjusted,
    }


def _cmd_approx(args) -> int:
    model, scaling = _resolve_model(args)
    regime = asymptotics.classify(scaling).regime
    if regime == "single":
        est = asymptotics.approx_single_timescale(model, args.n, args.u)
    else:
        if args.lattice == "on":
            lattice = True
        elif args.lattice == "off":
            lattice = False
        else:
            span = model.A.lattice_span if regime == "fast" else model.B.lattice_span
            lattice = span > 0
        fn = asymptotics.approx_fast if regime == "fast" else asymptotics.approx_slow
        est = fn(model, scaling, args.n, args.u, mode=args.mode, order=args.M, lattice=lattice)
    _emit(args, _estimate_payload(est, regime))
    return 0


def _cmd_oracle(args) -> int:
    model, scaling = _resolve_model(args)
    if args.method == "exact":
        wm = WorkedModel.from_pair(model)
        if wm is None:
            raise ParamError("exact oracles exist for the built-in model pairs only")
        law = exact_law(wm, scaling, args.n)
        if wm.variant == "poisson_gamma":
            res = negbin_tail(law.successes, law.p, math.ceil(args.u * args.n - 1e-9))
        else:
            res = compound_poisson_gamma_tail(
                law.rate, law.jump_shape, law.jump_rate, args.u * args.n
            )
    else:
        if args.seed is None:
            raise ParamError(f"--seed is required for method {args.method!r}")
        if args.samples is None:
            raise ParamError(f"--samples is required for method {args.method!r}")
        fn = is_tail if args.method == "is" else plain_mc_tail
        res = fn(model, scaling, args.n, args.u, args.samples, args.seed, workers=args.workers)
    payload = {
        "probability": res.probability,
        "log_probability": res.log_probability,
        "method": res.method,
    }
    if isinstance(res.error, StatisticalBound):
        payload.update(
            {
                "estimate": res.probability,
                "std_error": res.error.std_error,
                "samples": res.error.samples,
                "seed": res.error.seed,
            }
        )
    else:
        payload["rigorous_bound"] = res.error.bound
    _emit(args, payload)
    return 0


def _cmd_tables(args) -> int:
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    t1, t2 = overdispersion.reproduce_tables(workers=args.workers)
    written = []
    for table, stem in ((t1, "table1"), (t2, "table2")):
        csv_path = out_dir / f"{stem}.csv"
        json_path = out_dir / f"{stem}.json"
        table.write_csv(csv_path, sig=args.sig)
        table.write_json(json_path)
        written += [str(csv_path), str(json_path)]
    sys.stdout.write("\n".join(written) + "\n")
    return 0


def _cmd_edgeworth(args) -> int:
    model, scaling = _resolve_model(args)
    diag = edgeworth.diagnostic(
        model, scaling, args.n, args.u, x_min=args.x_min, x_max=args.x_max, points=args.points
    )
    rows = [{"x": x, "approx": a, "exact": e, "gap": abs(a - e)} for x, a, e in diag.rows]
    payload = {"rows": rows, "sup_gap": diag.sup_gap}
    cols = ("x", "approx", "exact", "gap")
    body = [",".join(cols)]
    for row in rows:
        body.append(",".join(format_sig(row[c], 9) for c in cols))
    _emit(args, payload, csv_text="\n".join(body) + "\n")
    return 0


def _cmd_overdispersion(args) -> int:
    q = ArrivalQuery(args.K, args.u_bar, args.mu_bar)
    payload = {
        "K": args.K,
        "u_bar": args.u_bar,
        "mu_bar": args.mu_bar,
        "rho": q.rho,
        "pi_exact": overdispersion.pi_exact(q).probability,
        "pi_pois": overdispersion.pi_pois(q),
        "pi_gamma": overdispersion.pi_gamma(q),
    }
    if q.rho < 1:
        payload.update(
            {
                "pi_hat_fast": overdispersion.pi_hat_fast(q),
                "pi_hat_slow": overdispersion.pi_hat_slow(q),
                "pi_fast": overdispersion.pi_fast(q, M=args.M_fast),
                "pi_slow": overdispersion.pi_slow(q, M=args.M_slow),
            }
        )
    _emit(args, payload)
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="twoscale",
        description="tail asymptotics for two-timescale subordinated Levy models",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common_output(p):
        p.add_argument("--format", choices=("json", "csv", "text"), default="json")
        p.add_argument("--out", metavar="PATH", help="write output to a file instead of stdout")
        p.add_argument("--sig", type=int, default=3, help="significant digits for text/csv output")

    p = sub.add_parser("approx", help="evaluate the tail approximation")
    _add_model_args(p)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--mode", choices=("direct", "series"), default="direct")
    p.add_argument("--M", type=int, default=None, help="series truncation order")
    p.add_argument("--lattice", choices=("auto", "on", "off"), default="auto")
    common_output(p)
    p.set_defaults(fn=_cmd_approx)

    p = sub.add_parser("oracle", help="exact or Monte Carlo tail probability")
    _add_model_args(p)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--method", choices=("exact", "is", "mc"), default="exact")
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--workers", type=int, default=None)
    common_output(p)
    p.set_defaults(fn=_cmd_oracle)

    p = sub.add_parser("tables", help="write the reference comparison tables")
    p.add_argument("--out-dir", default=".", metavar="DIR")
    p.add_argument("--sig", type=int, default=3)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(fn=_cmd_tables)

    p = sub.add_parser("edgeworth", help="tilted-CDF approximation vs the exact tilted law")
    _add_model_args(p)
    p.add_argument("--n", type=float, required=True)
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--x-min", type=float, default=-6.0)
    p.add_argument("--x-max", type=float, default=6.0)
    p.add_argument("--points", type=int, default=49)
    common_output(p)
    p.set_defaults(fn=_cmd_edgeworth)

    p = sub.add_parser("overdispersion", help="arrival-count approximations for one query")
    p.add_argument("--K", type=int, required=True)
    p.add_argument("--u-bar", type=float, required=True)
    p.add_argument("--mu-bar", type=float, required=True)
    p.add_argument("--M-fast", type=int, default=None)
    p.add_argument("--M-slow", type=int, default=None)
    common_output(p)
    p.set_defaults(fn=_cmd_overdispersion)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if getattr(args, "workers", None) is None and hasattr(args, "workers"):
            args.workers = _default_workers()
        return args.fn(args)
    except TwoscaleError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports and exits
        print(f"InternalError: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
