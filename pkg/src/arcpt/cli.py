"""Command-line interface.

Exit codes: 0 success, 2 I/O or parse error, 3 invalid parameters,
4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from . import __version__, limits
from .amoc import Method, run_test
from .distance import config_match
from .harness import load_experiment, run_experiment, summary_dict, write_csv
from .io import InputFormatError, dumps, read_series
from .penalized import Criterion, GaParams, ga_search
from .segmentation import SegmentationParams, binary_segment, wbs
from .series import ChangepointConfig, DegenerateSeriesError, NonCausalModelError, fit_ar_differenced, select_order

EXIT_OK, EXIT_IO, EXIT_PARAM, EXIT_NUMERIC = 0, 2, 3, 4


class ParameterError(ValueError):
    pass


def _order(text: str) -> int | str:
    if text == "auto":
        return text
    try:
        p = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"order must be a nonnegative integer or 'auto', got {text!r}")
    if p < 0:
        raise argparse.ArgumentTypeError("order must be nonnegative")
    return p


def _check_level(value: float, name: str):
    if not 0.0 < value < 1.0:
        raise ParameterError(f"{name} must lie in (0, 1), got {value}")


def _meta(args, **extra) -> dict:
    meta = {"command": args.command, "version": __version__}
    meta.update(extra)
    return meta


def _emit(args, payload: dict):
    text = dumps(payload)
    if getattr(args, "output", None):
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def cmd_detect(args) -> int:
    _check_level(args.alpha, "alpha")
    x = read_series(args.input)
    p = None if args.order == "auto" else args.order
    kwargs = {}
    if args.method == Method.LRT_CROPPED.value:
        kwargs = {"ell": args.ell, "h": args.h}
    if args.method in (Method.LRT.value, Method.LRT_CROPPED.value):
        kwargs["exact"] = args.exact
    res = run_test(args.method, x, p=p, alpha=args.alpha, **kwargs)
    out = res.to_dict(include_curve=args.curve)
    out["meta"] = _meta(args, method=args.method, order=res.order, order_rule=str(args.order),
                        alpha=args.alpha, seed=None, n=len(x), **kwargs)
    _emit(args, out)
    return EXIT_OK


def cmd_segment(args) -> int:
    _check_level(args.alpha, "alpha")
    x = read_series(args.input)
    p = select_order(x) if args.order == "auto" else args.order
    model = fit_ar_differenced(x, p)
    meta = _meta(args, method=args.method, order=p, order_rule=str(args.order), alpha=args.alpha,
                 seed=args.seed, n=len(x))
    if args.method == "ga":
        ga = GaParams.from_json(args.ga_config) if args.ga_config else GaParams()
        overrides = {k: v for k, v in (("population", args.population),
                                       ("max_generations", args.generations),
                                       ("min_spacing", args.min_spacing)) if v is not None}
        ga = replace(ga, seed=args.seed, **overrides)
        res = ga_search(x, args.criterion, ga, p=p, model=model)
        if args.log:
            res.write_log(args.log)
        meta.update(criterion=args.criterion, ga={k: v for k, v in vars(ga).items()},
                    min_spacing=ga.spacing(p))
        out = {"changepoints": list(res.config.taus), "m": res.config.m, "objective": res.value,
               "generations": res.generations}
    else:
        params = SegmentationParams(min_segment_length=args.min_spacing, alpha=args.alpha,
                                    wbs_constant=args.wbs_constant, wbs_intervals=args.intervals,
                                    seed=args.seed)
        res = (binary_segment if args.method == "bs" else wbs)(x, p, params, model=model)
        meta.update(min_segment_length=res.min_segment_length)
        if args.method == "wbs":
            meta.update(wbs_constant=args.wbs_constant, wbs_intervals=args.intervals)
        out = {"changepoints": list(res.config.taus), "m": res.config.m}
    out["model"] = model.to_dict()
    out["meta"] = meta
    _emit(args, out)
    return EXIT_OK


def _parse_config(text: str) -> ChangepointConfig:
    try:
        return ChangepointConfig.parse(text)
    except ValueError as exc:
        raise ParameterError(f"bad changepoint list {text!r}: {exc}") from None


def cmd_distance(args) -> int:
    a, b = _parse_config(args.a), _parse_config(args.b)
    if args.n < 2:
        raise ParameterError("n must be at least 2")
    d = config_match(a, b, args.n)
    out = d.to_dict()
    out["meta"] = _meta(args, a=list(a.taus), b=list(b.taus), n=args.n)
    _emit(args, out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    spec, methods = load_experiment(args.config)
    if args.replications is not None:
        spec = replace(spec, replications=args.replications)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    if args.jobs < 1:
        raise ParameterError("jobs must be >= 1")
    result = run_experiment(spec, methods, jobs=args.jobs)
    if args.output:
        write_csv(result, args.output)
    else:
        write_csv(result, sys.stdout)
    if args.summary:
        summary = summary_dict(result)
        summary["meta"] = _meta(args, seed=spec.seed, config=args.config,
                                methods=[{"name": m.name, "order": m.order, "alpha": m.alpha}
                                         for m in methods])
        with open(args.summary, "w") as fh:
            fh.write(dumps(summary))
    return EXIT_OK


def cmd_critvals(args) -> int:
    try:
        law = limits.LimitLaw.parse(args.law)
    except ValueError as exc:
        raise ParameterError(str(exc)) from None
    if args.alpha is not None:
        _check_level(args.alpha, "alpha")
    analytic = law.kind in (limits.LawKind.SUP_ABS_BRIDGE, limits.LawKind.GUMBEL_DOUBLE)
    custom = (args.paths, args.grid, args.mc_seed) != (limits.DEFAULT_PATHS, limits.DEFAULT_GRID,
                                                      limits.DEFAULT_SEED)
    if custom and law.kind is not limits.LawKind.GUMBEL_DOUBLE:
        if args.paths < 10_000 or args.grid < 1_000:
            raise ParameterError("Monte Carlo tables need paths >= 1e4 and grid >= 1e3")
        table = limits.quantile_table(law, args.paths, args.grid, args.mc_seed)
    else:
        table = limits.quantile_table(law)
    out = {"law": law.key, "table": {f"{a:g}": v for a, v in sorted(table.items())}}
    if args.alpha is not None:
        if analytic and not custom:
            q = (limits.sup_bridge_quantile(args.alpha) if law.kind is limits.LawKind.SUP_ABS_BRIDGE
                 else limits.gumbel_quantile(args.alpha))
        else:
            levels = np.array(sorted(table))
            if not levels[0] - 1e-12 <= args.alpha <= levels[-1] + 1e-12:
                raise ParameterError(f"level {args.alpha} outside tabulated range "
                                     f"[{levels[0]}, {levels[-1]}]")
            q = float(np.interp(args.alpha, levels, [table[a] for a in levels]))
        out["level"] = args.alpha
        out["quantile"] = q
    out["meta"] = _meta(args, analytic=analytic, paths=None if analytic and not custom else args.paths,
                        grid=None if analytic and not custom else args.grid,
                        seed=None if analytic and not custom else args.mc_seed,
                        cache_dir=str(limits.cache_dir()))
    _emit(args, out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="arcpt", description="Mean-shift changepoint detection for AR series.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    d = sub.add_parser("detect", help="single-changepoint test")
    d.add_argument("input", help="CSV (one column) or JSON series")
    d.add_argument("--method", choices=[m.value for m in Method], default=Method.SCUSUM_Z.value)
    d.add_argument("--order", type=_order, default="auto", help="AR order or 'auto' (AIC)")
    d.add_argument("--alpha", type=float, default=0.05)
    d.add_argument("--ell", type=float, default=0.05, help="lower cropping fraction (lrt-cropped)")
    d.add_argument("--h", type=float, default=0.95, help="upper cropping fraction (lrt-cropped)")
    d.add_argument("--exact", action="store_true", help="refit the AR model at every split (LRT)")
    d.add_argument("--curve", action="store_true", help="include the statistic curve")
    d.add_argument("--output", "-o")
    d.set_defaults(func=cmd_detect)

    s = sub.add_parser("segment", help="multiple-changepoint segmentation")
    s.add_argument("input")
    s.add_argument("--method", choices=["bs", "wbs", "ga"], default="ga")
    s.add_argument("--criterion", choices=[c.value for c in Criterion], default="mbic")
    s.add_argument("--order", type=_order, default=1)
    s.add_argument("--alpha", type=float, default=0.05, help="level of the binary segmentation test")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--min-spacing", type=int, default=None,
                   help="minimum regime length (GA spacing or segmentation minimum length)")
    s.add_argument("--wbs-constant", type=float, default=1.3)
    s.add_argument("--intervals", type=int, default=None, help="number of WBS intervals")
    s.add_argument("--ga-config", help="JSON file of GA parameters")
    s.add_argument("--population", type=int, default=None)
    s.add_argument("--generations", type=int, default=None)
    s.add_argument("--log", help="write the GA per-generation log as CSV")
    s.add_argument("--output", "-o")
    s.set_defaults(func=cmd_segment)

    t = sub.add_parser("distance", help="distance between two changepoint configurations")
    t.add_argument("--a", required=True, help="comma-separated times, may be empty")
    t.add_argument("--b", required=True)
    t.add_argument("--n", type=int, required=True)
    t.add_argument("--output", "-o")
    t.set_defaults(func=cmd_distance)

    m = sub.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    m.add_argument("config")
    m.add_argument("--output", "-o", help="tidy CSV (default stdout)")
    m.add_argument("--summary", help="write a JSON summary")
    m.add_argument("--jobs", type=int, default=1)
    m.add_argument("--replications", type=int, default=None)
    m.add_argument("--seed", type=int, default=None)
    m.set_defaults(func=cmd_simulate)

    c = sub.add_parser("critvals", help="quantile table of a null limit law")
    c.add_argument("--law", required=True,
                   help="sup-abs-bridge, int-sq-bridge, gumbel or cropped-sup-ratio[ell,h]")
    c.add_argument("--alpha", type=float, default=None, help="probability level of one quantile")
    c.add_argument("--paths", type=int, default=limits.DEFAULT_PATHS)
    c.add_argument("--grid", type=int, default=limits.DEFAULT_GRID)
    c.add_argument("--mc-seed", type=int, default=limits.DEFAULT_SEED)
    c.add_argument("--output", "-o")
    c.set_defaults(func=cmd_critvals)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_IO
    try:
        return args.func(args)
    except (OSError, InputFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (DegenerateSeriesError, NonCausalModelError, FloatingPointError, np.linalg.LinAlgError,
            ArithmeticError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        return EXIT_PARAM


if __name__ == "__main__":
    sys.exit(main())
