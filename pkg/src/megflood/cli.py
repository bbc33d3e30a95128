"""``megflood`` command line: flood, sweep, audit, fit and plot-data."""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from . import harness
from .core import Snapshot
from .expansion import (
    DEFAULT_ALPHA,
    DEFAULT_BETA,
    DEFAULT_BUDGET,
    DEFAULT_C,
    BudgetExceeded,
    audit_schedule,
    audit_schedule_exact,
    edge_schedule,
    expansion_estimate,
    geometric_schedule,
    is_expander_exact,
)
from .flooding import degree_lower_certificate, flood_once, geometric_lower_certificate
from .rng import derive_seed

log = logging.getLogger("megflood")

# flag dest -> [experiment] key; grid flags keep the grid key name
EXPERIMENT_FLAGS = {
    "model": "model", "seeds": "seeds", "source": "source", "max_steps": "max_steps",
    "lazy": "lazy", "out": "out",
}
GRID_FLAGS = ("n", "R", "r", "eps", "delta", "p", "q", "p_hat")


class UsageError(Exception):
    pass


def _add_model_flags(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("model")
    g.add_argument("--config", help="INI experiment file; flags override its values")
    g.add_argument("--model", choices=harness.MODELS)
    g.add_argument("--n", help="number of nodes")
    g.add_argument("--R", help="transmission radius, or 'auto' for 3 sqrt(log n / delta)")
    g.add_argument("--r", help="move radius")
    g.add_argument("--eps", help="lattice resolution (default 1)")
    g.add_argument("--delta", help="node density (default 1)")
    g.add_argument("--p", help="edge birth rate")
    g.add_argument("--q", help="edge death rate")
    g.add_argument("--p-hat", dest="p_hat", help="stationary edge density; sets p from q")
    g.add_argument("--seed", type=int, help="seed (master seed for sweeps)")
    g.add_argument("--lazy", action="store_const", const="true", help="lazy edge sampling (edge model)")


def _resolve_config(args, require_single: bool = False) -> harness.ExperimentConfig:
    exp: dict[str, str] = {}
    grid: dict[str, str] = {}
    origin = "<flags>"
    text = None
    if args.config:
        path = Path(args.config)
        try:
            text = path.read_text()
        except OSError as exc:
            raise harness.ConfigError(f"{path}: cannot read config ({exc.strerror})") from exc
        cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
        cp.optionxform = str
        try:
            cp.read_string(text, source=str(path))
        except configparser.Error as exc:
            raise harness.ConfigError(f"{path}: {exc}") from exc
        if cp.has_section("experiment"):
            exp.update(cp["experiment"])
        if cp.has_section("grid"):
            grid.update(cp["grid"])
        origin = str(path)
    for flag, key in EXPERIMENT_FLAGS.items():
        v = getattr(args, flag, None)
        if v is not None:
            exp[key] = str(v)
    if getattr(args, "seed", None) is not None:
        exp["master_seed"] = str(args.seed)
    for key in GRID_FLAGS:
        v = getattr(args, key, None)
        if v is not None:
            grid[key] = str(v)
    if getattr(args, "no_wall_clock", False):
        exp["wall_clock"] = "false"
    if getattr(args, "no_certificates", False):
        exp["certificates"] = "false"
    # a flag for one of p / p_hat replaces the other from the config file
    if getattr(args, "p_hat", None) is not None and args.p is None:
        grid.pop("p", None)
    if getattr(args, "p", None) is not None and args.p_hat is None:
        grid.pop("p_hat", None)
    if args.command == "flood":
        exp.setdefault("source", "0")
    _require_flags(exp, grid)
    cfg = harness.config_from_mapping(exp, grid, origin, text)
    if require_single and len(cfg.points()) != 1:
        raise harness.ConfigError(f"{origin}: flood needs a single parameter point, got {len(cfg.points())}")
    return cfg


def _require_flags(exp: dict, grid: dict) -> None:
    if "model" not in exp:
        raise UsageError("missing required flag --model")
    model = exp["model"].strip()
    if "n" not in grid:
        raise UsageError("missing required flag --n")
    if model == "geometric":
        for k in ("R", "r"):
            if k not in grid:
                raise UsageError(f"missing required flag --{k}")
    elif model == "edge":
        if "q" not in grid:
            raise UsageError("missing required flag --q")
        if "p" not in grid and "p_hat" not in grid:
            raise UsageError("missing required flag --p (or --p-hat)")


def _banner(cfg: harness.ExperimentConfig, point: harness.GridPoint | None, extra: dict) -> str:
    parts = [f"model={cfg.model}"]
    if point is not None:
        for k in ("n", "R", "r", "eps", "delta", "p", "q"):
            v = getattr(point, k)
            if v is not None:
                parts.append(f"{k}={v!r}" if isinstance(v, float) else f"{k}={v}")
        if point.model == "edge":
            parts.append(f"p_hat={point.p_hat!r}")
    parts += [f"{k}={v}" for k, v in extra.items()]
    return "# " + " ".join(parts)


# flood ---------------------------------------------------------------------------------


def cmd_flood(args) -> int:
    cfg = _resolve_config(args, require_single=True)
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return 0
    point = cfg.points()[0]
    try:
        point.validate()
    except ValueError as exc:
        raise harness.ConfigError(f"invalid parameters: {exc}") from exc
    max_steps = cfg.max_steps if isinstance(cfg.max_steps, int) else harness.auto_max_steps(point)
    seed = cfg.master_seed
    print(_banner(cfg, point, {"seed": seed, "seeds": cfg.seeds, "source": _source_text(cfg.source),
                               "max_steps": max_steps, "lazy": str(cfg.lazy).lower()}))
    rows = []
    for i in range(cfg.seeds):
        run_seed = seed if cfg.seeds == 1 else derive_seed(seed, i)
        if cfg.source == "all":
            sources = list(range(point.n))
        elif cfg.source == "random":
            sources = [int(np.random.default_rng(derive_seed(run_seed, "source")).integers(point.n))]
        else:
            sources = list(cfg.source)
            bad = [s for s in sources if not 0 <= s < point.n]
            if bad:
                raise harness.ConfigError(f"--source: {bad} outside [0, {point.n})")
        for s in sources:
            rows.append(_flood_one(point, run_seed, s, max_steps, cfg, verbose=len(sources) == 1))
    if len(rows) > 1:
        Ts = [r["T"] if r["T"] is not None else math.inf for r in rows]
        print(f"max T={_t_text(max(Ts))} median T={_t_text(float(np.median(Ts)))} runs={len(rows)}")
    if cfg.out:
        harness.save_csv(rows, cfg.out)
    return 0


def _source_text(src) -> str:
    return src if isinstance(src, str) else ",".join(map(str, src))


def _t_text(T) -> str:
    if T is None or (isinstance(T, float) and math.isinf(T)):
        return "∞"
    return str(int(T)) if float(T).is_integer() else f"{T:g}"


def _flood_one(point, seed, source, max_steps, cfg, verbose: bool) -> dict:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = harness.build_model(point, seed, cfg.lazy)
    record = cfg.certificates and not cfg.lazy
    res = flood_once(model, source, max_steps, record_degrees=record)
    cert_geo = geometric_lower_certificate(model.initial, source) if point.model == "geometric" else None
    cert_deg = degree_lower_certificate(res.trajectory, res.max_degrees) if record else None
    status = "" if res.completed else f" (not completed after {res.steps_simulated} steps)"
    print(
        f"seed={seed} source={source} T={_t_text(res.completion_time)}{status} "
        f"cert_geo={'NA' if cert_geo is None else cert_geo} "
        f"cert_deg={'NA' if cert_deg is None else ('pass' if cert_deg else 'fail')}"
    )
    if verbose:
        print("trajectory: " + " ".join(map(str, res.trajectory)))
    return {
        "model": point.model, "n": point.n, "R": point.R, "r": point.r, "eps": point.eps,
        "delta": point.delta, "p": point.p, "q": point.q, "seed": seed, "source": source,
        "T": res.completion_time, "completed": res.completed, "cert_geo": cert_geo,
        "cert_deg": cert_deg, "steps": res.steps_simulated, "wall_ms": None,
    }


# sweep ------------------------------------------------------------------------------------


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    if args.print_config:
        sys.stdout.write(cfg.to_ini())
        return 0
    print(_banner(cfg, None, {
        "master_seed": cfg.master_seed, "seeds": cfg.seeds, "source": _source_text(cfg.source),
        "max_steps": cfg.max_steps, "points": len(cfg.points()), "threads": harness.worker_count(),
    }), file=sys.stderr)
    res = harness.run_sweep(cfg)
    if cfg.out:
        harness.save_csv(res.rows, cfg.out)
    else:
        harness.write_csv(res.rows, sys.stdout)
    for point, reason in res.skipped:
        print(f"skipped n={point.n}: {reason}", file=sys.stderr)
    for point, i, reason in res.failures:
        print(f"failed n={point.n} seed#{i}: {reason}", file=sys.stderr)
    print(f"# rows={len(res.rows)} skipped={len(res.skipped)} failures={len(res.failures)}", file=sys.stderr)
    return res.exit_code


# audit ------------------------------------------------------------------------------------


def _audit_snapshot(args):
    """(snapshot, positions or None, point or None) for the audit target."""
    if args.edges:
        text = Path(args.edges).read_text()
        n = int(args.n) if args.n is not None else None
        return Snapshot.from_edge_list(text, n), None, None
    cfg = _resolve_config(args, require_single=True)
    point = cfg.points()[0]
    point.validate()
    if cfg.lazy:
        raise harness.ConfigError("audit needs a materialised snapshot; drop --lazy")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        model = harness.build_model(point, cfg.master_seed)
    pos = None
    if point.model == "geometric":
        pos = model.state.coordinates()
    return model.snapshot(), pos, point


def cmd_audit(args) -> int:
    G, pos, point = _audit_snapshot(args)
    seed = args.seed if args.seed is not None else 0
    exact = args.sampled is None
    report: dict
    if args.schedule:
        if args.schedule != "paper":
            raise harness.ConfigError(f"--schedule: unknown schedule {args.schedule!r} (expected 'paper')")
        if point is None:
            raise harness.ConfigError("--schedule paper needs model parameters, not --edges")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if point.model == "geometric":
                sched = geometric_schedule(point.n, point.R, args.alpha, args.beta)
            else:
                sched = edge_schedule(point.n, point.p_hat, args.c)
        if exact:
            report = audit_schedule_exact(G, sched, args.budget).to_json()
        else:
            regimes = audit_schedule(G, sched, args.sampled, seed, pos)
            report = {
                "mode": "sampled",
                "schedule": sched.label,
                "samples": args.sampled,
                "minRatio": min(r.min_ratio for r in regimes) if regimes else None,
                "verdict": "pass" if all(r.passed for r in regimes) else "fail",
                "regimes": [r.to_json() for r in regimes],
            }
    else:
        if args.h is None or args.k is None:
            raise UsageError("missing required flag --h/--k (or --schedule paper)")
        if exact:
            report = is_expander_exact(G, args.h, args.k, args.budget).to_json()
        else:
            est = expansion_estimate(G, args.h, args.sampled, seed, pos)
            passed = est.min_ratio >= args.k
            report = {"mode": "sampled", "h": args.h, "k": args.k, "verdict": "pass" if passed else "fail",
                      "samples": est.samples, "minRatio": est.min_ratio}
            if not passed:
                report["witness"] = est.witness.indices().tolist()
    text = json.dumps(report, sort_keys=True)
    print(text)
    if args.out:
        Path(args.out).write_text(text + "\n")
    return 0


# fit / plot-data ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    rows = harness.load_csv(args.csv)
    fit = harness.fit_scaling(rows, args.predictor, None if args.aggregate == "none" else args.aggregate)
    out = {
        "predictor": fit.predictor, "exponent": fit.exponent, "coefficient": fit.coefficient,
        "r2": fit.r2, "points": len(fit.x), "residuals": fit.residuals.tolist(),
    }
    print(json.dumps(out, sort_keys=True))
    return 0


def cmd_plot_data(args) -> int:
    rows = harness.load_csv(args.csv)
    groups = [g for g in (args.group_by or "").split(",") if g]
    if args.out:
        with open(args.out, "w") as fh:
            harness.emit_plot_data(rows, args.x, args.y, groups, fh)
    else:
        harness.emit_plot_data(rows, args.x, args.y, groups, sys.stdout)
    return 0


# entry point --------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="megflood", description="Flooding on stationary Markovian evolving graphs.")
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    fl = sub.add_parser("flood", help="flood from one or more sources and print T")
    _add_model_flags(fl)
    fl.add_argument("--seeds", type=int)
    fl.add_argument("--source", help="node id list, 'random' or 'all' (default 0)")
    fl.add_argument("--max-steps", dest="max_steps")
    fl.add_argument("--out", help="write result rows as CSV")
    fl.add_argument("--print-config", action="store_true")
    fl.set_defaults(func=cmd_flood)

    sw = sub.add_parser("sweep", help="run an experiment grid and write the result CSV")
    _add_model_flags(sw)
    sw.add_argument("--seeds", type=int)
    sw.add_argument("--source")
    sw.add_argument("--max-steps", dest="max_steps")
    sw.add_argument("--out")
    sw.add_argument("--no-wall-clock", action="store_true", help="leave wall_ms empty for byte-identical output")
    sw.add_argument("--no-certificates", action="store_true")
    sw.add_argument("--print-config", action="store_true")
    sw.set_defaults(func=cmd_sweep)

    au = sub.add_parser("audit", help="check (h, k)-expansion of a snapshot")
    _add_model_flags(au)
    au.add_argument("--edges", help="edge list file ('u v' lines, optional '# n=N' header)")
    mode = au.add_mutually_exclusive_group()
    mode.add_argument("--exact", action="store_true", help="exhaustive enumeration (default)")
    mode.add_argument("--sampled", type=int, metavar="SAMPLES", help="sampled estimate with this many sets")
    au.add_argument("--schedule", help="'paper' for the model's two-regime schedule")
    au.add_argument("--h", type=float)
    au.add_argument("--k", type=float)
    au.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    au.add_argument("--beta", type=float, default=DEFAULT_BETA)
    au.add_argument("--c", type=float, default=DEFAULT_C)
    au.add_argument("--budget", type=int, default=DEFAULT_BUDGET)
    au.add_argument("--out")
    au.set_defaults(func=cmd_audit)

    ft = sub.add_parser("fit", help="log-log fit of T against a predictor")
    ft.add_argument("--csv", required=True)
    ft.add_argument("--predictor", required=True, choices=sorted(harness.PREDICTORS))
    ft.add_argument("--aggregate", choices=("median", "none"), default="median")
    ft.set_defaults(func=cmd_fit)

    pd = sub.add_parser("plot-data", help="tidy TSV for external plotting")
    pd.add_argument("--csv", required=True)
    pd.add_argument("--x", required=True)
    pd.add_argument("--y", required=True, help="column or agg(column), e.g. median(T)")
    pd.add_argument("--group-by", dest="group_by")
    pd.add_argument("--out")
    pd.set_defaults(func=cmd_plot_data)
    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * args.verbose, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except harness.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG
    except BudgetExceeded as exc:
        print(f"error: {exc}; rerun with --sampled N for a sampled estimate", file=sys.stderr)
        return harness.EXIT_CONFIG
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return harness.EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
