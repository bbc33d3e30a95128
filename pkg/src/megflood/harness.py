"""Experiment configuration, sweeps, CSV persistence and scaling fits.

A config file is INI text with two sections::

    [experiment]
    model = geometric          ; geometric | edge
    seeds = 20
    master_seed = 1
    source = random            ; random | all | comma list of node ids
    max_steps = auto           ; integer or auto
    certificates = true
    wall_clock = true
    lazy = false               ; edge model only
    out = results.csv

    [grid]
    n = 1024, 4096, 16384
    R = auto                   ; 3 sqrt(log n / delta)
    r = 0.5 * R

Grid values are comma lists of numbers or arithmetic expressions over
earlier keys and ``sqrt log log2 exp floor ceil min max pi e``.  The grid is
the product of all lists; expressions are evaluated per point.
"""

from __future__ import annotations

import ast
import configparser
import csv
import io
import itertools
import logging
import math
import os
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .edge_markov import EdgeMEG, EdgeParams, LazyEdgeMEG
from .expansion import edge_schedule, flooding_bound, geometric_schedule
from .flooding import default_max_steps, degree_lower_certificate, flood_once, geometric_lower_certificate
from .geometric import GeometricMEG, GeometricParams
from .rng import derive_seed

log = logging.getLogger(__name__)

CSV_COLUMNS = (
    "model", "n", "R", "r", "eps", "delta", "p", "q", "seed", "source",
    "T", "completed", "cert_geo", "cert_deg", "steps", "wall_ms",
)
MODELS = ("geometric", "edge")
GRID_KEYS = {
    "geometric": ("n", "delta", "eps", "R", "r"),
    "edge": ("n", "q", "p_hat", "p"),
}
EXPERIMENT_KEYS = (
    "model", "seeds", "master_seed", "source", "max_steps",
    "certificates", "wall_clock", "lazy", "out",
)
GRID_DEFAULTS = {"geometric": {"eps": "1", "delta": "1"}, "edge": {}}

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL = 0, 1, 2


class ConfigError(ValueError):
    """Invalid experiment configuration; the message names the location."""


# expressions ------------------------------------------------------------------

_FUNCS: dict[str, Callable] = {
    "sqrt": math.sqrt, "log": math.log, "log2": math.log2, "exp": math.exp,
    "floor": math.floor, "ceil": math.ceil, "min": min, "max": max,
}
_CONSTS = {"pi": math.pi, "e": math.e}
_BINOPS = {
    ast.Add: lambda a, b: a + b, ast.Sub: lambda a, b: a - b,
    ast.Mult: lambda a, b: a * b, ast.Div: lambda a, b: a / b,
    ast.FloorDiv: lambda a, b: a // b, ast.Pow: lambda a, b: a ** b,
}


def evaluate(expr: str, names: dict[str, float]) -> float:
    """Evaluate a restricted arithmetic expression."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return node.value
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        if isinstance(node, ast.Name):
            if node.id in names:
                return names[node.id]
            if node.id in _CONSTS:
                return _CONSTS[node.id]
            raise ValueError(f"unknown name {node.id!r}")
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
            return _FUNCS[node.func.id](*(ev(a) for a in node.args))
        raise ValueError(f"unsupported syntax {ast.dump(node)[:40]}")

    try:
        tree = ast.parse(expr.strip(), mode="eval")
    except SyntaxError as exc:
        raise ValueError(f"cannot parse {expr!r}") from exc
    return ev(tree)


def split_list(text: str) -> list[str]:
    """Split on commas that are not inside parentheses."""
    out, depth, cur = [], 0, []
    for ch in text:
        if ch == "(":
            depth += 1
        elif ch == ")":
            depth -= 1
        if ch == "," and depth == 0:
            out.append("".join(cur).strip())
            cur = []
        else:
            cur.append(ch)
    out.append("".join(cur).strip())
    return [s for s in out if s]


def auto_R(n: int, delta: float = 1.0) -> float:
    """3 sqrt(log n / delta), the default transmission radius."""
    return 3.0 * math.sqrt(math.log(n) / delta)


# grid points ----------------------------------------------------------------------


@dataclass(frozen=True)
class GridPoint:
    model: str
    n: int
    R: float | None = None
    r: float | None = None
    eps: float | None = None
    delta: float | None = None
    p: float | None = None
    q: float | None = None

    def key(self) -> tuple:
        """Canonical identity used for seed derivation."""
        return (self.model, self.n, self.R, self.r, self.eps, self.delta, self.p, self.q)

    @property
    def p_hat(self) -> float:
        return self.p / (self.p + self.q)

    def geometric_params(self) -> GeometricParams:
        return GeometricParams(self.n, self.r, self.R, self.eps, self.delta)

    def edge_params(self) -> EdgeParams:
        return EdgeParams(self.n, self.p, self.q)

    def validate(self) -> None:
        """Raise ValueError when the point violates model invariants."""
        if self.model == "geometric":
            self.geometric_params()
        else:
            self.edge_params()


def _point_from_values(model: str, vals: dict[str, float]) -> GridPoint:
    n = vals["n"]
    if n != int(n):
        raise ValueError(f"n must be an integer, got {n}")
    if model == "geometric":
        return GridPoint(model, int(n), R=float(vals["R"]), r=float(vals["r"]),
                         eps=float(vals["eps"]), delta=float(vals["delta"]))
    return GridPoint(model, int(n), p=float(vals["p"]), q=float(vals["q"]))


# config ------------------------------------------------------------------------------


@dataclass
class ExperimentConfig:
    model: str
    grid: dict[str, list[str]]
    seeds: int = 1
    master_seed: int = 0
    source: str | list[int] = "random"
    max_steps: int | str = "auto"
    certificates: bool = True
    wall_clock: bool = True
    lazy: bool = False
    out: str | None = None
    origin: str = "<config>"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError(f"{self.origin}: [experiment] model: expected one of {MODELS}, got {self.model!r}")
        if self.seeds < 1:
            raise ConfigError(f"{self.origin}: [experiment] seeds: must be >= 1")
        if isinstance(self.max_steps, int) and self.max_steps < 1:
            raise ConfigError(f"{self.origin}: [experiment] max_steps: must be >= 1")
        if self.lazy and self.model != "edge":
            raise ConfigError(f"{self.origin}: [experiment] lazy: only the edge model has a lazy mode")
        allowed = GRID_KEYS[self.model]
        for k, items in self.grid.items():
            if k not in allowed:
                raise ConfigError(f"{self.origin}: [grid] {k}: not a {self.model} parameter (allowed: {', '.join(allowed)})")
            if not items:
                raise ConfigError(f"{self.origin}: [grid] {k}: empty value list")
        if "n" not in self.grid:
            raise ConfigError(f"{self.origin}: [grid] n: missing")
        if self.model == "geometric":
            for k in ("R", "r"):
                if k not in self.grid:
                    raise ConfigError(f"{self.origin}: [grid] {k}: missing")
        else:
            if "q" not in self.grid:
                raise ConfigError(f"{self.origin}: [grid] q: missing")
            if ("p" in self.grid) == ("p_hat" in self.grid):
                raise ConfigError(f"{self.origin}: [grid] p: give exactly one of p and p_hat")

    def points(self) -> list[GridPoint]:
        """Resolved grid points in deterministic order (invalid ones included)."""
        order = [k for k in GRID_KEYS[self.model] if k in self.grid or k in GRID_DEFAULTS[self.model]]
        lists = [self.grid.get(k, [GRID_DEFAULTS[self.model].get(k, "")]) for k in order]
        out = []
        for combo in itertools.product(*lists):
            vals: dict[str, float] = {}
            for k, expr in zip(order, combo):
                try:
                    if expr.strip().lower() == "auto":
                        if k != "R":
                            raise ValueError("auto is only defined for R")
                        vals[k] = auto_R(int(vals["n"]), vals.get("delta", 1.0))
                    else:
                        vals[k] = float(evaluate(expr, vals))
                except (ValueError, ArithmeticError, TypeError) as exc:
                    raise ConfigError(f"{self.origin}: [grid] {k} = {expr}: {exc}") from exc
            if self.model == "edge" and "p_hat" in vals:
                ph, q = vals["p_hat"], vals["q"]
                vals["p"] = q * ph / (1.0 - ph) if ph < 1 else math.inf
            out.append(_point_from_values(self.model, vals))
        return out

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        src = self.source if isinstance(self.source, str) else ", ".join(map(str, self.source))
        cp["experiment"] = {
            "model": self.model,
            "seeds": str(self.seeds),
            "master_seed": str(self.master_seed),
            "source": src,
            "max_steps": str(self.max_steps),
            "certificates": str(self.certificates).lower(),
            "wall_clock": str(self.wall_clock).lower(),
            "lazy": str(self.lazy).lower(),
        }
        if self.out:
            cp["experiment"]["out"] = self.out
        cp["grid"] = {k: ", ".join(v) for k, v in self.grid.items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()


def _line_of(text: str, section: str, key: str | None) -> int | None:
    cur = None
    for i, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if line.startswith("[") and line.endswith("]"):
            cur = line[1:-1].strip()
            if key is None and cur == section:
                return i
        elif cur == section and key is not None and line.split("=", 1)[0].strip() == key:
            return i
    return None


def _parse_bool(v: str) -> bool:
    low = v.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected a boolean, got {v!r}")


def _parse_source(v: str) -> str | list[int]:
    low = v.strip().lower()
    if low in ("random", "all"):
        return low
    return [int(x) for x in split_list(v)]


def config_from_mapping(exp: dict[str, str], grid: dict[str, str], origin: str = "<config>",
                        text: str | None = None) -> ExperimentConfig:
    """Build a config from raw string values (file sections or CLI flags)."""

    def where(section, key):
        line = _line_of(text, section, key) if text else None
        return f"{origin}:{line}" if line else origin

    for k in exp:
        if k not in EXPERIMENT_KEYS:
            raise ConfigError(f"{where('experiment', k)}: [experiment] {k}: unknown key")
    if "model" not in exp:
        raise ConfigError(f"{where('experiment', None)}: [experiment] model: missing")
    kw: dict = {"model": exp["model"].strip(), "origin": origin}
    parsers = {
        "seeds": int, "master_seed": int, "source": _parse_source,
        "max_steps": lambda v: "auto" if v.strip().lower() == "auto" else int(v),
        "certificates": _parse_bool, "wall_clock": _parse_bool, "lazy": _parse_bool,
        "out": str.strip,
    }
    for k, fn in parsers.items():
        if k in exp:
            try:
                kw[k] = fn(exp[k])
            except ValueError as exc:
                raise ConfigError(f"{where('experiment', k)}: [experiment] {k}: {exc}") from exc
    kw["grid"] = {k: split_list(v) for k, v in grid.items()}
    try:
        cfg = ExperimentConfig(**kw)
        cfg.points()
    except ConfigError as exc:
        msg = str(exc)
        for sec, k in _error_key(msg):
            line = _line_of(text, sec, k) if text else None
            if line:
                msg = msg.replace(f"{origin}:", f"{origin}:{line}:", 1)
                break
        raise ConfigError(msg) from None
    return cfg


def _error_key(msg: str) -> list[tuple[str, str]]:
    out = []
    for sec in ("experiment", "grid"):
        tag = f"[{sec}] "
        if tag in msg:
            k = msg.split(tag, 1)[1].split(":", 1)[0].split("=", 1)[0].strip()
            out.append((sec, k))
    return out


def parse_config(text: str, origin: str = "<config>") -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    cp.optionxform = str
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise ConfigError(f"{origin}: {exc}") from exc
    for sec in cp.sections():
        if sec not in ("experiment", "grid"):
            raise ConfigError(f"{origin}:{_line_of(text, sec, None)}: unknown section [{sec}]")
    if not cp.has_section("experiment"):
        raise ConfigError(f"{origin}: missing [experiment] section")
    if not cp.has_section("grid"):
        raise ConfigError(f"{origin}: missing [grid] section")
    return config_from_mapping(dict(cp["experiment"]), dict(cp["grid"]), origin, text)


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"{p}: cannot read config ({exc.strerror})") from exc
    return parse_config(text, str(p))


# running ---------------------------------------------------------------------------


def build_model(point: GridPoint, seed: int, lazy: bool = False):
    if point.model == "geometric":
        return GeometricMEG(point.geometric_params(), seed)
    if lazy:
        return LazyEdgeMEG(point.edge_params(), seed)
    return EdgeMEG(point.edge_params(), seed)


def auto_max_steps(point: GridPoint) -> int:
    """20x the schedule's flooding bound (default constants), at least 1000."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            if point.model == "geometric":
                bound = flooding_bound(geometric_schedule(point.n, point.R))
            else:
                bound = flooding_bound(edge_schedule(point.n, point.p_hat))
        except ValueError:
            bound = None
    return default_max_steps(bound)


def run_seed(point: GridPoint, seed: int, source: int, max_steps: int, certificates: bool = True,
             lazy: bool = False) -> dict:
    """One flooding run; returns a result row (wall_ms included)."""
    t0 = time.perf_counter()
    model = build_model(point, seed, lazy)
    record = certificates and not lazy
    res = flood_once(model, source, max_steps, record_degrees=record)
    cert_geo = geometric_lower_certificate(model.initial, source) if point.model == "geometric" else None
    cert_deg = degree_lower_certificate(res.trajectory, res.max_degrees) if record else None
    wall = (time.perf_counter() - t0) * 1000.0
    return {
        "model": point.model, "n": point.n, "R": point.R, "r": point.r, "eps": point.eps,
        "delta": point.delta, "p": point.p, "q": point.q, "seed": seed, "source": source,
        "T": res.completion_time, "completed": res.completed,
        "cert_geo": cert_geo, "cert_deg": cert_deg, "steps": res.steps_simulated, "wall_ms": wall,
    }


@dataclass
class SweepResult:
    rows: list[dict] = field(default_factory=list)
    skipped: list[tuple[GridPoint, str]] = field(default_factory=list)
    failures: list[tuple[GridPoint, int, str]] = field(default_factory=list)

    @property
    def exit_code(self) -> int:
        return EXIT_PARTIAL if self.failures else EXIT_OK


def _sources_for(cfg: ExperimentConfig, point: GridPoint, seed_index: int, master: int) -> list[int]:
    if cfg.source == "all":
        return list(range(point.n))
    if cfg.source == "random":
        s = derive_seed(master, point.key(), seed_index, "source")
        return [int(np.random.default_rng(s).integers(point.n))]
    bad = [s for s in cfg.source if not 0 <= s < point.n]
    if bad:
        raise ValueError(f"sources {bad} outside [0, {point.n})")
    return list(cfg.source)


def worker_count() -> int:
    raw = os.environ.get("MEG_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_sweep(cfg: ExperimentConfig, threads: int | None = None) -> SweepResult:
    """Run every (grid point, seed, source); rows come back in grid order.

    The run seed is ``derive_seed(master_seed, point.key(), seed_index, source)``:
    it depends on the point's parameter values rather than its position, so
    extending the grid leaves existing runs untouched.
    """
    result = SweepResult()
    tasks: list[tuple[GridPoint, int, int, int, int]] = []
    for point in cfg.points():
        try:
            point.validate()
        except ValueError as exc:
            log.warning("skipping %s: %s", point, exc)
            result.skipped.append((point, str(exc)))
            continue
        steps = cfg.max_steps if isinstance(cfg.max_steps, int) else auto_max_steps(point)
        for i in range(cfg.seeds):
            try:
                sources = _sources_for(cfg, point, i, cfg.master_seed)
            except ValueError as exc:
                log.warning("point %s seed %d failed: %s", point, i, exc)
                result.failures.append((point, i, str(exc)))
                continue
            for s in sources:
                seed = derive_seed(cfg.master_seed, point.key(), i, s)
                tasks.append((point, i, seed, s, steps))

    def work(task):
        point, i, seed, s, steps = task
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                return run_seed(point, seed, s, steps, cfg.certificates, cfg.lazy), None
        except Exception as exc:  # per-run failures are logged, the sweep goes on
            log.warning("run %s seed %d source %d failed: %s", point, i, s, exc)
            return None, (point, i, f"{type(exc).__name__}: {exc}")

    nthreads = threads or worker_count()
    if nthreads == 1:
        outcomes = [work(t) for t in tasks]
    else:
        with ThreadPoolExecutor(nthreads) as pool:
            outcomes = list(pool.map(work, tasks))
    for row, fail in outcomes:
        if row is not None:
            if not cfg.wall_clock:
                row["wall_ms"] = None
            result.rows.append(row)
        else:
            result.failures.append(fail)
    return result


# CSV ----------------------------------------------------------------------------------


def _fmt(col: str, v) -> str:
    if v is None:
        return "NA" if col in ("cert_geo", "cert_deg") else ""
    if col == "T":
        return str(v)
    if isinstance(v, bool):
        return "1" if v else "0" if col == "completed" else ("pass" if v else "fail")
    if col == "wall_ms":
        return f"{v:.3f}"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_row(row: dict) -> list[str]:
    out = []
    for col in CSV_COLUMNS:
        v = row.get(col)
        if col == "T" and v is None:
            out.append("inf")
        elif col == "cert_deg" and isinstance(v, bool):
            out.append("pass" if v else "fail")
        else:
            out.append(_fmt(col, v))
    return out


def write_csv(rows: Iterable[dict], fh) -> None:
    """Frozen format: header, then one line per row, ``\\n`` line endings.

    ``T`` is an integer or ``inf``; ``completed`` is 0/1; ``cert_geo`` is an
    integer or ``NA``; ``cert_deg`` is ``pass``/``fail``/``NA``; floats use
    ``repr``; ``wall_ms`` has three decimals or is empty when disabled.
    """
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for row in rows:
        w.writerow(format_row(row))


def save_csv(rows: Iterable[dict], path: str | os.PathLike) -> None:
    with open(path, "w", newline="") as fh:
        write_csv(rows, fh)


def _parse_cell(col: str, v: str):
    if v == "" or v == "NA":
        return None
    if col in ("model",):
        return v
    if col == "T":
        return None if v == "inf" else int(v)
    if col == "completed":
        return v == "1"
    if col == "cert_deg":
        return v == "pass"
    if col in ("n", "seed", "source", "cert_geo", "steps"):
        return int(v)
    return float(v)


def read_csv(fh) -> list[dict]:
    reader = csv.DictReader(fh)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError("unexpected CSV header")
    return [{k: _parse_cell(k, v) for k, v in rec.items()} for rec in reader]


def load_csv(path: str | os.PathLike) -> list[dict]:
    with open(path, newline="") as fh:
        return read_csv(fh)


# scaling fits ------------------------------------------------------------------------------


def _p_hat(row: dict) -> float:
    return row["p"] / (row["p"] + row["q"])


PREDICTORS: dict[str, Callable[[dict], float]] = {
    "sqrt(n)/R": lambda r: math.sqrt(r["n"]) / r["R"],
    "log(n)/log(n*p_hat)": lambda r: math.log(r["n"]) / math.log(r["n"] * _p_hat(r)),
    "n": lambda r: float(r["n"]),
}


@dataclass
class ScalingFit:
    predictor: str
    exponent: float
    coefficient: float
    r2: float
    residuals: np.ndarray
    x: np.ndarray
    y: np.ndarray

    def predict(self, x) -> np.ndarray:
        return self.coefficient * np.asarray(x, dtype=float) ** self.exponent


def fit_power_law(x: Sequence[float], y: Sequence[float], predictor: str = "x") -> ScalingFit:
    """Least squares of log y on log x: y = coefficient * x ** exponent."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("power-law fit needs positive x and y")
    if np.unique(x).size < 3:
        raise ValueError("need at least 3 distinct predictor values")
    lx, ly = np.log(x), np.log(y)
    if np.var(lx) <= 1e-24 * max(1.0, float(np.mean(lx * lx))):
        raise ValueError("degenerate predictor variance")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (b, a), *_ = np.linalg.lstsq(A, ly, rcond=None)
    res = ly - (a + b * lx)
    ss_res = float(res @ res)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    if ss_tot <= 1e-24:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    return ScalingFit(predictor, float(b), float(math.exp(a)), r2, res, x, y)


def fit_scaling(rows: Iterable[dict], predictor: str | Callable[[dict], float],
                aggregate: str | None = "median") -> ScalingFit:
    """Fit T against a predictor over completed runs.

    ``aggregate="median"`` fits the per-predictor-value medians (one point per
    grid value); ``None`` fits every run.
    """
    fn = PREDICTORS[predictor] if isinstance(predictor, str) else predictor
    name = predictor if isinstance(predictor, str) else getattr(predictor, "__name__", "custom")
    pts = [(fn(r), float(r["T"])) for r in rows if r.get("completed") and r.get("T") is not None]
    if not pts:
        raise ValueError("no completed runs to fit")
    if aggregate is None:
        xs, ys = zip(*pts)
    elif aggregate == "median":
        groups: dict[float, list[float]] = {}
        for x, y in pts:
            groups.setdefault(x, []).append(y)
        xs = sorted(groups)
        ys = [float(np.median(groups[x])) for x in xs]
    else:
        raise ValueError(f"unknown aggregate {aggregate!r}")
    return fit_power_law(xs, ys, name)


# plot data --------------------------------------------------------------------------------

_AGGS: dict[str, Callable[[list[float]], float]] = {
    "median": lambda v: float(np.median(v)),
    "mean": lambda v: float(np.mean(v)),
    "max": max,
    "min": min,
    "count": len,
}


def _split_agg(y: str) -> tuple[str | None, str]:
    y = y.strip()
    if y.endswith(")") and "(" in y:
        fn, col = y[:-1].split("(", 1)
        fn = fn.strip()
        if fn not in _AGGS:
            raise ValueError(f"unknown aggregate {fn!r}")
        return fn, col.strip()
    return None, y


def _plot_value(row: dict, col: str):
    if col == "T" and row.get("T") is None:
        return math.inf
    return row.get(col)


def emit_plot_data(rows: Sequence[dict], x: str, y: str, group_by: Sequence[str] = (), fh=None) -> str:
    """Tab-separated tidy table with columns ``group_by..., x, y``.

    ``y`` is a column name or ``agg(column)`` with agg in median, mean, max,
    min, count; aggregation is over rows sharing the group and x values.
    """
    agg, ycol = _split_agg(y)
    for col in (*group_by, x, ycol):
        if col not in CSV_COLUMNS:
            raise ValueError(f"unknown column {col!r}")
    buf = io.StringIO()
    buf.write("\t".join((*group_by, x, y)) + "\n")
    if agg is None:
        for row in rows:
            vals = [_plot_value(row, c) for c in (*group_by, x, ycol)]
            buf.write("\t".join(_plot_str(v) for v in vals) + "\n")
    else:
        groups: dict[tuple, list] = {}
        for row in rows:
            key = tuple(_plot_value(row, c) for c in (*group_by, x))
            groups.setdefault(key, []).append(_plot_value(row, ycol))
        for key in sorted(groups, key=lambda k: tuple((v is None, v if v is not None else 0) for v in k)):
            vals = [v for v in groups[key] if v is not None]
            out = _AGGS[agg](vals) if vals else None
            buf.write("\t".join(_plot_str(v) for v in (*key, out)) + "\n")
    text = buf.getvalue()
    if fh is not None:
        fh.write(text)
    return text


def _plot_str(v) -> str:
    if v is None:
        return "NA"
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)
