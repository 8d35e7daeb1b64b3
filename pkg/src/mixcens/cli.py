"""Command-line front end.

Commands: ``simulate``, ``fit``, ``reproduce-table1``, ``curves`` and
``eval-mse``. Each accepts ``--config FILE`` (a JSON object) whose keys
mirror the long flags with dashes replaced by underscores; flags given on the
command line win. Unknown config keys are rejected.

Exit status: 0 success, 2 invalid input, 3 estimation failure, 4 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__
from .distributions import DistributionSpec
from .errors import InvalidObservationError, MixcensError
from .evaluation import TABLE_NS, TABLE_SCALE, mse, table1_harness
from .model import Dataset, ReportingPolicy
from .nonparametric import DEFAULT_GRID_POINTS, KernelSpec, SurvivalCurve, default_grid, estimate_F
from .parametric import fit_parametric
from .simulate import SimulationConfig, default_workers, setting, simulate_dataset

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_ESTIMATION = 3
EXIT_IO = 4

DATASET_HEADER = ["u", "delta", "y"]
CURVE_HEADER = ["t", "survival", "survival_raw", "a_hat"]


class UsageError(Exception):
    """Invalid configuration or input file; maps to exit status 2."""


# ---------------------------------------------------------------------------
# File formats


def _atomic_write(path, text: str):
    path = Path(path)
    directory = path.parent if str(path.parent) else Path(".")
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(x: float) -> str:
    return format(float(x), ".16e")


def _json_text(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n"


def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def dataset_to_csv(data: Dataset) -> str:
    rows = ((_fmt(u), int(d), int(y)) for u, d, y in zip(data.u, data.delta, data.y))
    return _csv_text(DATASET_HEADER, rows)


def write_dataset(path, data: Dataset):
    _atomic_write(path, dataset_to_csv(data))


def read_dataset(path) -> Dataset:
    """Parse a ``u,delta,y`` CSV, reporting the offending line on error."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise UsageError(f"{path}: empty file") from None
        if [h.strip() for h in header] != DATASET_HEADER:
            raise UsageError(f"{path}: line 1: expected header 'u,delta,y', got {','.join(header)!r}")
        u, delta, y = [], [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise UsageError(f"{path}: line {line}: expected 3 fields, got {len(row)}")
            try:
                uu = float(row[0])
                dd = int(row[1])
                yy = int(row[2])
            except ValueError:
                raise UsageError(f"{path}: line {line}: cannot parse {','.join(row)!r}") from None
            if dd not in (0, 1) or yy not in (0, 1):
                raise UsageError(f"{path}: line {line}: delta and y must be 0 or 1")
            if yy == 1 and dd == 0:
                raise UsageError(f"{path}: line {line}: delta=0 with y=1 violates y=1 => delta=1")
            if not np.isfinite(uu) or uu < 0:
                raise UsageError(f"{path}: line {line}: u must be finite and nonnegative, got {row[0]!r}")
            u.append(uu)
            delta.append(dd)
            y.append(yy)
    if not u:
        raise UsageError(f"{path}: no observations")
    return Dataset(u, delta, y)


def curve_to_csv(curve: SurvivalCurve) -> str:
    raw = curve.raw if curve.raw is not None else curve.values
    a = curve.a_hat if curve.a_hat is not None else np.full(curve.grid.shape, np.nan)
    rows = ((_fmt(t), _fmt(s), _fmt(r), _fmt(aa)) for t, s, r, aa in zip(curve.grid, curve.values, raw, a))
    return _csv_text(CURVE_HEADER, rows)


def read_curve(path) -> SurvivalCurve:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header[:2] != ["t", "survival"]:
            raise UsageError(f"{path}: line 1: expected a curve header starting with 't,survival'")
        t, s = [], []
        for row in reader:
            try:
                t.append(float(row[0]))
                s.append(float(row[1]))
            except (ValueError, IndexError):
                raise UsageError(f"{path}: line {reader.line_num}: cannot parse {','.join(row)!r}") from None
    if not t:
        raise UsageError(f"{path}: empty curve")
    if np.any(np.diff(t) <= 0):
        raise UsageError(f"{path}: grid times must be strictly increasing")
    return SurvivalCurve(np.array(t), np.array(s), t[-1], "file")


# ---------------------------------------------------------------------------
# Configuration


def _load_config(path, allowed) -> dict:
    if path is None:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: line {exc.lineno}: invalid JSON: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise UsageError(f"{path}: top level must be a JSON object")
    unknown = sorted(set(cfg) - set(allowed))
    if unknown:
        raise UsageError(f"{path}: unknown config keys {unknown}; allowed: {sorted(allowed)}")
    return cfg


def _merge(args, cfg, keys) -> dict:
    out = {}
    for key in keys:
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else cfg.get(key)
    return out


def _dist(prefix, opts, base):
    sub = dict(opts.get(prefix) or {})
    if not isinstance(sub, dict):
        raise UsageError(f"config field {prefix!r} must be an object")
    unknown = sorted(set(sub) - {"family", "rate", "shape"})
    if unknown:
        raise UsageError(f"config field {prefix!r}: unknown keys {unknown}")
    for part in ("family", "rate", "shape"):
        flag = opts.get(f"{prefix}_{part}")
        if flag is not None:
            sub[part] = flag
    if not sub:
        return base
    family = sub.get("family", base.family if base else None)
    rate = sub.get("rate", base.rate if base else None)
    shape = sub.get("shape", base.shape if base is not None and base.family == family else None)
    if family is None or rate is None:
        raise UsageError(f"{prefix}: family and rate are required")
    try:
        return DistributionSpec(family, rate, shape if str(family).lower() == "weibull" else None)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"{prefix}: {exc}") from None


def _policy(opts, base):
    sub = dict(opts.get("q") or {})
    unknown = sorted(set(sub) - {"kind", "param"})
    if unknown:
        raise UsageError(f"config field 'q': unknown keys {unknown}")
    if opts.get("q_kind") is not None:
        sub["kind"] = opts["q_kind"]
    if opts.get("q_param") is not None:
        sub["param"] = opts["q_param"]
    if not sub:
        return base
    kind = sub.get("kind", base.kind if base else None)
    param = sub.get("param", base.param if base else None)
    if kind is None or param is None:
        raise UsageError("q: kind and param are required")
    try:
        return ReportingPolicy(kind, param)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"q: {exc}") from None


_MODEL_KEYS = ("setting", "f", "g", "q", "f_family", "f_rate", "f_shape", "g_family", "g_rate", "g_shape",
               "q_kind", "q_param")


def _sim_config(opts, n, seed, replications) -> SimulationConfig:
    number = opts.get("setting")
    base = setting(int(number) if number is not None else 1, n=1)
    f = _dist("f", opts, base.f)
    g = _dist("g", opts, base.g)
    q = _policy(opts, base.q)
    try:
        return SimulationConfig(f, g, q, n=int(n), seed=int(seed), replications=int(replications))
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _require(opts, key):
    if opts.get(key) is None:
        raise UsageError(f"missing required option --{key.replace('_', '-')}")
    return opts[key]


def _kernel(opts) -> KernelSpec:
    sub = dict(opts.get("kernel_spec") or {})
    for key in ("kernel", "bandwidth", "boundary"):
        if opts.get(key) is not None:
            sub[key] = opts[key]
    bw = sub.get("bandwidth", "auto")
    if isinstance(bw, str) and bw != "auto":
        try:
            bw = float(bw)
        except ValueError:
            raise UsageError(f"bandwidth must be a positive number or 'auto', got {bw!r}") from None
    sub["bandwidth"] = bw
    try:
        return KernelSpec(**sub)
    except (TypeError, ValueError) as exc:
        raise UsageError(f"kernel: {exc}") from None


def _category_counts(data: Dataset) -> dict:
    n1, n2, n3 = data.counts()
    return {"served": n1, "reported": n2, "silent": n3}


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(args) -> int:
    keys = _MODEL_KEYS + ("n", "seed", "replication", "out")
    opts = _merge(args, _load_config(args.config, keys), keys)
    out = _require(opts, "out")
    config = _sim_config(opts, _require(opts, "n"), opts.get("seed") or 0, 1)
    replication = int(opts.get("replication") or 0)
    if replication < 0:
        raise UsageError("replication must be nonnegative")
    data = simulate_dataset(config, replication)
    meta = {
        "command": "simulate",
        "config": config.to_dict(),
        "replication": replication,
        "n": data.n,
        "counts": _category_counts(data),
        "format": ",".join(DATASET_HEADER),
    }
    write_dataset(out, data)
    _atomic_write(f"{out}.meta.json", _json_text(meta))
    return EXIT_OK


def cmd_fit(args) -> int:
    keys = ("data", "method", "out", "f_family", "g_family", "kernel", "bandwidth", "boundary", "kernel_spec",
            "grid_points")
    opts = _merge(args, _load_config(args.config, keys), keys)
    path, out = _require(opts, "data"), _require(opts, "out")
    method = opts.get("method") or "nonparametric"
    if method not in ("parametric", "nonparametric"):
        raise UsageError(f"method must be 'parametric' or 'nonparametric', got {method!r}")
    data = read_dataset(path)
    if method == "parametric":
        fit = fit_parametric(data, opts.get("f_family") or "exponential", opts.get("g_family") or "exponential")
        record = fit.to_dict()
        record["n"] = data.n
        record["counts"] = _category_counts(data)
        _atomic_write(out, _json_text(record))
        return EXIT_OK
    kernel = _kernel(opts)
    points = int(opts.get("grid_points") or DEFAULT_GRID_POINTS)
    if points < 2:
        raise UsageError("grid-points must be at least 2")
    curve = estimate_F(data, kernel, grid=default_grid(data, points))
    meta = {
        "method": "nonparametric",
        "kernel": kernel.to_dict(),
        "tau": curve.tau,
        "n": data.n,
        "counts": _category_counts(data),
        "excluded": list(curve.excluded),
        "columns": CURVE_HEADER,
    }
    _atomic_write(out, curve_to_csv(curve))
    _atomic_write(f"{out}.meta.json", _json_text(meta))
    return EXIT_OK


def cmd_reproduce_table1(args) -> int:
    keys = ("reps", "seed", "ns", "workers", "out")
    opts = _merge(args, _load_config(args.config, keys), keys)
    out = _require(opts, "out")
    reps = int(opts.get("reps") or 100)
    if reps < 1:
        raise UsageError("reps must be at least 1")
    ns = opts.get("ns") or TABLE_NS
    if isinstance(ns, str):
        try:
            ns = [int(x) for x in ns.split(",") if x.strip()]
        except ValueError:
            raise UsageError(f"ns must be comma-separated integers, got {ns!r}") from None
    if not ns or min(ns) < 1:
        raise UsageError("ns must be positive sample sizes")
    workers = int(opts.get("workers") or default_workers())
    summaries = table1_harness(ns, reps, int(opts.get("seed") or 0), workers=workers)
    rows = []
    for s in summaries:
        rows.append([s.setting, s.n, s.estimator, repr(s.mean), repr(s.median), repr(s.sd), s.replications,
                     s.failures, repr(s.mean * TABLE_SCALE), repr(s.median * TABLE_SCALE), repr(s.sd * TABLE_SCALE)])
    header = ["setting", "n", "estimator", "mean", "median", "sd", "reps", "failures",
              "mean_x1e3", "median_x1e3", "sd_x1e3"]
    _atomic_write(out, _csv_text(header, rows))
    failures = sum(s.failures for s in summaries)
    if failures:
        for s in summaries:
            for rep, msg in s.errors:
                print(f"setting {s.setting} n={s.n} {s.estimator} replication {rep}: {msg}", file=sys.stderr)
        return EXIT_ESTIMATION
    return EXIT_OK


def cmd_curves(args) -> int:
    keys = _MODEL_KEYS + ("n", "reps", "seed", "grid_points", "out")
    opts = _merge(args, _load_config(args.config, keys), keys)
    out = _require(opts, "out")
    reps = int(opts.get("reps") or 1)
    config = _sim_config(opts, _require(opts, "n"), opts.get("seed") or 0, reps)
    points = int(opts.get("grid_points") or DEFAULT_GRID_POINTS)
    if points < 2:
        raise UsageError("grid-points must be at least 2")
    rows = []
    for r in range(config.replications):
        data = simulate_dataset(config, r)
        grid = default_grid(data, points)
        series = {
            "nonparametric": estimate_F(data, grid=grid)(grid),
            "parametric": fit_parametric(data, stderr=False).survival(grid),
            "truth": config.f.survival(grid),
        }
        for method in ("nonparametric", "parametric", "truth"):
            rows.extend([r, method, _fmt(t), _fmt(s)] for t, s in zip(grid, series[method]))
    _atomic_write(out, _csv_text(["replication", "method", "t", "survival"], rows))
    return EXIT_OK


def cmd_eval_mse(args) -> int:
    keys = ("curve", "setting", "f", "f_family", "f_rate", "f_shape", "draws", "out")
    opts = _merge(args, _load_config(args.config, keys), keys)
    curve = read_curve(_require(opts, "curve"))
    number = opts.get("setting")
    f0 = _dist("f", opts, setting(int(number) if number is not None else 1).f)
    draws = int(opts.get("draws") or 100_000)
    if draws < 1:
        raise UsageError("draws must be positive")
    value = mse(curve, f0, draws=draws)
    text = _json_text({"mse": value, "mse_x1e3": value * TABLE_SCALE, "draws": draws, "f0": f0.to_dict(),
                       "tau": curve.tau})
    if opts.get("out"):
        _atomic_write(opts["out"], text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser


def _add_model_flags(p):
    p.add_argument("--setting", type=int, choices=(1, 2), help="start from a benchmark setting (default 1)")
    for prefix, what in (("f", "patience"), ("g", "waiting")):
        p.add_argument(f"--{prefix}-family", choices=("exponential", "weibull"), help=f"{what} time family")
        p.add_argument(f"--{prefix}-rate", type=float, help=f"{what} time rate")
        p.add_argument(f"--{prefix}-shape", type=float, help=f"{what} time Weibull shape")
    p.add_argument("--q-kind", choices=ReportingPolicy.KINDS, help="reporting probability shape")
    p.add_argument("--q-param", type=float, help="reporting rate or constant probability")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mixcens", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one dataset")
    p.add_argument("--config")
    _add_model_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--replication", type=int, help="replication index within the seed (default 0)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit a dataset CSV")
    p.add_argument("data", nargs="?")
    p.add_argument("--config")
    p.add_argument("--method", choices=("parametric", "nonparametric"))
    p.add_argument("--out")
    p.add_argument("--f-family", choices=("exponential", "weibull"))
    p.add_argument("--g-family", choices=("exponential", "weibull"))
    p.add_argument("--kernel", choices=("epanechnikov", "gaussian"))
    p.add_argument("--bandwidth", help="positive number or 'auto'")
    p.add_argument("--boundary", choices=("reflection", "none"))
    p.add_argument("--grid-points", type=int)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reproduce-table1", help="MSE table for both benchmark settings")
    p.add_argument("--config")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--ns", help="comma-separated sample sizes")
    p.add_argument("--workers", type=int, help="worker processes (default from MIXCENS_THREADS or 1)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_reproduce_table1)

    p = sub.add_parser("curves", help="export estimated and true survival curves")
    p.add_argument("--config")
    _add_model_flags(p)
    p.add_argument("--n", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grid-points", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("eval-mse", help="MSE of a curve CSV against a true patience distribution")
    p.add_argument("curve", nargs="?")
    p.add_argument("--config")
    p.add_argument("--setting", type=int, choices=(1, 2))
    p.add_argument("--f-family", choices=("exponential", "weibull"))
    p.add_argument("--f-rate", type=float)
    p.add_argument("--f-shape", type=float)
    p.add_argument("--draws", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval_mse)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, InvalidObservationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except MixcensError as exc:
        print(f"estimation failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
