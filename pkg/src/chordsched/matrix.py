"""Experiment matrices: running every cell with repeats, and reporting on them.

Layout of an output directory::

    runs/<workload>__<churn>__<policy>/r<k>/
        lookups.csv traffic.csv manager.csv   raw logs
        windows.csv                           per-window ELT and NU
        intervals.csv                         network-mean interval per window
        run.json                              single-value metrics and counters
    runs.csv      one row per run
    summary.csv   one row per cell (means over repeats, normalized columns)
    winners.csv   per policy: cells won on ELT, NU and both

``report`` adds ``normalized.csv`` (normalized metrics plus mean and median
rows), ``nsd.csv`` and ``nsd_cdf.csv``.
"""

from __future__ import annotations

import csv
import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

from .config import cell_name
from .metrics import (
    mean_defined, normalize, normalize_windows, nsd, single_value_metrics, window_metrics,
)
from .simnet.experiment import run_experiment

BASELINE = "policy0"

RUN_COLUMNS = (
    "workload", "churn", "policy", "repeat", "seed", "duration", "lookups", "failures",
    "elt_single", "nu_single", "elt_window_mean", "nu_window_mean",
)
SUMMARY_COLUMNS = (
    "workload", "churn", "policy", "repeats",
    "elt_window_mean", "elt_single", "nu_window_mean", "nu_single",
    "elt_window_norm", "elt_single_norm", "nu_window_norm", "nu_single_norm",
)
WINNER_COLUMNS = ("policy", "elt", "nu", "both", "elt_single", "nu_single", "both_single")
NORMALIZED_COLUMNS = ("workload", "churn", "policy", "elt_window_norm", "elt_single_norm",
                  "nu_window_norm", "nu_single_norm")


class ReportError(Exception):
    """Raised when a report cannot be built from a results directory."""


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        return f"{x:.6g}"
    return str(x)


def _parse(s):
    if s == "":
        return None
    return float(s)


def _write_csv(path, columns, rows):
    tmp = path + ".tmp"
    with open(tmp, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row[c]) for c in columns])
    os.replace(tmp, path)


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_dir(out_dir, workload, churn, policy, repeat):
    return os.path.join(out_dir, "runs", cell_name(workload, churn, policy), f"r{repeat}")


# -- one run -------------------------------------------------------------

def interval_series(cycles, window, count):
    """Per window: mean, min and max interval over manager cycles, and immediate triggers."""
    buckets = [[] for _ in range(count)]
    immediate = [0] * count
    for c in cycles:
        w = min(int(c.time // window), count - 1)
        buckets[w].append(c.interval_after)
        immediate[w] += c.immediate
    rows = []
    for w, vals in enumerate(buckets):
        rows.append({
            "window": w, "time": w * window,
            "mean_interval": statistics.fmean(vals) if vals else None,
            "min_interval": min(vals) if vals else None,
            "max_interval": max(vals) if vals else None,
            "immediate": immediate[w],
        })
    return rows


def execute_run(cfg, directory):
    """Run one experiment, write its artifacts and return its summary row."""
    res = run_experiment(cfg)
    n = cfg.node_count
    window = cfg.sim.window
    direct = cfg.retry_on_error
    wins = window_metrics(res.lookups, res.traffic, window, n, res.duration, direct)
    elt, nu = single_value_metrics(res.lookups, res.traffic, n, res.duration, direct)

    res.write_logs(directory)
    _write_csv(os.path.join(directory, "windows.csv"), ("window", "time", "elt", "nu"),
               [{"window": m.window_index, "time": m.window_index * window, "elt": m.elt, "nu": m.nu}
                for m in wins])
    _write_csv(os.path.join(directory, "intervals.csv"),
               ("window", "time", "mean_interval", "min_interval", "max_interval", "immediate"),
               interval_series(res.cycles, window, len(wins)))
    row = {
        "workload": cfg.workload, "churn": cfg.churn, "policy": cfg.policy, "seed": cfg.seed,
        "duration": res.duration, "lookups": len(res.lookups),
        "failures": sum(not r.success for r in res.lookups),
        "elt_single": elt, "nu_single": nu,
        "elt_window_mean": mean_defined(m.elt for m in wins),
        "nu_window_mean": mean_defined(m.nu for m in wins),
    }
    with open(os.path.join(directory, "run.json"), "w") as fh:
        json.dump({**row, "stats": res.stats}, fh, indent=1, sort_keys=True, default=float)
        fh.write("\n")
    return row


def _job(args):
    cfg, directory, repeat = args
    row = execute_run(cfg, directory)
    row["repeat"] = repeat
    return row


# -- matrices ------------------------------------------------------------

@dataclass
class MatrixOutcome:
    out_dir: str
    runs: list
    complete: bool


def _select(matrix, only):
    cells = matrix.cells()
    if only:
        wanted = set(only)
        unknown = wanted - {cell_name(*c) for c in cells}
        if unknown:
            raise ReportError(f"unknown cell(s): {', '.join(sorted(unknown))}")
        cells = [c for c in cells if cell_name(*c) in wanted]
    return cells


def run_matrix(matrix, out_dir=None, only=None, jobs=1, progress=None):
    """Run every selected cell and repeat; write per-run and matrix-level CSVs.

    On interruption the runs finished so far are summarized before the
    exception propagates.
    """
    out_dir = out_dir or matrix.output_dir
    os.makedirs(out_dir, exist_ok=True)
    jobs_list = []
    for w, c, p in _select(matrix, only):
        for r in range(matrix.repeats):
            cfg = matrix.experiment(w, c, p, r).validate()
            jobs_list.append((cfg, run_dir(out_dir, w, c, p, r), r))

    rows = []
    complete = False
    try:
        if jobs > 1:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                for row in pool.map(_job, jobs_list):
                    rows.append(row)
                    if progress:
                        progress(row)
        else:
            for job in jobs_list:
                row = _job(job)
                rows.append(row)
                if progress:
                    progress(row)
        complete = True
    finally:
        write_matrix_tables(out_dir, rows)
    return MatrixOutcome(out_dir, rows, complete)


def write_matrix_tables(out_dir, rows):
    rows = sorted(rows, key=lambda r: (r["workload"], r["churn"], r["policy"], r["repeat"]))
    path = os.path.join(out_dir, "runs.csv")
    _write_csv(path, RUN_COLUMNS, rows)
    # summarize what was written so that report() reproduces the same numbers
    summary = summarize(_read_csv(path), window_loader(out_dir))
    _write_csv(os.path.join(out_dir, "summary.csv"), SUMMARY_COLUMNS, summary)
    _write_csv(os.path.join(out_dir, "winners.csv"), WINNER_COLUMNS, winners(summary))


def window_loader(out_dir):
    def load(workload, churn, policy, repeat):
        path = os.path.join(run_dir(out_dir, workload, churn, policy, repeat), "windows.csv")
        rows = _read_csv(path)
        return [_parse(r["elt"]) for r in rows], [_parse(r["nu"]) for r in rows]
    return load


def _group(rows):
    cells = {}
    for r in rows:
        cells.setdefault((r["workload"], r["churn"], r["policy"]), {})[int(r["repeat"])] = r
    return cells


def summarize(rows, load_windows, require_baseline=False):
    """One row per cell: means over repeats plus ratios to the baseline policy.

    Ratios pair each repeat with the baseline repeat of the same index (both
    share churn and workload seeds) and are averaged over repeats.
    """
    cells = _group(rows)
    out = []
    for (w, c, p), reps in sorted(cells.items()):
        row = {"workload": w, "churn": c, "policy": p, "repeats": len(reps)}
        for col in ("elt_window_mean", "elt_single", "nu_window_mean", "nu_single"):
            row[col] = mean_defined(_num(r[col]) for r in reps.values())
        base = cells.get((w, c, BASELINE))
        if base is None:
            if require_baseline:
                raise ReportError(f"missing baseline cell {cell_name(w, c, BASELINE)}")
            for col in ("elt_window_norm", "elt_single_norm", "nu_window_norm", "nu_single_norm"):
                row[col] = None
            out.append(row)
            continue
        ratios = {k: [] for k in ("elt_window_norm", "elt_single_norm", "nu_window_norm", "nu_single_norm")}
        for k, run in sorted(reps.items()):
            b = base.get(k)
            if b is None:
                if require_baseline:
                    raise ReportError(f"missing baseline run {cell_name(w, c, BASELINE)}/r{k}")
                continue
            me, mn = load_windows(w, c, p, k)
            be, bn = load_windows(w, c, BASELINE, k)
            ratios["elt_window_norm"].append(normalize_windows(me, be))
            ratios["nu_window_norm"].append(normalize_windows(mn, bn))
            ratios["elt_single_norm"].append(normalize(_num(run["elt_single"]), _num(b["elt_single"])))
            ratios["nu_single_norm"].append(normalize(_num(run["nu_single"]), _num(b["nu_single"])))
        for col, vals in ratios.items():
            row[col] = mean_defined(vals)
        out.append(row)
    return out


def _num(x):
    if x is None or isinstance(x, float | int):
        return x
    return _parse(x)


def winners(summary):
    """Count, per policy, the (workload, churn) pairs where it has the lowest ELT, NU, or both.

    Ties go to the policy listed first.
    """
    by_pair = {}
    policies = []
    for row in summary:
        by_pair.setdefault((row["workload"], row["churn"]), []).append(row)
        if row["policy"] not in policies:
            policies.append(row["policy"])
    counts = {p: dict.fromkeys(WINNER_COLUMNS[1:], 0) for p in policies}
    for rows in by_pair.values():
        for suffix, elt_col, nu_col in (("", "elt_window_mean", "nu_window_mean"),
                                        ("_single", "elt_single", "nu_single")):
            best_elt = _argmin(rows, elt_col)
            best_nu = _argmin(rows, nu_col)
            if best_elt:
                counts[best_elt]["elt" + suffix] += 1
            if best_nu:
                counts[best_nu]["nu" + suffix] += 1
            if best_elt and best_elt == best_nu:
                counts[best_elt]["both" + suffix] += 1
    return [{"policy": p, **counts[p]} for p in policies]


def _argmin(rows, col):
    best = None
    for r in rows:
        v = _num(r[col])
        if v is None:
            continue
        if best is None or v < best[0]:
            best = (v, r["policy"])
    return best[1] if best else None


# -- report --------------------------------------------------------------

@dataclass
class ReportOutcome:
    table: list
    nsd_values: list
    median_nsd: float | None


def nsd_values(rows, load_windows):
    """NSD of the three repeats' window ELT values, for every cell and window.

    Windows where any repeat lacks an ELT value are skipped.
    """
    out = []
    for (w, c, p), reps in sorted(_group(rows).items()):
        if len(reps) != 3:
            continue
        series = [load_windows(w, c, p, k)[0] for k in sorted(reps)]
        for i in range(min(len(s) for s in series)):
            vals = [s[i] for s in series]
            if any(v is None or math.isinf(v) for v in vals):
                continue
            v = nsd(vals)
            if v is not None:
                out.append({"workload": w, "churn": c, "policy": p, "window": i, "nsd": v})
    return out


def nsd_cdf(values):
    xs = sorted(values)
    n = len(xs)
    return [{"nsd": x, "cumulative_fraction": (i + 1) / n} for i, x in enumerate(xs)]


def report(in_dir, fmt="csv"):
    """Build normalized tables and repeatability data from a results directory."""
    if fmt != "csv":
        raise ReportError(f"unsupported format {fmt!r}")
    path = os.path.join(in_dir, "runs.csv")
    if not os.path.exists(path):
        raise ReportError(f"no runs.csv in {in_dir}")
    rows = _read_csv(path)
    if not rows:
        raise ReportError(f"{path} has no runs")
    load = window_loader(in_dir)
    summary = summarize(rows, load, require_baseline=True)
    table = [{k: r[k] for k in NORMALIZED_COLUMNS} for r in summary if r["policy"] != BASELINE]
    extra = []
    for label, agg in (("mean", statistics.fmean), ("median", statistics.median)):
        for policy in sorted({r["policy"] for r in table}):
            agg_row = {"workload": label, "churn": "", "policy": policy}
            for col in NORMALIZED_COLUMNS[3:]:
                vals = [r[col] for r in table
                        if r["policy"] == policy and r[col] is not None and math.isfinite(r[col])]
                agg_row[col] = agg(vals) if vals else None
            extra.append(agg_row)
    _write_csv(os.path.join(in_dir, "normalized.csv"), NORMALIZED_COLUMNS, table + extra)
    _write_csv(os.path.join(in_dir, "winners.csv"), WINNER_COLUMNS, winners(summary))

    values = nsd_values(rows, load)
    _write_csv(os.path.join(in_dir, "nsd.csv"), ("workload", "churn", "policy", "window", "nsd"), values)
    _write_csv(os.path.join(in_dir, "nsd_cdf.csv"), ("nsd", "cumulative_fraction"),
               nsd_cdf([v["nsd"] for v in values]))
    median = statistics.median(v["nsd"] for v in values) if values else None
    return ReportOutcome(table + extra, values, median)
