"""Text summaries of benchmark CSV files.

Per observable: geometric means and percentiles of the error columns. Across
a sweep: log-log slope fits with t-based confidence intervals.
"""

from __future__ import annotations

import csv
import io
import math
from collections import defaultdict
from dataclasses import dataclass

import numpy as np
from scipy import stats as sps

from .errors import ConfigError

PERCENTILES = (10, 50, 90)
_TEXT_COLUMNS = {"scenario", "method", "observable"}


@dataclass(frozen=True)
class SlopeFit:
    """Least-squares fit of ``log y = intercept + slope * log x``."""

    slope: float
    intercept: float
    ci_low: float
    ci_high: float
    n_points: int


def slope_fit(x, y, confidence: float = 0.95) -> SlopeFit:
    """Log-log regression slope with a two-sided confidence interval.

    The interval is NaN with fewer than three points.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise ConfigError("x and y must be 1-D arrays of equal length")
    if x.size < 2 or np.unique(x).size < 2:
        raise ConfigError("a slope fit needs at least two distinct x values")
    if np.any(x <= 0) or np.any(y <= 0):
        raise ConfigError("log-log fit needs positive data")
    res = sps.linregress(np.log(x), np.log(y))
    if x.size > 2:
        half = sps.t.ppf(0.5 + confidence / 2, x.size - 2) * res.stderr
    else:
        half = math.nan
    return SlopeFit(float(res.slope), float(res.intercept), res.slope - half, res.slope + half, int(x.size))


def geometric_mean(values) -> tuple[float, int]:
    """Geometric mean over the positive entries and the number of zeros skipped."""
    v = np.asarray(values, dtype=np.float64)
    pos = v[v > 0]
    zeros = int(np.count_nonzero(v == 0))
    if pos.size == 0:
        return 0.0, zeros
    return float(np.exp(np.mean(np.log(pos)))), zeros


def log_histogram(values, bins_per_decade: int = 4):
    """Counts in logarithmic bins aligned to powers of ten.

    Zeros are left out of the bins and returned as a separate count.

    Returns
    -------
    edges : ndarray
        Bin edges, ``len(counts) + 1`` of them.
    counts : ndarray
    zeros : int
    """
    if bins_per_decade < 1:
        raise ConfigError("bins_per_decade must be >= 1")
    v = np.asarray(values, dtype=np.float64).ravel()
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ConfigError("log histogram needs finite non-negative values")
    pos = v[v > 0]
    zeros = int(v.size - pos.size)
    if pos.size == 0:
        return np.array([]), np.array([], dtype=int), zeros
    lo = math.floor(np.log10(pos.min()) * bins_per_decade)
    hi = math.floor(np.log10(pos.max()) * bins_per_decade) + 1
    edges = 10.0 ** (np.arange(lo, hi + 1) / bins_per_decade)
    idx = np.clip(np.floor(np.log10(pos) * bins_per_decade).astype(int) - lo, 0, hi - lo - 1)
    counts = np.bincount(idx, minlength=hi - lo)
    return edges, counts, zeros


def parse_csv(text: str) -> list[dict]:
    """Parse benchmark CSV text into typed row dicts.

    Raises :class:`ConfigError` naming the offending line.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ConfigError("line 1: empty file, no header") from None
    if "schema_version" not in header or "scenario" not in header:
        raise ConfigError("line 1: header lacks schema_version/scenario columns")
    rows = []
    for row in reader:
        line = reader.line_num
        if not row:
            continue
        if len(row) != len(header):
            raise ConfigError(f"line {line}: expected {len(header)} fields, got {len(row)}")
        rec = {}
        for name, raw in zip(header, row):
            if name in _TEXT_COLUMNS or raw == "":
                rec[name] = raw
                continue
            try:
                rec[name] = float(raw)
            except ValueError:
                raise ConfigError(f"line {line}: column {name!r} is not a number: {raw!r}") from None
        rows.append(rec)
    if not rows:
        raise ConfigError("no records: the CSV has a header but no attempts")
    return rows


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, float) and math.isnan(v):
        return "nan"
    if isinstance(v, float) and v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return f"{v:.4g}"


def _render(title: str, columns: list[str], rows: list[list]) -> str:
    cells = [columns] + [[_fmt(v) for v in r] for r in rows]
    widths = [max(len(c[i]) for c in cells) for i in range(len(columns))]
    lines = [title, "  ".join(c.rjust(w) for c, w in zip(columns, widths))]
    lines += ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells[1:]]
    return "\n".join(lines)


def _error_block(title, groups, key_names, error_cols):
    pct = [f"p{p}" for p in PERCENTILES]
    cols = key_names + ["observable", "count", "column", "geomean", "zeros"] + pct
    out = []
    for key, recs in sorted(groups.items(), key=lambda kv: kv[0]):
        for col in error_cols:
            vals = np.array([r[col] for r in recs], dtype=float)
            gm, zeros = geometric_mean(vals)
            out.append(list(key) + [len(vals), col, gm, zeros] + list(np.percentile(vals, PERCENTILES)))
    return _render(title, cols, out)


def _fit_rows(series: dict, xname: str) -> list[list]:
    out = []
    for label, pts in sorted(series.items()):
        xs = sorted(pts)
        if len(xs) < 2:
            continue
        ys = [float(np.mean(pts[x])) for x in xs]
        if min(ys) <= 0:
            continue
        fit = slope_fit(xs, ys)
        out.append(list(label) + [xname, fit.n_points, fit.slope, fit.ci_low, fit.ci_high])
    return out


def emit_summary(text: str) -> str:
    """Summary table for the CSV text of one benchmark run."""
    rows = parse_csv(text)
    scenario = rows[0]["scenario"]
    if any(r["scenario"] != scenario for r in rows):
        raise ConfigError("mixed scenarios in one CSV")
    if scenario == "plan":
        cols = ["budget", "n_samples", "n_steps", "error_ratio", "predicted_error", "rounded_error", "effective_order"]
        return _render("plan", cols, [[r[c] for c in cols] for r in rows])

    blocks = []
    fit_cols = ["series", "observable", "vs", "points", "slope", "ci_low", "ci_high"]
    if scenario.startswith("sde"):
        groups = defaultdict(list)
        for r in rows:
            groups[(r["n_samples"], r["noise"], r["observable"])].append(r)
        blocks.append(_error_block(scenario, groups, ["n_samples", "noise"], ["reference_error", "pos_error"]))
        ratio_rows = []
        for (n, b, obs), recs in sorted(groups.items()):
            ref = float(np.mean([r["reference_error"] for r in recs]))
            pos = float(np.mean([r["pos_error"] for r in recs]))
            ratio_rows.append([n, b, obs, len(recs), ref, pos, ref / pos if pos > 0 else math.inf])
        blocks.append(_render("mean errors", ["n_samples", "noise", "observable", "runs", "reference", "pos", "reduction"], ratio_rows))
        series = defaultdict(lambda: defaultdict(list))
        for r in rows:
            for col in ("reference_error", "pos_error"):
                series[(col, r["observable"], r["noise"])][r["n_samples"]].append(r[col])
        fits = [[c, f"{o}{'' if b == '' else f'@b={_fmt(b)}'}", *rest] for (c, o, b, *rest) in _fit_rows(series, "n_samples")]
        if fits:
            blocks.append(_render("slope of mean error", fit_cols, fits))
        return "\n\n".join(blocks)

    groups = defaultdict(list)
    for r in rows:
        groups[(r["n_samples"], r.get("dt", ""), r["observable"])].append(r)
    blocks.append(_error_block(scenario, groups, ["n_samples", "dt"], ["r_unoptimized", "r_optimized"]))
    per_attempt = {}
    for r in rows:
        per_attempt[(r["n_samples"], r.get("dt", ""), r["attempt"])] = r
    conv = defaultdict(list)
    for (n, dt, _), r in per_attempt.items():
        conv[(n, dt)].append(r)
    conv_rows = [
        [n, dt, len(recs), float(np.median([r["iterations"] for r in recs])),
         float(np.max([r["iterations"] for r in recs])), float(np.mean([r["distance"] for r in recs]))]
        for (n, dt), recs in sorted(conv.items())
    ]
    blocks.append(_render("convergence", ["n_samples", "dt", "attempts", "median_iter", "max_iter", "mean_D"], conv_rows))
    by_n = defaultdict(lambda: defaultdict(list))
    by_dt = defaultdict(lambda: defaultdict(list))
    for (n, dt, _), r in per_attempt.items():
        by_n[("distance", f"dt={_fmt(dt)}" if dt != "" else "-")][n].append(r["distance"])
        if dt != "":
            by_dt[("distance", f"n={_fmt(n)}")][dt].append(r["distance"])
    fits = _fit_rows(by_n, "n_samples") + _fit_rows(by_dt, "dt")
    if fits:
        blocks.append(_render("slope of mean D", fit_cols, fits))
    return "\n\n".join(blocks)
