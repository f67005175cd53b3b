"""Ledger/summary CSV files and SVG learning-curve plots."""

import csv
import math
import re
import xml.etree.ElementTree as ET
from collections import defaultdict
from pathlib import Path

import numpy as np

from .alloop import LEDGER_COLUMNS
from .exceptions import DataError

SUMMARY_COLUMNS = ("mode", "seed", "max_test_acc", "pct_labeled_at_baseline", "examples_processed",
                   "n_weight_updates", "baseline_acc")
_LEDGER_NAME = re.compile(r"ledger_(?P<mode>.+)_seed(?P<seed>-?\d+)$")

_W, _H = 640, 420
_MARGIN = dict(left=60, right=130, top=30, bottom=50)
_COLORS = ("#d62728", "#2ca02c", "#1f77b4", "#ff7f0e", "#9467bd", "#8c564b")


def ledger_filename(mode, seed):
    return f"ledger_{mode}_seed{seed}.csv"


def write_ledger(path, ledger, wall_time=False):
    Path(path).write_text(ledger.to_csv(wall_time=wall_time), encoding="utf-8")


def read_ledger(path):
    """Rows of a ledger CSV as dicts; blank cells become None."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != LEDGER_COLUMNS:
            raise DataError(f"{path}: not a ledger file (columns {reader.fieldnames})")
        rows = []
        for r in reader:
            rows.append({k: (None if v == "" else float(v)) for k, v in r.items()})
    return rows


def _fmt(v):
    if v is None or (isinstance(v, float) and math.isnan(v)):
        return ""
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def summary_rows(results):
    """``results`` is a list of ``(mode, seed, ledger, baseline_acc)``.

    Gives one row per run followed by ``mean`` and ``std`` rows per mode.
    """
    per_mode = defaultdict(list)
    rows = []
    for mode, seed, ledger, baseline in results:
        row = dict(mode=mode, seed=seed, max_test_acc=ledger.max_test_acc,
                   pct_labeled_at_baseline=ledger.pct_labeled_to_reach(baseline),
                   examples_processed=ledger.examples_processed,
                   n_weight_updates=ledger.n_updates, baseline_acc=baseline)
        rows.append(row)
        per_mode[mode].append(row)
    for mode, group in per_mode.items():
        for stat in ("mean", "std"):
            agg = dict(mode=mode, seed=stat)
            for col in SUMMARY_COLUMNS[2:]:
                vals = [r[col] for r in group if r[col] is not None]
                if not vals:
                    agg[col] = None
                elif stat == "mean":
                    agg[col] = float(np.mean(vals))
                else:
                    agg[col] = float(np.std(vals, ddof=1)) if len(vals) > 1 else 0.0
            rows.append(agg)
    return rows


def write_summary(path, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SUMMARY_COLUMNS)
        for r in rows:
            writer.writerow([_fmt(r[c]) for c in SUMMARY_COLUMNS])


def _mode_of(path):
    m = _LEDGER_NAME.match(Path(path).stem)
    return m.group("mode") if m else Path(path).stem


def mean_curves(ledger_paths):
    """Per-mode accuracy curve averaged over seeds, keyed by AL iteration."""
    by_mode = defaultdict(lambda: defaultdict(list))
    for path in ledger_paths:
        rows = [r for r in read_ledger(path) if r["test_acc"] is not None]
        if not rows:
            raise DataError(f"{path}: ledger has no evaluated rows")
        last = {}
        for r in rows:
            last[int(r["al_iter"])] = r
        for it, r in last.items():
            by_mode[_mode_of(path)][it].append((r["pct_labeled"], r["test_acc"]))
    curves = {}
    for mode, iters in by_mode.items():
        pts = [(float(np.mean([p for p, _ in v])), float(np.mean([a for _, a in v])))
               for _, v in sorted(iters.items())]
        curves[mode] = sorted(pts)
    return curves


def emit_plot(ledger_paths, out_path, baseline_acc=None):
    """Write an SVG of test accuracy against fraction labeled, one polyline per
    mode, with a dashed horizontal line at ``baseline_acc`` when given."""
    ledger_paths = list(ledger_paths)
    if not ledger_paths:
        raise DataError("emit_plot needs at least one ledger")
    curves = mean_curves(ledger_paths)

    accs = [a for pts in curves.values() for _, a in pts]
    if baseline_acc is not None:
        accs.append(baseline_acc)
    y_lo = max(0.0, math.floor(min(accs) * 10) / 10)
    y_hi = min(1.0, math.ceil(max(accs) * 10) / 10)
    if y_hi - y_lo < 0.1:
        y_lo = max(0.0, y_hi - 0.1)
        y_hi = y_lo + 0.1
    x0, x1 = _MARGIN["left"], _W - _MARGIN["right"]
    y0, y1 = _H - _MARGIN["bottom"], _MARGIN["top"]

    def sx(v):
        return x0 + v * (x1 - x0)

    def sy(v):
        return y0 - (v - y_lo) / (y_hi - y_lo) * (y0 - y1)

    svg = ET.Element("svg", xmlns="http://www.w3.org/2000/svg", width=str(_W), height=str(_H),
                     viewBox=f"0 0 {_W} {_H}")
    ET.SubElement(svg, "rect", width=str(_W), height=str(_H), fill="white")
    axes = ET.SubElement(svg, "g", {"class": "axes", "stroke": "black"})
    ET.SubElement(axes, "line", x1=f"{x0}", y1=f"{y0}", x2=f"{x1}", y2=f"{y0}")
    ET.SubElement(axes, "line", x1=f"{x0}", y1=f"{y0}", x2=f"{x0}", y2=f"{y1}")
    labels = ET.SubElement(svg, "g", {"font-family": "sans-serif", "font-size": "11"})
    for i in range(6):
        v = i / 5
        ET.SubElement(labels, "text", {"text-anchor": "middle"}, x=f"{sx(v):.2f}", y=f"{y0 + 15}").text = f"{v:.0%}"
        a = y_lo + (y_hi - y_lo) * i / 5
        ET.SubElement(labels, "text", {"text-anchor": "end"}, x=f"{x0 - 6}", y=f"{sy(a) + 4:.2f}").text = f"{a:.2f}"
    ET.SubElement(labels, "text", {"text-anchor": "middle"}, x=f"{(x0 + x1) / 2:.1f}",
                  y=f"{_H - 12}").text = "Percent of pool labeled"
    ET.SubElement(labels, "text", {"text-anchor": "middle", "transform": f"rotate(-90 14 {(y0 + y1) / 2:.1f})"},
                  x="14", y=f"{(y0 + y1) / 2:.1f}").text = "Test accuracy"

    if baseline_acc is not None:
        ET.SubElement(svg, "line", {"class": "baseline", "x1": f"{x0}", "x2": f"{x1}",
                                    "y1": f"{sy(baseline_acc):.2f}", "y2": f"{sy(baseline_acc):.2f}",
                                    "stroke": "gray", "stroke-dasharray": "6 4"})
    for k, (mode, pts) in enumerate(sorted(curves.items())):
        color = _COLORS[k % len(_COLORS)]
        ET.SubElement(svg, "polyline", {"class": "curve", "data-mode": mode, "fill": "none",
                                        "stroke": color, "stroke-width": "2",
                                        "points": " ".join(f"{sx(p):.2f},{sy(a):.2f}" for p, a in pts)})
        ly = y1 + 16 * k + 8
        ET.SubElement(svg, "rect", x=f"{x1 + 12}", y=f"{ly - 8}", width="12", height="3", fill=color)
        ET.SubElement(labels, "text", x=f"{x1 + 30}", y=f"{ly}").text = mode
    ET.ElementTree(svg).write(out_path, encoding="utf-8", xml_declaration=True)
    return Path(out_path)
