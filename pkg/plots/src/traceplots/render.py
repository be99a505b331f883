"""Figure builders for trace CSV and probe/summary JSON files.

Figure kinds follow the source data's layout conventions: one figure per
joint coordinate with one curve per robot, a separate figure for the
operator torque components, a log-log gain curve, and a consensus-error
decay curve. Rendering is read-only and deterministic for fixed inputs.

Trace CSV columns: ``t`` then per robot i (1-based) ``q{i}_1 q{i}_2 qd{i}_1
qd{i}_2 z{i}_1 z{i}_2 s{i}_1 s{i}_2 th{i}_1..3 tau{i}_1 tau{i}_2 tauh{i}_1
tauh{i}_2``. Point-mass benchmark traces carry ``t,x_1,xd_1,f_1`` and are
rendered by the position kinds with their single coordinate.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

FIGURE_KINDS = (
    "positions_coord1",
    "positions_coord2",
    "operator_torque",
    "gain_curve",
    "consensus_error",
)

FIGSIZE = (6.4, 4.0)
DPI = 100


class PlotError(ValueError):
    """Input file unusable for the requested figure."""


@dataclass
class PlotSpec:
    """What to draw: input path(s), figure kind, labels, output image path."""

    traces: list
    kind: str
    out: str
    labels: list = field(default_factory=list)
    target: tuple | None = None  # reference position drawn as horizontal lines

    def __post_init__(self):
        if self.kind not in FIGURE_KINDS:
            raise PlotError(f"unknown figure kind {self.kind!r}; choose from {FIGURE_KINDS}")
        if isinstance(self.traces, (str, Path)):
            self.traces = [self.traces]
        if not self.traces:
            raise PlotError("at least one input file required")


def read_trace(path) -> dict:
    """Read a trace CSV into named column arrays (robot or point-mass layout)."""
    path = Path(path)
    with path.open("r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise PlotError(f"{path} is empty") from None
        rows = [[float(v) for v in row] for row in reader if row]
    if not rows:
        raise PlotError(f"{path} has a header but no data rows")
    data = np.asarray(rows)
    if data.shape[1] != len(header):
        raise PlotError(f"{path}: row width does not match header")
    return {name: data[:, k] for k, name in enumerate(header)}


def robot_count(cols: dict) -> int:
    n = 0
    while f"q{n + 1}_1" in cols:
        n += 1
    return n


def _require(cols: dict, names: list, path) -> None:
    missing = [n for n in names if n not in cols]
    if missing:
        raise PlotError(f"{path}: missing columns {missing}")


def _positions_figure(cols, coord: int, labels, target, path):
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    n = robot_count(cols)
    if n == 0:
        # point-mass layout: single position column
        _require(cols, ["t", "x_1"], path)
        if coord == 2:
            raise PlotError(f"{path}: point-mass trace has a single coordinate")
        ax.plot(cols["t"], cols["x_1"], label=labels[0] if labels else "mass")
    else:
        _require(cols, ["t"] + [f"q{i + 1}_{coord}" for i in range(n)], path)
        for i in range(n):
            name = labels[i] if i < len(labels) else f"robot {i + 1}"
            ax.plot(cols["t"], cols[f"q{i + 1}_{coord}"], label=name)
    if target is not None and coord <= len(target):
        ax.axhline(float(target[coord - 1]), color="k", linestyle="--", linewidth=0.8)
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"joint {coord} position (rad)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _operator_torque_figure(cols, labels, path):
    n = robot_count(cols)
    if n == 0:
        raise PlotError(f"{path}: operator torque needs a robot trace")
    _require(cols, [f"tauh{i + 1}_1" for i in range(n)], path)
    # draw the robot that actually feels an external torque
    mags = [np.abs(np.c_[cols[f"tauh{i + 1}_1"], cols[f"tauh{i + 1}_2"]]).max() for i in range(n)]
    i = int(np.argmax(mags))
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    for c in (1, 2):
        ax.plot(cols["t"], cols[f"tauh{i + 1}_{c}"], label=f"component {c}")
    ax.set_xlabel("time (s)")
    ax.set_ylabel(f"external torque on robot {i + 1} (N·m)")
    ax.legend(loc="best", fontsize=8)
    ax.grid(True, alpha=0.3)
    return fig, ax


def _consensus_error_figure(cols, path):
    n = robot_count(cols)
    if n < 2:
        raise PlotError(f"{path}: consensus error needs at least two robots")
    t = cols["t"]
    err = np.zeros_like(t)
    for i in range(n):
        for j in range(i + 1, n):
            for c in (1, 2):
                err = np.maximum(err, np.abs(cols[f"q{i + 1}_{c}"] - cols[f"q{j + 1}_{c}"]))
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.semilogy(t, np.maximum(err, 1e-16))
    ax.set_xlabel("time (s)")
    ax.set_ylabel("max pairwise position gap (rad)")
    ax.grid(True, alpha=0.3)
    return fig, ax


def _gain_curve_figure(path):
    with open(path, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    gc = doc.get("gain_curve", doc if "R" in doc else None)
    if not gc or "horizons" not in gc or "R" not in gc:
        raise PlotError(f"{path}: no gain_curve section found")
    fig, ax = plt.subplots(figsize=FIGSIZE, dpi=DPI)
    ax.loglog(gc["horizons"], gc["R"], marker="o")
    ax.set_xlabel("horizon T (s)")
    ax.set_ylabel("empirical gain R(T)")
    ax.set_title(f"classification: {gc.get('classification', '?')}", fontsize=9)
    ax.grid(True, which="both", alpha=0.3)
    return fig, ax


def build_figure(spec: PlotSpec):
    """Build the matplotlib figure for a spec without writing it."""
    path = spec.traces[0]
    if spec.kind == "gain_curve":
        return _gain_curve_figure(path)
    cols = read_trace(path)
    if spec.kind == "positions_coord1":
        return _positions_figure(cols, 1, spec.labels, spec.target, path)
    if spec.kind == "positions_coord2":
        return _positions_figure(cols, 2, spec.labels, spec.target, path)
    if spec.kind == "operator_torque":
        return _operator_torque_figure(cols, spec.labels, path)
    if spec.kind == "consensus_error":
        return _consensus_error_figure(cols, path)
    raise AssertionError(spec.kind)


def render(spec: PlotSpec) -> Path:
    """Render the figure to spec.out; no file is written on failure."""
    fig, _ = build_figure(spec)
    out = Path(spec.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    try:
        fig.savefig(out, dpi=DPI)
    finally:
        plt.close(fig)
    return out


def image_fingerprint(path, cells: int = 48, levels: int = 8) -> str:
    """Quantized-thumbnail hash for golden-image comparison.

    The image is downsampled to cells x cells grayscale and quantized to the
    given number of levels before hashing, so the comparison tolerates
    antialiasing and sub-pixel drift but not layout or data changes.
    """
    import hashlib

    img = plt.imread(path)
    gray = img[..., :3].mean(axis=2)
    h, w = gray.shape
    ys = (np.arange(cells) * h // cells).clip(0, h - 1)
    xs = (np.arange(cells) * w // cells).clip(0, w - 1)
    block = gray[np.ix_(ys, xs)]
    quant = np.floor(block * (levels - 1) + 0.5).astype(np.uint8)
    return hashlib.sha256(quant.tobytes()).hexdigest()
