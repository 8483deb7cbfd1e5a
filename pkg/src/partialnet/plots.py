"""SVG figures for averaged ROC curves and cap sweeps.

Output is byte-stable across runs: fixed SVG hash salt and no date metadata.
"""

from __future__ import annotations

import csv
import io
from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .config import ExperimentConfig  # noqa: E402
from .evaluation import AveragedRoc  # noqa: E402

_RC = {"svg.hashsalt": "partialnet", "svg.fonttype": "none"}


def _save(fig, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _roc_axes(ax, title: str) -> None:
    ax.plot([0, 1], [0, 1], color="0.7", lw=0.8, ls="--")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.01)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="lower right", fontsize="small")


def plot_by_n(averaged: Mapping[tuple[str, int], AveragedRoc], engine: str, n_list: Sequence[int], path: Path) -> Path:
    """Mean ROC curves for one engine, one line per sample size."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for n in n_list:
            avg = averaged.get((engine, n))
            if avg is not None:
                ax.plot(avg.fpr_grid, avg.mean_tpr, label=f"n={n} (AUC {avg.mean_auc:.3f})")
        _roc_axes(ax, f"{engine}: mean ROC by sample size")
        return _save(fig, path)


def plot_by_engine(averaged: Mapping[tuple[str, int], AveragedRoc], n: int, engines: Sequence[str], path: Path) -> Path:
    """Mean ROC curves at one sample size, one line per engine."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(5, 5))
        for engine in engines:
            avg = averaged.get((engine, n))
            if avg is not None:
                ax.plot(avg.fpr_grid, avg.mean_tpr, label=f"{engine} (AUC {avg.mean_auc:.3f})")
        _roc_axes(ax, f"n={n}: classical vs Bayesian")
        return _save(fig, path)


def plot_cap_sweep(rows: Sequence[Mapping], path: Path) -> Path:
    """Mean AUC against the neighborhood cap, one series per (engine, n)."""
    with plt.rc_context(_RC):
        fig, ax = plt.subplots(figsize=(6, 4))
        keys = sorted({(r["engine"], r["n"]) for r in rows})
        for engine, n in keys:
            pts = sorted((r["cap"], r["mean_auc"]) for r in rows if r["engine"] == engine and r["n"] == n)
            ax.plot([c for c, _ in pts], [a for _, a in pts], marker="o", label=f"{engine}, n={n}")
        ax.set_xlabel("maximum conditioning set size")
        ax.set_ylabel("mean AUC")
        if keys:
            ax.legend(fontsize="small")
        return _save(fig, path)


def cap_sweep_csv(rows: Sequence[Mapping]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["engine", "n", "cap", "mean_auc", "count"])
    for r in sorted(rows, key=lambda r: (r["engine"], r["n"], r["cap"])):
        writer.writerow([r["engine"], r["n"], r["cap"], repr(r["mean_auc"]), r["count"]])
    return buf.getvalue()


def write_all(
    directory: Path,
    config: ExperimentConfig,
    averaged: Mapping[tuple[str, int], AveragedRoc],
    sweep_rows: Sequence[Mapping],
) -> list[Path]:
    files = []
    for engine in config.engines:
        files.append(plot_by_n(averaged, engine, config.n_list, directory / f"roc_by_n_{engine}.svg"))
    for n in config.n_list:
        files.append(plot_by_engine(averaged, n, config.engines, directory / f"roc_engines_n{n:04d}.svg"))
    if sweep_rows:
        files.append(plot_cap_sweep(sweep_rows, directory / "cap_sweep.svg"))
        path = directory / "cap_sweep.csv"
        path.write_text(cap_sweep_csv(sweep_rows))
        files.append(path)
    return files
