"""Simulate -> infer -> evaluate orchestration with replicate-level parallelism.

Every random stream is a pure function of ``(master_seed, replicate, ...)``,
so outputs do not depend on the number of workers or the completion order.
Each replicate task writes only its own files; the manifest is assembled by
the calling process once all tasks are done.

Output layout under ``output_dir``::

    trees/rep0000.json
    data/n0050/rep0000_pilot.csv, rep0000_study.csv
    scores/n0050/<engine>/rep0000.csv          (cap sweeps: scores/cap005/...)
    roc/n0050/<engine>/rep0000.csv, average.csv
    plots/*.svg, cap_sweep.csv
    summary.json, manifest.json
"""

from __future__ import annotations

import json
import logging
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .bayes import bayesian_network
from .classical import EdgeScores, classical_network
from .config import ExperimentConfig
from .evaluation import RocCurve, average_roc, compare_engines, roc_from_scores
from .exceptions import PartialNetError, ReconciliationError
from .simulate import SimConfig, generate_data, generate_topology, read_tree_json, write_tree_json
from .stats import read_dataset_csv, write_dataset_csv

LOGGER = logging.getLogger(__name__)

ENGINE_IDS = {"classical": 1, "bayesian": 2}
_SCORE_KIND = {"classical": "classical-p", "bayesian": "bayesian-e"}


def replicate_seed(master_seed: int, replicate: int) -> int:
    """Integer seed of a replicate, recorded in the manifest and the ROC metadata."""
    return int(np.random.SeedSequence([master_seed, replicate]).generate_state(1, np.uint64)[0])


def _stream(*keys: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(k) for k in keys]))


def tree_rng(config: ExperimentConfig, rep: int) -> np.random.Generator:
    return _stream(config.master_seed, rep, 0)


def data_rng(config: ExperimentConfig, rep: int, n: int) -> np.random.Generator:
    return _stream(config.master_seed, rep, 1, n)


def engine_rng(config: ExperimentConfig, rep: int, n: int, engine: str, cap: int | None) -> np.random.Generator:
    return _stream(config.master_seed, rep, 2, n, ENGINE_IDS[engine], 0 if cap is None else cap + 1)


# -- paths ---------------------------------------------------------------------


@dataclass(frozen=True)
class Layout:
    root: Path

    def tree(self, rep: int) -> Path:
        return self.root / "trees" / f"rep{rep:04d}.json"

    def dataset(self, n: int, rep: int, role: str) -> Path:
        return self.root / "data" / f"n{n:04d}" / f"rep{rep:04d}_{role}.csv"

    def _group(self, n: int, cap: int | None) -> str:
        return f"n{n:04d}" if cap is None else f"cap{cap:03d}/n{n:04d}"

    def scores(self, n: int, engine: str, rep: int, cap: int | None = None) -> Path:
        return self.root / "scores" / self._group(n, cap) / engine / f"rep{rep:04d}.csv"

    def roc(self, n: int, engine: str, rep: int) -> Path:
        return self.root / "roc" / f"n{n:04d}" / engine / f"rep{rep:04d}.csv"

    def average_roc(self, n: int, engine: str) -> Path:
        return self.root / "roc" / f"n{n:04d}" / engine / "average.csv"

    @property
    def plots(self) -> Path:
        return self.root / "plots"

    @property
    def summary(self) -> Path:
        return self.root / "summary.json"

    @property
    def manifest(self) -> Path:
        return self.root / "manifest.json"


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    return path


def _rel(layout: Layout, path: Path) -> str:
    return str(path.relative_to(layout.root))


def _run_tasks(fn: Callable, args: Sequence[tuple], workers: int) -> list:
    if workers <= 1 or len(args) <= 1:
        return [fn(*a) for a in args]
    with ProcessPoolExecutor(max_workers=min(workers, len(args))) as pool:
        return list(pool.map(fn, *zip(*args)))


# -- manifest ------------------------------------------------------------------


def read_manifest(layout: Layout) -> dict[str, Any]:
    if layout.manifest.exists():
        return json.loads(layout.manifest.read_text())
    return {}


def _update_manifest(layout: Layout, config: ExperimentConfig, section: str, payload: dict) -> None:
    manifest = read_manifest(layout)
    manifest["software_version"] = __version__
    manifest["python"] = platform.python_version()
    manifest["numpy"] = np.__version__
    manifest["config"] = config.snapshot()
    manifest[section] = payload
    layout.root.mkdir(parents=True, exist_ok=True)
    layout.manifest.write_text(json.dumps(manifest, indent=1, sort_keys=True) + "\n")


# -- simulate ------------------------------------------------------------------


def _simulate_replicate(config: ExperimentConfig, rep: int) -> dict[str, Any]:
    layout = Layout(Path(config.output_dir))
    base = SimConfig(p=config.p, n=max(config.n_list))
    tree = generate_topology(base, tree_rng(config, rep))
    files = [_rel(layout, _write(layout.tree(rep), tree.to_json()))]
    for n in config.n_list:
        pilot_rng, study_rng = data_rng(config, rep, n).spawn(2)
        sim = SimConfig(p=config.p, n=n)
        for role, rng in (("pilot", pilot_rng), ("study", study_rng)):
            path = layout.dataset(n, rep, role)
            path.parent.mkdir(parents=True, exist_ok=True)
            write_dataset_csv(generate_data(tree, sim, rng), path)
            files.append(_rel(layout, path))
    return {"replicate": rep, "seed": replicate_seed(config.master_seed, rep), "files": files}


def cmd_simulate(config: ExperimentConfig) -> dict[str, Any]:
    """Write one topology per replicate and a pilot/study pair for every n."""
    layout = Layout(Path(config.output_dir))
    start = time.perf_counter()
    entries = _run_tasks(_simulate_replicate, [(config, r) for r in range(config.tree_count)], config.workers())
    payload = {"replicates": entries, "wall_time_s": time.perf_counter() - start}
    _update_manifest(layout, config, "simulate", payload)
    LOGGER.info("simulated %d replicates in %.1fs", config.tree_count, payload["wall_time_s"])
    return payload


# -- infer ---------------------------------------------------------------------


def _infer_one(config: ExperimentConfig, rep: int, n: int, engine: str, cap: int | None) -> dict[str, Any]:
    layout = Layout(Path(config.output_dir))
    mode = "local" if cap is not None else config.mode_for(n)
    eff_cap = cap if cap is not None else config.cap_override
    entry: dict[str, Any] = {"replicate": rep, "n": n, "engine": engine, "mode": mode, "cap": cap}
    start = time.perf_counter()
    try:
        study = read_dataset_csv(layout.dataset(n, rep, "study"))
        if engine == "classical":
            scores, _ = classical_network(
                study, config.alpha, mode, neighborhood_alpha=config.neighborhood_alpha, cap=eff_cap
            )
        else:
            pilot = read_dataset_csv(layout.dataset(n, rep, "pilot"))
            scores, _ = bayesian_network(
                pilot,
                study,
                config.e_threshold,
                mode,
                engine_rng(config, rep, n, engine, cap),
                draws=config.mc_draws,
                grid_size=config.grid_size,
                neighborhood_alpha=config.neighborhood_alpha,
                cap=eff_cap,
            )
        path = _write(layout.scores(n, engine, rep, cap), scores.to_csv())
        entry["file"] = _rel(layout, path)
        entry["max_conditioning_size"] = int(scores.conditioning_size.max())
    except (PartialNetError, OSError) as exc:
        entry["error"] = f"{type(exc).__name__}: {exc}"
    entry["wall_time_s"] = time.perf_counter() - start
    return entry


def _infer_tasks(config: ExperimentConfig) -> list[tuple]:
    tasks = []
    for n in config.n_list:
        for engine in config.engines:
            for rep in range(config.tree_count):
                tasks.append((config, rep, n, engine, None))
    for n in config.n_list:
        for cap in config.caps_for(n):
            for engine in config.engines:
                for rep in range(config.tree_count):
                    tasks.append((config, rep, n, engine, cap))
    return tasks


def cmd_infer(config: ExperimentConfig) -> dict[str, Any]:
    """Score every replicate dataset with every configured engine.

    Never touches the ground-truth files. Failures are recorded, not raised.
    """
    layout = Layout(Path(config.output_dir))
    start = time.perf_counter()
    entries = _run_tasks(_infer_one, _infer_tasks(config), config.workers())
    failures = [e for e in entries if "error" in e]
    for f in failures:
        LOGGER.warning("replicate %d n=%d %s failed: %s", f["replicate"], f["n"], f["engine"], f["error"])
    timing: dict[str, float] = {}
    for e in entries:
        key = f"{e['engine']}/n{e['n']}" + ("" if e["cap"] is None else f"/cap{e['cap']}")
        timing[key] = timing.get(key, 0.0) + e["wall_time_s"]
    payload = {
        "modes": {str(n): config.mode_for(n) for n in config.n_list},
        "runs": entries,
        "failures": failures,
        "timing_s": timing,
        "wall_time_s": time.perf_counter() - start,
    }
    _update_manifest(layout, config, "infer", payload)
    return payload


# -- evaluate ------------------------------------------------------------------


def _known_failures(layout: Layout) -> set[tuple]:
    infer = read_manifest(layout).get("infer", {})
    return {(f["replicate"], f["n"], f["engine"], f["cap"]) for f in infer.get("failures", [])}


def _load_curves(
    config: ExperimentConfig, layout: Layout, n: int, engine: str, cap: int | None, failures: set[tuple]
) -> tuple[list[RocCurve], list[str]]:
    curves, missing = [], []
    for rep in range(config.tree_count):
        if (rep, n, engine, cap) in failures:
            continue
        spath, tpath = layout.scores(n, engine, rep, cap), layout.tree(rep)
        if not spath.exists() or not tpath.exists():
            missing.append(
                f"rep{rep:04d} n={n} {engine}" + ("" if cap is None else f" cap={cap}")
                + (" (scores)" if not spath.exists() else "") + (" (truth)" if not tpath.exists() else "")
            )
            continue
        scores = EdgeScores.from_csv(spath.read_text(), _SCORE_KIND[engine])
        meta = {"engine": engine, "n": n, "p": config.p, "seed": replicate_seed(config.master_seed, rep)}
        curves.append(roc_from_scores(scores, read_tree_json(tpath), meta))
    return curves, missing


def cmd_evaluate(config: ExperimentConfig) -> dict[str, Any]:
    """ROC curves, averaged curves, summary JSON and SVG plots from scores and truths."""
    from . import plots

    layout = Layout(Path(config.output_dir))
    start = time.perf_counter()
    failures = _known_failures(layout)
    results: dict[int, dict[str, list[RocCurve]]] = {}
    missing: list[str] = []
    for n in config.n_list:
        results[n] = {}
        for engine in config.engines:
            curves, miss = _load_curves(config, layout, n, engine, None, failures)
            missing += miss
            results[n][engine] = curves
    sweep: dict[tuple[int, int], dict[str, list[RocCurve]]] = {}
    for n in config.n_list:
        for cap in config.caps_for(n):
            sweep[cap, n] = {}
            for engine in config.engines:
                curves, miss = _load_curves(config, layout, n, engine, cap, failures)
                missing += miss
                sweep[cap, n][engine] = curves
    if missing:
        raise ReconciliationError("missing scores or truth for: " + "; ".join(missing))

    rows, comparisons, averaged = [], {}, {}
    for n in config.n_list:
        for engine in config.engines:
            curves = results[n][engine]
            if not curves:
                continue
            for rep_curve, rep in zip(curves, _present_reps(config, n, engine, None, failures)):
                _write(layout.roc(n, engine, rep), rep_curve.to_csv())
            avg = average_roc(curves)
            averaged[(engine, n)] = avg
            _write(layout.average_roc(n, engine), avg.to_csv())
            stats = compare_engines({engine: curves})["engines"][engine]
            rows.append(
                {
                    "engine": engine,
                    "n": n,
                    "mode": config.mode_for(n),
                    "mean_auc": stats["mean_auc"],
                    "se": stats["se"],
                    "count": stats["count"],
                    "curve_auc": avg.curve_auc,
                }
            )
        present = {e: c for e, c in results[n].items() if c}
        if len(present) > 1:
            comparisons[str(n)] = compare_engines(present)

    sweep_rows = []
    for (cap, n), by_engine in sweep.items():
        for engine, curves in by_engine.items():
            if curves:
                mean = float(np.mean([c.auc for c in curves]))
                sweep_rows.append({"engine": engine, "n": n, "cap": cap, "mean_auc": mean, "count": len(curves)})

    summary = {"p": config.p, "tree_count": config.tree_count, "results": rows, "comparisons": comparisons}
    if sweep_rows:
        summary["cap_sweep"] = sweep_rows
    _write(layout.summary, json.dumps(summary, indent=1, sort_keys=True, allow_nan=False) + "\n")
    plot_files = plots.write_all(layout.plots, config, averaged, sweep_rows)
    payload = {
        "summary": _rel(layout, layout.summary),
        "plots": [_rel(layout, p) for p in plot_files],
        "wall_time_s": time.perf_counter() - start,
    }
    _update_manifest(layout, config, "evaluate", payload)
    return summary


def _present_reps(config, n, engine, cap, failures) -> Iterable[int]:
    return [r for r in range(config.tree_count) if (r, n, engine, cap) not in failures]


def cmd_experiment(config: ExperimentConfig) -> tuple[dict[str, Any], bool]:
    """Run the whole pipeline; returns ``(summary, ok)`` where ``ok`` is False if any replicate failed."""
    cmd_simulate(config)
    infer = cmd_infer(config)
    summary = cmd_evaluate(config)
    return summary, not infer["failures"]
