"""End-to-end acceptance checks, one test per criterion.

Each test prints a single PASS/FAIL line; the lines are repeated in the
"acceptance criteria" section of the pytest summary.
"""

import filecmp
import json
import math
import time
from pathlib import Path

import numpy as np
import pytest
from scipy import stats

from partialnet import pipeline
from partialnet.bayes import NiwParams, fbst_e_value, iw_moments, kde, sample_iw
from partialnet.classical import EdgeScores, classical_network
from partialnet.config import DESK_SCALE, ExperimentConfig
from partialnet.partial import all_pairs_regression, all_pairs_schur, partial_corr_inverse
from partialnet.simulate import SimConfig, simulate
from partialnet.stats import Dataset, sample_correlation, sample_covariance


# -- 1 -------------------------------------------------------------------------


def test_criterion_1_method_equivalence(acceptance):
    start = time.perf_counter()
    rng = np.random.default_rng(101)
    worst = 0.0
    for k in range(100):
        p = int(rng.integers(3, 11))
        n = int(rng.integers(5 * p, 20 * p + 1))
        _, _, study = simulate(SimConfig(p=p, n=n, seed=k))
        inverse = partial_corr_inverse(sample_correlation(study))
        schur = all_pairs_schur(sample_covariance(study))
        regression = all_pairs_regression(study)
        worst = max(worst, np.max(np.abs(inverse - schur)), np.max(np.abs(inverse - regression)))
    elapsed = time.perf_counter() - start
    acceptance(1, worst <= 1e-8 and elapsed < 10, f"max disagreement {worst:.2e} (<= 1e-8), {elapsed:.1f}s (< 10s)")


# -- 2 -------------------------------------------------------------------------


def test_criterion_2_classical_calibration(acceptance):
    rng = np.random.default_rng(202)
    tests = rejections = 0
    while tests < 10_000:
        _, adj = classical_network(Dataset(rng.standard_normal((200, 5))), alpha=0.05)
        rejections += int(np.triu(adj, 1).sum())
        tests += 10
    rate = rejections / tests
    se = math.sqrt(0.05 * 0.95 / tests)
    acceptance(2, abs(rate - 0.05) <= 3 * se, f"rejection rate {rate:.4f} over {tests} tests, 3 SE = {3 * se:.4f}")


# -- 3 -------------------------------------------------------------------------


def _moment_z(draws, mom):
    count = draws.shape[0]
    mean = draws.mean(0)
    mean_z = np.abs(mean - mom.mean) / np.sqrt(mom.var_offdiag / count)
    centered = draws - mean
    var = (centered**2).mean(0)
    var_se = np.sqrt(((centered**2 - var) ** 2).mean(0) / count)
    return mean_z.max(), (np.abs(var - mom.var_offdiag) / var_se).max()


def test_criterion_3_iw_sampler(acceptance):
    start = time.perf_counter()
    p = 3
    a = np.random.default_rng(303).standard_normal((p, p))
    params = NiwParams(p + 8.0, a @ a.T + np.eye(p), np.zeros(p), 1.0)
    mom = iw_moments(params)
    mean_z, var_z = _moment_z(sample_iw(params, 100_000, np.random.default_rng(304)), mom)
    elapsed = time.perf_counter() - start
    # context only: the same statistic on scipy's reference sampler
    ref = stats.invwishart(df=params.k, scale=params.psi).rvs(100_000, random_state=304)
    ref_mean_z, ref_var_z = _moment_z(ref, mom)
    ok = mean_z < 3 and var_z < 3 and elapsed < 60
    acceptance(
        3,
        ok,
        f"max |z| mean {mean_z:.2f}, variance {var_z:.2f} (< 3), {elapsed:.1f}s (< 60s); "
        f"scipy invwishart reference: mean {ref_mean_z:.2f}, variance {ref_var_z:.2f}",
    )


# -- 4 -------------------------------------------------------------------------


def test_criterion_4_fbst_normal(acceptance):
    rng = np.random.default_rng(404)
    e = np.mean([fbst_e_value(kde(rng.normal(1.0, 1.0, 1000)), 0.0) for _ in range(50)])
    target = 2 * stats.norm.cdf(-1.0)
    acceptance(4, abs(e - target) <= 0.05, f"mean e-value {e:.4f} vs 2*Phi(-1) = {target:.4f} (tol 0.05)")


# -- 5, 6, 7: desk-scale experiment ----------------------------------------------


@pytest.fixture(scope="module")
def desk_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk")
    config = ExperimentConfig(**DESK_SCALE, output_dir=str(out), master_seed=0)
    start = time.perf_counter()
    summary, ok = pipeline.cmd_experiment(config)
    elapsed = time.perf_counter() - start
    return config, summary, ok, elapsed


def _auc(summary, engine, n):
    return next(r for r in summary["results"] if r["engine"] == engine and r["n"] == n)


def test_criterion_5_monotone_in_n(desk_run, acceptance):
    config, summary, ok, elapsed = desk_run
    parts, good = [], ok and elapsed < 600
    for engine in config.engines:
        aucs = [_auc(summary, engine, n)["mean_auc"] for n in config.n_list]
        good &= all(b > a for a, b in zip(aucs, aucs[1:]))
        parts.append(f"{engine} " + " < ".join(f"{a:.3f}" for a in aucs))
    acceptance(5, good, "; ".join(parts) + f"; {elapsed:.0f}s (< 600s)")


def test_criterion_6_small_n_favors_bayesian(desk_run, acceptance):
    config, summary, ok, _ = desk_run
    assert config.mode_for(10) == "local"
    diff = summary["comparisons"]["10"]["differences"][0]
    assert (diff["a"], diff["b"], diff["paired"]) == ("bayesian", "classical", True)
    bayes, classical = _auc(summary, "bayesian", 10), _auc(summary, "classical", 10)
    dof = bayes["count"] - 1
    p_one_sided = stats.t.sf(diff["difference"] / diff["se"], dof)
    acceptance(
        6,
        ok and diff["difference"] > 0,
        f"n=10 local: bayesian {bayes['mean_auc']:.3f} vs classical {classical['mean_auc']:.3f}, "
        f"paired difference {diff['difference']:.3f} (SE {diff['se']:.3f}, one-sided p = {p_one_sided:.1e}, df {dof})",
    )


def test_criterion_7_large_n_superimposed(desk_run, acceptance):
    config, summary, ok, _ = desk_run
    bayes, classical = _auc(summary, "bayesian", 200)["mean_auc"], _auc(summary, "classical", 200)["mean_auc"]
    gap = abs(bayes - classical)
    acceptance(7, ok and gap <= 0.05, f"n=200: bayesian {bayes:.3f} vs classical {classical:.3f}, |gap| {gap:.3f} (<= 0.05)")


# -- 8 -------------------------------------------------------------------------


def _tree_files(root):
    root = Path(root)
    return sorted(
        str(p.relative_to(root))
        for sub in ("scores", "roc", "plots")
        for p in (root / sub).rglob("*")
        if p.is_file()
    ) + ["summary.json"]


def test_criterion_8_determinism(tmp_path, acceptance):
    base = dict(p=12, n_list=[8, 40], tree_count=4, mc_draws=200, cap_sweep=[2], master_seed=2024)
    roots = []
    for label, jobs in (("serial", 1), ("serial-again", 1), ("two-workers", 2)):
        out = tmp_path / label
        _, ok = pipeline.cmd_experiment(ExperimentConfig(**base, output_dir=str(out), jobs=jobs))
        assert ok
        roots.append(out)
    files = _tree_files(roots[0])
    mismatched = [
        f"{r.name}/{f}"
        for r in roots[1:]
        for f in files
        if not (r / f).exists() or not filecmp.cmp(roots[0] / f, r / f, shallow=False)
    ]
    same_set = all(_tree_files(r) == files for r in roots[1:])
    acceptance(
        8,
        same_set and not mismatched,
        f"{len(files)} files compared across 3 runs (jobs 1, 1, 2); mismatches: {mismatched or 'none'}",
    )


# -- 9 -------------------------------------------------------------------------


def test_criterion_9_local_guardrails(tmp_path, acceptance):
    config = ExperimentConfig(p=100, n_list=[50], tree_count=5, output_dir=str(tmp_path / "c9"), master_seed=9)
    start = time.perf_counter()
    summary, ok = pipeline.cmd_experiment(config)
    elapsed = time.perf_counter() - start
    manifest = json.loads((tmp_path / "c9" / "manifest.json").read_text())
    failures = manifest["infer"]["failures"]
    max_size = 0
    layout = pipeline.Layout(tmp_path / "c9")
    for engine in config.engines:
        for rep in range(5):
            scores = EdgeScores.from_csv(layout.scores(50, engine, rep).read_text(), "classical-p")
            max_size = max(max_size, int(scores.conditioning_size.max()))
    modes = {r["mode"] for r in summary["results"]}
    good = ok and not failures and max_size <= 5 and modes == {"local"} and len(summary["results"]) == 2
    acceptance(9, good, f"p=100 n=50, 5 trees x 2 engines: max |Y| = {max_size} (<= 5), failures {len(failures)}, {elapsed:.0f}s")
