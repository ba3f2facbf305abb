"""Acceptance suite.

Every test prints one ``criterion N: PASS|FAIL`` line with the measured
numbers, then asserts.  Criterion 9 is a multi-hour reproduction on the
full FB15K benchmark; it runs only when ``SEGKGE_FB15K`` names a dataset
directory and is skipped otherwise (see ``scripts/reproduce_fb15k.sh``).
"""

import os
import time

import numpy as np
import pytest

from segkge import oracle
from segkge.cli import bench_k
from segkge.evaluator import case_study, evaluate, rank_triple
from segkge.scoring import (
    EmbeddingTable,
    ModelConfig,
    f4,
    grad_f4,
    score_f1,
    score_f3,
    score_f4,
)
from segkge.toy import ANTISYMMETRIC, make_family_kg
from segkge.trainer import TrainConfig, train

N_CASES = 1000


@pytest.fixture
def report(capsys):
    def emit(number, passed, detail, status=None):
        with capsys.disabled():
            print(f"\ncriterion {number}: {status or ('PASS' if passed else 'FAIL')} ({detail})")
        return passed

    return emit


def uniform(rng, *shape):
    return rng.uniform(-1.0, 1.0, shape)


def test_criterion_1_single_segment_is_distmult(report):
    start = time.perf_counter()
    worst = 0.0
    for d in (8, 400):
        rng = np.random.default_rng(d)
        for h, r, t in uniform(rng, N_CASES, 3, d):
            worst = max(worst, abs(f4(h, r, t, 1) - score_f1(h, r, t)))
    seconds = time.perf_counter() - start
    ok = worst <= 1e-12 and seconds < 1.0
    assert report(1, ok, f"max |f4(k=1) - f1| = {worst:.2e}, {seconds:.2f}s"), (worst, seconds)


def test_criterion_2_two_segments_is_complex(report):
    start = time.perf_counter()
    rng = np.random.default_rng(2)
    worst = 0.0
    for h, r, t in uniform(rng, N_CASES, 3, 8):
        worst = max(worst, abs(f4(h, r, t, 2) - oracle.complex_reference(h, r, t)))
    seconds = time.perf_counter() - start
    ok = worst <= 1e-12 and seconds < 1.0
    assert report(2, ok, f"max |f4(k=2) - complex| = {worst:.2e}, {seconds:.2f}s"), (worst, seconds)


def test_criterion_3_fast_scores_match_naive(report):
    start = time.perf_counter()
    worst = 0.0
    for k in (1, 2, 4, 8):
        for d in (8, 16, 32):
            rng = np.random.default_rng(10 * k + d)
            cfg = ModelConfig(d=d, k=k)
            table = EmbeddingTable(uniform(rng, 200, d), uniform(rng, 100, d))
            for i in range(100):
                h, r, t = table.entities[2 * i], table.relations[i], table.entities[2 * i + 1]
                worst = max(
                    worst,
                    abs(score_f3(h, r, t, k) - oracle.naive_f3(h, r, t, k)),
                    abs(score_f4(2 * i, i, 2 * i + 1, table, cfg) - oracle.naive_f4(h, r, t, k)),
                )
    seconds = time.perf_counter() - start
    ok = worst <= 1e-12 and seconds < 5.0
    assert report(3, ok, f"max deviation {worst:.2e}, {seconds:.2f}s"), (worst, seconds)


def test_criterion_4_gradient_matches_finite_differences(report):
    tol = oracle.OracleTolerance()
    start = time.perf_counter()
    rng = np.random.default_rng(4)
    cfg = ModelConfig(d=16, k=4)
    table = EmbeddingTable(uniform(rng, 200, 16), uniform(rng, 100, 16))
    worst = 0.0
    for i in range(100):
        h, r, t = 2 * i, i, 2 * i + 1
        analytic = grad_f4(h, r, t, table, cfg)
        numeric = oracle.numeric_gradient(
            lambda a, b, c: oracle.naive_f4(a, b, c, 4),
            table.entities[h], table.relations[r], table.entities[t], tol.fd_step,
        )
        for a, n in zip(analytic, numeric):
            n = np.asarray(n)
            scale = np.maximum(np.maximum(np.abs(a), np.abs(n)), 1e-8)
            worst = max(worst, float(np.max(np.abs(a - n) / scale)))
    seconds = time.perf_counter() - start
    ok = worst <= tol.grad_rel_tol and seconds < 5.0
    assert report(4, ok, f"max relative error {worst:.2e}, {seconds:.2f}s"), (worst, seconds)


def test_criterion_5_symmetry_and_antisymmetry(report):
    start = time.perf_counter()
    rng = np.random.default_rng(5)
    k, d = 4, 16
    sym = anti = differ = 0
    for _ in range(N_CASES):
        h, r, t = uniform(rng, 3, d)
        r_sym = r.copy()
        r_sym.reshape(k, -1)[1::2] = 0.0
        sym += f4(h, r_sym, t, k) == f4(t, r_sym, h, k)
        h2, r2, t2 = uniform(rng, 3, 8)
        r2[:4] = 0.0
        anti += f4(h2, r2, t2, 2) == -f4(t2, r2, h2, 2)
        differ += f4(h, r, t, k) != f4(t, r, h, k)
    seconds = time.perf_counter() - start
    ok = sym == N_CASES and anti == N_CASES and differ >= 0.99 * N_CASES and seconds < 2.0
    detail = f"symmetric {sym}/{N_CASES}, antisymmetric {anti}/{N_CASES}, dense differ {differ}/{N_CASES}, {seconds:.2f}s"
    assert report(5, ok, detail), detail


@pytest.fixture(scope="module")
def toy_run():
    _, ds = make_family_kg()
    cfg = TrainConfig(k=4, d=32, eta=20, lr=0.1, lam=0.01, epochs=200, seed=0, filter_negatives=True)
    start = time.perf_counter()
    result = train(ds.train, cfg, ds.vocab.num_entities, ds.vocab.num_relations, known=ds.filter_index)
    return ds, cfg, result, time.perf_counter() - start


def test_criterion_6_toy_end_to_end(report, toy_run):
    ds, cfg, result, seconds = toy_run
    assert ds.vocab.num_entities == 60
    metrics = evaluate(ds.test, result.table, cfg.model, ds.filter_index)
    anti_rel = ds.vocab.relation_to_id[ANTISYMMETRIC]
    anti = [tuple(tr) for tr in ds.test.triples.tolist() if tr[1] == anti_rel]
    rows = {fn: case_study(anti, result.table, cfg.model, fn) for fn in ("f1", "f2", "f4")}
    f4_ok = all(row.p_reverse < 0.5 < row.p_forward for row in rows["f4"])
    mirror_ok = all(row.p_forward == row.p_reverse for fn in ("f1", "f2") for row in rows[fn])
    ok = seconds < 30.0 and metrics.mrr >= 0.90 and f4_ok and mirror_ok and len(anti) > 0
    detail = (
        f"MRR {metrics.mrr:.3f}, f4 p_forward min {min(r.p_forward for r in rows['f4']):.3f}, "
        f"p_reverse max {max(r.p_reverse for r in rows['f4']):.3f}, f1/f2 mirrored {mirror_ok}, train {seconds:.1f}s"
    )
    assert report(6, ok, detail), detail


def test_criterion_7_rank_matches_exhaustive_scan(report, toy_run):
    ds, cfg, result, _ = toy_run
    entities, relations = result.table.entities.tolist(), result.table.relations.tolist()
    start = time.perf_counter()
    mismatches = total = 0
    for split in (ds.train, ds.valid, ds.test):
        for tr in split.triples.tolist():
            for side in ("head", "tail"):
                fast = rank_triple(tr, side, result.table, cfg.model, ds.filter_index)
                slow = oracle.exhaustive_rank(tr, side, entities, relations, cfg.k, ds.filter_index)
                mismatches += fast != slow
                total += 1
    seconds = time.perf_counter() - start
    ok = mismatches == 0 and seconds < 5.0
    assert report(7, ok, f"{total - mismatches}/{total} rankings agree, {seconds:.2f}s"), (mismatches, seconds)


def test_criterion_8_runtime_linear_in_k(report):
    start = time.perf_counter()
    rows = dict(bench_k([1, 4, 8, 16], 400))
    seconds = time.perf_counter() - start
    times = [rows[k] for k in (1, 4, 8, 16)]
    monotone = all(a < b for a, b in zip(times, times[1:]))
    ratio = rows[16] / rows[4]
    ok = monotone and 3.0 <= ratio <= 5.5 and seconds < 120.0
    timings = ", ".join(f"k={k}: {rows[k]:.3f}s" for k in (1, 4, 8, 16))
    assert report(8, ok, f"{timings}; ratio 16/4 = {ratio:.2f}; {seconds:.1f}s total"), rows


def test_criterion_9_fb15k_reproduction(report):
    root = os.environ.get("SEGKGE_FB15K")
    if not root:
        report(9, True, "optional: set SEGKGE_FB15K to run the multi-hour reproduction", status="SKIP")
        pytest.skip("optional long run; set SEGKGE_FB15K to an FB15K directory")
    from segkge.data import load_dataset

    ds = load_dataset(root)
    cfg = TrainConfig(k=8, d=400, lam=0.001, eta=1000, lr=0.1, epochs=100, seed=0,
                      workers=int(os.environ.get("SEGKGE_WORKERS", os.cpu_count() or 1)))
    result = train(ds.train, cfg, ds.vocab.num_entities, ds.vocab.num_relations)
    metrics = evaluate(ds.test, result.table, cfg.model, ds.filter_index)
    ok = abs(metrics.mrr - 0.825) <= 0.015 and abs(metrics.both.hits10 - 88.6) <= 1.0
    assert report(9, ok, f"MRR {metrics.mrr:.3f}, Hits@10 {metrics.both.hits10:.1f}"), metrics.format_table()
