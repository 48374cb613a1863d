"""Acceptance suite: one test per release criterion.

Each test prints a ``criterion N`` line with the measured quantities and
then asserts the stated tolerance, so a verbose run doubles as the
checklist. Simulation-backed criteria fix their seeds; they are exercised
through the public API exactly as a user would run them.
"""

import json
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np

from sampspectra.combinatorics import (
    PartitionPath,
    bell,
    catalan,
    enumerate_partitions,
    is_crossing,
    narayana,
    reduction_trace,
    stirling2,
)
from sampspectra.field_sim import (
    build_G,
    build_T,
    collect_spectra,
    draw_realization,
    empirical_lmmse,
    hermitian_eigenvalues,
    instance_for,
    reconstruct_field,
)
from sampspectra.marchenko_pastur import mp_expectation, mp_lmmse
from sampspectra.moments import (
    crossing_envelope,
    moment_eval,
    moment_expansion,
    moment_limit,
    symbolic_expansion,
)
from sampspectra.volumes import clear_volume_cache, volume_exact, volume_of, volume_quadrature

SEED = 2026
SNR_GRID_DB = list(range(0, 31, 5))


def test_criterion_01_exact_fourth_moment_expansion():
    clear_volume_cache()
    start = time.perf_counter()
    expansion = moment_expansion(4)
    elapsed = time.perf_counter() - start
    expected_terms = {
        (Fraction(1), 1): 1,
        (Fraction(1), 2): 6,
        (Fraction(2, 3), 2): 1,
        (Fraction(1), 3): 6,
        (Fraction(1), 4): 1,
    }
    symbolic = symbolic_expansion(expansion)
    print(f"criterion 1: terms={expansion.term_map() == expected_terms} "
          f"symbolic={symbolic!r} elapsed={elapsed:.3f}s")
    assert expansion.term_map() == expected_terms
    assert symbolic == "b^3 + (6 + (2/3)^d) b^2 + 6 b + 1"
    assert elapsed < 1.0


def test_criterion_02_exact_and_quadrature_volume():
    start = time.perf_counter()
    path = PartitionPath.of([1, 2, 1, 2])
    exact = volume_exact(path).exact
    quadrature = volume_quadrature(path, tolerance=1e-6)
    elapsed = time.perf_counter() - start
    print(f"criterion 2: exact={exact} quadrature={quadrature!r} "
          f"|gap|={abs(quadrature - 2 / 3):.2e} elapsed={elapsed:.2f}s")
    assert exact == Fraction(2, 3)
    assert abs(quadrature - 2 / 3) <= 1e-5
    assert elapsed < 10.0


def test_criterion_03_step_by_step_reduction_traces():
    expected_one = [
        ((1, 2, 3, 2, 2, 1), 1, 3),
        ((1, 2, 2, 2, 1), 2, 2),
        ((1, 2, 2, 1), 2, 2),
        ((1, 2, 1), 1, 2),
        ((1, 1), 2, 2),
        ((1,), 1, 1),
        ((), None, None),
    ]
    expected_two = [
        ((1, 2, 3, 1, 2, 1), 1, 3),
        ((1, 2, 1, 2, 1), 2, 5),
        ((1, 2, 1, 2), None, None),
    ]
    results = []
    for labels, expected, volume in (
        ([1, 2, 3, 2, 2, 1], expected_one, Fraction(1)),
        ([1, 2, 3, 1, 2, 1], expected_two, Fraction(2, 3)),
    ):
        trace = [(s.path.labels, s.rule, s.index) for s in reduction_trace(labels)]
        results.append(trace == expected and volume_of(labels) == volume)
        assert trace == expected
        assert volume_of(labels) == volume
    print(f"criterion 3: trace matches = {results}")


def test_criterion_04_partition_counts():
    start = time.perf_counter()
    for p in range(1, 9):
        catalog = enumerate_partitions(p)
        assert len(catalog.paths) == bell(p)
        non_crossing = 0
        for k in range(1, p + 1):
            paths_k = catalog.by_block_count(k)
            assert len(paths_k) == stirling2(p, k)
            per_k = sum(1 for w in paths_k if not is_crossing(w))
            assert per_k == narayana(p, k)
            non_crossing += per_k
        assert non_crossing == catalan(p)
    assert bell(4) == 15
    assert bell(10) == 115975
    elapsed = time.perf_counter() - start
    print(f"criterion 4: counts verified for p<=8, bell(10)={bell(10)}, "
          f"elapsed={elapsed:.1f}s")
    assert elapsed < 60.0


def test_criterion_05_crossing_volume_bound():
    crossing_max = Fraction(0)
    checked = 0
    for p in range(1, 9):
        for labels in enumerate_partitions(p).paths:
            volume = volume_of(labels)
            checked += 1
            if is_crossing(labels):
                crossing_max = max(crossing_max, volume)
                assert volume <= Fraction(2, 3), labels
            else:
                assert volume == 1, labels
    print(f"criterion 5: {checked} paths, max crossing volume = {crossing_max}")


def test_criterion_06_limit_moment_identity():
    worst_gap = 0.0
    for beta in (0.1, 0.4, 0.8, 1.0):
        for p in range(1, 7):
            integral = mp_expectation(lambda x, p=p: x**p, beta, tolerance=1e-9)
            gap = abs(integral - moment_limit(p, beta))
            worst_gap = max(worst_gap, gap)
            assert gap <= 1e-6
            expansion = moment_expansion(p)
            for d in range(1, 9):
                envelope = crossing_envelope(p, d)
                diff = moment_eval(expansion, d, beta) - moment_limit(p, beta)
                assert 0 <= diff <= envelope * (1 + 1e-12)
    print(f"criterion 6: worst quadrature gap {worst_gap:.2e}, "
          f"finite-d offsets inside envelope")


def test_criterion_07_monte_carlo_moments():
    start = time.perf_counter()
    expansions = {p: moment_expansion(p) for p in range(1, 5)}
    worst = (0.0, None)
    for d, M in ((1, 50), (2, 3)):
        for beta in (0.3, 0.5, 0.8):
            samples = collect_spectra(d, M, beta, trials=100, seed=SEED)
            pooled = np.concatenate([s.eigenvalues for s in samples])
            actual = samples[0].beta
            for p in range(1, 5):
                empirical = float(np.mean(pooled**p))
                exact = moment_eval(expansions[p], d, actual)
                rel = abs(empirical - exact) / exact
                if rel > worst[0]:
                    worst = (rel, (d, M, beta, p))
                assert rel <= 0.05, (d, M, beta, p, rel)
    elapsed = time.perf_counter() - start
    print(f"criterion 7: worst relative error {worst[0]:.4f} at "
          f"(d, M, beta, p)={worst[1]}, elapsed={elapsed:.1f}s")
    assert elapsed < 300.0


def _lmmse_gaps(d, M, beta, trials=50):
    samples = collect_spectra(d, M, beta, trials=trials, seed=SEED)
    actual = samples[0].beta
    gaps = []
    for snr_db in SNR_GRID_DB:
        alpha = 10 ** (-snr_db / 10)
        empirical = float(np.mean([empirical_lmmse(s, alpha) for s in samples]))
        gaps.append(abs(empirical - mp_lmmse(actual, alpha)))
    return gaps


def test_criterion_08_simulation_scale_error_prediction():
    start = time.perf_counter()
    tight = max(_lmmse_gaps(1, 100, 0.1))
    loose = max(_lmmse_gaps(1, 100, 0.8))
    d3_04 = max(_lmmse_gaps(3, 2, 0.4))
    d3_08 = max(_lmmse_gaps(3, 2, 0.8))
    elapsed = time.perf_counter() - start
    print(f"criterion 8: (a) d=1 beta=0.1 max|gap|={tight:.4f} (<=0.01); "
          f"(b) d=1 beta=0.8 max gap={loose:.4f} (>0.02); "
          f"(c) d=3 max|gap| beta=0.4: {d3_04:.4f}, beta=0.8: {d3_08:.4f} "
          f"(<=0.02); elapsed={elapsed:.1f}s")
    assert elapsed < 600.0
    assert tight <= 0.01
    assert loose > 0.02
    assert d3_04 <= 0.02
    assert d3_08 <= 0.02


def test_criterion_09_reconstruction_error_consistency():
    instance = instance_for(1, 10, 0.5, SEED)
    G = build_G(instance)
    sample = hermitian_eigenvalues(build_T(instance, G=G), instance)
    alpha = 10 ** (-10 / 10)
    predicted = empirical_lmmse(sample, alpha)
    errors = [
        reconstruct_field(
            instance, draw_realization(instance, alpha, (SEED, i), G=G), alpha, G=G
        )[1]
        for i in range(500)
    ]
    monte_carlo = float(np.mean(errors))
    rel = abs(monte_carlo - predicted) / predicted
    print(f"criterion 9: monte carlo {monte_carlo:.6f} vs trace form "
          f"{predicted:.6f}, relative gap {rel:.4f}")
    assert rel <= 0.05


def test_criterion_10_cli_byte_determinism(tmp_path):
    base = [
        sys.executable, "-m", "sampspectra.cli", "mse",
        "--d", "1,3", "--M", "2", "--beta", "0.4,0.7",
        "--snr-grid", "0:30:10", "--trials", "8", "--seed", str(SEED),
    ]
    payloads = []
    for threads in ("1", "2", "4"):
        out = tmp_path / f"run{threads}.csv"
        result = subprocess.run(
            base + ["--threads", threads, "--out", str(out)],
            capture_output=True, text=True,
        )
        assert result.returncode == 0, result.stderr
        payloads.append(out.read_bytes())
    identical = payloads[0] == payloads[1] == payloads[2]
    config = json.loads(payloads[0].decode().splitlines()[0][2:])
    print(f"criterion 10: byte-identical across threads = {identical}; "
          f"config keys = {sorted(config)}")
    assert identical
    assert "threads" not in config
