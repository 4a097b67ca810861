"""Acceptance gate: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` (the lines are printed even
without ``-s``).
"""

import math
import time

import numpy as np
import pytest

from narrative_net.addressee import NESTED_RULESETS, Turn, assign_turns, corpus_matrices, coverage, infer_corpus, RuleId
from narrative_net.evaluation import cosine_similarity, normalized_l2
from narrative_net.graphs import (
    build_cumulative,
    build_smoothed_series,
    build_time_slice_series,
    instantaneous_weight,
    narrative_anticipation,
    narrative_persistence,
    normalize_weight,
    pair_timeline,
)
from narrative_net.testkit import (
    CLAIRE,
    FRANCIS,
    fixture_four_scenes,
    fixture_triangle,
    generate_interleaved_corpus,
    smoothing_oracle,
)

from conftest import synthetic_specs
from test_cli import test_toy_golden_end_to_end as _toy_golden_run

SPECS = synthetic_specs(50)


@pytest.fixture
def report(capsys):
    def _report(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
        assert ok, detail

    return _report


def _matrices(corpus, rules="1234"):
    return corpus_matrices(corpus, infer_corpus(corpus, rules))


def test_criterion_1_four_scene_weights(report):
    t0 = time.perf_counter()
    tl = pair_timeline(_matrices(fixture_four_scenes()), FRANCIS, CLAIRE)
    got = [instantaneous_weight(tl, t) for t in range(1, 5)]
    elapsed = time.perf_counter() - t0
    report(1, got == [30, -10, 20, 20] and elapsed < 1.0, f"weights {got}, {elapsed * 1000:.1f} ms (< 1 s)")


def test_criterion_2_normalization(report):
    got = [normalize_weight(w, 0.01) for w in (30, -10, 20, 20)]
    want = [0.57444, 0.47502, 0.54983, 0.54983]
    err = max(abs(a - b) for a, b in zip(got, want))
    report(2, err <= 1e-5, f"max deviation {err:.2e} (tolerance 1e-5)")


def test_criterion_3_oracle_equivalence(report):
    t0 = time.perf_counter()
    mismatches = checked = 0
    for spec in SPECS:
        m = _matrices(generate_interleaved_corpus(spec))
        series = build_smoothed_series(m, 0.01)
        for t, g in series.snapshots:
            for pair, w in g.edges.items():
                checked += 1
                mismatches += w != smoothing_oracle(m, pair, t, 0.01)
    elapsed = time.perf_counter() - t0
    report(
        3,
        mismatches == 0 and elapsed < 30,
        f"{checked} pair-scene values over {len(SPECS)} corpora, {mismatches} not bit-equal, {elapsed:.1f} s (< 30 s)",
    )


def _turns(spec):
    """'A B A' or [(speaker, start_s, end_s), ...] to merged turns."""
    if isinstance(spec, str):
        spec = [(s, 2 * k, 2 * k + 1) for k, s in enumerate(spec.split())]
    return [Turn(s, (k,), int(a * 1000), int(b * 1000)) for k, (s, a, b) in enumerate(spec)]


RULE_FIXTURES = [
    # (name, turns, ruleset, turn index, expected addressee, expected rule)
    ("surrounded", "A B A", {1}, 1, "A", RuleId.R1),
    ("boundary first", "A B C", {1, 2}, 0, "B", RuleId.R2),
    ("boundary last", "A B C", {1, 2}, 2, "B", RuleId.R2),
    ("3a seen before", "B A B C", {1, 2, 3}, 2, "A", RuleId.R3A),
    ("3b seen after", "C B A B", {1, 2, 3}, 1, "A", RuleId.R3B),
    ("4 closer to next", [("A", 0, 1), ("B", 5, 6), ("C", 6.5, 7)], {1, 2, 3, 4}, 1, "C", RuleId.R4),
    ("4 tie", [("A", 0, 1), ("B", 2, 3), ("C", 4, 5)], {1, 2, 3, 4}, 1, "A", RuleId.R4),
]


def test_criterion_4_rule_fixtures(report):
    failed = []
    for name, spec, rules, m, who, rule in RULE_FIXTURES:
        got = assign_turns(_turns(spec), frozenset(rules)).get(m)
        if got != (who, rule):
            failed.append(f"{name}: {got}")
    passed = len(RULE_FIXTURES) - len(failed)
    report(4, not failed, f"{passed}/{len(RULE_FIXTURES)} rule fixtures" + (f"; failing {failed}" if failed else ""))


# published (series, rules, variant) -> (cosine, L2), printed to two decimals
PUBLISHED = {
    ("BB", "1", "drop"): (0.97, 0.26), ("BB", "1", "all"): (0.96, 0.29),
    ("GoT", "1", "drop"): (0.91, 0.43), ("GoT", "1", "all"): (0.89, 0.47),
    ("HoC", "1", "drop"): (0.99, 0.19), ("HoC", "1", "all"): (0.99, 0.16),
    ("Average", "1", "drop"): (0.96, 0.29), ("Average", "1", "all"): (0.95, 0.31),
    ("BB", "1-4", "drop"): (0.99, 0.17), ("BB", "1-4", "all"): (0.98, 0.20),
    ("GoT", "1-4", "drop"): (0.94, 0.34), ("GoT", "1-4", "all"): (0.93, 0.37),
    ("HoC", "1-4", "drop"): (0.99, 0.11), ("HoC", "1-4", "all"): (0.99, 0.13),
    ("Average", "1-4", "drop"): (0.97, 0.21), ("Average", "1-4", "all"): (0.97, 0.23),
}
OUTLIER = ("HoC", "1", "drop")


def _l2_interval(cos, half_ulp=0.005):
    """L2 implied by a cosine printed to two decimals."""
    return math.sqrt(2 * (1 - min(1.0, cos + half_ulp))), math.sqrt(2 * (1 - (cos - half_ulp)))


def test_criterion_5_metric_identity(report):
    rng = np.random.default_rng(20240601)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 40))
        v1, v2 = rng.random(n) * rng.choice([1, 100, 1e4]), rng.random(n) * rng.choice([1, 100, 1e4])
        worst = max(worst, abs(normalized_l2(v1, v2) ** 2 + 2 * cosine_similarity(v1, v2) - 2))

    bad, point_misses = [], []
    for cell, (cos, l2) in PUBLISHED.items():
        if cell == OUTLIER:
            continue
        lo, hi = _l2_interval(cos)
        if not lo - 0.03 <= l2 <= hi + 0.03:
            bad.append(cell)
        point = math.sqrt(2 * (1 - cos))
        if abs(point - l2) > 0.03:
            point_misses.append(f"{'/'.join(cell)} {abs(point - l2):.3f}")
    detail = (
        f"identity max error {worst:.1e} (tolerance 1e-12); "
        f"{len(PUBLISHED) - 1 - len(bad)}/{len(PUBLISHED) - 1} published L2 cells within 0.03 of the cosine-implied "
        f"interval (cosine read as +/-0.005); point-estimate misses: {', '.join(point_misses) or 'none'}"
    )
    report(5, worst <= 1e-12 and not bad, detail)


def test_criterion_6_baselines(report):
    problems = []
    for spec in SPECS:
        m = _matrices(generate_interleaved_corpus(spec))
        if not m:
            continue
        last = build_time_slice_series(m, len(m)).snapshots[-1]
        if last[0] != len(m) or last[1] != build_cumulative(m):
            problems.append(f"seed {spec.seed}")
    k3 = build_cumulative(_matrices(fixture_triangle()))
    is_k3 = set(k3.edges) == {("S1", "S2"), ("S1", "S3"), ("S2", "S3")} and all(w > 0 for w in k3.edges.values())
    report(
        6,
        not problems and is_k3,
        f"W=T slice equals cumulative on {len(SPECS) - len(problems)}/{len(SPECS)} corpora; triangle is K3: {is_k3}",
    )


def test_criterion_7_monotonicity(report):
    delta_violations = coverage_violations = gaps = 0
    for spec in SPECS:
        c = generate_interleaved_corpus(spec)
        m = _matrices(c)
        pairs = {p for x in m for p in x.entries}
        for pair in pairs:
            tl = pair_timeline(m, *pair)
            for l, n in zip(tl.occurrences, tl.occurrences[1:]):
                ts = range(l + 1, n)
                gaps += bool(ts)
                pers = [narrative_persistence(tl, t) for t in ts]
                anti = [narrative_anticipation(tl, t) for t in ts]
                delta_violations += any(a < b for a, b in zip(pers, pers[1:]))
                delta_violations += any(a > b for a, b in zip(anti, anti[1:]))
        cov = [coverage(infer_corpus(c, r)) for r in NESTED_RULESETS]
        coverage_violations += any(a > b for a, b in zip(cov, cov[1:]))
    report(
        7,
        delta_violations == 0 and coverage_violations == 0,
        f"{gaps} inter-occurrence gaps, {delta_violations} persistence/anticipation violations; "
        f"{coverage_violations} coverage violations across nested rulesets",
    )


def test_criterion_8_toy_golden(report, tmp_path, capsys):
    try:
        _toy_golden_run(tmp_path, capsys)
        ok, detail = True, "toy episode artifacts match the committed golden files"
    except AssertionError as exc:
        ok, detail = False, f"golden mismatch: {str(exc).splitlines()[0]}"
    report(8, ok, detail)
