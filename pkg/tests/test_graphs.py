import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from narrative_net.addressee import ScenePairMatrix, corpus_matrices, infer_corpus
from narrative_net.graphs import (
    BOTTOM,
    NORMALIZED,
    SmoothingParams,
    UnknownSpeakerError,
    WeightedGraph,
    build_cumulative,
    build_cumulative_series,
    build_smoothed_series,
    build_time_slice_series,
    instantaneous_weight,
    instantaneous_weights,
    link_weight_series,
    narrative_anticipation,
    narrative_persistence,
    node_strength_series,
    normalize_weight,
    pair_timeline,
    raw_weight_columns,
)
from narrative_net.testkit import (
    CLAIRE,
    FRANCIS,
    fixture_four_scenes,
    fixture_triangle,
    oracle_raw_weight,
    smoothing_oracle,
)


def matrices_of(corpus, rules="12"):
    return corpus_matrices(corpus, infer_corpus(corpus, rules))


def mats(*scenes):
    """Scenes given as {(a, b): seconds}."""
    return [ScenePairMatrix.from_seconds(t, s) for t, s in enumerate(scenes, start=1)]


matrices_strategy = st.lists(
    st.dictionaries(
        st.tuples(st.sampled_from("ABCDEF"), st.sampled_from("ABCDEF")).filter(lambda p: p[0] < p[1]),
        st.integers(1, 60_000),
        max_size=4,
    ),
    min_size=0,
    max_size=30,
).map(lambda scenes: [ScenePairMatrix(t, dict(s)) for t, s in enumerate(scenes, start=1)])


class TestCumulative:
    def test_triangle_is_complete(self):
        g = build_cumulative(matrices_of(fixture_triangle()))
        assert set(g.edges) == {("S1", "S2"), ("S1", "S3"), ("S2", "S3")}
        assert all(w == 40.0 for w in g.edges.values())

    def test_empty(self):
        g = build_cumulative([])
        assert g.nodes == frozenset() and g.edges == {}

    def test_upto(self):
        g = build_cumulative(matrices_of(fixture_triangle()), upto=2)
        assert g.edges == {("S1", "S2"): 40.0}

    @settings(max_examples=100, deadline=None)
    @given(matrices_strategy)
    def test_total_matches_independent_sum(self, matrices):
        totals = {}
        for m in matrices:
            for p, ms in m.entries.items():
                totals[p] = totals.get(p, 0) + ms
        g = build_cumulative(matrices)
        assert g.edges == {p: ms / 1000 for p, ms in totals.items()}

    def test_prefix_series_non_decreasing(self):
        s = build_cumulative_series(matrices_of(fixture_triangle()))
        values = [w for _, w in link_weight_series(s, "S1", "S3")]
        assert values == sorted(values)
        assert values == [0, 0, 20, 40, 40, 40]


class TestTimeSlice:
    def test_window_one(self):
        s = build_time_slice_series(matrices_of(fixture_triangle()), 1)
        assert [set(g.edges) for _, g in s.snapshots] == [
            {("S1", "S2")}, {("S1", "S2")}, {("S1", "S3")}, {("S1", "S3")}, {("S2", "S3")}, {("S2", "S3")}
        ]

    def test_window_two_enumerated(self):
        pattern = [("S1", "S2")] * 2 + [("S1", "S3")] * 2 + [("S2", "S3")] * 2
        expected = [set(pattern[max(0, t - 2) : t]) for t in range(1, 7)]
        s = build_time_slice_series(matrices_of(fixture_triangle()), 2)
        assert [set(g.edges) for _, g in s.snapshots] == expected
        assert [len(e) for e in expected] == [1, 1, 2, 1, 2, 1]

    def test_stride(self):
        s = build_time_slice_series(matrices_of(fixture_triangle()), 3, stride=2)
        assert [t for t, _ in s.snapshots] == [1, 3, 5]

    @pytest.mark.parametrize("w, stride", [(0, 1), (1, 0), (-2, 1)])
    def test_invalid(self, w, stride):
        with pytest.raises(ValueError):
            build_time_slice_series([], w, stride)

    @settings(max_examples=100, deadline=None)
    @given(matrices_strategy.filter(len))
    def test_full_window_equals_cumulative(self, matrices):
        T = len(matrices)
        s = build_time_slice_series(matrices, T)
        assert s.snapshots[-1][0] == T
        assert s.snapshots[-1][1] == build_cumulative(matrices)


class TestPersistenceAnticipation:
    def setup_method(self):
        self.tl = pair_timeline(matrices_of(fixture_four_scenes()), FRANCIS, CLAIRE)

    def test_scene2(self):
        assert narrative_persistence(self.tl, 2) == -10
        assert narrative_anticipation(self.tl, 2) == -20

    def test_scene3(self):
        assert narrative_persistence(self.tl, 3) == -10
        assert narrative_anticipation(self.tl, 3) == 20

    def test_undefined(self):
        assert narrative_persistence(self.tl, 1) is None
        assert narrative_anticipation(self.tl, 4) is None

    def test_no_separate_talk(self):
        tl = pair_timeline(mats({("A", "B"): 12}, {}, {("C", "D"): 5}, {("A", "B"): 7}), "A", "B")
        assert narrative_persistence(tl, 3) == 12
        assert narrative_anticipation(tl, 2) == 7

    def test_triangle_anticipation(self):
        # h = 10 s per scene: 1-2, then 1-3, then 2-3
        tl = pair_timeline(mats({("1", "2"): 10}, {("1", "3"): 10}, {("2", "3"): 10}), "2", "3")
        assert narrative_anticipation(tl, 1) == 10 - (10 + 10)
        assert instantaneous_weight(tl, 1) == -10


class TestInstantaneousWeight:
    def test_four_scene_sequence(self):
        tl = pair_timeline(matrices_of(fixture_four_scenes()), FRANCIS, CLAIRE)
        assert [instantaneous_weight(tl, t) for t in range(1, 5)] == [30, -10, 20, 20]

    def test_never_interacting(self):
        tl = pair_timeline(matrices_of(fixture_four_scenes()), "Reporter", FRANCIS)
        assert all(instantaneous_weight(tl, t) is BOTTOM for t in range(1, 5))

    def test_after_last(self):
        tl = pair_timeline(mats({("A", "B"): 10}, {("A", "C"): 4}, {("B", "C"): 3}), "A", "B")
        assert [instantaneous_weight(tl, t) for t in (1, 2, 3)] == [10, 6, 3]

    def test_before_first(self):
        tl = pair_timeline(mats({("A", "C"): 4}, {("B", "C"): 3}, {("A", "B"): 10}), "A", "B")
        assert [instantaneous_weight(tl, t) for t in (1, 2, 3)] == [3, 7, 10]

    def test_out_of_range(self):
        tl = pair_timeline(mats({("A", "B"): 1}), "A", "B")
        with pytest.raises(ValueError):
            instantaneous_weight(tl, 2)

    def test_triangle_decays_after_last(self):
        tl = pair_timeline(matrices_of(fixture_triangle()), "S1", "S2")
        w = [instantaneous_weight(tl, t) for t in range(2, 7)]
        assert all(a > b for a, b in zip(w, w[1:]))


class TestNormalize:
    def test_midpoint(self):
        assert normalize_weight(0) == 0.5

    def test_value(self):
        # 1 / (1 + e^-0.3)
        assert normalize_weight(30, SmoothingParams(0.01)) == pytest.approx(0.57444, abs=1e-5)

    def test_bottom(self):
        assert normalize_weight(BOTTOM) == 0.0
        assert normalize_weight(-math.inf) == 0.0

    def test_huge_negative(self):
        assert normalize_weight(-1e9, 1.0) == 0.0

    # millisecond resolution, the finest weight the builders produce
    @given(st.integers(-3_000_000, 3_000_000), st.integers(-3_000_000, 3_000_000))
    def test_monotone(self, a, b):
        if a < b:
            assert normalize_weight(a / 1000) < normalize_weight(b / 1000)

    def test_lambda_positive(self):
        with pytest.raises(ValueError):
            SmoothingParams(0)


class TestSmoothedSeries:
    def test_four_scene_values(self):
        s = build_smoothed_series(matrices_of(fixture_four_scenes()), SmoothingParams(0.01))
        got = [w for _, w in link_weight_series(s, FRANCIS, CLAIRE)]
        assert got == pytest.approx([0.57444, 0.47502, 0.54983, 0.54983], abs=1e-5)

    def test_dense(self):
        s = build_smoothed_series(matrices_of(fixture_four_scenes()))
        assert [t for t, _ in s.snapshots] == [1, 2, 3, 4]
        assert s.scheme == NORMALIZED

    def test_single_pair(self):
        s = build_smoothed_series(mats({}, {("A", "B"): 3}, {}, {}, {("A", "B"): 9}, {}))
        assert all(w >= 0.5 for _, w in link_weight_series(s, "A", "B"))

    def test_empty(self):
        assert len(build_smoothed_series([])) == 0

    def test_speakers_included_isolated(self):
        s = build_smoothed_series(mats({("A", "B"): 3}), speakers=["Z"])
        assert node_strength_series(s, "Z") == [(1, 0.0)]

    @settings(max_examples=150, deadline=None)
    @given(matrices_strategy, st.sampled_from([0.001, 0.01, 0.1]))
    def test_matches_oracle(self, matrices, lam):
        s = build_smoothed_series(matrices, lam)
        for t, g in s.snapshots:
            for pair, w in g.edges.items():
                assert w == smoothing_oracle(matrices, pair, t, lam)

    @settings(max_examples=150, deadline=None)
    @given(matrices_strategy)
    def test_raw_matches_oracle(self, matrices):
        for pair, col in raw_weight_columns(matrices).items():
            for t, w in enumerate(col, start=1):
                ref = oracle_raw_weight(matrices, pair, t)
                assert (w is BOTTOM and ref == -math.inf) or w == ref

    @settings(max_examples=150, deadline=None)
    @given(matrices_strategy)
    def test_between_occurrences(self, matrices):
        for pair in raw_weight_columns(matrices):
            tl = pair_timeline(matrices, *pair)
            occ = tl.occurrences
            for l, n in zip(occ, occ[1:]):
                gap = range(l + 1, n)
                pers = [narrative_persistence(tl, t) for t in gap]
                anti = [narrative_anticipation(tl, t) for t in gap]
                assert all(a >= b for a, b in zip(pers, pers[1:]))
                assert all(a <= b for a, b in zip(anti, anti[1:]))
                cap = max(tl.h[l], tl.h[n]) / 1000
                for t in gap:
                    w = instantaneous_weight(tl, t)
                    assert w == max(narrative_persistence(tl, t), narrative_anticipation(tl, t))
                    assert w <= cap
                    if all(tl.d[s] == 0 for s in range(l + 1, n)):
                        assert w == cap

    @settings(max_examples=100, deadline=None)
    @given(matrices_strategy)
    def test_active_scene_at_least_half(self, matrices):
        s = build_smoothed_series(matrices)
        for (t, g), m in zip(s.snapshots, matrices):
            for pair, w in g.edges.items():
                assert 0 <= w <= 1
                if m.entries.get(pair, 0) > 0:
                    assert w >= 0.5

    def test_sweep_matches_pointwise(self):
        m = matrices_of(fixture_triangle())
        tl = pair_timeline(m, "S2", "S3")
        assert instantaneous_weights(tl) == [instantaneous_weight(tl, t) for t in range(1, 7)]


class TestSeries:
    def test_strength_sum(self):
        g = WeightedGraph(frozenset("ABC"), {("A", "B"): 0.5, ("A", "C"): 0.57}, NORMALIZED)
        assert g.strength("A") == pytest.approx(1.07)

    def test_isolated_strength(self):
        s = build_cumulative_series(mats({("A", "B"): 1}, {}), speakers=["Q"])
        assert node_strength_series(s, "Q") == [(1, 0.0), (2, 0.0)]

    def test_unknown_speaker(self):
        s = build_cumulative_series(mats({("Walter", "Jesse"): 1}))
        with pytest.raises(UnknownSpeakerError) as exc:
            node_strength_series(s, "Walt")
        assert "Walter" in exc.value.suggestions
        with pytest.raises(UnknownSpeakerError):
            link_weight_series(s, "Walter", "Skyler")

    def test_never_interacting_link(self):
        s = build_smoothed_series(matrices_of(fixture_four_scenes()))
        assert all(w == 0 for _, w in link_weight_series(s, "Reporter", FRANCIS))

    def test_graph_invariants(self):
        with pytest.raises(ValueError):
            WeightedGraph(frozenset("A"), {("A", "A"): 1.0})
        with pytest.raises(ValueError):
            WeightedGraph(frozenset("AB"), {("A", "B"): -1.0})
        with pytest.raises(ValueError):
            WeightedGraph(frozenset("AB"), {("A", "B"): 1.5}, NORMALIZED)


def test_to_networkx():
    nx = pytest.importorskip("networkx")
    g = build_cumulative(matrices_of(fixture_triangle()), speakers=["Loner"]).to_networkx()
    assert isinstance(g, nx.Graph)
    assert g.number_of_edges() == 3 and "Loner" in g
    assert g["S1"]["S2"]["weight"] == 40.0
