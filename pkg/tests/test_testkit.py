import pytest

from narrative_net.addressee import corpus_matrices, infer_corpus
from narrative_net.corpus import dumps_canonical
from narrative_net.evaluation import direct_scores
from narrative_net.graphs import (
    build_cumulative_series,
    build_smoothed_series,
    build_time_slice_series,
    raw_weight_columns,
)
from narrative_net.testkit import (
    SyntheticSpec,
    generate_interleaved_corpus,
    oracle_raw_weight,
    scene_from_turns,
    storyline_speakers,
)

from conftest import synthetic_specs


def _story(name):
    return name.split(".")[0]


class TestSpec:
    def test_zero_storylines(self):
        with pytest.raises(ValueError):
            SyntheticSpec(storyline_count=0)

    def test_bad_activation(self):
        with pytest.raises(ValueError):
            SyntheticSpec(storyline_count=2, activation=(0.5,))
        with pytest.raises(ValueError):
            SyntheticSpec(storyline_count=1, activation=(1.5,))
        with pytest.raises(ValueError):
            SyntheticSpec(storyline_count=1, scene_count=3, activation=((1.0,), (1.0,)))

    def test_empty_storyline(self):
        with pytest.raises(ValueError):
            generate_interleaved_corpus(SyntheticSpec(storyline_count=2, speakers_per_storyline=(2, 0)))

    def test_speaker_names(self):
        assert storyline_speakers(SyntheticSpec(storyline_count=2, speakers_per_storyline=(1, 2))) == [
            ["S1.1"], ["S2.1", "S2.2"]
        ]


class TestGenerator:
    def test_deterministic(self):
        spec = SyntheticSpec(seed=11)
        assert dumps_canonical(generate_interleaved_corpus(spec)) == dumps_canonical(generate_interleaved_corpus(spec))

    def test_seed_matters(self):
        a = generate_interleaved_corpus(SyntheticSpec(seed=1))
        b = generate_interleaved_corpus(SyntheticSpec(seed=2))
        assert dumps_canonical(a) != dumps_canonical(b)

    def test_episode_split(self):
        c = generate_interleaved_corpus(SyntheticSpec(scene_count=50, scenes_per_episode=20))
        assert [e.scene_range for e in c.episodes] == [range(1, 21), range(21, 41), range(41, 51)]

    def test_silent_scenes(self):
        rows = tuple((0.0,) if t % 2 else (1.0,) for t in range(6))
        c = generate_interleaved_corpus(SyntheticSpec(storyline_count=1, scene_count=6, activation=rows))
        assert [bool(s.utterances) for s in c.scenes] == [True, False] * 3

    def test_monologue_storyline(self):
        c = generate_interleaved_corpus(SyntheticSpec(storyline_count=1, speakers_per_storyline=1, scene_count=5))
        assert all(u.truth_addressees == frozenset() for u in c.utterances)

    @pytest.mark.parametrize("spec", synthetic_specs(10), ids=lambda s: f"seed{s.seed}")
    def test_no_cross_storyline_edges(self, spec):
        c = generate_interleaved_corpus(spec)
        m = corpus_matrices(c, infer_corpus(c, "1234"))
        for series in (
            build_cumulative_series(m, c.speakers),
            build_time_slice_series(m, 5, 1, c.speakers),
            build_smoothed_series(m, 0.01, c.speakers),
        ):
            for _, g in series.snapshots:
                for (a, b), w in g.edges.items():
                    assert w == 0 or _story(a) == _story(b)

    @pytest.mark.parametrize("spec", synthetic_specs(12), ids=lambda s: f"seed{s.seed}")
    def test_two_party_scenes_fully_recovered(self, spec):
        cov, s = direct_scores(generate_interleaved_corpus(spec), "12")
        assert cov == 1 and s.fscore == 1


class TestOracle:
    @pytest.mark.parametrize("spec", synthetic_specs(8), ids=lambda s: f"seed{s.seed}")
    def test_agrees_with_builder(self, spec):
        c = generate_interleaved_corpus(spec)
        m = corpus_matrices(c, infer_corpus(c, "1234"))
        for pair, col in raw_weight_columns(m).items():
            for t, w in enumerate(col, start=1):
                ref = oracle_raw_weight(m, pair, t)
                assert float(w) == ref

    def test_never_talking_pair(self):
        c = generate_interleaved_corpus(SyntheticSpec(storyline_count=2, speakers_per_storyline=2, scene_count=10))
        m = corpus_matrices(c, infer_corpus(c, "12"))
        assert oracle_raw_weight(m, ("S1.1", "S2.1"), 1) == float("-inf")


def test_scene_from_turns_spacing():
    s = scene_from_turns(["A", "B"])
    assert [(u.start, u.end) for u in s.utterances] == [(0, 1000), (1500, 2500)]
