"""Fixtures, a synthetic corpus generator and a brute-force smoothing oracle.

The oracle deliberately shares no code with :mod:`narrative_net.graphs`:
it rescans the matrices for every query and sums separate interactions
term by term, so it can referee the optimized builder.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from .addressee import ScenePairMatrix
from .corpus import Corpus, Episode, Scene, SpeakerId, Utterance, assemble_corpus


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters of an interleaved-storyline corpus.

    ``activation`` gives each storyline's relative chance of holding a
    scene: either one weight per storyline, or one such row per scene.
    """

    storyline_count: int = 3
    speakers_per_storyline: int | tuple[int, ...] = 3
    scene_count: int = 60
    activation: tuple = ()
    turns_per_scene: tuple[int, int] = (2, 8)
    duration_ms: tuple[int, int] = (500, 8000)
    gap_ms: tuple[int, int] = (0, 1500)
    # chance that a turn is split into two consecutive utterances
    split_probability: float = 0.2
    scenes_per_episode: Optional[int] = None
    seed: int = 0

    def __post_init__(self):
        if self.storyline_count < 1:
            raise ValueError("at least one storyline is required")
        rows = self._rows()
        for row in rows:
            if len(row) != self.storyline_count:
                raise ValueError("activation rows need one entry per storyline")
            if any(not 0 <= p <= 1 for p in row):
                raise ValueError("activation probabilities must lie in [0, 1]")
        if self.scene_count < 0:
            raise ValueError("scene_count must be >= 0")
        lo, hi = self.duration_ms
        if not 0 < lo <= hi:
            raise ValueError("duration range must be positive")

    def _rows(self) -> list[tuple[float, ...]]:
        if not self.activation:
            return [tuple(1.0 for _ in range(self.storyline_count))]
        if isinstance(self.activation[0], (int, float)):
            return [tuple(self.activation)]
        if len(self.activation) != self.scene_count:
            raise ValueError("per-scene activation needs one row per scene")
        return [tuple(r) for r in self.activation]

    def storyline_sizes(self) -> list[int]:
        s = self.speakers_per_storyline
        sizes = [s] * self.storyline_count if isinstance(s, int) else list(s)
        if len(sizes) != self.storyline_count or any(n < 1 for n in sizes):
            raise ValueError("every storyline needs at least one speaker")
        return sizes


def storyline_speakers(spec: SyntheticSpec) -> list[list[SpeakerId]]:
    return [[f"S{k + 1}.{i + 1}" for i in range(n)] for k, n in enumerate(spec.storyline_sizes())]


def generate_interleaved_corpus(spec: SyntheticSpec) -> Corpus:
    """Seeded corpus of two-party scenes drawn from disjoint storylines.

    Each scene belongs to one storyline, picked according to the activation
    weights (a scene whose weights are all zero stays silent). Two of that
    storyline's speakers alternate; each utterance's reference addressee is
    the other one. A single-speaker storyline yields monologue scenes.
    """
    rng = random.Random(spec.seed)
    rows = spec._rows()
    casts = storyline_speakers(spec)
    scenes: list[Scene] = []
    clock = 0
    for t in range(spec.scene_count):
        weights = rows[t] if len(rows) > 1 else rows[0]
        if sum(weights) == 0:
            scenes.append(Scene(1))
            continue
        story = rng.choices(range(spec.storyline_count), weights=weights)[0]
        cast = casts[story]
        pair = rng.sample(cast, 2) if len(cast) >= 2 else [cast[0]]
        n_turns = rng.randint(*spec.turns_per_scene)
        utts = []
        for k in range(n_turns):
            speaker = pair[k % len(pair)]
            partner = frozenset(pair) - {speaker}
            pieces = 2 if rng.random() < spec.split_probability else 1
            for _ in range(pieces):
                clock += rng.randint(*spec.gap_ms)
                dur = rng.randint(*spec.duration_ms)
                utts.append(Utterance(0, 1, speaker, clock, clock + dur, truth_addressees=partner))
                clock += dur
        clock += 5000
        scenes.append(Scene(1, tuple(utts)))
    per_ep = spec.scenes_per_episode or max(1, spec.scene_count)
    episodes = []
    for e, first in enumerate(range(0, max(1, spec.scene_count), per_ep)):
        chunk = scenes[first : first + per_ep]
        episodes.append((Episode(f"E{e + 1:02d}", 1, len(chunk)), chunk))
    return assemble_corpus(f"synthetic-{spec.seed}", episodes)


# ---------------------------------------------------------------------------
# Oracle
# ---------------------------------------------------------------------------


def _h(m: ScenePairMatrix, a: SpeakerId, b: SpeakerId) -> int:
    return m.entries.get((a, b), 0) + m.entries.get((b, a), 0)


def _separate(m: ScenePairMatrix, i: SpeakerId, j: SpeakerId) -> int:
    """sum over k not in {i, j} of h_ik + h_jk, term by term."""
    people = {x for key in m.entries for x in key}
    total = 0
    for k in sorted(people):
        if k in (i, j):
            continue
        total += _h(m, i, k) + _h(m, j, k)
    return total


def oracle_raw_weight(matrices: Sequence[ScenePairMatrix], pair: tuple[SpeakerId, SpeakerId], t: int) -> float:
    """Unnormalized weight in seconds, ``-inf`` for a pair that never talks."""
    i, j = pair
    by_scene = {m.scene_index: m for m in matrices}
    T = max(by_scene, default=0)
    h = {s: _h(by_scene[s], i, j) if s in by_scene else 0 for s in range(1, T + 1)}
    if h[t] > 0:
        return h[t] / 1000
    last = None
    for s in range(t - 1, 0, -1):
        if h[s] > 0:
            last = s
            break
    nxt = None
    for s in range(t + 1, T + 1):
        if h[s] > 0:
            nxt = s
            break
    persistence = anticipation = None
    if last is not None:
        persistence = h[last]
        for s in range(last + 1, t + 1):
            persistence -= _separate(by_scene[s], i, j) if s in by_scene else 0
    if nxt is not None:
        anticipation = h[nxt]
        for s in range(t, nxt):
            anticipation -= _separate(by_scene[s], i, j) if s in by_scene else 0
    if persistence is not None and anticipation is not None:
        return max(persistence, anticipation) / 1000
    if persistence is not None:
        return persistence / 1000
    if anticipation is not None:
        return anticipation / 1000
    return -math.inf


def smoothing_oracle(
    matrices: Sequence[ScenePairMatrix], pair: tuple[SpeakerId, SpeakerId], t: int, lam: float = 0.01
) -> float:
    w = oracle_raw_weight(matrices, pair, t)
    if w == -math.inf:
        return 0.0
    try:
        return 1.0 / (1.0 + math.exp(-lam * w))
    except OverflowError:
        return 0.0


# ---------------------------------------------------------------------------
# Fixtures
# ---------------------------------------------------------------------------


def scene_from_turns(
    turns: Sequence[tuple[SpeakerId, int, int] | SpeakerId],
    truth: Optional[Sequence[Optional[frozenset[SpeakerId]]]] = None,
) -> Scene:
    """Scene 1 of a throwaway corpus, from speakers or (speaker, start, end).

    Bare speaker names get 1 s utterances separated by 0.5 s.
    """
    utts = []
    for k, item in enumerate(turns):
        if isinstance(item, str):
            speaker, start, end = item, k * 1500, k * 1500 + 1000
        else:
            speaker, start, end = item
        utts.append(Utterance(k, 1, speaker, start, end, truth_addressees=truth[k] if truth else None))
    return Scene(1, tuple(utts))


def _dialogue(a: SpeakerId, b: SpeakerId, total_ms: int, offset: int) -> list[Utterance]:
    """Two utterances, a to b then b to a, adding up to ``total_ms``."""
    first = total_ms // 2
    return [
        Utterance(0, 1, a, offset, offset + first, truth_addressees=frozenset({b})),
        Utterance(0, 1, b, offset + first + 500, offset + total_ms + 500, truth_addressees=frozenset({a})),
    ]


def _corpus(series: str, episode: str, scenes: list[list[Utterance]]) -> Corpus:
    return assemble_corpus(series, [(Episode(episode, 1, len(scenes)), [Scene(1, tuple(u)) for u in scenes])])


def fixture_triangle() -> Corpus:
    """Three speakers; scenes 1-2 pair S1-S2, 3-4 pair S1-S3, 5-6 pair S2-S3.

    Every scene is one exchange of two 10 s utterances.
    """
    pattern = [("S1", "S2"), ("S1", "S2"), ("S1", "S3"), ("S1", "S3"), ("S2", "S3"), ("S2", "S3")]
    return _corpus("triangle", "E01", [_dialogue(a, b, 20_000, 60_000 * t) for t, (a, b) in enumerate(pattern)])


FRANCIS = "Francis Underwood"
CLAIRE = "Claire Underwood"


def fixture_four_scenes() -> Corpus:
    """Francis and Claire talk 30 s in scene 1 and 20 s in scene 4.

    In between Claire talks 40 s with a third person (scene 2) and two
    other people talk 50 s (scene 3).
    """
    return _corpus(
        "four-scenes",
        "E01",
        [
            _dialogue(FRANCIS, CLAIRE, 30_000, 0),
            _dialogue(CLAIRE, "Staffer", 40_000, 60_000),
            _dialogue("Reporter", "Editor", 50_000, 120_000),
            _dialogue(CLAIRE, FRANCIS, 20_000, 180_000),
        ],
    )
