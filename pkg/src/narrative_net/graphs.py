"""Cumulative, time-slice and narrative-smoothed conversational networks.

All builders take one :class:`ScenePairMatrix` per scene (scenes 1..T, in
order) and work on integer milliseconds internally; weights are exposed in
seconds or, for the smoothed view, as sigmoid-normalized values in [0, 1].

Narrative smoothing gives every relationship a weight at every scene. When
the pair talks in scene t the weight is the time they spent talking. In
between, the last (or next) interaction is discounted by the time either
character has since (or meanwhile) spent talking with third parties:

    persistence(t)  = h(l) - sum_{l < t' <= t} d(t')
    anticipation(t) = h(n) - sum_{t <= t' < n} d(t')

where l < t < n are the surrounding occurrences and d(t') the pair's
separate conversational time in scene t'. The weight is the larger of the
two when both exist, the single one otherwise, and bottom (mapped to 0 by
the sigmoid) for a pair that never talks.
"""

from __future__ import annotations

import difflib
import math
from dataclasses import dataclass, field
from itertools import accumulate
from typing import Iterable, Optional, Sequence

from .addressee import ScenePairMatrix, pair_key
from .corpus import SpeakerId

Pair = tuple[SpeakerId, SpeakerId]

SECONDS = "seconds"
NORMALIZED = "normalized"

CUMULATIVE = "cumulative-prefix"
TIME_SLICE = "time-slice"
SMOOTHING = "narrative-smoothing"

DEFAULT_LAMBDA = 0.01


class _Bottom:
    """The -inf weight of a relationship with no past and no future.

    Kept out of arithmetic on purpose: only :func:`normalize_weight`
    consumes it.
    """

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BOTTOM"

    def __float__(self) -> float:
        return -math.inf


BOTTOM = _Bottom()


class UnknownSpeakerError(KeyError):
    def __init__(self, name: str, known: Iterable[str]):
        self.name = name
        self.suggestions = difflib.get_close_matches(name, sorted(known), n=3, cutoff=0.5)
        msg = f"unknown character {name!r}"
        if self.suggestions:
            msg += f"; did you mean: {', '.join(self.suggestions)}?"
        super().__init__(msg)

    def __str__(self) -> str:
        return self.args[0]


@dataclass(frozen=True)
class WeightedGraph:
    nodes: frozenset[SpeakerId]
    edges: dict[Pair, float]
    scheme: str = SECONDS

    def __post_init__(self):
        for (a, b), w in self.edges.items():
            if a == b:
                raise ValueError(f"self-loop on {a!r}")
            if not a < b:
                raise ValueError(f"edge key {(a, b)!r} is not in canonical order")
            if a not in self.nodes or b not in self.nodes:
                raise ValueError(f"edge {(a, b)!r} references a missing node")
            if w < 0 or (self.scheme == NORMALIZED and w > 1):
                raise ValueError(f"edge {(a, b)!r} weight {w} out of range for scheme {self.scheme}")

    def weight(self, a: SpeakerId, b: SpeakerId) -> float:
        return self.edges.get(pair_key(a, b), 0.0)

    def strength(self, node: SpeakerId) -> float:
        return sum(w for (a, b), w in self.edges.items() if node in (a, b))

    def to_networkx(self):
        import networkx as nx

        g = nx.Graph()
        g.add_nodes_from(sorted(self.nodes))
        for (a, b), w in self.edges.items():
            g.add_edge(a, b, weight=w)
        return g


@dataclass(frozen=True)
class DynamicGraphSeries:
    snapshots: tuple[tuple[int, WeightedGraph], ...]
    method: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        idx = [t for t, _ in self.snapshots]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("snapshot scene indices must be strictly increasing")

    @property
    def nodes(self) -> frozenset[SpeakerId]:
        return frozenset().union(*(g.nodes for _, g in self.snapshots)) if self.snapshots else frozenset()

    @property
    def scheme(self) -> str:
        return self.snapshots[0][1].scheme if self.snapshots else SECONDS

    def __len__(self) -> int:
        return len(self.snapshots)


def _check_matrices(matrices: Sequence[ScenePairMatrix]) -> None:
    for i, m in enumerate(matrices, start=1):
        if m.scene_index != i:
            raise ValueError(f"expected one matrix per scene from 1; got scene {m.scene_index} at position {i}")


def _speaker_set(matrices: Sequence[ScenePairMatrix], speakers: Optional[Iterable[SpeakerId]]) -> frozenset[SpeakerId]:
    nodes = set(speakers or ())
    for m in matrices:
        nodes |= m.speakers
    return frozenset(nodes)


def _graph_from_ms(nodes: frozenset[SpeakerId], totals: dict[Pair, int]) -> WeightedGraph:
    return WeightedGraph(nodes, {p: ms / 1000 for p, ms in sorted(totals.items()) if ms > 0}, SECONDS)


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def build_cumulative(
    matrices: Sequence[ScenePairMatrix],
    upto: Optional[int] = None,
    speakers: Optional[Iterable[SpeakerId]] = None,
) -> WeightedGraph:
    """Static graph summing every interaction of scenes 1..upto (default: all)."""
    _check_matrices(matrices)
    upto = len(matrices) if upto is None else upto
    totals: dict[Pair, int] = {}
    for m in matrices[:upto]:
        for p, ms in m.entries.items():
            totals[p] = totals.get(p, 0) + ms
    return _graph_from_ms(_speaker_set(matrices, speakers), totals)


def build_cumulative_series(
    matrices: Sequence[ScenePairMatrix], speakers: Optional[Iterable[SpeakerId]] = None
) -> DynamicGraphSeries:
    """Prefix-cumulative graph after every scene."""
    _check_matrices(matrices)
    nodes = _speaker_set(matrices, speakers)
    totals: dict[Pair, int] = {}
    snaps = []
    for m in matrices:
        for p, ms in m.entries.items():
            totals[p] = totals.get(p, 0) + ms
        snaps.append((m.scene_index, _graph_from_ms(nodes, totals)))
    return DynamicGraphSeries(tuple(snaps), CUMULATIVE, {})


def build_time_slice_series(
    matrices: Sequence[ScenePairMatrix],
    window: int,
    stride: int = 1,
    speakers: Optional[Iterable[SpeakerId]] = None,
) -> DynamicGraphSeries:
    """Trailing-window aggregation: snapshot t sums scenes max(1, t-W+1)..t.

    Snapshots are taken at t = 1, 1 + stride, 1 + 2*stride, ...
    """
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    _check_matrices(matrices)
    nodes = _speaker_set(matrices, speakers)
    snaps = []
    for t in range(1, len(matrices) + 1, stride):
        totals: dict[Pair, int] = {}
        for m in matrices[max(0, t - window) : t]:
            for p, ms in m.entries.items():
                totals[p] = totals.get(p, 0) + ms
        snaps.append((t, _graph_from_ms(nodes, totals)))
    return DynamicGraphSeries(tuple(snaps), TIME_SLICE, {"window": window, "stride": stride})


# ---------------------------------------------------------------------------
# Narrative smoothing
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SmoothingParams:
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lambda must be > 0")


@dataclass(frozen=True)
class PairTimeline:
    """Everything narrative smoothing needs to know about one pair.

    ``h`` and ``d`` are indexed by scene (index 0 unused) and hold integer
    milliseconds: ``h[t]`` the pair's joint interaction, ``d[t]`` the time
    the two characters spent talking with anybody else.
    """

    pair: Pair
    occurrences: tuple[int, ...]
    h: tuple[int, ...]
    d: tuple[int, ...]
    # prefix sums of d: cum_d[t] = d[1] + ... + d[t]
    cum_d: tuple[int, ...] = field(repr=False, default=())

    @property
    def scene_count(self) -> int:
        return len(self.h) - 1

    def last_before(self, t: int) -> Optional[int]:
        prior = [s for s in self.occurrences if s < t]
        return prior[-1] if prior else None

    def next_after(self, t: int) -> Optional[int]:
        for s in self.occurrences:
            if s > t:
                return s
        return None


def _node_totals(matrices: Sequence[ScenePairMatrix]) -> list[dict[SpeakerId, int]]:
    totals: list[dict[SpeakerId, int]] = [{}]
    for m in matrices:
        per: dict[SpeakerId, int] = {}
        for (a, b), ms in m.entries.items():
            per[a] = per.get(a, 0) + ms
            per[b] = per.get(b, 0) + ms
        totals.append(per)
    return totals


def _timeline(pair: Pair, matrices: Sequence[ScenePairMatrix], node_totals: list[dict[SpeakerId, int]]) -> PairTimeline:
    a, b = pair
    h = [0] + [m.entries.get(pair, 0) for m in matrices]
    d = [0] + [
        node_totals[t].get(a, 0) + node_totals[t].get(b, 0) - 2 * h[t] for t in range(1, len(matrices) + 1)
    ]
    occ = tuple(t for t in range(1, len(h)) if h[t] > 0)
    return PairTimeline(pair, occ, tuple(h), tuple(d), tuple(accumulate(d)))


def pair_timeline(matrices: Sequence[ScenePairMatrix], a: SpeakerId, b: SpeakerId) -> PairTimeline:
    _check_matrices(matrices)
    return _timeline(pair_key(a, b), matrices, _node_totals(matrices))


def _persistence_ms(tl: PairTimeline, t: int, l: int) -> int:
    return tl.h[l] - (tl.cum_d[t] - tl.cum_d[l])


def _anticipation_ms(tl: PairTimeline, t: int, n: int) -> int:
    return tl.h[n] - (tl.cum_d[n - 1] - tl.cum_d[t - 1])


def narrative_persistence(tl: PairTimeline, t: int) -> Optional[float]:
    """Last interaction minus separate talk since then, in seconds; None without a past."""
    l = tl.last_before(t)
    return None if l is None else _persistence_ms(tl, t, l) / 1000


def narrative_anticipation(tl: PairTimeline, t: int) -> Optional[float]:
    """Next interaction minus separate talk until then, in seconds; None without a future."""
    n = tl.next_after(t)
    return None if n is None else _anticipation_ms(tl, t, n) / 1000


def _weight_ms(tl: PairTimeline, t: int, l: Optional[int], n: Optional[int]) -> int | _Bottom:
    if tl.h[t] > 0:
        return tl.h[t]
    if l is not None and n is not None:
        return max(_persistence_ms(tl, t, l), _anticipation_ms(tl, t, n))
    if l is not None:
        return _persistence_ms(tl, t, l)
    if n is not None:
        return _anticipation_ms(tl, t, n)
    return BOTTOM


def instantaneous_weight(tl: PairTimeline, t: int) -> float | _Bottom:
    """Unnormalized weight of the pair at scene t, in seconds (or BOTTOM)."""
    if not 1 <= t <= tl.scene_count:
        raise ValueError(f"scene {t} outside 1..{tl.scene_count}")
    w = _weight_ms(tl, t, tl.last_before(t), tl.next_after(t))
    return w if w is BOTTOM else w / 1000


def normalize_weight(w: float | _Bottom, params: SmoothingParams | float = SmoothingParams()) -> float:
    """Sigmoid squashing 1 / (1 + exp(-lambda * w)); bottom maps to 0."""
    lam = params.lam if isinstance(params, SmoothingParams) else float(params)
    if lam <= 0:
        raise ValueError("lambda must be > 0")
    if w is BOTTOM or w == -math.inf:
        return 0.0
    try:
        return 1.0 / (1.0 + math.exp(-lam * w))
    except OverflowError:
        return 0.0


def instantaneous_weights(tl: PairTimeline) -> list[float | _Bottom]:
    """Raw weights for scenes 1..T in one sweep over the occurrences."""
    out: list[float | _Bottom] = []
    occ = tl.occurrences
    k = 0  # index of the first occurrence >= t
    for t in range(1, tl.scene_count + 1):
        while k < len(occ) and occ[k] < t:
            k += 1
        l = occ[k - 1] if k > 0 else None
        # when occ[k] == t the pair is active and l, n are not consulted
        n = occ[k] if k < len(occ) else None
        w = _weight_ms(tl, t, l, n)
        out.append(w if w is BOTTOM else w / 1000)
    return out


def build_smoothed_series(
    matrices: Sequence[ScenePairMatrix],
    params: SmoothingParams | float = SmoothingParams(),
    speakers: Optional[Iterable[SpeakerId]] = None,
) -> DynamicGraphSeries:
    """Dense narrative-smoothed series: one normalized snapshot per scene.

    Every pair that talks at least once is present in every snapshot;
    pairs that never talk are left out (their weight would be 0).
    """
    if not isinstance(params, SmoothingParams):
        params = SmoothingParams(float(params))
    _check_matrices(matrices)
    nodes = _speaker_set(matrices, speakers)
    totals = _node_totals(matrices)
    pairs = sorted({p for m in matrices for p, ms in m.entries.items() if ms > 0})
    columns = {p: [normalize_weight(w, params) for w in instantaneous_weights(_timeline(p, matrices, totals))] for p in pairs}
    snaps = tuple(
        (t, WeightedGraph(nodes, {p: columns[p][t - 1] for p in pairs}, NORMALIZED))
        for t in range(1, len(matrices) + 1)
    )
    return DynamicGraphSeries(snaps, SMOOTHING, {"lambda": params.lam})


def raw_weight_columns(matrices: Sequence[ScenePairMatrix]) -> dict[Pair, list[float | _Bottom]]:
    """Unnormalized smoothed weights per pair, for analyses in seconds."""
    _check_matrices(matrices)
    totals = _node_totals(matrices)
    pairs = sorted({p for m in matrices for p, ms in m.entries.items() if ms > 0})
    return {p: instantaneous_weights(_timeline(p, matrices, totals)) for p in pairs}


# ---------------------------------------------------------------------------
# Time series
# ---------------------------------------------------------------------------


def node_strength_series(series: DynamicGraphSeries, who: SpeakerId) -> list[tuple[int, float]]:
    """Sum of incident edge weights of ``who`` in every snapshot."""
    if who not in series.nodes:
        raise UnknownSpeakerError(who, series.nodes)
    return [(t, g.strength(who)) for t, g in series.snapshots]


def link_weight_series(series: DynamicGraphSeries, a: SpeakerId, b: SpeakerId) -> list[tuple[int, float]]:
    for name in (a, b):
        if name not in series.nodes:
            raise UnknownSpeakerError(name, series.nodes)
    return [(t, g.weight(a, b)) for t, g in series.snapshots]
