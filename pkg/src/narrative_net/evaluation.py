"""Direct (utterance-level) and indirect (network-level) evaluation.

Direct evaluation scores inferred addressees against reference labels as a
multi-label classification. Indirect evaluation builds the cumulative
network from the inferred addressees and from the reference labels and
compares the two: Jaccard index of the edge sets, cosine similarity of the
weight vectors, and Euclidean distance between the unit-normalized weight
vectors.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from .addressee import (
    NESTED_RULESETS,
    AddresseeHypothesis,
    Label,
    coverage,
    infer_corpus,
    interaction_matrix,
    parse_ruleset,
    ruleset_label,
    truth_labels,
)
from .corpus import Corpus, SpeakerId
from .graphs import WeightedGraph, build_cumulative

ALL_UTTERANCES = "all-utterances"
DROP_BOUNDARY = "drop-scene-boundary-utterances"
VARIANTS = (DROP_BOUNDARY, ALL_UTTERANCES)


class UndefinedMetricError(ValueError):
    """A similarity measure was asked of a zero weight vector."""


class MissingGroundTruthError(ValueError):
    pass


@dataclass(frozen=True)
class MultilabelScores:
    recall: float
    precision: float
    fscore: float
    n_items: int
    # utterances whose reference is the null (monologue) label
    n_monologue: int = 0
    monologue_correct: int = 0


def multilabel_scores(
    items: Iterable[tuple[int, frozenset[SpeakerId] | set, Optional[frozenset[SpeakerId] | set]]],
) -> MultilabelScores:
    """Recall, precision and F-score averaged over utterances.

    ``items`` are ``(utterance_id, hypothesis, reference)`` triples. Items
    without a reference are skipped; items whose reference is empty (a
    monologue) are only tallied in the monologue counters. An empty
    hypothesis scores 0 towards recall and is left out of the precision
    average.
    """
    recalls, precisions = [], []
    n_mono = mono_ok = 0
    for _, hyp, ref in items:
        if ref is None:
            continue
        hyp, ref = set(hyp), set(ref)
        if not ref:
            n_mono += 1
            mono_ok += not hyp
            continue
        hit = len(hyp & ref)
        recalls.append(hit / len(ref))
        if hyp:
            precisions.append(hit / len(hyp))
    if not recalls:
        raise ValueError("no scorable utterances (empty set, or only monologues)")
    r = sum(recalls) / len(recalls)
    p = sum(precisions) / len(precisions) if precisions else 0.0
    f = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return MultilabelScores(r, p, f, len(recalls), n_mono, mono_ok)


def network_vectorize(g1: WeightedGraph, g2: WeightedGraph) -> tuple[np.ndarray, np.ndarray]:
    """Align two graphs' weights over the sorted union of their node pairs.

    Only the upper triangle of the adjacency matrix is used; the full
    symmetric concatenation would double every entry, which changes
    neither cosine nor the normalized distance.
    """
    nodes = sorted(g1.nodes | g2.nodes)
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1 :]]
    v1 = np.array([g1.edges.get(p, 0.0) for p in pairs], dtype=float)
    v2 = np.array([g2.edges.get(p, 0.0) for p in pairs], dtype=float)
    return v1, v2


def edge_jaccard(g1: WeightedGraph, g2: WeightedGraph) -> float:
    e1 = {p for p, w in g1.edges.items() if w > 0}
    e2 = {p for p, w in g2.edges.items() if w > 0}
    if not e1 and not e2:
        return 1.0
    return len(e1 & e2) / len(e1 | e2)


def _norm(v: np.ndarray) -> float:
    n = float(np.linalg.norm(v))
    if n == 0:
        raise UndefinedMetricError("similarity undefined for a zero weight vector")
    return n


def cosine_similarity(v1, v2) -> float:
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    return float(np.dot(v1, v2) / (_norm(v1) * _norm(v2)))


def normalized_l2(v1, v2) -> float:
    """Euclidean distance between the two vectors scaled to unit length."""
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    return float(np.linalg.norm(v1 / _norm(v1) - v2 / _norm(v2)))


@dataclass(frozen=True)
class SimilarityReport:
    jaccard: float
    cosine: Optional[float]  # None when undefined (a network without edges)
    l2: Optional[float]
    variant: str


def compare_graphs(estimated: WeightedGraph, truth: WeightedGraph, variant: str = ALL_UTTERANCES) -> SimilarityReport:
    v1, v2 = network_vectorize(estimated, truth)
    try:
        cos, l2 = cosine_similarity(v1, v2), normalized_l2(v1, v2)
    except UndefinedMetricError:
        cos = l2 = None
    return SimilarityReport(edge_jaccard(estimated, truth), cos, l2, variant)


def _boundary_ids(corpus: Corpus) -> set[int]:
    out = set()
    for scene in corpus.scenes:
        if scene.utterances:
            out.add(scene.utterances[0].id)
            out.add(scene.utterances[-1].id)
    return out


def _require_truth(corpus: Corpus) -> None:
    missing = sum(1 for u in corpus.utterances if u.truth_addressees is None)
    if missing:
        raise MissingGroundTruthError(f"{missing} utterance(s) lack ground-truth addressees")


def compare_networks(
    corpus: Corpus,
    ruleset: str | Iterable[int] = NESTED_RULESETS[-1],
    variant: str = ALL_UTTERANCES,
    estimated: Optional[dict[int, Sequence[AddresseeHypothesis | Label]]] = None,
) -> SimilarityReport:
    """Compare the cumulative network from inferred addressees to the reference one.

    ``estimated`` overrides inference with precomputed per-scene
    hypotheses. With the drop-boundary variant the first and last utterance
    of every scene are removed from both sides before aggregation.
    """
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}")
    _require_truth(corpus)
    if estimated is None:
        estimated = infer_corpus(corpus, ruleset)
    drop = _boundary_ids(corpus) if variant == DROP_BOUNDARY else set()
    est_m, ref_m = [], []
    for scene in corpus.scenes:
        est_m.append(interaction_matrix(scene, [h for h in estimated.get(scene.index, []) if h.utterance_id not in drop]))
        ref_m.append(interaction_matrix(scene, [h for h in truth_labels(scene) if h.utterance_id not in drop]))
    speakers = corpus.speakers
    return compare_graphs(build_cumulative(est_m, speakers=speakers), build_cumulative(ref_m, speakers=speakers), variant)


def direct_scores(corpus: Corpus, ruleset: str | Iterable[int]) -> tuple[float, MultilabelScores]:
    """Coverage and multi-label scores of one ruleset against the reference labels."""
    _require_truth(corpus)
    hyps = infer_corpus(corpus, ruleset)
    by_id = {h.utterance_id: h for scene_hyps in hyps.values() for h in scene_hyps}
    items = [(u.id, by_id[u.id].addressees, u.truth_addressees) for u in corpus.utterances]
    return coverage(hyps), multilabel_scores(items)


# ---------------------------------------------------------------------------
# Rule evaluation table
# ---------------------------------------------------------------------------

TABLE_METRICS = (
    "coverage",
    "fscore",
    "precision",
    "recall",
    "jaccard_drop",
    "jaccard_all",
    "cosine_drop",
    "cosine_all",
    "l2_drop",
    "l2_all",
)


def _mean(values: list[Optional[float]]) -> Optional[float]:
    vals = [v for v in values if v is not None and not math.isnan(v)]
    return statistics.fmean(vals) if vals else None


def evaluate_episode(corpus: Corpus, ruleset) -> dict[str, Optional[float]]:
    _require_truth(corpus)
    hyps = infer_corpus(corpus, ruleset)
    by_id = {h.utterance_id: h for scene_hyps in hyps.values() for h in scene_hyps}
    cov = coverage(hyps) if by_id else None
    try:
        scores = multilabel_scores((u.id, by_id[u.id].addressees, u.truth_addressees) for u in corpus.utterances)
    except ValueError:
        scores = MultilabelScores(None, None, None, 0)
    drop = compare_networks(corpus, ruleset, DROP_BOUNDARY, hyps)
    full = compare_networks(corpus, ruleset, ALL_UTTERANCES, hyps)
    return {
        "coverage": cov,
        "fscore": scores.fscore,
        "precision": scores.precision,
        "recall": scores.recall,
        "jaccard_drop": drop.jaccard,
        "jaccard_all": full.jaccard,
        "cosine_drop": drop.cosine,
        "cosine_all": full.cosine,
        "l2_drop": drop.l2,
        "l2_all": full.l2,
    }


def rule_evaluation_table(
    series: dict[str, Corpus], rulesets: Iterable = NESTED_RULESETS
) -> list[dict]:
    """Rows (ruleset, series, metrics...) with a trailing ``Average`` series.

    Metrics are computed per episode, averaged over the episodes of each
    series, then averaged over series. Undefined values (a network with no
    edge) are skipped in the averages.
    """
    rows = []
    for rules in rulesets:
        rules = parse_ruleset(rules)
        per_series = {}
        for name, corpus in series.items():
            episodes = [evaluate_episode(corpus.subset([ep.episode_id]), rules) for ep in corpus.episodes]
            per_series[name] = {k: _mean([e[k] for e in episodes]) for k in TABLE_METRICS}
        for name, vals in per_series.items():
            rows.append({"rules": ruleset_label(rules), "series": name, **vals})
        if len(per_series) > 1:
            avg = {k: _mean([v[k] for v in per_series.values()]) for k in TABLE_METRICS}
            rows.append({"rules": ruleset_label(rules), "series": "Average", **avg})
    return rows
