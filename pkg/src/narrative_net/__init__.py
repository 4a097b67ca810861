"""Dynamic conversational networks of characters from speaker-labelled dialogue."""

from .addressee import (
    AddresseeHypothesis,
    RuleId,
    ScenePairMatrix,
    corpus_matrices,
    coverage,
    infer_addressees,
    infer_corpus,
    interaction_matrix,
    truth_matrices,
)
from .corpus import Corpus, Scene, Utterance, corpus_stats, merge_turns, parse_corpus
from .graphs import (
    BOTTOM,
    SmoothingParams,
    build_cumulative,
    build_cumulative_series,
    build_smoothed_series,
    build_time_slice_series,
    link_weight_series,
    node_strength_series,
)

__version__ = "0.1.0"

__all__ = [
    "AddresseeHypothesis",
    "BOTTOM",
    "Corpus",
    "RuleId",
    "Scene",
    "ScenePairMatrix",
    "SmoothingParams",
    "Utterance",
    "build_cumulative",
    "build_cumulative_series",
    "build_smoothed_series",
    "build_time_slice_series",
    "corpus_matrices",
    "corpus_stats",
    "coverage",
    "infer_addressees",
    "infer_corpus",
    "interaction_matrix",
    "link_weight_series",
    "merge_turns",
    "node_strength_series",
    "parse_corpus",
    "truth_matrices",
]
