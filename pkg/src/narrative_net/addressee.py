"""Rule-based addressee inference and per-scene interaction durations.

Four heuristics guess whom each speech turn is directed at from the
speaker sequence alone:

* R1, surrounded turn: ``x y x`` -> y talks to x.
* R2, boundary turns: the first turn of a scene talks to the second
  speaker, the last turn to the second-to-last one.
* R3A/R3B, local disambiguation of ``a y b`` (three distinct speakers):
  y talks to a if y also spoke just before a but not just after b, and
  symmetrically to b.
* R4, temporal proximity: otherwise y talks to whichever neighbour is
  separated from it by the shorter silence; ties go to the preceding one.

Middle turns are resolved with precedence R1 > R3 > R4, boundary turns by
R2 only. A turn's decision is copied to every utterance it merges.
"""

from __future__ import annotations

import csv
import enum
import os
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .corpus import Corpus, Scene, SpeakerId, Turn, merge_turns


class RuleId(str, enum.Enum):
    R1 = "R1"
    R2 = "R2"
    R3A = "R3A"
    R3B = "R3B"
    R4 = "R4"


NESTED_RULESETS: tuple[frozenset[int], ...] = (
    frozenset({1}),
    frozenset({1, 2}),
    frozenset({1, 2, 3}),
    frozenset({1, 2, 3, 4}),
)
FULL_RULESET = NESTED_RULESETS[-1]


class InvalidRulesetError(ValueError):
    pass


def parse_ruleset(value: str | Iterable[int]) -> frozenset[int]:
    """Accept ``"1"``, ``"12"``, ``"123"``, ``"1234"`` (or ``"1-4"``) or an iterable of ints."""
    if isinstance(value, str):
        token = value.strip()
        if token in ("1-4", "1–4"):
            token = "1234"
        if not token.isdigit():
            raise InvalidRulesetError(f"invalid ruleset {value!r}: expected one of 1, 12, 123, 1234")
        rules = frozenset(int(c) for c in token)
        if len(rules) != len(token):
            raise InvalidRulesetError(f"invalid ruleset {value!r}: repeated rule")
    else:
        rules = frozenset(int(r) for r in value)
    if rules not in NESTED_RULESETS:
        raise InvalidRulesetError(
            f"invalid ruleset {value!r}: rules are applied cumulatively, use one of 1, 12, 123, 1234"
        )
    return rules


def ruleset_label(rules: frozenset[int]) -> str:
    return "".join(str(r) for r in sorted(rules))


@dataclass(frozen=True)
class AddresseeHypothesis:
    utterance_id: int
    addressees: frozenset[SpeakerId]
    rule: Optional[RuleId] = None

    def __post_init__(self):
        if bool(self.addressees) != (self.rule is not None):
            raise ValueError("a rule must be recorded exactly when addressees are assigned")


# Partial assignment over turn positions: index -> (addressee, rule)
Assignment = dict[int, tuple[SpeakerId, RuleId]]


def rule1_surrounded(turns: Sequence[Turn]) -> Assignment:
    out: Assignment = {}
    for m in range(1, len(turns) - 1):
        x = turns[m - 1].speaker
        if x == turns[m + 1].speaker and x != turns[m].speaker:
            out[m] = (x, RuleId.R1)
    return out


def rule2_boundaries(turns: Sequence[Turn], assigned: Optional[Assignment] = None) -> Assignment:
    assigned = assigned or {}
    out: Assignment = {}
    if len(turns) < 2:
        return out
    last = len(turns) - 1
    if 0 not in assigned and turns[1].speaker != turns[0].speaker:
        out[0] = (turns[1].speaker, RuleId.R2)
    if last not in assigned and turns[last - 1].speaker != turns[last].speaker:
        out[last] = (turns[last - 1].speaker, RuleId.R2)
    return out


def _is_ambiguous(turns: Sequence[Turn], m: int) -> bool:
    if m < 1 or m >= len(turns) - 1:
        return False
    return len({turns[m - 1].speaker, turns[m].speaker, turns[m + 1].speaker}) == 3


def rule3_local(turns: Sequence[Turn], m: int) -> Optional[tuple[SpeakerId, RuleId]]:
    if not _is_ambiguous(turns, m):
        return None
    me = turns[m].speaker
    before = m >= 2 and turns[m - 2].speaker == me
    after = m + 2 < len(turns) and turns[m + 2].speaker == me
    if before and not after:
        return turns[m - 1].speaker, RuleId.R3A
    if after and not before:
        return turns[m + 1].speaker, RuleId.R3B
    return None


def rule4_proximity(turns: Sequence[Turn], m: int) -> Optional[tuple[SpeakerId, RuleId]]:
    if not _is_ambiguous(turns, m):
        return None
    # overlapping speech gives negative gaps; clamp to zero
    gap_prev = max(0, turns[m].start - turns[m - 1].end)
    gap_next = max(0, turns[m + 1].start - turns[m].end)
    if gap_prev <= gap_next:
        return turns[m - 1].speaker, RuleId.R4
    return turns[m + 1].speaker, RuleId.R4


def assign_turns(turns: Sequence[Turn], ruleset: frozenset[int]) -> Assignment:
    """Apply the enabled rules to a turn sequence, in precedence order."""
    assigned: Assignment = {}
    if 1 in ruleset:
        assigned.update(rule1_surrounded(turns))
    for m in range(1, len(turns) - 1):
        if m in assigned:
            continue
        decision = None
        if 3 in ruleset:
            decision = rule3_local(turns, m)
        if decision is None and 4 in ruleset:
            decision = rule4_proximity(turns, m)
        if decision is not None:
            assigned[m] = decision
    if 2 in ruleset:
        assigned.update(rule2_boundaries(turns, assigned))
    return assigned


def infer_addressees(scene: Scene, ruleset: str | Iterable[int] = FULL_RULESET) -> list[AddresseeHypothesis]:
    """One hypothesis per utterance of ``scene``, in utterance order."""
    rules = parse_ruleset(ruleset)
    turns = merge_turns(scene)
    assigned = assign_turns(turns, rules)
    hyps = []
    for m, turn in enumerate(turns):
        decision = assigned.get(m)
        for uid in turn.utterance_ids:
            if decision is None:
                hyps.append(AddresseeHypothesis(uid, frozenset()))
            else:
                hyps.append(AddresseeHypothesis(uid, frozenset({decision[0]}), decision[1]))
    return hyps


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("NARRATIVE_NET_THREADS", "1")))
    except ValueError:
        return 1


def infer_corpus(corpus: Corpus, ruleset: str | Iterable[int] = FULL_RULESET) -> dict[int, list[AddresseeHypothesis]]:
    """Hypotheses for every scene, keyed by scene index.

    Scenes are independent; ``NARRATIVE_NET_THREADS`` caps the worker count.
    Results are keyed by scene so ordering never depends on scheduling.
    """
    rules = parse_ruleset(ruleset)
    n = _threads()
    if n > 1 and len(corpus.scenes) > 1:
        with ThreadPoolExecutor(max_workers=n) as pool:
            results = list(pool.map(lambda s: infer_addressees(s, rules), corpus.scenes))
    else:
        results = [infer_addressees(s, rules) for s in corpus.scenes]
    return {s.index: hyps for s, hyps in zip(corpus.scenes, results)}


@dataclass(frozen=True)
class Label:
    """Reference addressees of one utterance; possibly several, possibly none."""

    utterance_id: int
    addressees: frozenset[SpeakerId]


def truth_labels(scene: Scene) -> list[Label]:
    out = []
    for u in scene.utterances:
        if u.truth_addressees is None:
            raise ValueError(f"utterance {u.id} has no ground-truth addressees")
        out.append(Label(u.id, u.truth_addressees))
    return out


# ---------------------------------------------------------------------------
# Interaction aggregation
# ---------------------------------------------------------------------------


def pair_key(a: SpeakerId, b: SpeakerId) -> tuple[SpeakerId, SpeakerId]:
    if a == b:
        raise ValueError(f"self-pair {a!r}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class DirectedInteraction:
    scene_index: int
    source: SpeakerId
    target: SpeakerId
    count: int
    ms: int

    @property
    def seconds(self) -> float:
        return self.ms / 1000


@dataclass(frozen=True)
class ScenePairMatrix:
    """Symmetric interaction durations of one scene.

    Durations are kept in integer milliseconds so that sums are exact;
    :meth:`seconds` converts.
    """

    scene_index: int
    entries: dict[tuple[SpeakerId, SpeakerId], int]

    def ms(self, a: SpeakerId, b: SpeakerId) -> int:
        if a == b:
            return 0
        return self.entries.get(pair_key(a, b), 0)

    def seconds(self, a: SpeakerId, b: SpeakerId) -> float:
        return self.ms(a, b) / 1000

    @property
    def speakers(self) -> set[SpeakerId]:
        return {s for pair in self.entries for s in pair}

    @classmethod
    def from_seconds(cls, scene_index: int, entries: dict) -> "ScenePairMatrix":
        """Build from ``{(a, b): seconds}``; values are rounded to ms."""
        out: dict[tuple[SpeakerId, SpeakerId], int] = {}
        for (a, b), sec in entries.items():
            ms = int(round(sec * 1000))
            if ms < 0:
                raise ValueError("interaction durations must be non-negative")
            if ms:
                key = pair_key(a, b)
                out[key] = out.get(key, 0) + ms
        return cls(scene_index, out)


def directed_interactions(scene: Scene, hyps: Sequence[AddresseeHypothesis | Label]) -> list[DirectedInteraction]:
    by_id = {u.id: u for u in scene.utterances}
    counts: dict[tuple[SpeakerId, SpeakerId], list[int]] = defaultdict(lambda: [0, 0])
    for h in hyps:
        if h.utterance_id not in by_id:
            raise ValueError(f"hypothesis for utterance {h.utterance_id} outside scene {scene.index}")
        u = by_id[h.utterance_id]
        for target in h.addressees:
            c = counts[(u.speaker, target)]
            c[0] += 1
            c[1] += u.duration_ms
    return [
        DirectedInteraction(scene.index, a, b, c, ms)
        for (a, b), (c, ms) in sorted(counts.items())
    ]


def interaction_matrix(scene: Scene, hyps: Sequence[AddresseeHypothesis | Label]) -> ScenePairMatrix:
    """h for every pair: seconds i addressed j plus seconds j addressed i.

    A multi-addressee utterance counts in full towards each addressee.
    """
    entries: dict[tuple[SpeakerId, SpeakerId], int] = {}
    for d in directed_interactions(scene, hyps):
        key = pair_key(d.source, d.target)
        entries[key] = entries.get(key, 0) + d.ms
    return ScenePairMatrix(scene.index, dict(sorted(entries.items())))


def corpus_matrices(corpus: Corpus, hyps: dict[int, list[AddresseeHypothesis]]) -> list[ScenePairMatrix]:
    """One matrix per scene, empty scenes included."""
    return [interaction_matrix(s, hyps.get(s.index, [])) for s in corpus.scenes]


def truth_matrices(corpus: Corpus) -> list[ScenePairMatrix]:
    return [interaction_matrix(s, truth_labels(s)) for s in corpus.scenes]


def coverage(hyps: Iterable[AddresseeHypothesis] | dict[int, list[AddresseeHypothesis]]) -> float:
    """Fraction of utterances that received at least one addressee."""
    if isinstance(hyps, dict):
        hyps = [h for scene_hyps in hyps.values() for h in scene_hyps]
    hyps = list(hyps)
    if not hyps:
        raise ValueError("coverage of an empty corpus is undefined")
    return sum(1 for h in hyps if h.addressees) / len(hyps)


def write_directed_csv(path, rows: Iterable[DirectedInteraction]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["scene", "from", "to", "count", "seconds"])
        for d in rows:
            w.writerow([d.scene_index, d.source, d.target, d.count, f"{d.seconds:.3f}"])
