"""Annotation data model, corpus parsers and descriptive statistics.

A corpus is a chronologically ordered list of scenes, each holding the
speaker-labelled utterances spoken in it. Timestamps are integer
milliseconds relative to the start of their episode. Scene indices are
global: episodes are concatenated in file order and their local scene
numbers renumbered to 1..T.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional

SpeakerId = str

CANONICAL = "canonical"
SRT = "srt"


def normalize_speaker(name: str) -> SpeakerId:
    """Trim a speaker label; raise ValueError when nothing is left."""
    if not isinstance(name, str):
        raise ValueError(f"speaker label must be text, got {type(name).__name__}")
    label = name.strip()
    if not label:
        raise ValueError("empty speaker label")
    return label


@dataclass(frozen=True)
class Diagnostic:
    path: str
    line: int
    message: str
    severity: str = "error"

    def __str__(self) -> str:
        return f"{self.path}:{self.line}: {self.severity}: {self.message}"


class CorpusError(ValueError):
    """Raised when an input corpus fails to parse or validate.

    Every problem found is kept in ``diagnostics`` so callers can print the
    full report rather than only the first failure.
    """

    def __init__(self, diagnostics: list[Diagnostic]):
        self.diagnostics = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))


@dataclass(frozen=True)
class Utterance:
    id: int
    scene_index: int
    speaker: SpeakerId
    start: int  # ms, episode-relative
    end: int  # ms, episode-relative
    episode_id: str = ""
    text: Optional[str] = None
    # None = not annotated; empty frozenset = annotated monologue (null label)
    truth_addressees: Optional[frozenset[SpeakerId]] = None

    def __post_init__(self):
        if self.end <= self.start:
            raise ValueError(f"utterance {self.id}: empty utterance span")
        if self.scene_index < 1:
            raise ValueError(f"utterance {self.id}: scene index must be >= 1")
        if self.truth_addressees is not None and self.speaker in self.truth_addressees:
            raise ValueError(f"utterance {self.id}: speaker listed among own addressees")

    @property
    def duration(self) -> float:
        """Duration in seconds."""
        return (self.end - self.start) / 1000

    @property
    def duration_ms(self) -> int:
        return self.end - self.start


@dataclass(frozen=True)
class Scene:
    index: int
    utterances: tuple[Utterance, ...] = ()
    episode_id: str = ""

    def __post_init__(self):
        if self.index < 1:
            raise ValueError("scene index must be >= 1")
        for u in self.utterances:
            if u.scene_index != self.index:
                raise ValueError(f"utterance {u.id} carries scene {u.scene_index}, not {self.index}")
        starts = [u.start for u in self.utterances]
        if starts != sorted(starts):
            raise ValueError(f"scene {self.index}: utterances not sorted by start")

    @property
    def speakers(self) -> frozenset[SpeakerId]:
        return frozenset(u.speaker for u in self.utterances)


@dataclass(frozen=True)
class Episode:
    episode_id: str
    first_scene: int
    last_scene: int
    duration_ms: Optional[int] = None

    @property
    def scene_range(self) -> range:
        return range(self.first_scene, self.last_scene + 1)


@dataclass(frozen=True)
class Corpus:
    series_id: str
    episodes: tuple[Episode, ...]
    scenes: tuple[Scene, ...]
    speakers: frozenset[SpeakerId] = field(init=False)

    def __post_init__(self):
        for i, scene in enumerate(self.scenes, start=1):
            if scene.index != i:
                raise ValueError(f"scene indices must be consecutive from 1; found {scene.index} at position {i}")
        expected = 1
        for ep in self.episodes:
            if ep.first_scene != expected or ep.last_scene < ep.first_scene - 1:
                raise ValueError(f"episode {ep.episode_id!r}: scene range does not continue the partition")
            expected = ep.last_scene + 1
        if expected != len(self.scenes) + 1:
            raise ValueError("episode scene ranges do not cover every scene")
        speakers = frozenset(u.speaker for s in self.scenes for u in s.utterances)
        object.__setattr__(self, "speakers", speakers)

    @property
    def utterances(self) -> Iterator[Utterance]:
        for scene in self.scenes:
            yield from scene.utterances

    @property
    def scene_count(self) -> int:
        return len(self.scenes)

    def episode_of(self, scene_index: int) -> Episode:
        for ep in self.episodes:
            if ep.first_scene <= scene_index <= ep.last_scene:
                return ep
        raise KeyError(scene_index)

    def subset(self, episode_ids: Iterable[str]) -> "Corpus":
        """Corpus restricted to the given episodes, renumbered from scene 1."""
        wanted = set(episode_ids)
        missing = wanted - {ep.episode_id for ep in self.episodes}
        if missing:
            raise KeyError(f"unknown episode(s): {', '.join(sorted(missing))}")
        return assemble_corpus(
            self.series_id,
            [
                (ep, [self.scenes[i - 1] for i in ep.scene_range])
                for ep in self.episodes
                if ep.episode_id in wanted
            ],
        )

    @property
    def has_truth(self) -> bool:
        """True when every utterance carries a ground-truth addressee label."""
        return all(u.truth_addressees is not None for u in self.utterances)


@dataclass(frozen=True)
class Turn:
    speaker: SpeakerId
    utterance_ids: tuple[int, ...]
    start: int
    end: int


def merge_turns(scene: Scene | Iterable[Utterance]) -> list[Turn]:
    """Collapse runs of consecutive same-speaker utterances into turns."""
    utterances = scene.utterances if isinstance(scene, Scene) else list(scene)
    turns: list[Turn] = []
    for u in utterances:
        if turns and turns[-1].speaker == u.speaker:
            last = turns[-1]
            turns[-1] = Turn(last.speaker, last.utterance_ids + (u.id,), last.start, max(last.end, u.end))
        else:
            turns.append(Turn(u.speaker, (u.id,), u.start, u.end))
    return turns


def assemble_corpus(series_id: str, episodes: list[tuple[Episode, list[Scene]]]) -> Corpus:
    """Concatenate per-episode scene lists, renumbering scenes and utterance ids.

    Each entry pairs an episode (its scene range is recomputed) with that
    episode's scenes in local order.
    """
    out_eps: list[Episode] = []
    out_scenes: list[Scene] = []
    next_uid = 0
    for ep, scenes in episodes:
        first = len(out_scenes) + 1
        for scene in scenes:
            index = len(out_scenes) + 1
            utts = []
            for u in scene.utterances:
                utts.append(
                    Utterance(
                        id=next_uid,
                        scene_index=index,
                        speaker=u.speaker,
                        start=u.start,
                        end=u.end,
                        episode_id=ep.episode_id,
                        text=u.text,
                        truth_addressees=u.truth_addressees,
                    )
                )
                next_uid += 1
            out_scenes.append(Scene(index, tuple(utts), ep.episode_id))
        out_eps.append(Episode(ep.episode_id, first, len(out_scenes), ep.duration_ms))
    return Corpus(series_id, tuple(out_eps), tuple(out_scenes))


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------


@dataclass
class _RawUtt:
    line: int
    local_scene: int
    speaker: str
    start: int
    end: int
    text: Optional[str]
    addressees: Optional[frozenset[str]]


@dataclass
class _RawEpisode:
    episode_id: str
    duration_ms: Optional[int] = None
    scene_count: Optional[int] = None
    utts: list[_RawUtt] = field(default_factory=list)


def _int_field(rec: dict, key: str, required: bool = True) -> Optional[int]:
    if key not in rec or rec[key] is None:
        if required:
            raise ValueError(f"missing field {key!r}")
        return None
    value = rec[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValueError(f"field {key!r} must be an integer")
    return value


def _build_episodes(
    path: str, series_id: str, raw_eps: list[_RawEpisode], diags: list[Diagnostic]
) -> Corpus:
    """Validate raw per-episode records and assemble the corpus."""
    built: list[tuple[Episode, list[Scene]]] = []
    for rep in raw_eps:
        top = max((u.local_scene for u in rep.utts), default=0)
        n_scenes = rep.scene_count if rep.scene_count is not None else top
        by_scene: dict[int, list[_RawUtt]] = {k: [] for k in range(1, n_scenes + 1)}
        for u in rep.utts:
            if u.local_scene > n_scenes:
                diags.append(
                    Diagnostic(path, u.line, f"utterance references unknown scene {u.local_scene} of episode {rep.episode_id!r}")
                )
                continue
            by_scene[u.local_scene].append(u)
        prev_start = None
        scenes: list[Scene] = []
        for k in range(1, n_scenes + 1):
            utts = sorted(by_scene[k], key=lambda r: (r.start, r.end, r.line))
            if utts:
                if prev_start is not None and utts[0].start < prev_start:
                    diags.append(
                        Diagnostic(
                            path,
                            utts[0].line,
                            f"non-monotone scene timestamps in episode {rep.episode_id!r}: "
                            f"scene {k} starts at {utts[0].start} ms, before the previous scene ({prev_start} ms)",
                        )
                    )
                prev_start = utts[0].start
            # ids and global indices are assigned by assemble_corpus
            scenes.append(
                Scene(
                    1,
                    tuple(
                        Utterance(0, 1, u.speaker, u.start, u.end, rep.episode_id, u.text, u.addressees)
                        for u in utts
                    ),
                    rep.episode_id,
                )
            )
        built.append((Episode(rep.episode_id, 1, n_scenes, rep.duration_ms), scenes))
    if diags:
        raise CorpusError(diags)
    return assemble_corpus(series_id, built)


def parse_canonical_lines(lines: Iterable[str], path: str = "<input>") -> Corpus:
    """Parse canonical newline-delimited JSON records.

    Utterance records carry ``episode_id, scene_index, speaker, start_ms,
    end_ms`` and optionally ``addressees`` (list; ``[]`` marks a monologue)
    and ``text``. Two metadata record kinds are recognised through a
    ``record`` key: ``"corpus"`` (``series_id``) and ``"episode"``
    (``episode_id`` with optional ``duration_ms`` and ``scene_count``).
    Blank lines and lines starting with ``#`` are ignored.
    """
    diags: list[Diagnostic] = []
    series_id = ""
    episodes: dict[str, _RawEpisode] = {}

    def episode(eid: str) -> _RawEpisode:
        if eid not in episodes:
            episodes[eid] = _RawEpisode(eid)
        return episodes[eid]

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            diags.append(Diagnostic(path, lineno, f"malformed record: {exc.msg}"))
            continue
        if not isinstance(rec, dict):
            diags.append(Diagnostic(path, lineno, "malformed record: expected a JSON object"))
            continue
        kind = rec.get("record", "utterance")
        try:
            if kind == "corpus":
                series_id = str(rec.get("series_id", ""))
            elif kind == "episode":
                if "episode_id" not in rec:
                    raise ValueError("missing field 'episode_id'")
                ep = episode(str(rec["episode_id"]))
                ep.duration_ms = _int_field(rec, "duration_ms", required=False)
                ep.scene_count = _int_field(rec, "scene_count", required=False)
                if ep.scene_count is not None and ep.scene_count < 0:
                    raise ValueError("scene_count must be >= 0")
            elif kind == "utterance":
                if "episode_id" not in rec:
                    raise ValueError("missing field 'episode_id'")
                scene = _int_field(rec, "scene_index")
                if scene < 1:
                    raise ValueError("scene_index must be >= 1")
                speaker = normalize_speaker(rec.get("speaker", ""))
                start = _int_field(rec, "start_ms")
                end = _int_field(rec, "end_ms")
                if end == start:
                    raise ValueError("empty utterance span")
                if end < start:
                    raise ValueError("empty utterance span (end_ms before start_ms)")
                addressees = None
                if "addressees" in rec and rec["addressees"] is not None:
                    if not isinstance(rec["addressees"], list):
                        raise ValueError("field 'addressees' must be a list")
                    addressees = frozenset(normalize_speaker(a) for a in rec["addressees"])
                    if speaker in addressees:
                        raise ValueError(f"speaker {speaker!r} listed among own addressees")
                text = rec.get("text")
                if text is not None and not isinstance(text, str):
                    raise ValueError("field 'text' must be a string")
                episode(str(rec["episode_id"])).utts.append(
                    _RawUtt(lineno, scene, speaker, start, end, text, addressees)
                )
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except ValueError as exc:
            msg = str(exc)
            if not msg.startswith("empty utterance span"):
                msg = f"malformed record: {msg}"
            diags.append(Diagnostic(path, lineno, msg))
    if diags:
        raise CorpusError(diags)
    return _build_episodes(path, series_id, list(episodes.values()), diags)


_SRT_TIME = re.compile(r"^\s*(\d{1,2}):(\d{2}):(\d{2})[,.](\d{3})\s*-->\s*(\d{1,2}):(\d{2}):(\d{2})[,.](\d{3})")
_SPEAKER_PREFIX = re.compile(r"^\s*([^:]+?)\s*:\s*(.*)$", re.S)


def _srt_ms(h: str, m: str, s: str, ms: str) -> int:
    return ((int(h) * 60 + int(m)) * 60 + int(s)) * 1000 + int(ms)


def read_scene_sidecar(path: str | Path) -> dict[str, list[tuple[int, int]]]:
    """Read ``episode_id<TAB>scene_start_ms`` lines.

    Returns, per episode, the list of (scene start, line number) pairs in
    file order.
    """
    path = Path(path)
    out: dict[str, list[tuple[int, int]]] = {}
    diags = []
    with path.open(encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[1].strip().lstrip("-").isdigit():
                diags.append(Diagnostic(str(path), lineno, "malformed record: expected 'episode_id<TAB>scene_start_ms'"))
                continue
            out.setdefault(parts[0].strip(), []).append((int(parts[1]), lineno))
    for eid, starts in out.items():
        for (prev, _), (cur, lineno) in zip(starts, starts[1:]):
            if cur <= prev:
                diags.append(Diagnostic(str(path), lineno, f"non-monotone scene timestamps in episode {eid!r}"))
    if diags:
        raise CorpusError(diags)
    return out


def _srt_blocks(text: str) -> Iterator[tuple[int, list[str]]]:
    """Yield (first line number, lines) for each blank-line separated block."""
    block: list[str] = []
    first = 0
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            if not block:
                first = lineno
            block.append(line)
        elif block:
            yield first, block
            block = []
    if block:
        yield first, block


def parse_srt_episode(
    path: str | Path, scene_starts: list[tuple[int, int]], episode_id: Optional[str] = None
) -> tuple[_RawEpisode, list[Diagnostic]]:
    path = Path(path)
    eid = episode_id or path.stem
    rep = _RawEpisode(eid, scene_count=len(scene_starts))
    diags: list[Diagnostic] = []
    starts = [s for s, _ in scene_starts]
    text = path.read_text(encoding="utf-8-sig")
    for first, lines in _srt_blocks(text):
        if lines[0].strip().isdigit():
            lines = lines[1:]
            first += 1
        if not lines:
            diags.append(Diagnostic(str(path), first, "malformed record: subtitle block without timing line"))
            continue
        m = _SRT_TIME.match(lines[0])
        if not m:
            diags.append(Diagnostic(str(path), first, "malformed record: expected 'HH:MM:SS,mmm --> HH:MM:SS,mmm'"))
            continue
        start = _srt_ms(*m.group(1, 2, 3, 4))
        end = _srt_ms(*m.group(5, 6, 7, 8))
        if end <= start:
            diags.append(Diagnostic(str(path), first, "empty utterance span"))
            continue
        body = " ".join(ln.strip() for ln in lines[1:])
        pm = _SPEAKER_PREFIX.match(body)
        if not pm:
            diags.append(Diagnostic(str(path), first + 1, "malformed record: subtitle text lacks a 'SPEAKER: ' prefix"))
            continue
        # scene = last declared scene starting at or before the utterance
        local = 0
        for k, s in enumerate(starts, start=1):
            if s <= start:
                local = k
            else:
                break
        if local == 0:
            diags.append(
                Diagnostic(str(path), first, f"utterance references unknown scene: starts at {start} ms, before the first scene of episode {eid!r}")
            )
            continue
        utext = pm.group(2).strip() or None
        rep.utts.append(_RawUtt(first, local, pm.group(1).strip(), start, end, utext, None))
    return rep, diags


def parse_corpus(
    path: str | Path | Iterable[str | Path],
    format: str = CANONICAL,
    scenes: Optional[str | Path] = None,
    series_id: str = "",
) -> Corpus:
    """Parse and validate a corpus file.

    ``format`` is ``"canonical"`` (newline-delimited JSON records) or
    ``"srt"``. The SRT path needs ``scenes``, the sidecar listing scene
    start times; each SRT file is one episode named after its stem. Several
    paths may be passed; their episodes are concatenated in argument order.
    Raises :class:`CorpusError` carrying one diagnostic per problem.
    """
    paths = [Path(path)] if isinstance(path, (str, Path)) else [Path(p) for p in path]
    if format == CANONICAL:
        if len(paths) == 1:
            with paths[0].open(encoding="utf-8") as fh:
                return parse_canonical_lines(fh, str(paths[0]))
        parts = [parse_corpus(p, CANONICAL) for p in paths]
        return concat_corpora(parts, series_id or parts[0].series_id)
    if format == SRT:
        if scenes is None:
            raise ValueError("SRT input needs a scene sidecar file")
        sidecar = read_scene_sidecar(scenes)
        raw_eps = []
        diags: list[Diagnostic] = []
        for p in paths:
            eid = p.stem
            if eid not in sidecar:
                diags.append(Diagnostic(str(scenes), 0, f"no scenes declared for episode {eid!r}"))
                continue
            rep, d = parse_srt_episode(p, sidecar[eid], eid)
            raw_eps.append(rep)
            diags.extend(d)
        if diags:
            raise CorpusError(diags)
        return _build_episodes(",".join(str(p) for p in paths), series_id, raw_eps, diags)
    raise ValueError(f"unknown corpus format {format!r}")


def concat_corpora(parts: list[Corpus], series_id: str = "") -> Corpus:
    return assemble_corpus(
        series_id,
        [(ep, [c.scenes[i - 1] for i in ep.scene_range]) for c in parts for ep in c.episodes],
    )


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def iter_canonical_records(corpus: Corpus) -> Iterator[dict]:
    if corpus.series_id:
        yield {"record": "corpus", "series_id": corpus.series_id}
    for ep in corpus.episodes:
        rec = {"record": "episode", "episode_id": ep.episode_id, "scene_count": ep.last_scene - ep.first_scene + 1}
        if ep.duration_ms is not None:
            rec["duration_ms"] = ep.duration_ms
        yield rec
        for index in ep.scene_range:
            for u in corpus.scenes[index - 1].utterances:
                rec = {
                    "episode_id": ep.episode_id,
                    "scene_index": index - ep.first_scene + 1,
                    "speaker": u.speaker,
                    "start_ms": u.start,
                    "end_ms": u.end,
                }
                if u.truth_addressees is not None:
                    rec["addressees"] = sorted(u.truth_addressees)
                if u.text is not None:
                    rec["text"] = u.text
                yield rec


def dumps_canonical(corpus: Corpus) -> str:
    return "".join(json.dumps(r, ensure_ascii=False) + "\n" for r in iter_canonical_records(corpus))


def write_canonical(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(dumps_canonical(corpus), encoding="utf-8")


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def speakers_per_scene_distribution(corpus: Corpus) -> dict[int, float]:
    """Share of utterances spoken in scenes with exactly ``n`` distinct speakers.

    Weighting by utterances rather than scenes keeps long multi-party scenes
    from being under-represented.
    """
    counts: Counter[int] = Counter()
    for scene in corpus.scenes:
        if scene.utterances:
            counts[len(scene.speakers)] += len(scene.utterances)
    total = sum(counts.values())
    if total == 0:
        raise ValueError("empty corpus: no utterances")
    return {n: c / total for n, c in sorted(counts.items())}


@dataclass(frozen=True)
class CorpusStats:
    episode_count: int
    total_duration_ms: Optional[int]
    speech_seconds: float
    speech_coverage: Optional[float]
    utterance_count: int
    scene_count: int
    spoken_scene_proportion: float
    speakers_per_scene_mean: float
    speakers_per_scene_std: float
    speaker_occurrences: int
    speaker_count: int

    def rows(self) -> list[tuple[str, str]]:
        def fmt(x):
            return "unavailable" if x is None else f"{x:.5g}"

        dur = self.total_duration_ms
        return [
            ("episodes", str(self.episode_count)),
            ("total duration (h:mm:ss)", "unavailable" if dur is None else _hms(dur)),
            ("speech coverage", fmt(self.speech_coverage)),
            ("utterances", str(self.utterance_count)),
            ("speakers", str(self.speaker_count)),
            ("speaker occurrences", str(self.speaker_occurrences)),
            ("scenes", str(self.scene_count)),
            ("spoken scene proportion", fmt(self.spoken_scene_proportion)),
            ("speakers per scene (mean)", fmt(self.speakers_per_scene_mean)),
            ("speakers per scene (std)", fmt(self.speakers_per_scene_std)),
        ]


def _hms(ms: int) -> str:
    s = ms // 1000
    return f"{s // 3600}:{s % 3600 // 60:02d}:{s % 60:02d}"


def corpus_stats(corpus: Corpus) -> CorpusStats:
    """Descriptive statistics of a corpus.

    Speakers-per-scene mean and (population) standard deviation are taken
    over spoken scenes only. Speech coverage needs every episode duration.
    """
    n_scenes = corpus.scene_count
    per_scene = [len(s.speakers) for s in corpus.scenes if s.utterances]
    speech_ms = sum(u.duration_ms for u in corpus.utterances)
    durations = [ep.duration_ms for ep in corpus.episodes]
    total = sum(durations) if corpus.episodes and all(d is not None for d in durations) else None
    coverage = speech_ms / total if total else None
    if per_scene:
        mean = sum(per_scene) / len(per_scene)
        std = math.sqrt(sum((x - mean) ** 2 for x in per_scene) / len(per_scene))
    else:
        mean = std = 0.0
    return CorpusStats(
        episode_count=len(corpus.episodes),
        total_duration_ms=total,
        speech_seconds=speech_ms / 1000,
        speech_coverage=coverage,
        utterance_count=sum(len(s.utterances) for s in corpus.scenes),
        scene_count=n_scenes,
        spoken_scene_proportion=len(per_scene) / n_scenes if n_scenes else 0.0,
        speakers_per_scene_mean=mean,
        speakers_per_scene_std=std,
        speaker_occurrences=sum(per_scene),
        speaker_count=len(corpus.speakers),
    )
