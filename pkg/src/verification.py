"""
Verification harness for wavguard.

Builds labelled synthetic corpora, scores them with a collapse statistic and
sweeps a threshold to obtain false-accept / false-reject rates and the equal
error rate.

False accept: a collapsed item that is not flagged.
False reject: a clean item that is flagged.
An item is flagged when its score is strictly above the threshold.
"""

import json
import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from .detector import DEFAULT_SEG_LEN, max_pow_statistic, segment_statistics
from .envelope import EnvelopeParams
from .generators.faulty import CollapseKind, CollapsePlan, faulty_generate
from .signal_core import DEFAULT_SAMPLE_RATE, SegmentSpec, Waveform, segments_of
from .wav_io import read_wav, write_wav

logger = logging.getLogger(__name__)

DEFAULT_GRID_POINTS = 200
LABELS_FILE = "labels.json"
CORPUS_SCHEMA = 1

# region placement inside its host segment
REGION_LEAD = 200
REGION_TAIL = 500


class Level:
    SEGMENT = "segment"
    UTTERANCE = "utterance"
    ALL = (SEGMENT, UTTERANCE)


@dataclass(frozen=True)
class CollapseRegion:
    span: SegmentSpec
    kind: CollapseKind

    def to_dict(self) -> dict:
        return {"start": self.span.start, "length": self.span.length, "kind": self.kind.value}


def label_segments(total: int, seg_len: int, regions: Sequence[CollapseRegion]) -> list[CollapseKind]:
    """
    Per-segment ground truth.

    A segment is collapsed when its overlap with an injected region exceeds
    10% of the region or 200 samples, whichever is smaller.
    """
    labels = []
    for seg in [SegmentSpec(s, min(seg_len, total - s)) for s in range(0, total, seg_len)]:
        label = CollapseKind.CLEAN
        for region in regions:
            if seg.overlap(region.span) > min(0.1 * region.span.length, 200):
                label = region.kind
                break
        labels.append(label)
    return labels


@dataclass(eq=False)
class LabeledPair:
    name: str
    candidate: Waveform
    reference: Waveform
    kind: CollapseKind
    regions: list[CollapseRegion] = field(default_factory=list)
    seg_len: int = DEFAULT_SEG_LEN
    segment_labels: list[CollapseKind] = field(init=False)

    def __post_init__(self):
        if len(self.candidate) != len(self.reference):
            raise ValueError(
                f"{self.name}: candidate has {len(self.candidate)} samples, "
                f"reference has {len(self.reference)}"
            )
        self.segment_labels = label_segments(len(self.reference), self.seg_len, self.regions)

    @property
    def collapsed(self) -> bool:
        return self.kind != CollapseKind.CLEAN

    def label_dict(self) -> dict:
        return {
            "utterance": self.name,
            "kind": self.kind.value,
            "regions": [r.to_dict() for r in self.regions],
        }


def synth_reference(rng: np.random.Generator, sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> Waveform:
    """Amplitude-modulated harmonic tone complex, 2-4 s long."""
    n = int(rng.uniform(2.0, 4.0) * sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    f0 = rng.uniform(100.0, 250.0)
    x = np.zeros(n)
    for h in range(1, int(rng.integers(3, 6)) + 1):
        x += np.sin(2 * np.pi * h * f0 * t + rng.uniform(0, 2 * np.pi)) / h
    am = 1.0 + 0.5 * np.sin(2 * np.pi * rng.uniform(2.0, 6.0) * t + rng.uniform(0, 2 * np.pi))
    x *= am
    x *= rng.uniform(0.2, 0.33) / np.max(np.abs(x))
    return Waveform(x, sample_rate_hz)


def _plan_collapse(rng: np.random.Generator, kind: CollapseKind, total: int, seg_len: int) -> CollapsePlan:
    if kind == CollapseKind.TYPE_I:
        length = int(rng.integers(800, 2001))
        factor = rng.uniform(3.0, 5.0)
        count = 3
    else:
        length = int(rng.integers(400, 1501))
        factor = rng.uniform(2.0, 3.0)
        count = int(rng.integers(3, 9))

    room = seg_len - REGION_LEAD - REGION_TAIL
    if room < 400:
        raise ValueError(f"seg_len {seg_len} is too short to host a collapse region")
    length = min(length, room)
    n_full = total // seg_len
    if n_full < 1:
        raise ValueError(f"Utterance of {total} samples holds no full {seg_len}-sample segment")

    host = int(rng.integers(0, n_full)) * seg_len
    start = host + REGION_LEAD + int(rng.integers(0, room - length + 1))
    return CollapsePlan(kind=kind, region=SegmentSpec(start, length),
                        amplitude_factor=float(factor), impulse_count=count)


def _corpus_kinds(n_utts: int, collapse_fraction: float, seed: int) -> list[CollapseKind]:
    n_collapsed = int(np.floor(n_utts * collapse_fraction + 0.5))
    n_type1 = (n_collapsed + 1) // 2
    kinds = [CollapseKind.CLEAN] * n_utts
    order = np.random.default_rng([seed, n_utts]).permutation(n_utts)
    for rank, idx in enumerate(order[:n_collapsed]):
        kinds[idx] = CollapseKind.TYPE_I if rank < n_type1 else CollapseKind.TYPE_II
    return kinds


def synth_corpus(n_utts: int, collapse_fraction: float, seed: int, seg_len: int = DEFAULT_SEG_LEN,
                 sample_rate_hz: int = DEFAULT_SAMPLE_RATE, perturb_db: float = -30.0,
                 jobs: int = 1) -> list[LabeledPair]:
    """
    Deterministic labelled corpus.

    round(n_utts * collapse_fraction) utterances carry one collapse each; the
    collapsed ones are split evenly between the two kinds, the odd one going
    to type I. Each item is built from its own RNG stream so the result does
    not depend on `jobs`.
    """
    if not 0 <= collapse_fraction <= 1:
        raise ValueError(f"collapse_fraction must lie in [0, 1], got {collapse_fraction}")
    if n_utts < 0:
        raise ValueError(f"n_utts must be >= 0, got {n_utts}")
    kinds = _corpus_kinds(n_utts, collapse_fraction, seed)

    def build(idx: int) -> LabeledPair:
        rng = np.random.default_rng([seed, idx])
        ref = synth_reference(rng, sample_rate_hz)
        plan = None
        regions = []
        if kinds[idx] != CollapseKind.CLEAN:
            plan = _plan_collapse(rng, kinds[idx], len(ref), seg_len)
            regions = [CollapseRegion(plan.region, plan.kind)]
        cand = faulty_generate(ref, plan, perturb_db=perturb_db, seed=int(rng.integers(2 ** 32)))
        return LabeledPair(name=f"utt_{idx:04d}", candidate=cand, reference=ref,
                           kind=kinds[idx], regions=regions, seg_len=seg_len)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        corpus = list(pool.map(build, range(n_utts)))

    logger.info(f"Synthesized {n_utts} utterances, {sum(p.collapsed for p in corpus)} collapsed")
    return corpus


class CollapseStatistic(ABC):
    """A score that grows with the evidence of collapse."""

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    @abstractmethod
    def segment_scores(self, pair: LabeledPair) -> list[float]:
        """One score per segment of the pair's tiling."""
        pass

    def utterance_score(self, pair: LabeledPair) -> float:
        return max(self.segment_scores(pair))


class EnvelopeStatistic(CollapseStatistic):
    def __init__(self, params: Optional[EnvelopeParams] = None):
        self.params = params or EnvelopeParams()

    @property
    def name(self) -> str:
        return "env" if self.params.use_hilbert else "env-abs"

    def segment_scores(self, pair: LabeledPair) -> list[float]:
        stats = segment_statistics(pair.candidate, pair.reference, pair.seg_len, self.params)
        return [s for _, s in stats]


class MaxPowStatistic(CollapseStatistic):
    def __init__(self, frame_len: int = 512, frame_shift: int = 128):
        self.frame_len = frame_len
        self.frame_shift = frame_shift

    @property
    def name(self) -> str:
        return "maxpow"

    def segment_scores(self, pair: LabeledPair) -> list[float]:
        scores = []
        for span in segments_of(pair.reference, pair.seg_len):
            cand = Waveform(pair.candidate.slice(span), pair.candidate.sample_rate_hz)
            ref = Waveform(pair.reference.slice(span), pair.reference.sample_rate_hz)
            scores.append(max_pow_statistic(cand, ref, self.frame_len, self.frame_shift))
        return scores

    def utterance_score(self, pair: LabeledPair) -> float:
        return max_pow_statistic(pair.candidate, pair.reference, self.frame_len, self.frame_shift)


STATISTIC_NAMES = ("env", "env-abs", "maxpow")


def statistic_for(name: str, params: Optional[EnvelopeParams] = None) -> CollapseStatistic:
    """Build a statistic by its CLI name."""
    params = params or EnvelopeParams()
    if name == "env":
        return EnvelopeStatistic(replace(params, use_hilbert=True))
    if name == "env-abs":
        return EnvelopeStatistic(replace(params, use_hilbert=False))
    if name == "maxpow":
        return MaxPowStatistic()
    raise ValueError(f"Unknown statistic {name!r}; choose from {', '.join(STATISTIC_NAMES)}")


def score_corpus(corpus: Sequence[LabeledPair], statistic: CollapseStatistic, level: str,
                 jobs: int = 1) -> tuple[np.ndarray, list[CollapseKind]]:
    """Scores and ground-truth labels, in corpus order, at the requested level."""
    if level not in Level.ALL:
        raise ValueError(f"level must be one of {Level.ALL}, got {level!r}")

    def score(pair: LabeledPair) -> tuple[list[float], list[CollapseKind]]:
        if level == Level.UTTERANCE:
            return [statistic.utterance_score(pair)], [pair.kind]
        return statistic.segment_scores(pair), pair.segment_labels

    scores: list[float] = []
    labels: list[CollapseKind] = []
    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        for s, lab in pool.map(score, corpus):
            scores.extend(s)
            labels.extend(lab)
    return np.asarray(scores, dtype=np.float64), labels


@dataclass(frozen=True)
class DetPoint:
    threshold: float
    fa_rate: float
    fr_rate: float


@dataclass
class DetCurve:
    points: list[DetPoint]
    eer: float
    eer_threshold: float
    eer_fa_rate: float
    eer_fr_rate: float
    n_collapsed: int
    n_clean: int
    flagged_rate: float  # share of all scored items flagged at the EER threshold

    def __post_init__(self):
        if not 0 <= self.eer <= 1:
            raise ValueError(f"eer must lie in [0, 1], got {self.eer}")


def _threshold_grid(scores: np.ndarray, grid: Union[None, int, Sequence[float]]) -> np.ndarray:
    if grid is None:
        # every observed score, plus one just below the smallest so that all items can be flagged
        observed = np.unique(scores)
        return np.concatenate(([np.nextafter(observed[0], -np.inf)], observed))
    if isinstance(grid, (int, np.integer)):
        if grid < 2:
            raise ValueError(f"grid needs at least 2 points, got {grid}")
        return np.linspace(scores.min(), scores.max(), int(grid))
    thresholds = np.sort(np.asarray(grid, dtype=np.float64))
    if thresholds.size == 0:
        raise ValueError("Threshold grid is empty")
    return thresholds


def det_from_scores(positive: np.ndarray, negative: np.ndarray,
                    grid: Union[None, int, Sequence[float]] = DEFAULT_GRID_POINTS) -> DetCurve:
    """Sweep thresholds over collapsed (positive) and clean (negative) scores."""
    positive = np.sort(np.asarray(positive, dtype=np.float64))
    negative = np.sort(np.asarray(negative, dtype=np.float64))
    if positive.size == 0 or negative.size == 0:
        raise ValueError("DET evaluation needs both collapsed and clean items")

    thresholds = _threshold_grid(np.concatenate((positive, negative)), grid)
    # items at or below the threshold are not flagged
    fa = np.searchsorted(positive, thresholds, side="right") / positive.size
    fr = 1.0 - np.searchsorted(negative, thresholds, side="right") / negative.size

    best = int(np.argmin(np.abs(fa - fr)))
    eer_threshold = float(thresholds[best])
    flagged = (np.sum(positive > eer_threshold) + np.sum(negative > eer_threshold))
    return DetCurve(
        points=[DetPoint(float(t), float(a), float(r)) for t, a, r in zip(thresholds, fa, fr)],
        eer=float((fa[best] + fr[best]) / 2.0),
        eer_threshold=eer_threshold,
        eer_fa_rate=float(fa[best]),
        eer_fr_rate=float(fr[best]),
        n_collapsed=int(positive.size),
        n_clean=int(negative.size),
        flagged_rate=float(flagged / (positive.size + negative.size)),
    )


def evaluate_det(corpus: Sequence[LabeledPair], statistic: CollapseStatistic, level: str = Level.SEGMENT,
                 grid: Union[None, int, Sequence[float]] = DEFAULT_GRID_POINTS,
                 kind: Optional[CollapseKind] = None, jobs: int = 1) -> DetCurve:
    """
    DET sweep of `statistic` over `corpus`.

    Args:
        corpus: labelled pairs.
        statistic: the score to sweep.
        level: "segment" or "utterance".
        grid: None for every observed score, an int for that many evenly
            spaced points over the observed range, or explicit thresholds.
        kind: restrict the collapsed class to one collapse kind.
        jobs: worker threads used for scoring.
    """
    if not corpus:
        raise ValueError("Corpus is empty")
    if kind == CollapseKind.CLEAN:
        raise ValueError("kind must be a collapse kind, not clean")

    scores, labels = score_corpus(corpus, statistic, level, jobs)
    labels_arr = np.array([lab.value for lab in labels])
    negative = scores[labels_arr == CollapseKind.CLEAN.value]
    if kind is None:
        positive = scores[labels_arr != CollapseKind.CLEAN.value]
    else:
        positive = scores[labels_arr == kind.value]

    curve = det_from_scores(positive, negative, grid)
    logger.info(
        f"{statistic.name}/{level}/{kind.value if kind else 'all'}: "
        f"EER={curve.eer:.2%} at threshold {curve.eer_threshold:.6g}"
    )
    return curve


def write_corpus(corpus: Sequence[LabeledPair], directory: Union[str, Path]) -> Path:
    """Write WAV pairs plus labels.json into `directory`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for pair in corpus:
        cand_file = f"{pair.name}_cand.wav"
        ref_file = f"{pair.name}_ref.wav"
        write_wav(directory / cand_file, pair.candidate)
        write_wav(directory / ref_file, pair.reference)
        entries.append({**pair.label_dict(), "candidate": cand_file, "reference": ref_file})

    seg_len = corpus[0].seg_len if corpus else DEFAULT_SEG_LEN
    labels_path = directory / LABELS_FILE
    labels_path.write_text(json.dumps(
        {"schema": CORPUS_SCHEMA, "seg_len": seg_len, "utterances": entries}, indent=2
    ) + "\n")
    logger.info(f"Wrote {len(entries)} pairs to {directory}")
    return labels_path


def load_corpus(directory: Union[str, Path], seg_len: Optional[int] = None) -> list[LabeledPair]:
    """Read a corpus written by write_corpus."""
    directory = Path(directory)
    labels_path = directory / LABELS_FILE
    try:
        data = json.loads(labels_path.read_text())
    except json.JSONDecodeError as e:
        raise ValueError(f"{labels_path}: invalid JSON ({e})") from e

    seg_len = seg_len or int(data.get("seg_len", DEFAULT_SEG_LEN))
    corpus = []
    for entry in data.get("utterances", []):
        regions = [
            CollapseRegion(SegmentSpec(int(r["start"]), int(r["length"])), CollapseKind(r["kind"]))
            for r in entry.get("regions", [])
        ]
        corpus.append(LabeledPair(
            name=entry["utterance"],
            candidate=read_wav(directory / entry["candidate"]),
            reference=read_wav(directory / entry["reference"]),
            kind=CollapseKind(entry["kind"]),
            regions=regions,
            seg_len=seg_len,
        ))
    logger.info(f"Loaded {len(corpus)} pairs from {directory}")
    return corpus
