"""TIMIT-style corpus handling: .PHN parsing, vowel selection, padding, splits.

The corpus layout is a directory tree of paired audio and .PHN files sharing
a basename. .PHN lines are "start end label" in sample units at 16 kHz.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .audio import read_audio
from .errors import ConfigError, DataError, ParseError

PAD_LENGTH = 2000
MIN_DURATION = 1500
MAX_DURATION = 2000

FRONT_PHONES = ("iy", "ih", "eh", "ae")
BACK_PHONES = ("aa", "ao", "ow", "uh", "uw")
VOWEL_PHONES = FRONT_PHONES + BACK_PHONES


class VowelClass(Enum):
    FRONT = "front"
    BACK = "back"


@dataclass(frozen=True)
class PhoneInterval:
    start: int
    end: int
    label: str

    def __post_init__(self):
        if self.start < 0:
            raise DataError(f"interval start must be >= 0, got {self.start}")
        if self.end <= self.start:
            raise DataError(f"interval end must exceed start, got [{self.start}, {self.end})")
        if not self.label:
            raise DataError("interval label must be nonempty")

    @property
    def duration(self) -> int:
        return self.end - self.start


@dataclass
class AudioSegment:
    samples: np.ndarray
    original_length: int
    phone: str
    vclass: VowelClass
    source: str
    speaker: str
    start: int = 0
    end: int = 0

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.float64)
        if self.original_length < 1 or self.original_length > self.samples.shape[0]:
            raise DataError(
                f"original_length {self.original_length} outside [1, {self.samples.shape[0]}]"
            )


@dataclass
class DatasetSplit:
    train: list[int]
    test: list[int]
    seed: int
    test_fraction: float


@dataclass
class SegmentRules:
    """Duration filter and padding target applied by select_segments."""

    min_duration: int = MIN_DURATION
    max_duration: int = MAX_DURATION
    pad_to: int = PAD_LENGTH

    def __post_init__(self):
        if not (0 < self.min_duration <= self.max_duration <= self.pad_to):
            raise ConfigError(
                f"need 0 < min ({self.min_duration}) <= max ({self.max_duration})"
                f" <= pad ({self.pad_to})"
            )


def parse_phn(text: str) -> list[PhoneInterval]:
    """Parse .PHN text into intervals, preserving sample-unit boundaries."""
    intervals = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise ParseError(f"expected 3 fields, got {len(parts)}: {line!r}", line_no)
        try:
            start, end = int(parts[0]), int(parts[1])
        except ValueError:
            raise ParseError(f"non-integer boundary in {line!r}", line_no) from None
        if start < 0:
            raise ParseError(f"negative start {start}", line_no)
        if end <= start:
            raise ParseError(f"end {end} <= start {start}", line_no)
        intervals.append(PhoneInterval(start, end, parts[2]))
    return intervals


def label_vowel(phone: str) -> VowelClass | None:
    """Map a corpus phone code to its class; None for anything not selected."""
    if phone in FRONT_PHONES:
        return VowelClass.FRONT
    if phone in BACK_PHONES:
        return VowelClass.BACK
    return None


def select_segments(
    intervals: list[PhoneInterval],
    audio: np.ndarray,
    source: str = "",
    speaker: str = "",
    rules: SegmentRules | None = None,
) -> list[AudioSegment]:
    """Keep monophthong vowels inside the duration window, zero-padded to rules.pad_to."""
    rules = rules or SegmentRules()
    audio = np.asarray(audio, dtype=np.float64)
    out = []
    for iv in intervals:
        vclass = label_vowel(iv.label)
        if vclass is None:
            continue
        if not (rules.min_duration <= iv.duration <= rules.max_duration):
            continue
        if iv.end > audio.shape[0]:
            raise DataError(
                f"{source or 'interval'}: [{iv.start}, {iv.end}) exceeds audio length {audio.shape[0]}"
            )
        samples = np.zeros(rules.pad_to, dtype=np.float64)
        samples[: iv.duration] = audio[iv.start : iv.end]
        out.append(
            AudioSegment(
                samples=samples,
                original_length=iv.duration,
                phone=iv.label,
                vclass=vclass,
                source=source,
                speaker=speaker,
                start=iv.start,
                end=iv.end,
            )
        )
    return out


def split_dataset(segments: list[AudioSegment], test_fraction: float, seed: int) -> DatasetSplit:
    """Deterministic stratified split; per-class test size is round(n * fraction)."""
    labels = [seg.vclass for seg in segments]
    return split_labels(labels, test_fraction, seed)


def split_labels(labels: list[VowelClass], test_fraction: float, seed: int) -> DatasetSplit:
    if not (0.0 < test_fraction < 1.0):
        raise ConfigError(f"test_fraction must be in (0, 1), got {test_fraction}")
    rng = np.random.default_rng(seed)
    train: list[int] = []
    test: list[int] = []
    for vclass in (VowelClass.FRONT, VowelClass.BACK):
        idx = np.array([i for i, c in enumerate(labels) if c is vclass], dtype=int)
        if idx.size < 2:
            raise ConfigError(f"class {vclass.value} has {idx.size} segments; need >= 2 to split")
        rng.shuffle(idx)
        n_test = int(round(idx.size * test_fraction))
        n_test = min(max(n_test, 1), idx.size - 1)
        test.extend(idx[:n_test].tolist())
        train.extend(idx[n_test:].tolist())
    return DatasetSplit(train=sorted(train), test=sorted(test), seed=seed, test_fraction=test_fraction)


def find_phn_files(root: Path, partition: str | None = None) -> list[Path]:
    """All .PHN files under root in lexicographic order; optional train/test filter."""
    root = Path(root)
    if not root.is_dir():
        raise DataError(f"corpus directory {root} does not exist")
    paths = [p for p in root.rglob("*") if p.is_file() and p.suffix.lower() == ".phn"]
    if partition:
        want = partition.lower()
        if want not in ("train", "test"):
            raise ConfigError(f"partition must be 'train' or 'test', got {partition!r}")
        paths = [p for p in paths if want in (part.lower() for part in p.relative_to(root).parts)]
    return sorted(paths, key=lambda p: p.as_posix())


def _paired_audio(phn_path: Path) -> Path:
    for suffix in (".wav", ".WAV", ".sph", ".SPH"):
        cand = phn_path.with_suffix(suffix)
        if cand.exists():
            return cand
    raise DataError(f"no audio file paired with {phn_path}")


def scan_corpus(
    root,
    partition: str | None = None,
    rules: SegmentRules | None = None,
) -> list[AudioSegment]:
    """Walk the corpus tree and emit every selected vowel segment.

    Files are processed in lexicographic path order, so the result is
    deterministic regardless of filesystem enumeration order.
    """
    root = Path(root)
    rules = rules or SegmentRules()
    segments: list[AudioSegment] = []
    for phn_path in find_phn_files(root, partition):
        try:
            intervals = parse_phn(phn_path.read_text())
        except ParseError as exc:
            raise ParseError(f"{phn_path}: {exc}") from exc
        waveform = read_audio(_paired_audio(phn_path))
        rel = phn_path.relative_to(root)
        source = rel.with_suffix("").as_posix()
        speaker = rel.parent.name or "unknown"
        segments.extend(select_segments(intervals, waveform.samples, source, speaker, rules))
    return segments


MANIFEST_COLUMNS = ("source", "speaker", "phone", "class", "start", "end", "original_length")


def write_manifest(segments: list[AudioSegment], csv_path, corpus_root, rules: SegmentRules) -> None:
    """Segment manifest CSV plus a sidecar JSON recording root and filter rules."""
    csv_path = Path(csv_path)
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(MANIFEST_COLUMNS)
        for seg in segments:
            writer.writerow(
                [seg.source, seg.speaker, seg.phone, seg.vclass.value, seg.start, seg.end, seg.original_length]
            )
    sidecar = {
        "corpus_root": str(Path(corpus_root).resolve()),
        "min_duration": rules.min_duration,
        "max_duration": rules.max_duration,
        "pad_to": rules.pad_to,
    }
    csv_path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_manifest(csv_path) -> list[AudioSegment]:
    """Rehydrate segments from a manifest CSV (audio re-read via the sidecar root)."""
    csv_path = Path(csv_path)
    sidecar_path = csv_path.with_suffix(".json")
    if not sidecar_path.exists():
        raise DataError(f"manifest sidecar {sidecar_path} not found")
    sidecar = json.loads(sidecar_path.read_text())
    root = Path(sidecar["corpus_root"])
    rules = SegmentRules(sidecar["min_duration"], sidecar["max_duration"], sidecar["pad_to"])

    waveform_cache: dict[str, np.ndarray] = {}
    segments = []
    with open(csv_path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != MANIFEST_COLUMNS:
            raise DataError(f"manifest {csv_path} has unexpected columns {reader.fieldnames}")
        for row in reader:
            source = row["source"]
            if source not in waveform_cache:
                phn = root / (source + ".phn")
                if not phn.exists():
                    phn = root / (source + ".PHN")
                waveform_cache[source] = read_audio(_paired_audio(phn)).samples
            audio = waveform_cache[source]
            iv = PhoneInterval(int(row["start"]), int(row["end"]), row["phone"])
            samples = np.zeros(rules.pad_to, dtype=np.float64)
            samples[: iv.duration] = audio[iv.start : iv.end]
            segments.append(
                AudioSegment(
                    samples=samples,
                    original_length=iv.duration,
                    phone=row["phone"],
                    vclass=VowelClass(row["class"]),
                    source=source,
                    speaker=row["speaker"],
                    start=iv.start,
                    end=iv.end,
                )
            )
    return segments


def class_counts(segments: list[AudioSegment]) -> dict[str, int]:
    counts = {"front": 0, "back": 0}
    for seg in segments:
        counts[seg.vclass.value] += 1
    return counts
