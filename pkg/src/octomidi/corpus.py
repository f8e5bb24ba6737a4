"""Corpus pipeline: ingest MIDI trees, clean, encode, deduplicate, persist.

Files are processed in lexicographic path order (optionally with a process
pool) and aggregated in that same order, so output files and statistics are
deterministic regardless of scheduling. Per-file failures are counted and
logged, never fatal; only output-directory I/O errors abort a run.

Deduplication fingerprints a song as the FNV-1a 64 hash of its
(instrument, pitch) pairs in canonical order, so two copies differing only
in velocities, tempi, or other elements collapse to one. The copy with the
lexicographically smallest path survives.
"""

from __future__ import annotations

import enum
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .encoding import BAR_MAX, COL_BAR, COL_INSTRUMENT, COL_PITCH, OctupleSeq, encode_octuple
from .errors import (
    InvalidTimeSignatureError,
    MalformedMidiError,
    UnrepresentableSignatureError,
)
from .formats import om8_bytes, om8_from_bytes
from .midi_io import CleanVerdict, parse_smf, validate_song
from .reference import reference_counts
from .vocab import ELEMENT_NAMES, ELEMENT_RANGES

log = logging.getLogger(__name__)

MIDI_SUFFIXES = (".mid", ".midi")

FNV64_OFFSET_BASIS = 14695981039346656037
FNV64_PRIME = 1099511628211
_FNV64_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class Fingerprint:
    """64-bit digest of a song's (instrument, pitch) sequence."""

    digest: int


def fingerprint(seq) -> Fingerprint:
    """FNV-1a 64 over the (instrument, pitch) pairs as 16-bit LE words."""
    data = (
        np.ascontiguousarray(seq.array[:, [COL_INSTRUMENT, COL_PITCH]])
        .astype("<u2")
        .tobytes()
    )
    digest = FNV64_OFFSET_BASIS
    for byte in data:
        digest ^= byte
        digest = (digest * FNV64_PRIME) & _FNV64_MASK
    return Fingerprint(digest)


def deduplicate(songs) -> set[str]:
    """Keep one id per digest: the lexicographically smallest.

    ``songs`` is an iterable of (id, Fingerprint) pairs; the result does not
    depend on iteration order.
    """
    best: dict[int, str] = {}
    for song_id, fp in songs:
        current = best.get(fp.digest)
        if current is None or song_id < current:
            best[fp.digest] = song_id
    return set(best.values())


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PipelineConfig:
    workers: int = 1


class FileStatus(enum.Enum):
    OK = "ok"
    MALFORMED = "malformed"
    BLANK = "blank"


@dataclass
class FileOutcome:
    path: str
    status: FileStatus
    payload: bytes | None = None  # OM8 bytes for usable songs
    note_count: int = 0
    remi_count: int = 0
    cp_count: int = 0
    digest: int = 0
    dropped_notes: int = 0
    error: str = ""


@dataclass
class CorpusStats:
    """Counters and token-length means for one pipeline run."""

    songs_kept: int = 0
    songs_rejected_malformed: int = 0
    songs_rejected_blank: int = 0
    songs_deduplicated: int = 0
    total_notes: int = 0
    mean_tokens_octuple: float = 0.0
    mean_tokens_cp_like: float = 0.0
    mean_tokens_remi_like: float = 0.0
    notes_dropped_bar_overflow: int = 0
    histograms: dict[str, list[int]] = field(default_factory=dict)

    @property
    def files_seen(self) -> int:
        return (
            self.songs_kept
            + self.songs_rejected_malformed
            + self.songs_rejected_blank
            + self.songs_deduplicated
        )

    def to_text(self) -> str:
        lines = [
            f"files_seen {self.files_seen}",
            f"songs_kept {self.songs_kept}",
            f"songs_rejected_malformed {self.songs_rejected_malformed}",
            f"songs_rejected_blank {self.songs_rejected_blank}",
            f"songs_deduplicated {self.songs_deduplicated}",
            f"total_notes {self.total_notes}",
            f"notes_dropped_bar_overflow {self.notes_dropped_bar_overflow}",
            f"mean_tokens_octuple {self.mean_tokens_octuple:.4f}",
            f"mean_tokens_cp_like {self.mean_tokens_cp_like:.4f}",
            f"mean_tokens_remi_like {self.mean_tokens_remi_like:.4f}",
        ]
        for name in ELEMENT_NAMES:
            counts = self.histograms.get(name)
            if counts is None:
                continue
            for value, count in enumerate(counts):
                if count:
                    lines.append(f"hist_{name} {value} {count}")
        return "\n".join(lines) + "\n"


def find_midi_files(root: str | Path) -> list[Path]:
    root = Path(root)
    files = [p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in MIDI_SUFFIXES]
    files.sort(key=lambda p: p.relative_to(root).as_posix())
    return files


def process_file(path: str | Path) -> FileOutcome:
    """Parse, validate, encode, and fingerprint one file. Never raises."""
    path = str(path)
    try:
        song = parse_smf(Path(path).read_bytes())
    except (MalformedMidiError, OSError) as exc:
        return FileOutcome(path, FileStatus.MALFORMED, error=str(exc))
    if validate_song(song) is CleanVerdict.REJECT_BLANK:
        return FileOutcome(path, FileStatus.BLANK)
    try:
        # Fingerprint the full canonical sequence, then truncate to the
        # serializable bar range; duplicates are decided before any notes
        # are dropped.
        full = encode_octuple(song, bar_limit=None)
        digest = fingerprint(full).digest
        keep = full.array[:, COL_BAR] <= BAR_MAX
        dropped = int((~keep).sum())
        seq = full if dropped == 0 else OctupleSeq.from_array(full.array[keep])
        remi, cp = reference_counts(song, seq)
    except (UnrepresentableSignatureError, InvalidTimeSignatureError) as exc:
        return FileOutcome(path, FileStatus.MALFORMED, error=str(exc))
    except Exception as exc:  # keep the run alive whatever a bad file does
        log.exception("unexpected failure on %s", path)
        return FileOutcome(path, FileStatus.MALFORMED, error=str(exc))
    if len(seq) == 0:
        # Every note fell beyond the bar limit; nothing usable remains.
        return FileOutcome(path, FileStatus.BLANK, dropped_notes=dropped)
    return FileOutcome(
        path,
        FileStatus.OK,
        payload=om8_bytes(seq),
        note_count=len(seq),
        remi_count=remi,
        cp_count=cp,
        digest=digest,
        dropped_notes=dropped,
    )


def _map_outcomes(files: list[Path], workers: int) -> list[FileOutcome]:
    paths = [str(p) for p in files]
    if workers <= 1 or len(paths) < 2:
        return [process_file(p) for p in paths]
    chunk = max(1, len(paths) // (workers * 4))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(process_file, paths, chunksize=chunk))


def _aggregate(
    root: Path, outcomes: list[FileOutcome], output_dir: Path | None
) -> CorpusStats:
    stats = CorpusStats()
    hist = {
        name: np.zeros(size, dtype=np.int64)
        for name, size in zip(ELEMENT_NAMES, ELEMENT_RANGES)
    }
    seen_digests: set[int] = set()
    kept_remi = 0
    kept_cp = 0

    for outcome in outcomes:
        stats.notes_dropped_bar_overflow += outcome.dropped_notes
        if outcome.status is FileStatus.MALFORMED:
            stats.songs_rejected_malformed += 1
            log.warning("rejected (malformed): %s: %s", outcome.path, outcome.error)
            continue
        if outcome.status is FileStatus.BLANK:
            stats.songs_rejected_blank += 1
            log.warning("rejected (blank): %s", outcome.path)
            continue
        if outcome.digest in seen_digests:
            stats.songs_deduplicated += 1
            log.info("deduplicated: %s", outcome.path)
            continue
        seen_digests.add(outcome.digest)
        stats.songs_kept += 1
        stats.total_notes += outcome.note_count
        kept_remi += outcome.remi_count
        kept_cp += outcome.cp_count
        assert outcome.payload is not None
        arr = om8_from_bytes(outcome.payload).array
        for col, name in enumerate(ELEMENT_NAMES):
            hist[name] += np.bincount(arr[:, col], minlength=hist[name].size)
        if output_dir is not None:
            rel = Path(outcome.path).relative_to(root)
            dest = output_dir / rel.parent / (rel.name + ".om8")
            dest.parent.mkdir(parents=True, exist_ok=True)
            dest.write_bytes(outcome.payload)

    if stats.songs_kept:
        stats.mean_tokens_octuple = stats.total_notes / stats.songs_kept
        stats.mean_tokens_cp_like = kept_cp / stats.songs_kept
        stats.mean_tokens_remi_like = kept_remi / stats.songs_kept
    stats.histograms = {name: counts.tolist() for name, counts in hist.items()}
    return stats


def scan_corpus(input_dir: str | Path, config: PipelineConfig = PipelineConfig()) -> CorpusStats:
    """Pipeline statistics without persisting any token files."""
    root = Path(input_dir)
    outcomes = _map_outcomes(find_midi_files(root), config.workers)
    return _aggregate(root, outcomes, output_dir=None)


def run_pipeline(
    input_dir: str | Path,
    output_dir: str | Path,
    config: PipelineConfig = PipelineConfig(),
) -> CorpusStats:
    """Encode a MIDI tree into OM8 files plus a stats report.

    Kept songs are written under ``output_dir`` mirroring the input tree
    (with ``.om8`` appended to the file name); statistics land in
    ``output_dir/stats.txt``. Two runs over the same tree produce identical
    bytes.
    """
    root = Path(input_dir)
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    outcomes = _map_outcomes(find_midi_files(root), config.workers)
    stats = _aggregate(root, outcomes, output_dir=out)
    (out / "stats.txt").write_text(stats.to_text())
    return stats


def duplicate_groups(input_dir: str | Path, config: PipelineConfig = PipelineConfig()):
    """Map digest -> paths (sorted) for every digest shared by 2+ files.

    Accepts a tree of MIDI files, of OM8 files, or a mix; OM8 files are
    fingerprinted directly.
    """
    root = Path(input_dir)
    by_digest: dict[int, list[str]] = {}

    midi_files = find_midi_files(root)
    for outcome in _map_outcomes(midi_files, config.workers):
        if outcome.status is FileStatus.OK:
            by_digest.setdefault(outcome.digest, []).append(outcome.path)

    om8_files = sorted(
        (p for p in root.rglob("*.om8") if p.is_file()),
        key=lambda p: p.relative_to(root).as_posix(),
    )
    for path in om8_files:
        try:
            seq = om8_from_bytes(path.read_bytes())
        except ValueError as exc:
            log.warning("skipping unreadable token file %s: %s", path, exc)
            continue
        by_digest.setdefault(fingerprint(seq).digest, []).append(str(path))

    return {
        digest: sorted(paths)
        for digest, paths in by_digest.items()
        if len(paths) > 1
    }
