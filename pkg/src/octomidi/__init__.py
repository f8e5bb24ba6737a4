"""Note-tuple tokenization toolkit for symbolic music.

Parses Standard MIDI Files, encodes each note as an 8-element tuple (time
signature, tempo, bar, position, instrument, pitch, duration, velocity),
builds masked-language-model training batches under three masking
strategies, deduplicates corpora by instrument/pitch fingerprints, and
measures how much masked content a copy-from-context attacker recovers.
"""

from .corpus import (
    CorpusStats,
    Fingerprint,
    PipelineConfig,
    deduplicate,
    fingerprint,
    run_pipeline,
    scan_corpus,
)
from .encoding import (
    BAR_MAX,
    ConversionReport,
    Octuple,
    OctupleSeq,
    decode_octuple,
    encode_octuple,
)
from .errors import (
    EmptyCorpusError,
    InvalidTimeSignatureError,
    MalformedMidiError,
    OctomidiError,
    UnrepresentableSignatureError,
)
from .formats import read_om8, read_omb1, write_om8
from .grids import (
    dequantize_duration,
    dequantize_tempo,
    dequantize_velocity,
    quantize_duration,
    quantize_tempo,
    quantize_velocity,
    split_long_bars,
    timesig_from_index,
    timesig_index,
)
from .leakage import LeakageReport, copy_predict, measure_leakage
from .masking import (
    MaskedExample,
    MaskingStrategy,
    StrategyKind,
    corrupt_slots,
    derive_rng,
    emit_batch,
    make_masked_example,
    sample_segment,
    select_mask_slots,
)
from .midi_io import CleanVerdict, MidiSong, TimedNote, parse_smf, validate_song, write_smf
from .reference import encode_cp_like, encode_remi_like
from .vocab import VOCAB, VocabLayout

__version__ = "0.1.0"

__all__ = [
    "BAR_MAX",
    "CleanVerdict",
    "ConversionReport",
    "CorpusStats",
    "EmptyCorpusError",
    "Fingerprint",
    "InvalidTimeSignatureError",
    "LeakageReport",
    "MalformedMidiError",
    "MaskedExample",
    "MaskingStrategy",
    "MidiSong",
    "Octuple",
    "OctupleSeq",
    "OctomidiError",
    "PipelineConfig",
    "StrategyKind",
    "TimedNote",
    "UnrepresentableSignatureError",
    "VOCAB",
    "VocabLayout",
    "copy_predict",
    "corrupt_slots",
    "decode_octuple",
    "deduplicate",
    "dequantize_duration",
    "dequantize_tempo",
    "dequantize_velocity",
    "derive_rng",
    "emit_batch",
    "encode_cp_like",
    "encode_octuple",
    "encode_remi_like",
    "fingerprint",
    "make_masked_example",
    "measure_leakage",
    "parse_smf",
    "quantize_duration",
    "quantize_tempo",
    "quantize_velocity",
    "read_om8",
    "read_omb1",
    "run_pipeline",
    "sample_segment",
    "scan_corpus",
    "select_mask_slots",
    "split_long_bars",
    "timesig_from_index",
    "timesig_index",
    "validate_song",
    "write_om8",
    "write_smf",
]
