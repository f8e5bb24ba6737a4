"""Event-style and compound-style reference encoders for length comparison.

These two encoders exist to compare sequence lengths against the 8-element
note encoding; only their token counts are meaningful. The event-style
("remi-like") stream spends one token per bar line, one per metadata change,
and five per note (position, instrument, pitch, duration, velocity; position
tokens are not shared between simultaneous notes). The compound-style
("cp-like") stream spends one token per bar line, one metric token per onset
group, and one compound token per note.

Metadata changes are counted against the running state, which starts at the
MIDI defaults (4/4, 120 BPM), so injected default events do not emit tokens.
"""

from __future__ import annotations

import numpy as np

from . import grids
from .encoding import BAR_MAX, COL_BAR, COL_POSITION, BarMap, OctupleSeq, encode_octuple
from .midi_io import MidiSong

_BASELINE_SIG = (4, 4)


def _deduped(events):
    out = []
    for ev in sorted(events):
        if out and out[-1][0] == ev[0]:
            out[-1] = ev
        else:
            out.append(ev)
    return out


def _metadata_changes(song: MidiSong, bar_map: BarMap):
    """Signature and tempo events that change the running quantized state."""
    sig_changes = []
    current_sig = _BASELINE_SIG
    for tick, n, d in _deduped(song.timesig_events):
        n, d = grids.normalize_signature(n, d)
        if (n, d) != current_sig:
            bar, pos, _ = bar_map.locate_tick(tick)
            if bar <= BAR_MAX:
                sig_changes.append((bar, pos, n, d))
            current_sig = (n, d)

    tempo_changes = []
    current_tempo = grids.quantize_tempo(120.0)
    for tick, bpm in _deduped(song.tempo_events):
        idx = grids.quantize_tempo(bpm)
        if idx != current_tempo:
            bar, pos, _ = bar_map.locate_tick(tick)
            if bar <= BAR_MAX:
                tempo_changes.append((bar, pos, idx))
            current_tempo = idx
    return sig_changes, tempo_changes


def reference_counts(song: MidiSong, seq: "OctupleSeq | None" = None) -> tuple[int, int]:
    """(event-style, compound-style) token counts without building tokens.

    Much cheaper than the token-emitting encoders; pass ``seq`` to reuse an
    already-encoded sequence. Pinned against the token lists in tests.
    """
    octs = encode_octuple(song) if seq is None else seq
    bar_map = BarMap(song)
    sig_changes, tempo_changes = _metadata_changes(song, bar_map)
    n = len(octs)
    n_changes = len(sig_changes) + len(tempo_changes)
    if n == 0 and n_changes == 0:
        return 0, 0
    arr = octs.array
    last_bar = max(
        int(arr[:, COL_BAR].max()) if n else 0,
        max((bar for bar, _, _, _ in sig_changes), default=0),
        max((bar for bar, _, _ in tempo_changes), default=0),
    )
    bars = last_bar + 1
    groups = {(0, 0)}
    if n:
        groups.update(map(tuple, np.unique(arr[:, [COL_BAR, COL_POSITION]], axis=0).tolist()))
    groups.update((bar, pos) for bar, pos, _, _ in sig_changes)
    groups.update((bar, pos) for bar, pos, _ in tempo_changes)
    return 5 * n + n_changes + bars, n + len(groups) + bars


def encode_remi_like(song: MidiSong) -> list[str]:
    """Event-style token stream; len() of the result is the sequence length."""
    octs = encode_octuple(song)
    bar_map = BarMap(song)
    sig_changes, tempo_changes = _metadata_changes(song, bar_map)

    # kind ranks order items at equal (bar, position): signature, tempo, notes
    items: list[tuple[int, int, int, list[str]]] = []
    for bar, pos, n, d in sig_changes:
        items.append((bar, pos, 0, [f"<time-sig:{n}/{d}>"]))
    for bar, pos, idx in tempo_changes:
        items.append((bar, pos, 1, [f"<tempo:{idx}>"]))
    for o in octs:
        items.append(
            (
                o.bar,
                o.position,
                2,
                [
                    f"<pos:{o.position}>",
                    f"<inst:{o.instrument}>",
                    f"<pitch:{o.pitch}>",
                    f"<dur:{o.duration_idx}>",
                    f"<vel:{o.velocity_idx}>",
                ],
            )
        )
    if not items:
        return []
    last_bar = max(bar for bar, _, _, _ in items)
    items.sort(key=lambda it: (it[0], it[1], it[2]))

    tokens: list[str] = []
    i = 0
    for bar in range(last_bar + 1):
        tokens.append("<bar>")
        while i < len(items) and items[i][0] == bar:
            tokens.extend(items[i][3])
            i += 1
    return tokens


def encode_cp_like(song: MidiSong) -> list[str]:
    """Compound-style token stream; len() of the result is the sequence length."""
    octs = encode_octuple(song)
    bar_map = BarMap(song)
    sig_changes, tempo_changes = _metadata_changes(song, bar_map)

    has_content = len(octs) > 0 or sig_changes or tempo_changes
    if not has_content:
        return []

    # The metric stream always declares the opening state at (bar 0, pos 0);
    # note onsets and metadata changes open the remaining groups.
    groups = {(0, 0)}
    groups.update((o.bar, o.position) for o in octs)
    groups.update((bar, pos) for bar, pos, _, _ in sig_changes)
    groups.update((bar, pos) for bar, pos, _ in tempo_changes)

    notes_by_group: dict[tuple[int, int], list[str]] = {}
    for o in octs:
        notes_by_group.setdefault((o.bar, o.position), []).append(
            f"<note:{o.instrument},{o.pitch},{o.duration_idx},{o.velocity_idx}>"
        )

    last_bar = max(
        max((o.bar for o in octs), default=0),
        max((bar for bar, _, _, _ in sig_changes), default=0),
        max((bar for bar, _, _ in tempo_changes), default=0),
    )
    tokens: list[str] = []
    ordered = sorted(groups)
    i = 0
    for bar in range(last_bar + 1):
        tokens.append("<bar>")
        while i < len(ordered) and ordered[i][0] == bar:
            _, pos = ordered[i]
            tokens.append(f"<metric:{pos}>")
            tokens.extend(notes_by_group.get(ordered[i], ()))
            i += 1
    return tokens
