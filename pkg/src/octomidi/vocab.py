"""Per-element vocabularies for the 8-element note encoding.

Every note element has its own small integer vocabulary. Identifier space per
element: 4 reserved special identifiers followed by the element's value range,
so element value ``v`` is stored as identifier ``v + 4``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

# Column order of the 8 elements, used everywhere a note is laid out as a row.
ELEMENT_NAMES = (
    "time_signature",
    "tempo",
    "bar",
    "position",
    "instrument",
    "pitch",
    "duration",
    "velocity",
)

# Raw value range per element (time signature table, tempo bins, bars,
# 1/64-note positions, instruments incl. percussion, pitches incl. percussion
# types, duration bins, velocity bins).
ELEMENT_RANGES = (254, 49, 256, 128, 129, 256, 128, 32)

PAD_ID = 0
MASK_ID = 1
CLS_ID = 2
EOS_ID = 3
NUM_SPECIALS = 4


@dataclass(frozen=True)
class VocabLayout:
    """Identifier layout shared by all eight element vocabularies.

    ``sizes[k]`` is the total vocabulary size of element k (specials plus
    value range); identifiers below ``num_specials`` are special in every
    element vocabulary.
    """

    ranges: tuple[int, ...] = ELEMENT_RANGES
    num_specials: int = NUM_SPECIALS
    pad_id: int = PAD_ID
    mask_id: int = MASK_ID
    cls_id: int = CLS_ID
    eos_id: int = EOS_ID
    sizes: tuple[int, ...] = field(init=False)

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sizes", tuple(r + self.num_specials for r in self.ranges)
        )

    def value_to_id(self, value: int) -> int:
        return value + self.num_specials

    def id_to_value(self, ident: int) -> int:
        return ident - self.num_specials

    def is_special(self, ident: int) -> bool:
        return ident < self.num_specials


VOCAB = VocabLayout()
