"""Exception types shared across the package."""


class OctomidiError(Exception):
    """Base class for all octomidi errors."""


class MalformedMidiError(OctomidiError):
    """The byte stream is not a usable format 0/1 Standard MIDI File.

    Raised for bad chunk magic, truncated chunks, overlong variable-length
    quantities, a non-positive tick resolution, SMPTE timing, and other
    structural defects. Files raising this are meant to be discarded by
    corpus cleaning.
    """


class InvalidTimeSignatureError(OctomidiError, ValueError):
    """Numerator/denominator pair outside the supported signature table."""


class UnrepresentableSignatureError(OctomidiError):
    """A declared signature cannot be normalized onto the supported table."""


class EmptyCorpusError(OctomidiError):
    """An operation that needs at least one corpus file found none."""
