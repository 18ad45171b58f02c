"""Exception types shared across the toolkit."""


class TextJsccError(Exception):
    """Base class for all toolkit errors."""


class EmptyCorpus(TextJsccError):
    """Raised when an operation needs at least one sentence / character."""


class EmptySequence(TextJsccError):
    """Raised when a recurrent layer receives a zero-length input sequence."""


class ShapeError(TextJsccError):
    """Dimension mismatch between arrays or parameters."""


class DomainError(TextJsccError):
    """Argument outside the mathematically valid domain."""


class NumericalError(TextJsccError):
    """Non-finite loss or other numerical breakdown during training."""


class DegenerateAlphabet(TextJsccError):
    """Huffman construction needs at least two distinct symbols."""


class CorruptStream(TextJsccError):
    """A compressed bit stream could not be decoded consistently."""


class FramingError(TextJsccError):
    """Bit stream length incompatible with the codec's fixed framing."""


class DecodeFailure(TextJsccError):
    """Erasure pattern beyond the correction capability of the code."""


class ConfigError(TextJsccError):
    """Invalid or incomplete run configuration."""


class IoError(TextJsccError):
    """File could not be read or written; message carries the path."""
