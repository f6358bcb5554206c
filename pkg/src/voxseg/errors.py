"""Exception types raised across the toolkit.

Plain I/O failures (unwritable paths, missing parents) surface as the
builtin ``OSError``; everything semantic gets a class below.
"""


class VoxsegError(Exception):
    """Base class for all toolkit errors."""


class ShapeMismatch(VoxsegError):
    """Array or volume shapes that were required to agree do not."""


class IncompletePack(VoxsegError):
    """A slice pack has missing indices and cannot be reassembled."""


class OutOfBounds(VoxsegError):
    """A crop box extends outside the source volume."""


class AllZero(VoxsegError):
    """Every voxel of every input volume is zero; no crop box exists."""


class RangeError(VoxsegError):
    """Values fall outside the required numeric range."""


class UnknownPolicy(VoxsegError):
    """Requested augmentation policy name is not a builtin."""


class OutOfRange(VoxsegError):
    """Epoch index outside the schedule's domain."""


class FormatError(VoxsegError):
    """Base class for file-format violations detected by readers."""


class BadMagic(FormatError):
    """File does not carry the expected magic string."""


class UnsupportedDatatype(FormatError):
    """Voxel datatype code is outside the supported subset."""


class TruncatedFile(FormatError):
    """File holds fewer bytes than its header promises."""


class BadLabel(FormatError):
    """A label value outside the allowed label set was encountered."""
