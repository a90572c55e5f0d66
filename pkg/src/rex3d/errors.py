"""Exception hierarchy for rex3d."""


class Rex3dError(Exception):
    """Base class for all rex3d errors."""


class FormatError(Rex3dError):
    """File does not look like the format its extension claims."""


class UnsupportedDatatype(Rex3dError):
    """NIfTI datatype code outside the supported set (u8, i16, f32)."""


class TruncatedFile(Rex3dError):
    """Payload shorter than the header promises."""


class IoError(Rex3dError):
    """Generic read/write failure."""


class InvalidPhantomSpec(Rex3dError):
    """Phantom lesion does not fit inside the requested dims."""


class UnsplittableRegion(Rex3dError):
    """Region has extent >= 2 on fewer than two axes; treat as a leaf."""


class DonorShapeMismatch(Rex3dError):
    """Donor volume dims differ from the subject volume dims."""


class EmptyCohort(Rex3dError):
    """Mean-intensity occlusion requested with no cohort volumes."""


class OracleUnavailable(Rex3dError):
    """External oracle process died or could not be spawned."""


class ProtocolError(Rex3dError):
    """External oracle violated the wire protocol."""


class OracleTimeout(Rex3dError):
    """External oracle did not answer within the batch timeout."""


class BudgetExhausted(Rex3dError):
    """Model-call budget already spent before this query."""


class NoSignal(Rex3dError):
    """Responsibility map is identically zero; nothing to extract."""


class InsufficientMap(Rex3dError):
    """Even the all-voxels mask fails to reproduce the target label."""
