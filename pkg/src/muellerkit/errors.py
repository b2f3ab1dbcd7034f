"""Exception types raised by the toolkit.

Every error carries a short machine-readable ``code`` (stable across
releases) that the CLI and the HTTP service echo verbatim, so callers in
other languages can switch on it without parsing prose.
"""

from __future__ import annotations


class MuellerKitError(Exception):
    """Base class for all toolkit errors."""

    code = "MuellerKit"


class M00NonPositiveError(MuellerKitError):
    """Raised when m(0,0) <= epsilon and the matrix cannot be normalized."""

    code = "M00NonPositive"


class DOutOfRangeError(MuellerKitError):
    """Raised when a requested diattenuation vector has magnitude > 1."""

    code = "DOutOfRange"


class NotHermitianError(MuellerKitError):
    """Raised when a coherency matrix fails the Hermitian symmetry check."""

    code = "NotHermitian"


class NoConvergenceError(MuellerKitError):
    """Raised when the eigensolver fails to converge."""

    code = "NoConvergence"


class DimensionMismatchError(MuellerKitError):
    """Raised when array shapes disagree with the declared dimensions."""

    code = "DimensionMismatch"


class MaskedInputError(MuellerKitError):
    """Raised when an operation requires a full 16-element cube but the
    input carries an element mask with missing entries."""

    code = "MaskedInput"


class DegenerateNoReconstructionError(MuellerKitError):
    """Raised when reconstruction is requested for a pixel whose
    decomposition status is not OK."""

    code = "DegenerateNoReconstruction"


class BadMagicError(MuellerKitError):
    """Raised when a container file does not start with the expected magic."""

    code = "BadMagic"


class BadHeaderError(MuellerKitError):
    """Raised when a container header is internally inconsistent
    (unknown dtype or kind code, zero dimension, overflowing sizes)."""

    code = "BadHeader"


class TruncatedError(MuellerKitError):
    """Raised when a container file is shorter or longer than its header
    says it must be."""

    code = "Truncated"


class MissingPlaneError(MuellerKitError):
    """Raised when a parameter-map directory lacks one of the required
    planes for a wavelength."""

    code = "MissingPlane"


class TooFewSpecimensError(MuellerKitError):
    """Raised when nested cross-validation is asked for with fewer
    specimens than the scheme needs (test + validation + at least one
    training specimen)."""

    code = "TooFewSpecimens"

