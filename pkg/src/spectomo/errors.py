"""Exception types shared across the toolkit."""

from __future__ import annotations


class SpectralTomographyError(Exception):
    """Base class for toolkit-specific failures."""


class GridMismatchError(SpectralTomographyError):
    """Operands live on incompatible frequency grids."""


class DataFormatError(SpectralTomographyError):
    """A file does not conform to the interchange format."""


class InsufficientDataError(SpectralTomographyError):
    """An estimator was asked to run on a record with no post-selected shots."""


class CalibrationMissingError(SpectralTomographyError):
    """The visibility-calibration records (tau=0, delta=0) are absent."""


class VisibilityTooLowError(SpectralTomographyError):
    """|gamma| estimate below the floor; dividing it out is ill-conditioned."""


class DegenerateInputError(SpectralTomographyError):
    """Physicality projection received a matrix with no positive weight."""


class MissingSettingsError(SpectralTomographyError):
    """A tomographic scan is incomplete.

    `missing` lists the absent rows as (delta_index, tau_index, theta)
    tuples; tau_index/theta are None when a whole delta block is missing.
    """

    def __init__(self, missing, message: str | None = None):
        self.missing = list(missing)
        if message is None:
            shown = ", ".join(map(str, self.missing[:8]))
            more = "" if len(self.missing) <= 8 else f" (+{len(self.missing) - 8} more)"
            message = f"scan is missing {len(self.missing)} settings: {shown}{more}"
        super().__init__(message)
