"""Exception hierarchy for the epipca package.

Three broad families matter to callers: configuration problems
(:class:`ConfigError`), problems with the input data
(:class:`DataError`) and numerical failures (:class:`NumericalError`).
The CLI maps them to exit codes 1, 2 and 3 respectively.
"""


class EpipcaError(Exception):
    """Base class for all errors raised by this package."""


class ConfigError(EpipcaError):
    """Run configuration is invalid (unknown keys, duplicate names, ...)."""


class DataError(EpipcaError):
    """Input data violates a contract."""


class NumericalError(EpipcaError):
    """A numerical routine failed or its preconditions do not hold."""


# --- data-model ---------------------------------------------------------

class MalformedCsv(DataError):
    """CSV row or cell could not be parsed; message carries the row index."""


class DuplicateDate(DataError):
    """The same calendar date appears on more than one row."""


class NonNumericCell(DataError):
    """A stream cell is not a finite number."""


class MissingColumn(DataError):
    """A required column is absent from the CSV header."""


class EmptyWindow(DataError):
    """A date window does not overlap the data range."""


class UnknownLabel(DataError):
    """A requested stream label does not exist."""


class ConstantColumn(DataError):
    """A column has zero variance and cannot be standardized."""


class TooFewRows(DataError):
    """The matrix has too few rows for the requested operation."""


# --- smoother -----------------------------------------------------------

class InvalidBasisSize(DataError):
    """Basis dimension outside the supported range (4 <= k <= n, n >= 4)."""


class SingularSystem(NumericalError):
    """The penalized least-squares system is singular."""


class DegenerateResiduals(NumericalError):
    """Residuals carry no usable variation for correlation estimation."""


# --- temporal weighting --------------------------------------------------

class EmptyInput(DataError):
    """An aggregation received an empty vector."""


class InvalidRho(DataError):
    """Correlation parameter outside the valid range."""


class NotPsd(NumericalError):
    """Matrix is not positive semi-definite within tolerance."""


class SingularMatrix(NumericalError):
    """Matrix is numerically singular."""


# --- pca core ------------------------------------------------------------

class ConvergenceFailure(NumericalError):
    """The SVD solver did not converge."""


class DimensionMismatch(DataError):
    """Weight matrix dimensions do not match the data axis they weight."""


class AllZero(NumericalError):
    """All singular values are zero; variance fractions are undefined."""


class RankOutOfBounds(DataError):
    """Requested reconstruction rank outside 1..r."""


class TooFewComponents(DataError):
    """The decomposition has fewer components than required."""


# --- diagnostics ----------------------------------------------------------

class LengthMismatch(DataError):
    """Paired vectors have incompatible lengths."""


class DegenerateRanks(NumericalError):
    """An input is constant, so its ranks carry no information."""


class NoOverlap(DataError):
    """Score dates and reference dates do not overlap."""


class TooFewStreams(DataError):
    """Outlier flagging needs at least four streams."""


# --- pipeline --------------------------------------------------------------

class MissingOutput(DataError):
    """Expected run output file is absent."""


class InvalidParams(ConfigError):
    """Synthetic-data generator parameters outside the valid range."""
