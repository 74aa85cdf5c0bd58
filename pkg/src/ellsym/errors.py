"""Exception hierarchy shared by every module in the package."""


class EllsymError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ContractViolation(EllsymError, ValueError):
    """Arguments that break a documented precondition."""


class ConfigError(EllsymError, ValueError):
    """Invalid configuration: names, grids, dimensions."""


class UnsupportedFamily(ConfigError):
    """Unknown or inadmissible radial family / alternative name."""


class DataError(EllsymError, ValueError):
    """Input data that cannot be parsed or used."""

    exit_code = 2


class InsufficientSample(DataError):
    """Too few observations for the requested estimator."""


class DegenerateError(DataError):
    """Data or reference density produce a degenerate statistic."""


class NumericalFailure(EllsymError, ArithmeticError):
    """An iterative or numerical routine did not converge."""

    exit_code = 3


class IllConditioned(NumericalFailure):
    """Matrix too close to singular for a stable inverse."""


class DivergentMoment(EllsymError, ArithmeticError):
    """A requested radial moment or functional is infinite."""


class DegenerateReference(ConfigError):
    """Reference density for which the efficient score vanishes (Gaussian)."""


class InadmissiblePair(DivergentMoment):
    """Actual density ``g`` outside the class on which the reference ``f`` score is valid."""
