"""Optimal tests for elliptical symmetry against skew-elliptical alternatives."""

__version__ = "0.1.0"

from .errors import EllsymError  # noqa: E402
from .estimators import EstimatorChoice  # noqa: E402
from .procedures import TestResult, run_test  # noqa: E402
from .radial import RadialDensity, parse_density  # noqa: E402

__all__ = ["EllsymError", "EstimatorChoice", "RadialDensity", "TestResult", "__version__", "parse_density", "run_test"]
