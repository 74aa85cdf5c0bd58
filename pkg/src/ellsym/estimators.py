"""Location and scatter estimators: Tyler shape, spatial medians, moments."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    ContractViolation,
    DegenerateError,
    InsufficientSample,
    NumericalFailure,
)
from .matops import SpdMatrix

TYLER_MAX_ITER = 500
TYLER_TOL = 1e-10
WEISZFELD_MAX_ITER = 1000
WEISZFELD_TOL = 1e-12
HR_MAX_ITER = 200
HR_TOL = 1e-8

LOCATIONS = ("mean", "spatial-median", "hr")
SCATTERS = ("tyler", "cov")
_LOCATION_ALIASES = {"spatial_median": "spatial-median", "hr_median": "hr", "hr-median": "hr"}
_SCATTER_ALIASES = {"sample_cov": "cov", "sample-cov": "cov"}


@dataclass(frozen=True)
class EstimatorChoice:
    """Which location and scatter estimators feed a test."""

    location: str = "mean"
    scatter: str = "tyler"

    def __post_init__(self):
        loc = _LOCATION_ALIASES.get(self.location, self.location)
        sc = _SCATTER_ALIASES.get(self.scatter, self.scatter)
        if loc not in LOCATIONS:
            raise ConfigError(f"unknown location estimator {self.location!r}; choose from {LOCATIONS}")
        if sc not in SCATTERS:
            raise ConfigError(f"unknown scatter estimator {self.scatter!r}; choose from {SCATTERS}")
        object.__setattr__(self, "location", loc)
        object.__setattr__(self, "scatter", sc)

    def label(self) -> str:
        return f"{self.location}/{self.scatter}"


def _as_data(data) -> np.ndarray:
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2 or x.shape[0] == 0:
        raise ContractViolation(f"data must be an n x d matrix, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DegenerateError("data contain non-finite values")
    return x


def _normalize_det(V: np.ndarray) -> np.ndarray:
    sign, logdet = np.linalg.slogdet(V)
    if sign <= 0:
        raise NumericalFailure("Tyler iterate lost positive definiteness")
    return V * np.exp(-logdet / V.shape[0])


def _sq_distances(r: np.ndarray, V: np.ndarray) -> np.ndarray:
    L = np.linalg.cholesky(V)
    z = np.linalg.solve(L, r.T)
    return np.einsum("ij,ij->j", z, z)


def tyler_shape(data, center, init=None, max_iter: int = TYLER_MAX_ITER, tol: float = TYLER_TOL) -> SpdMatrix:
    """Tyler's shape matrix about a fixed center, normalized to unit determinant.

    Fixed-point iteration ``V <- (d/n) sum r_i r_i' / (r_i' V^{-1} r_i)``
    followed by determinant normalization, started from the normalized
    second-moment matrix about ``center`` (or from ``init``).

    Raises
    ------
    InsufficientSample
        If ``n <= d(d-1)``.
    DegenerateError
        If an observation coincides with ``center``.
    NumericalFailure
        If the iteration does not converge in ``max_iter`` steps.
    """
    x = _as_data(data)
    n, d = x.shape
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.shape != (d,):
        raise ContractViolation(f"center must have length {d}")
    if n <= d * (d - 1):
        raise InsufficientSample(f"Tyler shape needs n > d(d-1) = {d * (d - 1)}, got n = {n}")
    r = x - center
    norms = np.linalg.norm(r, axis=1)
    if np.any(norms == 0.0):
        raise DegenerateError("an observation coincides with the center")
    if d == 1:
        return SpdMatrix([[1.0]])
    V = _normalize_det(np.asarray(init, dtype=float) if init is not None else r.T @ r / n)
    for _ in range(max_iter):
        try:
            w = 1.0 / _sq_distances(r, V)
        except np.linalg.LinAlgError as exc:
            raise NumericalFailure("Tyler iterate became singular") from exc
        V_new = _normalize_det((d / n) * (r.T * w) @ r)
        V_new = 0.5 * (V_new + V_new.T)
        step = np.linalg.norm(V_new - V)
        V = V_new
        if step < tol:
            break
    else:
        raise NumericalFailure(f"Tyler iteration did not converge in {max_iter} steps")
    return SpdMatrix(V)


def tyler_residual(data, center, shape) -> float:
    """Frobenius norm of ``(d/n) sum s_i s_i' - I`` for standardized signs ``s_i``."""
    x = _as_data(data)
    n, d = x.shape
    r = (x - np.asarray(center, dtype=float)) @ SpdMatrix(np.asarray(shape)).inv_sqrt()
    s = r / np.linalg.norm(r, axis=1, keepdims=True)
    return float(np.linalg.norm((d / n) * s.T @ s - np.eye(d)))


def rescale_to_scatter(shape, data, center) -> SpdMatrix:
    """Scale ``shape`` so the mean squared Mahalanobis distance equals ``d``."""
    x = _as_data(data)
    n, d = x.shape
    V = np.asarray(shape, dtype=float)
    r = x - np.asarray(center, dtype=float)
    m = float(np.mean(_sq_distances(r, V)))
    if not m > 0:
        raise DegenerateError("all observations sit at the center")
    return SpdMatrix(V * (m / d))


def tyler_scatter(data, center) -> SpdMatrix:
    """Tyler shape about ``center`` rescaled to a scatter estimate."""
    return rescale_to_scatter(tyler_shape(data, center), data, center)


def spatial_median(data, max_iter: int = WEISZFELD_MAX_ITER, tol: float = WEISZFELD_TOL) -> np.ndarray:
    """Minimizer of ``sum_i ||x_i - theta||`` by modified Weiszfeld iterations.

    When an iterate lands on a data point the subgradient condition is
    checked; if it fails the step of Vardi and Zhang moves past the point.
    """
    x = _as_data(data)
    n, d = x.shape
    if n < 2:
        raise InsufficientSample("spatial median needs at least two observations")
    scale = float(np.max(np.abs(x - x.mean(axis=0)))) or 1.0
    eps = 1e-14 * scale
    y = x.mean(axis=0)
    for _ in range(max_iter):
        diff = x - y
        dist = np.linalg.norm(diff, axis=1)
        at = dist <= eps
        inv = np.where(at, 0.0, 1.0 / np.where(at, 1.0, dist))
        t = (inv @ x) / inv.sum()
        eta = int(at.sum())
        if eta:
            grad = inv @ diff
            rnorm = float(np.linalg.norm(grad))
            if rnorm <= eta:
                return y
            gam = min(1.0, eta / rnorm)
            y_new = (1.0 - gam) * t + gam * y
        else:
            y_new = t
        if np.linalg.norm(y_new - y) <= tol * scale:
            return y_new
        y = y_new
    raise NumericalFailure(f"Weiszfeld iteration did not converge in {max_iter} steps")


def hr_median(data, max_iter: int = HR_MAX_ITER, tol: float = HR_TOL) -> tuple[np.ndarray, SpdMatrix]:
    """Affine-equivariant spatial median with its Tyler shape.

    Alternates the spatial median of the Tyler-standardized data with the
    Tyler shape about the current center until the center moves by less
    than ``tol`` (relative to the data scale).
    """
    x = _as_data(data)
    n, d = x.shape
    scale = float(np.max(np.abs(x - x.mean(axis=0)))) or 1.0
    theta = spatial_median(x)
    V = tyler_shape(x, theta)
    for _ in range(max_iter):
        root = V.sqrt()
        z = x @ V.inv_sqrt()
        theta_new = spatial_median(z) @ root
        V = tyler_shape(x, theta_new, init=V.entries)
        move = np.linalg.norm(theta_new - theta)
        theta = theta_new
        if move < tol * scale:
            return theta, V
    raise NumericalFailure(f"hr median did not settle in {max_iter} outer steps")


def sample_mean(data) -> np.ndarray:
    return _as_data(data).mean(axis=0)


def sample_cov(data) -> SpdMatrix:
    """Sample covariance with divisor ``n``."""
    x = _as_data(data)
    n, d = x.shape
    if n < d + 1:
        raise InsufficientSample(f"sample covariance needs n >= d + 1 = {d + 1}")
    r = x - x.mean(axis=0)
    try:
        return SpdMatrix(r.T @ r / n)
    except ContractViolation as exc:
        raise DegenerateError(f"sample covariance is singular: {exc}") from exc


def estimate_location(data, choice: EstimatorChoice) -> np.ndarray:
    if choice.location == "mean":
        return sample_mean(data)
    if choice.location == "spatial-median":
        return spatial_median(data)
    return hr_median(data)[0]


def estimate_scatter(data, center, choice: EstimatorChoice) -> SpdMatrix:
    """Scatter about ``center``: rescaled Tyler or the ``1/n`` moment matrix."""
    if choice.scatter == "tyler":
        return tyler_scatter(data, center)
    x = _as_data(data)
    r = x - np.asarray(center, dtype=float)
    try:
        return SpdMatrix(r.T @ r / x.shape[0])
    except ContractViolation as exc:
        raise DegenerateError(f"scatter about the center is singular: {exc}") from exc


def estimate(data, choice: EstimatorChoice = EstimatorChoice()) -> tuple[np.ndarray, SpdMatrix]:
    """Location estimate and the scatter estimate about it."""
    theta = estimate_location(data, choice)
    return theta, estimate_scatter(data, theta, choice)
