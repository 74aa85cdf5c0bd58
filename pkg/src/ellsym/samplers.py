"""Seeded samplers for elliptical, skew-elliptical, sinh-arcsinh and mixture laws."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from .errors import ConfigError, ContractViolation, UnsupportedFamily
from .matops import as_spd
from .radial import DENSITY_SCALES, RadialDensity, resolve_density, standardize


@dataclass(frozen=True)
class RngStream:
    """Substream ``stream_id`` of the master ``seed``.

    The pair is hashed through :class:`numpy.random.SeedSequence`, so a
    replication's draws depend only on ``(seed, stream_id)``.
    """

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence([int(self.seed), int(self.stream_id)])))


def _rng(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise ContractViolation("rng must be an RngStream or a numpy Generator")


def sample_radius(g: RadialDensity, n: int, rng: np.random.Generator) -> np.ndarray:
    """Draws of the Mahalanobis radius under ``g``."""
    d = g.dim
    if g.family == "gaussian":
        return g.scale * np.sqrt(rng.chisquare(d, size=n))
    if g.family == "student":
        nu = g.param
        # nu * chi2_d / chi2_nu is d * F(d, nu)
        return g.scale * np.sqrt(nu * rng.chisquare(d, size=n) / rng.chisquare(nu, size=n))
    b = g.param
    return g.scale * (2.0 * rng.gamma(d / (2 * b), size=n)) ** (1 / (2 * b))


def sample_spherical(g: RadialDensity, n: int, rng) -> np.ndarray:
    """``rho U`` with ``U`` uniform on the sphere, independent of ``rho``."""
    rng = _rng(rng)
    z = rng.standard_normal((n, g.dim))
    u = z / np.linalg.norm(z, axis=1, keepdims=True)
    return sample_radius(g, n, rng)[:, None] * u


def sample_elliptical(g: RadialDensity, theta, sigma, n: int, rng) -> np.ndarray:
    """``theta + rho Sigma^{1/2} U`` row by row."""
    S = as_spd(sigma)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if S.dim != g.dim or theta.shape != (g.dim,):
        raise ContractViolation("density, location and scatter dimensions disagree")
    return theta + sample_spherical(g, n, rng) @ S.sqrt()


SKEWING = {
    "gaussian": special.ndtr,
    "logistic": special.expit,
}


def skewing_metric(sigma, metric: str = "sym") -> np.ndarray:
    """Matrix ``M`` in the skewing argument ``lam' M z``.

    ``sym`` is the symmetric root ``Sigma^{-1/2}``; ``marginal`` is
    ``diag(Sigma_jj)^{-1/2}``, which rescales each coordinate by its own
    standard deviation and so keeps the correlation structure in ``z``.
    """
    S = as_spd(sigma)
    if metric == "sym":
        return S.inv_sqrt()
    if metric == "marginal":
        return np.diag(1.0 / np.sqrt(np.diag(S.entries)))
    raise ConfigError(f"lambda metric must be one of {LAMBDA_METRICS}, got {metric!r}")


def sample_gse(
    g: RadialDensity, theta, sigma, lam, n: int, rng, skewing: str = "gaussian", lam_metric: str = "sym"
) -> np.ndarray:
    """Generalized skew-elliptical draws by sign flipping.

    A centered elliptical draw ``Z`` is kept when ``V <= Pi(lam' M Z)`` and
    replaced by ``-Z`` otherwise, which yields the density
    ``2 f_ell(z) Pi(lam' M z)``. ``M`` is chosen by ``lam_metric``
    (see :func:`skewing_metric`).
    """
    try:
        Pi = SKEWING[skewing]
    except KeyError:
        raise UnsupportedFamily(f"unknown skewing function {skewing!r}") from None
    rng = _rng(rng)
    S = as_spd(sigma)
    lam = np.asarray(lam, dtype=float).reshape(-1)
    if lam.shape != (S.dim,):
        raise ContractViolation("lambda must have the data dimension")
    M = skewing_metric(S, lam_metric)
    z = sample_elliptical(g, np.zeros(S.dim), S, n, rng)
    v = rng.uniform(size=n)
    keep = v <= Pi(z @ (M.T @ lam))
    return np.asarray(theta, dtype=float) + np.where(keep[:, None], z, -z)


def sample_sas(g: RadialDensity, theta, sigma, eps, n: int, rng) -> np.ndarray:
    """Sinh-arcsinh transform ``sinh(asinh(Z_j) + eps_j)`` of elliptical draws, kurtosis 1."""
    eps = np.asarray(eps, dtype=float).reshape(-1)
    if eps.shape != (g.dim,):
        raise ContractViolation("eps must have the data dimension")
    z = sample_elliptical(g, np.zeros(g.dim), sigma, n, rng)
    return np.asarray(theta, dtype=float) + np.sinh(np.arcsinh(z) + eps)


def sample_gauss_mixture(weights, mu1, sigma1, mu2, sigma2, n: int, rng) -> np.ndarray:
    """Two-component Gaussian mixture; the component is drawn per observation."""
    rng = _rng(rng)
    w = np.asarray(weights, dtype=float).reshape(-1)
    if w.shape != (2,) or np.any(w <= 0) or not np.isclose(w.sum(), 1.0):
        raise ContractViolation("mixture weights must be two positive numbers summing to 1")
    mu1, mu2 = (np.asarray(m, dtype=float).reshape(-1) for m in (mu1, mu2))
    S1, S2 = as_spd(sigma1), as_spd(sigma2)
    d = mu1.size
    first = rng.uniform(size=n) < w[0]
    z = rng.standard_normal((n, d))
    return np.where(first[:, None], mu1 + z @ S1.sqrt(), mu2 + z @ S2.sqrt())


# ---------------------------------------------------------------------------
# declarative alternatives
# ---------------------------------------------------------------------------

ALT_FAMILIES = ("elliptical", "gse", "sas", "gauss_mixture")
RESERVED_FAMILIES = ("msgh", "lsgm")
KERNEL_SCALES = DENSITY_SCALES
LAMBDA_METRICS = ("sym", "marginal")


def kernel_density(name: str, d: int, scaling: str = "standardized") -> RadialDensity:
    """Radial kernel for a data generator.

    ``raw`` keeps the unit-scale Student kernel; it is the only option for
    Student kernels with ``nu <= 2`` and is accepted for any Student.
    """
    return resolve_density(name, d, scaling)


@dataclass(frozen=True)
class AlternativeSpec:
    """One data-generating law of a simulation study.

    ``params`` holds the family-specific parameters:

    - ``elliptical``: ``kernel``
    - ``gse``: ``kernel``, ``lam``, optional ``skewing`` and ``lam_metric``
    - ``sas``: ``kernel``, ``eps``
    - ``gauss_mixture``: ``weights``, ``mu1``, ``mu2``, ``sigma1``, ``sigma2``

    ``kernel_scaling`` chooses between the standardized kernel and the raw
    unit-scale Student kernel.
    """

    family: str
    theta: tuple
    sigma: tuple | None = None
    params: dict = field(default_factory=dict)
    label: str = ""
    kernel_scaling: str = "standardized"

    def __post_init__(self):
        if self.family in RESERVED_FAMILIES:
            raise UnsupportedFamily(f"{self.family} alternatives are not implemented")
        if self.family not in ALT_FAMILIES:
            raise UnsupportedFamily(f"unknown alternative family {self.family!r}")
        object.__setattr__(self, "theta", tuple(float(v) for v in self.theta))
        if self.sigma is not None:
            object.__setattr__(self, "sigma", tuple(tuple(float(v) for v in row) for row in self.sigma))
        if self.family == "gauss_mixture":
            w = self.params.get("weights")
            if w is None or len(w) != 2 or min(w) <= 0 or abs(sum(w) - 1) > 1e-12:
                raise ConfigError("mixture weights must be two positive numbers summing to 1")
        elif self.sigma is None:
            raise ConfigError(f"{self.family} alternatives need a scatter matrix")
        if self.family != "gauss_mixture" and "kernel" not in self.params:
            raise ConfigError(f"{self.family} alternatives need a 'kernel' density")
        if self.kernel_scaling not in KERNEL_SCALES:
            raise ConfigError(f"kernel scaling must be one of {KERNEL_SCALES}")
        if self.family == "gse":
            if "lam" not in self.params or len(self.params["lam"]) != self.dim:
                raise ConfigError("gse alternatives need a 'lam' vector of the data dimension")
            if self.params.get("lam_metric", "sym") not in LAMBDA_METRICS:
                raise ConfigError(f"lam_metric must be one of {LAMBDA_METRICS}")
        if self.family == "sas" and ("eps" not in self.params or len(self.params["eps"]) != self.dim):
            raise ConfigError("sas alternatives need an 'eps' vector of the data dimension")
        if not self.label:
            object.__setattr__(self, "label", self.family)

    @property
    def dim(self) -> int:
        return len(self.theta)

    def kernel(self) -> RadialDensity:
        return kernel_density(self.params["kernel"], self.dim, self.kernel_scaling)

    def sample(self, n: int, rng) -> np.ndarray:
        rng = _rng(rng)
        p = self.params
        if self.family == "elliptical":
            return sample_elliptical(self.kernel(), self.theta, self.sigma, n, rng)
        if self.family == "gse":
            return sample_gse(
                self.kernel(),
                self.theta,
                self.sigma,
                p["lam"],
                n,
                rng,
                p.get("skewing", "gaussian"),
                p.get("lam_metric", "sym"),
            )
        if self.family == "sas":
            return sample_sas(self.kernel(), self.theta, self.sigma, p["eps"], n, rng)
        x = sample_gauss_mixture(p["weights"], p["mu1"], p["sigma1"], p["mu2"], p["sigma2"], n, rng)
        return x + np.asarray(self.theta)

    def to_dict(self) -> dict:
        out = {"family": self.family, "theta": list(self.theta), "params": _jsonable(self.params), "label": self.label}
        if self.sigma is not None:
            out["sigma"] = [list(r) for r in self.sigma]
        if self.kernel_scaling != "standardized":
            out["kernel_scaling"] = self.kernel_scaling
        return out

    @classmethod
    def from_dict(cls, obj: dict) -> "AlternativeSpec":
        try:
            return cls(
                family=obj["family"],
                theta=tuple(obj["theta"]),
                sigma=obj.get("sigma"),
                params=dict(obj.get("params", {})),
                label=obj.get("label", ""),
                kernel_scaling=obj.get("kernel_scaling", "standardized"),
            )
        except KeyError as exc:
            raise ConfigError(f"alternative is missing field {exc}") from None


def _jsonable(v):
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.generic):
        return v.item()
    return v


def gaussian_density(d: int) -> RadialDensity:
    return standardize("gaussian", d)
