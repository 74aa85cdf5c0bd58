"""Standardized radial densities, their scores and quadrature functionals.

A radial density ``f`` is stored up to its normalizing constant. All
expectations are taken under the density of the Mahalanobis radius,
``f_tilde(r) = r**(d-1) f(r) / mu_{d-1;f}``, and every constructed density
is scaled so that ``E[rho**2] == d``.

Student densities use the closed-form radial scale ``sqrt((nu-2)/nu)``,
which turns ``(1 + r**2/nu)**(-(d+nu)/2)`` into
``(1 + r**2/(nu-2))**(-(d+nu)/2)``.
"""

from __future__ import annotations

import math
import re
import warnings
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import (
    ConfigError,
    ContractViolation,
    DivergentMoment,
    InadmissiblePair,
    NumericalFailure,
    UnsupportedFamily,
)

QUAD_RTOL = 1e-12
QUAD_LIMIT = 500
QUAD_ACCEPT_RTOL = 1e-8
F1F_EPSILON = 0.1
PI_DOT_GAUSS = 1.0 / math.sqrt(2.0 * math.pi)

_FAMILIES = ("gaussian", "student", "powerexp")


@dataclass(frozen=True)
class RadialDensity:
    """Radial density ``f(r) = f0(r / scale)`` in dimension ``dim``.

    Use :func:`standardize` (or :func:`parse_density`) rather than the
    constructor; it picks the scale that enforces ``E[rho**2] == dim``.
    ``param`` is the Student degrees of freedom or the power-exponential
    exponent and is ``None`` for the Gaussian.
    """

    family: str
    dim: int
    param: float | None
    scale: float

    def __post_init__(self):
        if self.family not in _FAMILIES:
            raise UnsupportedFamily(f"unknown radial family {self.family!r}")
        if int(self.dim) != self.dim or self.dim < 1:
            raise ContractViolation(f"dimension must be a positive integer, got {self.dim}")
        if not self.scale > 0:
            raise ContractViolation("radial scale must be positive")
        if self.family == "student" and not (self.param is not None and self.param > 0):
            raise UnsupportedFamily("student family needs nu > 0")
        if self.family == "powerexp" and not (self.param is not None and self.param > 0):
            raise UnsupportedFamily("power-exponential family needs beta > 0")

    @property
    def nu(self) -> float:
        return self.param if self.family == "student" else math.inf

    @property
    def is_gaussian(self) -> bool:
        return self.family == "gaussian"

    @property
    def name(self) -> str:
        if self.family == "gaussian":
            return "gaussian"
        p = f"{self.param:g}"
        return f"t{p}" if self.family == "student" else f"powerexp({p})"

    @property
    def tail_index(self) -> float:
        """Supremum of the orders ``j`` for which ``E[rho**j]`` is finite."""
        return self.nu

    def log_f(self, r):
        """Unnormalized log radial density."""
        s = np.asarray(r, dtype=float) / self.scale
        if self.family == "gaussian":
            return -0.5 * s * s
        if self.family == "student":
            nu = self.param
            return -0.5 * (self.dim + nu) * np.log1p(s * s / nu)
        return -0.5 * s ** (2.0 * self.param)

    def log_mu(self, k: float) -> float:
        """Closed-form ``log mu_{k;f}`` with ``mu_k = int r**k f(r) dr``.

        Raises
        ------
        DivergentMoment
            If the integral is infinite.
        """
        a, d = self.scale, self.dim
        if k <= -1:
            raise DivergentMoment(f"mu_{k} diverges at the origin")
        if self.family == "gaussian":
            return (k - 1) / 2 * math.log(2.0) + math.lgamma((k + 1) / 2) + (k + 1) * math.log(a)
        if self.family == "student":
            nu = self.param
            if k + 1 >= d + nu:
                raise DivergentMoment(f"mu_{k} diverges for Student nu={nu:g}, d={d}")
            # substitute t = s**2/nu: 0.5 nu^{(k+1)/2} B((k+1)/2, (d+nu-k-1)/2)
            return (
                math.log(0.5)
                + (k + 1) / 2 * math.log(nu)
                + special.betaln((k + 1) / 2, (d + nu - k - 1) / 2)
                + (k + 1) * math.log(a)
            )
        b = self.param
        e = (k + 1) / (2 * b)
        return (k + 1) * math.log(a) + e * math.log(2.0) + math.lgamma(e) - math.log(2 * b)


def _raw_second_moment(family: str, d: int, param) -> float:
    """``E[rho**2]`` of the unit-scale member of a family."""
    if family == "gaussian":
        return float(d)
    if family == "student":
        if param <= 2:
            raise UnsupportedFamily(f"Student nu={param:g} has no second moment; need nu > 2")
        return d * param / (param - 2)
    return 2.0 ** (1 / param) * math.exp(
        math.lgamma((d + 2) / (2 * param)) - math.lgamma(d / (2 * param))
    )


def standardize(family: str, d: int, param: float | None = None) -> RadialDensity:
    """Member of ``family`` in dimension ``d`` rescaled so that ``E[rho**2] == d``.

    Raises
    ------
    UnsupportedFamily
        Unknown family, or Student with ``nu <= 2``.
    """
    if family not in _FAMILIES:
        raise UnsupportedFamily(f"unknown radial family {family!r}")
    if family == "gaussian":
        return RadialDensity("gaussian", d, None, 1.0)
    if param is None or not param > 0:
        raise UnsupportedFamily(f"{family} requires a positive parameter")
    scale = math.sqrt(d / _raw_second_moment(family, d, float(param)))
    return RadialDensity(family, d, float(param), scale)


def raw_student(d: int, nu: float) -> RadialDensity:
    """Unit-scale Student kernel ``(1 + r**2/nu)**(-(d+nu)/2)``, not standardized.

    Only used as a data generator for heavy tails; it is not a member of the
    standardized class when ``nu > 2``.
    """
    return RadialDensity("student", d, float(nu), 1.0)


_NAME_RE = re.compile(
    r"^\s*(?:(gaussian|normal)|t(\d+(?:\.\d+)?)|student\((\d+(?:\.\d+)?)\)"
    r"|powerexp\((\d+(?:\.\d+)?)\))\s*$",
    re.IGNORECASE,
)


def parse_family(name: str) -> tuple[str, float | None]:
    """``(family, param)`` from a config string such as ``t4.1`` or ``gaussian``."""
    m = _NAME_RE.match(name)
    if not m:
        raise UnsupportedFamily(f"cannot parse radial density {name!r}")
    if m.group(1):
        return "gaussian", None
    if m.group(2) or m.group(3):
        return "student", float(m.group(2) or m.group(3))
    return "powerexp", float(m.group(4))


DENSITY_SCALES = ("standardized", "raw")


def resolve_density(name: str, d: int, scaling: str = "standardized") -> RadialDensity:
    """Density named ``name`` in dimension ``d``, standardized or at unit scale.

    ``raw`` keeps ``scale == 1``; for Student this is the kernel
    ``(1 + r**2/nu)**(-(d+nu)/2)`` and it is available for every ``nu > 0``.
    """
    if scaling not in DENSITY_SCALES:
        raise ConfigError(f"density scaling must be one of {DENSITY_SCALES}, got {scaling!r}")
    if scaling == "raw":
        family, param = parse_family(name)
        return RadialDensity(family, d, param, 1.0)
    return parse_density(name, d)


def parse_density(name: str, d: int) -> RadialDensity:
    """Standardized density from a config string.

    Accepted forms: ``gaussian``, ``t<nu>`` (e.g. ``t4``, ``t2.1``),
    ``student(<nu>)`` and ``powerexp(<beta>)``.
    """
    family, param = parse_family(name)
    return standardize(family, d, param)


# ---------------------------------------------------------------------------
# scores
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScoreBundle:
    phi: Callable
    phi_prime: Callable
    psi: Callable


def scores(f: RadialDensity) -> ScoreBundle:
    """Location score ``phi = -f'/f``, its derivative, and the scatter score.

    Every supported family is continuously differentiable, so ``psi`` is the
    same function as ``phi``.
    """
    a, d = f.scale, f.dim
    if f.family == "gaussian":
        a2 = a * a

        def phi(r):
            return np.asarray(r, dtype=float) / a2

        def phi_prime(r):
            return np.full_like(np.asarray(r, dtype=float), 1.0 / a2)

    elif f.family == "student":
        c, k = a * a * f.param, d + f.param

        def phi(r):
            r = np.asarray(r, dtype=float)
            return k * r / (c + r * r)

        def phi_prime(r):
            r2 = np.asarray(r, dtype=float) ** 2
            return k * (c - r2) / (c + r2) ** 2

    else:
        b = f.param

        def phi(r):
            s = np.asarray(r, dtype=float) / a
            return b * s ** (2 * b - 1) / a

        def phi_prime(r):
            s = np.asarray(r, dtype=float) / a
            return b * (2 * b - 1) * s ** (2 * b - 2) / (a * a)

    return ScoreBundle(phi=phi, phi_prime=phi_prime, psi=phi)


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


def radial_pdf_tilde(f: RadialDensity, r):
    """Density of the Mahalanobis radius ``rho`` under ``f``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise ContractViolation("radial density is evaluated at r > 0 only")
    return np.exp((f.dim - 1) * np.log(r) + f.log_f(r) - f.log_mu(f.dim - 1))


def _quad(fn, lo, hi) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        out = integrate.quad(fn, lo, hi, epsabs=0.0, epsrel=QUAD_RTOL, limit=QUAD_LIMIT, full_output=1)
    val, err = out[0], out[1]
    if not math.isfinite(val) or (len(out) > 3 and err > QUAD_ACCEPT_RTOL * max(abs(val), 1e-300)):
        raise NumericalFailure(f"quadrature did not converge (value {val:.6g}, error {err:.2g})")
    return float(val)


def expect(g: RadialDensity, h: Callable[[float], float], growth: float = 0.0) -> float:
    """``E_g[h(rho)]`` by adaptive Gauss-Kronrod quadrature.

    Parameters
    ----------
    g : RadialDensity
    h : callable
        Scalar integrand in ``r``.
    growth : float
        Polynomial growth order of ``|h|`` at infinity. The expectation is
        declared divergent when ``growth >= g.tail_index``.
    """
    if growth >= g.tail_index:
        raise DivergentMoment(f"E[rho^{growth:g}] is infinite under {g.name} (d={g.dim})")
    d = g.dim
    lmu = g.log_mu(d - 1)

    def integrand(r):
        if r <= 0.0:
            return 0.0 if d > 1 else float(h(r)) * math.exp(float(g.log_f(r)) - lmu)
        return float(h(r)) * math.exp((d - 1) * math.log(r) + float(g.log_f(r)) - lmu)

    split = g.scale * (math.sqrt(d) + 2.0)
    return _quad(integrand, 0.0, split) + _quad(integrand, split, math.inf)


@lru_cache(maxsize=4096)
def radial_moment(g: RadialDensity, j: float) -> float:
    """``E_g[rho**j] = mu_{d-1+j;g} / mu_{d-1;g}`` by quadrature."""
    return expect(g, lambda r: r**j, growth=j)


def radial_moment_exact(g: RadialDensity, j: float) -> float:
    """Closed-form ``E_g[rho**j]`` from the ``mu`` integrals."""
    return math.exp(g.log_mu(g.dim - 1 + j) - g.log_mu(g.dim - 1))


def moment_mu(f: RadialDensity, k: float) -> float:
    """``mu_{k;f} = int_0^inf r**k f(r) dr`` (quadrature for the moment ratio)."""
    return radial_moment(f, k - f.dim + 1) * math.exp(f.log_mu(f.dim - 1))


def standardization_ratio(f: RadialDensity) -> float:
    """``mu_{d+1;f} / mu_{d-1;f}``, equal to ``d`` for every standardized density."""
    return radial_moment(f, 2)


def _score_growth(f: RadialDensity) -> float:
    """Growth order of ``phi_f`` at infinity."""
    if f.family == "student":
        return -1.0
    if f.family == "gaussian":
        return 1.0
    return 2.0 * f.param - 1.0


def _check_same_dim(f, g):
    if f.dim != g.dim:
        raise ContractViolation(f"densities live in different dimensions ({f.dim} vs {g.dim})")


@lru_cache(maxsize=1024)
def fisher_location(f: RadialDensity) -> float:
    """``I_{d,f} = E_f[phi_f(rho)**2]``."""
    phi = scores(f).phi
    return expect(f, lambda r: float(phi(r)) ** 2, growth=2 * max(_score_growth(f), 0.0))


@lru_cache(maxsize=1024)
def fisher_scatter(f: RadialDensity) -> float:
    """``J_{d,f} = E_f[rho**2 psi_f(rho)**2]``."""
    psi = scores(f).psi
    return expect(f, lambda r: (r * float(psi(r))) ** 2, growth=2 * max(_score_growth(f) + 1, 0.0))


def check_admissible(f: RadialDensity, g: RadialDensity, eps: float = F1F_EPSILON) -> None:
    """Verify that ``g`` lies in the class on which ``f``-scores are valid.

    Both ``phi_f' + (d-1) phi_f / r`` and ``phi_f**(2+eps)`` must be
    integrable under ``g``. Growth orders are compared with the tail index
    of ``g``; only ``eps = 0.1`` is used by default.

    Raises
    ------
    InadmissiblePair
    """
    _check_same_dim(f, g)
    p = max(_score_growth(f), 0.0)
    if p * (2 + eps) >= g.tail_index or p >= g.tail_index:
        raise InadmissiblePair(f"{g.name} is not admissible for reference {f.name} (d={f.dim})")


@lru_cache(maxsize=4096)
def cross_info(f: RadialDensity, g: RadialDensity) -> float:
    """``K_{d,f,g} = E_g[phi_f'(rho) + (d-1) phi_f(rho) / rho]``.

    Raises
    ------
    InadmissiblePair
        If ``g`` is outside the admissible class for ``f`` or ``|K| < 1e-10``.
    """
    check_admissible(f, g)
    sb, d = scores(f), f.dim
    k = expect(
        g,
        lambda r: float(sb.phi_prime(r)) + (d - 1) * float(sb.phi(r)) / r,
        growth=max(_score_growth(f) - 1, 0.0),
    )
    if abs(k) < 1e-10:
        raise InadmissiblePair(f"K vanishes for reference {f.name} under {g.name}")
    return k


@lru_cache(maxsize=4096)
def alpha_const(f: RadialDensity, g: RadialDensity) -> float:
    """``alpha_{d,f,g} = E_g[rho phi_f(rho)]``."""
    check_admissible(f, g)
    phi = scores(f).phi
    return expect(g, lambda r: r * float(phi(r)), growth=max(_score_growth(f) + 1, 0.0))


@lru_cache(maxsize=4096)
def gamma_const(f: RadialDensity, g: RadialDensity) -> float:
    """``gamma_{d,f,g} = E_g[(rho - d phi_f(rho) / K_{d,f,g})**2]``."""
    k = cross_info(f, g)
    phi, d = scores(f).phi, f.dim
    return expect(
        g,
        lambda r: (r - d * float(phi(r)) / k) ** 2,
        growth=2 * max(_score_growth(f), 1.0),
    )


def c_d(d: int) -> float:
    """``E|U_1|**3`` for ``U`` uniform on the unit sphere of ``R^d`` (``d >= 2``)."""
    if d < 2:
        raise ContractViolation("c_d is defined for d >= 2")
    return 4.0 * math.gamma(d / 2) / ((d * d - 1) * math.sqrt(math.pi) * math.gamma((d - 1) / 2))


def gamma_pg_from_moments(d: int, m1: float, m2: float, m3: float, m4: float) -> float:
    """Pseudo-Gaussian variance constant from radial moments ``m_k = E[rho**k]``."""
    c2 = c_d(d) ** 2
    return 3.0 / (d * (d + 2)) * m4 - 2.0 * c2 * (d + 1) * m1 * m3 + c2 * (d + 1) ** 2 / d * m1 * m1 * m2


@lru_cache(maxsize=1024)
def gamma_pg(g: RadialDensity) -> float:
    """``gamma_G`` under ``g``; needs a finite fourth radial moment."""
    m = [radial_moment(g, k) for k in (1, 2, 3, 4)]
    return gamma_pg_from_moments(g.dim, *m)
