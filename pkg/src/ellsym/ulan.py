"""Distances, signs, central sequence blocks and Fisher information blocks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation, DegenerateError
from .matops import SpdMatrix, as_spd, commutation_K, duplication_P, projection_J, vec
from .radial import PI_DOT_GAUSS, RadialDensity, fisher_location, fisher_scatter, scores


@dataclass(frozen=True)
class SampleDecomposition:
    """Mahalanobis distances ``d_i`` and unit signs ``U_i`` about ``(location, scatter)``."""

    distances: np.ndarray = field(repr=False)
    signs: np.ndarray = field(repr=False)
    location: np.ndarray
    scatter: SpdMatrix

    @property
    def n(self) -> int:
        return self.distances.shape[0]

    @property
    def dim(self) -> int:
        return self.signs.shape[1]

    def moment(self, k: float) -> float:
        """Empirical radial moment ``m_k = mean(d_i**k)``."""
        return float(np.mean(self.distances**k))


def decompose(data, theta, sigma) -> SampleDecomposition:
    """Split ``data`` into distances and signs in the metric ``sigma``.

    Raises
    ------
    DegenerateError
        If some observation equals ``theta`` (zero distance).
    """
    x = np.asarray(data, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    S = as_spd(sigma)
    theta = np.asarray(theta, dtype=float).reshape(-1)
    if x.shape[1] != S.dim or theta.shape != (S.dim,):
        raise ContractViolation("data, location and scatter dimensions disagree")
    z = (x - theta) @ S.inv_sqrt()
    dist = np.linalg.norm(z, axis=1)
    if np.any(dist == 0.0):
        raise DegenerateError("an observation coincides with the location (zero distance)")
    u = z / dist[:, None]
    for a in (dist, u, theta):
        a.setflags(write=False)
    return SampleDecomposition(dist, u, theta, S)


def sign_cubes(u: np.ndarray) -> np.ndarray:
    """Componentwise ``U_ij**2 sign(U_ij)``."""
    return u * np.abs(u)


@dataclass(frozen=True)
class CentralSequence:
    loc_block: np.ndarray
    scatter_block: np.ndarray
    skew_block: np.ndarray
    pi_dot: float

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.loc_block, self.scatter_block, self.skew_block])


def skew_block(dec: SampleDecomposition, pi_dot: float = PI_DOT_GAUSS) -> np.ndarray:
    """``2 n^{-1/2} pi_dot sum d_i U_i``; free of the radial density."""
    return 2.0 * pi_dot * (dec.distances @ dec.signs) / np.sqrt(dec.n)


def central_sequence(dec: SampleDecomposition, f: RadialDensity, pi_dot: float = PI_DOT_GAUSS) -> CentralSequence:
    """Location, scatter and skewness blocks of the central sequence at ``f``."""
    if f.dim != dec.dim:
        raise ContractViolation(f"density dimension {f.dim} does not match data dimension {dec.dim}")
    d, n = dec.dim, dec.n
    sb = scores(f)
    root_inv = dec.scatter.inv_sqrt()
    dist, u = dec.distances, dec.signs
    loc = root_inv @ (sb.phi(dist) @ u) / np.sqrt(n)
    # sum_i vec(psi(d_i) d_i U_i U_i' - I)
    w = sb.psi(dist) * dist
    M = (u.T * w) @ u - n * np.eye(d)
    kron_inv = np.kron(root_inv, root_inv)
    scat = 0.5 * duplication_P(d) @ kron_inv @ vec(M) / np.sqrt(n)
    return CentralSequence(loc, scat, skew_block(dec, pi_dot), float(pi_dot))


@dataclass(frozen=True)
class FisherBlocks:
    g11: np.ndarray
    g13: np.ndarray
    g22: np.ndarray
    g33: np.ndarray

    def assembled(self) -> np.ndarray:
        """Full information matrix ordered as (location, vech scatter, skewness)."""
        d = self.g11.shape[0]
        q = self.g22.shape[0]
        G = np.zeros((2 * d + q, 2 * d + q))
        G[:d, :d] = self.g11
        G[d : d + q, d : d + q] = self.g22
        G[d + q :, d + q :] = self.g33
        G[:d, d + q :] = self.g13
        G[d + q :, :d] = self.g13.T
        return G


def fisher_blocks(sigma, f: RadialDensity, pi_dot: float = PI_DOT_GAUSS) -> FisherBlocks:
    """Non-zero blocks of the Fisher information at scatter ``sigma`` and density ``f``.

    The location parameter does not enter the information, so only ``sigma``
    is needed.
    """
    S = as_spd(sigma)
    d = S.dim
    if f.dim != d:
        raise ContractViolation("density and scatter dimensions disagree")
    I, J = fisher_location(f), fisher_scatter(f)
    root_inv = S.inv_sqrt()
    g11 = (I / d) * S.inv()
    g13 = 2.0 * pi_dot * root_inv
    g33 = 4.0 * pi_dot**2 * np.eye(d)
    Jd = projection_J(d)
    core = (J / (d * (d + 2))) * (np.eye(d * d) + commutation_K(d) + Jd) - Jd
    kron_inv = np.kron(root_inv, root_inv)
    P = duplication_P(d)
    g22 = 0.25 * P @ kron_inv @ core @ kron_inv @ P.T
    return FisherBlocks(g11, g13, 0.5 * (g22 + g22.T), g33)
