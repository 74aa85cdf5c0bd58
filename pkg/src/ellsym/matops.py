"""Symmetric positive definite matrices and the vec/vech special matrices.

Conventions
-----------
``vec`` stacks columns (Fortran order). ``vech`` takes the upper-triangular
entries row by row, ``(s11, s12, ..., s1d, s22, ..., sdd)``; the duplication
matrix returned by :func:`duplication_P` uses the same ordering, so that
``duplication_P(d).T @ vech(S) == vec(S)``.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .errors import ContractViolation, IllConditioned, NumericalFailure

SYM_ATOL = 1e-12
SPD_RTOL = 1e-12
MAX_CONDITION = 1e12


class SpdMatrix:
    """Immutable symmetric positive definite ``d x d`` matrix.

    The eigendecomposition is computed once at construction and reused by
    :meth:`sqrt`, :meth:`inv_sqrt` and :meth:`inv`.

    Parameters
    ----------
    entries : array_like, shape (d, d)
        Matrix entries. Symmetry is checked to absolute tolerance 1e-12
        (relative to the largest entry for badly scaled input) and the
        matrix is symmetrized before decomposition.

    Raises
    ------
    ContractViolation
        If the input is not square, not symmetric, or its smallest
        eigenvalue is below ``1e-12`` times the largest.
    """

    __slots__ = ("_a", "_w", "_v")

    def __init__(self, entries):
        a = np.array(entries, dtype=float, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
            raise ContractViolation(f"expected a non-empty square matrix, got shape {a.shape}")
        scale = max(1.0, float(np.max(np.abs(a))))
        if not np.allclose(a, a.T, rtol=0.0, atol=SYM_ATOL * scale):
            raise ContractViolation("matrix is not symmetric")
        a = 0.5 * (a + a.T)
        try:
            w, v = np.linalg.eigh(a)
        except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
            raise NumericalFailure(f"eigendecomposition failed: {exc}") from exc
        if not np.all(np.isfinite(w)) or w[-1] <= 0 or w[0] < SPD_RTOL * w[-1]:
            raise ContractViolation(
                f"matrix is not positive definite (eigenvalues {w[0]:.3g} .. {w[-1]:.3g})"
            )
        a.setflags(write=False)
        w.setflags(write=False)
        v.setflags(write=False)
        self._a, self._w, self._v = a, w, v

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    @property
    def entries(self) -> np.ndarray:
        return self._a

    @property
    def eigenvalues(self) -> np.ndarray:
        return self._w

    @property
    def eigenvectors(self) -> np.ndarray:
        return self._v

    @property
    def condition(self) -> float:
        return float(self._w[-1] / self._w[0])

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self._a.copy() if copy else self._a
        return self._a.astype(dtype)

    def __repr__(self) -> str:
        return f"SpdMatrix({self._a.tolist()!r})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, SpdMatrix):
            return NotImplemented
        return bool(np.array_equal(self._a, other._a))

    __hash__ = None

    def _power(self, p: float) -> np.ndarray:
        return (self._v * self._w**p) @ self._v.T

    def sqrt(self) -> np.ndarray:
        return self._power(0.5)

    def inv_sqrt(self) -> np.ndarray:
        self._check_conditioning()
        return self._power(-0.5)

    def inv(self) -> np.ndarray:
        self._check_conditioning()
        return self._power(-1.0)

    def logdet(self) -> float:
        return float(np.sum(np.log(self._w)))

    def scaled(self, s: float) -> "SpdMatrix":
        return SpdMatrix(s * self._a)

    def _check_conditioning(self):
        if self.condition > MAX_CONDITION:
            raise IllConditioned(f"condition number {self.condition:.3g} exceeds {MAX_CONDITION:g}")


def as_spd(S) -> SpdMatrix:
    return S if isinstance(S, SpdMatrix) else SpdMatrix(S)


def sym_sqrt(S) -> SpdMatrix:
    """Unique symmetric positive definite square root of ``S``."""
    return SpdMatrix(as_spd(S).sqrt())


def sym_inv_sqrt(S) -> SpdMatrix:
    """Symmetric inverse square root ``R`` with ``R @ S @ R == I``.

    Raises
    ------
    IllConditioned
        If the condition number of ``S`` exceeds 1e12. A positive definite
        array that is this badly conditioned is reported as ill-conditioned
        rather than as a failed :class:`SpdMatrix` construction.
    """
    if not isinstance(S, SpdMatrix):
        a = _check_symmetric(S)
        w = np.linalg.eigvalsh(0.5 * (a + a.T))
        if w[0] > 0 and w[0] < w[-1] / MAX_CONDITION:
            raise IllConditioned(f"condition number {w[-1] / w[0]:.3g} exceeds {MAX_CONDITION:g}")
    return SpdMatrix(as_spd(S).inv_sqrt())


def quad_form_inv(v, S) -> float:
    """Return ``v' S^{-1} v`` via the eigendecomposition of ``S``."""
    S = as_spd(S)
    v = np.asarray(v, dtype=float)
    if v.shape != (S.dim,):
        raise ContractViolation(f"vector of length {S.dim} expected, got shape {v.shape}")
    S._check_conditioning()
    z = S.eigenvectors.T @ v
    return float(np.sum(z * z / S.eigenvalues))


def vec(A) -> np.ndarray:
    """Column-stacking vectorization."""
    return np.asarray(A, dtype=float).reshape(-1, order="F")


def _check_symmetric(S) -> np.ndarray:
    S = np.asarray(S, dtype=float)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise ContractViolation(f"square matrix expected, got shape {S.shape}")
    scale = max(1.0, float(np.max(np.abs(S)))) if S.size else 1.0
    if not np.allclose(S, S.T, rtol=0.0, atol=SYM_ATOL * scale):
        raise ContractViolation("vech requires a symmetric matrix")
    return S


def vech(S) -> np.ndarray:
    """Upper-triangular entries of a symmetric matrix, row by row."""
    S = _check_symmetric(S)
    return S[np.triu_indices(S.shape[0])]


def unvech(v, d: int) -> np.ndarray:
    """Inverse of :func:`vech`."""
    v = np.asarray(v, dtype=float)
    if v.shape != (d * (d + 1) // 2,):
        raise ContractViolation(f"vech of a {d}x{d} matrix has length {d * (d + 1) // 2}")
    S = np.zeros((d, d))
    S[np.triu_indices(d)] = v
    return S + np.triu(S, 1).T


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@lru_cache(maxsize=32)
def duplication_P(d: int) -> np.ndarray:
    """The ``(d(d+1)/2) x d^2`` matrix ``P`` with ``P.T @ vech(S) == vec(S)``."""
    if d < 1:
        raise ContractViolation("dimension must be positive")
    P = np.zeros((d * (d + 1) // 2, d * d))
    for k, (i, j) in enumerate(zip(*np.triu_indices(d))):
        # vec index of entry (i, j) is i + j*d
        P[k, i + j * d] = 1.0
        P[k, j + i * d] = 1.0
    return _frozen(P)


@lru_cache(maxsize=32)
def commutation_K(d: int) -> np.ndarray:
    """Commutation matrix: ``K @ vec(A) == vec(A.T)``."""
    if d < 1:
        raise ContractViolation("dimension must be positive")
    K = np.zeros((d * d, d * d))
    for i in range(d):
        for j in range(d):
            K[i * d + j, j * d + i] = 1.0
    return _frozen(K)


@lru_cache(maxsize=32)
def projection_J(d: int) -> np.ndarray:
    """``(vec I)(vec I)'``."""
    if d < 1:
        raise ContractViolation("dimension must be positive")
    e = vec(np.eye(d))
    return _frozen(np.outer(e, e))
