"""Hermitian matrix utilities: validation, spectra, Hilbert-Schmidt geometry,
Loewner order comparisons and seeded random generation.

Matrices are plain complex ``numpy`` arrays of shape ``(n, n)``; most helpers
also accept stacks of shape ``(..., n, n)``.
"""

from typing import NamedTuple

import numpy as np

HERMITIAN_RTOL = 1e-12
DEFAULT_LOEWNER_TOL = 1e-9


class ValidationError(ValueError):
    """Raised when an input fails a structural precondition."""


class DomainError(ValueError):
    """Raised when a spectrum leaves the domain of a scalar function."""

    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class SpectralDecomposition(NamedTuple):
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self):
        U = self.eigenvectors
        return (U * self.eigenvalues[..., None, :]) @ U.conj().swapaxes(-1, -2)


class ConvexCombination(NamedTuple):
    weights: np.ndarray

    @classmethod
    def from_weights(cls, weights):
        w = np.asarray(weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValidationError("weights must be a non-empty vector")
        if np.any(w < 0) or np.any(w > 1):
            raise ValidationError("weights must lie in [0, 1]")
        if abs(w.sum() - 1.0) > 1e-14 * max(1, w.size):
            raise ValidationError(f"weights sum to {w.sum()!r}, not 1")
        return cls(w)

    def combine(self, items):
        return sum(a * x for a, x in zip(self.weights, items))


def hermitian_defect(A):
    """Return ``(defect, (j, k))`` for the worst violating entry pair."""
    A = np.asarray(A)
    D = np.abs(A - A.conj().T)
    j, k = np.unravel_index(np.argmax(D), D.shape)
    return float(D[j, k]), (int(j), int(k))


def as_hermitian(A, rtol=HERMITIAN_RTOL):
    """Validate ``A`` as a square Hermitian matrix and return it as complex.

    Raises
    ------
    ValidationError
        If ``A`` is not square, empty, or if some entry pair ``(j, k)``
        violates ``A[j, k] == conj(A[k, j])`` beyond
        ``rtol * (1 + max|A|)``.
    """
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] < 1:
        raise ValidationError(f"expected a non-empty square matrix, got shape {A.shape}")
    defect, (j, k) = hermitian_defect(A)
    if defect > rtol * (1.0 + np.abs(A).max()):
        raise ValidationError(
            f"matrix is not Hermitian: |A[{j},{k}] - conj(A[{k},{j}])| = {defect:.3e}"
        )
    return A


def eigendecompose(A):
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    A = as_hermitian(A)
    w, U = np.linalg.eigh(A)
    return SpectralDecomposition(w, U)


def _check_same_shape(A, B):
    if np.shape(A) != np.shape(B):
        raise ValidationError(f"dimension mismatch: {np.shape(A)} vs {np.shape(B)}")


def hs_inner(A, B):
    """Hilbert-Schmidt inner product ``tr(AB)`` (real part) of Hermitian matrices.

    Works on stacks: the trace is taken over the last two axes.
    """
    _check_same_shape(A, B)
    # tr(AB) = sum_jk A_jk B_kj
    return np.einsum("...jk,...kj->...", A, B).real


def spectral_radius(A):
    return float(np.abs(np.linalg.eigvalsh(A)).max())


def loewner_leq(A, B, tol=DEFAULT_LOEWNER_TOL):
    """Return True iff ``A <= B`` in the Loewner order, up to a relative tolerance.

    The test is ``lambda_min(B - A) >= -tol * (1 + rho(B - A))``. Real symmetric
    arrays (e.g. superoperator matrices) are accepted as well.
    """
    if tol < 0:
        raise ValidationError("tol must be non-negative")
    _check_same_shape(A, B)
    w = np.linalg.eigvalsh(np.asarray(B) - np.asarray(A))
    return bool(w[0] >= -tol * (1.0 + np.abs(w).max()))


def _rng(seed):
    return np.random.default_rng(seed)


def _complex_gaussian(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def _haar(rng, n):
    Q, R = np.linalg.qr(_complex_gaussian(rng, (n, n)))
    d = np.diagonal(R)
    return Q * (d / np.abs(d))


def random_unitary(n, seed):
    """Haar-distributed unitary from the QR factorisation of a complex Ginibre matrix."""
    return _haar(_rng(seed), n)


def random_pd(n, spectrum_lo, spectrum_hi, seed):
    """Random positive definite matrix ``U diag(s) U*`` with controlled spectrum.

    ``s`` is uniform on ``[spectrum_lo, spectrum_hi]`` and ``U`` is Haar.
    The same seed always gives the same matrix.
    """
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not 0 < spectrum_lo <= spectrum_hi:
        raise ValidationError(f"invalid spectrum range [{spectrum_lo}, {spectrum_hi}]")
    rng = _rng(seed)
    U = _haar(rng, n)
    s = rng.uniform(spectrum_lo, spectrum_hi, size=n)
    A = (U * s) @ U.conj().T
    return (A + A.conj().T) / 2


def random_hermitian(n, scale, seed):
    """Random Hermitian ``scale * (G + G*) / 2`` for a complex Gaussian ``G``."""
    if n < 1:
        raise ValidationError("n must be >= 1")
    if not scale > 0:
        raise ValidationError("scale must be positive")
    G = _complex_gaussian(_rng(seed), (n, n))
    return scale * (G + G.conj().T) / 2


def random_vector(n, seed):
    return _complex_gaussian(_rng(seed), (n,))


# --- matrix JSON -----------------------------------------------------------

def matrix_to_json(A):
    """Serialise a square complex matrix as ``{"dim": n, "entries": [[[re, im], ...], ...]}``."""
    A = np.asarray(A, dtype=complex)
    return {
        "dim": int(A.shape[0]),
        "entries": [[[float(z.real), float(z.imag)] for z in row] for row in A],
    }


def matrix_from_json(obj, check_hermitian=True):
    try:
        n = int(obj["dim"])
        entries = obj["entries"]
        A = np.array([[complex(re, im) for re, im in row] for row in entries], dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix JSON: {exc}") from exc
    if A.shape != (n, n):
        raise ValidationError(f"declared dim {n} does not match entries of shape {A.shape}")
    return as_hermitian(A) if check_hermitian else A


def vector_to_json(v):
    v = np.asarray(v, dtype=complex)
    return {"dim": int(v.shape[0]), "vector": [[float(z.real), float(z.imag)] for z in v]}


def vector_from_json(obj):
    try:
        n = int(obj["dim"])
        v = np.array([complex(re, im) for re, im in obj["vector"]], dtype=complex)
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed vector JSON: {exc}") from exc
    if v.shape != (n,):
        raise ValidationError(f"declared dim {n} does not match vector of length {v.size}")
    return v
