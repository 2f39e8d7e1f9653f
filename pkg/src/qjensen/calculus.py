"""Matrix functional calculus and Frechet derivatives via divided differences.

For a Hermitian ``A = U diag(lam) U*`` and a scalar ``g`` of class C^1,

    Dg[A]{B} = U (G o (U* B U)) U*,   G[j, k] = g^[1](lam_j, lam_k),

where ``o`` is the entrywise product and ``g^[1]`` is the first divided
difference, ``(g(x) - g(y)) / (x - y)`` off the diagonal and ``g'(x)`` on it.
"""

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Optional

import numpy as np

from .hermitian import DomainError, ValidationError, as_hermitian

DEGENERACY_TAU = 1e-7
NEGATIVE_EIG_TOL = 1e-12


class MECPreconditionError(ValueError):
    """A superoperator that should be invertible is (numerically) singular."""


@dataclass(frozen=True)
class GeneratorFunction:
    """Scalar generator with analytic first and second derivatives.

    ``f`` is defined on ``[0, inf)`` (with ``f_at_zero`` as the continuous
    extension at 0); ``f1`` and ``f2`` are only ever evaluated on ``(0, inf)``.
    """

    name: str
    f: Callable
    f1: Callable
    f2: Optional[Callable]
    f_at_zero: float = float("nan")

    def value(self, x):
        x = np.asarray(x, dtype=float)
        zero = x == 0
        if not np.any(zero):
            return self.f(x)
        out = np.empty_like(x)
        out[~zero] = self.f(x[~zero])
        out[zero] = self.f_at_zero
        return out

    def derivative(self):
        """The generator ``f'`` (whose own derivative is ``f''``)."""
        if self.f2 is None:
            raise ValidationError(f"{self.name} carries no second derivative")
        return GeneratorFunction(f"{self.name}'", self.f1, self.f2, None)


# --- divided differences ---------------------------------------------------

def _near(x, y, tau):
    return np.abs(x - y) <= tau * (1.0 + np.maximum(np.abs(x), np.abs(y)))


def divided_difference(func, deriv, x, y, tau=DEGENERACY_TAU):
    """First divided difference ``func^[1](x, y)`` on the open half-line.

    For nearly coincident arguments (``|x - y| <= tau * (1 + max(|x|, |y|))``)
    the derivative at the midpoint is returned instead of the difference
    quotient, which would lose all significant digits.
    """
    if x <= 0 or y <= 0:
        raise DomainError(f"divided difference requires x, y > 0, got ({x}, {y})",
                          eigenvalue=min(x, y))
    if _near(x, y, tau):
        return float(deriv(0.5 * (x + y)))
    return float((func(x) - func(y)) / (x - y))


def divided_difference_table(func, deriv, lam, tau=DEGENERACY_TAU):
    """Loewner matrix ``[func^[1](lam_j, lam_k)]_{jk}`` for spectra of shape ``(..., n)``."""
    x = lam[..., :, None]
    y = lam[..., None, :]
    near = _near(x, y, tau)
    fx = func(lam)
    num = fx[..., :, None] - fx[..., None, :]
    den = np.where(near, 1.0, x - y)
    mid = deriv(0.5 * (x + y))
    return np.where(near, mid, num / den)


# --- functional calculus ----------------------------------------------------

def _clip_spectrum(w, tol):
    scale = 1.0 + np.abs(w).max(axis=-1, keepdims=True)
    bad = w < -tol * scale
    if np.any(bad):
        worst = float(w[bad].min())
        raise DomainError(f"negative eigenvalue {worst:.6g} outside [0, inf)", eigenvalue=worst)
    return np.where(w < 0, 0.0, w)


def _require_pd(w):
    lo = w.min()
    if not lo > 0:
        raise DomainError(f"eigenvalue {lo:.6g} outside the open domain (0, inf)",
                          eigenvalue=float(lo))


def _conj_t(U):
    return U.conj().swapaxes(-1, -2)


def _apply(g, A, tol):
    w, U = np.linalg.eigh(A)
    w = _clip_spectrum(w, tol)
    return (U * g.value(w)[..., None, :]) @ _conj_t(U)


def _trace(g, A, tol):
    w = _clip_spectrum(np.linalg.eigvalsh(A), tol)
    return g.value(w).sum(axis=-1)


def apply_function(g, A, tol=NEGATIVE_EIG_TOL):
    """``g(A) = U diag(g(lam)) U*`` for Hermitian ``A`` with spectrum in ``[0, inf)``."""
    A = as_hermitian(A)
    G = _apply(g, A, tol)
    return (G + G.conj().T) / 2


def trace_function(g, A, tol=NEGATIVE_EIG_TOL):
    """``tr g(A) = sum_k g(lam_k)``."""
    return float(_trace(g, as_hermitian(A), tol))


def _frechet(func, deriv, A, B, tau=DEGENERACY_TAU):
    # batched over leading axes of A; B broadcasts against A
    w, U = np.linalg.eigh(A)
    _require_pd(w)
    L = divided_difference_table(func, deriv, w, tau)
    Uh = _conj_t(U)
    return U @ (L * (Uh @ B @ U)) @ Uh


def frechet_apply(g, A, B, tau=DEGENERACY_TAU):
    """Frechet derivative ``Dg[A]{B}`` of ``A -> g(A)`` at a positive definite ``A``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    D = _frechet(g.f, g.f1, A, B, tau)
    return (D + D.conj().T) / 2


def finite_diff_directional(g, A, B, t):
    """Central difference ``(g(A + tB) - g(A - tB)) / (2t)``."""
    A = as_hermitian(A)
    B = as_hermitian(B)
    if not t > 0:
        raise ValidationError("step t must be positive")
    plus, minus = A + t * B, A - t * B
    for M in (plus, minus):
        _require_pd(np.linalg.eigvalsh(M))
    return (apply_function(g, plus) - apply_function(g, minus)) / (2 * t)


# --- superoperators ---------------------------------------------------------

@lru_cache(maxsize=None)
def _basis(n):
    E = np.zeros((n * n, n, n), dtype=complex)
    a = 0
    for j in range(n):
        E[a, j, j] = 1.0
        a += 1
    r = 1 / np.sqrt(2)
    for j in range(n):
        for k in range(j + 1, n):
            E[a, j, k] = E[a, k, j] = r
            a += 1
    for j in range(n):
        for k in range(j + 1, n):
            E[a, j, k] = 1j * r
            E[a, k, j] = -1j * r
            a += 1
    E.flags.writeable = False
    return E


def hermitian_basis(n):
    """Fixed orthonormal basis of the n x n Hermitian matrices (shape ``(n*n, n, n)``).

    Ordering: diagonal units, then ``(e_j e_k* + e_k e_j*)/sqrt2`` for ``j < k``,
    then ``i(e_j e_k* - e_k e_j*)/sqrt2`` for ``j < k``.
    """
    return _basis(n)


def to_coords(X):
    n = X.shape[-1]
    return np.einsum("ajk,...kj->...a", _basis(n), X).real


def from_coords(c):
    n = int(round(np.sqrt(c.shape[-1])))
    return np.einsum("...a,ajk->...jk", c, _basis(n))


@dataclass(frozen=True)
class SuperOperator:
    """A linear map on n x n Hermitian matrices as a real ``n^2 x n^2`` matrix."""

    dim: int
    matrix: np.ndarray = field(repr=False)
    base_point: np.ndarray = field(repr=False)
    generator: str

    def apply(self, X):
        return from_coords(self.matrix @ to_coords(X))

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.matrix)


def _superop_matrices(func, deriv, A):
    n = A.shape[-1]
    E = _basis(n)
    # images of every basis element, batched over base points
    images = _frechet(func, deriv, A[..., None, :, :], E)
    M = np.einsum("ajk,...bkj->...ab", E, images).real
    return (M + M.swapaxes(-1, -2)) / 2


def superop_matrix(g, A):
    """Representation of ``Dg'[A]`` in the fixed Hermitian basis."""
    A = as_hermitian(A)
    if g.f2 is None:
        raise ValidationError(f"{g.name} carries no second derivative")
    M = _superop_matrices(g.f1, g.f2, A)
    return SuperOperator(A.shape[0], M, A, f"D[{g.name}']")


def superop_invert(S, rcond=1e-12):
    """Inverse of a positive definite superoperator.

    Raises
    ------
    MECPreconditionError
        If ``lambda_min <= rcond * lambda_max``, i.e. the derivative map is
        not (numerically) invertible.
    """
    w, V = np.linalg.eigh(S.matrix)
    if not w[0] > rcond * w[-1]:
        raise MECPreconditionError(
            f"{S.generator} at this base point is not invertible "
            f"(lambda_min={w[0]:.3e}, lambda_max={w[-1]:.3e})"
        )
    Minv = (V / w) @ V.T
    return SuperOperator(S.dim, (Minv + Minv.T) / 2, S.base_point, f"inv({S.generator})")


def _inverse_superop_matrices(func, deriv, A, rcond=1e-12):
    M = _superop_matrices(func, deriv, A)
    w, V = np.linalg.eigh(M)
    if not np.all(w[..., 0] > rcond * w[..., -1]):
        raise MECPreconditionError("derivative superoperator is not invertible")
    Minv = (V / w[..., None, :]) @ V.swapaxes(-1, -2)
    return (Minv + Minv.swapaxes(-1, -2)) / 2
