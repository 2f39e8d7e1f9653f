"""Quantum Jensen (f, lambda)-divergence, directly and via its integral representation.

    J(A, B) = (1 - lam) tr f(A) + lam tr f(B) - tr f((1 - lam) A + lam B)

and, for A, B positive definite,

    J(A, B) = lam (1 - lam) int_0^1 w(t) int_0^1 <Df'[xi(t, s)]{B - A}, B - A> ds dt

with ``w(t) = (1 - t) lam + t (1 - lam)`` and ``xi(t, s) = A + (t lam + s w(t)) (B - A)``.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .calculus import NEGATIVE_EIG_TOL, _require_pd, _trace, divided_difference_table
from .hermitian import ValidationError, as_hermitian

DEFAULT_QUAD_NODES = 32


@dataclass(frozen=True)
class DivergenceParams:
    lam: float

    def __post_init__(self):
        if not 0 < self.lam < 1:
            raise ValidationError(f"lambda must lie strictly inside (0, 1), got {self.lam}")


def _params(p):
    return p if isinstance(p, DivergenceParams) else DivergenceParams(float(p))


class QuadratureGrid(NamedTuple):
    nodes_t: np.ndarray
    weights_t: np.ndarray
    nodes_s: np.ndarray
    weights_s: np.ndarray
    rule_name: str

    @property
    def K(self):
        return len(self.nodes_t)


def gauss_legendre_grid(K=DEFAULT_QUAD_NODES):
    """Tensor Gauss-Legendre rule on [0, 1]^2 with K nodes per axis, weights summing to 1."""
    if K < 1:
        raise ValidationError("need at least one quadrature node")
    x, w = np.polynomial.legendre.leggauss(K)
    nodes = 0.5 * (x + 1.0)
    weights = 0.5 * w
    return QuadratureGrid(nodes, weights, nodes.copy(), weights.copy(), f"gauss-legendre-{K}")


def _pair(A, B):
    A = as_hermitian(A)
    B = as_hermitian(B)
    if A.shape != B.shape:
        raise ValidationError(f"dimension mismatch: {A.shape} vs {B.shape}")
    return A, B


def path_weight(lam, t):
    return (1 - t) * lam + t * (1 - lam)


def xi_point(A, B, lam, t, s):
    """Point ``A + t lam (B - A) + s ((1 - t) lam + t (1 - lam)) (B - A)`` on the segment [A, B]."""
    A, B = _pair(A, B)
    lam = _params(lam).lam
    if not (0 <= t <= 1 and 0 <= s <= 1):
        raise ValidationError(f"t and s must lie in [0, 1], got t={t}, s={s}")
    return A + (t * lam + s * path_weight(lam, t)) * (B - A)


def _jensen(g, lam, A, B, tol=NEGATIVE_EIG_TOL):
    # batched over leading axes. The mean is built from the heavier argument with
    # the exact small weight 1 - fl(max(lam, 1 - lam)), so J_lam(A, B) and
    # J_{1-lam}(B, A) round identically and J(A, A) is exactly 0.
    if lam == 0.5:
        M = 0.5 * (A + B)
        tm = _trace(g, M, tol)
        return 0.5 * ((_trace(g, A, tol) - tm) + (_trace(g, B, tol) - tm))
    heavy, light = (A, B) if lam < 0.5 else (B, A)
    big = 1 - lam if lam < 0.5 else lam
    small = 1 - big
    M = heavy + small * (light - heavy)
    tm = _trace(g, M, tol)
    return big * (_trace(g, heavy, tol) - tm) + small * (_trace(g, light, tol) - tm)


def jensen_divergence(g, p, A, B):
    """Quantum Jensen ``(f, lambda)``-divergence from the defining formula."""
    A, B = _pair(A, B)
    return float(_jensen(g, _params(p).lam, A, B))


def _quadform_values(func, deriv, X, Y):
    # <D func[X]{Y}, Y>_HS = sum_jk func^[1](x_j, x_k) |(U* Y U)_jk|^2, batched over X
    w, U = np.linalg.eigh(X)
    _require_pd(w)
    L = divided_difference_table(func, deriv, w)
    Yt = U.conj().swapaxes(-1, -2) @ Y @ U
    return np.einsum("...jk,...jk->...", L, np.abs(Yt) ** 2)


def _integral(g, lam, A, B, grid):
    D = B - A
    t = grid.nodes_t[:, None]
    s = grid.nodes_s[None, :]
    coeff = t * lam + s * path_weight(lam, t)
    xi = A + coeff[..., None, None] * D
    vals = _quadform_values(g.f1, g.f2, xi, D)
    W = (grid.weights_t * path_weight(lam, grid.nodes_t))[:, None] * grid.weights_s[None, :]
    total = math.fsum((W * vals).ravel())
    return lam * (1 - lam) * total


def jensen_integral_rep(g, p, A, B, grid=None):
    """Quadrature evaluation of the double-integral representation of J."""
    A, B = _pair(A, B)
    if g.f2 is None:
        raise ValidationError(f"{g.name} carries no second derivative")
    for M in (A, B):
        _require_pd(np.linalg.eigvalsh(M))
    grid = gauss_legendre_grid() if grid is None else grid
    return float(_integral(g, _params(p).lam, A, B, grid))


def divergence_report(g, p, A, B, K=DEFAULT_QUAD_NODES):
    """Direct and integral values plus a node-doubling error estimate."""
    lam = _params(p).lam
    integral = jensen_integral_rep(g, lam, A, B, gauss_legendre_grid(K))
    refined = jensen_integral_rep(g, lam, A, B, gauss_legendre_grid(2 * K))
    return {
        "generator": g.name,
        "lambda": lam,
        "direct": jensen_divergence(g, lam, A, B),
        "integral": integral,
        "quadrature_K": K,
        "node_doubling_delta": abs(refined - integral),
    }
