"""Randomised convexity / concavity probes for Jensen divergences and the MEC.

Every probe draws m argument tuples ``p_1..p_m`` and weights ``alpha``, and
evaluates a signed quantity whose negativity witnesses a violation:

* convexity probes use the Jensen gap ``sum_i alpha_i h(p_i) - h(sum_i alpha_i p_i)``;
* the Loewner concavity probe uses ``lambda_min(Phi(mid) - sum_i alpha_i Phi(A_i))``
  with ``Phi(A) = (Df'[A])^{-1}``.

A trial is a violation when ``signed < -violation_margin * (1 + |reference|)``.
Trial ``i`` at dimension ``n`` draws from ``default_rng([seed, n, i])`` only,
so verdicts and certificates do not depend on chunking or ordering.
"""

import enum
import logging
import math
from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .calculus import (
    MECPreconditionError,
    _inverse_superop_matrices,
    from_coords,
    to_coords,
)
from .divergence import (
    DivergenceParams,
    _jensen,
    _quadform_values,
    gauss_legendre_grid,
    jensen_divergence,
    path_weight,
)
from .hermitian import (
    ConvexCombination,
    DomainError,
    ValidationError,
    as_hermitian,
    matrix_from_json,
    matrix_to_json,
    vector_from_json,
    vector_to_json,
)

log = logging.getLogger(__name__)

CHUNK = 500


class Kind(str, enum.Enum):
    JC_DIVERGENCE = "JC_DIVERGENCE"
    QUADFORM_CONVEXITY = "QUADFORM_CONVEXITY"
    INVERSE_CONCAVITY = "INVERSE_CONCAVITY"
    ZETA = "ZETA"
    EXPANSION = "EXPANSION"


class Conclusion(str, enum.Enum):
    NO_VIOLATION_FOUND = "NO_VIOLATION_FOUND"
    VIOLATED = "VIOLATED"


@dataclass(frozen=True)
class SearchConfig:
    dims: Sequence[int] = (1, 2, 3)
    trials: int = 1000
    spectrum_lo: float = 0.2
    spectrum_hi: float = 5.0
    direction_scale: float = 1.0
    seed: int = 0
    violation_margin: float = 1e-8
    max_certificates: int = 5  # kept per dimension

    def __post_init__(self):
        object.__setattr__(self, "dims", tuple(int(n) for n in self.dims))
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")
        if not self.dims or min(self.dims) < 1:
            raise ValidationError("dims must be a non-empty list of positive sizes")
        if not 0 < self.spectrum_lo < self.spectrum_hi:
            raise ValidationError("need 0 < spectrum_lo < spectrum_hi")
        if not self.direction_scale > 0:
            raise ValidationError("direction_scale must be positive")
        if not self.violation_margin > 0:
            raise ValidationError("violation_margin must be positive")
        if self.max_certificates < 1:
            # a VIOLATED verdict must carry at least one witness
            raise ValidationError("max_certificates must be >= 1")


@dataclass
class ViolationCertificate:
    kind: Kind
    generator: Optional[str]
    lam: Optional[float]
    inputs: List[dict]
    weights: List[float]
    margin: float
    seed: int
    trial: int
    dim: int

    def to_json(self):
        d = asdict(self)
        d["kind"] = self.kind.value
        d["lambda"] = d.pop("lam")
        return d

    @classmethod
    def from_json(cls, obj):
        try:
            return cls(
                kind=Kind(obj["kind"]),
                generator=obj.get("generator"),
                lam=obj.get("lambda"),
                inputs=list(obj["inputs"]),
                weights=[float(a) for a in obj["weights"]],
                margin=float(obj["margin"]),
                seed=int(obj["seed"]),
                trial=int(obj["trial"]),
                dim=int(obj["dim"]),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"not a violation certificate: {exc}") from exc

    @property
    def filename(self):
        gen = (self.generator or "none").replace(":", "_").replace(",", "_")
        if self.lam is not None:
            gen += f"_lambda{self.lam:g}"
        return f"{self.kind.value}-{gen}-{self.seed}-n{self.dim}t{self.trial}.json"


@dataclass
class Verdict:
    property: str
    trials_run: int
    worst_margin: float
    violations: List[ViolationCertificate] = field(default_factory=list)
    violation_count: int = 0
    failed_trials: int = 0
    by_dim: dict = field(default_factory=dict)

    @property
    def conclusion(self):
        return Conclusion.VIOLATED if self.violations else Conclusion.NO_VIOLATION_FOUND

    def to_json(self):
        return {
            "property": self.property,
            "conclusion": self.conclusion.value,
            "evidence": "bounded randomized search; absence of violations is not a proof",
            "trials_run": self.trials_run,
            "failed_trials": self.failed_trials,
            "violation_count": self.violation_count,
            "worst_margin": self.worst_margin if np.isfinite(self.worst_margin) else None,
            "by_dim": {str(k): v for k, v in self.by_dim.items()},
            "violations": [c.to_json() for c in self.violations],
        }


# --- sampling ----------------------------------------------------------------

def _haar_batch(G):
    Q, R = np.linalg.qr(G)
    d = np.diagonal(R, axis1=-2, axis2=-1)
    return Q * (d / np.abs(d))[..., None, :]


def _gauss(rng, shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class _Draw:
    """Raw random numbers of one trial; turned into matrices in batch later.

    Half of the trials (chosen by the trial's own generator) are *aligned*:
    all m items share one direction and differ only in its length. Violations
    of joint convexity live in the cross term between the base point and the
    direction, which independent directions average away once n > 1.
    """

    def __init__(self, rng, kind, n, m, cfg, midpoint):
        self.weights = np.full(m, 1.0 / m) if midpoint else rng.dirichlet(np.ones(m))
        lo, hi = cfg.spectrum_lo, cfg.spectrum_hi
        k = 2 if kind is Kind.JC_DIVERGENCE else 1
        self.G = _gauss(rng, (m, k, n, n))
        self.s = rng.uniform(lo, hi, size=(m, k, n))
        if kind is Kind.ZETA:
            self.v = cfg.direction_scale * _gauss(rng, (m, n))
            return
        self.aligned = bool(rng.integers(2))
        H = _gauss(rng, (m, n, n))
        H = (H + H.conj().swapaxes(-1, -2)) / 2
        if self.aligned:
            H = np.broadcast_to(H[0], H.shape)
        # log-uniform lengths over two decades
        self.length = 10.0 ** rng.uniform(-2.0, 0.0, size=m)
        if kind is Kind.JC_DIVERGENCE:
            self.H = H
            self.delta = cfg.direction_scale * (1.0 - rng.uniform(size=m))
        elif kind is Kind.QUADFORM_CONVEXITY:
            self.H = cfg.direction_scale * self.length[:, None, None] * H


def _pd_batch(G, s):
    U = _haar_batch(G)
    A = (U * s[..., None, :]) @ U.conj().swapaxes(-1, -2)
    return (A + A.conj().swapaxes(-1, -2)) / 2


def _jc_second_argument(A, C, d, lo):
    if not d.aligned:
        # B on the segment [A, C]: PD by convexity of the cone
        return A + d.delta[:, None, None] * (C - A)
    # B = A + t Z with |t Z|_2 < lo <= lambda_min(A)
    Z = d.H / np.linalg.norm(d.H[0], 2)
    return A + (0.99 * lo * d.length)[:, None, None] * Z


def _materialize(kind, draws, cfg):
    """Stack a list of draws into the argument arrays of the kind's evaluator."""
    W = np.stack([d.weights for d in draws])
    P = _pd_batch(np.stack([d.G for d in draws]), np.stack([d.s for d in draws]))
    if kind is Kind.JC_DIVERGENCE:
        A, C = P[:, :, 0], P[:, :, 1]
        B = np.stack([_jc_second_argument(A[i], C[i], d, cfg.spectrum_lo)
                      for i, d in enumerate(draws)])
        return [A, B], W
    if kind is Kind.QUADFORM_CONVEXITY:
        return [P[:, :, 0], np.stack([d.H for d in draws])], W
    if kind is Kind.ZETA:
        return [P[:, :, 0], np.stack([d.v for d in draws])], W
    return [P[:, :, 0]], W


# --- evaluators: (args, weights) -> (signed, reference), batched over trials --

def _combine(W, X):
    extra = (None,) * (X.ndim - W.ndim)
    return (W[(...,) + extra] * X).sum(axis=1)


def _eval_convex(h, args, W):
    vals = h(*args)
    avg = (W * vals).sum(axis=1)
    mid = h(*[_combine(W, X)[:, None] for X in args])[:, 0]
    return avg - mid, avg


def _evaluator(kind, g, lam):
    if kind is Kind.JC_DIVERGENCE:
        return lambda args, W: _eval_convex(lambda A, B: _jensen(g, lam, A, B), args, W)
    if kind is Kind.QUADFORM_CONVEXITY:
        return lambda args, W: _eval_convex(lambda X, Y: _quadform_values(g.f1, g.f2, X, Y),
                                            args, W)
    if kind is Kind.ZETA:
        return lambda args, W: _eval_convex(_zeta_values, args, W)
    if kind is Kind.INVERSE_CONCAVITY:
        return lambda args, W: _eval_inverse_concavity(g, args, W)
    raise ValidationError(f"{kind} is not a search kind")


def _zeta_values(T, v):
    x = np.linalg.solve(T, v[..., None])[..., 0]
    return np.einsum("...j,...j->...", v.conj(), x).real


def _eval_inverse_concavity(g, args, W):
    (A,) = args
    inv = _inverse_superop_matrices(g.f1, g.f2, A)
    inv_mid = _inverse_superop_matrices(g.f1, g.f2, _combine(W, A))
    diff = inv_mid - _combine(W, inv)
    w = np.linalg.eigvalsh(diff)
    return w[..., 0], np.abs(w).max(axis=-1)


# --- search driver -------------------------------------------------------------

def _certificate(kind, g, lam, args, W, idx, signed, seed, trial, dim):
    inputs = []
    for i in range(W.shape[1]):
        for X in args:
            item = X[idx, i]
            inputs.append(vector_to_json(item) if item.ndim == 1 else matrix_to_json(item))
    return ViolationCertificate(
        kind=kind,
        generator=None if g is None else g.name,
        lam=lam,
        inputs=inputs,
        weights=[float(a) for a in W[idx]],
        margin=float(signed),
        seed=seed,
        trial=trial,
        dim=dim,
    )


def _evaluate_chunk(evaluate, args, W):
    """Evaluate a chunk; on failure fall back to per-trial evaluation (NaN marks failures)."""
    try:
        return evaluate(args, W)
    except (DomainError, MECPreconditionError, np.linalg.LinAlgError):
        signed = np.full(W.shape[0], np.nan)
        ref = np.full(W.shape[0], np.nan)
        for i in range(W.shape[0]):
            try:
                s, r = evaluate([X[i:i + 1] for X in args], W[i:i + 1])
                signed[i], ref[i] = s[0], r[0]
            except (DomainError, MECPreconditionError, np.linalg.LinAlgError) as exc:
                log.debug("trial aborted: %s", exc)
        return signed, ref


def run_search(kind, g, lam, cfg, m=2, midpoint=True, label=None):
    """Randomised violation search; the engine behind every probe below."""
    kind = Kind(kind)
    evaluate = _evaluator(kind, g, lam)
    verdict = Verdict(label or kind.value, 0, float("inf"))
    with np.errstate(over="ignore", invalid="ignore"):
        for n in cfg.dims:
            n_viol = kept = 0
            for start in range(0, cfg.trials, CHUNK):
                trials = range(start, min(start + CHUNK, cfg.trials))
                draws = [_Draw(np.random.default_rng([cfg.seed, n, t]), kind, n, m, cfg, midpoint)
                         for t in trials]
                args, W = _materialize(kind, draws, cfg)
                signed, ref = _evaluate_chunk(evaluate, args, W)
                failed = ~np.isfinite(signed) | ~np.isfinite(ref)
                verdict.failed_trials += int(failed.sum())
                verdict.trials_run += len(trials)
                norm = np.where(failed, np.inf, signed / (1.0 + np.abs(ref)))
                if np.any(~failed):
                    verdict.worst_margin = min(verdict.worst_margin, float(norm.min()))
                for idx in np.flatnonzero(norm < -cfg.violation_margin):
                    n_viol += 1
                    if kept < cfg.max_certificates:
                        kept += 1
                        verdict.violations.append(_certificate(
                            kind, g, lam, args, W, idx, signed[idx], cfg.seed, trials[idx], n))
            verdict.by_dim[n] = n_viol
            verdict.violation_count += n_viol
    return verdict


def _require_positive_curvature(g, cfg):
    if g.f2 is None:
        raise ValidationError(f"{g.name} carries no second derivative")
    xs = np.geomspace(cfg.spectrum_lo, cfg.spectrum_hi, 257)
    if not np.all(g.f2(xs) > 0):
        raise MECPreconditionError(
            f"{g.name}: f'' is not positive on [{cfg.spectrum_lo}, {cfg.spectrum_hi}], "
            "so Df'[A] is not invertible"
        )


def midpoint_violation_search(map_kind, g, lam, cfg):
    """Midpoint (m = 2, alpha = 1/2) convexity search for the divergence or the quadratic form."""
    map_kind = Kind(map_kind)
    if map_kind is Kind.JC_DIVERGENCE:
        lam = DivergenceParams(float(lam)).lam
    elif map_kind is Kind.QUADFORM_CONVEXITY:
        lam = None
    else:
        raise ValidationError(f"midpoint_violation_search does not handle {map_kind}")
    return run_search(map_kind, g, lam, cfg)


def combination_violation_search(map_kind, g, lam, cfg, m=3):
    """Secondary sweep with m random points and Dirichlet weights."""
    map_kind = Kind(map_kind)
    if map_kind is Kind.INVERSE_CONCAVITY:
        _require_positive_curvature(g, cfg)
    return run_search(map_kind, g, lam, cfg, m=m, midpoint=False,
                      label=f"{map_kind.value}[m={m}]")


def inverse_concavity_check(g, cfg):
    """Loewner midpoint-concavity search for ``A -> (Df'[A])^{-1}``."""
    _require_positive_curvature(g, cfg)
    return run_search(Kind.INVERSE_CONCAVITY, g, None, cfg)


def zeta_convexity_check(cfg):
    """Midpoint convexity search for ``(T, v) -> <T^{-1} v, v>``."""
    return run_search(Kind.ZETA, None, None, cfg)


def quadform(g, X, Y):
    """``<Df'[X]{Y}, Y>_HS`` for positive definite X."""
    X, Y = as_hermitian(X), as_hermitian(Y)
    if X.shape != Y.shape:
        raise ValidationError(f"dimension mismatch: {X.shape} vs {Y.shape}")
    return float(_quadform_values(g.f1, g.f2, X, Y))


# --- audits ----------------------------------------------------------------------

def _agreement(mec, others):
    overall = all(v.conclusion == mec.conclusion for v in others)
    per_dim = all(
        (mec.by_dim[n] > 0) == (v.by_dim[n] > 0) for v in others for n in mec.by_dim
    )
    return overall, per_dim


def claim32_equivalence_audit(g, cfg):
    """Run the inverse-concavity and quadratic-form-convexity searches on shared seeds."""
    concavity = inverse_concavity_check(g, cfg)
    convexity = midpoint_violation_search(Kind.QUADFORM_CONVEXITY, g, None, cfg)
    overall, per_dim = _agreement(concavity, [convexity])
    if not (overall and per_dim):
        log.warning("equivalence audit DISAGREEMENT for %s", g.name)
    return {
        "generator": g.name,
        "concavity": concavity,
        "convexity": convexity,
        "agree": overall,
        "agree_per_dim": per_dim,
    }


def theorem_audit(g, lambdas, cfg):
    """Compare the MEC side (inverse concavity) with joint convexity of J for each lambda."""
    mec = inverse_concavity_check(g, cfg)
    jc = {float(lam): midpoint_violation_search(Kind.JC_DIVERGENCE, g, lam, cfg)
          for lam in lambdas}
    overall, per_dim = _agreement(mec, list(jc.values()))
    if not (overall and per_dim):
        log.warning("MEC vs joint convexity audit DISAGREEMENT for %s", g.name)
    return {
        "generator": g.name,
        "mec": mec,
        "jc": jc,
        "agree": overall,
        "agree_per_dim": per_dim,
    }


def audit_to_json(report):
    out = {}
    for key, value in report.items():
        if isinstance(value, Verdict):
            out[key] = value.to_json()
        elif isinstance(value, dict):
            out[key] = {str(k): v.to_json() for k, v in value.items()}
        else:
            out[key] = value
    return out


def certificates_of(report):
    for value in report.values():
        if isinstance(value, Verdict):
            yield from value.violations
        elif isinstance(value, dict):
            for v in value.values():
                yield from v.violations


# --- proof-level checks -------------------------------------------------------------

def witness_identity_check(operators, weights, u):
    """Relative residual ``|sum_i alpha_i w_i - u| / |u|`` of the witness vectors.

    ``w_i = Phi_i^{-1} (sum_j alpha_j Phi_j^{-1})^{-1} u`` for positive definite
    superoperators ``Phi_i``; ``u`` is a Hermitian matrix.
    """
    if not isinstance(weights, ConvexCombination):
        weights = ConvexCombination.from_weights(weights)
    alpha = weights.weights
    if len(operators) != len(alpha):
        raise ValidationError("need one weight per operator")
    try:
        inverses = [np.linalg.inv(S.matrix) for S in operators]
    except np.linalg.LinAlgError as exc:
        raise MECPreconditionError(f"witness operators must be invertible: {exc}") from exc
    aggregate = sum(a * Pinv for a, Pinv in zip(alpha, inverses))
    if np.linalg.cond(aggregate) > 1e12:
        raise MECPreconditionError("aggregate of inverses is singular")
    c = to_coords(np.asarray(u))
    core = np.linalg.solve(aggregate, c)
    ws = [Pinv @ core for Pinv in inverses]
    combo = sum(a * w for a, w in zip(alpha, ws))
    return float(np.linalg.norm(combo - c) / np.linalg.norm(c))


def witness_vectors(operators, weights, u):
    inverses = [np.linalg.inv(S.matrix) for S in operators]
    aggregate = sum(a * Pinv for a, Pinv in zip(weights, inverses))
    core = np.linalg.solve(aggregate, to_coords(np.asarray(u)))
    return [from_coords(Pinv @ core) for Pinv in inverses]


EPS_LADDER = (1e-1, 1e-2, 1e-3, 1e-4)


def expansion_check(g, p, A, B, eps_ladder=EPS_LADDER, method="integral", K=32):
    """Second-order behaviour of ``J(A, A + eps B)`` as ``eps -> 0``.

    The ratio ``J / eps^2`` should tend to ``lam (1 - lam) / 2 * <Df'[A]{B}, B>``
    with error ``O(eps)``. Steps that leave the positive definite cone are
    skipped.

    With ``method="integral"`` J is evaluated through the double-integral
    representation, where ``eps^2`` factors out of the integrand exactly and
    the ratio carries quadrature-level error only. With ``method="direct"``
    the trace formula loses about ``u * sum|f(lam_k)|`` to cancellation, i.e.
    ``u * sum|f| / eps^2`` in the ratio. Errors below that rounding floor are
    not used for the order estimate. ``order`` is the observed order between
    the two finest usable steps (all consecutive slopes are in
    ``pairwise_orders``); when no step rises above the floor the expansion is
    reported as exact and ``order`` is None.
    """
    lam = DivergenceParams(float(getattr(p, "lam", p))).lam
    A, B = as_hermitian(A), as_hermitian(B)
    if method not in ("integral", "direct"):
        raise ValidationError(f"unknown method {method!r}")
    limit = 0.5 * lam * (1 - lam) * quadform(g, A, B)
    grid = gauss_legendre_grid(K)
    scale = float(np.abs(g.value(np.linalg.eigvalsh(A))).sum()) + 1.0
    steps, ratios, errors, floors, skipped = [], [], [], [], []
    for eps in eps_ladder:
        if np.linalg.eigvalsh(A + eps * B)[0] <= 0:
            skipped.append(eps)
            continue
        if method == "integral":
            # J(A, A + eps B) / eps^2 = J-integral with direction B in place of eps B
            r = _integral_scaled(g, lam, A, B, eps, grid)
            floor = 1e-12 * (1.0 + abs(limit))
        else:
            r = jensen_divergence(g, lam, A, A + eps * B) / eps ** 2
            floor = 100 * np.finfo(float).eps * scale / eps ** 2
        steps.append(eps)
        ratios.append(r)
        errors.append(abs(r - limit))
        floors.append(floor)
    usable = [(e, err) for e, err, fl in zip(steps, errors, floors) if err > fl]
    exact = bool(errors) and not usable
    pairwise = [float(np.log(e1 / e2) / np.log(h1 / h2))
                for (h1, e1), (h2, e2) in zip(usable, usable[1:])]
    order = pairwise[-1] if pairwise else None
    return {
        "generator": g.name,
        "lambda": lam,
        "method": method,
        "limit": limit,
        "eps": steps,
        "ratios": ratios,
        "errors": errors,
        "rounding_floor": floors,
        "skipped": skipped,
        "pairwise_orders": pairwise,
        "order": order,
        "exact": exact,
        "converged": exact or (order is not None and order >= 0.9),
    }


def _integral_scaled(g, lam, A, B, eps, grid):
    t = grid.nodes_t[:, None]
    s = grid.nodes_s[None, :]
    coeff = eps * (t * lam + s * path_weight(lam, t))
    xi = A + coeff[..., None, None] * B
    vals = _quadform_values(g.f1, g.f2, xi, B)
    W = (grid.weights_t * path_weight(lam, grid.nodes_t))[:, None] * grid.weights_s[None, :]
    return lam * (1 - lam) * math.fsum((W * vals).ravel())


# --- replay -------------------------------------------------------------------------

def _decode_inputs(cert, per_item):
    items = []
    for blob in cert.inputs:
        items.append(vector_from_json(blob) if "vector" in blob else matrix_from_json(blob))
    m = len(cert.weights)
    if len(items) != m * per_item:
        raise ValidationError(
            f"{cert.kind.value} certificate needs {m * per_item} inputs, got {len(items)}"
        )
    args = [np.stack(items[k::per_item])[None] for k in range(per_item)]
    return args, np.asarray(cert.weights, dtype=float)[None]


def replay_margin(cert, get_generator):
    """Recompute a certificate's signed margin from its embedded inputs only."""
    kind = cert.kind
    g = get_generator(cert.generator) if cert.generator else None
    if kind is Kind.EXPANSION:
        A, B = (matrix_from_json(b) for b in cert.inputs)
        rep = expansion_check(g, cert.lam, A, B)
        return float(rep["errors"][-1]) if rep["errors"] else float("nan")
    per_item = {Kind.JC_DIVERGENCE: 2, Kind.QUADFORM_CONVEXITY: 2, Kind.ZETA: 2,
                Kind.INVERSE_CONCAVITY: 1}[kind]
    args, W = _decode_inputs(cert, per_item)
    signed, _ = _evaluator(kind, g, cert.lam)(args, W)
    return float(signed[0])


def replay(cert, get_generator, tol=1e-10):
    recomputed = replay_margin(cert, get_generator)
    ok = bool(abs(recomputed - cert.margin) <= tol * (1.0 + abs(cert.margin)))
    return {"kind": cert.kind.value, "recorded_margin": cert.margin,
            "recomputed_margin": recomputed, "reproduced": ok}
