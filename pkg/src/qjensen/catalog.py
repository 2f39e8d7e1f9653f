"""Built-in generator functions and the scalar (n = 1) MEC oracle.

Generator names follow a small grammar, parsed case-insensitively::

    affine:a,b   f(x) = a x + b
    quadratic    f(x) = x^2
    xlogx        f(x) = x log x, f(0) = 0
    power:p      f(x) = x^p, 1 < p <= 4
    exp          f(x) = e^x
"""

import enum
import itertools
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .calculus import GeneratorFunction
from .hermitian import ValidationError


class MecExpectation(str, enum.Enum):
    EXPECT_MEMBER = "EXPECT_MEMBER"
    EXPECT_NON_MEMBER = "EXPECT_NON_MEMBER"
    AFFINE = "AFFINE"
    UNKNOWN = "UNKNOWN"


class OracleStatus(str, enum.Enum):
    CONCAVE_PASS = "CONCAVE_PASS"
    CONCAVE_FAIL = "CONCAVE_FAIL"


@dataclass(frozen=True)
class CatalogEntry:
    generator: GeneratorFunction
    mec_expectation: MecExpectation
    provenance_note: str

    @property
    def name(self):
        return self.generator.name


# Representative instances of every family, used for catalog-wide sweeps.
CATALOG_NAMES = (
    "quadratic",
    "xlogx",
    "power:1.5",
    "power:2",
    "power:2.5",
    "power:3",
    "power:4",
    "exp",
)

POWER_RANGE = (1.0, 4.0)


def _affine(a, b):
    return GeneratorFunction(
        f"affine:{a:g},{b:g}",
        lambda x: a * np.asarray(x, dtype=float) + b,
        lambda x: np.full_like(np.asarray(x, dtype=float), a),
        lambda x: np.zeros_like(np.asarray(x, dtype=float)),
        f_at_zero=float(b),
    )


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > 0, x * np.log(np.where(x > 0, x, 1.0)), 0.0)


def _power(p):
    return GeneratorFunction(
        f"power:{p:g}",
        lambda x: np.asarray(x, dtype=float) ** p,
        lambda x: p * np.asarray(x, dtype=float) ** (p - 1),
        lambda x: p * (p - 1) * np.asarray(x, dtype=float) ** (p - 2),
        f_at_zero=0.0,
    )


QUADRATIC = GeneratorFunction(
    "quadratic",
    lambda x: np.square(np.asarray(x, dtype=float)),
    lambda x: 2.0 * np.asarray(x, dtype=float),
    lambda x: np.full_like(np.asarray(x, dtype=float), 2.0),
    f_at_zero=0.0,
)

XLOGX = GeneratorFunction(
    "xlogx",
    _xlogx,
    lambda x: np.log(x) + 1.0,
    lambda x: 1.0 / np.asarray(x, dtype=float),
    f_at_zero=0.0,
)

EXP = GeneratorFunction("exp", np.exp, np.exp, np.exp, f_at_zero=1.0)


def _parse_params(text, count, name):
    parts = [s.strip() for s in text.split(",")] if text else []
    if len(parts) != count:
        raise ValidationError(f"{name} expects {count} parameter(s), got {text!r}")
    try:
        return [float(s) for s in parts]
    except ValueError as exc:
        raise ValidationError(f"bad parameter in {name}:{text}") from exc


def catalog_get(name):
    """Look up a generator by its grammar name."""
    key, _, params = name.strip().lower().partition(":")
    if key == "affine":
        a, b = _parse_params(params, 2, "affine")
        return CatalogEntry(_affine(a, b), MecExpectation.AFFINE,
                            "affine: kernel of f -> J, divergence identically 0")
    if params and key != "power":
        raise ValidationError(f"{key} takes no parameters")
    if key == "quadratic":
        return CatalogEntry(QUADRATIC, MecExpectation.EXPECT_MEMBER,
                            "1/f'' = 1/2 is constant")
    if key == "xlogx":
        return CatalogEntry(XLOGX, MecExpectation.EXPECT_MEMBER,
                            "1/f'' = x is linear; the entropy generator")
    if key == "exp":
        return CatalogEntry(EXP, MecExpectation.UNKNOWN,
                            "no label attached; resolved by the numerical oracles")
    if key == "power":
        (p,) = _parse_params(params, 1, "power")
        lo, hi = POWER_RANGE
        if not lo < p <= hi:
            raise ValidationError(f"power:p requires {lo:g} < p <= {hi:g}, got {p:g}")
        if p <= 2:
            label, note = MecExpectation.EXPECT_MEMBER, "1/f'' ~ x^(2-p) is concave for p in (1,2]"
        else:
            label, note = MecExpectation.EXPECT_NON_MEMBER, "1/f'' ~ x^(2-p) is convex for p > 2"
        return CatalogEntry(_power(p), label, note)
    raise ValidationError(f"unknown generator {name!r}")


def get_generator(name):
    return catalog_get(name).generator


class ScalarOracleResult(NamedTuple):
    status: OracleStatus
    witness: Optional[Tuple[float, float]] = None
    gap: float = 0.0


def default_oracle_grid(lo=0.2, hi=5.0, num=60):
    return np.geomspace(lo, hi, num)


def scalar_mec_oracle(g, grid=None, tol=1e-12):
    """Midpoint-concavity test of ``x -> 1/f''(x)`` over all pairs of ``grid``.

    At n = 1 the inverse derivative superoperator is the scalar ``1/f''``,
    so MEC membership at n = 1 is plain concavity of that function.
    """
    grid = default_oracle_grid() if grid is None else np.asarray(grid, dtype=float)
    if np.any(grid <= 0):
        raise ValidationError("oracle grid must lie in (0, inf)")
    d2 = g.f2(grid)
    if np.any(d2 <= 0):
        raise ValidationError(f"{g.name}: f'' <= 0 on the grid, 1/f'' undefined")
    h = lambda x: 1.0 / g.f2(x)
    for x, y in itertools.combinations(grid, 2):
        avg = 0.5 * (h(x) + h(y))
        gap = h(0.5 * (x + y)) - avg
        if gap < -tol * (1.0 + abs(avg)):
            return ScalarOracleResult(OracleStatus.CONCAVE_FAIL, (float(x), float(y)), float(gap))
    return ScalarOracleResult(OracleStatus.CONCAVE_PASS)


def check_generator(g, h_ladder=(1e-2, 5e-3, 2.5e-3)):
    """Sampled sanity checks of a generator; returns a dict of diagnostics.

    * convexity: ``f'' >= -1e-12`` at 1000 log-spaced points in ``[1e-6, 1e6]``
    * consistency: central differences of ``f`` approach ``f'`` at order 2
    * continuity at 0: ``f(x) -> f(0)`` along ``x = 1e-4, 1e-6, 1e-8``
    """
    xs = np.geomspace(1e-6, 1e6, 1000)
    with np.errstate(over="ignore", invalid="ignore"):
        d2 = g.f2(xs)
    convex = bool(np.all(np.nan_to_num(d2, nan=-1.0, posinf=np.inf) >= -1e-12))

    pts = np.geomspace(0.2, 5.0, 25)
    errs = []
    for h in h_ladder:
        fd = (g.f(pts + h) - g.f(pts - h)) / (2 * h)
        errs.append(float(np.max(np.abs(fd - g.f1(pts)) / (1 + np.abs(g.f1(pts))))))
    noise = 1e-12
    if errs[0] <= noise:
        order = float("inf")
    else:
        order = float(np.log2(errs[0] / max(errs[1], noise)))
    consistent = errs[-1] <= noise or order >= 1.8

    tail = [float(g.value(np.array([x]))[0]) for x in (1e-4, 1e-6, 1e-8)]
    dev = [abs(v - g.f_at_zero) for v in tail]
    continuous = dev[-1] <= dev[0] and dev[-1] < 1e-6

    return {
        "convex": convex,
        "consistent": bool(consistent),
        "fd_errors": errs,
        "fd_order": order,
        "continuous_at_zero": bool(continuous),
    }
