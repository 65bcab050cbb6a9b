"""Angle parametrization of R_{k,n} for inner-product norms.

When ``<x_i, x_j> = r_i r_j cos p_ij`` (``r_i = ||x_i||``), the sign-pattern
sum becomes a function of the pair angles alone::

    R(P) = 1/2 * sum over eps in {-1,1}^k of (a + sum_{i<j} eps_i eps_j a_ij cos p_ij)^(n/2)

with ``a = sum r_i^2`` and ``a_ij = 2 r_i r_j``. Every P whose entries are
multiples of pi is a critical point; this module evaluates R(P), the
closed-form diagonal second partials there (``gamma``), and checks both
against central finite differences.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

import numpy as np

from .characterize import is_even_integer
from .errors import (
    DegenerateExponent,
    DimensionMismatch,
    NonRealizableConfig,
    NotQuadraticNorm,
    ZeroVector,
)
from .vecspace import Norm, as_tuple, gram_matrix

BASE_TOL = 1e-10
# how close sin(p) must be to zero for p to count as a multiple of pi
CRITICAL_TOL = 1e-9


@lru_cache(maxsize=16)
def _signs(k: int) -> tuple[np.ndarray, np.ndarray, tuple]:
    full = np.array(list(itertools.product((1, -1), repeat=k)), dtype=float)
    pairs = tuple((i, j) for i in range(k) for j in range(i + 1, k))
    prods = np.stack([full[:, i] * full[:, j] for i, j in pairs], axis=1) if pairs else np.zeros((len(full), 0))
    full.flags.writeable = False
    prods.flags.writeable = False
    return full, prods, pairs


def pair_index(k: int) -> tuple:
    """Row-major list of (i, j), i < j, matching the order of the angle tuple."""
    return _signs(k)[2]


@dataclass(frozen=True, eq=False)
class AngleConfig:
    norms: np.ndarray
    P: np.ndarray

    def __init__(self, norms: Sequence[float], P: Optional[Sequence[float]] = None):
        r = np.array(norms, dtype=float)
        if r.ndim != 1 or r.size < 2:
            raise DimensionMismatch("need at least two norms")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ZeroVector("norms must be positive and finite")
        m = r.size * (r.size - 1) // 2
        p = np.zeros(m) if P is None else np.array(P, dtype=float).reshape(-1)
        if p.size != m:
            raise DimensionMismatch(f"k={r.size} needs {m} angles, got {p.size}")
        r.flags.writeable = False
        p.flags.writeable = False
        object.__setattr__(self, "norms", r)
        object.__setattr__(self, "P", p)
        object.__setattr__(self, "a", float(np.sum(r**2)))
        pair_vals = np.array([2 * r[i] * r[j] for i, j in pair_index(r.size)])
        pair_vals.flags.writeable = False
        object.__setattr__(self, "pair_coeffs", pair_vals)

    @property
    def k(self) -> int:
        return self.norms.size

    @property
    def a_pairs(self) -> np.ndarray:
        """Upper-triangular k x k array holding a_ij = 2 r_i r_j."""
        out = np.zeros((self.k, self.k))
        for (i, j), v in zip(pair_index(self.k), self.pair_coeffs):
            out[i, j] = v
        return out

    def with_angles(self, P) -> "AngleConfig":
        return AngleConfig(self.norms, P)

    def to_json(self) -> dict:
        return {"norms": self.norms.tolist(), "P": self.P.tolist()}


def critical_config(norms: Sequence[float], signs: Optional[Sequence[int]] = None) -> AngleConfig:
    """The critical point where x_i = signs_i * r_i * u for one unit vector u.

    Angles are 0 where the two signs agree and pi where they differ, so the
    configuration is realized by actual (collinear) vectors.
    """
    k = len(norms)
    s = np.ones(k) if signs is None else np.asarray(signs, dtype=float)
    if s.size != k or not np.all(np.abs(s) == 1):
        raise ValueError("signs must be a +-1 vector of length k")
    P = [0.0 if s[i] == s[j] else math.pi for i, j in pair_index(k)]
    return AngleConfig(norms, P)


def bases(cfg: AngleConfig, P: Optional[np.ndarray] = None) -> np.ndarray:
    """``a + sum eps_i eps_j a_ij cos p_ij`` for every full sign vector."""
    _, prods, _ = _signs(cfg.k)
    P = cfg.P if P is None else P
    return cfg.a + prods @ (cfg.pair_coeffs * np.cos(P))


def _sum_powers(b: np.ndarray, n: float) -> float:
    if is_even_integer(n):
        return 0.5 * float(np.sum(b ** (int(n) // 2)))
    return 0.5 * float(np.sum(np.maximum(b, 0.0) ** (n / 2)))


def angle_form_R(cfg: AngleConfig, n: float, tol_abs: float = BASE_TOL) -> float:
    """R_{k,n}(P) as the 1/2-weighted sum over all 2^k full sign vectors."""
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    b = bases(cfg)
    floor = tol_abs * max(1.0, cfg.a)
    if np.any(b < -floor):
        raise NonRealizableConfig(f"angle configuration gives a negative squared length {b.min():.6g}")
    return _sum_powers(b, n)


def realize_angles(norm: Norm, sample) -> AngleConfig:
    """Angle configuration of actual vectors under a quadratic norm."""
    X = as_tuple(sample, norm.dim)
    G = gram_matrix(norm, X.shape[1])
    if G is None:
        raise NotQuadraticNorm(f"{type(norm).__name__} does not come with an explicit inner product")
    r = norm.evaluate_rows(X)
    if np.any(r == 0):
        raise ZeroVector("every vector must be nonzero to have an angle")
    gram = X @ G @ X.T
    P = []
    for i, j in pair_index(X.shape[0]):
        c = gram[i, j] / (r[i] * r[j])
        P.append(math.acos(min(1.0, max(-1.0, c))))
    return AngleConfig(r, P)


def _require_critical(cfg: AngleConfig) -> None:
    if np.any(np.abs(np.sin(cfg.P)) > CRITICAL_TOL):
        raise ValueError("angles must be integer multiples of pi (a critical point)")


def _check_degenerate(cfg: AngleConfig, n: float, tol: float) -> np.ndarray:
    b = bases(cfg)
    scale = max(1.0, cfg.a)
    if np.any(b < -tol * scale):
        raise NonRealizableConfig(f"angle configuration gives a negative squared length {b.min():.6g}")
    if n < 2 and np.any(b <= tol * scale):
        raise DegenerateExponent(
            f"a signed combination has zero length; the exponent {(n - 2) / 2:g} is negative"
        )
    return np.maximum(b, 0.0)


def gamma(cfg: AngleConfig, t: int, s: int, n: float, tol: float = BASE_TOL) -> float:
    """Diagonal second partial of R(P) in p_ts at a critical point.

    Indices are 0-based with ``t < s``. At P = 0 this is
    ``(n/4) a_ts sum_eps (-eps_t eps_s)(a + sum eps_i eps_j a_ij)^((n-2)/2)``;
    at other multiples of pi the cosines enter the bases and the prefactor.
    """
    k = cfg.k
    if not (0 <= t < s < k):
        raise IndexError(f"need 0 <= t < s < {k}, got ({t}, {s})")
    _require_critical(cfg)
    b = _check_degenerate(cfg, n, tol)
    full, _, pairs = _signs(k)
    idx = pairs.index((t, s))
    weights = -full[:, t] * full[:, s]
    powers = np.ones_like(b) if n == 2 else b ** ((n - 2) / 2)
    return float(n / 4 * cfg.pair_coeffs[idx] * math.cos(cfg.P[idx]) * np.sum(weights * powers))


class Regime(str, enum.Enum):
    N_GT_2 = "nGT2"
    N_LT_2 = "nLT2"
    N_EQ_2 = "nEQ2"


def regime_of(n: float) -> Regime:
    if n > 2:
        return Regime.N_GT_2
    if n < 2:
        return Regime.N_LT_2
    return Regime.N_EQ_2


@dataclass
class HessianReport:
    k: int
    n: float
    h: float
    P0: list
    cosine_signs: list
    value: float
    scale: float
    gamma: list
    gradient_max: float
    diagonal: list
    diagonal_half_step: list
    offdiag_max: float
    leading_minors: list
    numeric_minors: list
    regime: Regime
    checks: dict

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def gamma_matrix(self) -> np.ndarray:
        out = np.zeros((self.k, self.k))
        for (i, j), g in zip(pair_index(self.k), self.gamma):
            out[i, j] = g
        return out

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "h": self.h,
            "P0": self.P0,
            "cosine_signs": self.cosine_signs,
            "value": self.value,
            "scale": self.scale,
            "pairs": [list(p) for p in pair_index(self.k)],
            "gamma": self.gamma,
            "gradient_max": self.gradient_max,
            "diagonal": self.diagonal,
            "diagonal_half_step": self.diagonal_half_step,
            "offdiag_max": self.offdiag_max,
            "leading_minors": self.leading_minors,
            "numeric_minors": self.numeric_minors,
            "regime": self.regime.value,
            "checks": self.checks,
            "passed": self.passed,
        }


def _fd_hessian(f, P0: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    m = P0.size
    f0 = f(P0)
    grad = np.zeros(m)
    H = np.zeros((m, m))
    eye = np.eye(m) * h
    plus = [f(P0 + eye[i]) for i in range(m)]
    minus = [f(P0 - eye[i]) for i in range(m)]
    for i in range(m):
        grad[i] = (plus[i] - minus[i]) / (2 * h)
        H[i, i] = (plus[i] - 2 * f0 + minus[i]) / h**2
        for j in range(i + 1, m):
            d = (
                f(P0 + eye[i] + eye[j])
                - f(P0 + eye[i] - eye[j])
                - f(P0 - eye[i] + eye[j])
                + f(P0 - eye[i] - eye[j])
            ) / (4 * h**2)
            H[i, j] = H[j, i] = d
    return grad, H


def _minor_pattern_ok(minors: Sequence[float], n: float) -> bool:
    if n > 2:
        return all((-1) ** (i + 1) * d > 0 for i, d in enumerate(minors))
    return all(d > 0 for d in minors)


def verify_extremum(cfg0: AngleConfig, n: float, h: float = 1e-4, tol: float = BASE_TOL) -> HessianReport:
    """Check the second-partial structure of R(P) at a critical point.

    Four checks, each recorded in ``report.checks``:

    * ``gradient``: central-difference gradient at most 1e-6 * scale;
    * ``offdiag``: mixed second partials at most 1e-5 * scale;
    * ``diagonal``: diagonal second partials match ``gamma`` to 1e-4
      relative (plus a 1e-6 * scale noise floor), and the h and h/2
      estimates agree to 1e-3 relative;
    * ``minors``: leading minors (products of gammas) alternate in sign
      for n > 2 and are all positive for n < 2, and the numeric Hessian's
      minors have the same signs.

    ``scale`` is ``max(1, |R(P0)|)``.
    """
    if n == 2:
        raise ValueError("n = 2 makes R(P) constant; there is no extremum structure to check")
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    _require_critical(cfg0)
    b0 = _check_degenerate(cfg0, n, tol)
    if not is_even_integer(n) and np.any(b0 <= tol * max(1.0, cfg0.a)):
        raise DegenerateExponent("a zero-length combination makes R(P) non-smooth at this point")

    gammas = [gamma(cfg0, t, s, n, tol) for t, s in pair_index(cfg0.k)]
    value = angle_form_R(cfg0, n, tol)
    scale = max(1.0, abs(value))

    def f(P):
        return _sum_powers(bases(cfg0, P), n)

    P0 = cfg0.P.copy()
    grad, H = _fd_hessian(f, P0, h)
    _, H_half = _fd_hessian(f, P0, h / 2)
    m = P0.size
    diag = np.diag(H)
    diag_half = np.diag(H_half)
    offdiag = np.abs(H - np.diag(diag))
    offdiag_max = float(offdiag.max()) if m > 1 else 0.0

    g = np.array(gammas)
    diag_ok = bool(np.all(np.abs(diag - g) <= 1e-4 * np.abs(g) + 1e-6 * scale))
    richardson_ok = bool(np.all(np.abs(diag - diag_half) <= 1e-3 * np.abs(diag_half) + 1e-6 * scale))
    minors = [float(np.prod(g[: i + 1])) for i in range(m)]
    numeric_minors = [float(np.linalg.det(H[: i + 1, : i + 1])) for i in range(m)]
    same_signs = all(np.sign(a) == np.sign(b) for a, b in zip(minors, numeric_minors))

    checks = {
        "gradient": bool(np.max(np.abs(grad)) <= 1e-6 * scale),
        "offdiag": offdiag_max <= 1e-5 * scale,
        "diagonal": diag_ok and richardson_ok,
        "minors": _minor_pattern_ok(minors, n) and same_signs,
    }
    return HessianReport(
        k=cfg0.k,
        n=float(n),
        h=h,
        P0=P0.tolist(),
        cosine_signs=[int(round(c)) for c in np.cos(P0)],
        value=value,
        scale=scale,
        gamma=gammas,
        gradient_max=float(np.max(np.abs(grad))),
        diagonal=diag.tolist(),
        diagonal_half_step=diag_half.tolist(),
        offdiag_max=offdiag_max,
        leading_minors=minors,
        numeric_minors=numeric_minors,
        regime=regime_of(n),
        checks=checks,
    )
