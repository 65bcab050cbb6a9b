"""Hunting for violation certificates with seeded restarts and a simplex search.

The objective for a flattened tuple ``z`` is the signed violation of the
target inequality evaluated after scaling the tuple so that its largest
member has unit norm. R and A are both homogeneous of degree n, so this
fixes the scale without changing which tuples violate, and it makes
violations comparable with ones measured on unit vectors.
"""
from __future__ import annotations

import enum
import json
import math
import os
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence, Union

import numpy as np

from .characterize import (
    DEFAULT_TOL_ABS,
    DEFAULT_TOL_REL,
    TestParams,
    Verdict,
    admissible,
    compute_A,
    compute_R,
    is_even_integer,
    make_admissible,
    rkn_akn_test,
)
from .errors import BudgetExceeded, InadmissibleSample, KTooSmall
from .vecspace import Norm, as_tuple, norm_from_json, require_norm

DEFAULT_BUDGET = 10_000_000
BUDGET_ENV = "NORMGAUGE_BUDGET"

# simplex coefficients: reflection, expansion, contraction, shrink
REFLECT, EXPAND, CONTRACT, SHRINK = 1.0, 2.0, 0.5, 0.5
INITIAL_STEP = 0.25


def global_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError:
        raise BudgetExceeded(f"{BUDGET_ENV}={raw!r} is not an integer") from None
    if value < 1:
        raise BudgetExceeded(f"{BUDGET_ENV} must be positive")
    return value


class Target(str, enum.Enum):
    VIOLATE_I = "ViolateI"
    VIOLATE_II = "ViolateII"
    VIOLATE_EQUALITY = "ViolateEquality"
    AUTO = "Auto"


class Admissibility(str, enum.Enum):
    EVEN_INTEGER_ONLY = "EvenIntegerOnly"
    FILTER_DOMINANT_FIRST = "FilterDominantFirst"


def resolve_targets(target: Target, n: float) -> list[Target]:
    """Directions to search: Auto follows the n-regime (both at n = 2)."""
    if target != Target.AUTO:
        return [target]
    if n > 2:
        return [Target.VIOLATE_I]
    if n < 2:
        return [Target.VIOLATE_II]
    return [Target.VIOLATE_I, Target.VIOLATE_II]


@dataclass(frozen=True)
class SearchConfig:
    k: int
    n: float
    dim: int
    restarts: int = 8
    max_evals_per_restart: int = 1250
    seed: int = 0
    target: Target = Target.AUTO
    admissibility: Admissibility = Admissibility.FILTER_DOMINANT_FIRST
    tol_rel: float = DEFAULT_TOL_REL
    tol_abs: float = DEFAULT_TOL_ABS
    budget: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "target", Target(self.target))
        object.__setattr__(self, "n", float(self.n))
        object.__setattr__(self, "admissibility", Admissibility(self.admissibility))
        TestParams(self.k, self.n, self.tol_rel, self.tol_abs)
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.restarts < 1 or self.max_evals_per_restart < 1:
            raise ValueError("restarts and max_evals_per_restart must be >= 1")
        if self.seed < 0 or self.seed >= 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        cap = global_budget() if self.budget is None else self.budget
        if self.restarts * self.max_evals_per_restart > cap:
            raise BudgetExceeded(
                f"{self.restarts} restarts x {self.max_evals_per_restart} evaluations exceeds the budget {cap}"
            )
        if self.admissibility == Admissibility.EVEN_INTEGER_ONLY and not is_even_integer(self.n):
            raise InadmissibleSample(f"admissibility EvenIntegerOnly needs an even integer n, got {self.n}")

    @property
    def params(self) -> TestParams:
        return TestParams(self.k, self.n, self.tol_rel, self.tol_abs)

    @property
    def filtering(self) -> bool:
        """True when the dominant-first filter restricts the search region."""
        return not is_even_integer(self.n)

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "dim": self.dim,
            "restarts": self.restarts,
            "max_evals_per_restart": self.max_evals_per_restart,
            "seed": self.seed,
            "target": self.target.value,
            "admissibility": self.admissibility.value,
            "tol_rel": self.tol_rel,
            "tol_abs": self.tol_abs,
        }


def _signed(R: float, A: float, n: float, target: Target) -> float:
    if target == Target.VIOLATE_I:
        return R - A
    if target == Target.VIOLATE_II:
        return A - R
    if target == Target.VIOLATE_EQUALITY:
        return abs(R - A)
    return max(_signed(R, A, n, t) for t in resolve_targets(target, n))


def violation_objective(norm: Norm, sample, n: float, target: Target = Target.AUTO) -> float:
    """R - A (ViolateI), A - R (ViolateII) or |R - A| (ViolateEquality).

    Positive values are violations. Raises :class:`InadmissibleSample` when
    A needs nonnegative bases and the sample does not have them.
    """
    X = as_tuple(sample, norm.dim)
    values = norm.evaluate_rows(X)
    if not admissible(values, n):
        raise InadmissibleSample("||x_1|| < sum of the other norms and n is not an even integer")
    return _signed(compute_R(norm, X, n), compute_A(values, n), n, Target(target))


@dataclass
class ViolationCertificate:
    """A replayable witness that a norm is not induced by an inner product."""

    sample: np.ndarray
    k: int
    n: float
    dim: int
    R: float
    A: float
    violation: float
    target: Target
    norm: Norm
    seed: int
    restart: int
    tol: float
    evals: int = 0

    def to_json(self) -> dict:
        return {
            "kind": "rkn_akn_certificate",
            "norm": self.norm.describe(),
            "k": self.k,
            "n": self.n,
            "dim": self.dim,
            "target": self.target.value,
            "R": self.R,
            "A": self.A,
            "violation": self.violation,
            "tol": self.tol,
            "seed": self.seed,
            "restart": self.restart,
            "evals": self.evals,
            "sample": self.sample.tolist(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, obj: Union[dict, str]) -> "ViolationCertificate":
        if isinstance(obj, str):
            obj = json.loads(obj)
        sample = np.array(obj["sample"], dtype=float)
        return cls(
            sample=sample,
            k=int(obj["k"]),
            n=float(obj["n"]),
            dim=int(obj["dim"]),
            R=float(obj["R"]),
            A=float(obj["A"]),
            violation=float(obj["violation"]),
            target=Target(obj["target"]),
            norm=norm_from_json(obj["norm"]),
            seed=int(obj["seed"]),
            restart=int(obj["restart"]),
            tol=float(obj["tol"]),
            evals=int(obj.get("evals", 0)),
        )


def revalidate(cert: ViolationCertificate, rtol: float = 1e-12) -> bool:
    """Recompute R and A from the stored tuple; check values and the verdict."""
    R = compute_R(cert.norm, cert.sample, cert.n)
    A = compute_A(cert.norm.evaluate_rows(cert.sample), cert.n)
    scale = max(abs(cert.R), abs(cert.A))
    if abs(R - cert.R) > rtol * scale or abs(A - cert.A) > rtol * scale:
        return False
    if _signed(R, A, cert.n, cert.target) <= cert.tol:
        return False
    res = rkn_akn_test(cert.norm, cert.sample, TestParams(cert.k, cert.n))
    wanted = {
        Target.VIOLATE_I: Verdict.VIOLATES_I,
        Target.VIOLATE_II: Verdict.VIOLATES_II,
        Target.VIOLATE_EQUALITY: Verdict.VIOLATES_EQUALITY,
    }[cert.target]
    return wanted in res.violations


@dataclass
class NoViolationFound:
    best_objective: float
    best_sample: Optional[np.ndarray]
    evals: int
    config: SearchConfig
    filtering: bool

    def to_json(self) -> dict:
        return {
            "kind": "no_violation_found",
            "best_objective": self.best_objective,
            "best_sample": None if self.best_sample is None else self.best_sample.tolist(),
            "evals": self.evals,
            "admissibility_filtered": self.filtering,
            "config": self.config.to_json(),
        }


@dataclass
class SimplexRun:
    best_x: np.ndarray
    best_f: float
    evals: int
    history: list = field(default_factory=list)


def unit_scale(norm: Norm, X: np.ndarray) -> Optional[np.ndarray]:
    """Scale a tuple so that max_i ||x_i|| = 1; None for the zero tuple."""
    m = float(np.max(norm.evaluate_rows(X)))
    if m == 0 or not math.isfinite(m):
        return None
    return X / m


class _Exhausted(Exception):
    pass


def maximize_simplex(f, x0: np.ndarray, max_evals: int, step: float = INITIAL_STEP) -> SimplexRun:
    """Nelder-Mead maximization of a scale-invariant ``f``, at most ``max_evals`` calls.

    After each step the whole simplex is rescaled so that the best vertex
    has unit max-coordinate; ``f`` must not care about that scale. When the
    simplex collapses with budget left, it is rebuilt around the best
    vertex. ``history`` holds the best value after every iteration.
    """
    dim = x0.size
    evals = 0
    best = [x0.copy(), -math.inf]

    def g(x):
        nonlocal evals
        if evals >= max_evals:
            raise _Exhausted
        evals += 1
        v = f(x)
        if v > best[1]:
            best[0], best[1] = x.copy(), v
        return v

    def build(center):
        pts = [center.copy()]
        for i in range(dim):
            v = center.copy()
            v[i] += step if v[i] <= 0 else -step
            pts.append(v)
        return pts

    history = []
    try:
        pts = build(x0)
        vals = [g(p) for p in pts]
        while True:
            order = sorted(range(dim + 1), key=lambda i: -vals[i])
            pts = [pts[i] for i in order]
            vals = [vals[i] for i in order]
            history.append(vals[0])

            spread = vals[0] - vals[-1]
            size = max(float(np.max(np.abs(p - pts[0]))) for p in pts[1:])
            if (math.isfinite(spread) and spread <= 1e-14 * (1 + abs(vals[0]))) or size < 1e-12:
                pts = build(pts[0])
                vals = [vals[0]] + [g(p) for p in pts[1:]]
                continue

            centroid = np.mean(pts[:-1], axis=0)
            worst = pts[-1]
            xr = centroid + REFLECT * (centroid - worst)
            fr = g(xr)
            if fr > vals[0]:
                xe = centroid + EXPAND * (xr - centroid)
                fe = g(xe)
                pts[-1], vals[-1] = (xe, fe) if fe > fr else (xr, fr)
            elif fr > vals[-2]:
                pts[-1], vals[-1] = xr, fr
            else:
                if fr > vals[-1]:
                    xc = centroid + CONTRACT * (xr - centroid)
                else:
                    xc = centroid + CONTRACT * (worst - centroid)
                fc = g(xc)
                if fc > max(fr, vals[-1]):
                    pts[-1], vals[-1] = xc, fc
                else:
                    top = pts[0]
                    pts = [top] + [top + SHRINK * (p - top) for p in pts[1:]]
                    vals = [vals[0]] + [g(p) for p in pts[1:]]

            m = float(np.max(np.abs(pts[int(np.argmax(vals))])))
            if m > 0 and math.isfinite(m):
                pts = [p / m for p in pts]
    except _Exhausted:
        pass
    history.append(best[1])
    return SimplexRun(best[0], best[1], evals, history)


def _initial_tuple(norm: Norm, cfg: SearchConfig, rng: np.random.Generator) -> np.ndarray:
    X = rng.uniform(-1, 1, (cfg.k, cfg.dim))
    if cfg.filtering:
        # a little headroom keeps the starting simplex inside the admissible region
        X = make_admissible(norm, X, slack=1.25)
    return X / np.max(np.abs(X))


def restart_rng(seed: int, restart: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, restart]))


@dataclass
class RestartOutcome:
    restart: int
    target: Target
    run: SimplexRun


def _run_restarts(norm: Norm, cfg: SearchConfig) -> list[RestartOutcome]:
    targets = resolve_targets(cfg.target, cfg.n)
    per_target = max(cfg.max_evals_per_restart // len(targets), 1)
    out = []
    for r in range(cfg.restarts):
        x0 = _initial_tuple(norm, cfg, restart_rng(cfg.seed, r)).reshape(-1)
        for target in targets:

            def f(z, target=target):
                X = unit_scale(norm, z.reshape(cfg.k, cfg.dim))
                if X is None:
                    return -math.inf
                try:
                    return violation_objective(norm, X, cfg.n, target)
                except InadmissibleSample:
                    return -math.inf

            out.append(RestartOutcome(r, target, maximize_simplex(f, x0, per_target)))
    return out


def search_violation(norm: Norm, cfg: SearchConfig) -> Union[ViolationCertificate, NoViolationFound]:
    """Best certificate over all restarts, or :class:`NoViolationFound`.

    Deterministic given ``cfg.seed``: restart r draws its starting tuple
    from its own stream seeded by (seed, r), and ties go to the earlier
    restart.
    """
    require_norm(norm, cfg.dim, seed=cfg.seed)
    outcomes = _run_restarts(norm, cfg)
    evals = sum(o.run.evals for o in outcomes)
    best = max(outcomes, key=lambda o: o.run.best_f)
    X = unit_scale(norm, best.run.best_x.reshape(cfg.k, cfg.dim))
    if X is None or not math.isfinite(best.run.best_f):
        return NoViolationFound(-math.inf, None, evals, cfg, cfg.filtering)
    R = compute_R(norm, X, cfg.n)
    A = compute_A(norm.evaluate_rows(X), cfg.n)
    violation = _signed(R, A, cfg.n, best.target)
    tol = cfg.params.tolerance(R, A)
    if violation > tol:
        return ViolationCertificate(
            sample=X,
            k=cfg.k,
            n=cfg.n,
            dim=cfg.dim,
            R=R,
            A=A,
            violation=violation,
            target=best.target,
            norm=norm,
            seed=cfg.seed,
            restart=best.restart,
            tol=tol,
            evals=evals,
        )
    return NoViolationFound(violation, X, evals, cfg, cfg.filtering)


@dataclass
class SweepRow:
    k: int
    n: float
    verdict: str
    best_objective: float
    evals: int
    wall_ms: float
    admissibility_filtered: bool
    certificate: Optional[ViolationCertificate] = None

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "n": self.n,
            "verdict": self.verdict,
            "best_objective": self.best_objective,
            "evals": self.evals,
            "admissibility_filtered": self.admissibility_filtered,
        }


def sweep(norm: Norm, k_range: Sequence[int], n_list: Sequence[float], cfg_template: SearchConfig) -> list[SweepRow]:
    """Run :func:`search_violation` for every (k, n) cell, k-major."""
    if not list(k_range) or not list(n_list):
        raise ValueError("k_range and n_list must be non-empty")
    for k in k_range:
        if k < 2:
            raise KTooSmall(f"k must be >= 2, got {k}")
    rows = []
    for k in k_range:
        for n in n_list:
            cfg = replace(cfg_template, k=int(k), n=float(n))
            start = time.perf_counter()
            res = search_violation(norm, cfg)
            wall = (time.perf_counter() - start) * 1000
            if isinstance(res, ViolationCertificate):
                rows.append(SweepRow(k, n, "falsified", res.violation, res.evals, wall, cfg.filtering, res))
            else:
                rows.append(SweepRow(k, n, "no-violation-found", res.best_objective, res.evals, wall, cfg.filtering))
    return rows

