"""Sign-pattern functionals R_{k,n}, A_{k,n} and the classical tests.

For vectors x_1..x_k and an exponent n > 0::

    R_{k,n} = sum over eps in {-1,1}^{k-1} of ||x_1 + sum_i eps_i x_i||^n
    A_{k,n} = sum over eps in {-1,1}^{k-1} of (||x_1|| + sum_i eps_i ||x_i||)^n

An inner-product norm satisfies R <= A for n >= 2 and R >= A for n <= 2
(so R == A at n == 2). The functions here only ever *falsify* that
structure; a clean run over finitely many samples proves nothing.
"""
from __future__ import annotations

import enum
import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import (
    DimensionMismatch,
    KTooLarge,
    KTooSmall,
    NegativeBaseNonIntegerExponent,
    ZeroVector,
)
from .vecspace import Norm, as_tuple, require_norm

MAX_K = 24
DEFAULT_TOL_REL = 1e-9
DEFAULT_TOL_ABS = 1e-10
# signed sums of norms this far below zero (relative) are roundoff, not negative
BASE_ROUNDOFF = 1e-13


class TestName(str, enum.Enum):
    __test__ = False

    RKN_AKN = "RknAkn"
    FRECHET = "Frechet"
    PARALLELOGRAM = "Parallelogram"
    DAY = "Day"


class Verdict(str, enum.Enum):
    CONSISTENT = "Consistent"
    VIOLATES_I = "ViolatesI"
    VIOLATES_II = "ViolatesII"
    VIOLATES_EQUALITY = "ViolatesEquality"


@dataclass(frozen=True)
class TestParams:
    __test__ = False

    k: int
    n: float
    tol_rel: float = DEFAULT_TOL_REL
    tol_abs: float = DEFAULT_TOL_ABS

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise KTooSmall(f"k must be an integer >= 2, got {self.k}")
        object.__setattr__(self, "k", int(self.k))
        if not (self.n > 0) or not math.isfinite(self.n):
            raise ValueError(f"n must be a positive real, got {self.n}")
        if not (self.tol_rel > 0 and self.tol_abs > 0):
            raise ValueError("tolerances must be positive")

    def tolerance(self, R: float, A: float) -> float:
        return self.tol_abs + self.tol_rel * max(abs(R), abs(A))


def is_even_integer(n: float) -> bool:
    return float(n).is_integer() and int(n) % 2 == 0


def enumerate_sign_patterns(k: int, max_k: int = MAX_K) -> list[tuple[int, ...]]:
    """The 2^(k-1) choices of (eps_2, ..., eps_k), eps_2 most significant, +1 first."""
    if k < 2:
        raise KTooSmall(f"k must be >= 2, got {k}")
    if k > max_k:
        raise KTooLarge(f"k={k} needs 2^{k - 1} sign patterns; the cap is k <= {max_k}")
    return list(itertools.product((1, -1), repeat=k - 1))


@lru_cache(maxsize=32)
def _full_signs(k: int) -> np.ndarray:
    # rows are (1, eps_2, ..., eps_k) in canonical order
    pats = np.array(enumerate_sign_patterns(k), dtype=float).reshape(-1, k - 1)
    out = np.hstack([np.ones((pats.shape[0], 1)), pats])
    out.flags.writeable = False
    return out


def compute_R(norm: Norm, sample, n: float) -> float:
    X = as_tuple(sample, norm.dim)
    if X.shape[0] < 2:
        raise KTooSmall("a sample needs at least two vectors")
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    combos = _full_signs(X.shape[0]) @ X
    return float(np.sum(norm.evaluate_rows(combos) ** n))


def signed_bases(norm_values) -> np.ndarray:
    v = np.asarray(norm_values, dtype=float)
    return _full_signs(v.size) @ v


def admissible(norm_values, n: float) -> bool:
    """True when A_{k,n} is well defined: n even, or every signed base >= 0."""
    if is_even_integer(n):
        return True
    v = np.asarray(norm_values, dtype=float)
    return bool(v[0] >= np.sum(v[1:]) * (1 - BASE_ROUNDOFF))


def compute_A(norm_values, n: float) -> float:
    """A_{k,n} from the k norm values.

    Negative bases are only allowed for even integer n; any other exponent
    raises :class:`NegativeBaseNonIntegerExponent` rather than picking a
    branch of the real power.
    """
    v = np.asarray(norm_values, dtype=float)
    if v.ndim != 1 or v.size < 2:
        raise KTooSmall("need at least two norm values")
    if np.any(v < 0) or not np.all(np.isfinite(v)):
        raise ValueError("norm values must be finite and nonnegative")
    if not n > 0:
        raise ValueError(f"n must be positive, got {n}")
    bases = signed_bases(v)
    if is_even_integer(n):
        return float(np.sum(bases ** int(n)))
    floor = -BASE_ROUNDOFF * float(np.sum(v))
    if np.any(bases < floor):
        raise NegativeBaseNonIntegerExponent(
            f"signed sum {bases.min():.6g} < 0 cannot be raised to the power n={n}"
        )
    return float(np.sum(np.maximum(bases, 0.0) ** n))


def make_admissible(norm: Norm, sample, slack: float = 1.0) -> np.ndarray:
    """Scale x_1 (if needed) so that ||x_1|| >= slack * sum_{i>=2} ||x_i||."""
    X = np.array(as_tuple(sample, norm.dim), dtype=float)
    vals = norm.evaluate_rows(X)
    rest = float(np.sum(vals[1:]))
    if vals[0] == 0:
        raise ZeroVector("x_1 is zero; cannot rescale it")
    if vals[0] < slack * rest:
        X[0] *= slack * rest / vals[0]
    return X


@dataclass
class CharacterizationResult:
    test_name: TestName
    R: float
    A: float
    defect: float
    verdict: Verdict
    params: TestParams
    sample: np.ndarray
    violations: tuple = field(default_factory=tuple)
    tol: float = 0.0

    @property
    def consistent(self) -> bool:
        return self.verdict == Verdict.CONSISTENT

    def to_json(self) -> dict:
        return {
            "test": self.test_name.value,
            "R": self.R,
            "A": self.A,
            "defect": self.defect,
            "tol": self.tol,
            "verdict": self.verdict.value,
            "violations": [v.value for v in self.violations],
            "k": self.params.k,
            "n": self.params.n,
            "tol_rel": self.params.tol_rel,
            "tol_abs": self.params.tol_abs,
            "sample": self.sample.tolist(),
        }


def _rkn_verdict(R: float, A: float, params: TestParams) -> tuple[Verdict, tuple, float]:
    tol = params.tolerance(R, A)
    n = params.n
    found = []
    if n >= 2 and R > A + tol:
        found.append(Verdict.VIOLATES_I)
    if n <= 2 and R < A - tol:
        found.append(Verdict.VIOLATES_II)
    if n == 2 and abs(R - A) > tol:
        found.append(Verdict.VIOLATES_EQUALITY)
    return (found[0] if found else Verdict.CONSISTENT), tuple(found), tol


def rkn_akn_test(norm: Norm, sample, params: TestParams) -> CharacterizationResult:
    """Evaluate R and A on one sample and classify against (I), (II), equality."""
    X = as_tuple(sample, norm.dim)
    if X.shape[0] != params.k:
        raise DimensionMismatch(f"sample has {X.shape[0]} vectors, params.k = {params.k}")
    R = compute_R(norm, X, params.n)
    A = compute_A(norm.evaluate_rows(X), params.n)
    verdict, found, tol = _rkn_verdict(R, A, params)
    return CharacterizationResult(TestName.RKN_AKN, R, A, R - A, verdict, params, X, found, tol)


def _sq(norm: Norm, *vectors) -> np.ndarray:
    return norm.evaluate_rows(np.stack(vectors)) ** 2


def frechet_defect(norm: Norm, x, y, z) -> float:
    x, y, z = as_tuple([x, y, z], norm.dim)
    s = _sq(norm, x + y + z, x, y, z, x + y, y + z, x + z)
    return float((s[0] + s[1] + s[2] + s[3]) - (s[4] + s[5] + s[6]))


def parallelogram_defect(norm: Norm, x, y) -> float:
    x, y = as_tuple([x, y], norm.dim)
    s = _sq(norm, x - y, x + y, x, y)
    return float((s[0] + s[1]) - (2 * s[2] + 2 * s[3]))


def _unit_pair(norm: Norm, x, y) -> np.ndarray:
    X = as_tuple([x, y], norm.dim)
    vals = norm.evaluate_rows(X)
    if np.any(vals == 0):
        raise ZeroVector("Day's test needs two nonzero vectors")
    return X / vals[:, None]


def day_test(norm: Norm, x, y) -> float:
    """``||u - v||^2 + ||u + v||^2`` for the unit vectors ``u, v`` along ``x, y``."""
    u, v = _unit_pair(norm, x, y)
    s = _sq(norm, u - v, u + v)
    return float(s[0] + s[1])


def _equality_result(name, R, A, sample, k, tol_rel, tol_abs) -> CharacterizationResult:
    params = TestParams(k, 2.0, tol_rel, tol_abs)
    tol = params.tolerance(R, A)
    bad = abs(R - A) > tol
    verdict = Verdict.VIOLATES_EQUALITY if bad else Verdict.CONSISTENT
    found = (Verdict.VIOLATES_EQUALITY,) if bad else ()
    return CharacterizationResult(name, float(R), float(A), float(R - A), verdict, params, sample, found, tol)


def frechet_test(norm, x, y, z, tol_rel=DEFAULT_TOL_REL, tol_abs=DEFAULT_TOL_ABS) -> CharacterizationResult:
    """R = ||x+y+z||^2 + ||x||^2 + ||y||^2 + ||z||^2, A = the three pair sums."""
    X = as_tuple([x, y, z], norm.dim)
    x, y, z = X
    s = _sq(norm, x + y + z, x, y, z, x + y, y + z, x + z)
    return _equality_result(TestName.FRECHET, s[:4].sum(), s[4:].sum(), X, 3, tol_rel, tol_abs)


def parallelogram_test(norm, x, y, tol_rel=DEFAULT_TOL_REL, tol_abs=DEFAULT_TOL_ABS) -> CharacterizationResult:
    """R = ||x-y||^2 + ||x+y||^2, A = 2||x||^2 + 2||y||^2."""
    X = as_tuple([x, y], norm.dim)
    x, y = X
    s = _sq(norm, x - y, x + y, x, y)
    return _equality_result(TestName.PARALLELOGRAM, s[0] + s[1], 2 * s[2] + 2 * s[3], X, 2, tol_rel, tol_abs)


def day_result(norm, x, y, tol_rel=DEFAULT_TOL_REL, tol_abs=DEFAULT_TOL_ABS) -> CharacterizationResult:
    """R = Day's quantity on the normalized pair, A = 4."""
    U = _unit_pair(norm, x, y)
    return _equality_result(TestName.DAY, day_test(norm, U[0], U[1]), 4.0, U, 2, tol_rel, tol_abs)


def polarization(norm: Norm, x, y) -> float:
    """Candidate inner product ``(||x+y||^2 - ||x-y||^2) / 4``."""
    x, y = as_tuple([x, y], norm.dim)
    s = _sq(norm, x + y, x - y)
    return float((s[0] - s[1]) / 4)


def _polarization_rows(norm: Norm, X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    return (norm.evaluate_rows(X + Y) ** 2 - norm.evaluate_rows(X - Y) ** 2) / 4


@dataclass
class BilinearityReport:
    trials: int
    dim: int
    tol: float
    max_violation: dict
    witnesses: list

    @property
    def ok(self) -> bool:
        return not self.witnesses

    def to_json(self) -> dict:
        return {
            "trials": self.trials,
            "dim": self.dim,
            "tol": self.tol,
            "ok": self.ok,
            "max_violation": dict(self.max_violation),
            "witnesses": self.witnesses,
        }


def bilinearity_check(norm: Norm, dim: int, trials: int = 500, seed: int = 0, tol: float = 1e-9) -> BilinearityReport:
    """Check that the polarization form is symmetric, additive, homogeneous, and
    reproduces ``||x||^2`` on the diagonal. Violations are absolute."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (trials, dim))
    Y = rng.uniform(-1, 1, (trials, dim))
    Z = rng.uniform(-1, 1, (trials, dim))
    lam = rng.uniform(-2, 2, trials)

    pxy = _polarization_rows(norm, X, Y)
    viol = {
        "symmetry": np.abs(pxy - _polarization_rows(norm, Y, X)),
        "additivity": np.abs(
            _polarization_rows(norm, X + Y, Z) - _polarization_rows(norm, X, Z) - _polarization_rows(norm, Y, Z)
        ),
        "homogeneity": np.abs(_polarization_rows(norm, lam[:, None] * X, Y) - lam * pxy),
        "consistency": np.abs(_polarization_rows(norm, X, X) - norm.evaluate_rows(X) ** 2),
    }
    max_violation = {}
    witnesses = []
    for prop, v in viol.items():
        i = int(np.argmax(v))
        max_violation[prop] = float(v[i])
        if v[i] > tol:
            witnesses.append(
                {
                    "property": prop,
                    "violation": float(v[i]),
                    "x": X[i].tolist(),
                    "y": Y[i].tolist(),
                    "z": Z[i].tolist(),
                    "scalar": float(lam[i]),
                }
            )
    return BilinearityReport(trials, dim, tol, max_violation, witnesses)


def draw_sample(rng: np.random.Generator, k: int, dim: int) -> np.ndarray:
    return rng.uniform(-1, 1, (k, dim))


@dataclass
class CheckSummary:
    params: TestParams
    dim: int
    samples: int
    seed: int
    records: list
    bilinearity: BilinearityReport
    worst: Optional[CharacterizationResult]

    @property
    def falsified(self) -> bool:
        return self.worst is not None or not self.bilinearity.ok

    @property
    def verdict(self) -> str:
        return "falsified" if self.falsified else "no-violation-found"


def _rank(res: CharacterizationResult) -> tuple:
    # R/A violations come first since they yield replayable certificates;
    # within a test, larger excess over tolerance wins
    excess = (abs(res.defect) - res.tol) / max(abs(res.R), abs(res.A), 1.0)
    return (res.test_name == TestName.RKN_AKN, excess)


def check_characterization(
    norm: Norm, dim: int, params: TestParams, samples: int = 500, seed: int = 0
) -> CheckSummary:
    """Run every test on ``samples`` seeded random tuples.

    Each record holds the R/A test plus Fréchet, parallelogram and Day results
    for that tuple; ``worst`` is the strongest violation, preferring R/A ones.
    Non-builtin norms go through the axiom check first. For exponents where A
    needs nonnegative bases, x_1 is scaled up until the tuple is admissible.
    """
    require_norm(norm, dim, seed=seed)
    rng = np.random.default_rng(seed)
    records = []
    worst = None
    for i in range(samples):
        X = draw_sample(rng, params.k, dim)
        z = rng.uniform(-1, 1, dim)
        if not is_even_integer(params.n):
            X = make_admissible(norm, X)
        results = [rkn_akn_test(norm, X, params)]
        x, y = X[0], X[1]
        results.append(frechet_test(norm, x, y, z, params.tol_rel, params.tol_abs))
        results.append(parallelogram_test(norm, x, y, params.tol_rel, params.tol_abs))
        if np.all(norm.evaluate_rows(X[:2]) > 0):
            results.append(day_result(norm, x, y, params.tol_rel, params.tol_abs))
        for r in results:
            if not r.consistent and (worst is None or _rank(r) > _rank(worst)):
                worst = r
        records.append({"index": i, "results": results})
    bil = bilinearity_check(norm, dim, trials=samples, seed=seed)
    return CheckSummary(params, dim, samples, seed, records, bil, worst)

