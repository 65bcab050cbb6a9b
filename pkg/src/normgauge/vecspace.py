"""Vectors in R^d and the closed family of norms the toolkit works with.

Every other module touches a norm only through :func:`evaluate` (single
vector) or :meth:`Norm.evaluate_rows` (a stack of vectors), so user-supplied
norms plug in by subclassing :class:`Norm` or by wrapping a callable in
:class:`CustomNorm`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import (
    DimensionMismatch,
    InvalidNorm,
    NonFiniteInput,
    NotSerializable,
)

# eigenvalue floor for positive-definiteness, relative to the largest eigenvalue
PD_FLOOR = 1e-12


def as_vector(x, dim: Optional[int] = None) -> np.ndarray:
    """Return ``x`` as a finite 1-D float array, optionally checking its length."""
    v = np.asarray(x, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteInput("vector has NaN or infinite coordinates")
    if dim is not None and v.size != dim:
        raise DimensionMismatch(f"vector has dimension {v.size}, expected {dim}")
    return v


def as_tuple(vectors, dim: Optional[int] = None) -> np.ndarray:
    """Stack vectors into a (k, d) array with a shared, finite dimension."""
    if isinstance(vectors, np.ndarray) and vectors.ndim == 2:
        arr = vectors.astype(float, copy=False)
    else:
        rows = [np.asarray(v, dtype=float) for v in vectors]
        if not rows:
            raise DimensionMismatch("empty vector tuple")
        sizes = {r.shape for r in rows}
        if len(sizes) != 1 or rows[0].ndim != 1:
            raise DimensionMismatch(f"vectors have mixed shapes {sorted(sizes)}")
        arr = np.stack(rows)
    if arr.shape[1] == 0:
        raise DimensionMismatch("vectors must have dimension >= 1")
    if not np.all(np.isfinite(arr)):
        raise NonFiniteInput("vector tuple has NaN or infinite coordinates")
    if dim is not None and arr.shape[1] != dim:
        raise DimensionMismatch(f"vectors have dimension {arr.shape[1]}, expected {dim}")
    return arr


class Norm:
    """Base class for norm descriptors.

    Subclasses implement ``_rows`` on a finite ``(m, d)`` array; dimension and
    finiteness checks happen here.
    """

    #: fixed dimension, or None when the norm is defined on every R^d
    dim: Optional[int] = None

    def _rows(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def evaluate_rows(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2:
            raise DimensionMismatch(f"expected a 2-D stack of vectors, got shape {X.shape}")
        if not np.all(np.isfinite(X)):
            raise NonFiniteInput("input has NaN or infinite coordinates")
        if self.dim is not None and X.shape[1] != self.dim:
            raise DimensionMismatch(f"norm expects dimension {self.dim}, got {X.shape[1]}")
        return self._rows(X)

    def __call__(self, x) -> float:
        return evaluate(self, x)

    def to_json(self) -> dict:
        raise NotSerializable(f"{type(self).__name__} has no JSON form")

    @property
    def serializable(self) -> bool:
        return True

    def describe(self) -> dict:
        """JSON form when available, otherwise a marker flagging a custom norm."""
        try:
            return self.to_json()
        except NotSerializable:
            return {"variant": "custom", "serializable": False, "name": getattr(self, "name", "")}


def _check_p(p) -> float:
    p = float(p)
    if math.isnan(p) or p < 1:
        raise InvalidNorm(f"p must be >= 1 for a norm, got {p}")
    return p


def _pnorm_rows(A: np.ndarray, p: float, weights=None) -> np.ndarray:
    # divide out the largest coordinate so |x|^p neither underflows nor overflows
    m = np.max(A, axis=1) if A.shape[1] else np.zeros(A.shape[0])
    safe = np.where(m > 0, m, 1.0)
    Z = (A / safe[:, None]) ** p
    if weights is not None:
        Z = Z * weights
    return m * np.sum(Z, axis=1) ** (1.0 / p)


def _p_to_json(p: float):
    return "inf" if math.isinf(p) else p


@dataclass(frozen=True)
class PNorm(Norm):
    p: float

    def __post_init__(self):
        object.__setattr__(self, "p", _check_p(self.p))

    def _rows(self, X):
        if math.isinf(self.p):
            return np.max(np.abs(X), axis=1)
        return _pnorm_rows(np.abs(X), self.p)

    def to_json(self):
        return {"variant": "pnorm", "p": _p_to_json(self.p)}


@dataclass(frozen=True, eq=False)
class WeightedPNorm(Norm):
    weights: np.ndarray
    p: float

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)) or np.any(w <= 0):
            raise InvalidNorm("weights must be a non-empty vector of positive finite reals")
        w.flags.writeable = False
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "p", _check_p(self.p))
        object.__setattr__(self, "dim", w.size)

    def _rows(self, X):
        if math.isinf(self.p):
            return np.max(self.weights * np.abs(X), axis=1)
        return _pnorm_rows(np.abs(X), self.p, self.weights)

    def to_json(self):
        return {"variant": "weighted_pnorm", "weights": self.weights.tolist(), "p": _p_to_json(self.p)}


@dataclass(frozen=True)
class SupNorm(Norm):
    def _rows(self, X):
        return np.max(np.abs(X), axis=1)

    def to_json(self):
        return {"variant": "sup"}


@dataclass(frozen=True, eq=False)
class QuadraticNorm(Norm):
    """``sqrt(x^T G x)`` for a symmetric positive-definite Gram matrix ``G``."""

    G: np.ndarray

    def __post_init__(self):
        G = np.array(self.G, dtype=float)
        if G.ndim != 2 or G.shape[0] != G.shape[1] or G.shape[0] == 0:
            raise InvalidNorm(f"Gram matrix must be square, got shape {G.shape}")
        if not np.all(np.isfinite(G)):
            raise InvalidNorm("Gram matrix has non-finite entries")
        if not np.array_equal(G, G.T):
            raise InvalidNorm("Gram matrix must be symmetric")
        eig = np.linalg.eigvalsh(G)
        if eig[-1] <= 0 or eig[0] <= PD_FLOOR * eig[-1]:
            raise InvalidNorm(f"Gram matrix is not positive definite (eigenvalues {eig[0]:.3g}..{eig[-1]:.3g})")
        G.flags.writeable = False
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "dim", G.shape[0])

    def _rows(self, X):
        m = np.max(np.abs(X), axis=1)
        Z = X / np.where(m > 0, m, 1.0)[:, None]
        q = np.einsum("ij,jk,ik->i", Z, self.G, Z)
        return m * np.sqrt(np.maximum(q, 0.0))

    def inner(self, x, y) -> float:
        return float(as_vector(x, self.dim) @ self.G @ as_vector(y, self.dim))

    def to_json(self):
        return {"variant": "quadratic", "G": self.G.tolist()}


def _common_dim(norms: Sequence[Norm]) -> Optional[int]:
    dims = {n.dim for n in norms if n.dim is not None}
    if len(dims) > 1:
        raise InvalidNorm(f"component norms have different dimensions {sorted(dims)}")
    return dims.pop() if dims else None


@dataclass(frozen=True, eq=False)
class MaxOf(Norm):
    first: Norm
    second: Norm

    def __post_init__(self):
        object.__setattr__(self, "dim", _common_dim([self.first, self.second]))

    def _rows(self, X):
        return np.maximum(self.first._rows(X), self.second._rows(X))

    @property
    def serializable(self):
        return self.first.serializable and self.second.serializable

    def to_json(self):
        return {"variant": "max_of", "norms": [self.first.to_json(), self.second.to_json()]}


@dataclass(frozen=True, eq=False)
class ScaledSum(Norm):
    coefficients: tuple
    norms: tuple

    def __post_init__(self):
        c = tuple(float(v) for v in self.coefficients)
        norms = tuple(self.norms)
        if len(c) != len(norms) or not c:
            raise InvalidNorm("need one coefficient per component norm")
        if any(v < 0 or not math.isfinite(v) for v in c) or not any(v > 0 for v in c):
            raise InvalidNorm("coefficients must be finite, >= 0, and not all zero")
        object.__setattr__(self, "coefficients", c)
        object.__setattr__(self, "norms", norms)
        object.__setattr__(self, "dim", _common_dim(norms))

    def _rows(self, X):
        out = np.zeros(X.shape[0])
        for c, n in zip(self.coefficients, self.norms):
            out = out + c * n._rows(X)
        return out

    @property
    def serializable(self):
        return all(n.serializable for n in self.norms)

    def to_json(self):
        return {
            "variant": "scaled_sum",
            "coefficients": list(self.coefficients),
            "norms": [n.to_json() for n in self.norms],
        }


@dataclass(frozen=True, eq=False)
class CustomNorm(Norm):
    """Wraps a callable ``f(x) -> float``. Not serializable.

    The callable is trusted to be deterministic but not to be a norm;
    run :func:`norm_axiom_check` before relying on any verdict.
    """

    func: Callable[[np.ndarray], float]
    dim: Optional[int] = None
    name: str = field(default="")

    def _rows(self, X):
        out = np.array([float(self.func(row)) for row in X])
        if not np.all(np.isfinite(out)):
            raise NonFiniteInput("custom norm returned a non-finite value")
        return out

    @property
    def serializable(self):
        return False


def evaluate(norm: Norm, x) -> float:
    """Return ``norm(x)`` for a single vector."""
    v = as_vector(x, norm.dim)
    return float(norm.evaluate_rows(v[None, :])[0])


def gram_matrix(norm: Norm, dim: Optional[int] = None) -> Optional[np.ndarray]:
    """Gram matrix of a norm that is quadratic by construction, else None."""
    if isinstance(norm, QuadraticNorm):
        return norm.G
    if isinstance(norm, WeightedPNorm) and norm.p == 2:
        return np.diag(norm.weights)
    if isinstance(norm, PNorm) and norm.p == 2 and dim is not None:
        return np.eye(dim)
    return None


def norm_from_json(obj) -> Norm:
    """Build a descriptor from its JSON object (or JSON text)."""
    if isinstance(obj, str):
        import json

        try:
            obj = json.loads(obj)
        except json.JSONDecodeError as exc:
            raise InvalidNorm(f"malformed norm JSON: {exc}") from None
    if not isinstance(obj, dict) or "variant" not in obj:
        raise InvalidNorm("norm JSON must be an object with a 'variant' key")
    variant = obj["variant"]
    try:
        if variant == "pnorm":
            return PNorm(float(obj["p"]))
        if variant == "weighted_pnorm":
            return WeightedPNorm(obj["weights"], float(obj.get("p", 2)))
        if variant == "sup":
            return SupNorm()
        if variant == "quadratic":
            return QuadraticNorm(obj["G"])
        if variant == "max_of":
            a, b = obj["norms"]
            return MaxOf(norm_from_json(a), norm_from_json(b))
        if variant == "scaled_sum":
            return ScaledSum(obj["coefficients"], tuple(norm_from_json(n) for n in obj["norms"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, InvalidNorm):
            raise
        raise InvalidNorm(f"bad parameters for variant {variant!r}: {exc}") from None
    if variant == "custom":
        raise NotSerializable("custom norms cannot be loaded from JSON")
    raise InvalidNorm(f"unknown norm variant {variant!r}")


@dataclass
class AxiomWitness:
    axiom: str
    violation: float
    x: list
    y: Optional[list] = None
    scalar: Optional[float] = None


@dataclass
class AxiomReport:
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
            "witnesses": [w.__dict__ for w in self.witnesses],
        }


def norm_axiom_check(norm: Norm, dim: int, trials: int = 1000, seed: int = 0, tol: float = 1e-9) -> AxiomReport:
    """Sample vector pairs and scalars; report the worst breach of each norm axiom.

    Violations are relative: homogeneity compares ``|‖λx‖ - |λ|‖x‖|`` against
    ``1 + |λ|‖x‖`` and the triangle inequality ``‖x+y‖ - ‖x‖ - ‖y‖`` against
    ``1 + ‖x‖ + ‖y‖``. One witness (the worst) is kept per violated axiom.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1, 1, (trials, dim))
    Y = rng.uniform(-1, 1, (trials, dim))
    lam = rng.uniform(-3, 3, trials)

    nx = norm.evaluate_rows(X)
    ny = norm.evaluate_rows(Y)
    nlx = norm.evaluate_rows(lam[:, None] * X)
    nsum = norm.evaluate_rows(X + Y)
    nzero = norm.evaluate_rows(np.zeros((1, dim)))[0]

    # nonnegativity, zero at the origin, and strict positivity away from it
    pos = np.maximum(-nx, 0.0)
    pos = np.where(nx == 0, 1.0, pos)
    checks = {
        "definiteness": (np.append(pos, abs(nzero)), None),
        "homogeneity": (np.abs(nlx - np.abs(lam) * nx) / (1 + np.abs(lam) * nx), "scalar"),
        "triangle": (np.maximum(nsum - nx - ny, 0.0) / (1 + nx + ny), "pair"),
    }
    max_violation = {}
    witnesses = []
    for axiom, (viol, kind) in checks.items():
        i = int(np.argmax(viol))
        worst = float(viol[i])
        max_violation[axiom] = worst
        if worst > tol:
            if axiom == "definiteness" and i == trials:
                witnesses.append(AxiomWitness(axiom, worst, [0.0] * dim))
                continue
            w = AxiomWitness(axiom, worst, X[i].tolist())
            if kind == "scalar":
                w.scalar = float(lam[i])
            elif kind == "pair":
                w.y = Y[i].tolist()
            witnesses.append(w)
    return AxiomReport(trials, dim, tol, max_violation, witnesses)


def require_norm(norm: Norm, dim: int, trials: int = 200, seed: int = 0) -> None:
    """Raise :class:`InvalidNorm` when a non-builtin norm fails the axiom check."""
    if norm.serializable:
        return
    report = norm_axiom_check(norm, dim, trials, seed)
    if not report.ok:
        axioms = ", ".join(w.axiom for w in report.witnesses)
        raise InvalidNorm(f"custom norm violates the norm axioms ({axioms})")
