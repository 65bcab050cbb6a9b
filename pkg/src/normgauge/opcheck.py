"""Operator form of the sign-pattern identity for real square matrices.

For T_1..T_k with |T| = (T^T T)^(1/2)::

    sum_eps |T_1 + sum eps_i T_i|^2 = 2^(k-1) sum_i |T_i|^2
                                   = sum_eps (|T_1| + sum eps_i |T_i|)^2

The left side needs no square roots (|M|^2 = M^T M); the right side goes
through :func:`matrix_abs`, so a bad root cannot hide behind the algebra.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characterize import _full_signs
from .errors import DimensionMismatch, EigensolverFailure, KTooSmall, NonFiniteInput, NotSquare

JACOBI_THRESHOLD = 1e-12
MAX_SWEEPS = 100


def as_matrix(T) -> np.ndarray:
    M = np.asarray(T, dtype=float)
    if M.ndim != 2 or M.shape[0] != M.shape[1] or M.shape[0] == 0:
        raise NotSquare(f"expected a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteInput("matrix has NaN or infinite entries")
    return M


def jacobi_eigh(A, threshold: float = JACOBI_THRESHOLD, max_sweeps: int = MAX_SWEEPS):
    """Eigenvalues and eigenvectors of a symmetric matrix by cyclic Jacobi rotations.

    Sweeps stop once the off-diagonal Frobenius norm drops to
    ``threshold * ||A||_F``. Returns ``(w, V, sweeps)`` with ``A = V diag(w) V^T``.
    """
    A = as_matrix(A).copy()
    A = (A + A.T) / 2
    d = A.shape[0]
    V = np.eye(d)
    target = threshold * np.linalg.norm(A)
    for sweep in range(max_sweeps + 1):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            return np.diag(A).copy(), V, sweep
        if sweep == max_sweeps:
            break
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = A[p, q]
                gap = A[q, q] - A[p, p]
                if abs(apq) <= 1e-18 * (abs(A[p, p]) + abs(A[q, q])) or apq == 0.0:
                    A[p, q] = A[q, p] = 0.0
                    continue
                theta = gap / (2 * apq)
                if abs(theta) > 1e150:
                    t = 1 / (2 * theta)
                else:
                    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1))
                c = 1 / math.sqrt(t * t + 1)
                s = t * c
                # A <- J^T A J with J the (p, q) rotation
                col_p = A[:, p].copy()
                col_q = A[:, q]
                A[:, p] = c * col_p - s * col_q
                A[:, q] = s * col_p + c * col_q
                row_p = A[p, :].copy()
                row_q = A[q, :]
                A[p, :] = c * row_p - s * row_q
                A[q, :] = s * row_p + c * row_q
                A[p, q] = A[q, p] = 0.0
                vp = V[:, p].copy()
                V[:, p] = c * vp - s * V[:, q]
                V[:, q] = s * vp + c * V[:, q]
    raise EigensolverFailure(f"Jacobi iteration did not converge in {max_sweeps} sweeps")


def matrix_abs(T, tol: float = 1e-9) -> np.ndarray:
    """The positive semidefinite square root of ``T^T T``, exactly symmetric.

    ``tol`` bounds the residual ``||S S - T^T T||_F / (1 + ||T^T T||_F)``;
    exceeding it raises :class:`EigensolverFailure`.
    """
    T = as_matrix(T)
    TtT = T.T @ T
    w, V, _ = jacobi_eigh(TtT)
    S = (V * np.sqrt(np.maximum(w, 0.0))) @ V.T
    S = (S + S.T) / 2
    resid = np.linalg.norm(S @ S - TtT) / (1 + np.linalg.norm(TtT))
    if resid > tol:
        raise EigensolverFailure(f"square root residual {resid:.3g} exceeds {tol:g}")
    return S


@dataclass
class OperatorIdentityReport:
    k: int
    dim: int
    lhs: np.ndarray
    mid: np.ndarray
    rhs: np.ndarray
    max_dev_lhs_mid: float
    max_dev_rhs_mid: float
    tol: float

    @property
    def passed(self) -> bool:
        return self.max_dev_lhs_mid <= self.tol and self.max_dev_rhs_mid <= self.tol

    def to_json(self) -> dict:
        return {
            "k": self.k,
            "dim": self.dim,
            "tol": self.tol,
            "max_dev_lhs_mid": self.max_dev_lhs_mid,
            "max_dev_rhs_mid": self.max_dev_rhs_mid,
            "passed": self.passed,
            "lhs": self.lhs.tolist(),
            "mid": self.mid.tolist(),
            "rhs": self.rhs.tolist(),
        }


def operator_identity_check(Ts, tol: float = 1e-9) -> OperatorIdentityReport:
    """Evaluate all three sides over the 2^(k-1) sign patterns.

    Deviations are ``||side - mid||_F / (1 + ||mid||_F)``; the check passes
    when both are at most ``tol``. Terms are summed in canonical sign-pattern
    order.
    """
    mats = [as_matrix(T) for T in Ts]
    if len(mats) < 2:
        raise KTooSmall("need at least two operators")
    shapes = {M.shape for M in mats}
    if len(shapes) != 1:
        raise DimensionMismatch(f"operators have different shapes {sorted(shapes)}")
    k = len(mats)
    d = mats[0].shape[0]
    stack = np.stack(mats)
    abs_stack = np.stack([matrix_abs(M) for M in mats])
    signs = _full_signs(k)

    lhs = np.zeros((d, d))
    rhs = np.zeros((d, d))
    for eps in signs:
        M = np.tensordot(eps, stack, axes=1)
        lhs += M.T @ M
        S = np.tensordot(eps, abs_stack, axes=1)
        rhs += S @ S
    mid = 2 ** (k - 1) * sum(M.T @ M for M in mats)
    scale = 1 + np.linalg.norm(mid)
    return OperatorIdentityReport(
        k=k,
        dim=d,
        lhs=lhs,
        mid=mid,
        rhs=rhs,
        max_dev_lhs_mid=float(np.linalg.norm(lhs - mid) / scale),
        max_dev_rhs_mid=float(np.linalg.norm(rhs - mid) / scale),
        tol=tol,
    )


def random_operators(k: int, dim: int, seed: int) -> list[np.ndarray]:
    rng = np.random.default_rng(seed)
    return [rng.uniform(-1, 1, (dim, dim)) for _ in range(k)]
