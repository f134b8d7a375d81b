"""Dense complex linear algebra used throughout the package.

Matrices are plain ``numpy`` complex arrays. Operators on a composite
space S+A always carry S as the first (slow) tensor factor, and operators
are vectorized by column stacking::

    A = [[a, b],
         [c, d]]   ->   vec(A) = (a, c, b, d)

so that ``vec(X @ Y @ Z) == kron(Z.T, X) @ vec(Y)``.
"""
from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

ATOL = 1e-10
RTOL = 1e-10


def tolerance(norm: float = 0.0, atol: float = ATOL, rtol: float = RTOL) -> float:
    """Structural tolerance ``atol + rtol * (1 + norm)``."""
    return atol + rtol * (1.0 + norm)


def as_matrix(m) -> np.ndarray:
    """Coerce ``m`` to a 2-d complex array, rejecting NaN/Inf entries."""
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-d matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix has non-finite entries")
    return arr


def as_square(m) -> np.ndarray:
    arr = as_matrix(m)
    if arr.shape[0] != arr.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {arr.shape}")
    return arr


def frobenius_norm(m) -> float:
    return float(np.linalg.norm(np.asarray(m), "fro"))


def dagger(m) -> np.ndarray:
    return np.asarray(m).conj().T


def hermiticity_residual(m) -> float:
    """``||m - m^dagger||_F``."""
    m = np.asarray(m)
    return frobenius_norm(m - dagger(m))


def tensor(*ops) -> np.ndarray:
    """Kronecker product; the first argument indexes the slow subsystem."""
    if not ops:
        raise ValueError("tensor() needs at least one operand")
    out = as_matrix(ops[0])
    for op in ops[1:]:
        out = np.kron(out, as_matrix(op))
    return out


def partial_trace(m, dims: tuple[int, int], which: str = "A") -> np.ndarray:
    """Trace out one factor of a bipartite operator on ``C^dS (x) C^dA``.

    ``which="A"`` traces the second factor and returns a ``dS x dS`` matrix;
    ``which="S"`` traces the first factor and returns ``dA x dA``.
    """
    m = as_square(m)
    d_s, d_a = (int(x) for x in dims)
    if d_s < 1 or d_a < 1 or m.shape[0] != d_s * d_a:
        raise ValueError(
            f"dims {dims} incompatible with operator of shape {m.shape}"
        )
    blocks = m.reshape(d_s, d_a, d_s, d_a)
    if which == "A":
        return np.einsum("iaja->ij", blocks)
    if which == "S":
        return np.einsum("sasb->ab", blocks)
    raise ValueError(f"which must be 'A' or 'S', got {which!r}")


def vectorize(m) -> np.ndarray:
    """Column-stacking vectorization: ``|i><j|`` maps to basis index ``j*d + i``."""
    return as_matrix(m).reshape(-1, order="F")


def devectorize(v, d: int | None = None) -> np.ndarray:
    """Inverse of :func:`vectorize` for square matrices."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    n = v.size
    side = math.isqrt(n)
    if side * side != n:
        raise ValueError(f"vector length {n} is not a perfect square")
    if d is not None and d != side:
        raise ValueError(f"vector length {n} does not match d={d}")
    return v.reshape(side, side, order="F")


class EigenDecomposition(NamedTuple):
    """Ascending real eigenvalues and the matching orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    sweeps: int = 0


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    r = abs(apq)
    phase = apq / r
    # Phase on column q makes the (p, q) element real, then a real rotation
    # annihilates it.
    theta = (a[q, q].real - a[p, p].real) / (2.0 * r)
    t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    # U restricted to (p, q) is [[c, s], [-s*conj(phase), c*conj(phase)]]
    u = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
    cols = a[:, [p, q]] @ u
    a[:, p], a[:, q] = cols[:, 0], cols[:, 1]
    rows = u.conj().T @ a[[p, q], :]
    a[p, :], a[q, :] = rows[0], rows[1]
    a[p, q] = a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    vcols = v[:, [p, q]] @ u
    v[:, p], v[:, q] = vcols[:, 0], vcols[:, 1]


def hermitian_eig(m, tol: float = 1e-9, max_sweeps: int = 100) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.

    The input is symmetrized as ``(m + m^dagger)/2`` after checking that its
    anti-Hermitian part is below ``tol * (1 + ||m||_F)``.
    """
    m = as_square(m)
    norm = frobenius_norm(m)
    residual = hermiticity_residual(m)
    if residual > tol * (1.0 + norm):
        raise ValueError(f"matrix is not Hermitian: ||m - m^dagger||_F = {residual:.3e}")
    n = m.shape[0]
    a = 0.5 * (m + dagger(m))
    v = np.eye(n, dtype=complex)
    # Stop once the off-diagonal mass is at rounding level.
    target = (np.finfo(float).eps * max(norm, np.finfo(float).tiny)) ** 2
    off_diagonal = ~np.eye(n, dtype=bool)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = np.sum(np.abs(a[off_diagonal]) ** 2)
        if off <= target:
            sweeps -= 1
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 1e-300:
                    _jacobi_rotate(a, v, p, q)
    else:
        raise RuntimeError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    evals = np.diag(a).real.copy()
    order = np.argsort(evals, kind="stable")
    return EigenDecomposition(evals[order], v[:, order], sweeps)


def eigvalsh(m, tol: float = 1e-9) -> np.ndarray:
    return hermitian_eig(m, tol=tol).eigenvalues


def min_eigenvalue(m, tol: float = 1e-9) -> float:
    return float(hermitian_eig(m, tol=tol).eigenvalues[0])
