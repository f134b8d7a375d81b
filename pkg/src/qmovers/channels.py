"""Superoperators on d x d operators and their structural tests.

A map is stored as its ``d^2 x d^2`` action on column-stacked operators,
``vec(E(X)) = action @ vec(X)``. Kraus operators are optional since
positive-but-not-CP maps have none.

The Choi matrix puts the output factor first::

    J(E) = sum_ij E(|i><j|) (x) |i><j|
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .linalg import (
    as_square,
    devectorize,
    frobenius_norm,
    hermitian_eig,
    hermiticity_residual,
    vectorize,
)
from .states import bloch_grid, projector, random_pure_state


@dataclass(frozen=True, eq=False)
class SuperOperator:
    d: int
    action: np.ndarray
    kraus: tuple[np.ndarray, ...] | None = None
    label: str = ""

    def __post_init__(self):
        action = np.array(self.action, dtype=complex)
        n = self.d * self.d
        if action.shape != (n, n):
            raise ValueError(f"action must be {n}x{n} for d={self.d}, got {action.shape}")
        if not np.all(np.isfinite(action)):
            raise ValueError("action has non-finite entries")
        action.flags.writeable = False
        object.__setattr__(self, "action", action)
        if self.kraus is not None:
            ks = tuple(np.array(k, dtype=complex) for k in self.kraus)
            for k in ks:
                if k.shape != (self.d, self.d):
                    raise ValueError(f"Kraus operator has shape {k.shape}, expected {(self.d, self.d)}")
                k.flags.writeable = False
            rebuilt = kraus_action(ks)
            err = frobenius_norm(rebuilt - action)
            if err > 1e-10 * (1.0 + frobenius_norm(action)):
                raise ValueError(f"Kraus form disagrees with action matrix (residual {err:.3e})")
            object.__setattr__(self, "kraus", ks)

    def __call__(self, m) -> np.ndarray:
        return apply(self, m)

    def __repr__(self):
        kind = "kraus" if self.kraus is not None else "action"
        return f"SuperOperator(d={self.d}, {kind}, label={self.label!r})"


def kraus_action(kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Action matrix of ``X -> sum_i K_i X K_i^dagger``: ``sum_i conj(K_i) (x) K_i``."""
    return sum(np.kron(np.conj(k), k) for k in kraus)


def from_kraus(kraus: Sequence[np.ndarray], label: str = "") -> SuperOperator:
    kraus = [as_square(k) for k in kraus]
    return SuperOperator(kraus[0].shape[0], kraus_action(kraus), tuple(kraus), label)


def from_function(fn, d: int, label: str = "") -> SuperOperator:
    """Tabulate a linear map given as a Python callable on d x d matrices."""
    n = d * d
    action = np.empty((n, n), dtype=complex)
    for col in range(n):
        unit = np.zeros(n, dtype=complex)
        unit[col] = 1.0
        action[:, col] = vectorize(fn(devectorize(unit, d)))
    return SuperOperator(d, action, None, label)


def identity_map(d: int) -> SuperOperator:
    return from_kraus([np.eye(d)], label="identity")


def unitary_map(u) -> SuperOperator:
    return from_kraus([as_square(u)], label="unitary")


def transpose_map(d: int) -> SuperOperator:
    return from_function(lambda x: x.T, d, label="transpose")


def scaled_map(e: SuperOperator, c: complex) -> SuperOperator:
    return SuperOperator(e.d, c * e.action, None, f"{c}*{e.label}")


def completely_depolarizing(d: int) -> SuperOperator:
    """``X -> Tr[X] 1/d``."""
    v = vectorize(np.eye(d))
    return SuperOperator(d, np.outer(v, v) / d, None, "depolarize")


def apply(e: SuperOperator, m) -> np.ndarray:
    m = as_square(m)
    if m.shape[0] != e.d:
        raise ValueError(f"operator is {m.shape}, map acts on d={e.d}")
    return devectorize(e.action @ vectorize(m), e.d)


def apply_kraus(e: SuperOperator, m) -> np.ndarray:
    if e.kraus is None:
        raise ValueError(f"{e!r} has no Kraus form")
    m = as_square(m)
    return sum(k @ m @ k.conj().T for k in e.kraus)


def unit_outputs(e: SuperOperator) -> np.ndarray:
    """``T[a, b, i, j] = <a|E(|i><j|)|b>``."""
    d = e.d
    # column j*d+i of action is vec(E(|i><j|)); row b*d+a picks entry (a, b)
    return e.action.reshape(d, d, d, d).transpose(1, 0, 3, 2)


class ChoiMatrix(NamedTuple):
    matrix: np.ndarray
    normalization: str = "unnormalized"


def choi(e: SuperOperator, normalized: bool = False) -> ChoiMatrix:
    """``J = sum_ij E(|i><j|) (x) |i><j|``; ``normalized`` divides by d."""
    d = e.d
    t = unit_outputs(e)
    # J[(a,i),(b,j)] = <a|E(|i><j|)|b>
    j = t.transpose(0, 2, 1, 3).reshape(d * d, d * d)
    if normalized:
        return ChoiMatrix(j / d, "state-normalized")
    return ChoiMatrix(j.copy(), "unnormalized")


def from_choi(j, d: int, label: str = "") -> SuperOperator:
    j = as_square(j)
    t = j.reshape(d, d, d, d).transpose(0, 2, 1, 3)
    action = t.transpose(1, 0, 3, 2).reshape(d * d, d * d)
    return SuperOperator(d, action, None, label)


def kraus_from_choi(e: SuperOperator, tol: float = 1e-9) -> list[np.ndarray]:
    """Canonical Kraus operators ``sqrt(lambda) * reshape(v)`` from the Choi spectrum.

    Raises if the map is not CP within ``tol``.
    """
    d = e.d
    eig = hermitian_eig(choi(e).matrix)
    if eig.eigenvalues[0] < -tol:
        raise ValueError(f"map is not completely positive (min Choi eigenvalue {eig.eigenvalues[0]:.3e})")
    ks = []
    for lam, v in zip(eig.eigenvalues, eig.eigenvectors.T):
        if lam > tol:
            ks.append(np.sqrt(lam) * v.reshape(d, d))
    return ks


def with_kraus(e: SuperOperator, tol: float = 1e-9) -> SuperOperator:
    if e.kraus is not None:
        return e
    ks = kraus_from_choi(e, tol)
    return SuperOperator(e.d, kraus_action(ks), tuple(ks), e.label)


class Verdict(NamedTuple):
    ok: bool
    value: float


def is_hermiticity_preserving(e: SuperOperator, tol: float = 1e-9) -> Verdict:
    j = choi(e).matrix
    res = hermiticity_residual(j)
    return Verdict(res <= tol * (1.0 + frobenius_norm(j)), res)


def min_choi_eigenvalue(e: SuperOperator) -> float:
    return float(hermitian_eig(choi(e).matrix).eigenvalues[0])


def is_completely_positive(e: SuperOperator, tol: float = 1e-9) -> Verdict:
    """CP iff the unnormalized Choi matrix has no eigenvalue below ``-tol``.

    ``value`` is the minimal Choi eigenvalue.
    """
    j = choi(e).matrix
    res = hermiticity_residual(j)
    if res > tol * (1.0 + frobenius_norm(j)):
        raise ValueError(f"Choi matrix is not Hermitian (residual {res:.3e})")
    lo = float(hermitian_eig(j, tol=max(tol, 1e-9)).eigenvalues[0])
    return Verdict(lo >= -tol, lo)


def is_trace_preserving(e: SuperOperator, tol: float = 1e-10) -> Verdict:
    """TP iff ``Tr E(|i><j|) = delta_ij`` for every matrix unit; ``value`` is the worst deviation."""
    t = unit_outputs(e)
    traces = np.einsum("aaij->ij", t)
    res = float(np.max(np.abs(traces - np.eye(e.d))))
    return Verdict(res <= tol, res)


class PositivityReport(NamedTuple):
    ok: bool
    min_eigenvalue: float
    worst_state: np.ndarray
    evaluated: int


def is_positive_sampled(e: SuperOperator, samples: int = 2000, seed=0, tol: float = 1e-10,
                        grid: tuple[int, int] = (64, 128)) -> PositivityReport:
    """Search for a pure input whose image has a negative eigenvalue.

    Haar samples are complemented by a Bloch-sphere grid when d = 2. A
    negative verdict is a certificate; a positive one is only evidence.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rng = np.random.default_rng(seed)
    states = [random_pure_state(e.d, rng) for _ in range(samples)]
    if e.d == 2:
        states.extend(bloch_grid(*grid))
    worst, worst_state = np.inf, None
    for psi in states:
        out = apply(e, projector(psi))
        lo = float(hermitian_eig(0.5 * (out + out.conj().T)).eigenvalues[0])
        if lo < worst:
            worst, worst_state = lo, psi
    return PositivityReport(worst >= -tol, worst, worst_state, len(states))


def extend(e: SuperOperator, d_a: int) -> SuperOperator:
    """``E (x) I_A`` on ``C^d (x) C^dA``, with S the first factor."""
    if d_a < 1:
        raise ValueError(f"ancilla dimension must be >= 1, got {d_a}")
    d, n = e.d, e.d * d_a
    t = unit_outputs(e)  # t[s, u, i, j] = <s|E(|i><j|)|u>
    # out[s, a, u, b] = sum_ij t[s, u, i, j] X[i, a, j, b]
    action = np.empty((n * n, n * n), dtype=complex)
    for col in range(n * n):
        unit = np.zeros(n * n, dtype=complex)
        unit[col] = 1.0
        x = devectorize(unit, n).reshape(d, d_a, d, d_a)
        out = np.einsum("suij,iajb->saub", t, x).reshape(n, n)
        action[:, col] = vectorize(out)
    label = f"{e.label}(x)I{d_a}"
    if e.kraus is not None:
        ks = tuple(np.kron(k, np.eye(d_a)) for k in e.kraus)
        return SuperOperator(n, action, ks, label)
    return SuperOperator(n, action, None, label)


def apply_extended(e: SuperOperator, rho, d_a: int) -> np.ndarray:
    """``(E (x) I_A)(rho)`` without building the extended action matrix."""
    rho = as_square(rho)
    d = e.d
    if rho.shape[0] != d * d_a:
        raise ValueError(f"operator is {rho.shape}, expected {(d * d_a,) * 2}")
    x = rho.reshape(d, d_a, d, d_a)
    return np.einsum("suij,iajb->saub", unit_outputs(e), x).reshape(d * d_a, d * d_a)


def convex_combine(maps: Sequence[tuple[SuperOperator, float]], tol: float = 1e-12) -> SuperOperator:
    """``sum_i w_i E_i`` for probability weights ``w_i``."""
    maps = list(maps)
    if not maps:
        raise ValueError("need at least one map")
    weights = np.array([w for _, w in maps], dtype=float)
    if np.any(weights < 0) or abs(weights.sum() - 1.0) > tol:
        raise ValueError(f"weights must be non-negative and sum to 1, got {weights.tolist()}")
    d = maps[0][0].d
    if any(e.d != d for e, _ in maps):
        raise ValueError("all maps must act on the same dimension")
    action = sum(w * e.action for e, w in maps)
    label = " + ".join(f"{w:g}*{e.label}" for e, w in maps)
    return SuperOperator(d, action, None, label)
