"""Generalized quantum movers.

A map E is a generalized mover GQM(p) when every pure input keeps a fixed
fidelity ``<psi|E(|psi><psi|)|psi> = p`` with its image. This module builds
the two families used here,

* the universal inverter ``N_p(X) = (dp-1)/(d-1) X + (1-p)/(d-1) Tr[X] 1``,
* the witness map ``M_p(X) = N_p(X) + i[X, Theta]`` with Hermitian Theta,

and the numerical checks around them: the CP threshold, output purity, the
four-index constraint tensor ``<j k l m> = <j|E(|k><l|)|m>``, the Werner
witness spectrum, and scalar falsifiers showing that pure-output movers
cannot exist.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .channels import (
    SuperOperator,
    apply,
    apply_extended,
    is_completely_positive,
    kraus_from_choi,
    min_choi_eigenvalue,
    unit_outputs,
)
from .linalg import hermitian_eig, hermiticity_residual, vectorize
from .states import (
    bloch_grid,
    orthogonal_complement_qubit,
    projector,
    purity,
    random_pure_state,
    random_unitary,
    raw_fidelity,
    werner_state,
)

PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)

# labels for the two members of an orthonormal pair in ConstraintTensor
K, KP = 0, 1


@dataclass(frozen=True)
class InverterParams:
    d: int
    p: float

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise ValueError(f"dimension must be an integer >= 2, got {self.d!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")

    @property
    def identity_weight(self) -> float:
        return (self.d * self.p - 1.0) / (self.d - 1.0)

    @property
    def trace_weight(self) -> float:
        return (1.0 - self.p) / (self.d - 1.0)


def unit_axis(axis) -> np.ndarray:
    n = np.asarray(axis, dtype=float).reshape(-1)
    if n.size != 3 or not np.all(np.isfinite(n)) or np.linalg.norm(n) == 0.0:
        raise ValueError(f"axis must be a non-zero 3-vector, got {axis!r}")
    return n / np.linalg.norm(n)


def pauli_along(axis) -> np.ndarray:
    n = unit_axis(axis)
    return n[0] * PAULI[0] + n[1] * PAULI[1] + n[2] * PAULI[2]


@dataclass(frozen=True, eq=False)
class WitnessParams:
    d: int
    p: float
    theta: np.ndarray

    def __post_init__(self):
        InverterParams(self.d, self.p)
        if self.p >= 1.0:
            raise ValueError(f"witness map needs p in [0, 1), got {self.p!r}")
        theta = np.array(self.theta, dtype=complex)
        if theta.shape != (self.d, self.d):
            raise ValueError(f"theta must be {self.d}x{self.d}, got {theta.shape}")
        if hermiticity_residual(theta) > 1e-12:
            raise ValueError("theta must be Hermitian")
        theta.flags.writeable = False
        object.__setattr__(self, "theta", theta)

    @classmethod
    def qubit(cls, p: float, axis=(0.0, 0.0, 1.0)) -> "WitnessParams":
        """Theta = sqrt(p(1-p)) * (n . sigma)."""
        if not 0.0 <= p < 1.0:
            raise ValueError(f"witness map needs p in [0, 1), got {p!r}")
        return cls(2, p, np.sqrt(p * (1.0 - p)) * pauli_along(axis))


def universal_inverter(d: int, p: float) -> SuperOperator:
    """``N_p``; trace preserving for every p, CP iff ``p >= 1/(d+1)``. ``p = 1`` is the identity."""
    params = InverterParams(d, p)
    v = vectorize(np.eye(d))
    action = params.identity_weight * np.eye(d * d) + params.trace_weight * np.outer(v, v)
    return SuperOperator(d, action, None, f"N(d={d},p={p:g})")


def witness_map(params: WitnessParams) -> SuperOperator:
    """``N_p + i[., Theta]``; the commutator leaves the trace and the fidelity untouched."""
    d, theta = params.d, params.theta
    base = universal_inverter(d, params.p).action
    # vec(X Theta) = (Theta^T (x) 1) vec X, vec(Theta X) = (1 (x) Theta) vec X
    comm = 1j * (np.kron(theta.T, np.eye(d)) - np.kron(np.eye(d), theta))
    return SuperOperator(d, base + comm, None, f"M(d={d},p={params.p:g})")


def qubit_witness(p: float, axis=(0.0, 0.0, 1.0)) -> SuperOperator:
    return witness_map(WitnessParams.qubit(p, axis))


def output_purity(d: int, p: float) -> float:
    """Closed-form ``Tr[N_p(|psi><psi|)^2] = p^2 + (1-p)^2/(d-1)``.

    The image of a pure state has eigenvalue p along psi and ``(1-p)/(d-1)``
    on the (d-1)-dimensional complement. For d = 2 this coincides with
    ``((1-p)/(d-1))^2 + p^2``; for d > 2 that shorter expression omits the
    multiplicity and underestimates the purity.
    """
    InverterParams(d, p)
    return p ** 2 + (1.0 - p) ** 2 / (d - 1.0)


def purity_check(e: SuperOperator, psi) -> float:
    return purity(apply(e, projector(psi)))


def inverter_choi_spectrum(d: int, p: float) -> tuple[float, float]:
    """The two distinct Choi eigenvalues of ``N_p``: ``(d+1)p - 1`` (once) and ``(1-p)/(d-1)``."""
    return (d + 1.0) * p - 1.0, (1.0 - p) / (d - 1.0)


class ThresholdResult(NamedTuple):
    d: int
    empirical: float
    analytic_upper: float
    analytic_lower: float
    iterations: int


def cp_threshold(d: int, tol: float = 1e-9) -> ThresholdResult:
    """Smallest p for which ``N_p`` is CP, by bisection on the signed minimal Choi eigenvalue.

    Also returns the bounds ``1/(2d-1) <= p_t(d) <= 1/(d+1)`` on the
    implementability threshold.
    """
    if int(d) != d or d < 2:
        raise ValueError(f"dimension must be an integer >= 2, got {d!r}")

    def f(p):
        return min_choi_eigenvalue(universal_inverter(d, p))

    lo, hi = 0.0, 1.0
    # N_1 is the identity, whose Choi minimum is exactly 0
    if not (f(lo) < 0.0 and f(hi) >= -1e-12):
        raise RuntimeError("threshold bisection is not bracketed")
    iterations = 0
    while hi - lo > tol / 8.0:
        mid = 0.5 * (lo + hi)
        if f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
        iterations += 1
    return ThresholdResult(d, 0.5 * (lo + hi), 1.0 / (d + 1.0), 1.0 / (2.0 * d - 1.0), iterations)


def qubit_min_eigenvalues(ops: np.ndarray) -> np.ndarray:
    """Closed-form smaller eigenvalue of a stack of Hermitian 2x2 matrices."""
    a, c = ops[..., 0, 0].real, ops[..., 1, 1].real
    b = 0.5 * (ops[..., 0, 1] + ops[..., 1, 0].conj())
    return 0.5 * (a + c) - np.sqrt(0.25 * (a - c) ** 2 + np.abs(b) ** 2)


def witness_positivity_d2(p: float, axis=(0.0, 0.0, 1.0), grid: tuple[int, int] = (64, 128)) -> float:
    """Minimal output eigenvalue of the qubit witness map over a Bloch-sphere grid of pure inputs."""
    e = qubit_witness(p, axis)
    states = bloch_grid(*grid)
    rhos = np.einsum("ni,nj->nij", states, states.conj())
    t = unit_outputs(e)
    outs = np.einsum("abij,nij->nab", t, rhos)
    return float(qubit_min_eigenvalues(outs).min())


def witness_bloch_output(p: float, r, axis=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Vector ``w`` with ``M_p((1 + r.sigma)/2) = 1/2 + w.sigma``: ``w = (2p-1)/2 r - sqrt(p(1-p)) r x n``."""
    r = np.asarray(r, dtype=float)
    n = unit_axis(axis)
    return 0.5 * (2.0 * p - 1.0) * r - np.sqrt(p * (1.0 - p)) * np.cross(r, n)


def werner_lambda(q: float, p: float) -> float:
    """The possibly negative eigenvalue of ``(M_p (x) I)(R_q)``: ``qp/2 - (3q-1)/4``."""
    return q * p / 2.0 - (3.0 * q - 1.0) / 4.0


class WitnessEigen(NamedTuple):
    q: float
    p: float
    eigenvalues: np.ndarray
    lambda_formula: float
    lambda_numeric: float
    min_other: float


def witness_eigen_scan(q: float, p: float, axis=(0.0, 0.0, 1.0)) -> WitnessEigen:
    """Spectrum of ``(M_p (x) I)(R_q)``.

    The eigenvalue nearest to the closed form ``lambda(q, p)`` is reported
    as ``lambda_numeric``; ``min_other`` is the smallest of the remaining three.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must lie in [0, 1), got {p!r}")
    out = apply_extended(qubit_witness(p, axis), werner_state(q), 2)
    evals = hermitian_eig(out).eigenvalues
    lam = werner_lambda(q, p)
    i = int(np.argmin(np.abs(evals - lam)))
    others = np.delete(evals, i)
    return WitnessEigen(q, p, evals, lam, float(evals[i]), float(others.min()))


def witness_grid(qs: Sequence[float], ps: Sequence[float], axis=(0.0, 0.0, 1.0),
                 workers: int = 1) -> list[WitnessEigen]:
    """Row-major (q outer, p inner) scan; results keep grid order for any ``workers``."""
    cells = [(q, p) for q in qs for p in ps]
    if workers <= 1:
        return [witness_eigen_scan(q, p, axis) for q, p in cells]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda c: witness_eigen_scan(c[0], c[1], axis), cells))


def critical_p(q: float) -> float:
    """Largest p below which ``M_p`` detects ``R_q``: ``(3q-1)/(2q)``, or 0 when ``q <= 1/3``."""
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q!r}")
    if 3.0 * q <= 1.0:
        return 0.0
    return (3.0 * q - 1.0) / (2.0 * q)


def critical_p_from_concurrence(c: float) -> float:
    """``(3/2)(1 - 1/(2C+1))``, the same threshold written through the Werner concurrence."""
    if not 0.0 <= c <= 1.0:
        raise ValueError(f"concurrence must lie in [0, 1], got {c!r}")
    return 1.5 * (1.0 - 1.0 / (2.0 * c + 1.0))


# -- constraint tensor -------------------------------------------------------


def rotated_unit_outputs(e: SuperOperator, u: np.ndarray) -> np.ndarray:
    """``T[a, b, i, j] = <u_a|E(|u_i><u_j|)|u_b>`` for the columns ``u_i`` of a unitary."""
    t = unit_outputs(e)
    return np.einsum("sa,ub,xi,yj,suxy->abij", u.conj(), u, u, u.conj(), t)


@dataclass(frozen=True, eq=False)
class ConstraintTensor:
    """``<j k l m> = <j|E(|k><l|)|m>`` over an orthonormal pair; index 0 is k, 1 is k'."""

    entries: np.ndarray

    def __getitem__(self, idx) -> complex:
        j, k, l, m = idx
        return complex(self.entries[j, k, l, m])

    def adjoint_residual(self) -> float:
        """max |<jklm> - <mlkj>^*|; zero for Hermiticity-preserving maps."""
        return float(np.max(np.abs(self.entries - self.entries.transpose(3, 2, 1, 0).conj())))


def _pair_vectors(d: int, k, k_prime) -> np.ndarray:
    if np.isscalar(k) and np.isscalar(k_prime):
        if not (0 <= k < d and 0 <= k_prime < d) or k == k_prime:
            raise ValueError(f"need distinct basis indices in [0, {d}), got {k}, {k_prime}")
        vecs = np.zeros((d, 2), dtype=complex)
        vecs[k, 0] = vecs[k_prime, 1] = 1.0
        return vecs
    vecs = np.stack([np.asarray(k, dtype=complex), np.asarray(k_prime, dtype=complex)], axis=1)
    if vecs.shape[0] != d or np.max(np.abs(vecs.conj().T @ vecs - np.eye(2))) > 1e-10:
        raise ValueError("k and k_prime must be orthonormal vectors of the map's dimension")
    return vecs


def constraint_tensor(e: SuperOperator, k=0, k_prime=1) -> ConstraintTensor:
    """All 16 entries ``<j k l m>`` for ``j, k, l, m`` in the pair; ``k``/``k_prime`` are basis indices or vectors."""
    vecs = _pair_vectors(e.d, k, k_prime)
    ent = np.empty((2, 2, 2, 2), dtype=complex)
    for b in range(2):
        for c in range(2):
            out = apply(e, np.outer(vecs[:, b], vecs[:, c].conj()))
            ent[:, b, c, :] = vecs.conj().T @ out @ vecs
    return ConstraintTensor(ent)


def tensor_from_rotated(t_rot: np.ndarray, i: int, j: int) -> ConstraintTensor:
    idx = [i, j]
    # <a k l b> = T[a, b, k, l]
    sub = t_rot[np.ix_(idx, idx, idx, idx)]
    return ConstraintTensor(sub.transpose(0, 2, 3, 1))


def equo_residuals(t: ConstraintTensor, p: float) -> tuple[float, float, float]:
    """Residuals of the three pair constraints that every GQM(p) map obeys."""
    line1 = abs(2.0 * p - (t[K, KP, KP, K] + t[KP, K, K, KP] + 2.0 * t[K, K, KP, KP].real))
    line2 = abs(t[K, KP, K, KP])
    line3 = abs(t[K, K, K, KP] + t[K, KP, K, K])
    return line1, line2, line3


class ConstraintReport(NamedTuple):
    pairs: int
    equo_line1: float
    equo_line2: float
    equo_line3: float
    trace_identity: float
    sum_rule: float
    sum_rule_value: float
    fidelity: float
    kraus_available: bool
    max_abs_kkkpkp: float
    cauchy_schwarz_excess: float | None
    passed: bool


def check_gqm_constraints(e: SuperOperator, p: float, pairs: int = 50, seed=0,
                          tol: float = 1e-10) -> ConstraintReport:
    """Residuals of the GQM(p) constraint system over Haar-rotated orthonormal pairs.

    For each random unitary U the pair is its first two columns (checked in
    both orders), and U supplies the full basis for the normalization
    identity ``(1/d) sum_{k,k'} <k' k k k'> = 1`` and the sum rule
    ``sum_{k != k'} <k k k' k'> = d(dp - 1)``. When the map has (or admits)
    a Kraus form, ``|<k k k' k'>| <= p`` is checked as well.
    """
    d = e.d
    kraus_ok = e.kraus is not None
    if not kraus_ok:
        cp = is_completely_positive(e, tol=1e-9)
        kraus_ok = cp.ok
    rng = np.random.default_rng(seed)
    worst = dict(l1=0.0, l2=0.0, l3=0.0, tr=0.0, sr=0.0, fid=0.0, kk=0.0)
    sum_value = 0.0
    off = ~np.eye(d, dtype=bool)
    for _ in range(pairs):
        u = random_unitary(d, rng)
        t_rot = rotated_unit_outputs(e, u)
        for i, j in ((0, 1), (1, 0)):
            t = tensor_from_rotated(t_rot, i, j)
            l1, l2, l3 = equo_residuals(t, p)
            worst["l1"] = max(worst["l1"], l1)
            worst["l2"] = max(worst["l2"], l2)
            worst["l3"] = max(worst["l3"], l3)
            worst["kk"] = max(worst["kk"], float(abs(t[K, K, KP, KP])))
        # <k' k k k'> = T[k', k', k, k]
        diag_out = np.einsum("aakk->ka", t_rot)
        worst["tr"] = max(worst["tr"], float(abs(diag_out.sum() / d - 1.0)))
        worst["fid"] = max(worst["fid"], float(np.max(np.abs(np.diag(diag_out) - p))))
        # <k k k' k'> = T[k, k', k, k']
        kk = np.einsum("abab->ab", t_rot)
        sum_value = complex(kk[off].sum())
        worst["sr"] = max(worst["sr"], float(abs(sum_value - d * (d * p - 1.0))))
    cs_excess = max(0.0, worst["kk"] - p) if kraus_ok else None
    passed = all(worst[k] <= tol for k in ("l1", "l2", "l3", "tr", "sr"))
    if kraus_ok:
        passed = passed and cs_excess <= tol
    return ConstraintReport(pairs, worst["l1"], worst["l2"], worst["l3"], worst["tr"],
                            worst["sr"], float(np.real(sum_value)), worst["fid"], kraus_ok,
                            worst["kk"], cs_excess, passed)


def kraus_cauchy_schwarz_bound(e: SuperOperator, k, k_prime) -> tuple[float, float]:
    """``(|<k k k' k'>|, sqrt(sum|<k|K_i|k>|^2 * sum|<k'|K_i|k'>|^2))`` from a Kraus form."""
    ks = e.kraus if e.kraus is not None else kraus_from_choi(e)
    vecs = _pair_vectors(e.d, k, k_prime)
    a = np.array([vecs[:, 0].conj() @ kr @ vecs[:, 0] for kr in ks])
    b = np.array([vecs[:, 1].conj() @ kr @ vecs[:, 1] for kr in ks])
    # <k|E(|k><k'|)|k'> = sum_i <k|K_i|k> <k'|K_i|k'>^*
    value = abs(np.sum(a * b.conj()))
    bound = float(np.sqrt(np.sum(np.abs(a) ** 2) * np.sum(np.abs(b) ** 2)))
    return float(value), bound


class GQMVerdict(NamedTuple):
    ok: bool
    max_deviation: float


def is_gqm(e: SuperOperator, p: float, samples: int = 100, seed=0, tol: float = 1e-10) -> GQMVerdict:
    """Does ``<psi|E(|psi><psi|)|psi> = p`` hold on ``samples`` Haar-random pure states?"""
    rng = np.random.default_rng(seed)
    dev = 0.0
    for _ in range(samples):
        psi = random_pure_state(e.d, rng)
        dev = max(dev, abs(raw_fidelity(psi, apply(e, projector(psi))) - p))
    return GQMVerdict(dev <= tol, dev)


def qubit_unot_bound_check(e: SuperOperator, samples: int = 200, seed=0,
                           grid: tuple[int, int] = (16, 32)) -> float:
    """Largest ``<psi_perp|E(|psi><psi|)|psi_perp>`` over sampled qubit states.

    For CP maps this is an approximate U-NOT fidelity and cannot exceed 2/3.
    """
    if e.d != 2:
        raise ValueError(f"U-NOT bound check is defined for d = 2, got d = {e.d}")
    rng = np.random.default_rng(seed)
    states = list(bloch_grid(*grid)) + [random_pure_state(2, rng) for _ in range(samples)]
    best = -np.inf
    for psi in states:
        perp = orthogonal_complement_qubit(psi)
        best = max(best, raw_fidelity(perp, apply(e, projector(psi))))
    return float(best)


# -- pure-output no-go: scalar model -----------------------------------------


@dataclass(frozen=True)
class NoGoScalarModel:
    """Overlaps left free by a hypothetical pure-output mover on a pair ``k, k'``.

    ``eta1 = <k'|k_p>``, ``eta2 = <k|k'_p>``, ``h`` is the overlap of the two
    ancilla states, ``phi``/``phi_prime`` the phases of ``<k_p|k>``, ``<k'_p|k'>``.
    """

    p: float
    phi: float = 0.0
    phi_prime: float = 0.0
    eta1: complex = 0.0
    eta2: complex = 0.0
    h: complex = 1.0

    def __post_init__(self):
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p!r}")
        if abs(self.h) > 1.0 + 1e-12:
            raise ValueError(f"|h| must not exceed 1, got {abs(self.h)!r}")

    @classmethod
    def solution(cls, p: float, phi: float = 0.0, phi_prime: float = 0.0) -> "NoGoScalarModel":
        """``eta1 = eta2 = 0`` with the ancilla overlap phase-matched to ``exp(i(phi' - phi))``."""
        return cls(p, phi, phi_prime, 0.0, 0.0, np.exp(1j * (phi_prime - phi)))

    def reconstructed_norm(self, d: int) -> float:
        """``|| |k_p> ||^2 = p + sum_{k'} |<k'|k_p>|^2`` when every eta is this model's ``eta1``."""
        return self.p + (d - 1) * abs(self.eta1) ** 2


def _check_normalized(alpha, beta):
    n = np.abs(alpha) ** 2 + np.abs(beta) ** 2
    if np.max(np.abs(n - 1.0)) > 1e-12:
        raise ValueError("amplitudes must satisfy |alpha|^2 + |beta|^2 = 1")


def appendix_a_F(model: NoGoScalarModel, alpha, beta):
    """Squared projection of the would-be output of ``alpha|k> + beta|k'>`` on the input.

    ``|c1|^2 + |c2|^2 + 2 Re(c1^* c2 h^*)`` with
    ``c1 = |alpha|^2 sqrt(p) e^{i phi} + alpha beta^* eta1`` and
    ``c2 = |beta|^2 sqrt(p) e^{i phi'} + alpha^* beta eta2``. Vectorized over
    array-valued amplitudes.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    _check_normalized(alpha, beta)
    sp = np.sqrt(model.p)
    c1 = np.abs(alpha) ** 2 * sp * np.exp(1j * model.phi) + alpha * beta.conj() * model.eta1
    c2 = np.abs(beta) ** 2 * sp * np.exp(1j * model.phi_prime) + alpha.conj() * beta * model.eta2
    return np.abs(c1) ** 2 + np.abs(c2) ** 2 + 2.0 * np.real(c1.conj() * c2 * np.conj(model.h))


def appendix_a_combinations(model: NoGoScalarModel, alpha, beta) -> np.ndarray:
    """Phase combinations of F that vanish identically iff ``eta1 = eta2 = 0``.

    For ``p > 0``: ``F(a,b) - F(a,-b)`` and ``F(a,b) + F(a,-b) - F(a,ib) - F(a,-ib)``.
    For ``p = 0``: ``F(a,b) + F(a,-b) + F(a,ib) + F(a,-ib) = 4|ab|^2 (|eta1|^2 + |eta2|^2)``.
    Returned stacked along a new leading axis.
    """
    f = lambda b: appendix_a_F(model, alpha, b)
    beta = np.asarray(beta, dtype=complex)
    fp, fm, fi, fmi = f(beta), f(-beta), f(1j * beta), f(-1j * beta)
    if model.p == 0.0:
        return np.stack([fp + fm + fi + fmi])
    return np.stack([fp - fm, fp + fm - fi - fmi])


def amplitude_grid(n_mod: int = 32, n_rel: int = 32, n_glob: int = 8) -> tuple[np.ndarray, np.ndarray]:
    """Normalized ``(alpha, beta)`` over |alpha| x relative phase x global phase."""
    mods = np.linspace(0.0, 1.0, n_mod)
    rel = np.linspace(0.0, 2.0 * np.pi, n_rel, endpoint=False)
    glob = np.linspace(0.0, 2.0 * np.pi, n_glob, endpoint=False)
    m, r, g = np.meshgrid(mods, rel, glob, indexing="ij")
    alpha = m * np.exp(1j * g)
    beta = np.sqrt(np.clip(1.0 - m ** 2, 0.0, None)) * np.exp(1j * (g + r))
    return alpha.ravel(), beta.ravel()


def constancy_residual(model: NoGoScalarModel, grid=None) -> float:
    alpha, beta = amplitude_grid() if grid is None else grid
    return float(np.max(np.abs(appendix_a_combinations(model, alpha, beta))))


def random_nogo_model(p: float, rng) -> NoGoScalarModel:
    """Random model with ``(eta1, eta2) != 0``; ``|(eta1, eta2)|`` is drawn from ``[0.1, 1] * sqrt(1-p)``."""
    z = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    # one of the etas is zero a quarter of the time
    mask = rng.integers(0, 4)
    if mask == 1:
        z[1] = 0.0
    elif mask == 2:
        z[0] = 0.0
    radius = rng.uniform(0.1, 1.0) * np.sqrt(max(1.0 - p, 1e-12))
    z = radius * z / np.linalg.norm(z)
    h = np.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
    phi, phi_prime = 2.0 * np.pi * rng.uniform(size=2)
    return NoGoScalarModel(p, phi, phi_prime, complex(z[0]), complex(z[1]), complex(h))


class NoGoReport(NamedTuple):
    p: float
    trials: int
    falsified_count: int
    min_falsifying_residual: float
    max_constancy_residual_at_solution: float
    max_fidelity_deviation_at_solution: float
    reconstructed_norm: float
    threshold: float


def appendix_a_solve(p: float, trials: int = 1000, seed=0, threshold: float = 1e-4,
                     grid=None) -> NoGoReport:
    """Falsify constant-fidelity pure outputs for random non-zero overlaps.

    Each trial draws a model with ``(eta1, eta2) != 0`` and counts it as
    falsified when some phase combination exceeds ``threshold`` on the grid.
    The ``eta = 0`` solution (with the same random phases) is checked to
    stay constant. With every cross overlap forced to zero, the output
    vector's squared norm is ``p < 1``: ``reconstructed_norm`` reports it.
    """
    if not 0.0 <= p < 1.0:
        raise ValueError(f"p must lie in [0, 1), got {p!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    grid = amplitude_grid() if grid is None else grid
    rng = np.random.default_rng(seed)
    falsified, min_res = 0, np.inf
    sol_res, sol_fid = 0.0, 0.0
    for _ in range(trials):
        model = random_nogo_model(p, rng)
        res = constancy_residual(model, grid)
        min_res = min(min_res, res)
        if res > threshold:
            falsified += 1
        sol = NoGoScalarModel.solution(p, model.phi, model.phi_prime)
        sol_res = max(sol_res, constancy_residual(sol, grid))
        sol_fid = max(sol_fid, float(np.max(np.abs(appendix_a_F(sol, *grid) - p))))
    norm = NoGoScalarModel.solution(p).reconstructed_norm(2)
    return NoGoReport(p, trials, falsified, float(min_res), sol_res, sol_fid, norm, threshold)


# -- Appendix B: fidelity as a trigonometric polynomial in the relative phase --


def appendix_b_G(t: ConstraintTensor, p: float, alpha, beta):
    """``<psi|E(|psi><psi|)|psi>`` for ``psi = alpha|k> + beta|k'>`` written through the tensor.

    Grouped by powers of ``exp(i theta)``, ``theta = arg(alpha^* beta)``, with
    ``<kkkk> = <k'k'k'k'> = p`` imposed. The two real self-adjoint entries
    ``<k k' k' k>`` and ``<k' k k k'>`` are averaged in the ``|alpha beta|^2``
    group so that adding the complex conjugate counts each of them once.
    """
    alpha = np.asarray(alpha, dtype=complex)
    beta = np.asarray(beta, dtype=complex)
    _check_normalized(alpha, beta)
    a, b = np.abs(alpha), np.abs(beta)
    ph = np.exp(1j * np.angle(alpha.conj() * beta))
    half = (
        (a ** 4 + b ** 4) * p / 2.0
        + a ** 3 * b * (ph * t[K, K, K, KP] + ph.conj() * t[K, K, KP, K])
        + a * b ** 3 * (ph.conj() * t[KP, KP, KP, K] + ph * t[KP, KP, K, KP])
        + (a * b) ** 2 * (0.5 * (t[K, KP, KP, K] + t[KP, K, K, KP]) + t[K, K, KP, KP]
                          + ph ** 2 * t[K, KP, K, KP])
    )
    return 2.0 * np.real(half)


def appendix_b_identities(t: ConstraintTensor, p: float, alpha, beta) -> np.ndarray:
    """Residuals of the three phase-averaging identities G must satisfy, shape ``(3, ...)``."""
    beta = np.asarray(beta, dtype=complex)
    g = lambda b: appendix_b_G(t, p, alpha, b)
    gp, gm, gi, gmi = g(beta), g(-beta), g(1j * beta), g(-1j * beta)
    return np.stack([gp + gm + gi + gmi - 4.0 * p, gp + gm - gi - gmi, gp - gm])


def random_amplitudes(n: int, seed=0) -> tuple[np.ndarray, np.ndarray]:
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((2, n)) + 1j * rng.standard_normal((2, n))
    z /= np.linalg.norm(z, axis=0)
    return z[0], z[1]
