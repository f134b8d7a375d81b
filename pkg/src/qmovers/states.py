"""Pure states, density matrices, fidelities and the two-qubit Werner family."""
from __future__ import annotations

import numpy as np

from .linalg import as_square, hermiticity_residual, min_eigenvalue

SINGLET = np.array([0.0, 1.0, -1.0, 0.0], dtype=complex) / np.sqrt(2.0)


def as_pure_state(psi, tol: float = 1e-12) -> np.ndarray:
    """Validate a state vector: finite, 1-d, unit 2-norm within ``tol``."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if not np.all(np.isfinite(psi)):
        raise ValueError("state vector has non-finite entries")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > tol:
        raise ValueError(f"state vector is not normalized: ||psi|| = {norm!r}")
    return psi


def as_density_matrix(rho, tol: float = 1e-10, psd_tol: float = 1e-9) -> np.ndarray:
    """Validate a density matrix: Hermitian, unit trace, no eigenvalue below ``-psd_tol``."""
    rho = as_square(rho)
    herm = hermiticity_residual(rho)
    if herm > tol:
        raise ValueError(f"density matrix is not Hermitian (residual {herm:.3e})")
    tr = np.trace(rho)
    if abs(tr - 1.0) > tol:
        raise ValueError(f"density matrix trace is {tr.real:.12g}, expected 1")
    lo = min_eigenvalue(rho)
    if lo < -psd_tol:
        raise ValueError(f"density matrix has negative eigenvalue {lo:.3e}")
    return rho


def projector(psi) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return np.outer(psi, psi.conj())


def basis_state(d: int, k: int) -> np.ndarray:
    e = np.zeros(d, dtype=complex)
    e[k] = 1.0
    return e


def fidelity(psi, rho) -> float:
    """``<psi|rho|psi>`` for a pure reference state, clamped to ``[0, 1]``.

    Values outside ``[-1e-10, 1 + 1e-10]`` indicate that ``rho`` is not a
    state and raise.
    """
    psi = as_pure_state(psi)
    rho = as_square(rho)
    if rho.shape[0] != psi.size:
        raise ValueError(f"dimension mismatch: psi has {psi.size}, rho is {rho.shape}")
    f = float(np.real(psi.conj() @ rho @ psi))
    if not -1e-10 <= f <= 1.0 + 1e-10:
        raise ValueError(f"fidelity {f!r} outside [0, 1]; rho is not a state")
    return min(max(f, 0.0), 1.0)


def raw_fidelity(psi, m) -> float:
    """Unclamped ``Re <psi|m|psi>``, for operators that need not be states."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return float(np.real(psi.conj() @ np.asarray(m) @ psi))


def projection_overlap(psi, phi) -> float:
    """``|<psi|phi>|^2``."""
    psi, phi = as_pure_state(psi), as_pure_state(phi)
    if psi.size != phi.size:
        raise ValueError(f"dimension mismatch: {psi.size} vs {phi.size}")
    return min(float(abs(np.vdot(psi, phi)) ** 2), 1.0)


def purity(rho) -> float:
    """``Tr[rho^2]``."""
    rho = as_square(rho)
    return float(np.real(np.trace(rho @ rho)))


def werner_state(q: float) -> np.ndarray:
    """``(1-q)/4 * 1 + q |Psi-><Psi-|`` with ``|Psi-> = (|01> - |10>)/sqrt(2)``.

    Only ``0 <= q <= 1`` is accepted.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"Werner parameter q must lie in [0, 1], got {q!r}")
    return (1.0 - q) / 4.0 * np.eye(4, dtype=complex) + q * projector(SINGLET)


def werner_concurrence(q: float) -> float:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"Werner parameter q must lie in [0, 1], got {q!r}")
    return max(0.0, (3.0 * q - 1.0) / 2.0)


def random_pure_state(d: int, seed=None) -> np.ndarray:
    """Haar-random unit vector in ``C^d`` (normalized complex Gaussian).

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``; the latter
    is consumed in place.
    """
    if d < 2:
        raise ValueError(f"dimension must be >= 2, got {d}")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return z / np.linalg.norm(z)


def random_unitary(d: int, seed=None) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix."""
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2.0)
    qm, r = np.linalg.qr(z)
    ph = np.diag(r) / np.abs(np.diag(r))
    return qm * ph


def random_density_matrix(d: int, seed=None, rank: int | None = None) -> np.ndarray:
    rng = np.random.default_rng(seed)
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def orthogonal_complement_qubit(psi) -> np.ndarray:
    """The (phase-fixed) unit vector orthogonal to a qubit state."""
    psi = as_pure_state(psi)
    if psi.size != 2:
        raise ValueError("orthogonal complement is unique only for d = 2")
    return np.array([-psi[1].conjugate(), psi[0].conjugate()])


def bloch_vector(rho) -> np.ndarray:
    """Bloch vector ``r`` of a qubit operator ``(Tr rho) 1/2 + r.sigma/2``."""
    rho = as_square(rho)
    if rho.shape != (2, 2):
        raise ValueError("Bloch vector defined for 2x2 operators only")
    return np.array([
        2.0 * rho[0, 1].real,
        -2.0 * rho[0, 1].imag,
        (rho[0, 0] - rho[1, 1]).real,
    ])


def bloch_state(theta: float, phi: float) -> np.ndarray:
    return np.array([np.cos(theta / 2.0), np.exp(1j * phi) * np.sin(theta / 2.0)])


def bloch_grid(n_theta: int = 64, n_phi: int = 128) -> np.ndarray:
    """Deterministic qubit states on a (polar, azimuth) grid including both poles.

    Returns an array of shape ``(n_theta * n_phi, 2)``.
    """
    thetas = np.linspace(0.0, np.pi, n_theta)
    phis = np.linspace(0.0, 2.0 * np.pi, n_phi, endpoint=False)
    t, f = np.meshgrid(thetas, phis, indexing="ij")
    t, f = t.ravel(), f.ravel()
    return np.stack([np.cos(t / 2.0), np.exp(1j * f) * np.sin(t / 2.0)], axis=1)
