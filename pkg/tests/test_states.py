import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qmovers.linalg import hermitian_eig
from qmovers.states import (
    SINGLET,
    as_density_matrix,
    basis_state,
    bloch_grid,
    bloch_vector,
    fidelity,
    orthogonal_complement_qubit,
    projection_overlap,
    projector,
    random_density_matrix,
    random_pure_state,
    werner_concurrence,
    werner_state,
)


def test_self_and_orthogonal_fidelity():
    psi = random_pure_state(3, 1)
    assert fidelity(psi, projector(psi)) == pytest.approx(1.0, abs=1e-12)
    perp = random_pure_state(3, 2)
    perp = perp - np.vdot(psi, perp) * psi
    perp /= np.linalg.norm(perp)
    assert fidelity(psi, projector(perp)) == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("d", [2, 3, 5])
def test_fidelity_maximally_mixed(d):
    assert fidelity(random_pure_state(d, d), np.eye(d) / d) == pytest.approx(1 / d, abs=1e-14)


def test_fidelity_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        fidelity(basis_state(2, 0), np.eye(3) / 3)


def test_fidelity_global_phase_invariant():
    psi, rho = random_pure_state(4, 3), random_density_matrix(4, 4)
    for phase in (-1, 1j, -1j):
        assert fidelity(phase * psi, rho) == fidelity(psi, rho)
    assert fidelity(np.exp(0.7j) * psi, rho) == pytest.approx(fidelity(psi, rho), abs=1e-15)


def test_fidelity_linear_in_state(rng):
    psi = random_pure_state(3, rng)
    rhos = [random_density_matrix(3, rng) for _ in range(4)]
    w = rng.dirichlet(np.ones(4))
    mix = sum(wi * r for wi, r in zip(w, rhos))
    assert fidelity(psi, mix) == pytest.approx(sum(wi * fidelity(psi, r) for wi, r in zip(w, rhos)), abs=1e-12)


def test_projection_overlap():
    psi = random_pure_state(3, 5)
    assert projection_overlap(psi, psi) == pytest.approx(1.0)
    plus = np.array([1, 1]) / np.sqrt(2)
    assert projection_overlap(basis_state(2, 0), plus) == pytest.approx(0.5)
    phi = random_pure_state(3, 6)
    assert projection_overlap(psi, phi) == pytest.approx(fidelity(psi, projector(phi)), abs=1e-15)


def test_werner_endpoints():
    np.testing.assert_allclose(werner_state(0), np.eye(4) / 4)
    np.testing.assert_allclose(werner_state(1), projector(SINGLET))


def test_werner_half_spectrum():
    # Bell basis: singlet gets (1-q)/4 + q, the triplet (1-q)/4
    vals = hermitian_eig(werner_state(0.5)).eigenvalues
    np.testing.assert_allclose(vals, [0.125, 0.125, 0.125, 0.625], atol=1e-14)


@pytest.mark.parametrize("q", np.linspace(0, 1, 11))
def test_werner_is_state(q):
    as_density_matrix(werner_state(q))
    assert hermitian_eig(werner_state(q)).eigenvalues[0] >= -1e-12


def test_werner_range():
    with pytest.raises(ValueError):
        werner_state(-0.1)
    with pytest.raises(ValueError):
        werner_state(1.1)


def test_werner_concurrence_values():
    assert werner_concurrence(1 / 3) == 0.0
    assert werner_concurrence(1.0) == 1.0
    assert werner_concurrence(0.0) == 0.0
    qs = np.linspace(1 / 3 + 1e-6, 1, 50)
    cs = [werner_concurrence(q) for q in qs]
    assert np.all(np.diff(cs) > 0)
    assert all(werner_concurrence(q) == 0 for q in np.linspace(0, 1 / 3, 20))


def test_random_pure_state_norm_and_determinism():
    a, b = random_pure_state(4, 99), random_pure_state(4, 99)
    np.testing.assert_array_equal(a, b)
    assert abs(np.linalg.norm(a) - 1) < 1e-12
    with pytest.raises(ValueError):
        random_pure_state(1, 0)


@pytest.mark.parametrize("d", [2, 4])
def test_haar_first_moment(d):
    # E|<0|psi>|^2 = 1/d with variance (d-1)/(d^2(d+1)); 3 sigma over 1e5 samples < 0.01
    rng = np.random.default_rng(0)
    z = rng.standard_normal((100_000, d)) + 1j * rng.standard_normal((100_000, d))
    # same construction as random_pure_state, batched
    pops = np.abs(z[:, 0]) ** 2 / np.sum(np.abs(z) ** 2, axis=1)
    assert abs(pops.mean() - 1 / d) < 0.01
    samples = [abs(random_pure_state(d, rng)[0]) ** 2 for _ in range(2000)]
    sigma = np.sqrt((d - 1) / (d * d * (d + 1)) / 2000)
    assert abs(np.mean(samples) - 1 / d) < 4 * sigma


def test_orthogonal_complement_and_bloch():
    psi = random_pure_state(2, 3)
    perp = orthogonal_complement_qubit(psi)
    assert abs(np.vdot(psi, perp)) < 1e-15
    r = bloch_vector(projector(psi))
    assert np.linalg.norm(r) == pytest.approx(1.0)
    np.testing.assert_allclose(bloch_vector(projector(perp)), -r, atol=1e-15)


def test_bloch_grid_covers_poles():
    g = bloch_grid(8, 16)
    assert g.shape == (128, 2)
    np.testing.assert_allclose(np.linalg.norm(g, axis=1), 1.0)
    zs = [bloch_vector(projector(s))[2] for s in g]
    assert max(zs) == pytest.approx(1.0) and min(zs) == pytest.approx(-1.0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.integers(0, 2**32 - 1))
def test_fidelity_in_unit_interval(d, seed):
    rng = np.random.default_rng(seed)
    f = fidelity(random_pure_state(d, rng), random_density_matrix(d, rng))
    assert 0.0 <= f <= 1.0
