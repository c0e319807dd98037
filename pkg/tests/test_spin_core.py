import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from twistuntwist import finite_range, spin_core, spinwave
from twistuntwist.spin_core import SpinState

ANGLES = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)


def op(n, kind):
    return spin_core.collective_operator(n, kind).matrix


def test_single_spin_jz():
    assert np.allclose(op(1, "Jz"), np.diag([0.5, -0.5]))


def test_ladder_on_spin_one():
    down = np.array([0, 0, 1], dtype=complex)  # m = -1
    assert np.allclose(op(2, "Jplus") @ down, [0, math.sqrt(2), 0])


def test_rejects_zero_particles():
    with pytest.raises(ValueError):
        spin_core.collective_operator(0, "Jz")
    with pytest.raises(ValueError):
        spin_core.collective_operator(3, "Jw")


@pytest.mark.parametrize("n", [1, 2, 3, 6, 7, 15, 24, 40])
def test_su2_commutators(n):
    jx, jy, jz = op(n, "Jx"), op(n, "Jy"), op(n, "Jz")
    assert np.max(np.abs(jx @ jy - jy @ jx - 1j * jz)) < 1e-10
    assert np.max(np.abs(jy @ jz - jz @ jy - 1j * jx)) < 1e-10
    assert np.max(np.abs(jz @ jx - jx @ jz - 1j * jy)) < 1e-10


@pytest.mark.parametrize("n", [1, 4, 9, 40])
def test_operator_structure(n):
    for kind in ("Jx", "Jy", "Jz", "Jz2"):
        mat = op(n, kind)
        assert np.allclose(mat, mat.conj().T)
    assert np.allclose(op(n, "Jplus"), op(n, "Jminus").conj().T)
    assert np.allclose(op(n, "Jz2"), op(n, "Jz") @ op(n, "Jz"))
    casimir = op(n, "Jx") @ op(n, "Jx") + op(n, "Jy") @ op(n, "Jy") + op(n, "Jz2")
    assert np.allclose(casimir, n / 2 * (n / 2 + 1) * np.eye(n + 1))


def test_plus_state_small():
    assert np.allclose(spin_core.plus_state(1).amplitudes, [1 / math.sqrt(2)] * 2)
    assert np.allclose(spin_core.plus_state(2).amplitudes, [0.5, 1 / math.sqrt(2), 0.5])


@pytest.mark.parametrize("n", [1, 5, 40, 400])
def test_plus_state_is_top_jx_eigenvector(n):
    psi = spin_core.plus_state(n)
    jx = spin_core.collective_operator(n, "Jx")
    assert np.allclose(jx.matrix @ psi.amplitudes, n / 2 * psi.amplitudes, atol=1e-10)
    mean, var = spin_core.moments(psi, jx)
    assert mean == pytest.approx(n / 2, abs=1e-10)
    assert abs(var) < 1e-9


@pytest.mark.parametrize("n", [3, 8, 31])
def test_plus_state_jy_moments(n):
    mean, var = spin_core.moments(spin_core.plus_state(n), spin_core.collective_operator(n, "Jy"))
    assert abs(mean) < 1e-12
    assert var == pytest.approx(n / 4, rel=1e-12)


def test_spin_state_validation():
    with pytest.raises(ValueError):
        SpinState(2, [1, 1, 0])
    with pytest.raises(ValueError):
        SpinState(2, [1, 0])


def test_evolve_phase_examples():
    psi = spin_core.plus_state(2)
    out = spin_core.evolve_phase(psi, math.pi, "Jz2")
    assert np.allclose(out.amplitudes, [np.exp(-1j * math.pi) / 2, 1 / math.sqrt(2), np.exp(-1j * math.pi) / 2])
    assert np.allclose(spin_core.evolve_phase(psi, 0.0).amplitudes, psi.amplitudes)


@given(strength=ANGLES, n=st.integers(1, 30))
@settings(max_examples=40, deadline=None)
def test_evolve_phase_round_trip(strength, n):
    psi = spin_core.rotate_y(spin_core.plus_state(n), 0.4)
    there = spin_core.evolve_phase(psi, strength, "Jz2")
    back = spin_core.evolve_phase(there, -strength, "Jz2")
    assert np.max(np.abs(back.amplitudes - psi.amplitudes)) < 1e-14
    assert abs(there.norm() - 1) < 1e-12


def test_rotation_onto_south_pole():
    for n in (1, 6, 25):
        out = spin_core.rotate_y(spin_core.plus_state(n), math.pi / 2)
        mean, _ = spin_core.moments(out, spin_core.collective_operator(n, "Jz"))
        assert mean == pytest.approx(-n / 2, abs=1e-9)


@pytest.mark.parametrize("n", [1, 4, 11])
def test_rotation_matches_matrix_exponential(n):
    psi = spin_core.plus_state(n)
    angle = 0.731
    expected = expm(-1j * angle * op(n, "Jy")) @ psi.amplitudes
    assert np.allclose(spin_core.rotate_y(psi, angle).amplitudes, expected, atol=1e-12)
    cache = spin_core.rotation_cache(n)
    assert np.allclose(cache.unitary(angle), expm(-1j * angle * op(n, "Jy")), atol=1e-12)


@pytest.mark.parametrize("n", [1, 10, 60])
def test_rotation_cache_reconstructs_jy(n):
    cache = spin_core.rotation_cache(n)
    assert np.max(np.abs(cache.reconstruct() - op(n, "Jy"))) < 1e-10


def test_rotation_cache_mismatch():
    with pytest.raises(ValueError):
        spin_core.rotate_y(spin_core.plus_state(4), 0.1, spin_core.rotation_cache(5))


@given(a=ANGLES, b=ANGLES, n=st.integers(1, 20))
@settings(max_examples=40, deadline=None)
def test_rotation_group_law(a, b, n):
    psi = spin_core.evolve_phase(spin_core.plus_state(n), 0.3)
    two = spin_core.rotate_y(spin_core.rotate_y(psi, a), b)
    one = spin_core.rotate_y(psi, a + b)
    assert np.max(np.abs(two.amplitudes - one.amplitudes)) < 1e-10
    assert abs(two.norm() - 1) < 1e-12
    assert np.allclose(spin_core.rotate_y(psi, 0.0).amplitudes, psi.amplitudes)


def test_moments_rejects_ladder_operators():
    with pytest.raises(ValueError):
        spin_core.moments(spin_core.plus_state(3), spin_core.collective_operator(3, "Jplus"))


def _lattice_sequence(n, steps):
    """Apply twist/rotation steps on 2^N amplitudes; twists use (sum Z / 2)^2 = Jz^2."""
    z_sum = finite_range.spin_signs(n).sum(axis=1) / 2
    state = finite_range.lattice_plus_state(n)
    for kind, value in steps:
        if kind == "twist":
            state = finite_range.LatticeState(n, np.exp(-1j * value * z_sum**2) * state.amplitudes)
        else:
            state = finite_range.rotate_y_product(state, value)
    return state.amplitudes


def _dicke_sequence(n, steps):
    state = spin_core.plus_state(n)
    for kind, value in steps:
        if kind == "twist":
            state = spin_core.evolve_phase(state, value, "Jz2")
        else:
            state = spin_core.rotate_y(state, value)
    return state.amplitudes


@pytest.mark.parametrize("n", [2, 5, 8, 12])
def test_agrees_with_computational_basis(n):
    rng = np.random.default_rng(n)
    steps = [(kind, float(rng.uniform(-1, 1))) for kind in ("twist", "rot", "twist", "rot", "twist")]
    lattice = _lattice_sequence(n, steps)
    embedded = spinwave.dicke_isometry(n) @ _dicke_sequence(n, steps)
    assert np.max(np.abs(lattice - embedded)) < 1e-9


def test_twisted_variance_matches_lattice():
    n, chi = 8, 0.2
    dicke = spin_core.evolve_phase(spin_core.plus_state(n), chi, "Jz2")
    _, var = spin_core.moments(dicke, spin_core.collective_operator(n, "Jy"))
    qfi = finite_range.brute_qfi(finite_range.coupling_uniform(n), chi)
    assert var == pytest.approx(qfi / 4, rel=1e-10)
