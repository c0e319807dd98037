"""Exact 2^N simulation of twist-untwist protocols with ring couplings.

Site ``j`` is bit ``j`` of the basis index (site 0 least significant); bit 0
means spin up, ``Z = +1``. The two-local Hamiltonian is

    H = 1/4 * sum_j sum_{i != j} V[j, i] Z_j Z_i

with the sum over ordered pairs, so every unordered pair enters twice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .protocols import ErrorReport, make_report

MAX_DIAGONAL_SITES = 24
MAX_PROTOCOL_SITES = 20


@dataclass(frozen=True)
class CouplingMatrix:
    values: np.ndarray = field(repr=False)
    k_range: int | None = None

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[0] != v.shape[1]:
            raise ValueError("coupling matrix must be square")
        if not np.allclose(v, v.T, rtol=0, atol=1e-14):
            raise ValueError("coupling matrix must be symmetric")
        if np.any(np.diag(v) != 0):
            raise ValueError("coupling matrix must have a zero diagonal")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n_sites(self) -> int:
        return self.values.shape[0]

    def interaction_range(self) -> int:
        """Largest periodic distance carrying a nonzero coupling."""
        if self.k_range is not None:
            return self.k_range
        d = ring_distance(self.n_sites)
        nz = self.values != 0
        return int(d[nz].max()) if nz.any() else 0


def ring_distance(n):
    idx = np.arange(n)
    diff = np.abs(idx[:, None] - idx[None, :])
    return np.minimum(diff, n - diff)


def coupling_knn(n, k) -> CouplingMatrix:
    """Adjacency matrix of the K-nearest-neighbour graph on a ring of N sites."""
    if not 1 <= k < n / 2:
        raise DomainError(f"need 1 <= K < N/2, got N={n}, K={k}")
    d = ring_distance(n)
    return CouplingMatrix(((d > 0) & (d <= k)).astype(float), k_range=int(k))


def coupling_uniform(n) -> CouplingMatrix:
    """All-to-all unit couplings; ``H = Jz^2 - N/4`` for this choice."""
    return CouplingMatrix(np.ones((n, n)) - np.eye(n))


def random_coupling(n, k, rng, low=0.5, high=1.5) -> CouplingMatrix:
    """Symmetric positive couplings on the range-K ring support."""
    base = coupling_knn(n, k).values
    w = rng.uniform(low, high, size=(n, n))
    w = np.triu(w, 1)
    return CouplingMatrix(base * (w + w.T), k_range=int(k))


def spin_signs(n) -> np.ndarray:
    """``Z_j`` eigenvalues for every basis index, shape ``(2**n, n)``."""
    idx = np.arange(2**n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n)) & 1
    return (1 - 2 * bits).astype(np.int8)


@dataclass(frozen=True)
class DiagonalHamiltonian:
    n_sites: int
    diag: np.ndarray = field(repr=False)


def hk_diagonal(coupling: CouplingMatrix) -> DiagonalHamiltonian:
    """Diagonal of the two-local ZZ Hamiltonian over the computational basis."""
    n = coupling.n_sites
    if n > MAX_DIAGONAL_SITES:
        raise MemoryError(f"refusing to build a 2^{n} diagonal (limit N={MAX_DIAGONAL_SITES})")
    z = spin_signs(n).astype(float)
    diag = 0.25 * np.einsum("xj,xj->x", z, z @ coupling.values)
    diag.setflags(write=False)
    return DiagonalHamiltonian(n, diag)


@dataclass(frozen=True)
class LatticeState:
    n_sites: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (2**self.n_sites,):
            raise ValueError("amplitude vector must have length 2^N")
        if abs(np.vdot(amps, amps).real - 1) > 1e-10:
            raise ValueError("lattice state is not normalized")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)


def lattice_plus_state(n) -> LatticeState:
    if n > MAX_DIAGONAL_SITES:
        raise MemoryError(f"N={n} exceeds the statevector limit")
    return LatticeState(n, np.full(2**n, 2.0 ** (-n / 2), dtype=complex))


def evolve_hk(state: LatticeState, hamiltonian: DiagonalHamiltonian, strength) -> LatticeState:
    """Apply ``exp(-i strength H)``."""
    if hamiltonian.n_sites != state.n_sites:
        raise ValueError("Hamiltonian and state act on different ring sizes")
    return LatticeState(state.n_sites, np.exp(-1j * strength * hamiltonian.diag) * state.amplitudes)


def _apply_single_site(vec, n, site, gate):
    t = vec.reshape((2,) * n)
    axis = n - 1 - site
    t = np.moveaxis(np.tensordot(gate, t, axes=([1], [axis])), 0, axis)
    return t.reshape(-1)


def rotate_y_product(state: LatticeState, angle) -> LatticeState:
    """Apply ``exp(-i angle J_y)`` as a product of single-site rotations."""
    c, s = math.cos(angle / 2), math.sin(angle / 2)
    gate = np.array([[c, -s], [s, c]], dtype=complex)
    vec = state.amplitudes
    for site in range(state.n_sites):
        vec = _apply_single_site(vec, state.n_sites, site, gate)
    return LatticeState(state.n_sites, vec)


_SIGMA_Y_HALF = np.array([[0, -0.5j], [0.5j, 0]])
_SIGMA_PLUS = np.array([[0, 1], [0, 0]], dtype=complex)


def apply_jy(vec, n):
    """``J_y = sum_r sigma^y_r / 2`` applied to a raw 2^N vector."""
    out = np.zeros_like(vec, dtype=complex)
    for site in range(n):
        out += _apply_single_site(vec, n, site, _SIGMA_Y_HALF)
    return out


def apply_sigma_plus(vec, n, site):
    """Raise site ``site`` (|1> -> |0>)."""
    return _apply_single_site(np.asarray(vec, dtype=complex), n, site, _SIGMA_PLUS)


def slope_closed_form(coupling: CouplingMatrix, chi_t):
    """Signal slope of the twist-untwist protocol for general ring couplings."""
    v = coupling.values
    n = coupling.n_sites
    k = coupling.interaction_range()
    shifts = [s for s in range(-k, k + 1) if s != 0]
    r = np.arange(n)
    # window[r, idx] = V[r, r - shift]
    window = np.stack([v[r, (r - s) % n] for s in shifts], axis=1)
    sin_w = np.sin(chi_t * window)
    cos_w = np.cos(chi_t * window)
    total = 0.0
    for col in range(len(shifts)):
        others = np.prod(np.delete(cos_w, col, axis=1), axis=1)
        total += np.sum(sin_w[:, col] * others)
    return 0.5 * total


def _twisted_states(coupling, a1, a2):
    n = coupling.n_sites
    if n > MAX_PROTOCOL_SITES:
        raise MemoryError(f"N={n} exceeds the protocol statevector limit {MAX_PROTOCOL_SITES}")
    h = hk_diagonal(coupling).diag
    plus = lattice_plus_state(n).amplitudes
    once = np.exp(1j * a1 * h) * plus
    state = np.exp(1j * a2 * h) * once
    deriv = np.exp(1j * a2 * h) * (-1j * apply_jy(once, n))
    return once, state, deriv


def error_brute(coupling: CouplingMatrix, a1, a2) -> ErrorReport:
    """Moment error of ``exp(i a2 H) exp(-i phi Jy) exp(i a1 H)|+>`` by statevector simulation.

    The Fisher information is ``4 Var(J_y)`` on the once-twisted state, since the
    second twist does not depend on phi.
    """
    n = coupling.n_sites
    once, state, deriv = _twisted_states(coupling, a1, a2)
    jy_state = apply_jy(state, n)
    mean = np.vdot(state, jy_state).real
    variance = np.vdot(jy_state, jy_state).real - mean**2
    slope = 2 * np.vdot(deriv, jy_state).real
    jy_once = apply_jy(once, n)
    qfi = 4 * (np.vdot(jy_once, jy_once).real - np.vdot(once, jy_once).real ** 2)
    return make_report(variance, slope, qfi)


def brute_slope(coupling: CouplingMatrix, chi_t) -> float:
    """Statevector slope of the twist-untwist protocol (``a1 = -chi_t, a2 = chi_t``)."""
    _, state, deriv = _twisted_states(coupling, -chi_t, chi_t)
    return float(2 * np.vdot(deriv, apply_jy(state, coupling.n_sites)).real)


def brute_qfi(coupling: CouplingMatrix, chi_t) -> float:
    """``4 Var(J_y)`` of ``exp(-i chi_t H)|+>``."""
    n = coupling.n_sites
    h = hk_diagonal(coupling).diag
    psi = np.exp(-1j * chi_t * h) * lattice_plus_state(n).amplitudes
    jy_psi = apply_jy(psi, n)
    return float(4 * (np.vdot(jy_psi, jy_psi).real - np.vdot(psi, jy_psi).real ** 2))
