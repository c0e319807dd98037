"""Collective spin-N/2 states and operators in the Dicke basis.

Basis index ``k = 0..N`` labels the J_z eigenvalue ``m = N/2 - k``, so index
``k`` is also the number of down spins (Hamming weight of the matching
computational-basis strings). Rotations use ``exp(-i angle J_y)``; with this
convention ``exp(-i pi/2 J_y)`` takes the +x coherent state to the -z pole.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

KINDS = ("Jx", "Jy", "Jz", "Jplus", "Jminus", "Jz2")
HERMITIAN_KINDS = ("Jx", "Jy", "Jz", "Jz2")

_NORM_TOL = 1e-10


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"particle number must be a positive integer, got {n!r}")
    return int(n)


def m_values(n: int) -> np.ndarray:
    """J_z eigenvalues ``N/2, N/2 - 1, ..., -N/2`` in basis order."""
    n = _check_n(n)
    return n / 2 - np.arange(n + 1)


def ladder_coefficients(n: int) -> np.ndarray:
    """Entries ``<k-1|J+|k> = sqrt(k (N - k + 1))`` for ``k = 1..N``."""
    n = _check_n(n)
    k = np.arange(1, n + 1)
    return np.sqrt(k * (n - k + 1.0))


@dataclass(frozen=True)
class SpinState:
    """Pure state of N spin-1/2 particles in the symmetric subspace."""

    n_particles: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex)
        if amps.shape != (self.n_particles + 1,):
            raise ValueError(
                f"expected {self.n_particles + 1} amplitudes, got shape {amps.shape}"
            )
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > _NORM_TOL:
            raise ValueError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def overlap(self, other: "SpinState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class CollectiveOperator:
    n_particles: int
    kind: str
    matrix: np.ndarray = field(repr=False)

    @property
    def hermitian(self) -> bool:
        return self.kind in HERMITIAN_KINDS


def collective_operator(n: int, kind: str) -> CollectiveOperator:
    """Dense matrix of a collective spin operator on the Dicke basis."""
    n = _check_n(n)
    if kind not in KINDS:
        raise ValueError(f"unknown operator kind {kind!r}; expected one of {KINDS}")
    return CollectiveOperator(n, kind, _operator_matrix(n, kind))


@lru_cache(maxsize=64)
def _operator_matrix(n, kind):
    if kind in ("Jz", "Jz2"):
        m = m_values(n)
        mat = np.diag(m if kind == "Jz" else m**2).astype(complex)
    else:
        jplus = np.diag(ladder_coefficients(n), 1).astype(complex)
        mat = {
            "Jplus": jplus,
            "Jminus": jplus.T.copy(),
            "Jx": (jplus + jplus.T) / 2,
            "Jy": (jplus - jplus.T) / 2j,
        }[kind]
    mat.setflags(write=False)
    return mat


def apply_jy(vec, n: int, coeffs=None):
    """Apply J_y to a Dicke-basis vector without forming the matrix.

    ``coeffs`` overrides the ladder coefficients, which lets callers pass
    arbitrary-precision values together with an object-dtype vector.
    """
    c = ladder_coefficients(n) if coeffs is None else coeffs
    out = vec * 0
    # (J+ v)[k-1] = c_k v[k],  (J- v)[k] = c_k v[k-1]
    out[:-1] = out[:-1] + c * vec[1:]
    out[1:] = out[1:] - c * vec[:-1]
    return out * (-0.5j)


def plus_state(n: int) -> SpinState:
    """Coherent state along +x, ``|+>^N``, with binomial amplitudes."""
    n = _check_n(n)
    k = np.arange(n + 1)
    log_binom = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
    amps = np.exp(0.5 * log_binom - 0.5 * n * np.log(2.0))
    return SpinState(n, amps / np.linalg.norm(amps))


def generator_diagonal(n: int, generator) -> np.ndarray:
    """Diagonal of a Dicke-diagonal generator: ``"Jz"``, ``"Jz2"`` or explicit values."""
    if isinstance(generator, str):
        m = m_values(n)
        if generator == "Jz":
            return m
        if generator == "Jz2":
            return m**2
        raise ValueError(f"generator must be 'Jz', 'Jz2' or an array, got {generator!r}")
    diag = np.asarray(generator, dtype=float)
    if diag.shape != (n + 1,):
        raise ValueError(f"generator diagonal must have length {n + 1}")
    return diag


def evolve_phase(state: SpinState, strength: float, generator="Jz2") -> SpinState:
    """Apply ``exp(-i strength G)`` for a generator G diagonal in the Dicke basis."""
    g = generator_diagonal(state.n_particles, generator)
    return SpinState(state.n_particles, np.exp(-1j * strength * g) * state.amplitudes)


@dataclass(frozen=True)
class RotationCache:
    """Eigensystem of J_y for one particle number, reused by every rotation."""

    n_particles: int
    eigenvalues: np.ndarray = field(repr=False)
    eigenvectors: np.ndarray = field(repr=False)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T

    def unitary(self, angle: float) -> np.ndarray:
        v = self.eigenvectors
        return (v * np.exp(-1j * angle * self.eigenvalues)) @ v.conj().T


@lru_cache(maxsize=32)
def rotation_cache(n: int) -> RotationCache:
    n = _check_n(n)
    w, v = np.linalg.eigh(_operator_matrix(n, "Jy"))
    w.setflags(write=False)
    v.setflags(write=False)
    return RotationCache(n, w, v)


def rotate_y(state: SpinState, angle: float, cache: RotationCache | None = None) -> SpinState:
    """Apply ``exp(-i angle J_y)`` through the cached eigendecomposition."""
    if cache is None:
        cache = rotation_cache(state.n_particles)
    elif cache.n_particles != state.n_particles:
        raise ValueError(
            f"rotation cache built for N={cache.n_particles}, state has N={state.n_particles}"
        )
    v = cache.eigenvectors
    coeffs = v.conj().T @ state.amplitudes
    out = v @ (np.exp(-1j * angle * cache.eigenvalues) * coeffs)
    return SpinState(state.n_particles, out)


def moments(state: SpinState, op: CollectiveOperator) -> tuple[float, float]:
    """Mean and variance of a Hermitian collective operator."""
    if not op.hermitian:
        raise ValueError(f"moments need a Hermitian operator, got {op.kind}")
    if op.n_particles != state.n_particles:
        raise ValueError("operator and state have different particle numbers")
    psi = state.amplitudes
    o_psi = op.matrix @ psi
    mean = float(np.vdot(psi, o_psi).real)
    second = float(np.vdot(o_psi, o_psi).real)
    var = second - mean**2
    if -1e-12 < var < 0:
        var = 0.0
    return mean, var
