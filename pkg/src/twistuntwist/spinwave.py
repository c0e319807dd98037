"""Ring Hamiltonians projected onto the symmetric (spin-wave) subspace.

Dicke index ``n`` is the Hamming weight of the computational strings it
averages over, matching the ``k`` index of :mod:`twistuntwist.spin_core`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from . import finite_range, spin_core
from .errors import DomainError
from .protocols import ErrorReport, ProtocolSpec, moment_error_numeric

MAX_ENUMERATE_SITES = 20
MAX_DENSE_SITES = 12
KINDS = ("projected", "squared_projector")


@dataclass(frozen=True)
class ProjectedHamiltonian:
    n_sites: int
    k_range: int
    kind: str
    diagonal: np.ndarray = field(repr=False)

    def norm(self) -> float:
        return float(np.max(np.abs(self.diagonal)))


def _comb(n, k):
    return comb(n, k) if 0 <= k <= n else 0


def pair_statistic(n_sites, weight):
    """Average of ``(-1)^(x_i + x_j)`` for a fixed pair ``i != j`` over weight-n strings."""
    num = (
        _comb(n_sites - 2, weight)
        - 2 * _comb(n_sites - 2, weight - 1)
        + _comb(n_sites - 2, weight - 2)
    )
    return num / comb(n_sites, weight)


def _coupling_for(n, k, coupling):
    if coupling is None:
        return finite_range.coupling_knn(n, k)
    return coupling


def hamming_weights(n):
    idx = np.arange(2**n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).sum(axis=1)


def projected_hk(n, k, method="combinatorial", coupling=None) -> ProjectedHamiltonian:
    """Dicke-basis diagonal of the ring Hamiltonian projected to the symmetric subspace.

    ``enumerate`` averages the 2^N diagonal over each Hamming-weight class;
    ``combinatorial`` uses the pair statistic, which needs only the total coupling.
    """
    v = _coupling_for(n, k, coupling)
    if method == "enumerate":
        if n > MAX_ENUMERATE_SITES:
            raise MemoryError(f"enumeration limited to N <= {MAX_ENUMERATE_SITES}")
        diag = finite_range.hk_diagonal(v).diag
        weights = hamming_weights(n)
        sums = np.bincount(weights, weights=diag, minlength=n + 1)
        counts = np.bincount(weights, minlength=n + 1)
        values = sums / counts
    elif method == "combinatorial":
        total = v.values.sum()
        values = np.array([0.25 * total * pair_statistic(n, w) for w in range(n + 1)])
    else:
        raise ValueError(f"unknown method {method!r}")
    return ProjectedHamiltonian(n, k, "projected", values)


def h2_generator(n, k) -> ProjectedHamiltonian:
    """Model generator with projectors between the Z factors: ``(2K/N) Jz^2``."""
    if not 1 <= k < n / 2:
        raise DomainError(f"need 1 <= K < N/2, got N={n}, K={k}")
    m = spin_core.m_values(n)
    return ProjectedHamiltonian(n, k, "squared_projector", 2 * k / n * m**2)


def dicke_isometry(n) -> np.ndarray:
    """Columns are the Dicke states as 2^N vectors, shape ``(2**n, n + 1)``."""
    if n > MAX_DENSE_SITES:
        raise MemoryError(f"dense Dicke isometry limited to N <= {MAX_DENSE_SITES}")
    weights = hamming_weights(n)
    w = np.zeros((2**n, n + 1))
    w[np.arange(2**n), weights] = 1.0
    return w / np.sqrt(w.sum(axis=0))


def _projected_z(n, w):
    """``W^T Z_j W`` for every site, shape ``(n, n + 1, n + 1)``."""
    z = finite_range.spin_signs(n).astype(float)
    return np.einsum("xa,xj,xb->jab", w, z, w)


def explicit_projection(coupling: finite_range.CouplingMatrix, kind="projected") -> np.ndarray:
    """Dicke-basis matrix of ``P H P`` or of ``1/4 sum V P Z_j P Z_i P``, built densely."""
    n = coupling.n_sites
    w = dicke_isometry(n)
    if kind == "projected":
        diag = finite_range.hk_diagonal(coupling).diag
        return w.T @ (diag[:, None] * w)
    if kind == "squared_projector":
        pz = _projected_z(n, w)
        v = coupling.values
        return 0.25 * np.einsum("ji,jab,ibc->ac", v, pz, pz)
    raise ValueError(f"unknown kind {kind!r}")


def pbzp_check(n, tol=1e-12) -> bool:
    """Check ``P Z_j P = P (1/N) sum_i Z_i P`` on the full 2^N space for every site.

    ``sum_i Z_i`` commutes with the projector, so the right side is the collective
    operator restricted to the symmetric subspace.
    """
    w = dicke_isometry(n)
    pz = _projected_z(n, w)
    avg = pz.mean(axis=0)
    for j in range(n):
        diff = w @ (pz[j] - avg) @ w.T
        if np.max(np.abs(diff)) > tol:
            return False
    return True


def spinwave_generator(n, k, kind, drop_constant=False):
    if kind == "projected":
        diag = projected_hk(n, k).diagonal
    elif kind == "squared_projector":
        diag = h2_generator(n, k).diagonal
    else:
        raise ValueError(f"kind must be one of {KINDS}")
    if drop_constant:
        diag = diag - diag[n // 2]
    return diag


def spinwave_error(n, k, chi_t, kind="projected", drop_constant=False) -> ErrorReport:
    """Twist-untwist moment error with a projected ring Hamiltonian as the twist.

    ``drop_constant`` shifts the generator by a constant (a global phase), which
    leaves every reported quantity unchanged.
    """
    diag = spinwave_generator(n, k, kind, drop_constant)
    spec = ProtocolSpec.twist_untwist(n, chi_t, generator=diag)
    return moment_error_numeric(spec)


def inverse_normalized_error(report: ErrorReport, n) -> float:
    """``1 / (N^2 (Delta phi)^2)``: 1 at the Heisenberg scale, ``1/N`` at the standard limit."""
    return 1.0 / (n**2 * report.error)
