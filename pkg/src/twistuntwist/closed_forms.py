"""Analytic error and Fisher-information formulas for twist-untwist protocols.

All ``cos(x)**m`` factors with a positive base are evaluated as
``exp(m * log(cos x))`` so that particle numbers around 1e6 neither overflow
nor lose the exponent to rounding. The error formulas return the method-of-
moments error ``Var(J_y) / (d<J_y>/dphi)**2`` at ``phi = 0`` unless the name
says otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateProtocolError, DomainError

HALF_PI = math.pi / 2


def cos_pow(x, m):
    """``cos(x)**m`` for integer ``m >= 0``, in the log domain when ``cos x > 0``."""
    x = np.asarray(x, dtype=float)
    m = np.asarray(m)
    c = np.cos(x)
    positive = c > 0
    # log(cos x) = log1p(-2 sin^2(x/2)) keeps full relative accuracy near x = 0
    with np.errstate(divide="ignore", invalid="ignore"):
        log_c = np.log1p(-2.0 * np.sin(x / 2) ** 2)
        out = np.where(positive, np.exp(m * np.where(positive, log_c, 0.0)), c**m)
    return out[()] if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# all-to-all one-axis twisting


@dataclass(frozen=True)
class TwoParamInput:
    """Validated ``(N, a1, a2)`` for ``exp(i a2 Jz^2) exp(-i phi Jy) exp(i a1 Jz^2)|+>``."""

    n_particles: int
    a1: float
    a2: float

    def __post_init__(self):
        if int(self.n_particles) != self.n_particles or self.n_particles < 3:
            raise DomainError(f"two-parameter protocol needs N >= 3, got {self.n_particles}")
        if not -HALF_PI < self.a1 < 0:
            raise DomainError(f"a1 must lie in (-pi/2, 0), got {self.a1}")
        if self.a2 == 0:
            raise DegenerateProtocolError("a2 = 0 gives zero signal slope")
        if not -HALF_PI < self.a2 < HALF_PI:
            raise DomainError(f"a2 must lie in (-pi/2, 0) or (0, pi/2), got {self.a2}")


def two_param_error(n, a1, a2, *, enforce_domain=True):
    """Moment error of the two-parameter one-axis-twisting protocol.

    Parameters
    ----------
    n : int
        Particle number, at least 3.
    a1, a2 : float
        Twisting strengths before and after the rotation.
    enforce_domain : bool
        Reject parameters outside ``a1 in (-pi/2, 0)``, ``a2 in (-pi/2, pi/2)``.
        Turning this off evaluates the formula anywhere (used for symmetry checks).

    Raises
    ------
    DegenerateProtocolError
        If the signal slope vanishes.
    """
    if enforce_domain:
        TwoParamInput(n, a1, a2)
    numerator = 2 * (n + 1) - 2 * (n - 1) * cos_pow(2 * (a1 + a2), n - 2)
    bracket = cos_pow(a2, n - 2) + cos_pow(2 * a1 + a2, n - 2)
    denominator = n * (n - 1) ** 2 * np.sin(a2) ** 2 * bracket**2
    if np.any(denominator == 0):
        raise DegenerateProtocolError(f"zero signal slope at a1={a1}, a2={a2}")
    return numerator / denominator


def qfi_twist_untwist(n, chi_t):
    """Fisher information of the twist-untwist state, ``4 Var(J_y)`` after one twist."""
    if n < 2:
        raise DomainError("need N >= 2")
    return 0.5 * (n**2 + n - n * (n - 1) * cos_pow(2 * np.asarray(chi_t), n - 2))


def f_ratio(n, chi_t):
    """Ratio of the inverse Fisher information to the moment error."""
    chi_t = np.asarray(chi_t, dtype=float)
    if np.any((chi_t <= 0) | (chi_t >= HALF_PI)):
        raise DomainError("chi_t must lie in (0, pi/2)")
    c2 = cos_pow(2 * chi_t, n - 2)
    num = 2 * n * (n - 1) ** 2 * np.sin(chi_t) ** 2 * cos_pow(chi_t, 2 * n - 4)
    den = n**2 * (1 - c2) + n * (1 + c2)
    return num / den


def critical_chi_t(n):
    return math.atan(1 / math.sqrt(n - 2))


def critical_params(n):
    """Optimal twist strength and the minimal error of the twist-untwist protocol."""
    if n < 3:
        raise DomainError("need N >= 3")
    chi = critical_chi_t(n)
    return chi, float(two_param_error(n, -chi, chi))


def counter_rotated_qfi(n, chi_t):
    """Fisher information at ``phi = 0`` when a counter-rotation closes the protocol."""
    return qfi_twist_untwist(n, chi_t) + n - 2 * n * cos_pow(chi_t, n - 1)


# ---------------------------------------------------------------------------
# layered protocols


@dataclass(frozen=True)
class LayerSchedule:
    """Twist strengths of an L-layer protocol, listed left to right in the operator string.

    ``a_vector = (a_{L,2}, a_{L,1}, a_{L-1,2}, a_{L-1,1}, ..., a_{1,2}, a_{1,1})``.
    """

    a_vector: tuple

    def __post_init__(self):
        vec = tuple(float(a) for a in self.a_vector)
        if len(vec) < 2 or len(vec) % 2:
            raise ValueError("a_vector must hold 2L >= 2 entries")
        object.__setattr__(self, "a_vector", vec)

    @classmethod
    def twist_untwist(cls, chi_t, layers):
        return cls((chi_t, -chi_t) * layers)

    @property
    def layer_count(self) -> int:
        return len(self.a_vector) // 2

    @property
    def partial_sums(self) -> np.ndarray:
        """``phi_0 = 0, phi_1, ..., phi_2L``."""
        return np.concatenate(([0.0], np.cumsum(self.a_vector)))


def layered_error(n, schedule: LayerSchedule):
    """``N^2`` times the moment error of the general layered protocol."""
    phi = schedule.partial_sums
    total = phi[-1]
    inner = phi[1:-1]
    a = 2 * (n + 1) - 2 * (n - 1) * cos_pow(2 * total, n - 2)
    s = np.sum(np.sin(inner) * (cos_pow(inner, n - 2) + cos_pow(2 * total - inner, n - 2)))
    b = n * (n - 1) ** 2 * s**2
    if b == 0:
        raise DegenerateProtocolError("layered protocol has zero signal slope")
    return n**2 * a / b


def layered_qfi(n, chi_t, layers):
    if layers < 1:
        raise DomainError("need at least one layer")
    big_l = layers
    return (
        big_l**2 * qfi_twist_untwist(n, chi_t)
        + 2 * big_l * (big_l - 1) * n * cos_pow(chi_t, n - 1)
        + (big_l - 1) ** 2 * n
    )


# ---------------------------------------------------------------------------
# finite-range interactions on a ring


@dataclass(frozen=True)
class FiniteRangeInput:
    n_sites: int
    k_range: int
    a1: float
    a2: float

    def __post_init__(self):
        if int(self.k_range) != self.k_range or self.k_range < 1:
            raise DomainError(f"range K must be a positive integer, got {self.k_range}")
        if 4 * self.k_range > self.n_sites - 2:
            raise DomainError(
                f"closed form needs 1 <= K <= (N-2)/4; got N={self.n_sites}, K={self.k_range}"
            )


def finite_range_moments(n, k, a1, a2):
    """Variance of J_y and signal slope for ``exp(i a2 H_K) exp(-i phi Jy) exp(i a1 H_K)|+>``."""
    FiniteRangeInput(n, k, a1, a2)
    s = a1 + a2
    j = np.arange(k)
    var_terms = (1 - cos_pow(2 * s, k + j - 1)) * cos_pow(s, 2 * k - 2 * j) + (
        1 - cos_pow(2 * s, j + 1)
    ) * cos_pow(s, 4 * k - 2 * j - 2)
    variance = n / 4 * (1 + var_terms.sum())
    # (cos a1 cos(a1 + a2))^(K - j) split so each base goes through cos_pow
    pair = cos_pow(a1, k - j) * cos_pow(s, k - j)
    slope_terms = (cos_pow(a2, k + j - 1) + cos_pow(2 * a1 + a2, k + j - 1)) * pair
    slope = n / 2 * math.sin(a2) * slope_terms.sum()
    return float(variance), float(slope)


def finite_range_error(n, k, a1, a2):
    variance, slope = finite_range_moments(n, k, a1, a2)
    if slope == 0:
        raise DegenerateProtocolError(f"zero signal slope at a1={a1}, a2={a2}")
    # dividing twice lets an underflowing slope give inf rather than 0 ** 2
    return variance / slope / slope


def finite_range_critical_chi_t(k):
    return math.atan(math.sqrt(1 / (2 * k - 1)))


def finite_range_critical(n, k):
    """Optimal twist strength for range-K couplings and the minimal error there."""
    if k < 1:
        raise DomainError("need K >= 1")
    chi = finite_range_critical_chi_t(k)
    return chi, 1 / (2 * n * k * (1 - 1 / (2 * k)) ** (2 * k - 1))


def _g1(k):
    r = 2 * k / (2 * k - 1)
    q = 2 * (k - 1) / (2 * k - 1)
    return (2 * k - 1) * (1 - 1 / (2 * k)) ** k * (r**k - 1) - (
        (2 * k**2 - 3 * k + 1) / (2 * k**2)
    ) ** k * (2 * k - 1) * k / (k - 1) * (1 - q**k)


def _g2(k):
    r = 2 * k / (2 * k - 1)
    q = 2 * (k - 1) / (2 * k - 1)
    return 2 * k * (1 - 1 / (2 * k)) ** (2 * k) * ((r**k - 1) - (k - 1) / k * (1 - q**k))


def _qfi_series(n, k, chi_t):
    j = np.arange(k)
    terms = (1 - cos_pow(2 * chi_t, j + 1)) * cos_pow(chi_t, 4 * k - 2 * j - 2) + (
        1 - cos_pow(2 * chi_t, k + j - 1)
    ) * cos_pow(chi_t, 2 * k - 2 * j)
    return n * (1 + terms.sum())


def finite_range_qfi(n, k, exact=True):
    """Fisher information of the range-K twist-untwist state at the critical twist.

    ``exact=True`` sums the geometric series in closed form (for K = 1, where that
    form has a removable singularity, the finite series is summed directly);
    otherwise the large-K asymptote ``2NK(1 - 1/e)^2`` is returned.
    """
    if k < 1:
        raise DomainError("need K >= 1")
    if not exact:
        return 2 * n * k * (1 - math.exp(-1)) ** 2
    if k == 1:
        return float(_qfi_series(n, k, finite_range_critical_chi_t(k)))
    return n * (1 + _g1(k) + _g2(k))


# ---------------------------------------------------------------------------
# continuous-variable Kerr analogue


def kerr_error(alpha, chi_t):
    """Kerr twist-untwist displacement error, reference closed form.

    The expression is evaluated literally. It disagrees with exact truncated-Fock
    simulation (see :func:`kerr_error_exact`); it is kept so the two can be compared.
    """
    alpha = np.asarray(alpha, dtype=float)
    chi_t = np.asarray(chi_t, dtype=float)
    den = (
        2
        * alpha**4
        * np.exp(-4 * alpha**2 * np.sin(chi_t) ** 2)
        * np.sin(alpha**2 * np.sin(2 * chi_t) + 1) ** 2
    )
    if np.any(den == 0):
        raise DegenerateProtocolError("zero slope in the Kerr formula")
    out = 1 / den
    return out[()] if out.ndim == 0 else out


def kerr_slope_exact(alpha, chi_t):
    """``d<p>/dphi`` at ``phi = 0`` for ``exp(i chi_t n^2) exp(-i phi p) exp(-i chi_t n^2)|alpha>``.

    Real ``alpha``, ``p = (a - a^dag)/(i sqrt 2)``. Derived from the coherent-state
    generating function ``<alpha|exp(-i b n)|alpha> = exp(alpha^2 (e^{-ib} - 1))``.
    """
    alpha = np.asarray(alpha, dtype=float)
    chi_t = np.asarray(chi_t, dtype=float)
    damping = np.exp(-2 * alpha**2 * np.sin(chi_t) ** 2)
    phase = alpha**2 * np.sin(2 * chi_t)
    return damping * (
        4 * alpha**2 * np.sin(chi_t) * np.cos(2 * chi_t + phase) + np.sin(chi_t + phase)
    )


def kerr_error_exact(alpha, chi_t):
    """Exact Kerr moment error: coherent-state ``Var(p) = 1/2`` over the squared slope."""
    slope = kerr_slope_exact(alpha, chi_t)
    if np.any(slope == 0):
        raise DegenerateProtocolError("zero slope (chi_t = 0 gives no p signal)")
    out = 0.5 / slope**2
    return out[()] if np.ndim(out) == 0 else out


def kerr_critical_chi_t(alpha):
    """Large-alpha minimiser of the reference Kerr formula (:func:`kerr_error`)."""
    return (math.pi - 2) / (4 * (alpha**2 + 1))
