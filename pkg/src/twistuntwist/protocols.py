"""Numerical preparation of protocol states and their exact moment errors.

Every protocol is stored as an operator string read left to right, made of
two kinds of factors:

* ``("rot", s)``   -> ``exp(-i s phi J_y)`` with ``s = +1`` or ``-1``
* ``("twist", a)`` -> ``exp(i a C)`` for a Dicke-diagonal generator ``C``

At ``phi = 0`` every rotation is the identity, so the state and its
phi-derivative only involve diagonal phases and J_y insertions. That is what
:func:`state_derivative` evaluates, optionally in mpmath arithmetic when the
signal slope is many orders of magnitude below the individual amplitudes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import mpmath
import numpy as np
from scipy.special import gammaln

from . import closed_forms, spin_core
from .errors import DegenerateProtocolError, DomainError, TruncationError
from .spin_core import SpinState

FAMILIES = ("two_param", "layered", "counter_rotated", "kerr")


@dataclass(frozen=True)
class ProtocolSpec:
    """A protocol family with its parameters.

    ``generator`` is ``"Jz2"`` (one-axis twisting) or a tuple holding the
    Dicke-basis diagonal of another generator, e.g. a projected lattice
    Hamiltonian. The domain restriction on ``(a1, a2)`` is only enforced for
    the one-axis-twisting generator.
    """

    family: str
    n_particles: int = 1
    a1: float = 0.0
    a2: float = 0.0
    schedule: tuple = ()
    chi_t: float = 0.0
    layers: int = 1
    alpha: float = 0.0
    cutoff: int = 80
    generator: object = "Jz2"
    enforce_domain: bool = True

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if not isinstance(self.generator, str):
            object.__setattr__(self, "generator", tuple(float(g) for g in self.generator))
        if self.family == "two_param" and self.generator == "Jz2" and self.enforce_domain:
            if not (self.a1 == 0 and self.a2 == 0):
                closed_forms.TwoParamInput(self.n_particles, self.a1, self.a2)
        if self.family == "layered" and len(self.schedule) % 2:
            raise ValueError("layered schedule needs an even number of strengths")
        if self.family == "counter_rotated" and self.layers < 1:
            raise DomainError("need at least one layer")

    @classmethod
    def two_param(cls, n, a1, a2, **kw):
        return cls("two_param", n, a1=a1, a2=a2, **kw)

    @classmethod
    def twist_untwist(cls, n, chi_t, **kw):
        return cls("two_param", n, a1=-chi_t, a2=chi_t, **kw)

    @classmethod
    def layered(cls, n, chi_t=None, layers=1, schedule=None, **kw):
        """Layered protocol from a uniform twist strength or an explicit schedule."""
        if schedule is None:
            schedule = closed_forms.LayerSchedule.twist_untwist(chi_t, layers).a_vector
        elif isinstance(schedule, closed_forms.LayerSchedule):
            schedule = schedule.a_vector
        return cls("layered", n, schedule=tuple(schedule), **kw)

    @classmethod
    def counter_rotated(cls, n, chi_t, layers=1, **kw):
        return cls("counter_rotated", n, chi_t=chi_t, layers=layers, **kw)

    @classmethod
    def kerr(cls, alpha, chi_t, cutoff=80):
        return cls("kerr", 1, alpha=alpha, chi_t=chi_t, cutoff=cutoff)

    def operator_string(self):
        if self.family == "two_param":
            return [("twist", self.a2), ("rot", 1), ("twist", self.a1)]
        if self.family == "layered":
            ops = [("rot", -1)]
            for a_out, a_in in zip(self.schedule[::2], self.schedule[1::2]):
                ops += [("rot", 1), ("twist", a_out), ("rot", 1), ("twist", a_in)]
            return ops
        if self.family == "counter_rotated":
            layer = [("rot", -1), ("twist", self.chi_t), ("rot", 1), ("twist", -self.chi_t)]
            return layer * self.layers
        raise ValueError("the Kerr protocol lives in a Fock space, not the Dicke basis")

    def generator_diagonal(self):
        return spin_core.generator_diagonal(self.n_particles, self.generator)


@dataclass(frozen=True)
class StateWithDerivative:
    state: SpinState
    derivative: np.ndarray = field(repr=False)


@dataclass(frozen=True)
class ErrorReport:
    variance: float
    slope: float
    error: float
    qfi: float
    f_ratio: float

    def as_dict(self):
        return {
            "variance": self.variance,
            "slope": self.slope,
            "error": self.error,
            "qfi": self.qfi,
            "f_ratio": self.f_ratio,
        }


def make_report(variance, slope, qfi):
    if slope == 0:
        raise DegenerateProtocolError("zero signal slope")
    error = variance / slope**2
    f = math.inf if qfi == 0 else 1.0 / (qfi * error)
    return ErrorReport(float(variance), float(slope), float(error), float(qfi), float(f))


@dataclass(frozen=True)
class FockState:
    cutoff: int
    amplitudes: np.ndarray = field(repr=False)


# ---------------------------------------------------------------------------
# state preparation


def prepare(spec: ProtocolSpec, phi: float):
    """Protocol state at parameter ``phi`` (a :class:`FockState` for the Kerr family)."""
    if spec.family == "kerr":
        return _kerr_state(spec.alpha, spec.chi_t, phi, spec.cutoff)
    n = spec.n_particles
    g = spec.generator_diagonal()
    cache = spin_core.rotation_cache(n)
    state = spin_core.plus_state(n)
    for kind, value in reversed(spec.operator_string()):
        if kind == "twist":
            state = spin_core.evolve_phase(state, -value, g)
        else:
            state = spin_core.rotate_y(state, value * phi, cache)
    return state


class _Float:
    """float64 arithmetic for the phi = 0 pipeline."""

    def __init__(self, n):
        self.n = n
        self.coeffs = spin_core.ladder_coefficients(n)

    def vector(self, amps):
        return np.asarray(amps, dtype=complex)

    def phases(self, strength, g):
        return np.exp(1j * strength * g)

    def jy(self, v):
        return spin_core.apply_jy(v, self.n, self.coeffs)

    def vdot(self, u, v):
        return complex(np.vdot(u, v))


class _MultiPrecision:
    """mpmath arithmetic at a fixed number of decimal digits."""

    def __init__(self, n, dps):
        self.n = n
        self.ctx = mpmath.mp.clone()
        self.ctx.dps = dps
        ctx = self.ctx
        self.coeffs = np.array(
            [ctx.sqrt(ctx.mpf(k) * (n - k + 1)) for k in range(1, n + 1)], dtype=object
        )
        self.half = ctx.mpf(1) / 2

    def vector(self, amps):
        ctx = self.ctx
        # binomial amplitudes are recomputed at full precision
        if amps is None:
            norm = ctx.power(2, -ctx.mpf(self.n) / 2)
            return np.array(
                [ctx.mpc(ctx.sqrt(ctx.binomial(self.n, k)) * norm) for k in range(self.n + 1)],
                dtype=object,
            )
        return np.array([ctx.mpc(a) for a in amps], dtype=object)

    def phases(self, strength, g):
        ctx = self.ctx
        s = ctx.mpf(strength)
        return np.array([ctx.expj(s * ctx.mpf(x)) for x in g], dtype=object)

    def jy(self, v):
        c = self.coeffs
        out = np.array([self.ctx.mpc(0)] * len(v), dtype=object)
        out[:-1] = out[:-1] + c * v[1:]
        out[1:] = out[1:] - c * v[:-1]
        return out * self.ctx.mpc(0, -self.half)

    def vdot(self, u, v):
        ctx = self.ctx
        return ctx.fsum(ctx.conj(a) * b for a, b in zip(u, v))


def _zero_phi_pipeline(spec, arith, initial=None):
    """State, derivative, J_y-state at phi = 0 in the given arithmetic."""
    g = spec.generator_diagonal()
    ops = spec.operator_string()
    psi = arith.vector(initial)
    # suffix states: state after applying ops[i:] (right to left) to |+>
    suffix = [None] * (len(ops) + 1)
    suffix[len(ops)] = psi
    for i in range(len(ops) - 1, -1, -1):
        kind, value = ops[i]
        suffix[i] = suffix[i + 1] * arith.phases(value, g) if kind == "twist" else suffix[i + 1]
    state = suffix[0]
    deriv = state * 0
    for i, (kind, value) in enumerate(ops):
        if kind != "rot":
            continue
        v = arith.jy(suffix[i + 1]) * (-1j * value)
        # apply the twist factors to the left of slot i
        for kind_l, value_l in reversed(ops[:i]):
            if kind_l == "twist":
                v = v * arith.phases(value_l, g)
        deriv = deriv + v
    return state, deriv


def state_derivative(spec: ProtocolSpec) -> StateWithDerivative:
    """State and its exact phi-derivative at ``phi = 0`` (product rule, no differencing)."""
    if spec.family == "kerr":
        raise ValueError("use kerr_error_numeric for the Kerr protocol")
    arith = _Float(spec.n_particles)
    initial = spin_core.plus_state(spec.n_particles).amplitudes
    state, deriv = _zero_phi_pipeline(spec, arith, initial)
    return StateWithDerivative(SpinState(spec.n_particles, state), deriv)


def _moments_from_pipeline(arith, state, deriv):
    jy_state = arith.jy(state)
    mean = arith.vdot(state, jy_state).real
    variance = arith.vdot(jy_state, jy_state).real - mean**2
    slope = 2 * arith.vdot(deriv, jy_state).real
    overlap = arith.vdot(state, deriv)
    qfi = 4 * (arith.vdot(deriv, deriv).real - abs(overlap) ** 2)
    scale = math.sqrt(float(abs(arith.vdot(deriv, deriv)))) * math.sqrt(
        float(abs(arith.vdot(jy_state, jy_state)))
    )
    return variance, slope, qfi, scale


def moment_error_numeric(spec: ProtocolSpec, dps=None) -> ErrorReport:
    """Moment error, Fisher information and f-ratio from the simulated state.

    Parameters
    ----------
    spec : ProtocolSpec
        Any Dicke-basis family, or ``kerr`` (delegates to :func:`kerr_error_numeric`).
    dps : None, int or "auto"
        ``None`` works in float64. An integer runs the pipeline in mpmath at that
        many digits. ``"auto"`` starts at 30 digits and doubles until two successive
        results agree to 1e-12, which resolves slopes far below float64 round-off.
    """
    if spec.family == "kerr":
        return kerr_report_numeric(spec.alpha, spec.chi_t, spec.cutoff)
    if dps == "auto":
        return _auto_precision(spec)
    if dps is None:
        arith = _Float(spec.n_particles)
        initial = spin_core.plus_state(spec.n_particles).amplitudes
        eps = 1e-13
    else:
        arith = _MultiPrecision(spec.n_particles, int(dps))
        initial = None
        eps = 10.0 ** (-int(dps) + 3)
    state, deriv = _zero_phi_pipeline(spec, arith, initial)
    variance, slope, qfi, scale = _moments_from_pipeline(arith, state, deriv)
    if abs(float(slope)) <= eps * scale:
        raise DegenerateProtocolError("signal slope vanishes to working precision")
    return make_report(float(variance), float(slope), float(qfi))


def _auto_precision(spec, start=30, limit=4000, rtol=1e-12):
    dps = start
    previous = None
    while dps <= limit:
        try:
            report = moment_error_numeric(spec, dps=dps)
        except DegenerateProtocolError:
            report = None
        if report is not None and previous is not None:
            if abs(report.error - previous.error) <= rtol * abs(report.error):
                return report
        previous = report
        dps *= 2
    if previous is None:
        raise DegenerateProtocolError("signal slope vanishes at every tried precision")
    return previous


def finite_difference_slope(spec: ProtocolSpec, step=1e-5) -> float:
    """Central-difference ``d<J_y>/dphi`` at ``phi = 0``; a check on the analytic slope."""
    jy = spin_core.collective_operator(spec.n_particles, "Jy")
    plus = spin_core.moments(prepare(spec, step), jy)[0]
    minus = spin_core.moments(prepare(spec, -step), jy)[0]
    return (plus - minus) / (2 * step)


# ---------------------------------------------------------------------------
# Kerr analogue in a truncated Fock space


def _ladder(cutoff):
    return np.diag(np.sqrt(np.arange(1, cutoff)), 1)


def _quadrature_p(cutoff):
    a = _ladder(cutoff)
    return (a - a.T) / (1j * math.sqrt(2))


def _quadrature_x(cutoff):
    a = _ladder(cutoff)
    return (a + a.T) / math.sqrt(2)


KERR_GENERATORS = {"p": _quadrature_p, "x": _quadrature_x}


def coherent_amplitudes(alpha, cutoff, tol=1e-12):
    """Fock amplitudes of a real coherent state; raises if the tail mass exceeds ``tol``."""
    if alpha < 0:
        raise DomainError("alpha must be non-negative")
    n = np.arange(cutoff)
    if alpha == 0:
        amps = (n == 0).astype(float)
    else:
        amps = np.exp(-(alpha**2) / 2 + n * math.log(alpha) - 0.5 * gammaln(n + 1))
    tail = 1.0 - float(np.sum(amps**2))
    # the last level feeds p|psi> out of the truncated space, so it must be empty too
    if tail > tol or amps[-1] ** 2 > tol:
        raise TruncationError(
            f"cutoff {cutoff} too small for alpha={alpha}: tail mass {max(tail, amps[-1]**2):.3g}"
        )
    return amps.astype(complex)


def _kerr_state(alpha, chi_t, phi, cutoff):
    psi = coherent_amplitudes(alpha, cutoff)
    n = np.arange(cutoff)
    w, v = np.linalg.eigh(_quadrature_p(cutoff))
    kerr = np.exp(-1j * chi_t * n**2)
    psi = kerr * psi
    psi = v @ (np.exp(-1j * phi * w) * (v.conj().T @ psi))
    return FockState(cutoff, kerr.conj() * psi)


def kerr_report_numeric(alpha, chi_t, cutoff=80, generator="p") -> ErrorReport:
    """Kerr moment error with the p-quadrature readout.

    ``generator`` selects the displacement ``exp(-i phi G)``: ``"p"`` (the stated
    protocol, which shifts x) or ``"x"`` (shifts p, giving a unit slope at chi_t = 0).
    """
    if generator not in KERR_GENERATORS:
        raise ValueError(f"generator must be one of {sorted(KERR_GENERATORS)}")
    psi = coherent_amplitudes(alpha, cutoff)
    n = np.arange(cutoff)
    p = _quadrature_p(cutoff)
    g = KERR_GENERATORS[generator](cutoff)
    kerr = np.exp(-1j * chi_t * n**2)
    deriv = kerr.conj() * (-1j * (g @ (kerr * psi)))
    p_psi = p @ psi
    mean = np.vdot(psi, p_psi).real
    variance = np.vdot(p_psi, p_psi).real - mean**2
    slope = 2 * np.vdot(deriv, p_psi).real
    overlap = np.vdot(psi, deriv)
    qfi = 4 * (np.vdot(deriv, deriv).real - abs(overlap) ** 2)
    if abs(slope) < 1e-14:
        raise DegenerateProtocolError(f"zero p slope at chi_t={chi_t} with generator {generator}")
    return make_report(variance, slope, qfi)


def kerr_error_numeric(alpha, chi_t, cutoff=80, generator="p") -> float:
    """Moment error of the Kerr twist-untwist displacement protocol.

    Convention: ``p = (a - a^dag)/(i sqrt 2)``, ``D(phi) = exp(-i phi p)``, real
    ``alpha``; the coherent-state p-variance is 1/2.
    """
    return kerr_report_numeric(alpha, chi_t, cutoff, generator).error
