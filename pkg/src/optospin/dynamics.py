"""Two-level open-system dynamics of the stress-driven |+1> <-> |-1> transition.

Rotating frame, basis order (|+1>, |-1>):

    H = (delta/2) sigma_z + (Omega/2) sigma_x
    d rho/dt = -i [H, rho] + D[rho],   D[rho] = -gamma_phi * offdiag(rho)

so coherences decay as exp(-t/T2*) when gamma_phi = 1/T2*. Integration is
classical fixed-step RK4. Because the generator is constant during a drive
pulse, N RK4 steps equal the N-th power of the one-step RK4 amplification
matrix; the batched path uses that, the stepping path (``trajectory``) applies
the four stages literally and is used for per-step invariant checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NumericalError, StepSizeError
from .injection import LockProfile, relative_amplitude
from .nvspin import rabi_from_stress
from .params import SpinParams

TRACE_TOL = 1e-9
HERM_TOL = 1e-12
POS_TOL = 1e-9
STABILITY_LIMIT = 0.1
CONVERGENCE_TOL = 1e-8

_SZ = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
_SX = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_OFFDIAG = np.array([[0.0, 1.0], [1.0, 0.0]])
_EYE2 = np.eye(2)


@dataclass(frozen=True)
class SpinState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (2, 2):
            raise ValueError("SpinState needs a 2x2 density matrix")
        check_density_matrix(rho)
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def plus1(cls) -> "SpinState":
        return cls(np.array([[1.0, 0.0], [0.0, 0.0]]))

    @classmethod
    def minus1(cls) -> "SpinState":
        return cls(np.array([[0.0, 0.0], [0.0, 1.0]]))

    @property
    def p_plus1(self) -> float:
        return float(self.rho[0, 0].real)

    @property
    def p_minus1(self) -> float:
        return float(self.rho[1, 1].real)


def check_density_matrix(rho: np.ndarray) -> None:
    """Raise NumericalError if any matrix in a (..., 2, 2) stack is not a valid state."""
    rho = np.asarray(rho)
    tr = np.trace(rho, axis1=-2, axis2=-1)
    if np.any(np.abs(tr - 1.0) > TRACE_TOL):
        raise NumericalError(f"trace drifted from 1 (max error {np.max(np.abs(tr - 1.0)):.3g})")
    herm = np.abs(rho - np.conj(np.swapaxes(rho, -1, -2)))
    if np.any(herm > HERM_TOL):
        raise NumericalError(f"density matrix not Hermitian (max {np.max(herm):.3g})")
    diag = np.diagonal(rho, axis1=-2, axis2=-1).real
    if np.any(diag < -POS_TOL) or np.any(diag > 1 + POS_TOL):
        raise NumericalError("population outside [0, 1]")
    det = np.linalg.det(rho).real
    if np.any(det < -POS_TOL):
        raise NumericalError(f"density matrix not positive (det {np.min(det):.3g})")


def dephasing_rate(t2_star: float, gamma_inj: float = 0.0) -> float:
    """Coherence decay rate; 1/T2* gives a 1/(pi T2*) FWHM line in Hz."""
    if not t2_star > 0:
        raise ValueError("t2_star must be positive")
    return (0.0 if math.isinf(t2_star) else 1.0 / t2_star) + gamma_inj


def hamiltonian(omega, delta) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)[..., None, None]
    delta = np.asarray(delta, dtype=float)[..., None, None]
    return 0.5 * delta * _SZ + 0.5 * omega * _SX


def lindblad_rhs(rho, omega, delta, gamma_phi) -> np.ndarray:
    h = hamiltonian(omega, delta)
    gamma_phi = np.asarray(gamma_phi, dtype=float)[..., None, None]
    return -1j * (h @ rho - rho @ h) - gamma_phi * _OFFDIAG * rho


def rk4_step(rho, omega, delta, gamma_phi, h):
    k1 = lindblad_rhs(rho, omega, delta, gamma_phi)
    k2 = lindblad_rhs(rho + 0.5 * h * k1, omega, delta, gamma_phi)
    k3 = lindblad_rhs(rho + 0.5 * h * k2, omega, delta, gamma_phi)
    k4 = lindblad_rhs(rho + h * k3, omega, delta, gamma_phi)
    return rho + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def liouvillian(omega, delta, gamma_phi) -> np.ndarray:
    """4x4 generator acting on row-major vec(rho)."""
    h = hamiltonian(omega, delta)
    ht = np.swapaxes(h, -1, -2)
    lv = -1j * (_kron(h, _EYE2) - _kron(_EYE2, ht))
    gamma_phi = np.asarray(gamma_phi, dtype=float)[..., None]
    damp = -gamma_phi * np.array([0.0, 1.0, 1.0, 0.0])
    return lv + _diag(damp)


def _kron(a, b):
    a = np.asarray(a)
    b = np.asarray(b)
    out = a[..., :, None, :, None] * b[..., None, :, None, :]
    shape = np.broadcast_shapes(a.shape[:-2], b.shape[:-2]) + (4, 4)
    return out.reshape(shape)


def _diag(v):
    out = np.zeros(v.shape + (v.shape[-1],), dtype=complex)
    idx = np.arange(v.shape[-1])
    out[..., idx, idx] = v
    return out


def rk4_step_matrix(omega, delta, gamma_phi, h) -> np.ndarray:
    """Amplification matrix of one RK4 step for the linear generator."""
    a = h * liouvillian(omega, delta, gamma_phi)
    eye = np.eye(4, dtype=complex)
    # Horner form of I + A + A^2/2 + A^3/6 + A^4/24
    m = eye + a / 4.0
    m = eye + (a @ m) / 3.0
    m = eye + (a @ m) / 2.0
    return eye + a @ m


def check_step(dt: float, omega, delta, gamma_phi) -> None:
    rate = max(
        float(np.max(np.abs(omega))),
        float(np.max(np.abs(delta))),
        float(np.max(np.abs(gamma_phi))),
    )
    if not dt > 0:
        raise StepSizeError("dt must be positive")
    if dt * rate >= STABILITY_LIMIT:
        raise StepSizeError(
            f"dt too large: dt * max rate = {dt * rate:.3g} (must be < {STABILITY_LIMIT})"
        )


def _n_steps(duration: float, dt: float) -> int:
    if duration < 0:
        raise ValueError("duration must be non-negative")
    return max(1, math.ceil(duration / dt - 1e-9)) if duration > 0 else 0


def propagate(rho0, omega, delta, gamma_phi, duration: float, dt: float) -> np.ndarray:
    """Batched RK4 propagation; parameters broadcast against each other.

    Returns density matrices of shape ``broadcast_shape + (2, 2)``.
    """
    check_step(dt, omega, delta, gamma_phi)
    n = _n_steps(duration, dt)
    omega, delta, gamma_phi = np.broadcast_arrays(
        np.asarray(omega, float), np.asarray(delta, float), np.asarray(gamma_phi, float)
    )
    rho0 = np.asarray(rho0, dtype=complex)
    shape = omega.shape
    if n == 0:
        return np.broadcast_to(rho0, shape + (2, 2)).copy()
    h = duration / n
    step = rk4_step_matrix(omega, delta, gamma_phi, h)
    total = np.linalg.matrix_power(step, n)
    vec = np.broadcast_to(rho0.reshape(rho0.shape[:-2] + (4,)), shape + (4,))
    out = np.einsum("...ij,...j->...i", total, vec)
    return out.reshape(shape + (2, 2))


def trajectory(rho0, omega, delta, gamma_phi, duration: float, dt: float, check: bool = False):
    """Step-by-step RK4; returns (times, states) with states of shape (n+1, ..., 2, 2)."""
    check_step(dt, omega, delta, gamma_phi)
    n = _n_steps(duration, dt)
    h = duration / n if n else 0.0
    rho = np.asarray(rho0, dtype=complex)
    shape = np.broadcast_shapes(np.shape(omega), np.shape(delta), np.shape(gamma_phi))
    rho = np.broadcast_to(rho, shape + (2, 2)).copy()
    states = [rho]
    for _ in range(n):
        rho = rk4_step(rho, omega, delta, gamma_phi, h)
        if check:
            check_density_matrix(rho)
        states.append(rho)
    return np.arange(n + 1) * h, np.stack(states)


def _converged(rho0, omega, delta, gamma_phi, duration, dt):
    coarse = propagate(rho0, omega, delta, gamma_phi, duration, dt)
    if duration > 0:
        fine = propagate(rho0, omega, delta, gamma_phi, duration, dt / 2)
        pops_c = np.diagonal(coarse, axis1=-2, axis2=-1).real
        pops_f = np.diagonal(fine, axis1=-2, axis2=-1).real
        err = float(np.max(np.abs(pops_c - pops_f)))
        if err >= CONVERGENCE_TOL:
            raise NumericalError(
                f"integration not converged: halving dt moves populations by {err:.3g}"
            )
    return coarse


def evolve_two_level(
    initial: SpinState,
    omega: float,
    delta: float,
    t2_star: float,
    duration: float,
    dt: float = 1e-9,
    gamma_inj: float = 0.0,
    check_convergence: bool = True,
) -> SpinState:
    """Evolve one spin state under drive ``omega`` at detuning ``delta`` (rad/s)."""
    gamma_phi = dephasing_rate(t2_star, gamma_inj)
    if check_convergence:
        rho = _converged(initial.rho, omega, delta, gamma_phi, duration, dt)
    else:
        rho = propagate(initial.rho, omega, delta, gamma_phi, duration, dt)
    return SpinState(rho)


# ---------------------------------------------------------------------------
# pulse sequence and sweeps


@dataclass(frozen=True)
class PulseSequence:
    """init |0> -> pi -> |+1>, mechanical drive, pi readout of |+1> or |-1>."""

    drive_duration: float = 7e-6
    drive_rabi: float = 0.0
    drive_detuning: float = 0.0
    t2_star: float = 0.8e-6
    pi_pulse_fidelity: float = 1.0
    dt: float = 1e-9
    gamma_inj: float = 0.0  # extra dephasing from drive-frequency jitter

    def __post_init__(self):
        if self.drive_duration < 0:
            raise ValueError("drive_duration must be non-negative")
        if not 0.0 <= self.pi_pulse_fidelity <= 1.0:
            raise ValueError("pi_pulse_fidelity must lie in [0, 1]")
        if self.gamma_inj < 0:
            raise ValueError("gamma_inj must be non-negative")


def sequence_populations(omega, delta, seq: PulseSequence, check_convergence: bool = True):
    """Vectorized ``run_sequence`` over arrays of drive Rabi rate and detuning."""
    gamma_phi = dephasing_rate(seq.t2_star, seq.gamma_inj)
    rho0 = SpinState.plus1().rho
    args = (rho0, omega, delta, gamma_phi, seq.drive_duration, seq.dt)
    rho = _converged(*args) if check_convergence else propagate(*args)
    # population never promoted to |+1> stays in |0> and is not read out
    f = seq.pi_pulse_fidelity
    return f * rho[..., 0, 0].real, f * rho[..., 1, 1].real


def run_sequence(seq: PulseSequence) -> tuple[float, float]:
    p_plus, p_minus = sequence_populations(seq.drive_rabi, seq.drive_detuning, seq)
    return float(p_plus), float(p_minus)


@dataclass(frozen=True)
class SweepResult:
    delta_si: np.ndarray
    stress: np.ndarray
    p_plus1: np.ndarray
    p_minus1: np.ndarray
    fwhm: float | None = None
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        arrays = [np.asarray(getattr(self, k), dtype=float) for k in ("delta_si", "stress", "p_plus1", "p_minus1")]
        if len({a.shape for a in arrays}) != 1 or arrays[0].ndim != 1:
            raise ValueError("SweepResult arrays must be 1-d and of equal length")
        for k, a in zip(("delta_si", "stress", "p_plus1", "p_minus1"), arrays):
            object.__setattr__(self, k, a)
        tol = 1e-9
        p1, m1 = arrays[2], arrays[3]
        if np.any(p1 < -tol) or np.any(m1 < -tol) or np.any(p1 > 1 + tol) or np.any(m1 > 1 + tol):
            raise NumericalError("population outside [0, 1]")
        if np.any(p1 + m1 > 1 + tol):
            raise NumericalError("p_plus1 + p_minus1 exceeds 1")

    def with_fwhm(self, fwhm: float | None) -> "SweepResult":
        return replace(self, fwhm=fwhm)


def _check_grid(grid) -> np.ndarray:
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ValueError("grid must be a non-empty 1-d array")
    if np.any(np.diff(grid) < 0):
        raise ValueError("grid must be sorted")
    return grid


def sweep_injection_detuning(
    delta_sm: float,
    omega_peak: float,
    lp: LockProfile,
    template: PulseSequence,
    grid,
    stress_peak: float = float("nan"),
) -> SweepResult:
    """Scan the injection tone; ``grid`` holds spin-injection detunings (rad/s).

    Each point drives at detuning delta_si with Rabi rate
    omega_peak * sqrt(psd(delta_si - delta_sm)), the lock detuning being delta_si - delta_sm.
    """
    grid = _check_grid(grid)
    rel = relative_amplitude(grid - delta_sm, lp)
    p_plus, p_minus = sequence_populations(omega_peak * rel, grid, template)
    return SweepResult(
        delta_si=grid,
        stress=stress_peak * rel,
        p_plus1=p_plus,
        p_minus1=p_minus,
        metadata={
            "kind": "injection_detuning",
            "delta_sm": delta_sm,
            "omega_peak": omega_peak,
            "gamma_tune": lp.gamma_tune,
            "sequence": template,
        },
    )


def sweep_stress(stress_values, delta_si: float, template: PulseSequence, sp: SpinParams) -> SweepResult:
    """Fixed spin-injection detuning, varying stress amplitude at the NV."""
    stress = np.asarray(stress_values, dtype=float)
    if stress.ndim != 1 or stress.size == 0:
        raise ValueError("stress_values must be a non-empty 1-d array")
    omega = rabi_from_stress(stress, sp)
    p_plus, p_minus = sequence_populations(omega, np.full_like(stress, delta_si), template)
    return SweepResult(
        delta_si=np.full_like(stress, delta_si),
        stress=stress,
        p_plus1=np.atleast_1d(p_plus),
        p_minus1=np.atleast_1d(p_minus),
        metadata={"kind": "stress", "delta_si": delta_si, "eta": sp.eta, "g_str": sp.g_str, "sequence": template},
    )
