"""Curve metrology, width/contrast inversion and (Omega_m, r) fitting."""

from __future__ import annotations

import warnings
from fractions import Fraction
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np
from scipy import optimize

from .dynamics import PulseSequence, SweepResult, sequence_populations
from .errors import CurveError, FitError, NumericalError, UnreachableError
from .injection import LockProfile, relative_amplitude
from .params import TWO_PI

OUTER_FRACTION = 0.2


def _khz(values) -> np.ndarray:
    return TWO_PI * 1e3 * np.asarray(values, dtype=float)


DEFAULT_GRID = _khz(np.arange(-1500.0, 1500.0 + 1e-9, 10.0))
DEFAULT_OMEGA_GRID = _khz(np.arange(10.0, 400.0 + 1e-9, 10.0))
T2_BRACKET = (0.5e-6, 0.8e-6)


def outer_baseline(y) -> float:
    """Mean of the outer 20 % of samples (10 % from each end)."""
    y = np.asarray(y, dtype=float)
    k = max(1, int(round(len(y) * OUTER_FRACTION / 2)))
    return float(np.mean(np.concatenate([y[:k], y[-k:]])))


def fwhm_of_curve(x, y, baseline: float | None = None, extremum: str = "peak") -> float:
    """Full width at half extremum, from linearly interpolated crossings."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 3:
        raise CurveError("need matching 1-d arrays with at least 3 points")
    if np.any(np.diff(x) <= 0):
        raise CurveError("x must be strictly increasing")
    if extremum not in ("peak", "dip"):
        raise ValueError("extremum must be 'peak' or 'dip'")
    if baseline is None:
        baseline = outer_baseline(y)
    h = y - baseline if extremum == "peak" else baseline - y
    i = int(np.argmax(h))
    amp = h[i]
    if not amp > 0 or np.ptp(y) == 0:
        raise CurveError("no extremum")
    if np.count_nonzero(h == amp) > 1:
        raise CurveError("non-unique extremum")
    if i == 0 or i == len(x) - 1:
        raise CurveError("extremum at grid edge")
    half = 0.5 * amp

    left = np.nonzero(h[:i] < half)[0]
    right = np.nonzero(h[i + 1 :] < half)[0]
    if left.size == 0 or right.size == 0:
        raise CurveError("no half-maximum crossing on " + ("left" if left.size == 0 else "right") + " side")
    a = left[-1]
    b = i + 1 + right[0]
    x_left = x[a] + (half - h[a]) * (x[a + 1] - x[a]) / (h[a + 1] - h[a])
    x_right = x[b - 1] + (half - h[b - 1]) * (x[b] - x[b - 1]) / (h[b] - h[b - 1])
    return float(x_right - x_left)


def peak_change(y) -> float:
    """Extremal population change above the off-resonant plateau."""
    return float(np.max(y) - outer_baseline(y))


# ---------------------------------------------------------------------------
# width / contrast maps


@dataclass(frozen=True, eq=False)
class MapContext:
    """Everything but Omega_m that fixes a simulated injection sweep."""

    delta_sm: float = TWO_PI * 182e3
    t2_star: float = 0.8e-6
    lp: LockProfile = field(default_factory=LockProfile)
    drive_duration: float = 7e-6
    grid: np.ndarray = field(default_factory=lambda: DEFAULT_GRID.copy())
    omega_grid: np.ndarray = field(default_factory=lambda: DEFAULT_OMEGA_GRID.copy())
    t2_bracket: tuple[float, float] = T2_BRACKET
    dt: float = 1e-9
    gamma_inj: float = 0.0

    def sequence(self, t2_star: float | None = None) -> PulseSequence:
        return PulseSequence(
            drive_duration=self.drive_duration,
            t2_star=self.t2_star if t2_star is None else t2_star,
            dt=self.dt,
            gamma_inj=self.gamma_inj,
        )

    def at(self, t2_star: float) -> "MapContext":
        return replace(self, t2_star=t2_star)

    def curves(self, omegas) -> tuple[np.ndarray, np.ndarray]:
        """p_+1 and p_-1 over the grid for each peak Rabi rate; shape (n_omega, n_grid)."""
        omegas = np.atleast_1d(np.asarray(omegas, dtype=float))
        rel = relative_amplitude(self.grid - self.delta_sm, self.lp)
        return sequence_populations(omegas[:, None] * rel, self.grid, self.sequence())


@dataclass(frozen=True)
class FwhmMap:
    omega: np.ndarray
    fwhm: np.ndarray
    delta_p_minus1: np.ndarray
    t2_star: float

    def rows(self):
        return list(zip(self.omega, self.fwhm, self.delta_p_minus1))


def _metrics(ctx: MapContext, omegas) -> tuple[np.ndarray, np.ndarray]:
    _, pm = ctx.curves(omegas)
    widths = np.array([fwhm_of_curve(ctx.grid, row) for row in pm])
    changes = np.array([peak_change(row) for row in pm])
    return widths, changes


def fwhm_vs_omega_map(omega_grid, t2_star: float, delta_sm: float, lp: LockProfile, ctx: MapContext | None = None) -> FwhmMap:
    """Dip width and population change of p_-1 versus peak coupling rate."""
    omega_grid = np.asarray(omega_grid, dtype=float)
    if omega_grid.ndim != 1 or np.any(omega_grid <= 0) or np.any(np.diff(omega_grid) <= 0):
        raise ValueError("omega_grid must be positive and strictly increasing")
    ctx = replace(ctx or MapContext(), t2_star=t2_star, delta_sm=delta_sm, lp=lp)
    widths, changes = _metrics(ctx, omega_grid)
    return FwhmMap(omega_grid, widths, changes, t2_star)


def _assert_monotone(values, what: str) -> None:
    if np.any(np.diff(values) < 0):
        raise NumericalError(f"{what} map is not monotone on the omega grid; inversion refused")


class Estimate(NamedTuple):
    value: float
    uncertainty: float


def _bisect(func, target: float, lo: float, hi: float) -> float:
    return optimize.bisect(lambda w: func(w) - target, lo, hi, xtol=1e-9 * hi, rtol=1e-12, maxiter=200)


def _invert_width(delta_target: float, ctx: MapContext) -> float:
    widths, _ = _metrics(ctx, ctx.omega_grid)
    _assert_monotone(widths, "FWHM")
    if delta_target < widths[0]:
        raise UnreachableError(
            f"unreachable width: {delta_target / TWO_PI / 1e3:.1f} kHz is below the "
            f"{widths[0] / TWO_PI / 1e3:.1f} kHz floor"
        )
    if delta_target > widths[-1]:
        raise UnreachableError(
            f"unreachable width: {delta_target / TWO_PI / 1e3:.1f} kHz exceeds the map maximum "
            f"{widths[-1] / TWO_PI / 1e3:.1f} kHz"
        )
    k = int(np.searchsorted(widths, delta_target))
    if widths[k] == delta_target:
        return float(ctx.omega_grid[k])
    return _bisect(lambda w: _metrics(ctx, [w])[0][0], delta_target, ctx.omega_grid[k - 1], ctx.omega_grid[k])


def invert_fwhm(delta_target: float, ctx: MapContext | None = None) -> Estimate:
    """Peak coupling rate producing a p_-1 peak of width ``delta_target`` (rad/s).

    The uncertainty is half the spread of re-inversions at the two T2* bracket
    endpoints.
    """
    ctx = ctx or MapContext()
    omega = _invert_width(delta_target, ctx)
    ends = [_invert_width(delta_target, ctx.at(t2)) for t2 in ctx.t2_bracket]
    return Estimate(omega, 0.5 * abs(ends[1] - ends[0]))


def _dec(v) -> Fraction:
    # shortest round-tripping decimal, i.e. the number as it was typed
    return Fraction(repr(float(v)))


def correct_population(p, r: float):
    """Remove the uncoupled pedestal fraction: p / (1 - r).

    The quotient is formed on the decimal values of the inputs and rounded
    once, so 0.09 with r = 0.8 gives 0.45 rather than 0.45000000000000007.
    """
    if not 0 <= r < 1:
        raise ValueError("pedestal fraction r must satisfy 0 <= r < 1")
    arr = np.asarray(p, dtype=float)
    if np.any(arr < 0):
        raise ValueError("population must be non-negative")
    scale = 1 - _dec(r)
    out = np.array([float(_dec(v) / scale) for v in arr.ravel()]).reshape(arr.shape)
    return float(out) if arr.ndim == 0 else out


def corrected_pair(p_minus1, r: float):
    """(p_+1^corr, p_-1^corr) with p_+1^corr = 1 - p_-1^corr."""
    pm = correct_population(p_minus1, r)
    return 1.0 - pm, pm


def contrast_lower_bound(observed_change: float, ctx: MapContext | None = None) -> float:
    """Smallest coupling rate consistent with an uncorrected (r = 0) p_-1 change."""
    ctx = ctx or MapContext()
    if not observed_change > 0:
        raise ValueError("observed change must be positive")
    _, changes = _metrics(ctx, ctx.omega_grid)
    top = int(np.argmax(changes))
    branch = changes[: top + 1]
    _assert_monotone(branch, "population-change")
    if observed_change > branch[-1]:
        raise UnreachableError(
            f"change {observed_change:.3f} exceeds the saturation value {branch[-1]:.3f}"
        )
    k = int(np.searchsorted(branch, observed_change))
    if branch[k] == observed_change:
        return float(ctx.omega_grid[k])
    lo = ctx.omega_grid[k - 1] if k > 0 else 0.0
    return _bisect(lambda w: _metrics(ctx, [w])[1][0] if w > 0 else 0.0, observed_change, lo, ctx.omega_grid[k])


# ---------------------------------------------------------------------------
# least-squares fit of (Omega_m, r)


@dataclass(frozen=True)
class FitReport:
    omega_m: float
    omega_m_err: float
    r: float
    r_err: float
    residual_norm: float
    fwhm: float | None
    converged: bool
    n_evals: int
    snr: float
    low_confidence: bool
    model_snapshot: dict = field(default_factory=dict)

    def __post_init__(self):
        if not 0 <= self.r < 1:
            raise ValueError("r must lie in [0, 1)")
        if self.omega_m_err < 0 or self.r_err < 0:
            raise ValueError("uncertainties must be non-negative")

    def to_dict(self) -> dict:
        return {
            "omega_m_khz": self.omega_m / TWO_PI / 1e3,
            "omega_m_err_khz": self.omega_m_err / TWO_PI / 1e3,
            "r": self.r,
            "r_err": self.r_err,
            "residual_norm": self.residual_norm,
            "fwhm_khz": None if self.fwhm is None else self.fwhm / TWO_PI / 1e3,
            "converged": self.converged,
            "n_evals": self.n_evals,
            "snr": self.snr,
            "low_confidence": self.low_confidence,
            "model": self.model_snapshot,
        }


MAX_EVALS = 10_000
REL_TOL = 1e-6
LOW_SNR = 3.0
R_MAX = 0.999


def pedestal_model(ctx: MapContext, omega: float, r: float, grid=None):
    """Measured-looking p_+1, p_-1 when a fraction r of signal comes from uncoupled spins."""
    c = replace(ctx, grid=np.asarray(grid, dtype=float)) if grid is not None else ctx
    pp, pm = c.curves([omega])
    f = c.sequence().pi_pulse_fidelity
    return r * f + (1.0 - r) * pp[0], (1.0 - r) * pm[0]


def fit_sweep(data: SweepResult, ctx: MapContext | None = None, omega_guess: float | None = None) -> FitReport:
    """Fit peak coupling rate and pedestal fraction to a measured injection sweep.

    All other parameters come from ``ctx``; its detuning grid is replaced by
    the data's. Nelder-Mead in (Omega / Omega_0, r), bounded r in [0, R_MAX].
    """
    ctx = replace(ctx or MapContext(), grid=np.asarray(data.delta_si, dtype=float))
    x = ctx.grid
    if len(x) < 5:
        raise FitError("need at least 5 detuning points")
    if np.ptp(data.p_minus1) == 0 and np.ptp(data.p_plus1) == 0:
        raise FitError("degenerate data: no dip or peak")

    try:
        data_width = fwhm_of_curve(x, data.p_minus1)
    except CurveError:
        data_width = None
    omega0 = omega_guess
    if omega0 is None:
        omega0 = TWO_PI * 100e3
        if data_width is not None:
            try:
                omega0 = _invert_width(data_width, ctx)
            except NumericalError:
                pass
    sim_change = peak_change(ctx.curves([omega0])[1][0])
    r0 = float(np.clip(1.0 - peak_change(data.p_minus1) / sim_change, 0.0, 0.95)) if sim_change > 0 else 0.0

    y = np.concatenate([data.p_plus1, data.p_minus1])

    def residuals(w, r):
        pp, pm = pedestal_model(ctx, w, r)
        return np.concatenate([pp, pm]) - y

    def cost(u):
        return float(np.sum(residuals(u[0] * omega0, u[1]) ** 2))

    res = optimize.minimize(
        cost,
        x0=[1.0, r0],
        method="Nelder-Mead",
        bounds=[(1e-6, 50.0), (0.0, R_MAX)],
        options={"xatol": REL_TOL, "fatol": np.inf, "maxfev": MAX_EVALS, "adaptive": False},
    )
    if res.nfev >= MAX_EVALS and not res.success:
        raise FitError(f"fit did not converge within {MAX_EVALS} evaluations")
    omega = float(res.x[0] * omega0)
    r = float(np.clip(res.x[1], 0.0, R_MAX))

    resid = residuals(omega, r)
    ssr = float(np.sum(resid**2))
    dof = max(1, resid.size - 2)
    jac = np.empty((resid.size, 2))
    steps = (1e-4 * omega, 1e-4)
    for j, hstep in enumerate(steps):
        plus = (omega + hstep, r) if j == 0 else (omega, r + hstep)
        minus = (omega - hstep, r) if j == 0 else (omega, r - hstep)
        jac[:, j] = (residuals(*plus) - residuals(*minus)) / (2 * hstep)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        try:
            cov = np.linalg.inv(jac.T @ jac) * ssr / dof
            errs = np.sqrt(np.clip(np.diag(cov), 0.0, None))
        except np.linalg.LinAlgError:
            errs = np.array([np.inf, np.inf])

    _, pm_fit = pedestal_model(ctx, omega, r)
    rms = np.sqrt(ssr / resid.size)
    signal = float(np.ptp(pm_fit))
    snr = float(signal / rms) if rms > 0 else float("inf")
    return FitReport(
        omega_m=omega,
        omega_m_err=float(errs[0]),
        r=r,
        r_err=float(errs[1]),
        residual_norm=float(np.sqrt(ssr)),
        fwhm=data_width,
        converged=bool(res.success),
        n_evals=int(res.nfev),
        snr=snr,
        low_confidence=bool(snr < LOW_SNR or not res.success),
        model_snapshot={
            "delta_sm_khz": ctx.delta_sm / TWO_PI / 1e3,
            "t2_star_us": ctx.t2_star * 1e6,
            "gamma_tune_khz": ctx.lp.gamma_tune / TWO_PI / 1e3,
            "drive_us": ctx.drive_duration * 1e6,
            "omega_guess_khz": omega0 / TWO_PI / 1e3,
            "r_guess": r0,
        },
    )
