"""Time evolution, two-time correlations, spectra, and moment flows.

Two independent routes to the same physics live here: full master-equation
propagation through the assembled generator, and the semiclassical moment
system (a 2x2 drift for amplitudes, a 4x4 affine flow for second moments).
Their agreement -- and their agreement with :mod:`epdimer.analytic` -- is the
backbone of the test suite.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la

from .model import SystemParams
from .spectral import SpectralDecomposition, eig_decompose, steady_state
from .superop import Superoperator, devectorize, vectorize


# ---------------------------------------------------------------------------
# propagation


def evolve(sup: Superoperator, rho0: np.ndarray, times,
           dec: SpectralDecomposition | None = None) -> np.ndarray:
    """Propagate a state: rho(t) = exp(L t) rho0.

    When the eigenbasis is healthy (biorthonormality holds to roundoff) this
    is the plain spectral sum over eigenpairs.  Near or at an exceptional
    point the eigenbasis degrades -- eigenvectors of a (nearly) defective
    eigenvalue become parallel and the expansion weights blow up with huge
    cancellations -- so the computation falls back to stepping with dense
    matrix exponentials between the requested times, which does not care
    about the Jordan structure at all.

    times may be a scalar or an array; returns the matching stack of states.
    Trace and Hermiticity are preserved to roundoff, never enforced.
    """
    if rho0.shape != (sup.dim, sup.dim):
        raise ValueError(f"state shape {rho0.shape} does not match dimension {sup.dim}")
    herm_dev = np.linalg.norm(rho0 - rho0.conj().T)
    if herm_dev > 1e-8 * max(np.linalg.norm(rho0), 1e-300):
        raise ValueError(f"initial state is not Hermitian (deviation {herm_dev:.3e})")
    a = sup.dense()
    if dec is None:
        dec = eig_decompose(a, kind="liouvillian")
    scalar = np.isscalar(times)
    tarr = np.atleast_1d(np.asarray(times, dtype=float))
    x0 = vectorize(rho0)
    out = np.zeros((tarr.size, x0.size), dtype=complex)

    if dec.biorthonormality_residual() <= 1e-8:
        for i in range(dec.eigenvalues.size):
            w = np.vdot(vectorize(dec.left[i]), x0)
            r = vectorize(dec.right[i])
            out += np.exp(dec.eigenvalues[i] * tarr)[:, None] * (w * r)[None, :]
    else:
        order = np.argsort(tarr)
        t_prev = 0.0
        x = x0
        for k in order:
            dt = tarr[k] - t_prev
            if dt != 0.0:
                x = la.expm(a * dt) @ x
                t_prev = tarr[k]
            out[k] = x

    states = np.array([devectorize(row) for row in out])
    return states[0] if scalar else states


# ---------------------------------------------------------------------------
# two-time correlation functions


@dataclass
class TTCFSeries:
    """Stationary two-time correlations <a_j^dag(0) a_j(tau)> on a tau grid.

    Values are stored in the frame rotating at ``frame`` (the common cavity
    frequency), i.e. with exp(+i frame tau) already multiplied in.
    """

    tau: np.ndarray
    active: np.ndarray
    passive: np.ndarray
    frame: float = 0.0
    meta: dict = field(default_factory=dict)

    def lab_values(self) -> tuple[np.ndarray, np.ndarray]:
        phase = np.exp(-1j * self.frame * self.tau)
        return self.active * phase, self.passive * phase


def correlation(sup: Superoperator, rho_ss: np.ndarray,
                op_zero: np.ndarray, op_tau: np.ndarray,
                tau: np.ndarray) -> np.ndarray:
    """<A(0) B(tau)> = Tr[B exp(L tau) (rho_ss A)] on an increasing tau grid.

    At tau = 0 this reduces to Tr[B rho_ss A] = <A B>.  Propagation is by
    repeated application of exp(L dtau) on the vectorized seed, one matrix
    exponential per distinct step size.
    """
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size < 1:
        raise ValueError("tau grid must be a 1-d array")
    if np.any(np.diff(tau) <= 0) or tau[0] < 0:
        raise ValueError("tau grid must be strictly increasing and non-negative")
    a = sup.dense()
    r = vectorize(rho_ss @ op_zero)
    w = vectorize(op_tau.T)  # plain dot with vec(X) gives Tr[op_tau X]
    values = np.empty(tau.size, dtype=complex)
    steps = np.diff(np.concatenate(([0.0], tau)))
    props: dict[float, np.ndarray] = {}
    for k, dt in enumerate(steps):
        if dt > 0:
            key = float(dt)
            if key not in props:
                props[key] = la.expm(a * dt)
            r = props[key] @ r
        values[k] = w @ r
    return values


def ttcf_numeric(sup: Superoperator, tau: np.ndarray,
                 rho_ss: np.ndarray | None = None) -> TTCFSeries:
    """Master-equation two-time correlations of both modes.

    Seeds with the stationary state (computed on demand) and stores the
    rotating-frame values.
    """
    if sup.spec is None:
        raise ValueError("need the generator spec to identify the mode operators")
    from .fock import annihilator

    if rho_ss is None:
        rho_ss = steady_state(sup)
    cutoffs = sup.spec.cutoffs
    w = sup.spec.params.omega_c
    tau = np.asarray(tau, dtype=float)
    phase = np.exp(1j * w * tau)
    a1 = annihilator(1, cutoffs)
    a2 = annihilator(2, cutoffs)
    c1 = correlation(sup, rho_ss, a1.conj().T, a1, tau) * phase
    c2 = correlation(sup, rho_ss, a2.conj().T, a2, tau) * phase
    return TTCFSeries(tau=tau, active=c1, passive=c2, frame=w,
                      meta={"method": "master-equation"})


# ---------------------------------------------------------------------------
# semiclassical moment systems


class NoiseVariant(enum.Enum):
    """Which noise sources feed the second-moment flow.

    BOTH is the moment system of the full master equation.  GAIN_ONLY keeps
    a single noise term scaled by the *net* gain, a common shortcut whose
    pathologies (unbounded growth above transparency, negative occupations
    below) are worth exhibiting next to the correct flow.
    """

    BOTH = "both_noises"
    GAIN_ONLY = "gain_noise_only"


def moment_system(p: SystemParams, variant: NoiseVariant = NoiseVariant.BOTH
                  ) -> tuple[np.ndarray, np.ndarray]:
    """Affine flow d m / dt = M m + b for m = (n1, n2, <a1^dag a2>, <a2^dag a1>)."""
    g = p.net_gain
    nu = p.loss2
    k = p.kappa
    m = np.array([
        [g, 0.0, -k, -k],
        [0.0, -nu, k, k],
        [k, -k, 0.5 * (g - nu), 0.0],
        [k, -k, 0.0, 0.5 * (g - nu)],
    ])
    drive = p.gain if variant is NoiseVariant.BOTH else g
    b = np.array([drive, 0.0, 0.0, 0.0])
    return m, b


def amplitude_drift(p: SystemParams, frame: str = "rotating") -> np.ndarray:
    """2x2 drift of the mode amplitudes (<a1>, <a2>)."""
    g = p.net_gain
    w = np.array([[0.5 * g, -p.kappa], [p.kappa, -0.5 * p.loss2]], dtype=complex)
    if frame == "lab":
        w = w - 1j * p.omega_c * np.eye(2)
    elif frame != "rotating":
        raise ValueError(f"unknown frame {frame!r}")
    return w


def steady_moments_numeric(p: SystemParams,
                           variant: NoiseVariant = NoiseVariant.BOTH) -> np.ndarray:
    """Stationary point of the moment flow, solve(M, -b); errors if unstable."""
    m, b = moment_system(p, variant)
    if np.any(np.linalg.eigvals(m).real >= -1e-12):
        raise ValueError("moment flow has no attracting stationary point at these rates")
    return np.linalg.solve(m, -b)


def ttcf_semiclassical(p: SystemParams, tau: np.ndarray) -> TTCFSeries:
    """Two-time correlations from the regression of the amplitude drift.

    The pair (<a1^dag(0) a1(tau)>, <a1^dag(0) a2(tau)>) obeys the one-time
    amplitude flow with the stationary second moments as initial data; same
    for the passive mode.  Robust at the drift EP because the propagation is
    by matrix exponential, not diagonalization.
    """
    if not (p.gain < p.loss_sum):
        raise ValueError("two-time correlations require below-threshold rates")
    mss = steady_moments_numeric(p, NoiseVariant.BOTH)
    n1, n2, c12, c21 = mss
    w = amplitude_drift(p, frame="rotating")
    tau = np.asarray(tau, dtype=float)
    if np.any(np.diff(tau) <= 0) or tau[0] < 0:
        raise ValueError("tau grid must be strictly increasing and non-negative")
    u = np.array([n1, c12], dtype=complex)
    v = np.array([c21, n2], dtype=complex)
    c1 = np.empty(tau.size, dtype=complex)
    c2 = np.empty(tau.size, dtype=complex)
    steps = np.diff(np.concatenate(([0.0], tau)))
    props: dict[float, np.ndarray] = {}
    for k, dt in enumerate(steps):
        if dt > 0:
            key = float(dt)
            if key not in props:
                props[key] = la.expm(w * dt)
            u = props[key] @ u
            v = props[key] @ v
        c1[k] = u[0]
        c2[k] = v[1]
    return TTCFSeries(tau=tau, active=c1, passive=c2, frame=p.omega_c,
                      meta={"method": "semiclassical"})


# ---------------------------------------------------------------------------
# model fitting of correlation decays


class FitError(ValueError):
    """No candidate decay model reproduces the series."""


@dataclass(frozen=True)
class TTCFFit:
    """Selected decay model of a correlation series.

    model is one of 'single_exp' (a e^{mu tau}), 'double_exp'
    (a1 e^{mu1 tau} + a2 e^{mu2 tau}) or 'poly_exp'
    (polynomial(tau) e^{mu tau}, the exceptional-point form).
    """

    model: str
    degree: int
    rates: tuple[complex, ...]
    amplitudes: tuple[complex, ...]
    residual: float           # relative RMS misfit
    score: float              # information criterion used for selection


def _linear_prediction_roots(y: np.ndarray, order: int) -> np.ndarray:
    cols = [y[order - 1 - j:len(y) - 1 - j] for j in range(order)]
    design = np.column_stack(cols)
    target = y[order:]
    coef, *_ = np.linalg.lstsq(design, target, rcond=None)
    return np.roots(np.concatenate(([1.0], -coef)))


def _design_fit(tau: np.ndarray, y: np.ndarray, columns: list[np.ndarray]):
    design = np.column_stack(columns)
    amps, *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = design @ amps - y
    return amps, float(np.sqrt(np.mean(np.abs(resid) ** 2)))


def fit_ttcf_model(tau: np.ndarray, values: np.ndarray,
                   max_poly_degree: int = 2) -> TTCFFit:
    """Fit and select a decay model for one correlation series.

    Needs at least 20 uniformly spaced samples spanning roughly three decay
    times.  Rates come from linear prediction (exact for noiseless
    exponential data, including the degenerate-root EP case), amplitudes from
    least squares, and the winner minimizes an information criterion that
    charges each real parameter log(n).
    """
    tau = np.asarray(tau, dtype=float)
    y = np.asarray(values, dtype=complex)
    if tau.ndim != 1 or tau.shape != y.shape:
        raise ValueError("tau and values must be matching 1-d arrays")
    if tau.size < 20:
        raise ValueError(f"need at least 20 samples, got {tau.size}")
    steps = np.diff(tau)
    dt = steps[0]
    if dt <= 0 or np.max(np.abs(steps - dt)) > 1e-9 * dt:
        raise ValueError("tau grid must be uniform for the fit")
    scale = float(np.max(np.abs(y)))
    if scale == 0:
        raise FitError("series is identically zero")
    if abs(y[-1]) > 0.08 * scale:
        raise ValueError("series must span at least ~3 decay times "
                         f"(endpoint still at {abs(y[-1]) / scale:.2%} of peak)")
    n = tau.size
    candidates: list[TTCFFit] = []

    # single exponential
    z1 = np.vdot(y[:-1], y[1:]) / np.vdot(y[:-1], y[:-1])
    mu1 = np.log(z1) / dt
    amps, resid = _design_fit(tau, y, [np.exp(mu1 * tau)])
    candidates.append(TTCFFit("single_exp", 0, (mu1,), tuple(amps), resid / scale, 0.0))

    # double exponential
    roots = _linear_prediction_roots(y, 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        mus = np.log(roots.astype(complex)) / dt
    if np.all(np.isfinite(mus)):
        cols = [np.exp(mus[0] * tau), np.exp(mus[1] * tau)]
        amps, resid = _design_fit(tau, y, cols)
        candidates.append(TTCFFit("double_exp", 0, tuple(mus), tuple(amps), resid / scale, 0.0))
        mu_poly = np.mean(mus)
    else:
        mu_poly = mu1

    # polynomial times exponential
    for degree in range(1, max_poly_degree + 1):
        cols = [tau**j * np.exp(mu_poly * tau) for j in range(degree + 1)]
        amps, resid = _design_fit(tau, y, cols)
        candidates.append(TTCFFit("poly_exp", degree, (mu_poly,), tuple(amps),
                                  resid / scale, 0.0))

    def n_params(fit: TTCFFit) -> int:
        if fit.model == "single_exp":
            return 4
        if fit.model == "double_exp":
            return 8
        return 2 + 2 * (fit.degree + 1)

    floor = (1e-15) ** 2
    scored = []
    for fit in candidates:
        mse = fit.residual**2 + floor
        score = n * np.log(mse) + n_params(fit) * np.log(n)
        scored.append(TTCFFit(fit.model, fit.degree, fit.rates, fit.amplitudes,
                              fit.residual, float(score)))
    best = min(scored, key=lambda f: f.score)
    if best.residual > 0.1:
        raise FitError(f"best model ({best.model}) still misfits at {best.residual:.2%}")
    return best


# ---------------------------------------------------------------------------
# emission spectra by quadrature


@dataclass(frozen=True)
class PowerSpectrum:
    """One-sided Fourier transform of the correlations, per mode.

    s_j(delta) = (1/pi) Re int_0^T C_j(tau) exp(i delta tau) dtau, with delta
    measured from the frame frequency of the series.  truncated flags whether
    the series had decayed to <= 1e-6 of its peak by the end of the grid.
    """

    detuning: np.ndarray
    active: np.ndarray
    passive: np.ndarray
    truncated: bool


def power_spectrum_numeric(series: TTCFSeries, detuning: np.ndarray) -> PowerSpectrum:
    """Trapezoid quadrature of the correlation series."""
    detuning = np.asarray(detuning, dtype=float)
    tau = series.tau
    truncated = False
    for values in (series.active, series.passive):
        peak = np.max(np.abs(values))
        if peak > 0 and abs(values[-1]) > 1e-6 * peak:
            truncated = True
    if truncated:
        warnings.warn("correlation series not fully decayed; spectrum is truncated",
                      RuntimeWarning, stacklevel=2)
    kernel = np.exp(1j * np.outer(detuning, tau))

    def transform(values):
        return np.trapezoid(kernel * values[None, :], tau, axis=1).real / np.pi

    return PowerSpectrum(detuning=detuning,
                         active=transform(series.active),
                         passive=transform(series.passive),
                         truncated=truncated)


def spectrum_curvature_at_zero(series: TTCFSeries) -> tuple[float, float]:
    """d^2 S / d delta^2 at zero detuning, from the same quadrature rule.

    Differentiating under the integral gives -(1/pi) int tau^2 Re C(tau) dtau,
    which avoids finite differencing; its sign flip is the spectral
    bifurcation from one peak to two.
    """
    tau = series.tau
    w = tau**2
    c1 = -np.trapezoid(w * series.active.real, tau) / np.pi
    c2 = -np.trapezoid(w * series.passive.real, tau) / np.pi
    return float(c1), float(c2)


# ---------------------------------------------------------------------------
# moment flows (noise-model comparison)


@dataclass(frozen=True)
class MomentTrajectory:
    times: np.ndarray
    n1: np.ndarray
    n2: np.ndarray
    cross: np.ndarray


def langevin_moments(p: SystemParams, variant: NoiseVariant,
                     times, initial=(0.0, 0.0, 0.0, 0.0)) -> MomentTrajectory:
    """Second moments along the affine flow of the chosen noise model.

    Default initial data is the vacuum.  Uses the standard augmented-matrix
    exponential for the affine system, so EPs of the drift need no special
    casing.
    """
    m, b = moment_system(p, variant)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    aug = np.zeros((5, 5))
    aug[:4, :4] = m
    aug[:4, 4] = b
    state0 = np.concatenate([np.asarray(initial, dtype=float), [1.0]])
    n1 = np.empty(times.size)
    n2 = np.empty(times.size)
    cross = np.empty(times.size, dtype=complex)
    for k, t in enumerate(times):
        state = la.expm(aug * t) @ state0
        n1[k], n2[k], cross[k] = state[0], state[1], state[2]
    return MomentTrajectory(times=times, n1=n1, n2=n2, cross=cross)


def langevin_steady(p: SystemParams, variant: NoiseVariant = NoiseVariant.BOTH
                    ) -> np.ndarray:
    """Stationary moments of the chosen noise model.

    For the full-noise flow at kappa = 0 this is the amplifier occupation
    gain/(loss1 - gain), which requires gain < loss1.  The gain-only variant
    reaches a *negative* stationary occupation below transparency -- returned
    as-is, since exhibiting that defect is the point of the variant.
    """
    if variant is NoiseVariant.BOTH and p.kappa == 0.0 and p.gain >= p.loss1:
        raise ValueError("no stationary state: uncoupled amplifier at or above transparency")
    return steady_moments_numeric(p, variant)
