"""Closed-form results for the linear-gain dimer.

Everything here is an explicit formula: semiclassical drift eigenvalues and
two-time correlations, emission spectra with their bifurcation points, the
full eigensystem of the two-photon-truncated Liouvillian, and the locations
of the Hamiltonian and Liouvillian exceptional points.  The numeric modules
never call into this one; it exists so the matrix computations can be checked
against independent expressions (and vice versa).

Discriminants that vanish at exceptional points are evaluated in factored
form, e.g. D^2 = (A- - 4 kappa)(A- + 4 kappa) instead of A-^2 - 16 kappa^2,
so that they are exactly zero when kappa sits on the (floating-point) EP
instead of being lost to cancellation.

Derived rate combinations, written in terms of gain A and total losses
loss1/loss2:

    loss_sum  = loss1 + loss2       loss_diff = loss1 - loss2
    a_plus    = A + loss_sum        a_minus   = A + loss_diff
    net gain  = A - loss1
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .model import SystemParams

# ---------------------------------------------------------------------------
# small helpers


def _csqrt(x) -> complex:
    """Principal square root as a complex number."""
    return complex(np.sqrt(complex(x)))


def _params_abc(p: SystemParams) -> tuple[float, float, float]:
    return p.gain, p.loss1, p.loss2


# ---------------------------------------------------------------------------
# semiclassical layer: first moments, correlations, spectra


def stability_factor(p: SystemParams) -> float:
    """Inverse weight of the steady moments; positive iff moments converge.

    factor = (4 kappa^2 - g nu) (nu - g) with g the net gain and nu = loss2.
    """
    g = p.net_gain
    return (4.0 * p.kappa**2 - g * p.loss2) * (p.loss2 - g)


def is_stable(p: SystemParams) -> bool:
    """True when the first and second moments both relax."""
    return p.gain < p.loss_sum and stability_factor(p) > 0.0


@dataclass(frozen=True)
class SteadyMoments:
    """Stationary second moments of the two modes."""

    n1: float
    n2: float
    cross: complex  # <a1^dag a2>; real in this phase gauge


def steady_moments_closed(p: SystemParams) -> SteadyMoments:
    """Stationary photon numbers and cross-correlation of the dimer."""
    if not is_stable(p):
        raise ValueError("no stationary moments: parameters are above threshold")
    g = p.net_gain
    nu = p.loss2
    f = 1.0 / stability_factor(p)
    n1 = p.gain * (4.0 * p.kappa**2 - g * nu + nu**2) * f
    n2 = 4.0 * p.kappa**2 * p.gain * f
    cross = 2.0 * p.kappa * nu * p.gain * f
    return SteadyMoments(n1=n1, n2=n2, cross=cross)


def drift_discriminant(p: SystemParams) -> complex:
    """beta = sqrt((A - loss_diff)^2 - 16 kappa^2), factored for EP exactness."""
    d = p.gain - p.loss_diff
    return _csqrt((d - 4.0 * p.kappa) * (d + 4.0 * p.kappa))


def hep_kappa(p: SystemParams) -> float:
    """Coupling at which the single-excitation drift becomes defective."""
    return abs(p.gain - p.loss_diff) / 4.0


def drift_eigenvalues(p: SystemParams) -> tuple[complex, complex]:
    """Complex frequencies nu of the mode amplitudes, (+beta, -beta) branches.

    Amplitudes evolve as exp(-i nu t); Im(nu) < 0 means decay.
    """
    beta = drift_discriminant(p)
    base = p.omega_c + 0.25j * (p.gain - p.loss_sum)
    return base + 0.25j * beta, base - 0.25j * beta


def drift_eigenvectors(p: SystemParams) -> tuple[np.ndarray, np.ndarray]:
    """Unnormalized eigenvectors as (mode-1, mode-2) amplitude pairs."""
    beta = drift_discriminant(p)
    d = p.gain - p.loss_diff
    return (np.array([d + beta, 4.0 * p.kappa]),
            np.array([d - beta, 4.0 * p.kappa]))


def coalesced_drift_state(p: SystemParams) -> np.ndarray:
    """Maximally entangled single-excitation state at the drift EP.

    The relative sign between |10> and |01> follows the sign of
    (gain - loss_diff): plus above, minus below.
    """
    sgn = 1.0 if p.gain >= p.loss_diff else -1.0
    return np.array([1.0, sgn]) / np.sqrt(2.0)


@dataclass(frozen=True)
class TTCFCoefficients:
    """Amplitudes/rates of the stationary two-time correlations.

    In the rotating frame
        C1(tau) = u_plus exp(mu_plus tau) + u_minus exp(mu_minus tau)
        C2(tau) = v_minus exp(mu_plus tau) + v_plus exp(mu_minus tau)
    with mu_pm = (A - loss_sum)/4 +- beta/4.  Note the cross pairing of the
    v amplitudes; it is what reproduces C2(0) = n2.
    """

    u_plus: complex
    u_minus: complex
    v_plus: complex
    v_minus: complex
    mu_plus: complex
    mu_minus: complex


def ttcf_coefficients(p: SystemParams) -> TTCFCoefficients:
    if not is_stable(p):
        raise ValueError("two-time correlations require stable parameters")
    a = p.gain
    nu = p.loss2
    beta = drift_discriminant(p)
    if beta == 0:
        raise ValueError("drift is defective here; use the EP form of the correlation")
    dps = a - p.loss_sum   # A - loss_sum
    dms = a - p.loss_diff  # A - loss_diff
    g = p.net_gain
    norm = dps * (g * nu - 4.0 * p.kappa**2) * beta
    base = (nu * dps - 4.0 * p.kappa**2) * beta
    swing = dps * (nu * dms - 4.0 * p.kappa**2)
    u_plus = (-a / (2.0 * norm)) * (base + swing)
    u_minus = (-a / (2.0 * norm)) * (base - swing)
    v_plus = (2.0 * a * p.kappa**2 / norm) * (beta + dps)
    v_minus = (2.0 * a * p.kappa**2 / norm) * (beta - dps)
    mu = 0.25 * dps
    return TTCFCoefficients(
        u_plus=u_plus, u_minus=u_minus, v_plus=v_plus, v_minus=v_minus,
        mu_plus=mu + 0.25 * beta, mu_minus=mu - 0.25 * beta,
    )


def ttcf_closed(p: SystemParams, tau: np.ndarray,
                frame: str = "rotating") -> tuple[np.ndarray, np.ndarray]:
    """Stationary <a_j^dag(0) a_j(tau)> for both modes from the closed form."""
    tau = np.asarray(tau, dtype=float)
    c = ttcf_coefficients(p)
    c1 = c.u_plus * np.exp(c.mu_plus * tau) + c.u_minus * np.exp(c.mu_minus * tau)
    c2 = c.v_minus * np.exp(c.mu_plus * tau) + c.v_plus * np.exp(c.mu_minus * tau)
    if frame == "lab":
        phase = np.exp(-1j * p.omega_c * tau)
        return c1 * phase, c2 * phase
    if frame != "rotating":
        raise ValueError(f"unknown frame {frame!r}")
    return c1, c2


@dataclass(frozen=True)
class TTCFEPConstants:
    """C_j(tau) = exp(rate tau) (p_j + q_j tau) exactly at the drift EP."""

    p1: float
    q1: float
    p2: float
    q2: float
    rate: float


def ttcf_ep_constants(p: SystemParams) -> TTCFEPConstants:
    a = p.gain
    nu = p.loss2
    dps = a - p.loss_sum
    dms = a - p.loss_diff
    p1 = -a * (4.0 * nu**2 + dps**2) / dps**3
    q1 = -a * dps * dms * (a - p.loss1 - 3.0 * nu) / (4.0 * dps**3)
    p2 = -a * dms**2 / dps**3
    q2 = a * dms**2 / (4.0 * dps**2)
    return TTCFEPConstants(p1=p1, q1=q1, p2=p2, q2=q2, rate=0.25 * dps)


def ttcf_at_ep_closed(p: SystemParams, tau: np.ndarray,
                      frame: str = "rotating",
                      tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Polynomial-times-exponential correlations at the drift EP.

    Raises unless kappa is (numerically) at the EP coupling.
    """
    ep = hep_kappa(p)
    if abs(p.kappa - ep) > tol * max(1.0, ep):
        raise ValueError(f"kappa={p.kappa} is not at the drift EP {ep}")
    tau = np.asarray(tau, dtype=float)
    c = ttcf_ep_constants(p)
    env = np.exp(c.rate * tau)
    c1 = env * (c.p1 + c.q1 * tau)
    c2 = env * (c.p2 + c.q2 * tau)
    if frame == "lab":
        phase = np.exp(-1j * p.omega_c * tau)
        return c1 * phase, c2 * phase
    if frame != "rotating":
        raise ValueError(f"unknown frame {frame!r}")
    return c1.astype(complex), c2.astype(complex)


def spectra_closed(p: SystemParams, detuning: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Emission spectra of both modes versus detuning from the resonance."""
    if not is_stable(p):
        raise ValueError("emission spectra require stable parameters")
    d = np.asarray(detuning, dtype=float)
    g = p.net_gain
    nu = p.loss2
    wp = d + p.kappa
    wm = d - p.kappa
    denom = (wp**2 * wm**2 + 0.25 * (g**2 + nu**2) * d**2
             + (g * nu) * (g * nu - 8.0 * p.kappa**2) / 16.0)
    fs = 1.0 / denom
    s1 = (p.gain / (2.0 * np.pi)) * fs * (d**2 + 0.25 * nu**2)
    s2 = (p.kappa**2 * p.gain / (2.0 * np.pi)) * fs
    return s1, s2


def spectral_bifurcations(p: SystemParams) -> tuple[float, float]:
    """Couplings where each mode's spectrum changes from one peak to two."""
    g = p.net_gain
    nu = p.loss2
    inner = np.sqrt((g - nu) ** 2 + nu**2) + (g - nu)
    k1 = 0.5 * np.sqrt(nu) * np.sqrt(inner)
    k2 = 0.25 * np.sqrt(2.0) * np.sqrt(g**2 + nu**2)
    return float(k1), float(k2)


def spectral_peaks(p: SystemParams) -> tuple[tuple[float, float], tuple[float, float]]:
    """Peak positions (upper, lower) of each mode's spectrum.

    Below the corresponding bifurcation both entries collapse onto the
    resonance frequency.
    """
    g = p.net_gain
    nu = p.loss2
    inner1 = (2.0 * p.kappa * np.sqrt(4.0 * p.kappa**2 + 2.0 * nu * (nu - g))
              - nu**2)
    off1 = 0.5 * np.real(_csqrt(inner1))
    inner2 = 16.0 * p.kappa**2 - 2.0 * (g**2 + nu**2)
    off2 = 0.25 * np.real(_csqrt(inner2))
    w = p.omega_c
    return (w + off1, w - off1), (w + off2, w - off2)


# ---------------------------------------------------------------------------
# quantum layer at two-photon truncation: NHH and Liouvillian eigensystems


def nhh_matrix_closed(p: SystemParams) -> np.ndarray:
    """4x4 non-Hermitian Hamiltonian on span{|00>, |01>, |10>, |11>}."""
    w = p.omega_c
    a, l1, l2 = _params_abc(p)
    m = np.diag([
        0.0 + 0.0j,
        w - 0.5j * l2,
        w + 0.5j * (a - l1),
        2.0 * w + 0.5j * (a - p.loss_sum),
    ])
    m[1, 2] = 1j * p.kappa
    m[2, 1] = -1j * p.kappa
    return m


def nhh_eigenvalues_closed(p: SystemParams) -> np.ndarray:
    """Eigenvalues (0, nu_plus, nu_minus, two-photon line)."""
    nup, num = drift_eigenvalues(p)
    return np.array([
        0.0,
        nup,
        num,
        2.0 * p.omega_c + 0.5j * (p.gain - p.loss_sum),
    ])


def nhh_eigenvectors_closed(p: SystemParams) -> list[np.ndarray]:
    """Eigenvectors matching :func:`nhh_eigenvalues_closed` (unnormalized)."""
    v1, v2 = drift_eigenvectors(p)

    def embed(v):
        out = np.zeros(4, dtype=complex)
        out[2] = v[0]  # |10>
        out[1] = v[1]  # |01>
        return out

    e0 = np.zeros(4, dtype=complex)
    e0[0] = 1.0
    e3 = np.zeros(4, dtype=complex)
    e3[3] = 1.0
    return [e0, embed(v1), embed(v2), e3]


def coalesced_nhh_state(p: SystemParams) -> np.ndarray:
    """Single-excitation ket the NHH eigenvectors collapse onto at the EP."""
    two = coalesced_drift_state(p)
    out = np.zeros(4, dtype=complex)
    out[2] = two[0]
    out[1] = two[1]
    return out


def lep1_kappa(p: SystemParams) -> float:
    """Coupling of the third-order Liouvillian EP, |a_minus| / 4."""
    return abs(p.gain + p.loss_diff) / 4.0


def lep2_kappa(p: SystemParams) -> float:
    """Coupling of the second-order Liouvillian EP in the one-excitation sectors."""
    a, l1, l2 = _params_abc(p)
    ap = a + p.loss_sum
    radicand = ap**2 - 8.0 * a * l2
    if radicand <= 0:
        raise ValueError("no real second Liouvillian EP at these rates")
    return abs((a + l1) ** 2 - l2**2) / (4.0 * np.sqrt(radicand))


@dataclass(frozen=True)
class LiouvillianDiscriminants:
    """Square-root combinations entering the 16 closed-form eigenvalues."""

    d: complex        # vanishes at the third-order EP
    f: complex        # vanishes at the second-order EP
    s: float
    e_plus: complex
    e_minus: complex


def liouvillian_discriminants(p: SystemParams) -> LiouvillianDiscriminants:
    a, l1, l2 = _params_abc(p)
    am = a + p.loss_diff
    ap = a + p.loss_sum
    d = _csqrt((am - 4.0 * p.kappa) * (am + 4.0 * p.kappa))
    f = _csqrt(ap**2 * am**2 + 16.0 * p.kappa**2 * (8.0 * a * l2 - ap**2))
    s = (a + l1) ** 2 + l2**2 - 8.0 * p.kappa**2
    e_plus = np.sqrt(2.0) * _csqrt(s + f)
    e_minus = np.sqrt(2.0) * _csqrt(s - f)
    return LiouvillianDiscriminants(d=d, f=f, s=s, e_plus=e_plus, e_minus=e_minus)


def liouvillian_eigenvalues_closed(p: SystemParams) -> np.ndarray:
    """All 16 eigenvalues of the two-photon-truncated generator.

    Index order: 0 stationary; 1, 2 and 8, 9 the one-excitation branches;
    3, 4 the slow/fast population pair; 5, 6 the degenerate central pair;
    7 the two-photon coherence; 10 the fastest population mode; 11-15 the
    conjugates of 1, 2, 7, 8, 9.
    """
    w = p.omega_c
    ap = p.gain + p.loss_sum
    disc = liouvillian_discriminants(p)
    half = -0.5 * ap
    lam = np.empty(16, dtype=complex)
    lam[0] = 0.0
    lam[1] = 1j * w + half + 0.25 * disc.e_plus
    lam[2] = 1j * w + half + 0.25 * disc.e_minus
    lam[3] = -0.5 * (ap + disc.d)
    lam[4] = -0.5 * (ap - disc.d)
    lam[5] = half
    lam[6] = half
    lam[7] = 2j * w + half
    lam[8] = 1j * w + half - 0.25 * disc.e_plus
    lam[9] = 1j * w + half - 0.25 * disc.e_minus
    lam[10] = -ap
    lam[11] = np.conj(lam[1])
    lam[12] = np.conj(lam[2])
    lam[13] = np.conj(lam[7])
    lam[14] = np.conj(lam[8])
    lam[15] = np.conj(lam[9])
    return lam


def steady_matrix_closed(p: SystemParams, normalized: bool = True) -> np.ndarray:
    """Stationary density matrix of the truncated generator (closed form)."""
    a, l1, l2 = _params_abc(p)
    k2 = p.kappa**2
    ls = p.loss_sum
    ap = a + ls
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = l1 * l2 * ap**2 + 4.0 * k2 * ls**2
    rho[1, 1] = 4.0 * a * k2 * ls
    rho[2, 2] = a * (l2 * ap**2 + 4.0 * k2 * ls)
    rho[3, 3] = 4.0 * a**2 * k2
    rho[1, 2] = rho[2, 1] = 2.0 * a * l2 * p.kappa * ap
    if not normalized:
        return rho
    norm = ap**2 * (4.0 * k2 + l2 * (a + l1))
    return rho / norm


@dataclass(frozen=True)
class EigenmatrixCatalog:
    """Closed-form eigenvalues and eigenmatrices, aligned by index."""

    eigenvalues: np.ndarray
    matrices: list[np.ndarray]
    steady_norm: float


def _population_pair_matrix(p: SystemParams, s: float, d: complex) -> np.ndarray:
    a, l1, l2 = _params_abc(p)
    k2 = p.kappa**2
    am = a + p.loss_diff
    ls = p.loss_sum
    ld = p.loss_diff
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = -l2 * am**2 - 8.0 * k2 * ld - s * l2 * am * d
    rho[1, 1] = -4.0 * k2 * (a - ls) - s * 4.0 * k2 * d
    rho[2, 2] = (l2 * am**2 - 4.0 * k2 * (a - l1 + 3.0 * l2)
                 + s * (l2 * am + 4.0 * k2) * d)
    rho[3, 3] = 8.0 * a * k2
    coh = -2.0 * p.kappa * (l2 * am + 8.0 * k2) - s * 2.0 * p.kappa * l2 * d
    rho[1, 2] = rho[2, 1] = coh
    return rho


def _central_matrix(p: SystemParams) -> np.ndarray:
    a, l1, l2 = _params_abc(p)
    k2 = p.kappa**2
    ls = p.loss_sum
    ld = p.loss_diff
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = -8.0 * ls * k2
    rho[1, 1] = -4.0 * k2 * (a - ls)
    rho[2, 2] = -4.0 * k2 * (a - ls)
    rho[3, 3] = 8.0 * a * k2
    rho[1, 2] = rho[2, 1] = -p.kappa * (4.0 * a * l1 + (a - ls) * (a - ld))
    return rho


def _coherence_branch_matrix(p: SystemParams, s_e: float, s_f: float) -> np.ndarray:
    """One-excitation-imbalance eigenmatrices (entries above the diagonal)."""
    a, l1, l2 = _params_abc(p)
    k = p.kappa
    disc = liouvillian_discriminants(p)
    f = s_f * disc.f
    e = np.sqrt(2.0) * _csqrt(disc.s + f)
    e = s_e * e
    ls = p.loss_sum
    ap = a + ls
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 1] = 4.0 * k * (e * (ls - a) + f + ap**2 - 4.0 * a * l2)
    rho[0, 2] = (e * (l2**2 - (a + l1) ** 2 + f) + 2.0 * l2 * f
                 + 2.0 * l2 * (l2**2 - (a + l1) ** 2) + 16.0 * k**2 * (a - ls))
    rho[1, 3] = 32.0 * a * k**2
    rho[2, 3] = 8.0 * a * k * (2.0 * l2 + e)
    return rho


def eigenmatrix_catalog(p: SystemParams) -> EigenmatrixCatalog:
    """All 16 closed-form eigenmatrices of the truncated generator.

    The stationary entry (index 0) is unnormalized; divide by steady_norm for
    the trace-one state.  Entries 5 and 6 span the doubly degenerate central
    eigenvalue; at the third-order EP entry 3 and 4 both collapse onto a
    multiple of entry 5.
    """
    a, l1, l2 = _params_abc(p)
    lam = liouvillian_eigenvalues_closed(p)
    disc = liouvillian_discriminants(p)

    rho6 = np.zeros((4, 4), dtype=complex)
    rho6[1, 2] = -1j
    rho6[2, 1] = 1j

    rho7 = np.zeros((4, 4), dtype=complex)
    rho7[0, 3] = 1.0

    rho10 = np.diag([1.0, -1.0, -1.0, 1.0]).astype(complex)

    mats: list[np.ndarray] = [None] * 16
    mats[0] = steady_matrix_closed(p, normalized=False)
    mats[1] = _coherence_branch_matrix(p, +1.0, +1.0)
    mats[2] = _coherence_branch_matrix(p, +1.0, -1.0)
    mats[3] = _population_pair_matrix(p, +1.0, disc.d)
    mats[4] = _population_pair_matrix(p, -1.0, disc.d)
    mats[5] = _central_matrix(p)
    mats[6] = rho6
    mats[7] = rho7
    mats[8] = _coherence_branch_matrix(p, -1.0, +1.0)
    mats[9] = _coherence_branch_matrix(p, -1.0, -1.0)
    mats[10] = rho10
    for i, j in ((11, 1), (12, 2), (13, 7), (14, 8), (15, 9)):
        mats[i] = mats[j].conj().T

    ap = a + p.loss_sum
    norm = ap**2 * (4.0 * p.kappa**2 + l2 * (a + l1))
    return EigenmatrixCatalog(eigenvalues=lam, matrices=mats, steady_norm=norm)


# ---------------------------------------------------------------------------
# eigenstates of the eigenmatrices (single-excitation 2x2 blocks)


def _embed_pair(x01: complex, x10: complex) -> np.ndarray:
    out = np.zeros(4, dtype=complex)
    out[1] = x01
    out[2] = x10
    return out


def population_pair_eigenstates(p: SystemParams) -> dict[str, list[np.ndarray]]:
    """Eigenstates of the slow/fast population eigenmatrices.

    Below the third-order EP (real discriminant) each of the two Hermitian
    matrices has central-block eigenstates

        (x01, x10) = (s D +- |a_minus|, 4 kappa),   s = +1 slow, -1 fast.

    Above the EP the pair is mutually adjoint; the Hermitian symmetric and
    antisymmetric combinations have eigenstates

        sym:  (2 h, l2 D^2 +- sqrt(4 h^2 + l2^2 D^4)),
              h = -2 kappa (l2 a_minus + 8 kappa^2)
        anti: (-4 kappa l2, l2 a_minus + 8 kappa^2
                             +- sqrt(16 kappa^2 l2^2 + (l2 a_minus + 8 kappa^2)^2))

    with D^2 = a_minus^2 - 16 kappa^2 < 0 there.
    """
    a = p.gain
    l2 = p.loss2
    am = a + p.loss_diff
    k = p.kappa
    d2 = (am - 4.0 * k) * (am + 4.0 * k)
    out: dict[str, list[np.ndarray]] = {}
    if d2 >= 0:
        d = np.sqrt(d2)
        for name, s in (("slow", 1.0), ("fast", -1.0)):
            out[name] = [
                _embed_pair(s * d + abs(am), 4.0 * k),
                _embed_pair(s * d - abs(am), 4.0 * k),
            ]
    else:
        h = -2.0 * k * (l2 * am + 8.0 * k**2)
        r_sym = np.sqrt(4.0 * h**2 + l2**2 * d2**2)
        out["sym"] = [
            _embed_pair(2.0 * h, l2 * d2 + r_sym),
            _embed_pair(2.0 * h, l2 * d2 - r_sym),
        ]
        q = l2 * am + 8.0 * k**2
        r_anti = np.sqrt(16.0 * k**2 * l2**2 + q**2)
        out["anti"] = [
            _embed_pair(-4.0 * k * l2, q + r_anti),
            _embed_pair(-4.0 * k * l2, q - r_anti),
        ]
    return out


def central_eigenstates(p: SystemParams) -> dict[str, list[np.ndarray]]:
    """Central-block eigenstates of the degenerate pair: |01> +- |10> for the
    symmetric member, |01> +- i |10> for the antisymmetric one."""
    s = 1.0 / np.sqrt(2.0)
    return {
        "sym": [_embed_pair(s, s), _embed_pair(s, -s)],
        "anti": [_embed_pair(s, 1j * s), _embed_pair(s, -1j * s)],
    }


# ---------------------------------------------------------------------------
# pseudo-eigenmatrices (Jordan chain) at the third-order EP


def _solve_fractions(rows: list[list[Fraction]], rhs: list[Fraction]) -> list[Fraction] | None:
    """Exact Gaussian elimination; None when the system is singular."""
    n = len(rows)
    m = [row[:] + [rhs[i]] for i, row in enumerate(rows)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if m[r][col] != 0), None)
        if pivot is None:
            return None
        m[col], m[pivot] = m[pivot], m[col]
        inv = m[col][col]
        m[col] = [x / inv for x in m[col]]
        for r in range(n):
            if r != col and m[r][col] != 0:
                factor = m[r][col]
                m[r] = [x - factor * y for x, y in zip(m[r], m[col])]
    return [m[i][n] for i in range(n)]


def _coords_to_matrix(coords) -> np.ndarray:
    c = [float(x) for x in coords]
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = c[0]
    rho[1, 1] = c[1]
    rho[2, 2] = c[2]
    rho[3, 3] = c[3]
    rho[1, 2] = rho[2, 1] = c[4]
    return rho


@dataclass(frozen=True)
class PseudoEigenmatrixChain:
    """Jordan chain of the triply degenerate eigenvalue at the third-order EP.

    (L - lam) first = chain_scale * eigenmatrix, (L - lam) second = first.
    The second member is fixed by the gauge <eigenmatrix, second>_HS = 0.
    """

    eigenvalue: float
    eigenmatrix: np.ndarray
    first: np.ndarray
    second: np.ndarray
    chain_scale: float


def pseudo_eigenmatrices(p: SystemParams, tol: float = 1e-8) -> PseudoEigenmatrixChain:
    """Closed-form generalized eigenmatrices at the third-order EP.

    The first member is an explicit catalog entry; the second is obtained by
    solving the (singular) chain equation exactly over the rationals, with
    one redundant row of the symmetric-sector block replaced by the gauge
    condition.  Raises when kappa is not at the EP.
    """
    lep = lep1_kappa(p)
    if abs(p.kappa - lep) > tol * max(1.0, lep):
        raise ValueError(f"kappa={p.kappa} is not at the third-order EP {lep}")

    a = Fraction(p.gain)
    l1 = Fraction(p.loss1)
    l2 = Fraction(p.loss2)
    k = (a + l1 - l2) / 4  # exact EP coupling
    ap = a + l1 + l2
    ls = l1 + l2

    # symmetric zero-imbalance block minus the EP eigenvalue, coordinates
    # (d00, d01, d10, d11, coherence)
    n5 = [
        [-a + ap / 2, l2, l1, Fraction(0), Fraction(0)],
        [Fraction(0), -a - l2 + ap / 2, Fraction(0), l1, 2 * k],
        [a, Fraction(0), -l1 + ap / 2, l2, -2 * k],
        [Fraction(0), a, Fraction(0), -ls + ap / 2, Fraction(0)],
        [Fraction(0), -k, k, Fraction(0), Fraction(0)],
    ]
    am = a + l1 - l2
    rho5 = [
        -8 * ls * k**2,
        -4 * k**2 * (a - ls),
        -4 * k**2 * (a - ls),
        8 * a * k**2,
        -k * (4 * a * l1 + (a - ls) * (a - l1 + l2)),
    ]
    first = [
        2 * l2 * am - 2 * ls,
        am**2 / 2 - (a - ls),
        -(ap**2) / 2 + 2 * l2**2 - (a - ls),
        2 * a,
        l2 * am - ap,
    ]
    # chain scale: (L - lam) first = c * rho5, fixed by any coordinate where
    # rho5 is nonzero (use the last diagonal: 8 A k^2)
    lhs = sum(n5[3][j] * first[j] for j in range(5))
    scale = lhs / rho5[3]

    gauge = [rho5[0], rho5[1], rho5[2], rho5[3], 2 * rho5[4]]
    second = None
    for replaced in range(5):
        rows = [gauge if i == replaced else n5[i] for i in range(5)]
        rhs = [Fraction(0) if i == replaced else first[i] for i in range(5)]
        sol = _solve_fractions(rows, rhs)
        if sol is None:
            continue
        if all(sum(n5[i][j] * sol[j] for j in range(5)) == first[i] for i in range(5)):
            second = sol
            break
    if second is None:  # pragma: no cover - the block is always rank deficient by 1
        raise ArithmeticError("chain equation for the second pseudo-eigenmatrix is inconsistent")

    return PseudoEigenmatrixChain(
        eigenvalue=-float(ap) / 2.0,
        eigenmatrix=_coords_to_matrix(rho5),
        first=_coords_to_matrix(first),
        second=_coords_to_matrix(second),
        chain_scale=float(scale),
    )


def pseudo_eigenstates(p: SystemParams) -> list[np.ndarray]:
    """Central-block eigenstates of the first pseudo-eigenmatrix at the EP."""
    chain = pseudo_eigenmatrices(p)
    b = chain.first[1, 1].real
    c = chain.first[2, 2].real
    alpha = chain.first[1, 2].real
    r = np.sqrt(4.0 * alpha**2 + (b - c) ** 2)
    return [
        _embed_pair(2.0 * alpha, (c - b) + r),
        _embed_pair(2.0 * alpha, (c - b) - r),
    ]
