"""Closed-form layer against frozen oracle values and the numeric generator.

The literal constants below come from tests/oracle_values.py (mpmath, 40
significant digits), not from the package itself.
"""

import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import CUT2, MID, STRONG, WEAK, matched_distance
from epdimer import assemble, build_generator
from epdimer.analytic import (
    central_eigenstates,
    coalesced_drift_state,
    coalesced_nhh_state,
    drift_discriminant,
    drift_eigenvalues,
    drift_eigenvectors,
    eigenmatrix_catalog,
    hep_kappa,
    is_stable,
    lep1_kappa,
    lep2_kappa,
    liouvillian_eigenvalues_closed,
    nhh_eigenvalues_closed,
    nhh_eigenvectors_closed,
    nhh_matrix_closed,
    population_pair_eigenstates,
    pseudo_eigenmatrices,
    pseudo_eigenstates,
    spectra_closed,
    spectral_bifurcations,
    spectral_peaks,
    stability_factor,
    steady_matrix_closed,
    steady_moments_closed,
    ttcf_at_ep_closed,
    ttcf_closed,
    ttcf_coefficients,
    ttcf_ep_constants,
)
from epdimer.dynamics import amplitude_drift, ttcf_semiclassical
from epdimer.model import SystemParams, build_effective_hamiltonian
from epdimer.spectral import coalescence_metric, steady_state

REL = 1e-12


@pytest.mark.parametrize("params,hep,lep1,lep2", [
    (STRONG, 0.05, 15.0, 15.541454549350891),
    (MID, 7.35, 7.6, 7.615781641596096),
    (WEAK, 7.4725, 7.4775, 7.4778191216643462),
])
def test_ep_couplings_frozen(params, hep, lep1, lep2):
    assert hep_kappa(params) == pytest.approx(hep, rel=REL)
    assert lep1_kappa(params) == pytest.approx(lep1, rel=REL)
    assert lep2_kappa(params) == pytest.approx(lep2, rel=REL)


def test_lep2_absent_when_radicand_closes():
    p = SystemParams(kappa=0.5, gain=4.0, c1=0.05, c2=3.5, gamma1=0.05, gamma2=0.5)
    with pytest.raises(ValueError, match="no real second"):
        lep2_kappa(p)


def test_spectral_bifurcations_frozen():
    k1, k2 = spectral_bifurcations(STRONG)
    assert k1 == pytest.approx(0.27874571131809904, rel=REL)
    assert k2 == pytest.approx(0.50249378105604451, rel=REL)


@pytest.mark.parametrize("kappa,n1,n2,cross", [
    (0.0, 33.444444444444444, 0.0, 0.0),
    (0.3, 28.539259259259259, 4.0133333333333333, 7.3577777777777778),
    (50.0, 15.051820869733896, 15.048510197490448, 0.16553361217239493),
])
def test_steady_moments_frozen(kappa, n1, n2, cross):
    m = steady_moments_closed(STRONG.with_kappa(kappa))
    assert m.n1 == pytest.approx(n1, rel=REL, abs=1e-15)
    assert m.n2 == pytest.approx(n2, rel=REL, abs=1e-15)
    assert m.cross == pytest.approx(cross, rel=REL, abs=1e-15)


def test_steady_moments_reach_the_strong_coupling_plateau():
    m = steady_moments_closed(STRONG.with_kappa(50.0))
    assert abs(m.n1 - 15.05) / 15.05 < 0.01
    assert abs(m.n2 - 15.05) / 15.05 < 0.01


def test_stability_guards():
    # gain above the total loss: fails the threshold condition outright
    above = SystemParams(kappa=0.3, gain=33.0, c1=30.0, c2=0.1,
                         gamma1=1.0, gamma2=1.0)
    assert not is_stable(above)
    # gain below total loss but with diverging second moments
    soft = SystemParams(kappa=0.3, gain=32.0, c1=30.0, c2=0.1,
                        gamma1=1.0, gamma2=1.0)
    assert stability_factor(soft) < 0
    assert not is_stable(soft)
    for bad in (above, soft):
        with pytest.raises(ValueError, match="above threshold"):
            steady_moments_closed(bad)
        with pytest.raises(ValueError, match="stable"):
            ttcf_coefficients(bad)
        with pytest.raises(ValueError, match="stable"):
            spectra_closed(bad, np.linspace(-1, 1, 5))


def test_drift_eigenvalues_match_the_moment_matrix():
    for p in (STRONG, WEAK, MID, STRONG.with_kappa(7.0)):
        nus = drift_eigenvalues(p)
        numeric = np.linalg.eigvals(amplitude_drift(p))
        # amplitudes evolve with generator -i nu
        assert matched_distance(-1j * np.array(nus), numeric) < 1e-12


def test_drift_eigenvectors_solve_the_pencil():
    p = STRONG.with_kappa(0.8)
    m = amplitude_drift(p)
    for nu, v in zip(drift_eigenvalues(p), drift_eigenvectors(p)):
        assert np.linalg.norm(m @ v - (-1j * nu) * v) < 1e-12 * np.linalg.norm(v)


def test_drift_discriminant_vanishes_exactly_at_the_ep():
    for p in (STRONG, WEAK, MID):
        at = p.with_kappa(hep_kappa(p))
        assert drift_discriminant(at) == 0.0


def test_coalesced_drift_state_sign_rule():
    # gain above the loss asymmetry: symmetric combination
    plus = coalesced_drift_state(STRONG.with_kappa(hep_kappa(STRONG)))
    assert_allclose(plus, np.array([1.0, 1.0]) / np.sqrt(2))
    # gain below: antisymmetric
    minus = coalesced_drift_state(WEAK.with_kappa(hep_kappa(WEAK)))
    assert_allclose(minus, np.array([1.0, -1.0]) / np.sqrt(2))
    # and both eigenvectors really collapse onto that ray at the EP
    for p in (STRONG, WEAK):
        at = p.with_kappa(hep_kappa(p))
        target = coalesced_drift_state(at)
        for v in drift_eigenvectors(at):
            assert coalescence_metric(v, target) == pytest.approx(1.0, abs=1e-12)


def test_ttcf_coefficients_sum_rules():
    for p in (STRONG, STRONG.with_kappa(0.02), WEAK, MID):
        m = steady_moments_closed(p)
        c = ttcf_coefficients(p)
        assert complex(c.u_plus + c.u_minus) == pytest.approx(m.n1, rel=1e-10)
        assert complex(c.v_plus + c.v_minus) == pytest.approx(m.n2, rel=1e-10)


def test_ttcf_coefficients_reject_the_defective_point():
    with pytest.raises(ValueError, match="defective"):
        ttcf_coefficients(STRONG.with_kappa(hep_kappa(STRONG)))


def test_ttcf_closed_matches_semiclassical_integration():
    tau = np.linspace(0.0, 8.0, 400)
    for p in (STRONG, WEAK):
        c1, c2 = ttcf_closed(p, tau)
        series = ttcf_semiclassical(p, tau)
        assert np.max(np.abs(c1 - series.active)) < 1e-9
        assert np.max(np.abs(c2 - series.passive)) < 1e-9


def test_ttcf_lab_frame_phase():
    p = SystemParams(kappa=0.3, gain=30.1, c1=30.0, c2=0.1, gamma1=1.0,
                     gamma2=1.0, omega_c=2.0)
    tau = np.linspace(0.0, 3.0, 50)
    rot1, _ = ttcf_closed(p, tau, frame="rotating")
    lab1, _ = ttcf_closed(p, tau, frame="lab")
    assert_allclose(lab1, rot1 * np.exp(-2j * tau), atol=1e-12)
    with pytest.raises(ValueError, match="frame"):
        ttcf_closed(p, tau, frame="galilean")


def test_ttcf_ep_form():
    at = STRONG.with_kappa(hep_kappa(STRONG))
    m = steady_moments_closed(at)
    c = ttcf_ep_constants(at)
    assert c.p1 == pytest.approx(m.n1, rel=1e-10)
    assert c.p2 == pytest.approx(m.n2, rel=1e-10)
    c1, c2 = ttcf_at_ep_closed(at, np.array([0.0]))
    assert complex(c1[0]) == pytest.approx(m.n1, rel=1e-10)
    assert complex(c2[0]) == pytest.approx(m.n2, rel=1e-10)
    with pytest.raises(ValueError, match="not at the drift EP"):
        ttcf_at_ep_closed(STRONG, np.array([0.0]))


def test_ttcf_ep_form_is_the_limit_of_the_generic_one():
    at = STRONG.with_kappa(hep_kappa(STRONG))
    near = STRONG.with_kappa(hep_kappa(STRONG) + 1e-7)
    tau = np.linspace(0.0, 20.0, 101)
    e1, e2 = ttcf_at_ep_closed(at, tau)
    g1, g2 = ttcf_closed(near, tau)
    assert np.max(np.abs(e1 - g1)) < 1e-4
    assert np.max(np.abs(e2 - g2)) < 1e-4


def test_spectra_closed_sum_rule():
    # the emission spectrum integrates to the mode occupation; the active
    # mode has 1/delta^2 tails, so the window must be generous
    for p in (STRONG, STRONG.with_kappa(0.7)):
        m = steady_moments_closed(p)
        d = np.linspace(-600.0, 600.0, 400001)
        s1, s2 = spectra_closed(p, d)
        assert np.trapezoid(s1, d) == pytest.approx(m.n1, rel=1e-3)
        assert np.trapezoid(s2, d) == pytest.approx(m.n2, rel=1e-3)


def test_spectral_peaks_track_the_bifurcations():
    k1, k2 = spectral_bifurcations(STRONG)
    below = spectral_peaks(STRONG.with_kappa(0.9 * k1))
    assert below[0][0] == pytest.approx(below[0][1], abs=1e-12)  # single line
    above = spectral_peaks(STRONG.with_kappa(1.1 * k2))
    assert above[0][0] > above[0][1]
    assert above[1][0] > above[1][1]
    # peak offsets open as the coupling crosses each threshold
    mid = spectral_peaks(STRONG.with_kappa(0.5 * (k1 + k2)))
    assert mid[0][0] > mid[0][1]          # active mode already split
    assert mid[1][0] == pytest.approx(mid[1][1], abs=1e-12)  # passive not yet


def test_spectral_peaks_sit_on_spectrum_maxima():
    p = STRONG.with_kappa(0.8)
    (a_hi, a_lo), (p_hi, p_lo) = spectral_peaks(p)
    d = np.linspace(-3.0, 3.0, 120001)
    s1, s2 = spectra_closed(p, d)
    assert abs(d[np.argmax(s1)] - a_hi) < 1e-4 or abs(d[np.argmax(s1)] - a_lo) < 1e-4
    assert abs(d[np.argmax(s2)] - p_hi) < 1e-4 or abs(d[np.argmax(s2)] - p_lo) < 1e-4


@pytest.mark.parametrize("params", [STRONG, WEAK, MID])
def test_liouvillian_eigenvalues_match_numerics(params):
    sup = assemble(build_generator(params, CUT2))
    numeric = np.linalg.eigvals(sup.dense())
    closed = liouvillian_eigenvalues_closed(params)
    scale = np.max(np.abs(numeric))
    assert matched_distance(closed, numeric) < 1e-9 * scale


def test_eigenmatrix_catalog_residuals():
    for params in (STRONG, WEAK):
        sup = assemble(build_generator(params, CUT2))
        cat = eigenmatrix_catalog(params)
        for lam, rho in zip(cat.eigenvalues, cat.matrices):
            scale = np.max(np.abs(rho))
            assert scale > 0
            res = np.max(np.abs(sup.apply(rho) - lam * rho))
            assert res < 1e-9 * scale * max(1.0, abs(lam))
        steady = cat.matrices[0] / cat.steady_norm
        assert np.trace(steady).real == pytest.approx(1.0, abs=1e-12)


def test_steady_matrix_closed_matches_numerics():
    for params in (STRONG, WEAK, MID):
        sup = assemble(build_generator(params, CUT2))
        closed = steady_matrix_closed(params)
        assert np.trace(closed).real == pytest.approx(1.0, abs=1e-12)
        assert np.min(np.linalg.eigvalsh(closed)) > -1e-12
        assert np.max(np.abs(closed - steady_state(sup))) < 1e-10


def _central_block(m):
    return np.array([[m[1, 1], m[1, 2]], [m[2, 1], m[2, 2]]])


def test_population_pair_eigenstates_below_the_ep():
    p = WEAK.with_kappa(7.0)  # below lep1 = 7.4775: real discriminant
    states = population_pair_eigenstates(p)
    assert set(states) == {"slow", "fast"}
    cat = eigenmatrix_catalog(p)
    for name, idx in (("slow", 3), ("fast", 4)):
        block = _central_block(cat.matrices[idx])
        _, vecs = np.linalg.eigh(block)
        for ket in states[name]:
            pair = ket[[1, 2]]
            best = max(coalescence_metric(pair, v) for v in vecs.T)
            assert best == pytest.approx(1.0, abs=1e-10)


def test_population_pair_eigenstates_above_the_ep():
    p = WEAK.with_kappa(7.56)  # above lep1: conjugate pair
    states = population_pair_eigenstates(p)
    assert set(states) == {"sym", "anti"}
    cat = eigenmatrix_catalog(p)
    r3, r4 = cat.matrices[3], cat.matrices[4]
    assert np.max(np.abs(r4 - r3.conj().T)) < 1e-9 * np.max(np.abs(r3))
    combos = {"sym": r3 + r3.conj().T, "anti": 1j * (r3 - r3.conj().T)}
    for name, herm in combos.items():
        _, vecs = np.linalg.eigh(_central_block(herm))
        for ket in states[name]:
            pair = ket[[1, 2]]
            best = max(coalescence_metric(pair, v) for v in vecs.T)
            assert best == pytest.approx(1.0, abs=1e-10)


def test_central_eigenstates():
    states = central_eigenstates(WEAK)
    cat = eigenmatrix_catalog(WEAK)
    for name, idx in (("sym", 5), ("anti", 6)):
        _, vecs = np.linalg.eigh(_central_block(cat.matrices[idx]))
        for ket in states[name]:
            pair = ket[[1, 2]]
            best = max(coalescence_metric(pair, v) for v in vecs.T)
            assert best == pytest.approx(1.0, abs=1e-10)
    # and they are the advertised Bell-type combinations
    s = 1 / np.sqrt(2)
    assert_allclose(states["sym"][0][[1, 2]], [s, s])
    assert_allclose(states["anti"][0][[1, 2]], [s, 1j * s])


def test_pseudo_eigenmatrix_chain_identities():
    for base in (STRONG, WEAK):
        p = base.with_kappa(lep1_kappa(base))
        chain = pseudo_eigenmatrices(p)
        sup = assemble(build_generator(p, CUT2))
        lam = chain.eigenvalue
        scale = np.max(np.abs(chain.eigenmatrix))

        def shifted(rho):
            return sup.apply(rho) - lam * rho

        assert np.max(np.abs(shifted(chain.eigenmatrix))) < 1e-9 * scale * abs(lam)
        res1 = shifted(chain.first) - chain.chain_scale * chain.eigenmatrix
        assert np.max(np.abs(res1)) < 1e-9 * scale * abs(lam)
        res2 = shifted(chain.second) - chain.first
        assert np.max(np.abs(res2)) < 1e-9 * max(1.0, np.max(np.abs(chain.first)))
        # gauge: the tail is Hilbert-Schmidt orthogonal to the eigenmatrix
        overlap = np.vdot(chain.eigenmatrix, chain.second)
        assert abs(overlap) < 1e-9 * scale * np.max(np.abs(chain.second))


def test_pseudo_eigenmatrices_reject_off_ep():
    with pytest.raises(ValueError, match="not at the third-order EP"):
        pseudo_eigenmatrices(WEAK)


def test_pseudo_eigenstates_diagonalize_the_first_tail():
    p = WEAK.with_kappa(lep1_kappa(WEAK))
    chain = pseudo_eigenmatrices(p)
    _, vecs = np.linalg.eigh(_central_block(chain.first))
    for ket in pseudo_eigenstates(p):
        pair = ket[[1, 2]]
        best = max(coalescence_metric(pair, v) for v in vecs.T)
        assert best == pytest.approx(1.0, abs=1e-10)


def test_nhh_matrix_matches_effective_hamiltonian():
    for p in (STRONG, WEAK, MID):
        closed = nhh_matrix_closed(p)
        numeric = build_effective_hamiltonian(p, CUT2)
        assert np.max(np.abs(closed - numeric)) < 1e-13


def test_nhh_eigensystem():
    p = WEAK.with_kappa(7.0)
    m = nhh_matrix_closed(p)
    vals = nhh_eigenvalues_closed(p)
    vecs = nhh_eigenvectors_closed(p)
    assert matched_distance(vals, np.linalg.eigvals(m)) < 1e-12 * np.max(np.abs(vals))
    for nu, v in zip(vals, vecs):
        assert np.linalg.norm(m @ v - nu * v) < 1e-11 * np.linalg.norm(v)


def test_coalesced_nhh_state():
    at = WEAK.with_kappa(hep_kappa(WEAK))
    target = coalesced_nhh_state(at)
    # weak pumping: antisymmetric single-excitation ray
    assert_allclose(target[[1, 2]] * np.sqrt(2), [-1.0, 1.0], atol=1e-12)
    for v in nhh_eigenvectors_closed(at)[1:3]:
        assert coalescence_metric(v, target) == pytest.approx(1.0, abs=1e-12)
