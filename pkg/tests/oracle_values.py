"""Independent high-precision oracle for the closed-form constants under test.

Everything here is computed with mpmath from the defining rate combinations,
deliberately NOT importing the package, so the frozen literals in the test
files have a provenance that cannot be contaminated by the code they check.

Run ``python3 tests/oracle_values.py`` to reprint the table; the literals in
``test_analytic.py`` / ``test_acceptance.py`` were copied from this output.
"""

import mpmath as mp

mp.mp.dps = 40

# mirror rates shared by every parameter set: cavity losses 30 / 0.1 plus
# unit absorption in both arms
C1, C2, G1, G2 = mp.mpf(30), mp.mpf("0.1"), mp.mpf(1), mp.mpf(1)
L1, L2 = C1 + G1, C2 + G2           # 31, 1.1
LS, LD = L1 + L2, L1 - L2           # 32.1, 29.9


def ep_couplings(a):
    """(drift EP, third-order EP, second-order EP) for pump rate a."""
    hep = abs(a - LD) / 4
    lep1 = abs(a + LD) / 4
    ap = a + LS
    lep2 = abs((a + L1) ** 2 - L2**2) / (4 * mp.sqrt(ap**2 - 8 * a * L2))
    return hep, lep1, lep2


def spectral_bifurcations(a):
    g = a - L1
    inner = mp.sqrt((g - L2) ** 2 + L2**2) + (g - L2)
    k1 = mp.sqrt(L2) * mp.sqrt(inner) / 2
    k2 = mp.sqrt(2) * mp.sqrt(g**2 + L2**2) / 4
    return k1, k2


def steady_moments(a, kappa):
    g = a - L1
    f = (4 * kappa**2 - g * L2) * (L2 - g)
    n1 = a * (4 * kappa**2 - g * L2 + L2**2) / f
    n2 = 4 * kappa**2 * a / f
    cross = 2 * kappa * L2 * a / f
    return n1, n2, cross


def coherence_branch_decay(a, kappa):
    """Real parts of the one-excitation-imbalance eigenvalue branches."""
    ap = a + LS
    am = a + LD
    f = mp.sqrt(ap**2 * am**2 + 16 * kappa**2 * (8 * a * L2 - ap**2))
    s = (a + L1) ** 2 + L2**2 - 8 * kappa**2
    e_plus = mp.sqrt(2) * mp.sqrt(s + f)
    e_minus = mp.sqrt(2) * mp.sqrt(s - f)
    lam1 = -ap / 2 + e_plus / 4
    lam2 = -ap / 2 + e_minus / 4
    d = mp.sqrt((am - 4 * kappa) * (am + 4 * kappa))
    lam3 = -(ap + d) / 2
    return lam1, lam2, lam3


def main():
    fmt = lambda x: mp.nstr(x, 17)
    for a in (mp.mpf("30.1"), mp.mpf("0.5"), mp.mpf("0.01")):
        hep, lep1, lep2 = ep_couplings(a)
        print(f"pump {fmt(a)}: hep={fmt(hep)} lep1={fmt(lep1)} lep2={fmt(lep2)}")
    k1, k2 = spectral_bifurcations(mp.mpf("30.1"))
    print(f"bifurcations (pump 30.1): k1={fmt(k1)} k2={fmt(k2)}")
    for kappa in (mp.mpf(0), mp.mpf("0.3"), mp.mpf(50)):
        n1, n2, cross = steady_moments(mp.mpf("30.1"), kappa)
        print(f"steady (pump 30.1, kappa {fmt(kappa)}): "
              f"n1={fmt(n1)} n2={fmt(n2)} cross={fmt(cross)}")
    print(f"steady limit kappa->inf (pump 30.1): {fmt(mp.mpf('30.1') / 2)}")
    l1_, l2_, l3_ = coherence_branch_decay(mp.mpf("0.01"), mp.mpf("7.3"))
    print(f"branch decay rates (pump 0.01, kappa 7.3): "
          f"{fmt(l1_)} {fmt(l2_)} {fmt(l3_)}")


if __name__ == "__main__":
    main()
