import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import CUT2, WEAK
from epdimer import assemble, build_generator
from epdimer.spectral import (
    Superoperator,
    coalescence_metric,
    decompose_eigenmatrix,
    eig_decompose,
    estimate_ep_order,
    jordan_chain,
    steady_state,
)


def random_matrix(d, seed):
    rng = np.random.default_rng(seed)
    return rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))


def defective_matrix(lam=-1.0 + 0.5j, seed=3):
    """Similarity-conjugated Jordan form: one 3-block plus simple eigenvalues."""
    j = np.diag([lam, lam, lam, -4.0, -5.0 + 1j]).astype(complex)
    j[0, 1] = j[1, 2] = 1.0
    rng = np.random.default_rng(seed)
    t = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    return t @ j @ np.linalg.inv(t), t


def test_biorthonormality_on_random_matrix():
    dec = eig_decompose(random_matrix(12, 0), kind="matrix")
    assert dec.biorthonormality_residual() < 1e-8
    assert not dec.any_defective


def test_sort_order():
    dec = eig_decompose(random_matrix(15, 1), kind="matrix")
    w = dec.eigenvalues
    assert np.all(np.diff(w.real) <= 1e-12)
    ties = np.abs(np.diff(w.real)) < 1e-12
    assert np.all(np.diff(w.imag)[ties] <= 1e-12)


def test_liouvillian_kind_devectorizes(sup_weak):
    dec = eig_decompose(sup_weak)
    d = sup_weak.dim
    assert all(r.shape == (d, d) for r in dec.right)
    assert all(l.shape == (d, d) for l in dec.left)
    assert dec.biorthonormality_residual() < 1e-8
    # each right eigenmatrix really solves L[rho] = lambda rho
    for lam, rho in zip(dec.eigenvalues[:4], dec.right[:4]):
        assert np.max(np.abs(sup_weak.apply(rho) - lam * rho)) < 1e-8


def test_invalid_kind_and_shape():
    with pytest.raises(ValueError):
        eig_decompose(np.eye(4), kind="banana")
    with pytest.raises(ValueError):
        eig_decompose(np.ones((2, 3)), kind="matrix")


def test_defective_cluster_is_flagged():
    m, _ = defective_matrix()
    dec = eig_decompose(m, kind="matrix", cluster_tol=1e-4)
    flagged = [c for c, bad in zip(dec.clusters, dec.cluster_defective) if bad]
    assert len(flagged) == 1
    assert len(flagged[0]) == 3
    assert dec.cluster_of(flagged[0][0]) == flagged[0]
    with pytest.raises(ValueError):
        dec.cluster_of(99)


def test_steady_state_properties(sup_weak):
    rho = steady_state(sup_weak)
    assert np.trace(rho).real == pytest.approx(1.0, abs=1e-12)
    assert_allclose(rho, rho.conj().T, atol=1e-12)
    assert np.min(np.linalg.eigvalsh(rho)) > -1e-12
    assert np.max(np.abs(sup_weak.apply(rho))) < 1e-10


def test_steady_state_no_zero_eigenvalue(sup_weak):
    shifted = Superoperator(
        matrix=sup_weak.dense() - 0.5 * np.eye(sup_weak.dim ** 2),
        dim=sup_weak.dim)
    with pytest.raises(ValueError, match="no zero eigenvalue"):
        steady_state(shifted)


def test_steady_state_traceless_kernel():
    # kernel spanned by |1><0|: a traceless "stationary" direction
    m = np.diag([-1.0, 0.0, -2.0, -3.0]).astype(complex)
    with pytest.raises(ValueError, match="traceless"):
        steady_state(Superoperator(matrix=m, dim=2))


def test_steady_state_nonhermitian_kernel():
    v = np.array([1.0, 0.0, 0.5, 0.0], dtype=complex)  # rho = [[1, .5], [0, 0]]
    m = np.outer(v, v.conj()) / np.vdot(v, v) - np.eye(4)
    with pytest.raises(ValueError, match="not Hermitian"):
        steady_state(Superoperator(matrix=m.astype(complex), dim=2))


def test_decompose_hermitian_eigenmatrix():
    v1 = np.array([1.0, 0.0, 0.0])
    v2 = np.array([0.0, 1.0, 1.0]) / np.sqrt(2)
    rho = 0.7 * np.outer(v1, v1) - 0.7 * np.outer(v2, v2)
    parts = decompose_eigenmatrix(rho)
    assert parts.is_hermitian
    assert parts.weight_plus == pytest.approx(0.7)
    assert parts.weight_minus == pytest.approx(0.7)
    assert_allclose(parts.part_plus, np.outer(v1, v1), atol=1e-12)
    assert_allclose(parts.part_minus, np.outer(v2, v2), atol=1e-12)
    assert np.trace(parts.part_plus).real == pytest.approx(1.0)
    # eigenstates sorted by descending |weight|
    weights = [abs(w) for w, _ in parts.eigenstates]
    assert weights == sorted(weights, reverse=True)


def test_decompose_nonhermitian_eigenmatrix():
    rho = np.array([[0.0, 1.0 + 0.5j], [0.2j, 0.0]])
    parts = decompose_eigenmatrix(rho)
    assert not parts.is_hermitian
    assert_allclose(parts.part_sym, parts.part_sym.conj().T, atol=1e-14)
    assert_allclose(parts.part_anti, parts.part_anti.conj().T, atol=1e-14)
    # rho is recoverable: rho = (sym - i anti) / 2
    assert_allclose(0.5 * (parts.part_sym - 1j * parts.part_anti), rho, atol=1e-14)


def test_decompose_rejects_traced_and_zero():
    with pytest.raises(ValueError, match="trace"):
        decompose_eigenmatrix(np.eye(3))
    with pytest.raises(ValueError):
        decompose_eigenmatrix(np.zeros((3, 3)))


def test_jordan_chain_on_synthetic_block():
    lam = -1.0 + 0.5j
    m, t = defective_matrix(lam)
    head = t[:, 0]  # image of the Jordan basis head
    chain = jordan_chain(m, lam, head, 3)
    b = m - lam * np.eye(5)
    assert np.linalg.norm(b @ chain[0]) < 1e-8 * np.linalg.norm(chain[0])
    for prev, cur in zip(chain, chain[1:]):
        res = np.linalg.norm(b @ cur - prev) / np.linalg.norm(prev)
        assert res < 1e-8
    with pytest.raises(ValueError, match="shorter than requested"):
        jordan_chain(m, lam, head, 4)


def test_jordan_chain_rejects_bad_head():
    m, t = defective_matrix()
    with pytest.raises(ValueError, match="not an eigenvector"):
        jordan_chain(m, -4.0, t[:, 0], 2)


def test_jordan_chain_matrix_valued(sup_weak):
    dec = eig_decompose(sup_weak)
    lam, rho = dec.eigenvalues[3], dec.right[3]
    chain = jordan_chain(sup_weak, lam, rho, 1)
    assert len(chain) == 1 and chain[0].shape == rho.shape
    assert_allclose(chain[0], rho, atol=1e-12)


def test_coalescence_metric():
    v = np.array([1.0, 2.0j, -1.0])
    assert coalescence_metric(v, 3j * v) == pytest.approx(1.0)
    assert coalescence_metric(np.array([1, 0]), np.array([0, 1])) == pytest.approx(0.0)
    m1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    m2 = np.array([[0.0, 1.0], [0.0, 0.0]])
    assert coalescence_metric(m1, m2) == pytest.approx(0.0)
    with pytest.raises(ValueError):
        coalescence_metric(v, np.zeros(3))


def test_estimate_ep_order():
    lam = -1.0 + 0.5j
    m, _ = defective_matrix(lam)
    assert estimate_ep_order(m, lam) == 3
    assert estimate_ep_order(m, -4.0) == 1
    assert estimate_ep_order(m, 10.0 + 10.0j) == 0
