import numpy as np
import pytest
from numpy.testing import assert_allclose

from conftest import CUT2, STRONG, WEAK, matched_distance
from epdimer.fock import FockCutoffs
from epdimer.model import GainModel, SystemParams, build_generator
from epdimer.superop import (
    Superoperator,
    apply_direct,
    assemble,
    devectorize,
    excitation_imbalance,
    sector_indices,
    sector_matrix,
    vectorize,
)


def random_hermitian(d, seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return 0.5 * (x + x.conj().T)


def test_vectorize_is_column_stacking():
    rho = np.arange(9.0).reshape(3, 3)
    v = vectorize(rho)
    d = 3
    for i in range(d):
        for j in range(d):
            assert v[i + d * j] == rho[i, j]
    with pytest.raises(ValueError):
        vectorize(np.ones((2, 3)))


def test_devectorize_roundtrip():
    rho = random_hermitian(4, 0)
    assert_allclose(devectorize(vectorize(rho)), rho)
    with pytest.raises(ValueError):
        devectorize(np.ones(5))


@pytest.mark.parametrize("cut", [FockCutoffs(1, 1), FockCutoffs(2, 3)])
@pytest.mark.parametrize("model", [GainModel.LINEAR, GainModel.SCULLY_LAMB])
def test_assembled_matches_direct_application(cut, model):
    p = SystemParams(kappa=0.7, gain=0.4, c1=2.0, c2=0.3, gamma1=0.5,
                     gamma2=0.6, saturation=0.05 if model is GainModel.SCULLY_LAMB else 0.0)
    spec = build_generator(p, cut, model)
    sup = assemble(spec)
    rho = random_hermitian(cut.dim, 42)
    assert np.max(np.abs(sup.apply(rho) - apply_direct(spec, rho))) < 1e-12


def test_sparse_and_dense_agree(sup_weak):
    spec = sup_weak.spec
    sparse = assemble(spec, sparse=True)
    assert sparse.is_sparse and not sup_weak.is_sparse
    assert_allclose(sparse.dense(), sup_weak.dense(), atol=1e-14)
    rho = random_hermitian(spec.cutoffs.dim, 7)
    assert_allclose(sparse.apply(rho), sup_weak.apply(rho), atol=1e-13)


def test_trace_preservation_row(sup_weak, sup_strong):
    for sup in (sup_weak, sup_strong):
        d = sup.dim
        tr = vectorize(np.eye(d)).conj() @ sup.dense()
        assert np.max(np.abs(tr)) < 1e-12


def test_apply_shape_guard(sup_weak):
    with pytest.raises(ValueError):
        sup_weak.apply(np.eye(3))


def test_excitation_imbalance_values():
    k = excitation_imbalance(CUT2)
    # basis order |00>,|01>,|10>,|11>; vec index = row + 4*col
    assert k[0 + 4 * 0] == 0
    assert k[2 + 4 * 0] == 1      # |10><00|
    assert k[0 + 4 * 3] == -2     # |00><11|
    assert k[3 + 4 * 1] == 1      # |11><01|
    assert sorted(set(k)) == [-2, -1, 0, 1, 2]


def test_sector_indices_partition():
    cut = FockCutoffs(2, 1)
    ks = excitation_imbalance(cut)
    seen = np.concatenate([sector_indices(cut, k) for k in sorted(set(ks))])
    assert sorted(seen) == list(range(cut.dim ** 2))


def test_cross_sector_entries_vanish(sup_weak):
    m = sup_weak.dense()
    k = excitation_imbalance(CUT2)
    off = m[k[:, None] != k[None, :]]
    assert np.max(np.abs(off)) == 0.0


def test_sector_blocks_cover_the_spectrum(sup_strong):
    full = np.linalg.eigvals(sup_strong.dense())
    parts = []
    for k in sorted(set(excitation_imbalance(CUT2))):
        block, idx = sector_matrix(sup_strong, k)
        assert block.shape == (idx.size, idx.size)
        parts.append(np.linalg.eigvals(block))
    assert matched_distance(np.concatenate(parts), full) < 1e-10


def test_sector_zero_size():
    block, idx = sector_matrix(assemble(build_generator(WEAK, CUT2)), 0)
    assert idx.size == 6
    with pytest.raises(ValueError):
        sector_matrix(assemble(build_generator(WEAK, CUT2)), 5)


def test_sector_matrix_needs_spec():
    bare = Superoperator(matrix=np.zeros((4, 4)), dim=2)
    with pytest.raises(ValueError):
        sector_matrix(bare, 0)
