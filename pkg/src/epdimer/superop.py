"""Liouvillian superoperators in the column-stacking convention.

vec maps the matrix entry (row r, column c) to flat index c*d + r, i.e.
vec(rho) = rho.flatten(order='F').  With that convention

    vec(X rho Y) = (Y^T kron X) vec(rho),

so the Lindblad generator assembles as

    L = -i (I kron H  -  H^T kron I)
        + sum_k [ conj(J_k) kron J_k
                  - 1/2 I kron (J_k^dag J_k)
                  - 1/2 (J_k^dag J_k)^T kron I ].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .model import GeneratorSpec


def vectorize(rho: np.ndarray) -> np.ndarray:
    """Column-stack a matrix into a vector."""
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {rho.shape}")
    return rho.flatten(order="F")


def devectorize(vec: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vectorize`."""
    vec = np.asarray(vec)
    d = int(round(np.sqrt(vec.size)))
    if d * d != vec.size:
        raise ValueError(f"length {vec.size} is not a perfect square")
    return vec.reshape((d, d), order="F")


@dataclass(frozen=True)
class Superoperator:
    """Assembled generator acting on column-stacked density matrices."""

    matrix: np.ndarray | sp.spmatrix
    dim: int                      # Hilbert-space dimension d; matrix is d^2 x d^2
    convention: str = "column-stacking"
    spec: GeneratorSpec | None = None

    @property
    def is_sparse(self) -> bool:
        return sp.issparse(self.matrix)

    def dense(self) -> np.ndarray:
        return self.matrix.toarray() if self.is_sparse else np.asarray(self.matrix)

    def apply(self, rho: np.ndarray) -> np.ndarray:
        """L[rho] through the assembled matrix."""
        if rho.shape != (self.dim, self.dim):
            raise ValueError(f"state shape {rho.shape} does not match dimension {self.dim}")
        return devectorize(self.matrix @ vectorize(rho))


def _lindblad_terms(h: np.ndarray, jumps, kron):
    d = h.shape[0]
    eye = np.eye(d)
    out = -1j * (kron(eye, h) - kron(h.T, eye))
    for j in jumps:
        jdj = j.conj().T @ j
        out = out + kron(j.conj(), j) - 0.5 * kron(eye, jdj) - 0.5 * kron(jdj.T, eye)
    return out


def assemble(spec: GeneratorSpec, sparse: bool = False) -> Superoperator:
    """Build the d^2 x d^2 generator matrix from a :class:`GeneratorSpec`."""
    h = np.asarray(spec.hamiltonian)
    if sparse:
        kron = lambda a, b: sp.kron(sp.csr_matrix(a), sp.csr_matrix(b), format="csr")
        m = _lindblad_terms(h, spec.jump_ops, kron)
    else:
        m = _lindblad_terms(h, spec.jump_ops, np.kron)
    return Superoperator(matrix=m, dim=h.shape[0], spec=spec)


def apply_direct(spec: GeneratorSpec, rho: np.ndarray) -> np.ndarray:
    """L[rho] evaluated term by term, without assembling the big matrix.

    Independent code path used to cross-check :meth:`Superoperator.apply`.
    """
    h = spec.hamiltonian
    out = -1j * (h @ rho - rho @ h)
    for j in spec.jump_ops:
        jdj = j.conj().T @ j
        out = out + j @ rho @ j.conj().T - 0.5 * (jdj @ rho + rho @ jdj)
    return out


def excitation_imbalance(cutoffs) -> np.ndarray:
    """Excitation difference (row total) - (column total) per vectorized index.

    The generator conserves this integer, so it is block diagonal over its
    level sets (the U(1) sectors of the dimer).  In the column-stacking
    convention the row index varies fastest within each column block.
    """
    tot = cutoffs.total_excitations()
    rows = np.tile(tot, cutoffs.dim)
    cols = np.repeat(tot, cutoffs.dim)
    return rows - cols


def sector_indices(cutoffs, k: int) -> np.ndarray:
    """Vectorized indices whose excitation imbalance equals k."""
    return np.nonzero(excitation_imbalance(cutoffs) == k)[0]


def sector_matrix(sup: Superoperator, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Restriction of the generator to one imbalance sector.

    Returns (block, indices); the block is dense.  Populations and the
    steady state live in k = 0.
    """
    if sup.spec is None:
        raise ValueError("sector restriction needs the generator spec for the cutoffs")
    idx = sector_indices(sup.spec.cutoffs, k)
    if idx.size == 0:
        raise ValueError(f"sector {k} is empty at these cutoffs")
    m = sup.matrix
    if sp.issparse(m):
        block = m.tocsr()[idx, :][:, idx].toarray()
    else:
        block = np.asarray(m)[np.ix_(idx, idx)]
    return block, idx
