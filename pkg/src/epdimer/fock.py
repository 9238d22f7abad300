"""Truncated two-mode Fock space: cutoffs, indexing, ladder operators.

The joint basis is |n1, n2> with the second mode varying fastest, i.e.
index(n1, n2) = n1 * dim2 + n2.  All operators in the package are plain
dense/sparse numpy arrays in this ordering.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FockCutoffs:
    """Photon-number cutoffs (inclusive) for the two modes."""

    n1_max: int
    n2_max: int

    def __post_init__(self):
        if self.n1_max < 0 or self.n2_max < 0:
            raise ValueError("cutoffs must be non-negative")

    @property
    def dim1(self) -> int:
        return self.n1_max + 1

    @property
    def dim2(self) -> int:
        return self.n2_max + 1

    @property
    def dim(self) -> int:
        """Joint Hilbert-space dimension."""
        return self.dim1 * self.dim2

    def index(self, n1: int, n2: int) -> int:
        """Flat index of the basis state |n1, n2>."""
        if not (0 <= n1 <= self.n1_max and 0 <= n2 <= self.n2_max):
            raise ValueError(f"occupation ({n1}, {n2}) outside cutoffs {self}")
        return n1 * self.dim2 + n2

    def occupations(self, idx: int) -> tuple[int, int]:
        """Inverse of :meth:`index`."""
        if not 0 <= idx < self.dim:
            raise ValueError(f"index {idx} outside dimension {self.dim}")
        return divmod(idx, self.dim2)

    def basis_state(self, n1: int, n2: int) -> np.ndarray:
        """Unit ket |n1, n2> as a dense complex vector."""
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(n1, n2)] = 1.0
        return v

    def total_excitations(self) -> np.ndarray:
        """Vector of n1 + n2 per joint basis index."""
        n1 = np.repeat(np.arange(self.dim1), self.dim2)
        n2 = np.tile(np.arange(self.dim2), self.dim1)
        return n1 + n2


def destroy(n_max: int) -> np.ndarray:
    """Single-mode annihilation operator on a space truncated at n_max."""
    if n_max < 0:
        raise ValueError("n_max must be non-negative")
    return np.diag(np.sqrt(np.arange(1.0, n_max + 1)), k=1).astype(complex)


def embed(op: np.ndarray, mode: int, cutoffs: FockCutoffs) -> np.ndarray:
    """Lift a single-mode operator to the joint space (identity on the other mode)."""
    op = np.asarray(op)
    if mode == 1:
        if op.shape != (cutoffs.dim1, cutoffs.dim1):
            raise ValueError(f"mode-1 operator shape {op.shape} does not match dim {cutoffs.dim1}")
        return np.kron(op, np.eye(cutoffs.dim2))
    if mode == 2:
        if op.shape != (cutoffs.dim2, cutoffs.dim2):
            raise ValueError(f"mode-2 operator shape {op.shape} does not match dim {cutoffs.dim2}")
        return np.kron(np.eye(cutoffs.dim1), op)
    raise ValueError("mode must be 1 or 2")


def annihilator(mode: int, cutoffs: FockCutoffs) -> np.ndarray:
    """Joint-space annihilation operator for the given mode."""
    n_max = cutoffs.n1_max if mode == 1 else cutoffs.n2_max
    return embed(destroy(n_max), mode, cutoffs)


def number_op(mode: int, cutoffs: FockCutoffs) -> np.ndarray:
    """Joint-space photon-number operator (exact integer diagonal)."""
    n_max = cutoffs.n1_max if mode == 1 else cutoffs.n2_max
    return embed(np.diag(np.arange(n_max + 1)).astype(complex), mode, cutoffs)
