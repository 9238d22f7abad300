"""Eigendecomposition utilities tuned for defective (exceptional-point) spectra.

Right/left eigenpairs are stored biorthonormally, Tr[sigma_i^dag rho_j] =
delta_ij (plain dot for vector-valued problems).  Near-degenerate eigenvalues
are grouped into clusters and each cluster is flagged as defective when its
right vectors lose rank; eigenvectors inside a defective cluster are
individually meaningless and should be handled through Jordan chains or
spectral projectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg as la

from .superop import Superoperator, devectorize, vectorize

_DEFECT_TOL = 1e-6


def _as_dense(m) -> np.ndarray:
    if isinstance(m, Superoperator):
        return m.dense()
    import scipy.sparse as sp

    if sp.issparse(m):
        return m.toarray()
    return np.asarray(m)


def _cluster_indices(eigenvalues: np.ndarray, tol: float) -> list[tuple[int, ...]]:
    """Connected components of the eigenvalue set under |difference| <= tol."""
    n = eigenvalues.size
    unseen = set(range(n))
    clusters: list[tuple[int, ...]] = []
    while unseen:
        seed = min(unseen)
        stack = [seed]
        unseen.discard(seed)
        comp = [seed]
        while stack:
            i = stack.pop()
            close = [j for j in list(unseen)
                     if abs(eigenvalues[i] - eigenvalues[j]) <= tol]
            for j in close:
                unseen.discard(j)
                stack.append(j)
                comp.append(j)
        clusters.append(tuple(sorted(comp)))
    return sorted(clusters, key=lambda c: c[0])


def _gauge_scale(x: np.ndarray, norm: float) -> complex:
    """Scale that makes x/scale unit-norm with its largest entry real positive."""
    flat = x.reshape(-1)
    idx = int(np.argmax(np.abs(flat)))
    pivot = flat[idx]
    phase = pivot / abs(pivot) if pivot != 0 else 1.0
    return phase * norm


@dataclass
class SpectralDecomposition:
    """Sorted spectrum with gauged right/left pairs and cluster structure.

    eigenvalues   sorted by descending real part, then descending imaginary
    right         devectorized eigenmatrices (kind 'liouvillian') or vectors
    left          biorthonormal partners: Tr[left_i^dag right_j] = delta_ij
    clusters      index tuples of near-degenerate groups
    cluster_defective   True where the cluster's right vectors lose rank
    """

    eigenvalues: np.ndarray
    right: list[np.ndarray]
    left: list[np.ndarray]
    clusters: list[tuple[int, ...]]
    cluster_defective: list[bool]
    kind: str
    cluster_tol: float

    @property
    def any_defective(self) -> bool:
        return any(self.cluster_defective)

    def cluster_of(self, index: int) -> tuple[int, ...]:
        for c in self.clusters:
            if index in c:
                return c
        raise ValueError(f"index {index} not in any cluster")

    def biorthonormality_residual(self) -> float:
        v = np.column_stack([x.reshape(-1) for x in self.right])
        w = np.column_stack([x.reshape(-1) for x in self.left])
        g = w.conj().T @ v
        return float(np.max(np.abs(g - np.eye(g.shape[0]))))


def eig_decompose(m, kind: str = "liouvillian",
                  cluster_tol: float | None = None) -> SpectralDecomposition:
    """Full nonsymmetric eigendecomposition with clustering and defect flags.

    kind 'liouvillian' treats eigenvectors as column-stacked matrices (the
    input must be d^2 x d^2); kind 'matrix' keeps them as plain vectors.
    """
    if kind not in ("liouvillian", "matrix"):
        raise ValueError(f"unknown kind {kind!r}")
    a = _as_dense(m)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got {a.shape}")
    w, v = np.linalg.eig(a)
    order = np.lexsort((-w.imag, -w.real))
    w = w[order]
    v = v[:, order]
    try:
        winv = np.linalg.inv(v)
    except np.linalg.LinAlgError:
        winv = np.linalg.pinv(v)

    radius = float(np.max(np.abs(w))) if w.size else 0.0
    tol = cluster_tol if cluster_tol is not None else max(1e-7 * radius, 1e-10)
    clusters = _cluster_indices(w, tol)

    right: list[np.ndarray] = []
    left: list[np.ndarray] = []
    for i in range(w.size):
        r = v[:, i]
        s = _gauge_scale(r, float(np.linalg.norm(r)))
        r = r / s
        l = winv[i, :].conj() * np.conj(s)
        if kind == "liouvillian":
            right.append(devectorize(r))
            left.append(devectorize(l))
        else:
            right.append(r)
            left.append(l)

    defective: list[bool] = []
    for c in clusters:
        if len(c) < 2:
            defective.append(False)
            continue
        stack = np.column_stack([v[:, i] / np.linalg.norm(v[:, i]) for i in c])
        sv = np.linalg.svd(stack, compute_uv=False)
        defective.append(bool(sv[-1] < _DEFECT_TOL * sv[0]))

    return SpectralDecomposition(
        eigenvalues=w, right=right, left=left, clusters=clusters,
        cluster_defective=defective, kind=kind, cluster_tol=tol,
    )


def steady_state(sup: Superoperator, tol: float = 1e-8) -> np.ndarray:
    """Trace-one stationary density matrix of the generator.

    Picks the eigenvector whose eigenvalue is closest to zero and errors out
    if that eigenvalue is not numerically zero (no stationary state at these
    parameters) or if the candidate is traceless.
    """
    a = sup.dense()
    w, v = np.linalg.eig(a)
    radius = float(np.max(np.abs(w)))
    i = int(np.argmin(np.abs(w)))
    if abs(w[i]) > tol * max(radius, 1.0):
        raise ValueError(
            f"no zero eigenvalue: nearest is {w[i]:.3e} (spectral radius {radius:.3e})")
    rho = devectorize(v[:, i])
    tr = np.trace(rho)
    if abs(tr) < 1e-10:
        raise ValueError("stationary candidate is traceless; generator has no steady density matrix")
    rho = rho / tr
    herm_dev = np.linalg.norm(rho - rho.conj().T) / np.linalg.norm(rho)
    if herm_dev > 1e-8:
        raise ValueError(f"stationary candidate is not Hermitian (deviation {herm_dev:.3e})")
    return 0.5 * (rho + rho.conj().T)


@dataclass
class EigenmatrixParts:
    """Physical split of a (traceless) eigenmatrix.

    Hermitian eigenmatrices (real eigenvalues) split into trace-one positive
    parts: rho = weight_plus * part_plus - weight_minus * part_minus.
    Non-Hermitian ones (complex eigenvalues) split into the Hermitian
    combinations part_sym = rho + rho^dag and part_anti = i(rho - rho^dag).
    eigenstates holds (weight, ket) pairs sorted by descending |weight|.
    """

    is_hermitian: bool
    weight_plus: float = 0.0
    weight_minus: float = 0.0
    part_plus: np.ndarray | None = None
    part_minus: np.ndarray | None = None
    part_sym: np.ndarray | None = None
    part_anti: np.ndarray | None = None
    eigenstates: list[tuple[float, np.ndarray]] = None


def decompose_eigenmatrix(rho: np.ndarray, tol: float = 1e-8) -> EigenmatrixParts:
    """Split an eigenmatrix into positive/negative or sym/antisym Hermitian parts."""
    rho = np.asarray(rho)
    scale = float(np.linalg.norm(rho))
    if scale == 0:
        raise ValueError("zero matrix has no decomposition")
    if abs(np.trace(rho)) > tol * scale * rho.shape[0]:
        raise ValueError(
            "matrix has a non-negligible trace; only traceless (decaying) "
            "eigenmatrices admit this decomposition")
    if np.linalg.norm(rho - rho.conj().T) <= tol * scale:
        h = 0.5 * (rho + rho.conj().T)
        vals, vecs = np.linalg.eigh(h)
        plus = np.zeros_like(h)
        minus = np.zeros_like(h)
        wp = wm = 0.0
        states = []
        for val, vec in zip(vals, vecs.T):
            if abs(val) > tol * scale:
                states.append((float(val), vec))
            if val > 0:
                plus += val * np.outer(vec, vec.conj())
                wp += val
            elif val < 0:
                minus -= val * np.outer(vec, vec.conj())
                wm += val
        states.sort(key=lambda t: -abs(t[0]))
        return EigenmatrixParts(
            is_hermitian=True,
            weight_plus=wp, weight_minus=-wm,
            part_plus=plus / wp if wp > 0 else None,
            part_minus=minus / (-wm) if wm < 0 else None,
            eigenstates=states,
        )
    sym = rho + rho.conj().T
    anti = 1j * (rho - rho.conj().T)
    states = []
    for part in (sym, anti):
        vals, vecs = np.linalg.eigh(part)
        for val, vec in zip(vals, vecs.T):
            if abs(val) > tol * scale:
                states.append((float(val), vec))
    states.sort(key=lambda t: -abs(t[0]))
    return EigenmatrixParts(
        is_hermitian=False, part_sym=sym, part_anti=anti, eigenstates=states,
    )


def _null_basis(b: np.ndarray, rtol: float = 1e-8) -> np.ndarray:
    """Orthonormal kernel basis via SVD (columns)."""
    u, s, vh = np.linalg.svd(b)
    smax = s[0] if s.size else 0.0
    k = int(np.sum(s < rtol * max(smax, 1.0)))
    if k == 0:
        return np.zeros((b.shape[1], 0))
    return vh[-k:, :].conj().T


def jordan_chain(m, lam: complex, head: np.ndarray, length: int,
                 rcond: float = 1e-10, tol: float = 1e-8) -> list[np.ndarray]:
    """Generalized-eigenvector chain x_0 = head, (M - lam) x_k = x_{k-1}.

    Each solve is least-squares with the kernel component projected out, so
    the representatives are the minimal-norm ones orthogonal to the
    eigenspace.  Raises if the requested length exceeds the Jordan block:
    the defining equation then has no solution and the residual blows up.
    """
    a = _as_dense(m)
    matrix_valued = head.ndim == 2
    x = vectorize(head) if matrix_valued else np.asarray(head, dtype=complex)
    b = a - lam * np.eye(a.shape[0])
    head_res = np.linalg.norm(b @ x) / np.linalg.norm(x)
    if head_res > tol:
        raise ValueError(f"head is not an eigenvector at this eigenvalue (residual {head_res:.3e})")
    kernel = _null_basis(b)
    chain = [x]
    for step in range(1, length):
        rhs = chain[-1]
        sol, *_ = np.linalg.lstsq(b, rhs, rcond=rcond)
        if kernel.shape[1]:
            sol = sol - kernel @ (kernel.conj().T @ sol)
        resid = np.linalg.norm(b @ sol - rhs) / np.linalg.norm(rhs)
        if resid > tol:
            raise ValueError(
                f"no generalized vector at chain position {step + 1} "
                f"(residual {resid:.3e}); the Jordan block is shorter than requested")
        chain.append(sol)
    if matrix_valued:
        return [devectorize(c) for c in chain]
    return chain


def coalescence_metric(v1: np.ndarray, v2: np.ndarray) -> float:
    """Normalized overlap |<v1, v2>| of two eigenvectors (1 at an EP).

    Accepts vectors or matrices (Hilbert-Schmidt inner product).
    """
    a = np.asarray(v1).reshape(-1)
    b = np.asarray(v2).reshape(-1)
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("coalescence metric of a zero vector is undefined")
    return float(abs(np.vdot(a, b)) / (na * nb))


def estimate_ep_order(m, lam: complex, max_order: int = 6,
                      null_rtol: float = 1e-6) -> int:
    """Largest Jordan block at an eigenvalue, from the nullity chain.

    nullity((M - lam)^k) grows by the number of blocks of size >= k, so the
    largest block is the last k with a strict increase.  Singular values are
    perturbed only linearly by roundoff, which makes this far more robust at
    exceptional points than anything built on eigenvectors.  Returns 0 when
    lam is not an eigenvalue at the given tolerance.

    The nullity cutoff for the k-th power scales with sigma_max(M - lam)^k,
    not with the power's own largest singular value: for a nearly nilpotent
    matrix the whole power collapses, and a cutoff relative to the collapsed
    scale would never see the kernel.
    """
    a = _as_dense(m)
    b = a - lam * np.eye(a.shape[0])
    scale = max(float(np.linalg.norm(b, 2)), 1e-300)
    power = np.eye(a.shape[0])
    nullities = []
    for k in range(1, max_order + 1):
        power = power @ b
        s = np.linalg.svd(power, compute_uv=False)
        nullities.append(int(np.sum(s < null_rtol * scale**k)))
        if len(nullities) > 1 and nullities[-1] == nullities[-2]:
            break
    order = 0
    prev = 0
    for k, n in enumerate(nullities, start=1):
        if n > prev:
            order = k
        prev = n
    return order
