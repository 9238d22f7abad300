"""Coupling sweeps, eigenvalue tracking, and exceptional-point refinement.

The scan machinery is deliberately oracle-free: it locates candidate EPs
purely from the numeric spectrum (gap dips followed by an eigenvector
coalescence probe), so it can be pointed at cutoffs where no closed forms
exist.  ``refine_ep`` is the opposite: it bisects the exact factored
discriminants and then reports what the numerics look like at the located
coupling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
import scipy.linalg as la
from scipy.optimize import linear_sum_assignment, minimize_scalar

from . import analytic
from .fock import FockCutoffs
from .model import GainModel, SystemParams, build_effective_hamiltonian, build_generator
from .spectral import coalescence_metric
from .superop import assemble, sector_matrix

_TASKS = frozenset({"eigenvalues", "coalescence", "ttcf_fit", "spectra", "moments"})

# above this Hilbert dimension the generator is assembled sparse and a
# sector restriction becomes mandatory for eigensolves
_DENSE_LIMIT = 64


@dataclass(frozen=True)
class SweepSpec:
    """A one-parameter family of systems to walk through.

    Only the inter-cavity coupling is sweepable for now; the field exists so
    grown-up sweeps (over gain, say) keep the same record format.
    """

    grid: tuple[float, ...]
    base_params: SystemParams
    cutoffs: FockCutoffs
    parameter: str = "kappa"
    tasks: tuple[str, ...] = ("eigenvalues", "coalescence")
    model: GainModel = GainModel.LINEAR

    def __post_init__(self):
        object.__setattr__(self, "grid", tuple(float(g) for g in self.grid))
        if len(self.grid) < 2:
            raise ValueError("grid needs at least two points")
        if any(b <= a for a, b in zip(self.grid, self.grid[1:])):
            raise ValueError("grid must be strictly increasing")
        if self.parameter != "kappa":
            raise ValueError(f"unsupported sweep parameter {self.parameter!r}")
        tasks = tuple(self.tasks)
        if not tasks:
            raise ValueError("tasks must be non-empty")
        unknown = set(tasks) - _TASKS
        if unknown:
            raise ValueError(f"unknown tasks {sorted(unknown)}")
        object.__setattr__(self, "tasks", tasks)

    def params_at(self, value: float) -> SystemParams:
        return self.base_params.with_kappa(value)


@dataclass(frozen=True)
class EPReport:
    """One candidate or refined exceptional point."""

    parameter_name: str
    location: float
    eigen_gap: float
    coalescence: float
    order_estimate: int
    analytic_match: float | None = None


@dataclass
class ScanRecord:
    value: float
    min_gap: float = np.nan
    gap_pair: tuple[int, int] = (-1, -1)
    failed: bool = False
    message: str = ""


@dataclass
class ScanResult:
    spec: SweepSpec
    sector: int | None
    records: list[ScanRecord]
    tracks: np.ndarray                  # (n_grid, n_modes), nan rows on failure
    probed: list[EPReport]              # every investigated gap dip
    candidates: list[EPReport]          # the subset that passed the filters

    def gap_curve(self) -> np.ndarray:
        return np.array([r.min_gap for r in self.records])


def _scan_matrix(spec: SweepSpec, value: float, sector: int | None) -> np.ndarray:
    gen = build_generator(spec.params_at(value), spec.cutoffs, spec.model)
    sup = assemble(gen, sparse=spec.cutoffs.dim > _DENSE_LIMIT)
    if sector is None:
        if sup.is_sparse:
            raise ValueError(
                f"dimension {spec.cutoffs.dim}^2 is too large for a full-matrix "
                "scan; restrict to an imbalance sector")
        return sup.dense()
    block, _ = sector_matrix(sup, sector)
    return block


def _min_gap(w: np.ndarray, floor: float) -> tuple[float, int, int]:
    """Smallest pairwise gap above ``floor``.

    Exact degeneracies (the generator has pairs that stay degenerate for
    every coupling) would otherwise pin the curve to roundoff and hide every
    genuine closing.
    """
    d = np.abs(w[:, None] - w[None, :])
    d[d <= floor] = np.inf
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return float(d[i, j]), int(i), int(j)


def _local_gap(w: np.ndarray, z0: complex, window: float, floor: float) -> float:
    sel = w[np.abs(w - z0) <= window]
    if sel.size < 2:
        return 1e30      # finite penalty keeps the minimizer's bookkeeping sane
    gap, _, _ = _min_gap(sel, floor)
    return gap if np.isfinite(gap) else 1e30


def _cluster_ep_order(m: np.ndarray, z0: complex, window: float) -> int:
    """Largest Jordan block among the eigenvalues within a disc.

    The matrix is first compressed to the cluster's invariant subspace by a
    sorted Schur form, so the nullity thresholds can be scoped to the
    cluster: the noise floor of the k-th power is the eigenvalue scatter
    amplified by k-1 powers of the block norm, which cleanly separates
    "kernel up to scatter" from genuine Jordan range directions.  A global
    threshold cannot do this once eigenvalue spacings span several decades.
    """
    try:
        t, _, sdim = la.schur(m, output="complex",
                              sort=lambda w: abs(w - z0) <= window)
    except la.LinAlgError:
        return 0
    if sdim == 0:
        return 0
    if sdim == 1:
        return 1
    block = t[:sdim, :sdim]
    lam = complex(np.mean(np.diag(block)))
    b = block - lam * np.eye(sdim)
    scatter = float(np.max(np.abs(np.diag(b)))) + 1e-300
    smax = max(float(np.linalg.norm(b, 2)), 1e-300)
    power = np.eye(sdim, dtype=complex)
    nullities = []
    for k in range(1, sdim + 1):
        power = power @ b
        s = np.linalg.svd(power, compute_uv=False)
        thresh = max(1e-6 * smax**k, 10.0 * scatter * smax ** (k - 1))
        nullities.append(int(np.sum(s < thresh)))
        if len(nullities) > 1 and nullities[-1] == nullities[-2]:
            break
    order, prev = 0, 0
    for k, n in enumerate(nullities, start=1):
        if n > prev:
            order = k
        prev = n
    return order


def _probe_dip(spec: SweepSpec, sector: int | None, lo: float, hi: float,
               za: complex, zb: complex, floor: float,
               radius: float, spread: float = 0.0) -> EPReport | None:
    """Refine a gap dip and measure coalescence/order at the bottom.

    The minimized objective is the smallest above-floor gap among the
    eigenvalues near the dip's midpoint -- anchoring to a fixed window
    rather than to individual eigenvalues, because eigenvalue identities
    shuffle freely inside the dip (a closing pair can swing past a
    persistent degeneracy sitting at the same spot).  The window must
    cover the pair's full excursion across the bracket, not just its
    separation at the dip point: a square-root unfolding throws the pair
    far from the anchor within a fraction of a grid step, and a window
    sized from the (possibly tiny) on-dip gap would blind the minimizer
    everywhere except a sliver around the collision.  ``spread`` is the
    caller's measurement of that excursion.  Only at the refined coupling
    is the (expensive) eigenvector solve done.
    """
    z0 = 0.5 * (za + zb)
    window = max(4.0 * abs(za - zb), 1.5 * spread, 1e-3 * max(radius, 1.0))

    def bottom(value: float) -> float:
        return _local_gap(la.eigvals(_scan_matrix(spec, value, sector)),
                          z0, window, floor)

    try:
        res = minimize_scalar(bottom, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-9, "maxiter": 80})
        loc = float(res.x)
        m = _scan_matrix(spec, loc, sector)
        w, v = la.eig(m)
    except la.LinAlgError:
        return None
    gap = float(res.fun)
    if not np.isfinite(gap) or gap >= 1e29:
        return None
    # re-anchor to the pair that realizes the minimum at the bottom: the
    # original anchor is a grid-resolution midpoint, and below a pinch the
    # recorded pair's members drift away from where the collision happens
    sel = np.nonzero(np.abs(w - z0) <= window)[0]
    if sel.size < 2:
        return None
    _, si, sj = _min_gap(w[sel], floor)
    z1 = 0.5 * (w[sel[si]] + w[sel[sj]])
    cluster_window = max(10.0 * gap, 1e-3 * max(radius, 1.0))
    cluster = np.nonzero(np.abs(w - z1) <= cluster_window)[0]
    if cluster.size < 2:
        cluster = np.argsort(np.abs(w - z1))[:2]
    coal = max(coalescence_metric(v[:, i], v[:, j])
               for n, i in enumerate(cluster) for j in cluster[n + 1:])
    if gap < 1e-7 * max(radius, 1.0):
        # the closing pair is numerically coincident at the bottom, where
        # the eigenvector basis is arbitrary: sample just off it
        for delta in (1e-8, 1e-7, 1e-6, 1e-5):
            off = loc + delta * max(1.0, abs(loc))
            try:
                wo, vo = la.eig(_scan_matrix(spec, off, sector))
            except la.LinAlgError:
                continue
            near = np.nonzero(np.abs(wo - z1) <= cluster_window)[0]
            if near.size < 2:
                continue
            coal = max(coal, max(coalescence_metric(vo[:, i], vo[:, j])
                                 for n, i in enumerate(near) for j in near[n + 1:]))
            if coal > 0.99:
                break
    order = _cluster_ep_order(m, z1, cluster_window)
    return EPReport(parameter_name=spec.parameter, location=loc,
                    eigen_gap=gap, coalescence=float(coal),
                    order_estimate=order)


def ep_scan(spec: SweepSpec, sector: int | None = None,
            coalescence_threshold: float = 0.9,
            max_probes: int = 8, track_depth: float | None = None) -> ScanResult:
    """Walk the grid, track eigenvalues, and flag coalescence candidates.

    Eigenvalues are matched across grid points by minimal-distance
    assignment against a velocity-extrapolated prediction, which keeps
    tracks continuous through crossings.  The gap curve is measured only
    over modes decaying slower than ``track_depth`` (at the first grid
    point; identities then follow the tracks).  The default depth is 3/4
    of the total dissipation rate, which spans the single-excitation
    manifold where coalescences carry physical meaning: deeper decay
    multiplets sit at near-integer multiples of the fundamental rates, so
    they are packed with incidental near-degeneracies (splittings down to
    the eigensolver's resolution) that would bury any genuine closing.
    Local minima of the gap curve (ignoring persistent exact
    degeneracies) are refined and probed -- up to ``max_probes``, deepest
    first -- and a dip is promoted to a candidate when its eigenvectors
    coalesce and the estimated order exceeds one.  Eigensolver failures
    mark their grid point and the scan continues.
    """
    if track_depth is None:
        track_depth = 0.75 * (spec.base_params.gain + spec.base_params.loss_sum)
    if track_depth <= 0:
        raise ValueError("track_depth must be positive")
    grid = np.asarray(spec.grid)
    records: list[ScanRecord] = []
    tracks: list[np.ndarray] = []
    n_modes = 0
    nt = 0
    radius = 1.0
    prev = prev_vel = None
    for value in grid:
        rec = ScanRecord(value=float(value))
        try:
            w = la.eigvals(_scan_matrix(spec, value, sector))
        except la.LinAlgError as exc:
            rec.failed, rec.message = True, str(exc)
            records.append(rec)
            tracks.append(np.full(n_modes, np.nan + 0j))
            continue
        if prev is None:
            n_modes = w.size
            w = w[np.lexsort((-w.imag, -w.real))]
            nt = max(2, int(np.sum(w.real >= -track_depth)))
            nt = min(nt, n_modes)
        else:
            pred = prev if prev_vel is None else prev + prev_vel
            _, cols = linear_sum_assignment(np.abs(pred[:, None] - w[None, :]))
            w = w[cols]
            prev_vel = w - prev
        prev = w
        tracks.append(w)
        radius = max(radius, float(np.max(np.abs(w))))
        rec.min_gap, i, j = _min_gap(w[:nt], 1e-9 * radius)
        rec.gap_pair = (i, j)
        records.append(rec)
    if prev is None:
        raise ValueError("every grid point failed to diagonalize")

    track_arr = np.array(tracks)
    gaps = np.array([r.min_gap for r in records])
    floor = 1e-9 * radius

    dips = [i for i in range(1, gaps.size - 1)
            if np.isfinite(gaps[i - 1:i + 2]).all()
            and gaps[i] <= gaps[i - 1] and gaps[i] < gaps[i + 1]]
    dips.sort(key=lambda i: gaps[i])

    matches = []
    for fn in (analytic.hep_kappa, analytic.lep1_kappa, analytic.lep2_kappa):
        try:
            matches.append(fn(spec.base_params))
        except ValueError:
            pass

    probed: list[EPReport] = []
    for i in dips[:max_probes]:
        a, b = records[i].gap_pair
        # the pair's excursion across the bracket, estimated two ways: by
        # following the tracked identities to the edges, and by the recorded
        # edge gaps (identities shuffle freely through a pinch, so either
        # estimate alone can collapse to zero)
        edge_sep = np.abs(track_arr[[i - 1, i + 1], a] - track_arr[[i - 1, i + 1], b])
        edges = np.concatenate([edge_sep, gaps[[i - 1, i + 1]]])
        spread = float(np.max(edges[np.isfinite(edges)], initial=0.0))
        report = _probe_dip(spec, sector, float(grid[i - 1]), float(grid[i + 1]),
                            complex(track_arr[i, a]), complex(track_arr[i, b]),
                            floor, radius, spread)
        if report is None:
            continue
        near = min(matches, key=lambda x: abs(x - report.location), default=None)
        probed.append(EPReport(
            parameter_name=report.parameter_name, location=report.location,
            eigen_gap=report.eigen_gap, coalescence=report.coalescence,
            order_estimate=report.order_estimate, analytic_match=near))

    candidates = [r for r in probed
                  if r.coalescence >= coalescence_threshold and r.order_estimate >= 2]
    candidates.sort(key=lambda r: r.location)
    probed.sort(key=lambda r: r.location)
    return ScanResult(spec=spec, sector=sector, records=records,
                      tracks=track_arr, probed=probed, candidates=candidates)


# ---------------------------------------------------------------------------
# bisection refinement


class EPTarget(enum.Enum):
    """Which coalescence the refinement should chase."""

    HEP = "hep"
    LEP1 = "lep1"
    LEP2 = "lep2"


def _indicator(base: SystemParams, target: EPTarget):
    a = base.gain
    if target is EPTarget.HEP:
        q = a - base.loss_diff
        return lambda k: (q - 4.0 * k) * (q + 4.0 * k)
    if target is EPTarget.LEP1:
        q = a + base.loss_diff
        return lambda k: (q - 4.0 * k) * (q + 4.0 * k)
    ap = a + base.loss_sum
    am = a + base.loss_diff
    c = 8.0 * a * base.loss2 - ap**2
    return lambda k: ap**2 * am**2 + 16.0 * k**2 * c


def _window_cluster(w: np.ndarray, lam_t: complex, window: float) -> np.ndarray:
    cluster = np.nonzero(np.abs(w - lam_t) <= window)[0]
    if cluster.size < 2:
        cluster = np.argsort(np.abs(w - lam_t))[:2]
    return cluster


def _max_pair_coalescence(v: np.ndarray, cluster: np.ndarray) -> float:
    return max(coalescence_metric(v[:, i], v[:, j])
               for n, i in enumerate(cluster) for j in cluster[n + 1:])


def refine_ep(base: SystemParams, bracket: tuple[float, float],
              target: EPTarget | str,
              cutoffs: FockCutoffs = FockCutoffs(1, 1),
              model: GainModel = GainModel.LINEAR) -> EPReport:
    """Bisect the exact discriminant of ``target`` to |bracket| < 1e-10.

    The indicator functions are the factored forms, so the sign change is
    exact in floating point and the bisection is immune to cancellation.
    The report's gap/coalescence/order fields are then measured numerically
    at the located coupling (effective-Hamiltonian block for the HEP, full
    generator for the Liouvillian targets); ``analytic_match`` carries the
    closed-form location for comparison.

    The reported ``eigen_gap`` is the residual scatter of the coalescing
    eigenvalue cluster, which at a defective point cannot drop below the
    eps^(1/order) perturbation floor of the eigensolver.
    """
    target = EPTarget(target)
    f = _indicator(base, target)
    lo, hi = float(bracket[0]), float(bracket[1])
    if lo >= hi:
        raise ValueError("bracket must be an increasing pair")
    flo, fhi = f(lo), f(hi)
    if flo == 0.0:
        hi = lo
    elif fhi == 0.0:
        lo = hi
    elif np.sign(flo) == np.sign(fhi):
        raise ValueError(
            f"indicator for {target.value} does not change sign over {bracket}")
    while hi - lo > 1e-10:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            lo = hi = mid
            break
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    loc = 0.5 * (lo + hi)
    p = base.with_kappa(loc)

    if target is EPTarget.HEP:
        idx = [cutoffs.index(0, 1), cutoffs.index(1, 0)]

        def single_block(params: SystemParams) -> np.ndarray:
            return build_effective_hamiltonian(params, cutoffs)[np.ix_(idx, idx)]

        block = single_block(p)
        w, v = la.eig(block)
        gap = float(np.abs(w[0] - w[1]))
        coal = coalescence_metric(v[:, 0], v[:, 1])
        if gap < 1e-7 * max(1.0, float(np.max(np.abs(w)))):
            wo, vo = la.eig(single_block(base.with_kappa(loc + 1e-6 * max(1.0, loc))))
            coal = max(coal, coalescence_metric(vo[:, 0], vo[:, 1]))
        order = _cluster_ep_order(
            block, complex(np.mean(w)),
            max(10.0 * gap, 1e-3 * max(1.0, float(np.max(np.abs(w))))))
        match = analytic.hep_kappa(base)
    else:
        # restrict to one imbalance sector: at omega_c = 0 the coalescing
        # pair and its conjugate partner from the mirror sector collapse to
        # the same real eigenvalue, and a sector-blind nearest-neighbor pick
        # would pair eigenvectors from different sectors
        sector = 0 if target is EPTarget.LEP1 else 1

        def block_at(params: SystemParams) -> np.ndarray:
            sup = assemble(build_generator(params, cutoffs, model),
                           sparse=cutoffs.dim > 16)
            blk, _ = sector_matrix(sup, sector)
            return blk

        m = block_at(p)
        w, v = la.eig(m)
        ap = p.gain + p.loss_sum
        if target is EPTarget.LEP1:
            lam_t = complex(-0.5 * ap)
            match = analytic.lep1_kappa(base)
        else:
            disc = analytic.liouvillian_discriminants(p)
            lam_t = complex(-0.5 * ap + 0.25 * disc.e_plus)
            match = analytic.lep2_kappa(base)
        lam_t -= 1j * p.omega_c * sector
        radius = float(np.max(np.abs(w)))
        cluster = _window_cluster(w, lam_t, 1e-3 * max(radius, 1.0))
        vals = w[cluster]
        gap = float(np.max(np.abs(vals[:, None] - vals[None, :])))
        coal = _max_pair_coalescence(v, cluster)
        if gap < 1e-7 * radius:
            # numerically coincident pair: the eigenvector basis there is
            # arbitrary, so sample the coalescence just off the point
            for delta in (1e-8, 1e-7, 1e-6, 1e-5):
                wo, vo = la.eig(block_at(base.with_kappa(loc + delta * max(1.0, loc))))
                co = _max_pair_coalescence(
                    vo, _window_cluster(wo, lam_t, 1e-3 * max(radius, 1.0)))
                coal = max(coal, co)
                if coal > 0.99:
                    break
        order = _cluster_ep_order(m, lam_t, 1e-3 * max(radius, 1.0))
    return EPReport(parameter_name="kappa", location=loc, eigen_gap=gap,
                    coalescence=float(coal), order_estimate=order,
                    analytic_match=match)
