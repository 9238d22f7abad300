"""Exceptional points of a coupled active/passive cavity dimer.

A small research library for the Lindblad dynamics of two coupled cavities,
one incoherently amplified and one lossy: generator assembly, spectra and
Jordan structure at exceptional points, stationary two-time correlations and
emission spectra, plus closed-form benchmarks for all of it.
"""

from .fock import FockCutoffs, annihilator, destroy, embed, number_op
from .model import (
    GainModel,
    GeneratorSpec,
    SystemParams,
    build_effective_hamiltonian,
    build_generator,
    build_hamiltonian,
    build_lindblad_ops,
    derive_gain_coefficients,
)
from .superop import (
    Superoperator,
    apply_direct,
    assemble,
    devectorize,
    excitation_imbalance,
    sector_indices,
    sector_matrix,
    vectorize,
)
from .spectral import (
    EigenmatrixParts,
    SpectralDecomposition,
    coalescence_metric,
    decompose_eigenmatrix,
    eig_decompose,
    estimate_ep_order,
    jordan_chain,
    steady_state,
)
from .dynamics import (
    FitError,
    MomentTrajectory,
    NoiseVariant,
    PowerSpectrum,
    TTCFFit,
    TTCFSeries,
    amplitude_drift,
    correlation,
    evolve,
    fit_ttcf_model,
    langevin_moments,
    langevin_steady,
    moment_system,
    power_spectrum_numeric,
    spectrum_curvature_at_zero,
    steady_moments_numeric,
    ttcf_numeric,
    ttcf_semiclassical,
)
from .sweep import (
    EPReport,
    EPTarget,
    ScanRecord,
    ScanResult,
    SweepSpec,
    ep_scan,
    refine_ep,
)
from .verify import CheckResult, run_checks, summarize

__version__ = "0.1.0"
