"""Physical model of the coupled active/passive cavity dimer.

One cavity holds an incoherent gain medium (linear amplification rate
``gain``, optional saturation ``saturation``), both cavities leak through
mirror transmission (``c1``, ``c2``) and internal absorption (``gamma1``,
``gamma2``), and the two are coherently coupled at rate ``kappa``.  The
Hamiltonian convention is

    H = omega_c (n1 + n2) + i kappa (a1 a2^dag - a1^dag a2),

with the antisymmetric coupling written in this phase gauge so that all
closed-form eigenmatrices in :mod:`epdimer.analytic` are real where possible.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace

import numpy as np

from .fock import FockCutoffs, annihilator, number_op


class GainModel(enum.Enum):
    """Dissipator families for the amplifying cavity.

    LINEAR keeps only the linear gain dissipator (valid well below
    saturation); SCULLY_LAMB includes the leading saturation corrections,
    which add a nonlinear gain dissipator and a two-photon dephasing channel.
    """

    LINEAR = "linear"
    SCULLY_LAMB = "scully_lamb"


@dataclass(frozen=True)
class SystemParams:
    """Rates of the dimer.  All rates are angular frequencies >= 0.

    kappa       coherent intercavity coupling
    gain        linear amplification rate of cavity 1
    c1, c2      mirror (output-coupling) loss rates
    gamma1, gamma2  internal absorption rates
    omega_c     common cavity resonance (0 = rotating frame)
    saturation  quadratic gain-saturation rate (0 disables saturation)
    """

    kappa: float
    gain: float
    c1: float
    c2: float
    gamma1: float
    gamma2: float
    omega_c: float = 0.0
    saturation: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "gain", "c1", "c2", "gamma1", "gamma2", "saturation"):
            value = getattr(self, name)
            if not np.isfinite(value) or value < 0:
                raise ValueError(f"{name} must be finite and non-negative, got {value}")
        if not np.isfinite(self.omega_c):
            raise ValueError("omega_c must be finite")

    @property
    def loss1(self) -> float:
        """Total loss rate of cavity 1 (mirror + absorption)."""
        return self.c1 + self.gamma1

    @property
    def loss2(self) -> float:
        """Total loss rate of cavity 2."""
        return self.c2 + self.gamma2

    @property
    def loss_sum(self) -> float:
        return self.loss1 + self.loss2

    @property
    def loss_diff(self) -> float:
        return self.loss1 - self.loss2

    @property
    def net_gain(self) -> float:
        """Net amplification of cavity 1: gain minus its total loss."""
        return self.gain - self.loss1

    def with_kappa(self, kappa: float) -> "SystemParams":
        return replace(self, kappa=kappa)


def derive_gain_coefficients(coupling: float, pump_rate: float, atom_decay: float) -> tuple[float, float]:
    """Linear and saturation gain rates from the microscopic medium constants.

    An inverted atomic medium with single-atom coupling ``coupling``,
    incoherent pumping ``pump_rate`` and atomic linewidth ``atom_decay``
    amplifies at A = 2 g^2 r / Y^2 to lowest order, and saturates with
    B = (4 g^2 / Y^2) A.  Returns (A, B).
    """
    if atom_decay <= 0:
        raise ValueError("atom_decay must be positive")
    if coupling < 0 or pump_rate < 0:
        raise ValueError("coupling and pump_rate must be non-negative")
    a = 2.0 * coupling**2 * pump_rate / atom_decay**2
    b = (4.0 * coupling**2 / atom_decay**2) * a
    return a, b


def build_hamiltonian(params: SystemParams, cutoffs: FockCutoffs) -> np.ndarray:
    """Coherent part: common detuning plus antisymmetric coupling."""
    a1 = annihilator(1, cutoffs)
    a2 = annihilator(2, cutoffs)
    n1 = number_op(1, cutoffs)
    n2 = number_op(2, cutoffs)
    coupling = a1 @ a2.conj().T - a1.conj().T @ a2
    return params.omega_c * (n1 + n2) + 1j * params.kappa * coupling


def build_effective_hamiltonian(params: SystemParams, cutoffs: FockCutoffs) -> np.ndarray:
    """Non-Hermitian Hamiltonian: H plus the anti-Hermitian gain/loss terms.

    H_eff = H + (i/2) gain * n1 - (i/2)(loss1 * n1 + loss2 * n2).

    This generates the short-time no-jump dynamics and carries the
    Hamiltonian exceptional points of the dimer.  Saturation terms are
    quadratic in the jump operators and are not included here.
    """
    h = build_hamiltonian(params, cutoffs)
    n1 = number_op(1, cutoffs)
    n2 = number_op(2, cutoffs)
    return h + 0.5j * params.gain * n1 - 0.5j * (params.loss1 * n1 + params.loss2 * n2)


def build_lindblad_ops(params: SystemParams, cutoffs: FockCutoffs,
                       model: GainModel = GainModel.LINEAR) -> list[np.ndarray]:
    """Jump operators of the master equation for the chosen gain model."""
    a1 = annihilator(1, cutoffs)
    a2 = annihilator(2, cutoffs)
    a = params.gain
    b = params.saturation
    ops: list[np.ndarray] = []
    if model is GainModel.LINEAR:
        if b != 0.0:
            raise ValueError("LINEAR gain model requires saturation == 0")
        if a > 0:
            ops.append(np.sqrt(a) * a1.conj().T)
    elif model is GainModel.SCULLY_LAMB:
        if a == 0.0 and b > 0.0:
            raise ValueError("saturation without gain is outside the model's validity")
        if a > 0:
            sat = (b / (2.0 * a)) * (a1 @ a1.conj().T)
            ops.append(np.sqrt(a) * (a1.conj().T @ (np.eye(cutoffs.dim) - sat)))
        if b > 0:
            ops.append(0.5 * np.sqrt(3.0 * b) * (a1 @ a1.conj().T))
    else:  # pragma: no cover - enum is closed
        raise ValueError(f"unknown gain model {model}")
    if params.loss1 > 0:
        ops.append(np.sqrt(params.loss1) * a1)
    if params.loss2 > 0:
        ops.append(np.sqrt(params.loss2) * a2)
    return ops


@dataclass(frozen=True)
class GeneratorSpec:
    """Hamiltonian and jump operators that define a Lindblad generator."""

    hamiltonian: np.ndarray
    jump_ops: tuple[np.ndarray, ...]
    params: SystemParams
    cutoffs: FockCutoffs
    model: GainModel


def build_generator(params: SystemParams, cutoffs: FockCutoffs,
                    model: GainModel = GainModel.LINEAR) -> GeneratorSpec:
    """Bundle the coherent and dissipative pieces of the master equation."""
    return GeneratorSpec(
        hamiltonian=build_hamiltonian(params, cutoffs),
        jump_ops=tuple(build_lindblad_ops(params, cutoffs, model)),
        params=params,
        cutoffs=cutoffs,
        model=model,
    )
