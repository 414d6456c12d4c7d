"""Chain assembly: Hamiltonian, jump operators and initial state from a config.

The model is a row of optical cavities, each holding one two-level atom.
Photons tunnel between neighbouring cavities (rate ``k``), exchange excitation
with the local atom (strength ``mu``), and the last site drains into a sink
mode through a jump operator.  Dephasing comes in two flavours: Lindblad-like
number-operator jumps of strength ``g``, or explicit phonon modes coupled to
the atomic excitation inside the Hamiltonian.

Two conventions worth knowing before reading numbers off the output:

* Jump operators carry their rate as a plain prefactor, L = rate * A, so the
  effective transition rate in the master equation is rate**2.
* The phonon coupling enters the Hamiltonian as (g + conj(g)), i.e. real g
  contributes 2*g.  Both follow the model definition this code reproduces and
  are kept literal on purpose.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .modes import (
    BasisMismatchError,
    DensityMatrix,
    ModeKind,
    ModeLayout,
    Operator,
    ProjectedBasis,
    QuantaWindow,
    enumerate_basis,
    hermiticity_defect,
    ladder_lower,
    ladder_raise,
    transfer_op,
)


class DephasingModel(Enum):
    NONE = "none"
    LINDBLAD_LIKE = "lindblad"
    UNITARY_PHONON = "unitary"


class SinkCoupling(Enum):
    """Which mode of the last site feeds the sink."""

    LAST_PHOTON = "photon"
    LAST_EXCITON = "exciton"


class DephasingTarget(Enum):
    """Which number operator the Lindblad-like dephasing jumps use."""

    PHOTON_NUMBER = "photon"
    EXCITON_NUMBER = "exciton"


class InitialState(Enum):
    VACUUM = "vacuum"
    PHOTON_IN_FIRST_CAVITY = "photon1"


@dataclass(frozen=True)
class ChainConfig:
    """Full parameter set of one chain model.

    ``window`` and ``initial_state`` may be left as None: pumped chains
    (rate_in > 0) default to the widest window the two-level modes allow and a
    vacuum start, undriven chains default to a single-excitation window with
    the photon placed in the first cavity.
    """

    n_atoms: int
    k: float = 0.0
    mu: float = 0.0
    g: float = 0.0
    omega_a: float = 0.1
    omega_p: float = 0.1
    omega_g: float = 0.01
    rate_in: float = 0.0
    rate_out: float = 0.0
    dephasing: DephasingModel = DephasingModel.LINDBLAD_LIKE
    sink_coupling: SinkCoupling = SinkCoupling.LAST_PHOTON
    dephasing_target: DephasingTarget = DephasingTarget.PHOTON_NUMBER
    cavity_loss: float = 0.0
    window: QuantaWindow | None = None
    initial_state: InitialState | None = None

    def __post_init__(self) -> None:
        if self.n_atoms < 1:
            raise ValueError(f"n_atoms must be >= 1, got {self.n_atoms}")
        for name in ("g", "rate_in", "rate_out", "cavity_loss"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.window is None:
            cap = 2 * self.n_atoms + 1 if self.rate_in > 0 else 1
            object.__setattr__(self, "window", QuantaWindow(0, cap))
        if self.initial_state is None:
            default = (
                InitialState.VACUUM
                if self.rate_in > 0
                else InitialState.PHOTON_IN_FIRST_CAVITY
            )
            object.__setattr__(self, "initial_state", default)
        if (
            self.initial_state is InitialState.PHOTON_IN_FIRST_CAVITY
            and self.window.max_quanta < 1
        ):
            raise ValueError("window.max_quanta must be >= 1 to hold the initial photon")


@dataclass(frozen=True)
class LindbladTerm:
    """One jump operator, rate already folded in (L = rate * A)."""

    label: str
    operator: Operator


def build_layout(config: ChainConfig) -> ModeLayout:
    """Mode layout implied by the config: phonons present iff unitary dephasing.

    Photon modes are two-level: each cavity holds at most one photon, which is
    the natural cap of the chain being modelled.  Phonon levels follow the
    window's phonon_cap.
    """
    return ModeLayout.chain(
        config.n_atoms,
        phonons=config.dephasing is DephasingModel.UNITARY_PHONON,
        photon_levels=2,
        phonon_levels=max(2, config.window.phonon_cap + 1),
    )


def build_basis(config: ChainConfig) -> ProjectedBasis:
    return enumerate_basis(build_layout(config), config.window)


def _check_basis(config: ChainConfig, basis: ProjectedBasis) -> None:
    if basis.layout != build_layout(config) or basis.window != config.window:
        raise BasisMismatchError("basis was not built from this config")


def build_hamiltonian(config: ChainConfig, basis: ProjectedBasis) -> Operator:
    """Chain Hamiltonian: mode energies, photon tunnelling, photon-atom
    exchange, and (unitary dephasing only) phonon-excitation coupling."""
    _check_basis(config, basis)
    layout = basis.layout
    n = config.n_atoms
    dim = basis.dim
    h = np.zeros((dim, dim), dtype=complex)

    occ = basis.occupations
    for i in layout.indices(ModeKind.PHOTON):
        h[np.diag_indices(dim)] += config.omega_p * occ[:, i]
    for i in layout.indices(ModeKind.EXCITON):
        h[np.diag_indices(dim)] += config.omega_a * occ[:, i]
    for i in layout.indices(ModeKind.PHONON):
        h[np.diag_indices(dim)] += config.omega_g * occ[:, i]

    for site in range(1, n):
        hop = transfer_op(
            basis,
            layout.index(ModeKind.PHOTON, site),
            layout.index(ModeKind.PHOTON, site + 1),
        ).elements
        h += config.k * hop + np.conj(config.k) * hop.conj().T

    for site in range(1, n + 1):
        exch = transfer_op(
            basis,
            layout.index(ModeKind.PHOTON, site),
            layout.index(ModeKind.EXCITON, site),
        ).elements
        h += config.mu * exch + np.conj(config.mu) * exch.conj().T

    if config.dephasing is DephasingModel.UNITARY_PHONON:
        # (g + g*) doubles real coupling strengths; kept literal.
        strength = config.g + np.conj(config.g)
        for site in range(1, n + 1):
            b = layout.index(ModeKind.PHONON, site)
            displacement = (
                ladder_lower(basis, b).elements + ladder_raise(basis, b).elements
            )
            n_exc = np.diag(occ[:, layout.index(ModeKind.EXCITON, site)].astype(complex))
            h += strength * (displacement @ n_exc)

    defect = hermiticity_defect(h)
    if defect > 1e-12:
        raise ArithmeticError(f"assembled Hamiltonian not Hermitian: defect {defect:.3e}")
    return Operator(basis, h, hermitian=True)


def build_lindblad_terms(config: ChainConfig, basis: ProjectedBasis) -> list[LindbladTerm]:
    """Jump operators in deterministic order: input, output, dephasing, loss.

    Terms with zero rate are omitted.  Rates are folded into the operators
    (L = rate * A), so the effective jump rate is rate**2.
    """
    _check_basis(config, basis)
    layout = basis.layout
    n = config.n_atoms
    terms: list[LindbladTerm] = []

    if config.rate_in > 0:
        initial_quanta = (
            1 if config.initial_state is InitialState.PHOTON_IN_FIRST_CAVITY else 0
        )
        if initial_quanta >= config.window.max_quanta:
            warnings.warn(
                "window.max_quanta is saturated by the initial state; "
                "the pump acts as a projected-out zero on saturated states",
                stacklevel=2,
            )
        pump = ladder_raise(basis, layout.index(ModeKind.PHOTON, 1))
        terms.append(LindbladTerm("input", _scaled(pump, config.rate_in)))

    if config.rate_out > 0:
        source_kind = (
            ModeKind.PHOTON
            if config.sink_coupling is SinkCoupling.LAST_PHOTON
            else ModeKind.EXCITON
        )
        drain = transfer_op(
            basis, layout.index(source_kind, n), layout.index(ModeKind.SINK, n)
        )
        terms.append(LindbladTerm("output", _scaled(drain, config.rate_out)))

    if config.dephasing is DephasingModel.LINDBLAD_LIKE and config.g > 0:
        target_kind = (
            ModeKind.PHOTON
            if config.dephasing_target is DephasingTarget.PHOTON_NUMBER
            else ModeKind.EXCITON
        )
        for site in range(1, n + 1):
            num = np.diag(
                basis.occupations[:, layout.index(target_kind, site)].astype(complex)
            )
            terms.append(
                LindbladTerm(f"dephasing_{site}", Operator(basis, config.g * num))
            )

    if config.cavity_loss > 0:
        for site in range(1, n + 1):
            leak = ladder_lower(basis, layout.index(ModeKind.PHOTON, site))
            terms.append(
                LindbladTerm(f"loss_{site}", _scaled(leak, config.cavity_loss))
            )

    return terms


def _scaled(op: Operator, rate: float) -> Operator:
    return Operator(op.basis, rate * op.elements)


def initial_density_matrix(config: ChainConfig, basis: ProjectedBasis) -> DensityMatrix:
    """Pure-state projector onto the configured starting occupation vector."""
    _check_basis(config, basis)
    occupation = [0] * len(basis.layout.modes)
    if config.initial_state is InitialState.PHOTON_IN_FIRST_CAVITY:
        occupation[basis.layout.index(ModeKind.PHOTON, 1)] = 1
    try:
        idx = basis.state_index(occupation)
    except KeyError:
        raise ValueError(
            f"initial state {tuple(occupation)} lies outside the quanta window"
        ) from None
    rho = np.zeros((basis.dim, basis.dim), dtype=complex)
    rho[idx, idx] = 1.0
    return DensityMatrix(basis, rho)


@dataclass(frozen=True)
class AssembledChain:
    """Everything the evolution engine needs, built once from a config."""

    config: ChainConfig
    layout: ModeLayout
    basis: ProjectedBasis
    hamiltonian: Operator
    lindblad_terms: tuple[LindbladTerm, ...]
    initial: DensityMatrix


def assemble(config: ChainConfig) -> AssembledChain:
    basis = build_basis(config)
    return AssembledChain(
        config=config,
        layout=basis.layout,
        basis=basis,
        hamiltonian=build_hamiltonian(config, basis),
        lindblad_terms=tuple(build_lindblad_terms(config, basis)),
        initial=initial_density_matrix(config, basis),
    )
