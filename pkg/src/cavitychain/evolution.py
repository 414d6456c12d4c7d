"""Density-matrix time evolution: exact unitary step plus Euler dissipator.

Each step conjugates the state with U = exp(-i*dt*H), computed once from the
Hamiltonian eigendecomposition, then adds dt times the standard dissipator
sum(L rho L^dag - (L^dag L rho + rho L^dag L)/2) over all jump operators.
The scheme is first order in dt through the dissipator; the unitary half is
exact.  A vectorized-Liouvillian oracle with a hand-rolled matrix exponential
provides an independent second route for convergence testing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import AssembledChain, ChainConfig, LindbladTerm, assemble
from .modes import (
    DensityMatrix,
    ModeKind,
    Operator,
    ProjectedBasis,
    hermiticity_defect,
)

ORTHONORMALITY_TOL = 1e-10
UNITARITY_TOL = 1e-10
RECONSTRUCTION_TOL = 1e-9
OBSERVABLE_IMAG_TOL = 1e-9
POSITIVITY_FLOOR = -1e-6
ORACLE_MAX_DIM = 16


class Propagator:
    """Eigendecomposition of a Hamiltonian with cached unitary steps."""

    def __init__(
        self, basis: ProjectedBasis, eigenvalues: np.ndarray, eigenvectors: np.ndarray
    ) -> None:
        self.basis = basis
        self.eigenvalues = np.asarray(eigenvalues, dtype=float)
        self.eigenvectors = np.ascontiguousarray(eigenvectors, dtype=complex)
        gram = self.eigenvectors.conj().T @ self.eigenvectors
        defect = np.abs(gram - np.eye(basis.dim)).max()
        if defect > ORTHONORMALITY_TOL:
            raise ValueError(f"eigenvector columns not orthonormal: defect {defect:.3e}")
        self._unitaries: dict[float, np.ndarray] = {}

    def unitary(self, dt: float) -> np.ndarray:
        """U = V diag(exp(-i*lambda*dt)) V^dag, cached per dt."""
        key = float(dt)
        cached = self._unitaries.get(key)
        if cached is None:
            phases = np.exp(-1j * self.eigenvalues * key)
            cached = (self.eigenvectors * phases) @ self.eigenvectors.conj().T
            check = cached @ cached.conj().T
            defect = np.abs(check - np.eye(self.basis.dim)).max()
            if defect > UNITARITY_TOL:
                raise ArithmeticError(f"propagator not unitary: defect {defect:.3e}")
            self._unitaries[key] = cached
        return cached


def diagonalize(hamiltonian: Operator) -> Propagator:
    """Eigendecompose a Hermitian operator into a step propagator."""
    defect = hermiticity_defect(hamiltonian.elements)
    if not hamiltonian.hermitian and defect > 1e-12:
        raise ValueError(f"cannot diagonalize non-Hermitian operator (defect {defect:.3e})")
    w, v = np.linalg.eigh(hamiltonian.elements)
    rebuilt = (v * w) @ v.conj().T
    scale = max(1.0, float(np.abs(hamiltonian.elements).max()))
    err = np.abs(rebuilt - hamiltonian.elements).max() / scale
    if err > RECONSTRUCTION_TOL:
        raise ArithmeticError(f"eigendecomposition reconstruction error {err:.3e}")
    return Propagator(hamiltonian.basis, w, v)


class StepEngine:
    """Precomputed arrays for repeated steps at one fixed dt."""

    def __init__(self, propagator: Propagator, terms: list[LindbladTerm], dt: float) -> None:
        if dt <= 0:
            raise ValueError(f"dt must be positive, got {dt}")
        self.dt = float(dt)
        self.unitary = propagator.unitary(dt)
        self.unitary_dag = self.unitary.conj().T.copy()
        dim = propagator.basis.dim
        if terms:
            self.jumps = np.stack([t.operator.elements for t in terms])
            self.jumps_dag = self.jumps.conj().transpose(0, 2, 1).copy()
            # 0.5 * sum of L^dag L, shared by both anticommutator halves
            self.half_rate = 0.5 * np.einsum(
                "aij,ajk->ik", self.jumps_dag, self.jumps
            )
        else:
            self.jumps = None
            self.jumps_dag = None
            self.half_rate = np.zeros((dim, dim), dtype=complex)

    def step(self, rho: np.ndarray) -> np.ndarray:
        out = self.unitary @ rho @ self.unitary_dag
        if self.jumps is not None:
            gained = np.matmul(np.matmul(self.jumps, rho), self.jumps_dag).sum(axis=0)
            out += self.dt * (
                gained - (self.half_rate @ rho + rho @ self.half_rate)
            )
        return out


def lindblad_step(
    rho: DensityMatrix, propagator: Propagator, terms: list[LindbladTerm], dt: float
) -> DensityMatrix:
    """One discrete evolution step of the density matrix."""
    if rho.basis is not propagator.basis:
        raise ValueError("state and propagator live on different bases")
    engine = StepEngine(propagator, list(terms), dt)
    return DensityMatrix(rho.basis, engine.step(rho.elements))


def step_count(t_end: float, dt: float) -> int:
    """Number of steps covering [0, t_end]; tolerant of t_end/dt roundoff."""
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if t_end < 0:
        raise ValueError(f"t_end must be >= 0, got {t_end}")
    return max(0, math.ceil(t_end / dt - 1e-9))


@dataclass
class TrajectoryRecord:
    """Sampled observables of one evolution run.

    photon and exciton are (n_samples, n_sites) population arrays in site
    order; min_eigenvalue and hermiticity are validation columns sampled at
    the same instants.  final_state is the exact end-of-run density matrix.
    """

    times: np.ndarray
    sink: np.ndarray
    photon: np.ndarray
    exciton: np.ndarray
    trace: np.ndarray
    min_eigenvalue: np.ndarray
    hermiticity: np.ndarray
    final_state: DensityMatrix

    def __post_init__(self) -> None:
        if len(self.times) > 1 and not np.all(np.diff(self.times) > 0):
            raise ValueError("sample times must be strictly increasing")

    @property
    def n_sites(self) -> int:
        return self.photon.shape[1]

    @property
    def max_trace_drift(self) -> float:
        return float(np.abs(self.trace - 1.0).max())

    @property
    def min_eigenvalue_seen(self) -> float:
        return float(self.min_eigenvalue.min())

    @property
    def max_hermiticity_defect(self) -> float:
        return float(self.hermiticity.max())

    def positivity_flags(self, floor: float = POSITIVITY_FLOOR) -> np.ndarray:
        """1 where the sampled state dipped below the positivity floor."""
        return (self.min_eigenvalue < floor).astype(np.int64)


def evolve_assembled(
    chain: AssembledChain,
    propagator: Propagator,
    t_end: float,
    dt: float,
    sample_every: int = 1,
) -> TrajectoryRecord:
    """Run the step loop on a prebuilt chain, sampling every few steps."""
    if sample_every < 1:
        raise ValueError(f"sample_every must be >= 1, got {sample_every}")
    n_steps = step_count(t_end, dt)
    engine = StepEngine(propagator, list(chain.lindblad_terms), dt)
    basis = chain.basis
    layout = basis.layout
    occ = basis.occupations
    sink_col = occ[:, layout.index(ModeKind.SINK, layout.n_sites)].astype(float)
    photon_cols = occ[:, list(layout.indices(ModeKind.PHOTON))].astype(float)
    exciton_cols = occ[:, list(layout.indices(ModeKind.EXCITON))].astype(float)

    times, sink, photon, exciton = [], [], [], []
    trace, min_eig, herm = [], [], []
    rho = chain.initial.elements.copy()
    for i in range(n_steps + 1):
        if i % sample_every == 0 or i == n_steps:
            populations = np.diag(rho).real
            times.append(i * dt)
            sink.append(float(populations @ sink_col))
            photon.append(populations @ photon_cols)
            exciton.append(populations @ exciton_cols)
            trace.append(float(populations.sum()))
            min_eig.append(float(np.linalg.eigvalsh(rho)[0]))
            herm.append(hermiticity_defect(rho))
        if i < n_steps:
            rho = engine.step(rho)

    return TrajectoryRecord(
        times=np.array(times),
        sink=np.array(sink),
        photon=np.array(photon),
        exciton=np.array(exciton),
        trace=np.array(trace),
        min_eigenvalue=np.array(min_eig),
        hermiticity=np.array(herm),
        final_state=DensityMatrix(basis, rho),
    )


def evolve(
    config: ChainConfig, t_end: float, dt: float = 0.01, sample_every: int = 1
) -> TrajectoryRecord:
    """Assemble the chain from its config and evolve to t_end."""
    chain = assemble(config)
    propagator = diagonalize(chain.hamiltonian)
    return evolve_assembled(chain, propagator, t_end, dt, sample_every)


def observable(rho: DensityMatrix, op: Operator) -> float:
    """Re tr(op * rho); complains if a Hermitian observable turns complex."""
    if rho.basis is not op.basis:
        raise ValueError("state and operator live on different bases")
    value = complex(np.einsum("ij,ji->", op.elements, rho.elements))
    if op.hermitian and abs(value.imag) > OBSERVABLE_IMAG_TOL:
        raise ArithmeticError(
            f"Hermitian observable returned imaginary part {value.imag:.3e}"
        )
    return value.real


def superoperator_oracle(config: ChainConfig, t: float) -> DensityMatrix:
    """Evolve by exponentiating the full Liouvillian acting on vec(rho).

    Independent verification route: no step discretization, no reuse of the
    eigendecomposition path.  Cost scales as dim**4, hence the small-dimension
    guard.  Vectorization is row-major: vec(A X B) = (A kron B^T) vec(X).
    """
    chain = assemble(config)
    dim = chain.basis.dim
    if dim > ORACLE_MAX_DIM:
        raise ValueError(f"oracle limited to dimension {ORACLE_MAX_DIM}, got {dim}")
    eye = np.eye(dim)
    h = chain.hamiltonian.elements
    liouvillian = -1j * (np.kron(h, eye) - np.kron(eye, h.T))
    for term in chain.lindblad_terms:
        jump = term.operator.elements
        absorbed = jump.conj().T @ jump
        liouvillian += np.kron(jump, jump.conj()) - 0.5 * (
            np.kron(absorbed, eye) + np.kron(eye, absorbed.T)
        )
    propagated = _expm_taylor(liouvillian * t) @ chain.initial.elements.reshape(-1)
    return DensityMatrix(chain.basis, propagated.reshape(dim, dim))


def _expm_taylor(matrix: np.ndarray, tol: float = 1e-12, max_terms: int = 300) -> np.ndarray:
    """Matrix exponential by scaling-and-squaring over a plain Taylor sum."""
    norm = float(np.abs(matrix).sum(axis=1).max())
    squarings = max(0, int(np.ceil(np.log2(norm)))) if norm > 1.0 else 0
    scaled = matrix / (2.0 ** squarings)
    dim = matrix.shape[0]
    result = np.eye(dim, dtype=complex)
    term = np.eye(dim, dtype=complex)
    for k in range(1, max_terms + 1):
        term = term @ scaled / k
        result += term
        if np.abs(term).max() < tol:
            break
    else:
        raise ArithmeticError("Taylor series for the matrix exponential did not converge")
    for _ in range(squarings):
        result = result @ result
    return result
