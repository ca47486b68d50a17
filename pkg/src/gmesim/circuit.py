"""Abstract four-qubit circuit for the mediated-entanglement simulator.

Qubit ordering is (spin A, geometry 1, geometry 2, spin B); index 0 is the
leftmost tensor factor.  Qubit value 0 maps to vertical polarization V and
1 to horizontal polarization H throughout the artifact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from math import pi

import numpy as np

from . import qmath
from .qmath import DensityMatrix, DimensionMismatch, PureState

# Fixed qubit <-> polarization dictionary (serialized with every output).
BASIS_CONVENTION = {"0": "V", "1": "H"}
POL_LABELS = ("VV", "VH", "HV", "HH")

N_QUBITS = 4
SPIN_QUBITS = (0, 3)
GEOMETRY_QUBITS = (1, 2)


def singlet() -> PureState:
    """(|HV> - |VH>)/sqrt(2) in the 0=V, 1=H encoding."""
    v = np.zeros(4, dtype=complex)
    v[2] = 1 / np.sqrt(2)   # |HV>
    v[1] = -1 / np.sqrt(2)  # |VH>
    return PureState((2, 2), v)


def ideal_spin_state(phi: float) -> PureState:
    """(|00> + |01> + |10> + e^{i phi}|11>)/2, the post-recombination spin state."""
    v = np.array([1, 1, 1, np.exp(1j * phi)], dtype=complex) / 2
    return PureState((2, 2), v)


def cphase(phi: float) -> np.ndarray:
    return np.diag([1, 1, 1, np.exp(1j * phi)]).astype(complex)


CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)


@dataclass(frozen=True)
class Gate:
    name: str
    matrix: np.ndarray
    targets: tuple[int, ...]


@dataclass(frozen=True)
class GmeCircuit:
    """Gate list realizing superposition, free fall and recombination stages."""

    phi: float
    phases: tuple[float, float, float, float]
    gates: tuple[Gate, ...] = field(repr=False)

    def to_json_dict(self) -> dict:
        return {
            "phi": float(self.phi),
            "phases": [float(p) for p in self.phases],
            "gates": [{"name": g.name, "targets": list(g.targets)} for g in self.gates],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)


def geometry_phase_gate(phases) -> np.ndarray:
    """Diagonal phase on the geometry branches |00>, |01>, |10>, |11>."""
    return np.diag(np.exp(1j * np.asarray(phases, dtype=float))).astype(complex)


def build_gme_circuit(phi: float = pi, phases=None) -> GmeCircuit:
    """Assemble the circuit for free-fall phase ``phi``.

    ``phases`` optionally gives the four per-branch phases on the geometry
    ququart; the default (0, 0, 0, phi) keeps only the closest-approach
    branch, which is the regime the simulator targets.
    """
    if not np.isfinite(phi):
        raise ValueError("phi must be finite")
    if phases is None:
        phases = (0.0, 0.0, 0.0, float(phi))
    phases = tuple(float(p) for p in phases)
    if len(phases) != 4:
        raise ValueError("phases must have exactly four entries")
    gates = (
        Gate("H", qmath.HADAMARD, (0,)),
        Gate("H", qmath.HADAMARD, (3,)),
        Gate("CNOT", CNOT, (0, 1)),
        Gate("CNOT", CNOT, (3, 2)),
        Gate("GEOMETRY_PHASE", geometry_phase_gate(phases), (1, 2)),
        Gate("CNOT", CNOT, (0, 1)),
        Gate("CNOT", CNOT, (3, 2)),
    )
    return GmeCircuit(float(phi), phases, gates)


def apply_gate(state: np.ndarray, gate: np.ndarray, targets: tuple[int, ...]) -> np.ndarray:
    """Apply a k-qubit gate to the given target qubits of a 4-qubit state."""
    k = len(targets)
    psi = state.reshape([2] * N_QUBITS)
    psi = np.moveaxis(psi, targets, range(k))
    shape = psi.shape
    psi = gate.reshape([2] * (2 * k)).reshape(2**k, 2**k) @ psi.reshape(2**k, -1)
    psi = psi.reshape(shape)
    psi = np.moveaxis(psi, range(k), targets)
    return psi.reshape(-1)


def run_circuit(c: GmeCircuit, stop_after_free_fall: bool = False) -> PureState:
    """Run the circuit on |0000> and return the 16-dimensional state.

    With ``stop_after_free_fall`` the state is returned at the mid-circuit
    checkpoint, before the recombination stage erases the which-path record
    held by the geometry qubits.
    """
    psi = np.zeros(16, dtype=complex)
    psi[0] = 1.0
    n_gates = 5 if stop_after_free_fall else len(c.gates)
    for gate in c.gates[:n_gates]:
        psi = apply_gate(psi, gate.matrix, gate.targets)
    return PureState((2, 2, 2, 2), psi)


def full_unitary(c: GmeCircuit) -> np.ndarray:
    """End-to-end 16x16 unitary of the circuit."""
    u = np.eye(16, dtype=complex)
    for gate in c.gates:
        u = np.column_stack([apply_gate(u[:, k], gate.matrix, gate.targets) for k in range(16)])
    return u


def reduced_spin_state(full: PureState) -> DensityMatrix:
    """Trace the geometry ququart out of the 16-dimensional state."""
    if full.dim != 16:
        raise DimensionMismatch(f"expected a 16-dimensional state, got {full.dim}")
    return qmath.partial_trace(full.density(), keep=SPIN_QUBITS)


def _canonical_rotation() -> np.ndarray:
    """Single-qubit unitary G with (I x G) |psi_ideal(pi)> = |singlet>.

    Solved from the coefficient matrix of the ideal phi=pi state, which is
    maximally entangled, so G is unique up to global phase; the phase is
    fixed by the construction below.
    """
    m = ideal_spin_state(pi).amplitudes.reshape(2, 2)
    s = singlet().amplitudes.reshape(2, 2)
    g = np.linalg.solve(m, s).T
    if np.max(np.abs(g @ g.conj().T - np.eye(2))) > 1e-12:
        raise qmath.QmathError("canonical rotation is not unitary")
    return g


CANONICAL_G = _canonical_rotation()
U_CANON = np.kron(np.eye(2, dtype=complex), CANONICAL_G)


def canonicalize_to_singlet(rho: DensityMatrix) -> DensityMatrix:
    """Apply the fixed local frame change I x G taking the ideal state to the singlet.

    The same map is applied to every input so that noise families transform
    consistently; it never changes negativity or any other local-unitary
    invariant.
    """
    if rho.dims != (2, 2):
        raise DimensionMismatch(f"expected a two-qubit state, got dims {rho.dims}")
    return DensityMatrix((2, 2), U_CANON @ rho.matrix @ U_CANON.conj().T)


def canonicalize_pure(psi: PureState) -> PureState:
    if psi.dim != 4:
        raise DimensionMismatch(f"expected a two-qubit state, got dim {psi.dim}")
    return PureState((2, 2), U_CANON @ psi.amplitudes)
