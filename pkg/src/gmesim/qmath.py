"""Dense complex linear algebra for small multi-qubit systems (dimension <= 16).

Provides the tensor-product, eigendecomposition, partial-trace and
partial-transpose primitives that the rest of the simulator is built on,
together with the validated ``PureState`` / ``DensityMatrix`` value types.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

HERMITIAN_TOL = 1e-10
NORM_TOL = 1e-12
PSD_TOL = 1e-10

# Single-qubit constants used throughout.
I2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
HADAMARD = (SIGMA_X + SIGMA_Z) / np.sqrt(2)
PAULIS = {"I": I2, "X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}


class QmathError(Exception):
    """Base class for errors raised by this module."""


class NotHermitian(QmathError):
    pass


class BadSubsystem(QmathError):
    pass


class DimensionMismatch(QmathError):
    pass


def as_matrix(m) -> np.ndarray:
    """Coerce to a finite, 2-D complex ndarray."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionMismatch(f"expected a matrix, got ndim={a.ndim}")
    if not np.all(np.isfinite(a.view(float))):
        raise QmathError("matrix contains NaN or Inf entries")
    return a


def kron(a, b) -> np.ndarray:
    """Kronecker product of two complex matrices."""
    return np.kron(as_matrix(a), as_matrix(b))


def kron_all(*ms) -> np.ndarray:
    """Left-to-right Kronecker product of several matrices."""
    out = as_matrix(ms[0])
    for m in ms[1:]:
        out = np.kron(out, as_matrix(m))
    return out


@dataclass(frozen=True)
class PureState:
    """Normalized amplitude vector over a tensor product of subsystems.

    ``dims`` lists the subsystem dimensions left to right; index 0 is the
    leftmost tensor factor.
    """

    dims: tuple[int, ...]
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(amps) != prod(self.dims):
            raise DimensionMismatch(
                f"amplitude vector of length {len(amps)} does not match dims {self.dims}"
            )
        if not np.all(np.isfinite(amps.view(float))):
            raise QmathError("amplitudes contain NaN or Inf")
        norm = float(np.sum(np.abs(amps) ** 2))
        if abs(norm - 1.0) > NORM_TOL:
            raise QmathError(f"state not normalized: sum |amp|^2 = {norm!r}")

    @property
    def dim(self) -> int:
        return len(self.amplitudes)

    def density(self) -> "DensityMatrix":
        """Projector |psi><psi| as a DensityMatrix."""
        v = self.amplitudes
        return DensityMatrix(self.dims, np.outer(v, v.conj()))

    def overlap(self, other: "PureState") -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace operator with subsystem dimension list."""

    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        m = as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        d = prod(self.dims)
        if m.shape != (d, d):
            raise DimensionMismatch(f"matrix shape {m.shape} does not match dims {self.dims}")
        if np.max(np.abs(m - m.conj().T)) > NORM_TOL:
            raise NotHermitian("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > NORM_TOL:
            raise QmathError(f"trace is {np.trace(m).real!r}, expected 1")
        if float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2))) < -PSD_TOL:
            raise QmathError("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def purity(self) -> float:
        return float(np.trace(self.matrix @ self.matrix).real)


def _jacobi_rotate(a: np.ndarray, v: np.ndarray, p: int, q: int) -> None:
    """Zero a[p, q] with a complex Jacobi rotation, accumulating into v."""
    apq = a[p, q]
    mag = abs(apq)
    if mag == 0.0:
        return
    u = apq / mag  # phase factor carrying the complex part
    app = a[p, p].real
    aqq = a[q, q].real
    tau = (aqq - app) / (2.0 * mag)
    t = np.sign(tau) / (abs(tau) + np.hypot(1.0, tau)) if tau != 0.0 else 1.0
    c = 1.0 / np.hypot(1.0, t)
    s = t * c
    # Unitary J = identity except J[p,p]=c, J[p,q]=s, J[q,p]=-s*conj(u), J[q,q]=c*conj(u).
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * np.conj(u) * col_q
    a[:, q] = s * col_p + c * np.conj(u) * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * u * row_q
    a[q, :] = s * row_p + c * u * row_q
    a[p, q] = 0.0
    a[q, p] = 0.0
    a[p, p] = a[p, p].real
    a[q, q] = a[q, q].real
    col_p = v[:, p].copy()
    col_q = v[:, q].copy()
    v[:, p] = c * col_p - s * np.conj(u) * col_q
    v[:, q] = s * col_p + c * np.conj(u) * col_q


def hermitian_eig(h) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.

    Returns ``(eigenvalues, eigenvectors)`` with real eigenvalues sorted in
    descending order and orthonormal eigenvectors as columns.  Each
    eigenvector is phase-fixed so its first nonzero component is real and
    positive, making the output deterministic.

    Raises NotHermitian if the symmetry check fails.
    """
    h = as_matrix(h)
    n = h.shape[0]
    if h.shape[1] != n:
        raise DimensionMismatch("matrix must be square")
    if np.max(np.abs(h - h.conj().T)) > HERMITIAN_TOL:
        raise NotHermitian("matrix is not Hermitian within tolerance")
    a = ((h + h.conj().T) / 2).astype(complex)
    v = np.eye(n, dtype=complex)
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(100):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                off = max(off, abs(a[p, q]))
        if off <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) > 1e-16 * scale:
                    _jacobi_rotate(a, v, p, q)
    vals = np.real(np.diag(a))
    order = np.argsort(-vals, kind="stable")
    vals = vals[order]
    vecs = v[:, order]
    for k in range(n):
        col = vecs[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if len(nz):
            phase = col[nz[0]] / abs(col[nz[0]])
            vecs[:, k] = col / phase
    return vals, vecs


def partial_trace(rho: DensityMatrix, keep) -> DensityMatrix:
    """Reduced state over the subsystems in ``keep`` (original ordering kept)."""
    keep = sorted(set(int(k) for k in keep))
    n = len(rho.dims)
    if not keep:
        raise BadSubsystem("keep must be a nonempty subsystem index set")
    for k in keep:
        if k < 0 or k >= n:
            raise BadSubsystem(f"subsystem index {k} out of range for dims {rho.dims}")
    dims = list(rho.dims)
    t = rho.matrix.reshape(dims + dims)
    traced = [i for i in range(n) if i not in keep]
    for idx in sorted(traced, reverse=True):
        t = np.trace(t, axis1=idx, axis2=idx + len(dims))
        dims.pop(idx)
    d = prod(dims)
    return DensityMatrix(tuple(dims), t.reshape(d, d))


def partial_transpose(rho: DensityMatrix, subsystem: int) -> np.ndarray:
    """Partial transpose of a two-qubit state on the chosen factor."""
    if rho.dims != (2, 2):
        raise DimensionMismatch(f"partial_transpose expects dims (2, 2), got {rho.dims}")
    if subsystem not in (0, 1):
        raise BadSubsystem(f"subsystem must be 0 or 1, got {subsystem}")
    t = rho.matrix.reshape(2, 2, 2, 2)
    if subsystem == 0:
        t = t.transpose(2, 1, 0, 3)
    else:
        t = t.transpose(0, 3, 2, 1)
    return t.reshape(4, 4)


def fidelity_pure(rho: DensityMatrix, psi: PureState) -> float:
    """Overlap <psi| rho |psi> with a pure target state."""
    if rho.dim != psi.dim:
        raise DimensionMismatch(
            f"state dimension {psi.dim} does not match density matrix dimension {rho.dim}"
        )
    v = psi.amplitudes
    val = complex(np.vdot(v, rho.matrix @ v))
    return float(val.real)
