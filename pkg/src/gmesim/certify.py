"""Entanglement certification toolbox for two-qubit states.

Pauli correlators, the coherence witness W = 1 - |<XX> + <YY>|, CHSH at
fixed settings and the closed-form maximum over settings, Poissonian count
simulation, linear-inversion and maximum-likelihood tomography, partial
transpose reporting, and Monte Carlo error intervals.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import circuit, qmath
from .qmath import (
    DensityMatrix,
    DimensionMismatch,
    I2,
    PureState,
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
)

_PAULI_VEC = np.stack([SIGMA_X, SIGMA_Y, SIGMA_Z])
AXES = {"X": np.array([1.0, 0, 0]), "Y": np.array([0, 1.0, 0]), "Z": np.array([0, 0, 1.0])}
OUTCOME_LABELS = ("pp", "pm", "mp", "mm")


class CertifyError(Exception):
    pass


class MissingSetting(CertifyError):
    pass


def bloch_observable(axis: np.ndarray) -> np.ndarray:
    return np.tensordot(np.asarray(axis, dtype=float), _PAULI_VEC, axes=1)


@dataclass(frozen=True)
class MeasurementSetting:
    """A pair of local projective bases given as unit Bloch vectors."""

    basis_a: np.ndarray
    basis_b: np.ndarray

    def __post_init__(self):
        for name in ("basis_a", "basis_b"):
            v = np.asarray(getattr(self, name), dtype=float).reshape(3)
            if abs(np.linalg.norm(v) - 1.0) > 1e-12:
                raise CertifyError(f"{name} is not a unit Bloch vector: {v}")
            object.__setattr__(self, name, v)

    def observable(self) -> np.ndarray:
        return np.kron(bloch_observable(self.basis_a), bloch_observable(self.basis_b))

    def projectors(self) -> np.ndarray:
        """Outcome projectors in the order ++, +-, -+, --."""
        out = []
        pa = bloch_observable(self.basis_a)
        pb = bloch_observable(self.basis_b)
        for s1 in (1, -1):
            for s2 in (1, -1):
                out.append(np.kron((I2 + s1 * pa) / 2, (I2 + s2 * pb) / 2))
        return np.stack(out)


def setting(a: str | np.ndarray, b: str | np.ndarray) -> MeasurementSetting:
    """Build a setting from axis labels X/Y/Z or explicit Bloch vectors."""
    av = AXES[a] if isinstance(a, str) else np.asarray(a, dtype=float)
    bv = AXES[b] if isinstance(b, str) else np.asarray(b, dtype=float)
    return MeasurementSetting(av, bv)


PAULI_SETTINGS = tuple(setting(a, b) for a in "XYZ" for b in "XYZ")


@dataclass(frozen=True)
class CountsRecord:
    """Poisson-sampled outcome counts for one measurement setting."""

    setting: MeasurementSetting
    counts: tuple[int, int, int, int]
    total_expected: float

    @property
    def total(self) -> int:
        return int(sum(self.counts))


def _check_two_qubit(rho: DensityMatrix) -> None:
    if rho.dims != (2, 2):
        raise DimensionMismatch(f"expected a two-qubit state, got dims {rho.dims}")


def correlator(rho: DensityMatrix, s: MeasurementSetting) -> float:
    """tr(rho (a.sigma) x (b.sigma))."""
    _check_two_qubit(rho)
    return float(np.trace(rho.matrix @ s.observable()).real)


def correlation_matrix(rho: DensityMatrix) -> np.ndarray:
    """3x3 matrix T_ij = tr(rho sigma_i x sigma_j)."""
    _check_two_qubit(rho)
    t = np.empty((3, 3))
    for i in range(3):
        for j in range(3):
            t[i, j] = np.trace(rho.matrix @ np.kron(_PAULI_VEC[i], _PAULI_VEC[j])).real
    return t


def witness_w(rho: DensityMatrix) -> float:
    """W = 1 - |<XX> + <YY>|; W < 0 certifies entanglement."""
    _check_two_qubit(rho)
    exx = correlator(rho, setting("X", "X"))
    eyy = correlator(rho, setting("Y", "Y"))
    return 1.0 - abs(exx + eyy)


def singlet_optimal_settings() -> tuple[MeasurementSetting, ...]:
    """CHSH settings reaching 2 sqrt(2) on the singlet."""
    z = AXES["Z"]
    x = AXES["X"]
    b0 = -(z + x) / np.sqrt(2)
    b1 = (x - z) / np.sqrt(2)
    return (setting(z, b0), setting(z, b1), setting(x, b0), setting(x, b1))


def chsh(rho: DensityMatrix, settings) -> float:
    """|E(A0 B0) + E(A0 B1) + E(A1 B0) - E(A1 B1)| for four settings.

    ``settings`` lists the four (A_i, B_j) pairs in the order
    (A0B0, A0B1, A1B0, A1B1).
    """
    _check_two_qubit(rho)
    if len(settings) != 4:
        raise CertifyError("chsh needs exactly four settings")
    e = [correlator(rho, s) for s in settings]
    return abs(e[0] + e[1] + e[2] - e[3])


def chsh_max(rho: DensityMatrix) -> tuple[float, tuple[MeasurementSetting, ...]]:
    """Maximal CHSH value 2 sqrt(l1 + l2) over all settings, plus achieving settings.

    l1 >= l2 are the two largest eigenvalues of T^T T for the Pauli
    correlation matrix T.
    """
    t = correlation_matrix(rho)
    u, sv, vt = np.linalg.svd(t)
    s1, s2 = sv[0], sv[1]
    value = 2.0 * np.sqrt(s1 * s1 + s2 * s2)
    # Achieving settings: Alice along the top left singular vectors, Bob
    # along weighted combinations of the right ones.
    a0 = u[:, 0]
    a1 = u[:, 1]
    norm = np.hypot(s1, s2)
    if norm < 1e-15:
        # Zero correlation matrix: any settings achieve the (zero) maximum.
        return 0.0, singlet_optimal_settings()
    c, s = s1 / norm, s2 / norm
    # Signs: E(a_i, v_j) = s_i delta_ij with these conventions.
    b0 = c * vt[0, :] + s * vt[1, :]
    b1 = c * vt[0, :] - s * vt[1, :]
    settings = (setting(a0, b0), setting(a0, b1), setting(a1, b0), setting(a1, b1))
    return float(value), settings


def outcome_probabilities(rho: DensityMatrix, s: MeasurementSetting) -> np.ndarray:
    p = np.array([np.trace(rho.matrix @ pi).real for pi in s.projectors()])
    return np.clip(p, 0.0, 1.0)


def simulate_counts(
    rho: DensityMatrix, settings, n_per_setting: int, seed: int
) -> list[CountsRecord]:
    """Draw independent Poisson counts with means N p(outcome) per setting."""
    if n_per_setting < 1:
        raise CertifyError("n_per_setting must be >= 1")
    rng = np.random.default_rng(seed)
    records = []
    for s in settings:
        p = outcome_probabilities(rho, s)
        counts = tuple(int(c) for c in rng.poisson(n_per_setting * p))
        records.append(CountsRecord(s, counts, float(n_per_setting)))
    return records


def _axis_label(v: np.ndarray) -> str | None:
    for name, axis in AXES.items():
        if np.allclose(v, axis, atol=1e-9):
            return name
    return None


def _index_pauli_records(data) -> dict[tuple[str, str], CountsRecord]:
    table: dict[tuple[str, str], CountsRecord] = {}
    for rec in data:
        la = _axis_label(rec.setting.basis_a)
        lb = _axis_label(rec.setting.basis_b)
        if la and lb:
            table[(la, lb)] = rec
    missing = [(a, b) for a in "XYZ" for b in "XYZ" if (a, b) not in table]
    if missing:
        raise MissingSetting(f"missing Pauli settings: {missing}")
    return table


def tomography_linear(data) -> np.ndarray:
    """Linear-inversion estimate from the nine Pauli-pair settings.

    Hermitian and unit trace by construction, but possibly not PSD at
    finite counts.
    """
    table = _index_pauli_records(data)

    def freq(rec: CountsRecord) -> np.ndarray:
        n = rec.total
        if n == 0:
            raise MissingSetting("a setting has all-zero counts")
        return np.asarray(rec.counts, dtype=float) / n

    rho = np.eye(4, dtype=complex) / 4
    paulis = {"X": SIGMA_X, "Y": SIGMA_Y, "Z": SIGMA_Z}
    sign = np.array([1, -1, 1, -1])
    for a in "XYZ":
        for b in "XYZ":
            f = freq(table[(a, b)])
            e_ab = f[0] - f[1] - f[2] + f[3]
            rho += e_ab * np.kron(paulis[a], paulis[b]) / 4
    # Single-qubit terms from marginals, averaged over the partner axis.
    for a in "XYZ":
        e_a = np.mean([np.dot(freq(table[(a, b)]), [1, 1, -1, -1]) for b in "XYZ"])
        rho += e_a * np.kron(paulis[a], I2) / 4
    for b in "XYZ":
        e_b = np.mean([np.dot(freq(table[(a, b)]), sign) for a in "XYZ"])
        rho += e_b * np.kron(I2, paulis[b]) / 4
    return rho


@dataclass(frozen=True)
class TomographyResult:
    """MLE reconstruction plus derived certification quantities."""

    rho_hat: DensityMatrix
    log_likelihood: float
    fidelity_to_target: float
    ppt_eigenvalues: tuple[float, float, float, float]
    negativity: float
    converged: bool
    iterations: int
    dropped_settings: int = 0
    error_intervals: dict = field(default_factory=dict)


def _psd_project(rho: np.ndarray) -> np.ndarray:
    vals, vecs = np.linalg.eigh((rho + rho.conj().T) / 2)
    vals = np.clip(vals, 0.0, None)
    rho = (vecs * vals) @ vecs.conj().T
    return rho / np.trace(rho).real


def mle_state(data, init: np.ndarray | None = None, max_iter: int = 100_000):
    """Maximize the Poisson log-likelihood over physical states.

    Uses the expectation-maximization fixed point rho <- R rho R / tr(...)
    with R = sum_k (n_k / p_k) Pi_k, which keeps the iterate PSD and
    unit-trace by construction.  A diluted fallback step (I + eps R)/norm
    with eps halving guarantees the log-likelihood never decreases.
    Converged when the improvement stays below 1e-10 for 10 consecutive
    iterations; gives up after ``max_iter``.  Returns
    ``(rho, log_likelihood, converged, iterations, dropped)``.
    """
    data = list(data)
    kept = [rec for rec in data if rec.total > 0]
    dropped = len(data) - len(kept)
    if not kept:
        raise MissingSetting("no settings with nonzero counts")
    proj = np.concatenate([rec.setting.projectors() for rec in kept])
    pmat = proj.transpose(0, 2, 1).reshape(len(proj), 16)  # p_k = pmat @ vec(rho)
    counts = np.concatenate([np.asarray(rec.counts, dtype=float) for rec in kept])

    if init is None:
        init = tomography_linear(data) if dropped == 0 else np.eye(4, dtype=complex) / 4
    # Blend in a little of the identity: the fixed point cannot leave the
    # support of the iterate, so the start must be full rank.
    rho = 0.999 * _psd_project(np.asarray(init, dtype=complex)) + 0.001 * np.eye(4) / 4

    def probs_of(r: np.ndarray) -> np.ndarray:
        return np.maximum((pmat @ r.reshape(16)).real, 1e-300)

    def loglike(r: np.ndarray) -> float:
        return float(np.dot(counts, np.log(probs_of(r))))

    ll = loglike(rho)
    stall = 0
    it = 0
    for it in range(1, max_iter + 1):
        p = probs_of(rho)
        r = np.einsum("k,kij->ij", counts / p, proj)
        new = r @ rho @ r
        new = (new + new.conj().T) / 2
        new /= np.trace(new).real
        ll_new = loglike(new)
        if ll_new < ll:
            r_norm = r / np.trace(r @ rho).real
            eps = 0.5
            improved = False
            while eps > 1e-12:
                m = (1 - eps) * np.eye(4) + eps * r_norm
                cand = m @ rho @ m.conj().T
                cand = (cand + cand.conj().T) / 2
                cand /= np.trace(cand).real
                ll_cand = loglike(cand)
                if ll_cand > ll:
                    new, ll_new, improved = cand, ll_cand, True
                    break
                eps /= 2
            if not improved:
                stall += 1
                if stall >= 10:
                    return rho, ll, True, it, dropped
                continue
        gain = ll_new - ll
        rho, ll = new, ll_new
        stall = stall + 1 if gain < 1e-10 else 0
        if stall >= 10:
            return rho, ll, True, it, dropped
    return rho, ll, False, it, dropped


def ppt_report(rho: DensityMatrix) -> tuple[tuple[float, ...], float]:
    """Partial-transpose eigenvalues (descending) and the negativity."""
    _check_two_qubit(rho)
    pt = qmath.partial_transpose(rho, 1)
    vals, _ = qmath.hermitian_eig(pt)
    negativity = float(np.sum(np.abs(vals[vals < 0])))
    return tuple(float(v) for v in vals), negativity


def fidelity(rho: DensityMatrix, target) -> float:
    """Fidelity to a pure or mixed target state.

    Pure targets use the direct overlap; mixed targets the Uhlmann formula
    (tr sqrt(sqrt(t) rho sqrt(t)))^2 via eigendecomposition.
    """
    if isinstance(target, PureState):
        return qmath.fidelity_pure(rho, target)
    tvals, tvecs = qmath.hermitian_eig(target.matrix)
    sq = (tvecs * np.sqrt(np.clip(tvals, 0.0, None))) @ tvecs.conj().T
    m = sq @ rho.matrix @ sq
    mvals, _ = qmath.hermitian_eig((m + m.conj().T) / 2)
    return float(np.sum(np.sqrt(np.clip(mvals, 0.0, None))) ** 2)


def tomography_mle(
    data, init: np.ndarray | None = None, target=None
) -> TomographyResult:
    """MLE reconstruction with derived certification quantities.

    ``target`` (a PureState or DensityMatrix, default the singlet) is the
    reference for the fidelity figure.
    """
    if target is None:
        target = circuit.singlet()
    rho_arr, ll, converged, iters, dropped = mle_state(data, init)
    rho = DensityMatrix((2, 2), _psd_project(rho_arr))
    eigs, neg = ppt_report(rho)
    return TomographyResult(
        rho_hat=rho,
        log_likelihood=ll,
        fidelity_to_target=fidelity(rho, target),
        ppt_eigenvalues=eigs,
        negativity=neg,
        converged=converged,
        iterations=iters,
        dropped_settings=dropped,
    )


def derived_quantities(rho: DensityMatrix, target, chsh_settings) -> dict:
    eigs, neg = ppt_report(rho)
    smax, _ = chsh_max(rho)
    return {
        "fidelity_to_target": fidelity(rho, target),
        "witness": witness_w(rho),
        "chsh_fixed": chsh(rho, chsh_settings),
        "chsh_max": smax,
        "negativity": neg,
        "ppt_eigenvalues": list(eigs),
        "min_pt_eigenvalue": eigs[-1],
    }


def monte_carlo_errors(
    data, replicas: int, seed: int, target=None, chsh_settings=None
) -> dict:
    """Per-quantity standard deviations from Poisson resampling of the counts.

    Each replica redraws every count from Poisson(count), reruns the MLE
    and recomputes the derived quantities; sample standard deviations are
    returned.  Deterministic given the seed.
    """
    if replicas < 2:
        raise CertifyError("replicas must be >= 2")
    if target is None:
        target = circuit.singlet()
    if chsh_settings is None:
        chsh_settings = singlet_optimal_settings()
    samples: dict[str, list] = {}
    for rep in range(replicas):
        rng = np.random.default_rng([seed, rep])
        resampled = [
            replace(rec, counts=tuple(int(c) for c in rng.poisson(rec.counts)))
            for rec in data
        ]
        rho_arr, _, _, _, _ = mle_state(resampled)
        rho = DensityMatrix((2, 2), _psd_project(rho_arr))
        q = derived_quantities(rho, target, chsh_settings)
        for key, val in q.items():
            samples.setdefault(key, []).append(val)
    out = {}
    for key, vals in samples.items():
        arr = np.asarray(vals, dtype=float)
        if arr.ndim == 1:
            out[key] = float(np.std(arr, ddof=1))
        else:
            out[key] = [float(x) for x in np.std(arr, axis=0, ddof=1)]
    return out


def random_density_matrix(rng: np.random.Generator, dim: int = 4) -> DensityMatrix:
    """Ginibre-induced random mixed state."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = g @ g.conj().T
    m /= np.trace(m).real
    dims = (2, 2) if dim == 4 else (dim,)
    return DensityMatrix(dims, m)


def random_pure_state(rng: np.random.Generator, dims=(2, 2)) -> PureState:
    """Haar-random pure state."""
    d = int(np.prod(dims))
    v = rng.normal(size=d) + 1j * rng.normal(size=d)
    return PureState(tuple(dims), v / np.linalg.norm(v))


def random_separable_state(rng: np.random.Generator, n_terms: int = 4) -> DensityMatrix:
    """Convex mixture of random product states (separable by construction)."""
    weights = rng.dirichlet(np.ones(n_terms))
    m = np.zeros((4, 4), dtype=complex)
    for w in weights:
        a = random_pure_state(rng, (2,)).amplitudes
        b = random_pure_state(rng, (2,)).amplitudes
        v = np.kron(a, b)
        m += w * np.outer(v, v.conj())
    return DensityMatrix((2, 2), m)
