"""Second-quantization simulator of the linear-optical scheme.

Two photons propagate over 24 single-photon modes: six spatial paths
(out1, 1, 2, 3, 4, out4) times two polarizations (H, V) times a
two-dimensional temporal label used to model partial distinguishability.
The two-photon sector is held as a multiset-keyed amplitude map, which is
small enough (~300 basis states) for exhaustive exact evolution.

Logical path encoding of the geometry qubits follows the coupler layout:
qubit 1 is 0 on path 1 / 1 on path 2, qubit 2 is 0 on path 4 / 1 on path 3.
The beam displacers copy the polarization qubit (V=0, H=1) onto the path,
so photon 1 routes V -> path 1, H -> path 2 and photon 2 routes
H -> path 3, V -> path 4.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import circuit, qmath
from .qmath import DensityMatrix

PATHS = ("out1", "1", "2", "3", "4", "out4")
POLS = ("H", "V")
LABELS = (0, 1)
N_MODES = len(PATHS) * len(POLS) * len(LABELS)

# Coincidence path sets: one photon in each certifies a post-selected event.
PATH_SET_A = ("1", "2")
PATH_SET_B = ("3", "4")

# Logical value carried by each path (geometry-qubit encoding).
PATH_LOGICAL = {"1": 0, "2": 1, "3": 1, "4": 0}


class PhotonicError(Exception):
    pass


class OutOfRange(PhotonicError):
    pass


class PhotonNumberMismatch(PhotonicError):
    pass


class EmptyPostSelection(PhotonicError):
    pass


def mode_index(path: str, pol: str, label: int = 0) -> int:
    return (PATHS.index(path) * 2 + POLS.index(pol)) * 2 + label


def mode_tuple(index: int) -> tuple[str, str, int]:
    path, rest = divmod(index, 4)
    pol, label = divmod(rest, 2)
    return PATHS[path], POLS[pol], label


@dataclass(frozen=True)
class BsParams:
    """Power reflectivities of the central beam splitter, per polarization."""

    R_H: float = 1 / 3
    R_V: float = 1 / 3

    def __post_init__(self):
        for r in (self.R_H, self.R_V):
            if not 0.0 <= r <= 1.0:
                raise OutOfRange(f"reflectivity {r!r} outside [0, 1]")


IDEAL_BS = BsParams()
EXPERIMENTAL_BS = BsParams(R_H=0.329, R_V=0.337)
BS_PRESETS = {"ideal": IDEAL_BS, "experimental": EXPERIMENTAL_BS}


class FockState:
    """Two-photon Fock state keyed by unordered mode pairs.

    Amplitudes are stored in the normalized Fock convention: a doubly
    occupied mode carries the sqrt(2) bosonic factor, i.e. the key (i, i)
    holds the amplitude of |2>_i.
    """

    def __init__(self, terms: dict[tuple[int, int], complex]):
        self.terms = {
            (min(i, j), max(i, j)): complex(a)
            for (i, j), a in terms.items()
            if a != 0
        }

    def norm(self) -> float:
        return float(sum(abs(a) ** 2 for a in self.terms.values()))

    def amplitude(self, m1: tuple[str, str, int], m2: tuple[str, str, int]) -> complex:
        i, j = mode_index(*m1), mode_index(*m2)
        return self.terms.get((min(i, j), max(i, j)), 0.0 + 0.0j)

    def to_tensor(self) -> np.ndarray:
        """Symmetric creation-operator coefficient tensor t with
        state = sum_ij t_ij a_i^dag a_j^dag |0>."""
        t = np.zeros((N_MODES, N_MODES), dtype=complex)
        for (i, j), a in self.terms.items():
            if i == j:
                t[i, i] = a / np.sqrt(2)
            else:
                t[i, j] = t[j, i] = a / 2
        return t

    @classmethod
    def from_tensor(cls, t: np.ndarray, tol: float = 1e-15) -> "FockState":
        t = (t + t.T) / 2
        terms: dict[tuple[int, int], complex] = {}
        for i in range(N_MODES):
            if abs(t[i, i]) > tol:
                terms[(i, i)] = t[i, i] * np.sqrt(2)
            for j in range(i + 1, N_MODES):
                if abs(t[i, j]) > tol:
                    terms[(i, j)] = 2 * t[i, j]
        return cls(terms)


def product_state(photon_a: np.ndarray, photon_b: np.ndarray) -> FockState:
    """Two-photon state from two normalized single-photon amplitude vectors."""
    t = (np.outer(photon_a, photon_b) + np.outer(photon_b, photon_a)) / 2
    state = FockState.from_tensor(t)
    n = state.norm()
    if n < 1e-14:
        raise PhotonicError("photon amplitude vectors cancel")
    return FockState({k: a / np.sqrt(n) for k, a in state.terms.items()})


def single_photon(path: str, pol: str, label: int = 0) -> np.ndarray:
    v = np.zeros(N_MODES, dtype=complex)
    v[mode_index(path, pol, label)] = 1.0
    return v


@dataclass(frozen=True)
class OpticalNetwork:
    """Single-photon mode unitary plus the element list that produced it."""

    mode_unitary: np.ndarray = field(repr=False)
    elements: tuple[dict, ...] = ()

    def __post_init__(self):
        u = self.mode_unitary
        if np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) > 1e-10:
            raise PhotonicError("mode matrix is not unitary")


def coupler_unitary(R: float) -> np.ndarray:
    """Two-mode coupler [[i sqrt(R), sqrt(1-R)], [sqrt(1-R), i sqrt(R)]]."""
    if not 0.0 <= R <= 1.0:
        raise OutOfRange(f"reflectivity {R!r} outside [0, 1]")
    r = 1j * np.sqrt(R)
    t = np.sqrt(1.0 - R)
    return np.array([[r, t], [t, r]], dtype=complex)


def _embed_pair(u: np.ndarray, block: np.ndarray, i: int, j: int) -> None:
    u[np.ix_([i, j], [i, j])] = block


def build_cz_network(bs: BsParams = IDEAL_BS) -> OpticalNetwork:
    """Three parallel couplers on path pairs (out1,1), (2,3), (4,out4).

    The reflectivity may differ between the H and V polarization sectors;
    temporal labels are untouched.
    """
    u = np.eye(N_MODES, dtype=complex)
    for pol, r in (("H", bs.R_H), ("V", bs.R_V)):
        block = coupler_unitary(r)
        for label in LABELS:
            for pa, pb in (("out1", "1"), ("2", "3"), ("4", "out4")):
                _embed_pair(u, block, mode_index(pa, pol, label), mode_index(pb, pol, label))
    meta = ({"element": "BS", "R_H": bs.R_H, "R_V": bs.R_V},)
    return OpticalNetwork(u, meta)


def _swap_modes(pairs) -> np.ndarray:
    u = np.eye(N_MODES, dtype=complex)
    for a, b in pairs:
        i, j = mode_index(*a), mode_index(*b)
        u[[i, j], :] = u[[j, i], :]
    return u


def beam_displacer_unitary(photon: int) -> np.ndarray:
    """Path <- polarization copy for one photon (V=0, H=1 onto the path encoding)."""
    if photon == 1:
        pairs = [(("out1", "V", l), ("1", "V", l)) for l in LABELS]
        pairs += [(("out1", "H", l), ("2", "H", l)) for l in LABELS]
    elif photon == 2:
        pairs = [(("out4", "H", l), ("3", "H", l)) for l in LABELS]
        pairs += [(("out4", "V", l), ("4", "V", l)) for l in LABELS]
    else:
        raise PhotonicError("photon must be 1 or 2")
    return _swap_modes(pairs)


def hwp_unitary(paths=("2", "3")) -> np.ndarray:
    """45-degree half waveplates: swap H and V on the given paths."""
    pairs = []
    for p in paths:
        pairs += [((p, "H", l), (p, "V", l)) for l in LABELS]
    return _swap_modes(pairs)


def build_full_network(bs: BsParams = IDEAL_BS) -> OpticalNetwork:
    """BDs + HWPs + BS + HWPs: everything up to the coincidence detection."""
    u_bd = beam_displacer_unitary(2) @ beam_displacer_unitary(1)
    u_hwp = hwp_unitary()
    u_bs = build_cz_network(bs).mode_unitary
    u = u_hwp @ u_bs @ u_hwp @ u_bd
    meta = (
        {"element": "BD", "photon": 1},
        {"element": "BD", "photon": 2},
        {"element": "HWP45", "paths": ["2", "3"]},
        {"element": "BS", "R_H": bs.R_H, "R_V": bs.R_V},
        {"element": "HWP45", "paths": ["2", "3"]},
    )
    return OpticalNetwork(u, meta)


def evolve_two_photon(state: FockState, net: OpticalNetwork) -> FockState:
    """Push every creation-operator monomial through the mode unitary."""
    n = state.norm()
    if abs(n - 1.0) > 1e-9:
        raise PhotonNumberMismatch(f"input not a normalized two-photon state (norm {n!r})")
    a = net.mode_unitary.conj().T  # a_i^dag -> sum_j (U^dag)_ij b_j^dag
    t = state.to_tensor()
    return FockState.from_tensor(a.T @ t @ a)


def coincidence_mass(state: FockState) -> float:
    """Probability mass with exactly one photon in paths {1,2} and one in {3,4}."""
    mass = 0.0
    for (i, j), amp in state.terms.items():
        pa, _, _ = mode_tuple(i)
        pb, _, _ = mode_tuple(j)
        if (pa in PATH_SET_A and pb in PATH_SET_B) or (
            pb in PATH_SET_A and pa in PATH_SET_B
        ):
            mass += abs(amp) ** 2
    return mass


def post_select_coincidence(state: FockState) -> tuple[DensityMatrix, float]:
    """Project onto exactly one photon in paths {1,2} and one in {3,4}.

    The two-qubit state is decoded through the recombining beam displacers,
    which coherently merge the path-polarization dictionary (path 1 <-> V,
    path 2 <-> H for the first photon; path 3 <-> H, path 4 <-> V for the
    second); components where path and polarization disagree exit through
    unused ports and are dropped.  Temporal labels are traced out.  Returns
    the decoded density matrix and the pre-normalization coincidence mass.
    """
    # Axes: (qubit_a, label_a, qubit_b, label_b); qubit value 0=V, 1=H.
    psi = np.zeros((2, 2, 2, 2), dtype=complex)
    mass = 0.0
    for (i, j), amp in state.terms.items():
        pa, la, ka = mode_tuple(i)
        pb, lb, kb = mode_tuple(j)
        if pa in PATH_SET_A and pb in PATH_SET_B:
            m1, m2 = (pa, la, ka), (pb, lb, kb)
        elif pb in PATH_SET_A and pa in PATH_SET_B:
            m1, m2 = (pb, lb, kb), (pa, la, ka)
        else:
            continue
        mass += abs(amp) ** 2
        qa = 1 if m1[1] == "H" else 0
        qb = 1 if m2[1] == "H" else 0
        if PATH_LOGICAL[m1[0]] == qa and PATH_LOGICAL[m2[0]] == qb:
            psi[qa, m1[2], qb, m2[2]] += amp
    if mass < 1e-14:
        raise EmptyPostSelection("post-selected mass below 1e-14")
    decoded = float(np.sum(np.abs(psi) ** 2))
    if decoded < 1e-14:
        raise EmptyPostSelection("no path-polarization-consistent coincidence terms")
    vec = psi.reshape(-1) / np.sqrt(decoded)
    full = DensityMatrix((2, 2, 2, 2), np.outer(vec, vec.conj()))
    pol = qmath.partial_trace(full, keep=(0, 2))
    return pol, mass


def logical_path_input(q1: int, q2: int, pol: str = "V", label2: int = 0) -> FockState:
    """Two-photon path-encoded logical input |q1, q2> at fixed polarization."""
    path1 = "2" if q1 else "1"
    path2 = "3" if q2 else "4"
    return product_state(single_photon(path1, pol, 0), single_photon(path2, pol, label2))


def effective_gate_truth_table(net: OpticalNetwork, pol: str = "V") -> np.ndarray:
    """Post-selected coincidence amplitudes for logical inputs 00, 01, 10, 11."""
    amps = np.zeros(4, dtype=complex)
    for q1 in (0, 1):
        for q2 in (0, 1):
            out = evolve_two_photon(logical_path_input(q1, q2, pol), net)
            path1 = "2" if q1 else "1"
            path2 = "3" if q2 else "4"
            amps[2 * q1 + q2] = out.amplitude((path1, pol, 0), (path2, pol, 0))
    return amps


def cz_success_probabilities(net: OpticalNetwork, pol: str = "V") -> np.ndarray:
    """Coincidence mass per logical input branch (1/9 each for the ideal network)."""
    probs = np.zeros(4)
    for q1 in (0, 1):
        for q2 in (0, 1):
            out = evolve_two_photon(logical_path_input(q1, q2, pol), net)
            probs[2 * q1 + q2] = coincidence_mass(out)
    return probs


def post_selected_channel_matrix(net: OpticalNetwork, pol: str = "V") -> np.ndarray:
    """4x4 matrix of the post-selected path-qubit map in the logical basis."""
    m = np.zeros((4, 4), dtype=complex)
    paths_a = {0: "1", 1: "2"}
    paths_b = {0: "4", 1: "3"}
    for q1 in (0, 1):
        for q2 in (0, 1):
            out = evolve_two_photon(logical_path_input(q1, q2, pol), net)
            for r1 in (0, 1):
                for r2 in (0, 1):
                    m[2 * r1 + r2, 2 * q1 + q2] = out.amplitude(
                        (paths_a[r1], pol, 0), (paths_b[r2], pol, 0)
                    )
    return m


def process_fidelity_to_cz(net: OpticalNetwork, pol: str = "V") -> float:
    """Process fidelity of the post-selected channel to the ideal CZ gate.

    The channel is proportional to a fixed matrix M; fidelity is
    |tr(CZ^dag M)|^2 / (4 tr(M^dag M)), which is 1 iff M is CZ up to a
    global complex factor.
    """
    m = post_selected_channel_matrix(net, pol)
    cz = np.diag([1, 1, 1, -1]).astype(complex)
    denom = 4 * np.trace(m.conj().T @ m).real
    return float(abs(np.trace(cz.conj().T @ m)) ** 2 / denom)


def hom_coincidence(overlap: float, bs: BsParams = IDEAL_BS, pol: str = "V") -> float:
    """Coincidence probability for photons meeting on paths 2 and 3.

    ``overlap`` is the temporal wavepacket overlap amplitude gamma; the
    second photon enters with label state gamma|0> + sqrt(1-gamma^2)|1>.
    """
    if not 0.0 <= overlap <= 1.0:
        raise OutOfRange(f"overlap {overlap!r} outside [0, 1]")
    g = float(overlap)
    d = np.sqrt(max(0.0, 1.0 - g * g))
    photon_a = single_photon("2", pol, 0)
    photon_b = g * single_photon("3", pol, 0) + d * single_photon("3", pol, 1)
    state = product_state(photon_a, photon_b)
    out = evolve_two_photon(state, build_cz_network(bs))
    prob = 0.0
    for (i, j), amp in out.terms.items():
        pa, _, _ = mode_tuple(i)
        pb, _, _ = mode_tuple(j)
        if {pa, pb} == {"2", "3"}:
            prob += abs(amp) ** 2
    return prob


def hom_scan(overlaps, bs: BsParams = IDEAL_BS) -> list[float]:
    return [hom_coincidence(g, bs) for g in overlaps]


def hom_visibility(bs: BsParams = IDEAL_BS) -> float:
    """(P_max - P_min)/P_max between distinguishable and indistinguishable photons."""
    p_dist = hom_coincidence(0.0, bs)
    p_ind = hom_coincidence(1.0, bs)
    return (p_dist - p_ind) / p_dist


def prepared_input(gamma: float = 1.0) -> FockState:
    """Both photons in (|H> + |V>)/sqrt(2) on the interferometer inputs."""
    if not 0.0 <= gamma <= 1.0:
        raise OutOfRange(f"gamma {gamma!r} outside [0, 1]")
    d = np.sqrt(max(0.0, 1.0 - gamma * gamma))
    photon_a = (single_photon("out1", "H", 0) + single_photon("out1", "V", 0)) / np.sqrt(2)
    photon_b = (
        gamma * (single_photon("out4", "H", 0) + single_photon("out4", "V", 0))
        + d * (single_photon("out4", "H", 1) + single_photon("out4", "V", 1))
    ) / np.sqrt(2)
    return product_state(photon_a, photon_b)


def simulate_pipeline(
    bs: BsParams = IDEAL_BS, gamma: float = 1.0
) -> tuple[DensityMatrix, float]:
    """Run the full optical pipeline and post-select on coincidences.

    Returns the two-qubit polarization state and the success probability.
    """
    state = evolve_two_photon(prepared_input(gamma), build_full_network(bs))
    return post_select_coincidence(state)


def delayed_singlet(eta: float) -> DensityMatrix:
    """Polarization state after a birefringent delay on the second photon.

    Builds the delayed two-photon ket explicitly with temporal labels
    (overlap 1 - eta between the delayed and undelayed wavepackets) and
    traces the labels out.  Cross-checks the density-matrix dephasing
    channel of the noise module.
    """
    if not 0.0 <= eta <= 1.0:
        raise OutOfRange(f"eta {eta!r} outside [0, 1]")
    g = 1.0 - eta
    d = np.sqrt(max(0.0, 1.0 - g * g))
    # Axes: (pol_1, pol_2, label_2) with qubit value 0=V, 1=H.
    psi = np.zeros((2, 2, 2), dtype=complex)
    psi[1, 0, 0] = 1 / np.sqrt(2)       # |H>|V, t_V>
    psi[0, 1, 0] = -g / np.sqrt(2)      # -|V>|H, t_H>, overlap with t_V
    psi[0, 1, 1] = -d / np.sqrt(2)      # orthogonal remainder of t_H
    full = DensityMatrix((2, 2, 2), np.outer(psi.reshape(-1), psi.reshape(-1).conj()))
    return qmath.partial_trace(full, keep=(0, 1))


def fit_visibility_weight(rho_canonical: DensityMatrix) -> tuple[float, float]:
    """Least-squares weight v of the singlet in v|S><S| + (1-v) rho_dist.

    Returns (v, trace_distance) where the distance is between the input and
    the best member of the family.
    """
    from . import noise  # local import to avoid a cycle at module load

    s = circuit.singlet().density().matrix
    rd = noise.rho_dist().matrix
    diff = s - rd
    num = np.trace((rho_canonical.matrix - rd).conj().T @ diff).real
    den = np.trace(diff.conj().T @ diff).real
    v = float(num / den)
    model = v * s + (1 - v) * rd
    delta = rho_canonical.matrix - model
    dist = 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh((delta + delta.conj().T) / 2))))
    return v, dist
