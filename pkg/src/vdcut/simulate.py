"""Dense density-matrix simulation with configurable noise channels,
measurement distributions, readout error and sampling.

Each gate is applied as a single channel superoperator (ideal unitary
composed with depolarizing and thermal relaxation) over the density tensor,
using a strided numba kernel when available and a numpy transpose fallback
otherwise.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .circuit import (
    MEASURE,
    TWO_QUBIT_UNITARY,
    Circuit,
    PauliObservable,
    gate_matrix,
)
from .noise import NoiseModel

DEFAULT_MAX_QUBITS = 14

_NEGATIVE_PROB_FLOOR = -1e-10


class SimulationError(RuntimeError):
    """Raised on internal inconsistencies (e.g. significantly negative
    probabilities) that signal a simulator bug."""


class SimulationSizeError(ValueError):
    """Raised when a circuit exceeds the dense-simulation qubit cap."""


# ---------------------------------------------------------------------------
# superoperator kernels

try:  # pragma: no cover - exercised indirectly
    from numba import njit, prange

    @njit(parallel=True, cache=True)
    def _kernel_2q(flat, S, b0, b1, b2, b3, nbits):
        ntasks = 1 << (nbits - 4)
        m0, m1, m2, m3 = 1 << b0, 1 << b1, 1 << b2, 1 << b3
        for c in prange(ntasks):
            idx = c
            low = idx & (m0 - 1)
            idx = ((idx >> b0) << (b0 + 1)) | low
            low = idx & (m1 - 1)
            idx = ((idx >> b1) << (b1 + 1)) | low
            low = idx & (m2 - 1)
            idx = ((idx >> b2) << (b2 + 1)) | low
            low = idx & (m3 - 1)
            idx = ((idx >> b3) << (b3 + 1)) | low
            buf = np.empty(16, dtype=np.complex128)
            for j in range(16):
                off = idx
                if j & 8:
                    off |= m3
                if j & 4:
                    off |= m2
                if j & 2:
                    off |= m1
                if j & 1:
                    off |= m0
                buf[j] = flat[off]
            out = S @ buf
            for j in range(16):
                off = idx
                if j & 8:
                    off |= m3
                if j & 4:
                    off |= m2
                if j & 2:
                    off |= m1
                if j & 1:
                    off |= m0
                flat[off] = out[j]

    @njit(parallel=True, cache=True)
    def _kernel_1q(flat, S, b0, b1, nbits):
        ntasks = 1 << (nbits - 2)
        m0, m1 = 1 << b0, 1 << b1
        for c in prange(ntasks):
            idx = c
            low = idx & (m0 - 1)
            idx = ((idx >> b0) << (b0 + 1)) | low
            low = idx & (m1 - 1)
            idx = ((idx >> b1) << (b1 + 1)) | low
            a0 = flat[idx]
            a1 = flat[idx | m0]
            a2 = flat[idx | m1]
            a3 = flat[idx | m1 | m0]
            flat[idx] = S[0, 0] * a0 + S[0, 1] * a1 + S[0, 2] * a2 + S[0, 3] * a3
            flat[idx | m0] = S[1, 0] * a0 + S[1, 1] * a1 + S[1, 2] * a2 + S[1, 3] * a3
            flat[idx | m1] = S[2, 0] * a0 + S[2, 1] * a1 + S[2, 2] * a2 + S[2, 3] * a3
            flat[idx | m1 | m0] = S[3, 0] * a0 + S[3, 1] * a1 + S[3, 2] * a2 + S[3, 3] * a3

    _HAVE_NUMBA = True
except Exception:  # pragma: no cover
    _HAVE_NUMBA = False


def _apply_super_numpy(tensor: np.ndarray, S: np.ndarray, axes: Sequence[int]) -> np.ndarray:
    ndim = tensor.ndim
    k = len(axes)
    perm = list(axes) + [a for a in range(ndim) if a not in axes]
    tt = np.transpose(tensor, perm).reshape(2 ** k, -1)
    tt = S @ tt
    return np.transpose(tt.reshape((2,) * ndim), np.argsort(perm))


#: below this tensor rank the kernel-launch overhead beats the numpy copies
_NUMBA_MIN_BITS = 16


def _apply_super(tensor: np.ndarray, S: np.ndarray, axes: Sequence[int], *,
                 use_numba: bool = True) -> np.ndarray:
    """Apply superoperator ``S`` over the given tensor axes (most significant
    first).  ``axes`` must be in ascending order for the numba path; callers
    canonicalize gate matrices instead of reordering axes."""
    if (_HAVE_NUMBA and use_numba and len(axes) in (2, 4)
            and tensor.ndim >= _NUMBA_MIN_BITS):
        nbits = tensor.ndim
        flat = np.ascontiguousarray(tensor).reshape(-1)
        # axis a <-> flat bit (nbits-1-a); ascending axes -> descending bits
        bits = [nbits - 1 - a for a in reversed(axes)]
        S = np.ascontiguousarray(S)
        if len(axes) == 4:
            _kernel_2q(flat, S, bits[0], bits[1], bits[2], bits[3], nbits)
        else:
            _kernel_1q(flat, S, bits[0], bits[1], nbits)
        return flat.reshape(tensor.shape)
    return _apply_super_numpy(tensor, S, axes)


# ---------------------------------------------------------------------------
# channel superoperators


def _kraus_to_super(ks: Iterable[np.ndarray]) -> np.ndarray:
    return sum(np.kron(K, K.conj()) for K in ks)


def thermal_relaxation_kraus(t1: float, t2: float, duration: float) -> list[np.ndarray]:
    """Kraus operators of amplitude damping to |0> with parameter
    1-exp(-d/T1), composed with pure dephasing chosen so that the combined
    coherence decay is exp(-d/T2)."""
    g = 1.0 - np.exp(-duration / t1)
    a0 = np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex)
    a1 = np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex)
    f = np.exp(duration / (2 * t1) - duration / t2)
    q = min(max((1.0 - f) / 2.0, 0.0), 0.5)
    p0 = np.sqrt(1 - q) * np.eye(2, dtype=complex)
    p1 = np.sqrt(q) * np.diag([1.0, -1.0]).astype(complex)
    return [p0 @ a0, p0 @ a1, p1 @ a0, p1 @ a1]


def apply_channel(rho: np.ndarray, kraus: Sequence[np.ndarray]) -> np.ndarray:
    """Sum_i K_i rho K_i^dag for a single-qubit channel (2x2 Kraus ops)."""
    return sum(K @ rho @ K.conj().T for K in kraus)


def _depol_super(p: float, k: int) -> np.ndarray:
    d = 2 ** k
    S = (1 - p) * np.eye(d * d, dtype=complex)
    for r in range(d):
        for rp in range(d):
            S[r * d + r, rp * d + rp] += p / d
    return S


def _pair_super(s1: np.ndarray, s2: np.ndarray) -> np.ndarray:
    """Combine per-qubit superops on (r1,c1),(r2,c2) into the joint superop
    with index ordering (r1 r2 c1 c2)."""
    t = np.einsum("ikjl,mnop->imknjolp",
                  s1.reshape(2, 2, 2, 2), s2.reshape(2, 2, 2, 2))
    return t.reshape(16, 16)


def _gate_superop(gate, noise: NoiseModel | None, ideal: bool) -> np.ndarray:
    u = gate_matrix(gate)
    k = len(gate.qubits)
    # canonicalize to ascending qubit order for the strided kernel
    if k == 2 and gate.qubits[0] > gate.qubits[1]:
        from .circuit import _SWAP_MATRIX
        u = _SWAP_MATRIX @ u @ _SWAP_MATRIX
    S = np.kron(u, u.conj())
    if noise is None or ideal:
        return S
    if k == 1:
        S = _depol_super(noise.one_qubit_depol, 1) @ S
        relax = _kraus_to_super(
            thermal_relaxation_kraus(noise.t1, noise.t2, noise.one_qubit_time))
        return relax @ S
    S = _depol_super(noise.two_qubit_depol, 2) @ S
    r = _kraus_to_super(
        thermal_relaxation_kraus(noise.t1, noise.t2, noise.two_qubit_time))
    return _pair_super(r, r) @ S


# ---------------------------------------------------------------------------
# density matrices


@dataclass(frozen=True)
class DensityMatrix:
    """Dense 2^n x 2^n density matrix over ``width`` qubits."""

    width: int
    matrix: np.ndarray

    def __post_init__(self):
        dim = 2 ** self.width
        m = np.asarray(self.matrix, dtype=complex)
        if m.shape != (dim, dim):
            raise ValueError(f"expected {dim}x{dim} matrix for width {self.width}")
        object.__setattr__(self, "matrix", m)

    def purity(self) -> float:
        return float(np.real(np.trace(self.matrix @ self.matrix)))

    def validate(self, atol: float = 1e-10) -> None:
        m = self.matrix
        if np.abs(m - m.conj().T).max() > atol:
            raise SimulationError("density matrix is not Hermitian")
        if abs(np.trace(m).real - 1.0) > atol or abs(np.trace(m).imag) > atol:
            raise SimulationError("density matrix trace differs from 1")
        if np.linalg.eigvalsh(m).min() < -atol:
            raise SimulationError("density matrix has a negative eigenvalue")

    @staticmethod
    def ground_state(width: int) -> "DensityMatrix":
        m = np.zeros((2 ** width, 2 ** width), dtype=complex)
        m[0, 0] = 1.0
        return DensityMatrix(width, m)


def evolve(circuit: Circuit, noise: NoiseModel | None = None, *,
           ideal_tags: Sequence[str] = ("xtalk",),
           max_qubits: int = DEFAULT_MAX_QUBITS,
           use_numba: bool = True) -> DensityMatrix:
    """Evolve |0...0><0...0| through the circuit.

    For each gate the ideal unitary is applied, then (under noise) the
    depolarizing channel on the gate's qubits, then thermal relaxation for
    the gate's duration.  Gates whose tag is listed in ``ideal_tags`` are
    applied as ideal unitaries (default: the ZZ-crosstalk insertions, which
    model a coherent error).
    """
    if circuit.width > max_qubits:
        raise SimulationSizeError(
            f"{circuit.width} qubits exceeds the dense cap of {max_qubits}")
    if circuit.has_measurements():
        raise ValueError("strip measurements before evolution (see exact_probs/sample)")
    n = circuit.width
    tensor = DensityMatrix.ground_state(n).matrix.reshape((2,) * (2 * n))
    ideal = frozenset(ideal_tags)
    cache: dict = {}
    for g in circuit.ops:
        is_ideal = g.tag in ideal
        if g.kind == TWO_QUBIT_UNITARY:
            key = (g.unitary.tobytes(), g.qubits[0] > g.qubits[1], is_ideal)
        else:
            key = (g.kind, g.angle, g.qubits[0] > g.qubits[1] if len(g.qubits) == 2 else False,
                   is_ideal)
        S = cache.get(key)
        if S is None:
            S = cache[key] = _gate_superop(g, noise, is_ideal)
        qs = sorted(g.qubits)
        axes = [q for q in qs] + [n + q for q in qs]
        tensor = _apply_super(tensor, S, axes, use_numba=use_numba)
    return DensityMatrix(n, tensor.reshape(2 ** n, 2 ** n))


# ---------------------------------------------------------------------------
# distributions and counts


def _format_bits(index: int, width: int) -> str:
    return format(index, f"0{width}b") if width else ""


@dataclass(frozen=True)
class Distribution:
    """Normalized map from ``width``-bit outcome strings to probabilities,
    stored densely (index bit order: qubit 0 is the leftmost character)."""

    width: int
    probs: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.shape != (2 ** self.width,):
            raise ValueError(f"expected {2 ** self.width} entries for width {self.width}")
        if p.min() < -1e-12:
            raise ValueError(f"negative probability {p.min()}")
        if abs(p.sum() - 1.0) > 1e-9:
            raise ValueError(f"probabilities sum to {p.sum()}, not 1")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __getitem__(self, outcome: str) -> float:
        return float(self.probs[int(outcome, 2)])

    def as_dict(self, threshold: float = 0.0) -> dict[str, float]:
        return {
            _format_bits(i, self.width): float(p)
            for i, p in enumerate(self.probs) if p > threshold
        }

    @staticmethod
    def from_dict(d: Mapping[str, float], width: int) -> "Distribution":
        p = np.zeros(2 ** width)
        for outcome, prob in d.items():
            p[int(outcome, 2)] = prob
        return Distribution(width, p)


@dataclass(frozen=True)
class Counts:
    """Integer shot counts over ``width``-bit outcomes."""

    width: int
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.int64)
        if v.shape != (2 ** self.width,):
            raise ValueError("counts length mismatch")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def shots(self) -> int:
        return int(self.values.sum())

    def __getitem__(self, outcome: str) -> int:
        return int(self.values[int(outcome, 2)])

    def as_dict(self) -> dict[str, int]:
        return {
            _format_bits(i, self.width): int(v)
            for i, v in enumerate(self.values) if v
        }

    def to_distribution(self) -> Distribution:
        return Distribution(self.width, self.values / self.shots)


def tv_distance(a: Distribution, b: Distribution) -> float:
    if a.width != b.width:
        raise ValueError("width mismatch")
    return 0.5 * float(np.abs(a.probs - b.probs).sum())


def exact_probs(dm: DensityMatrix) -> Distribution:
    """Computational-basis distribution: the density-matrix diagonal, with
    tiny negative entries clamped to zero and the result renormalized."""
    diag = np.real(np.diag(dm.matrix)).copy()
    if diag.min() < _NEGATIVE_PROB_FLOOR:
        raise SimulationError(
            f"diagonal entry {diag.min()} below {_NEGATIVE_PROB_FLOOR}: simulator bug")
    diag = np.clip(diag, 0.0, None)
    return Distribution(dm.width, diag / diag.sum())


def marginal(dist: Distribution, qubits: Sequence[int]) -> Distribution:
    """Marginal distribution over ``qubits``, in the given order."""
    qubits = list(qubits)
    n = dist.width
    t = dist.probs.reshape((2,) * n)
    keep = qubits
    other = [q for q in range(n) if q not in keep]
    t = np.transpose(t, keep + other).reshape(2 ** len(keep), -1).sum(axis=1)
    return Distribution(len(keep), t)


def sample(dist: Distribution, shots: int, seed: int) -> Counts:
    """Multinomial sampling, reproducible for a fixed seed."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    rng = np.random.default_rng(seed)
    p = dist.probs / dist.probs.sum()
    return Counts(dist.width, rng.multinomial(shots, p))


def apply_readout(dist: Distribution, noise: NoiseModel | None,
                  physical: Sequence[int] | None = None) -> Distribution:
    """Apply per-qubit readout confusion, then (if enabled) the pairwise
    readout-crosstalk confusion matrix on adjacent measured pairs.

    ``physical[j]`` is the physical qubit identity of bit position ``j``;
    adjacency is taken from ``noise.adjacency``.  Each qubit joins at most
    one crosstalk pair, greedily matched in ascending physical index.
    """
    if noise is None:
        return dist
    n = dist.width
    phys = list(physical) if physical is not None else list(range(n))
    if len(phys) != n:
        raise ValueError("physical id list length mismatch")
    t = dist.probs.reshape((2,) * n)
    m = noise.readout.T  # out = M^T @ in along each qubit axis
    for axis in range(n):
        t = np.moveaxis(np.tensordot(m, t, axes=([1], [axis])), 0, axis)
    if noise.readout_crosstalk:
        edges = set(noise.adjacency)
        pos_of = {p: i for i, p in enumerate(phys)}
        matched: set[int] = set()
        pairs: list[tuple[int, int]] = []
        for p in sorted(pos_of):
            if p in matched:
                continue
            for q in sorted(pos_of):
                if q in matched or q <= p:
                    continue
                if tuple(sorted((p, q))) in edges:
                    matched.update((p, q))
                    pairs.append((pos_of[p], pos_of[q]))
                    break
        mp = noise.readout_pair.T
        for i, j in pairs:
            perm = [i, j] + [a for a in range(n) if a not in (i, j)]
            tt = np.transpose(t, perm).reshape(4, -1)
            tt = mp @ tt
            t = np.transpose(tt.reshape((2,) * n), np.argsort(perm))
    return Distribution(n, t.reshape(-1))


# ---------------------------------------------------------------------------
# expectation values


def _parity_signs(width: int, mask_qubits: Iterable[int]) -> np.ndarray:
    """(-1)^(number of set bits among mask_qubits) for every outcome index."""
    idx = np.arange(2 ** width)
    acc = np.zeros(2 ** width, dtype=np.int64)
    for q in mask_qubits:
        acc += (idx >> (width - 1 - q)) & 1
    return 1.0 - 2.0 * (acc % 2)


def expectation(state: "Distribution | DensityMatrix", obs: PauliObservable) -> float:
    """<O> against a Distribution (diagonal observables only) or a
    DensityMatrix (any Pauli observable, as Tr(O rho))."""
    if isinstance(state, Distribution):
        if not obs.is_diagonal():
            raise ValueError("distribution expectations require I/Z observables")
        if obs.width != state.width:
            raise ValueError("observable width mismatch")
        total = 0.0
        for coeff, p in obs.terms:
            zs = [i for i, ch in enumerate(p) if ch == "Z"]
            total += coeff * float(state.probs @ _parity_signs(state.width, zs))
        return total
    if isinstance(state, DensityMatrix):
        if obs.width != state.width:
            raise ValueError("observable width mismatch")
        val = complex(np.trace(obs.matrix() @ state.matrix))
        return float(val.real)
    raise TypeError(f"cannot take expectation against {type(state).__name__}")
