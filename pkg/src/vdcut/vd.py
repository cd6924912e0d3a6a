"""Virtual distillation with two state copies: circuit construction with
diagonalizing gates, exact matrix-power oracles, and measurement
post-processing estimators.

The estimator computes, for a Pauli-Z string T over outcome bits
(z_i, z_i') of each qubit pair:

* denominator weight: product over all pairs of s_i, where s_i = -1 on the
  singlet outcome and +1 otherwise (the swap-operator eigenvalue);
* numerator weight: product over pairs in T of (1/2)((-1)^{z_i} +
  (-1)^{z_i'}) and over the remaining pairs of s_i.

For single-qubit strings the numerator expectation equals Tr(O rho^2)
exactly for every state.  For longer strings it equals the copy-symmetrized
functional 2^{-|T|} sum_{A subset T} Tr(Z_A rho Z_{T\\A} rho), which
coincides with Tr(Z_T rho^2) on states without coherences across both
observable qubits (in particular all diagonal states); pairwise-local
measurements carry no information that could close that gap.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    PauliObservable,
    measure,
    tensor_two_copies,
    two_qubit,
)
from .simulate import Counts, DensityMatrix, Distribution

DIAG_TAG = "diag"

_H = 1.0 / np.sqrt(2.0)

#: The diagonalizing gate: identity on |00> and |11>, and the Bell-basis
#: rotation sending (|01>+|10>)/sqrt(2) to |01> and (|01>-|10>)/sqrt(2) to
#: |10>.  Conjugating SWAP gives diag(1, 1, -1, 1): the singlet outcome is
#: the bit pattern "10" (copy-0 bit first).
DIAG_UNITARY = np.array(
    [[1, 0, 0, 0],
     [0, _H, _H, 0],
     [0, _H, -_H, 0],
     [0, 0, 0, 1]], dtype=complex)
DIAG_UNITARY.setflags(write=False)

SINGLET_OUTCOME = "10"

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


class EstimatorError(RuntimeError):
    """Raised when the distillation denominator is statistically
    insignificant (|den| < 10 * SE) or exactly degenerate."""


@dataclass(frozen=True)
class DiagonalizingGate:
    """A two-qubit unitary that diagonalizes the pair-swap operator, plus the
    computational outcome carrying swap eigenvalue -1."""

    unitary: np.ndarray
    singlet_outcome: str

    def __post_init__(self):
        u = np.array(self.unitary, dtype=complex)
        d = u @ _SWAP @ u.conj().T
        off = d - np.diag(np.diag(d))
        if np.abs(off).max() > 1e-10:
            raise CircuitError("gate does not diagonalize the pair swap")
        spectrum = np.real(np.diag(d))
        if sorted(np.round(spectrum).astype(int)) != [-1, 1, 1, 1]:
            raise CircuitError(f"swap spectrum {spectrum} is not (+1,+1,+1,-1)")
        minus = int(np.argmin(spectrum))
        if format(minus, "02b") != self.singlet_outcome:
            raise CircuitError(
                f"singlet outcome {self.singlet_outcome!r} does not match "
                f"eigenvalue -1 at {format(minus, '02b')!r}")
        u.setflags(write=False)
        object.__setattr__(self, "unitary", u)


def diagonalizing_gate() -> DiagonalizingGate:
    return DiagonalizingGate(DIAG_UNITARY, SINGLET_OUTCOME)


def diag_gate_on(a: int, b: int) -> Gate:
    return two_qubit(DIAG_UNITARY, a, b, tag=DIAG_TAG)


def build_vd_circuit(original: Circuit) -> Circuit:
    """Two copies of ``original``, a diagonalizing gate on each pair
    (i, n+i) in ascending pair order, and measurements on all 2n qubits."""
    if original.has_measurements():
        raise CircuitError("original circuit must not contain measurements")
    n = original.width
    c = tensor_two_copies(original)
    ops = list(c.ops)
    for i in range(n):
        ops.append(diag_gate_on(i, n + i))
    for q in range(2 * n):
        ops.append(measure(q))
    return Circuit(2 * n, tuple(ops), name=f"vd({original.name})" if original.name else "vd")


# ---------------------------------------------------------------------------
# exact oracles


def oracle_mitigated_expectation(rho: DensityMatrix, obs: PauliObservable,
                                 m: int) -> float:
    """Tr(O rho^M) / Tr(rho^M) by exact matrix power."""
    if m < 1:
        raise ValueError("copy count must be >= 1")
    power = np.linalg.matrix_power(rho.matrix, m)
    denom = np.trace(power).real
    if abs(denom) < 1e-14:
        raise EstimatorError(f"Tr(rho^{m}) = {denom} is degenerate")
    num = np.trace(obs.matrix() @ power).real
    return float(num / denom)


def eigen_spectrum(rho: DensityMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (descending) and matching eigenvectors; debug accessor for
    the exponential-suppression analysis."""
    vals, vecs = np.linalg.eigh(rho.matrix)
    order = np.argsort(vals)[::-1]
    return vals[order], vecs[:, order]


def dominant_eigenstate_expectation(rho: DensityMatrix, obs: PauliObservable) -> float:
    _, vecs = eigen_spectrum(rho)
    psi = vecs[:, 0]
    return float(np.real(psi.conj() @ obs.matrix() @ psi))


# ---------------------------------------------------------------------------
# sampled estimator


@dataclass(frozen=True)
class VDEstimate:
    """Numerator/denominator estimates of the mitigated expectation with
    their standard errors."""

    numerator: float
    denominator: float
    numerator_se: float
    denominator_se: float
    shots: int | None = None

    @property
    def mitigated(self) -> float:
        if self.denominator == 0.0 or abs(self.denominator) < 10.0 * self.denominator_se:
            raise EstimatorError(
                f"denominator {self.denominator} insignificant against its "
                f"standard error {self.denominator_se}")
        return self.numerator / self.denominator

    @property
    def mitigated_se(self) -> float:
        """First-order error propagation of the ratio."""
        val = self.mitigated
        rel = 0.0
        if self.numerator != 0.0:
            rel += (self.numerator_se / self.numerator) ** 2
        rel += (self.denominator_se / self.denominator) ** 2
        return abs(val) * float(np.sqrt(rel))


def _pair_weight_tables(n: int, singlet: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Per-outcome (over 2n bits) arrays: per-pair swap signs and the two
    copy bits, as (n, 4^n)-shaped tables."""
    width = 2 * n
    idx = np.arange(2 ** width)
    z = np.empty((n, idx.size), dtype=np.int8)
    zp = np.empty((n, idx.size), dtype=np.int8)
    for i in range(n):
        z[i] = (idx >> (width - 1 - i)) & 1
        zp[i] = (idx >> (width - 1 - (n + i))) & 1
    sb0, sb1 = int(singlet[0]), int(singlet[1])
    s = np.where((z == sb0) & (zp == sb1), -1.0, 1.0)
    return s, z, zp


def _estimate(weight_probs: np.ndarray, width: int, obs: PauliObservable,
              shots: int | None, singlet: str) -> VDEstimate:
    if width % 2:
        raise ValueError("VD outcomes must span an even number of qubits")
    n = width // 2
    if obs.width != n:
        raise ValueError(f"observable width {obs.width} != {n} system qubits")
    if not obs.is_diagonal():
        raise ValueError("sampled estimation supports I/Z observables only")
    s, z, zp = _pair_weight_tables(n, singlet)
    den_w = s.prod(axis=0)
    num_w = np.zeros(den_w.shape)
    for coeff, pauli in obs.terms:
        t_mask = np.array([ch == "Z" for ch in pauli])
        w = np.ones(den_w.shape)
        for i in range(n):
            if t_mask[i]:
                w = w * 0.5 * ((1.0 - 2.0 * z[i]) + (1.0 - 2.0 * zp[i]))
            else:
                w = w * s[i]
        num_w += coeff * w
    num = float(weight_probs @ num_w)
    den = float(weight_probs @ den_w)
    if shots is None:
        num_se = den_se = 0.0
    else:
        var_num = max(float(weight_probs @ num_w ** 2) - num ** 2, 0.0)
        var_den = max(float(weight_probs @ den_w ** 2) - den ** 2, 0.0)
        num_se = float(np.sqrt(var_num / shots))
        den_se = float(np.sqrt(var_den / shots))
    return VDEstimate(num, den, num_se, den_se, shots)


def estimate_from_counts(counts: Counts, obs: PauliObservable,
                         singlet: str = SINGLET_OUTCOME) -> VDEstimate:
    """Post-process shot counts from a build_vd_circuit execution."""
    return _estimate(counts.values / counts.shots, counts.width, obs,
                     counts.shots, singlet)


def estimate_from_distribution(dist: Distribution, obs: PauliObservable,
                               shots: int | None = None,
                               singlet: str = SINGLET_OUTCOME) -> VDEstimate:
    """Exact weighting of a (possibly reconstructed) outcome distribution;
    ``shots`` sets the nominal sample size used for the standard errors."""
    return _estimate(dist.probs, dist.width, obs, shots, singlet)
