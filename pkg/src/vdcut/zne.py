"""Zero-noise extrapolation over folded diagonalizing gates: each
``diag``-tagged gate G becomes G (G' G)^(scale-1)/2 with G' its adjoint, so
the noiseless unitary is unchanged while the gate noise is amplified; a
linear fit over the measured scales extrapolates to zero noise."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .circuit import TWO_QUBIT_UNITARY, Circuit, Gate, two_qubit
from .vd import DIAG_TAG


class FoldingError(ValueError):
    pass


@dataclass(frozen=True)
class ScaledRun:
    """A mitigated expectation measured at one odd noise-scale factor."""

    scale: int
    value: float
    stderr: float = 0.0

    def __post_init__(self):
        if self.scale < 1 or self.scale % 2 == 0:
            raise FoldingError(f"scale must be an odd positive integer, got {self.scale}")


def fold_diagonalizing(circuit: Circuit, scale: int) -> Circuit:
    """Replace every ``diag``-tagged gate G by G followed by (scale-1)/2
    adjoint pairs (G^dag G); only diagonalizing gates are folded."""
    if scale < 1 or scale % 2 == 0:
        raise FoldingError(f"scale must be an odd positive integer, got {scale}")
    diags = [g for g in circuit.ops if g.tag == DIAG_TAG]
    if not diags:
        raise FoldingError("circuit contains no diag-tagged gates to fold")
    if scale == 1:
        return circuit
    ops: list[Gate] = []
    for g in circuit.ops:
        ops.append(g)
        if g.tag == DIAG_TAG:
            if g.kind != TWO_QUBIT_UNITARY:
                raise FoldingError("can only fold explicit-unitary diagonalizing gates")
            adjoint = np.asarray(g.unitary).conj().T
            for _ in range((scale - 1) // 2):
                ops.append(two_qubit(adjoint, *g.qubits, tag=DIAG_TAG))
                ops.append(two_qubit(np.asarray(g.unitary), *g.qubits, tag=DIAG_TAG))
    return Circuit(circuit.width, tuple(ops), circuit.name)


def extrapolate_linear(runs: list[ScaledRun]) -> float:
    """Ordinary least-squares line through (scale, value); returns the
    intercept at scale zero."""
    if len(runs) < 2:
        raise FoldingError("need at least two scaled runs to extrapolate")
    scales = np.array([r.scale for r in runs], dtype=float)
    values = np.array([r.value for r in runs], dtype=float)
    if np.ptp(scales) == 0:
        raise FoldingError("scales must not all be equal")
    design = np.vstack([np.ones_like(scales), scales]).T
    coef, *_ = np.linalg.lstsq(design, values, rcond=None)
    return float(coef[0])
