"""Noise model configuration: gate depolarizing rates, thermal relaxation
times, readout confusion matrices, and ZZ-crosstalk circuit augmentation.

Three built-in presets mirror a 27-qubit superconducting device's median
calibration: ``basic`` (depolarizing + thermal relaxation + independent
readout error), ``basic+gct`` (adds coherent ZZ crosstalk between same-layer
adjacent two-qubit gates) and ``basic+gct+rct`` (adds correlated readout
error on neighboring measured pairs).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable

import numpy as np

from .circuit import CNOT, MEASURE, SWAP, TWO_QUBIT_UNITARY, Circuit, Gate, build_dag, rzz

CROSSTALK_TAG = "xtalk"

_DEFAULT_READOUT_ERROR = 1.200e-2
_DEFAULT_PAIR_DIAG = 0.991
_DEFAULT_PAIR_OFF = 0.003


def _default_readout() -> np.ndarray:
    e = _DEFAULT_READOUT_ERROR
    return np.array([[1 - e, e], [e, 1 - e]])


def _default_readout_pair() -> np.ndarray:
    m = np.full((4, 4), _DEFAULT_PAIR_OFF)
    np.fill_diagonal(m, _DEFAULT_PAIR_DIAG)
    return m


class NoiseConfigError(ValueError):
    """Raised for physically inconsistent noise parameters."""


@dataclass(frozen=True)
class NoiseModel:
    """Device noise parameters.

    Rates are dimensionless depolarizing probabilities, durations are in
    seconds.  ``readout`` is the per-qubit 2x2 row-stochastic confusion
    matrix (row = prepared state, column = observed state); ``readout_pair``
    is the 4x4 analogue applied to neighboring measured pairs when readout
    crosstalk is enabled.  ``adjacency`` lists the physically coupled qubit
    pairs used for both crosstalk mechanisms.
    """

    two_qubit_depol: float = 7.936e-3
    one_qubit_depol: float = 0.0
    two_qubit_time: float = 346.667e-9
    one_qubit_time: float = 35.5e-9
    t1: float = 120.385e-6
    t2: float = 138.652e-6
    readout: np.ndarray = field(default_factory=_default_readout)
    gate_crosstalk: bool = False
    crosstalk_angle: float = -math.pi / 3.5
    readout_crosstalk: bool = False
    readout_pair: np.ndarray = field(default_factory=_default_readout_pair)
    adjacency: tuple[tuple[int, int], ...] = ()

    def __post_init__(self):
        for name in ("two_qubit_depol", "one_qubit_depol"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise NoiseConfigError(f"{name}={rate} outside [0, 1]")
        if self.t1 <= 0 or self.t2 <= 0:
            raise NoiseConfigError("relaxation times must be positive")
        if self.t2 > 2 * self.t1 + 1e-15:
            raise NoiseConfigError(f"T2={self.t2} exceeds 2*T1={2 * self.t1}")
        ro = np.array(self.readout, dtype=float)
        pair = np.array(self.readout_pair, dtype=float)
        if ro.shape != (2, 2) or pair.shape != (4, 4):
            raise NoiseConfigError("confusion matrices must be 2x2 and 4x4")
        for m in (ro, pair):
            if (m < 0).any() or np.abs(m.sum(axis=1) - 1.0).max() > 1e-12:
                raise NoiseConfigError("confusion matrix rows must be stochastic")
        ro.setflags(write=False)
        pair.setflags(write=False)
        object.__setattr__(self, "readout", ro)
        object.__setattr__(self, "readout_pair", pair)
        adj = tuple(tuple(sorted((int(a), int(b)))) for a, b in self.adjacency)
        object.__setattr__(self, "adjacency", adj)

    def with_adjacency(self, edges: Iterable[tuple[int, int]]) -> "NoiseModel":
        return replace(self, adjacency=tuple(edges))


#: Sentinel for ideal simulation; anywhere a NoiseModel is accepted, ``None``
#: means noiseless.
NOISELESS = None

PRESETS = ("basic", "basic+gct", "basic+gct+rct", "noiseless")


def preset(name: str) -> NoiseModel | None:
    """Build one of the built-in noise presets (``noiseless`` yields None)."""
    if name == "noiseless":
        return NOISELESS
    if name == "basic":
        return NoiseModel()
    if name == "basic+gct":
        return NoiseModel(gate_crosstalk=True)
    if name == "basic+gct+rct":
        return NoiseModel(gate_crosstalk=True, readout_crosstalk=True)
    raise NoiseConfigError(f"unknown noise preset {name!r} (choose from {PRESETS})")


_MATRIX_KEYS = {"readout", "readout_pair"}
_SCALAR_KEYS = {
    "two_qubit_depol", "one_qubit_depol", "two_qubit_time", "one_qubit_time",
    "t1", "t2", "crosstalk_angle",
}
_BOOL_KEYS = {"gate_crosstalk", "readout_crosstalk"}


def load_noise_config(path: str) -> NoiseModel:
    """Load a NoiseModel from a JSON file whose keys mirror the field names.

    An optional ``"preset"`` key selects a base preset that the remaining
    keys override.
    """
    with open(path) as f:
        data = json.load(f)
    base = preset(data.pop("preset", "basic"))
    if base is None:
        if data:
            raise NoiseConfigError("noiseless preset accepts no overrides")
        return None
    kwargs = {}
    for key, value in data.items():
        if key in _MATRIX_KEYS:
            kwargs[key] = np.array(value, dtype=float)
        elif key in _SCALAR_KEYS:
            kwargs[key] = float(value)
        elif key in _BOOL_KEYS:
            kwargs[key] = bool(value)
        elif key == "adjacency":
            kwargs[key] = tuple((int(a), int(b)) for a, b in value)
        else:
            raise NoiseConfigError(f"unknown noise config key {key!r}")
    return replace(base, **kwargs)


def _edge_set(coupling) -> set[tuple[int, int]]:
    edges = getattr(coupling, "edges", coupling)
    return {tuple(sorted((int(a), int(b)))) for a, b in edges}


#: two-qubit device gates that participate in crosstalk (RZZ itself models
#: the crosstalk and is excluded)
_CROSSTALK_KINDS = (CNOT, SWAP, TWO_QUBIT_UNITARY)


def insert_zz_crosstalk(circuit: Circuit, coupling, angle: float = -math.pi / 3.5) -> Circuit:
    """Insert coherent RZZ crosstalk after layers with adjacent parallel
    two-qubit gates.

    For every unordered pair of two-qubit device gates (CNOT, SWAP or an
    explicit two-qubit unitary) in the same dependency layer whose qubit
    sets contain physically adjacent qubits, one ``RZZ(angle)`` tagged
    ``"xtalk"`` is inserted immediately after that layer on the lowest-index
    adjacent cross-gate qubit pair.  Intended to run on routed circuits
    before basis decomposition, so each SWAP counts as one gate.

    ``coupling`` may be a CouplingMap or any iterable of edges.
    """
    edges = _edge_set(coupling)
    dag = build_dag(circuit)
    by_layer: dict[int, list[int]] = {}
    for i in range(len(circuit.ops)):
        by_layer.setdefault(dag.layers[i], []).append(i)
    out: list[Gate] = []
    for layer in sorted(by_layer):
        members = by_layer[layer]
        out.extend(circuit.ops[i] for i in members)
        twoq = [i for i in members if circuit.ops[i].kind in _CROSSTALK_KINDS]
        for ai in range(len(twoq)):
            for bi in range(ai + 1, len(twoq)):
                g1 = circuit.ops[twoq[ai]]
                g2 = circuit.ops[twoq[bi]]
                cross = sorted(
                    tuple(sorted((p, q)))
                    for p in g1.qubits for q in g2.qubits
                    if tuple(sorted((p, q))) in edges
                )
                if cross:
                    a, b = cross[0]
                    out.append(rzz(angle, a, b, tag=CROSSTALK_TAG))
    return Circuit(circuit.width, tuple(out), circuit.name)
