"""Experiment orchestration: build the benchmark circuit, route it onto the
configured device, and evaluate every requested mitigation method under the
configured noise preset, recording expectation values, absolute errors and
gate counts in CSV/JSON form.

All randomness flows from the config seed through deterministic per-cell
derivations, so identical configs produce byte-identical CSV output.  Under
the ``noiseless`` preset executions are exact (no shot sampling), making the
no-mitigation cell reproduce the ideal value exactly.
"""
from __future__ import annotations

import json
import time
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .benchmarks import (
    AnsatzSpec,
    MaxCutProblem,
    maxcut_hamiltonian,
    optimize_parameters,
    ring_problem,
)
from .circuit import Circuit, PauliObservable, from_text, measure
from .cutting import DiagonalSimulationCache, build_pairwise_pipelines, recombine, run_pairwise
from .noise import NOISELESS, NoiseModel, preset
from .runner import run_circuit
from .simulate import DEFAULT_MAX_QUBITS, expectation, evolve
from .transpile import CouplingMap, coupling_map_for
from .vd import build_vd_circuit, estimate_from_counts, estimate_from_distribution
from .zne import ScaledRun, extrapolate_linear

METHODS = ("none", "vd", "vd+zne", "vd+cut")
ZNE_SCALES = (1, 3, 5)

CSV_HEADER = "method,cnot,rzz,expectation,abs_error"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment: a problem instance, ansatz settings, parameter source,
    noise preset, method list and execution budget."""

    problem: MaxCutProblem
    reps: int = 2
    entanglement: str = "circular"
    parameters: tuple[float, ...] | str = "optimize"
    noise: str = "basic"
    methods: tuple[str, ...] = METHODS
    shots: int = 10000
    seed: int = 0
    coupling_map: str = "heavyhex:3"
    circuit_file: str | None = None
    out: str = "experiment"

    def __post_init__(self):
        if not self.methods:
            raise ConfigError("methods list must be non-empty")
        for m in self.methods:
            if m not in METHODS:
                raise ConfigError(f"unknown method {m!r} (choose from {METHODS})")
        if self.shots < 1:
            raise ConfigError("shots must be >= 1")
        if not isinstance(self.parameters, str):
            object.__setattr__(self, "parameters",
                               tuple(float(v) for v in self.parameters))

    @staticmethod
    def from_json(path: str) -> "ExperimentConfig":
        with open(path) as f:
            data = json.load(f)
        return ExperimentConfig.from_dict(data)

    @staticmethod
    def from_dict(data: dict) -> "ExperimentConfig":
        spec = data.pop("problem", {"ring": 4})
        if "ring" in spec:
            problem = ring_problem(int(spec["ring"]))
        elif "edges" in spec:
            problem = MaxCutProblem(int(spec["n"]),
                                    tuple((a, b) for a, b in spec["edges"]))
        else:
            raise ConfigError("problem spec needs a 'ring' size or an 'n'/'edges' pair")
        known = {
            "reps", "entanglement", "parameters", "noise", "methods", "shots",
            "seed", "coupling_map", "circuit_file", "out",
        }
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        if "methods" in data:
            data["methods"] = tuple(data["methods"])
        if "parameters" in data and not isinstance(data["parameters"], str):
            data["parameters"] = tuple(data["parameters"])
        return ExperimentConfig(problem=problem, **data)


@dataclass(frozen=True)
class CellResult:
    """Outcome of one (method, preset) cell."""

    method: str
    preset: str
    expectation: float | None
    abs_error: float | None
    cnots: tuple[int, ...]
    rzz: tuple[int, ...]
    wall_time: float
    error: str | None = None


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    ideal: float
    reference_noiseless_diag: float | None
    parameters: tuple[float, ...]
    cells: tuple[CellResult, ...]


def _derive_seed(base: int, *key: int) -> int:
    return int(np.random.SeedSequence((base,) + key).generate_state(1)[0])


def _resolve_parameters(config: ExperimentConfig, ansatz: AnsatzSpec) -> np.ndarray:
    if isinstance(config.parameters, tuple):
        return np.array(config.parameters, dtype=float)
    if config.parameters == "optimize":
        return optimize_parameters(config.problem, ansatz,
                                   seed=_derive_seed(config.seed, 0xA11))
    with open(config.parameters) as f:
        return np.array(json.load(f)["parameters"], dtype=float)


def _prepare_circuit(config: ExperimentConfig, ansatz: AnsatzSpec,
                     theta: np.ndarray) -> Circuit:
    if config.circuit_file is not None:
        circuit = from_text(Path(config.circuit_file).read_text())
        if circuit.width != config.problem.n:
            raise ConfigError("circuit file width does not match the problem size")
        return circuit.without_measurements()
    return ansatz.circuit(theta)


def run_experiment(config: ExperimentConfig, *,
                   max_qubits: int = DEFAULT_MAX_QUBITS) -> ExperimentResult:
    """Run the experiment matrix for one noise preset.

    Per-cell failures are recorded in the cell's ``error`` field without
    aborting the remaining methods.
    """
    ansatz = AnsatzSpec(config.problem.n, config.reps, config.entanglement)
    theta = _resolve_parameters(config, ansatz)
    circuit = _prepare_circuit(config, ansatz, theta)
    hamiltonian = maxcut_hamiltonian(config.problem)
    noise = preset(config.noise)
    shots = None if noise is NOISELESS else config.shots
    cmap = coupling_map_for(config.coupling_map, 2 * circuit.width)

    ideal = expectation(evolve(circuit), hamiltonian)
    reference = None
    if any(m.startswith("vd") for m in config.methods):
        reference = _noiseless_diag_reference(circuit, hamiltonian, noise, cmap,
                                              max_qubits)

    cells = []
    for mi, method in enumerate(config.methods):
        started = time.perf_counter()
        seed = _derive_seed(config.seed, mi + 1)
        try:
            value, cnots, rzz = _run_method(
                method, circuit, hamiltonian, noise, cmap, shots, seed, max_qubits)
            cells.append(CellResult(
                method=method, preset=config.noise, expectation=value,
                abs_error=abs(value - ideal), cnots=cnots, rzz=rzz,
                wall_time=time.perf_counter() - started))
        except Exception as exc:  # per-cell failure; matrix completes
            cells.append(CellResult(
                method=method, preset=config.noise, expectation=None,
                abs_error=None, cnots=(), rzz=(),
                wall_time=time.perf_counter() - started,
                error=f"{type(exc).__name__}: {exc}"))
    return ExperimentResult(config=config, ideal=ideal,
                            reference_noiseless_diag=reference,
                            parameters=tuple(float(v) for v in theta),
                            cells=tuple(cells))


def _noiseless_diag_reference(circuit, hamiltonian, noise, cmap, max_qubits):
    """Expectation of the distillation circuit with noisy copies but ideal
    (atomic, noiseless) diagonalizing gates."""
    vd = build_vd_circuit(circuit)
    rec = run_circuit(vd, noise=noise, cmap=cmap, shots=None, seed=0,
                      ideal_diag=True, max_qubits=max_qubits)
    return estimate_from_distribution(rec.distribution, hamiltonian).mitigated


def _run_method(method, circuit, hamiltonian, noise, cmap, shots, seed,
                max_qubits):
    if method == "none":
        bare = Circuit(circuit.width,
                       circuit.ops + tuple(measure(q) for q in range(circuit.width)))
        rec = run_circuit(bare, noise=noise, cmap=cmap, shots=shots, seed=seed,
                          max_qubits=max_qubits)
        return expectation(rec.output, hamiltonian), (rec.cnots,), (rec.rzz_gates,)

    vd = build_vd_circuit(circuit)
    if method == "vd":
        rec = run_circuit(vd, noise=noise, cmap=cmap, shots=shots, seed=seed,
                          max_qubits=max_qubits)
        est = (estimate_from_counts(rec.counts, hamiltonian) if rec.counts is not None
               else estimate_from_distribution(rec.distribution, hamiltonian))
        return est.mitigated, (rec.cnots,), (rec.rzz_gates,)

    if method == "vd+zne":
        runs, cnots, rzz = [], [], []
        for si, scale in enumerate(ZNE_SCALES):
            rec = run_circuit(vd, noise=noise, cmap=cmap, shots=shots,
                              seed=_derive_seed(seed, si), scale=scale,
                              max_qubits=max_qubits)
            est = (estimate_from_counts(rec.counts, hamiltonian)
                   if rec.counts is not None
                   else estimate_from_distribution(rec.distribution, hamiltonian))
            stderr = est.mitigated_se if shots is not None else 0.0
            runs.append(ScaledRun(scale, est.mitigated, stderr))
            cnots.append(rec.cnots)
            rzz.append(rec.rzz_gates)
        return extrapolate_linear(runs), tuple(cnots), tuple(rzz)

    if method == "vd+cut":
        rec = run_circuit(vd, noise=noise, cmap=cmap, shots=shots, seed=seed,
                          max_qubits=max_qubits)
        unmitigated = rec.output
        cache = DiagonalSimulationCache()
        pipelines = build_pairwise_pipelines(circuit)
        pairwise, cnots, rzz = [], [], []
        for p in pipelines:
            pairwise.append(run_pairwise(
                p, noise, shots, cmap=cmap,
                seed=_derive_seed(seed, 101 + p.pair_index), cache=cache,
                max_qubits=max_qubits))
            cnots.append(p.fragment_stats["cnots"])
            rzz.append(p.fragment_stats["rzz"])
        merged = recombine(unmitigated, pairwise)
        est = estimate_from_distribution(merged, hamiltonian, shots=shots)
        return est.mitigated, tuple(cnots), tuple(rzz)

    raise ConfigError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# persistence


def _fmt(value: float | None) -> str:
    return "" if value is None else f"{value:.12g}"


def emit(result: ExperimentResult, out: str | None = None) -> tuple[str, str]:
    """Write ``<out>.csv`` (fixed table mirroring the method rows) and
    ``<out>.json`` (full provenance).  Returns the two paths."""
    if not result.cells:
        raise ConfigError("nothing to emit: no method cells")
    base = Path(out if out is not None else result.config.out)
    csv_path = base.with_suffix(".csv")
    json_path = base.with_suffix(".json")
    lines = [CSV_HEADER]
    for cell in result.cells:
        lines.append(",".join([
            cell.method,
            ";".join(str(c) for c in cell.cnots),
            ";".join(str(r) for r in cell.rzz),
            _fmt(cell.expectation),
            _fmt(cell.abs_error),
        ]))
    csv_path.write_text("\n".join(lines) + "\n")

    noise = preset(result.config.noise)
    doc = {
        "config": {
            "problem": {"n": result.config.problem.n,
                        "edges": [list(e) for e in result.config.problem.edges]},
            "reps": result.config.reps,
            "entanglement": result.config.entanglement,
            "noise": result.config.noise,
            "methods": list(result.config.methods),
            "shots": result.config.shots,
            "seed": result.config.seed,
            "coupling_map": result.config.coupling_map,
        },
        "parameters": list(result.parameters),
        "ideal": result.ideal,
        "reference_noiseless_diag": result.reference_noiseless_diag,
        "noise_parameters": _noise_doc(noise),
        "cells": [
            {
                "method": c.method,
                "preset": c.preset,
                "expectation": c.expectation,
                "abs_error": c.abs_error,
                "cnots": list(c.cnots),
                "rzz": list(c.rzz),
                "wall_time": c.wall_time,
                "error": c.error,
            }
            for c in result.cells
        ],
    }
    json_path.write_text(json.dumps(doc, indent=2) + "\n")
    return str(csv_path), str(json_path)


def _noise_doc(noise: NoiseModel | None) -> dict | None:
    if noise is None:
        return None
    return {
        "two_qubit_depol": noise.two_qubit_depol,
        "one_qubit_depol": noise.one_qubit_depol,
        "two_qubit_time": noise.two_qubit_time,
        "one_qubit_time": noise.one_qubit_time,
        "t1": noise.t1,
        "t2": noise.t2,
        "readout": noise.readout.tolist(),
        "gate_crosstalk": noise.gate_crosstalk,
        "crosstalk_angle": noise.crosstalk_angle,
        "readout_crosstalk": noise.readout_crosstalk,
        "readout_pair": noise.readout_pair.tolist(),
    }


def load_result_json(path: str) -> dict:
    with open(path) as f:
        return json.load(f)
