"""Density-matrix engine: channels, distributions, sampling, readout."""
import numpy as np
import pytest

from vdcut.circuit import Circuit, PauliObservable, cnot, h, measure, ry, x
from vdcut.noise import NoiseModel, preset
from vdcut.simulate import (
    Counts,
    DensityMatrix,
    Distribution,
    SimulationSizeError,
    apply_channel,
    apply_readout,
    evolve,
    exact_probs,
    expectation,
    marginal,
    sample,
    thermal_relaxation_kraus,
    tv_distance,
)

from helpers import random_circuit


def test_empty_circuit_ground_state():
    dm = evolve(Circuit(1))
    assert np.abs(dm.matrix - np.diag([1.0, 0.0])).max() == 0


def test_full_depolarization_gives_maximally_mixed():
    # zero gate duration disables relaxation, leaving pure depolarization
    nm = NoiseModel(one_qubit_depol=1.0, one_qubit_time=0.0)
    dm = evolve(Circuit(1, (x(0),)), nm)
    assert np.abs(dm.matrix - np.eye(2) / 2).max() < 1e-15


def test_noiseless_purity():
    rng = np.random.default_rng(2)
    c = random_circuit(3, 16, rng)
    assert abs(evolve(c).purity() - 1.0) < 1e-10


def test_width_cap():
    with pytest.raises(SimulationSizeError):
        evolve(Circuit(15), max_qubits=14)


def test_measurement_rejected_by_evolve():
    with pytest.raises(ValueError):
        evolve(Circuit(1, (measure(0),)))


def test_channels_preserve_density_matrix_invariants():
    rng = np.random.default_rng(4)
    nm = NoiseModel(gate_crosstalk=True, readout_crosstalk=True)
    for _ in range(40):
        c = random_circuit(int(rng.integers(1, 4)), int(rng.integers(1, 12)), rng)
        dm = evolve(c, nm)
        dm.validate(atol=1e-10)


def test_numba_and_numpy_paths_agree():
    rng = np.random.default_rng(6)
    nm = preset("basic")
    c = random_circuit(3, 12, rng)
    a = evolve(c, nm, use_numba=True).matrix
    b = evolve(c, nm, use_numba=False).matrix
    assert np.abs(a - b).max() < 1e-14


def test_thermal_relaxation_fixed_point():
    """An idle qubit relaxed for t >> T1 ends in |0> regardless of start."""
    t1, t2 = 120.385e-6, 138.652e-6
    ks = thermal_relaxation_kraus(t1, t2, 60 * t1)
    rho = np.array([[0.2, 0.4 - 0.1j], [0.4 + 0.1j, 0.8]])
    out = apply_channel(rho, ks)
    z = np.real(out[0, 0] - out[1, 1])
    assert abs(z - 1.0) < 1e-6


def test_thermal_relaxation_coherence_decay():
    t1, t2, d = 100e-6, 150e-6, 5e-6
    ks = thermal_relaxation_kraus(t1, t2, d)
    plus = np.array([[0.5, 0.5], [0.5, 0.5]], dtype=complex)
    out = apply_channel(plus, ks)
    assert abs(abs(out[0, 1]) - 0.5 * np.exp(-d / t2)) < 1e-12


def test_exact_probs_examples():
    assert exact_probs(DensityMatrix(1, np.diag([1.0, 0.0]))).as_dict() == {"0": 1.0}
    assert exact_probs(DensityMatrix(1, np.eye(2) / 2)).as_dict() == {"0": 0.5, "1": 0.5}
    bell = evolve(Circuit(2, (h(0), cnot(0, 1))))
    assert exact_probs(bell).as_dict() == pytest.approx({"00": 0.5, "11": 0.5})


def test_sampling_deterministic_and_concentrated():
    d = Distribution.from_dict({"0": 1.0}, 1)
    c = sample(d, 100, seed=1)
    assert c["0"] == 100

    d = Distribution.from_dict({"0": 0.5, "1": 0.5}, 1)
    c = sample(d, 10 ** 6, seed=9)
    # 5 sigma binomial bound
    assert abs(c["0"] - 5 * 10 ** 5) < 5 * np.sqrt(10 ** 6 * 0.25)
    again = sample(d, 10 ** 6, seed=9)
    assert np.array_equal(c.values, again.values)


def test_counts_roundtrip():
    c = Counts(2, np.array([3, 0, 1, 0]))
    assert c.shots == 4
    assert c.as_dict() == {"00": 3, "10": 1}
    assert c.to_distribution().as_dict() == {"00": 0.75, "10": 0.25}


def test_marginal_orders_bits():
    d = Distribution.from_dict({"011": 1.0}, 3)
    assert marginal(d, [0]).as_dict() == {"0": 1.0}
    assert marginal(d, [2, 1]).as_dict() == {"11": 1.0}
    assert marginal(d, [2, 0]).as_dict() == {"10": 1.0}


def test_expectation_maxcut_examples():
    # triangle-graph MaxCut Hamiltonian
    terms = [(0.5, "III"), (-0.5, "ZZI"),
             (0.5, "III"), (-0.5, "IZZ"),
             (0.5, "III"), (-0.5, "ZIZ")]
    hamiltonian = PauliObservable(tuple(terms))
    assert expectation(Distribution.from_dict({"001": 1.0}, 3), hamiltonian) == pytest.approx(2.0)
    assert expectation(Distribution.from_dict({"000": 1.0}, 3), hamiltonian) == pytest.approx(0.0)

    mixed = DensityMatrix(2, np.eye(4) / 4)
    assert expectation(mixed, PauliObservable(((1.0, "ZZ"),))) == pytest.approx(0.0)


def test_expectation_rejects_offdiagonal_on_distribution():
    d = Distribution.from_dict({"0": 1.0}, 1)
    with pytest.raises(ValueError):
        expectation(d, PauliObservable(((1.0, "X"),)))


def test_readout_identity_and_single_qubit():
    ident = NoiseModel(readout=np.eye(2))
    d = Distribution.from_dict({"0": 1.0}, 1)
    assert apply_readout(d, ident).as_dict() == {"0": 1.0}

    nm = NoiseModel()  # default symmetric 1.2e-2 error
    out = apply_readout(d, nm)
    assert out["0"] == pytest.approx(0.988)
    assert out["1"] == pytest.approx(0.012)


def test_readout_crosstalk_pair_matrix():
    nm = NoiseModel(readout=np.eye(2), readout_crosstalk=True,
                    adjacency=((0, 1),))
    d = Distribution.from_dict({"00": 1.0}, 2)
    out = apply_readout(d, nm)
    assert out["00"] == pytest.approx(0.991)
    assert out["01"] == pytest.approx(0.003)
    assert out["10"] == pytest.approx(0.003)
    assert out["11"] == pytest.approx(0.003)


def test_readout_crosstalk_greedy_matching():
    # physical ids 0-1-2 on a line; only one pair (0,1) forms, 2 stays single
    nm = NoiseModel(readout=np.eye(2), readout_crosstalk=True,
                    adjacency=((0, 1), (1, 2)))
    d = Distribution.from_dict({"000": 1.0}, 3)
    out = apply_readout(d, nm)
    # qubit 2 sees no crosstalk: its marginal stays exactly deterministic
    assert marginal(out, [2]).as_dict() == {"0": 1.0}
    assert marginal(out, [0, 1])["00"] == pytest.approx(0.991)


def test_readout_preserves_normalization():
    rng = np.random.default_rng(8)
    nm = NoiseModel(readout_crosstalk=True, adjacency=((0, 1), (1, 2), (2, 3)))
    p = rng.random(16)
    d = Distribution(4, p / p.sum())
    out = apply_readout(d, nm)
    assert abs(out.probs.sum() - 1.0) < 1e-12


def test_tv_distance():
    a = Distribution.from_dict({"0": 1.0}, 1)
    b = Distribution.from_dict({"0": 0.5, "1": 0.5}, 1)
    assert tv_distance(a, b) == pytest.approx(0.5)
