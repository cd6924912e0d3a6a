"""Virtual distillation error mitigation enhanced by wire cutting, on a dense
density-matrix simulator with configurable device noise."""

__version__ = "0.1.0"

from .benchmarks import (
    AnsatzSpec,
    MaxCutProblem,
    maxcut_hamiltonian,
    optimize_parameters,
    real_amplitudes,
    ring_problem,
)
from .circuit import (
    Circuit,
    CircuitError,
    Gate,
    PauliObservable,
    append,
    build_dag,
    from_text,
    lightcone,
    tensor_two_copies,
    to_text,
)
from .cutting import (
    CutPoint,
    DiagonalSimulationCache,
    FragmentJob,
    PairwisePipeline,
    ReconstructionPlan,
    build_pairwise_pipelines,
    cut_wire,
    mitigated_expectation_cut,
    recombine,
    reconstruct,
    run_cut,
    run_pairwise,
)
from .experiments import (
    CellResult,
    ExperimentConfig,
    ExperimentResult,
    emit,
    run_experiment,
)
from .noise import NOISELESS, NoiseModel, insert_zz_crosstalk, load_noise_config, preset
from .runner import ExecutionRecord, run_circuit
from .simulate import (
    Counts,
    DensityMatrix,
    Distribution,
    apply_readout,
    evolve,
    exact_probs,
    expectation,
    marginal,
    sample,
    tv_distance,
)
from .sweep import growth_exponent, overhead_sweep, write_sweep_csv
from .transpile import (
    CouplingMap,
    RoutedCircuit,
    cnot_count,
    compact,
    coupling_map_for,
    decompose_to_basis,
    fully_connected,
    heavy_hex,
    linear,
    route,
)
from .vd import (
    DiagonalizingGate,
    VDEstimate,
    build_vd_circuit,
    diagonalizing_gate,
    estimate_from_counts,
    estimate_from_distribution,
    oracle_mitigated_expectation,
)
from .zne import ScaledRun, extrapolate_linear, fold_diagonalizing
