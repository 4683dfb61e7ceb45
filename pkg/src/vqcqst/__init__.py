"""Variational reconstruction of pure quantum states from Pauli-basis measurement counts."""

from .ansatz import AnsatzSpec, build, evaluate, init_params
from .errors import ConfigurationError, OptimizerAbort, UsageError, ValidationError
from .experiments import ExperimentConfig, compare_optimizers, run_batch
from .losses import LossConfig, kl_divergence, mmd, symmetric_kl, total_loss
from .measurement import (
    Histogram,
    MeasurementBasis,
    MeasurementDataset,
    OutcomeDistribution,
    enumerate_bases,
    exact_distribution,
    random_basis_subset,
    sample,
)
from .optimizers import SpsaConfig, nelder_mead_minimize, parameter_shift_gradient, spsa_minimize
from .statevector import Circuit, GateOp, Statevector, apply_circuit, apply_gate, inner_product, new_zero_state
from .targets import ghz_state, random_circuit_state, xxz_ground_state, xxz_hamiltonian
from .tomography import TrainConfig, TrainReport, fidelity, objective, train

__version__ = "0.1.0"
