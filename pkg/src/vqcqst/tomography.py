"""Variational reconstruction of a pure state from Pauli-basis histograms."""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import optimizers as opt
from .ansatz import AnsatzSpec, evaluate_amplitudes, init_params
from .errors import ConfigurationError, OptimizerAbort, UsageError, ValidationError
from .losses import LossConfig, loss_gradient_rows, per_basis_loss
from .measurement import (
    Histogram,
    MeasurementDataset,
    as_basis,
    basis_probabilities,
    sample_counts,
)
from .seeding import derive_seed, make_rng
from .statevector import Statevector, inner_product

REPORT_FORMAT_VERSION = 1

SPSA = "spsa"
FD_ADAM = "fd-adam"
PS_ADAM = "ps-adam"
NELDER_MEAD = "nelder-mead"
OPTIMIZERS = (SPSA, FD_ADAM, PS_ADAM, NELDER_MEAD)
OPTIMIZER_ALIASES = {"parameter-shift": PS_ADAM, "finite-difference": FD_ADAM, "nm": NELDER_MEAD}


def canonical_optimizer(name: str) -> str:
    return OPTIMIZER_ALIASES.get(name, name)


def fidelity(a: Statevector, b: Statevector) -> float:
    """|<a|b>|^2 clamped to [0, 1]."""
    return float(min(1.0, max(0.0, abs(inner_product(a, b)) ** 2)))


def acquire_dataset(
    target: Statevector, bases: Sequence, shots: int, rng, provenance: str = "", seed: Optional[int] = None
) -> MeasurementDataset:
    """Measure ``target`` in each basis with ``shots`` shots.

    ``rng`` may be an int seed or a Generator; when it is an int it is also stored as the
    dataset seed unless ``seed`` overrides it.
    """
    if seed is None:
        seed = int(rng) if not isinstance(rng, np.random.Generator) else -1
    rng = make_rng(rng)
    bases = [as_basis(b) for b in bases]
    for b in bases:
        if b.n_qubits != target.n_qubits:
            raise UsageError(f"basis {b.axes!r} does not match {target.n_qubits} qubits")
    probs = basis_probabilities(target.amplitudes, bases)
    counts = sample_counts(probs, shots, rng)
    records = [(b, Histogram.from_array(c, target.n_qubits)) for b, c in zip(bases, counts)]
    return MeasurementDataset(target.n_qubits, shots, records, seed, provenance)


class TomographyObjective:
    """Loss of the ansatz at given parameters against a fixed dataset.

    ``shots=None`` evaluates exact ansatz distributions (deterministic); otherwise each
    call samples ``shots`` fresh outcomes per basis from ``rng``.
    """

    def __init__(self, dataset: MeasurementDataset, ansatz: AnsatzSpec, loss: LossConfig, shots=None, rng=None):
        if ansatz.n_qubits != dataset.n_qubits:
            raise UsageError(f"ansatz has {ansatz.n_qubits} qubits, dataset has {dataset.n_qubits}")
        if shots is not None and shots < 1:
            raise ConfigurationError(f"shots must be >= 1, got {shots}")
        self.dataset = dataset
        self.ansatz = ansatz
        self.loss = loss
        self.shots = shots
        self.rng = make_rng(rng if rng is not None else 0)
        self.target = dataset.empirical_matrix()
        self.basis_index = np.array([b.index for b in dataset.bases], dtype=np.intp)
        self.calls = 0

    @property
    def exact(self) -> bool:
        return self.shots is None

    def distributions(self, params) -> np.ndarray:
        """Exact ansatz outcome probabilities, one row per dataset basis."""
        return basis_probabilities(evaluate_amplitudes(self.ansatz, params), self.basis_index)

    def per_basis(self, params) -> np.ndarray:
        if not np.all(np.isfinite(params)):
            return np.full(len(self.basis_index), np.nan)
        model = self.distributions(params)
        if self.shots is not None:
            model = sample_counts(model, self.shots, self.rng) / self.shots
        return per_basis_loss(self.target, model, self.loss)

    def exact_loss(self, params) -> float:
        """Exact-distribution loss; does not count as a function call."""
        return float(np.mean(per_basis_loss(self.target, self.distributions(params), self.loss)))

    def __call__(self, params) -> float:
        self.calls += 1
        return float(np.mean(self.per_basis(params)))

    def shift_rule_gradient(self, params) -> np.ndarray:
        """Chain rule over per-basis probabilities, each differentiated by the shift rule.

        Needs exact mode.  Costs ``2 * dim + 1`` distribution evaluations, all counted.
        """
        if not self.exact:
            raise UsageError("parameter-shift gradients need exact-mode evaluation")
        self.calls += 1
        dL_dp = loss_gradient_rows(self.target, self.distributions(params), self.loss)

        def counted(p):
            self.calls += 1
            return self.distributions(p)

        jac = opt.parameter_shift_gradient(counted, params)
        return np.einsum("ibs,bs->i", jac, dL_dp) / len(self.basis_index)


def objective(dataset, ansatz, loss, shots_mode=None, rng=None) -> TomographyObjective:
    return TomographyObjective(dataset, ansatz, loss, shots_mode, rng)


@dataclass
class TrainConfig:
    """Everything :func:`train` needs beyond the dataset.

    ``shots_per_iteration=None`` means "use the dataset's shots per basis"; ``exact=True``
    switches to exact ansatz distributions instead.  ``max_iterations`` is the iteration
    budget for SPSA and the Adam-based optimizers; Nelder-Mead uses ``budget`` calls.
    """

    ansatz: AnsatzSpec
    loss: LossConfig = field(default_factory=LossConfig)
    optimizer: str = SPSA
    spsa: Optional[opt.SpsaConfig] = None
    adam: opt.AdamConfig = field(default_factory=opt.AdamConfig)
    fd_delta: float = 1e-3
    max_iterations: int = 1000
    budget: Optional[int] = None
    shots_per_iteration: Optional[int] = None
    exact: bool = False
    seed: int = 0
    trial: int = 0

    def __post_init__(self):
        self.optimizer = canonical_optimizer(self.optimizer)
        if self.optimizer not in OPTIMIZERS:
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}; valid names: {', '.join(OPTIMIZERS)}")
        if self.max_iterations < 0:
            raise ConfigurationError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if self.optimizer == PS_ADAM and not self.exact:
            raise ConfigurationError("parameter-shift training requires exact mode")

    def seeds(self) -> dict:
        return {
            "master": self.seed,
            "trial": self.trial,
            "init": derive_seed(self.seed, "init", self.trial),
            "optimizer": derive_seed(self.seed, "optimizer", self.trial),
            "sampling": derive_seed(self.seed, "sampling", self.trial),
        }

    def to_dict(self) -> dict:
        spsa = self.spsa.to_dict() if self.spsa is not None else None
        return {
            "ansatz": {"n_qubits": self.ansatz.n_qubits, "n_layers": self.ansatz.n_layers},
            "loss": {"kind": self.loss.kind, "epsilon": self.loss.epsilon, "sigma": self.loss.sigma},
            "optimizer": self.optimizer,
            "spsa": spsa,
            "adam": self.adam.to_dict(),
            "fd_delta": self.fd_delta,
            "max_iterations": self.max_iterations,
            "budget": self.budget,
            "shots_per_iteration": self.shots_per_iteration,
            "exact": self.exact,
            "seed": self.seed,
            "trial": self.trial,
        }


@dataclass
class TrainReport:
    loss_trace: List[list]
    final_params: np.ndarray
    fidelity: Optional[float]
    function_calls: int
    config: dict
    seeds: dict
    wall_clock_s: float
    final_loss: Optional[float] = None
    initial_loss: Optional[float] = None
    error: Optional[str] = None
    optimizer_info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.fidelity is not None and not 0.0 <= self.fidelity <= 1.0:
            raise ValidationError([f"fidelity: {self.fidelity} outside [0, 1]"])

    def to_dict(self) -> dict:
        return {
            "format_version": REPORT_FORMAT_VERSION,
            "config": self.config,
            "seeds": self.seeds,
            "loss_trace": [[int(i), float(v)] for i, v in self.loss_trace],
            "function_calls": int(self.function_calls),
            "final_params": [float(x) for x in self.final_params],
            "fidelity": self.fidelity,
            "final_loss": self.final_loss,
            "initial_loss": self.initial_loss,
            "wall_clock_s": self.wall_clock_s,
            "error": self.error,
            "optimizer_info": self.optimizer_info,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainReport":
        problems = []
        if doc.get("format_version") != REPORT_FORMAT_VERSION:
            problems.append(f"format_version: expected {REPORT_FORMAT_VERSION}, got {doc.get('format_version')!r}")
        for key in ("config", "seeds", "loss_trace", "function_calls", "final_params", "wall_clock_s"):
            if key not in doc:
                problems.append(f"{key}: missing")
        if problems:
            raise ValidationError(problems)
        return cls(
            loss_trace=[list(x) for x in doc["loss_trace"]],
            final_params=np.asarray(doc["final_params"], dtype=float),
            fidelity=doc.get("fidelity"),
            function_calls=doc["function_calls"],
            config=doc["config"],
            seeds=doc["seeds"],
            wall_clock_s=doc["wall_clock_s"],
            final_loss=doc.get("final_loss"),
            initial_loss=doc.get("initial_loss"),
            error=doc.get("error"),
            optimizer_info=doc.get("optimizer_info", {}),
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "TrainReport":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError([f"document: invalid JSON ({exc})"]) from exc
        return cls.from_dict(doc)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "TrainReport":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _run_optimizer(config: TrainConfig, f: TomographyObjective, theta0: np.ndarray, seeds: dict, callback):
    if config.optimizer == SPSA:
        spsa = config.spsa or opt.SpsaConfig.tuned_3q()
        spsa = opt.SpsaConfig(**{**spsa.to_dict(), "max_iterations": config.max_iterations, "seed": seeds["optimizer"]})
        return opt.spsa_minimize(f, theta0, spsa, callback=callback)
    if config.optimizer == NELDER_MEAD:
        budget = config.budget if config.budget is not None else 2 * config.max_iterations
        return opt.nelder_mead_minimize(f, theta0, budget, callback=callback)
    if config.optimizer == FD_ADAM:
        grad = lambda th: opt.finite_difference_gradient(f, th, config.fd_delta)  # noqa: E731
    else:
        grad = f.shift_rule_gradient
    return opt.adam_minimize(f, grad, theta0, config.adam, config.max_iterations, callback=callback)


def train(
    dataset: MeasurementDataset,
    config: TrainConfig,
    target: Optional[Statevector] = None,
    progress=None,
    initial_params=None,
) -> TrainReport:
    """Fit the ansatz to ``dataset``.

    ``target`` enables the final fidelity (simulation mode); without it the report's
    fidelity is ``None``.  The loss trace opens with ``[0, exact loss at the initial
    parameters]``; later entries are whatever the optimizer recorded.  An optimizer abort
    is captured in ``error`` with the partial trace kept.  ``progress(iteration, trace)`` is called after every iteration.
    """
    if config.ansatz.n_qubits != dataset.n_qubits:
        raise UsageError(f"ansatz has {config.ansatz.n_qubits} qubits, dataset has {dataset.n_qubits}")
    seeds = config.seeds()
    shots = None if config.exact else (config.shots_per_iteration or dataset.shots_per_basis)
    f = TomographyObjective(dataset, config.ansatz, config.loss, shots, np.random.default_rng(seeds["sampling"]))
    if initial_params is None:
        theta0 = init_params(config.ansatz, np.random.default_rng(seeds["init"]))
    else:
        theta0 = np.array(initial_params, dtype=float)
        if theta0.shape != (config.ansatz.parameter_count,):
            raise UsageError(f"expected {config.ansatz.parameter_count} initial parameters, got shape {theta0.shape}")
    start = time.perf_counter()
    error = None
    try:
        trace = _run_optimizer(config, f, theta0, seeds, progress)
    except OptimizerAbort as exc:
        trace, error = exc.trace, str(exc)
    final = np.asarray(trace.final_params if trace.final_params is not None else theta0, dtype=float)
    elapsed = time.perf_counter() - start
    initial_loss = f.exact_loss(theta0)
    fid = None
    if target is not None:
        fid = fidelity(target, Statevector(target.n_qubits, evaluate_amplitudes(config.ansatz, final)))
    return TrainReport(
        loss_trace=[[0, initial_loss]] + [[i, v] for i, v in zip(trace.iterations, trace.losses)],
        final_params=final,
        fidelity=fid,
        function_calls=f.calls,
        config=config.to_dict(),
        seeds=seeds,
        wall_clock_s=elapsed,
        final_loss=f.exact_loss(final),
        initial_loss=initial_loss,
        error=error,
        optimizer_info=trace.info,
    )
