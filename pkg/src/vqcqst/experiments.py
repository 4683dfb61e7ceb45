"""Experiment harness: targets from descriptors, multi-trial batches, optimizer comparison.

Target descriptors double as dataset provenance labels and can be parsed back::

    ghz:n=3
    xxz:L=6,J=1,Delta=1,h=1
    random-circuit:n=3,layers=5,seed=11

Seeds: trial ``t`` of a batch with master seed ``s`` uses ``derive_seed(s, purpose, t)``
for init / optimizer / sampling streams.  The dataset (and random basis subset) uses
trial index 0 for every trial when data is shared, or ``t`` when it is resampled per trial.
"""

from __future__ import annotations

import csv
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import optimizers as opt
from .ansatz import AnsatzSpec
from .errors import ConfigurationError, ValidationError
from .losses import LOSS_KINDS, LossConfig
from .measurement import MeasurementDataset, enumerate_bases, random_basis_subset
from .seeding import derive_seed
from .statevector import Statevector
from .targets import RandomCircuitSpec, ghz_state, random_circuit_state, xxz_ground_state
from .tomography import OPTIMIZERS, PS_ADAM, canonical_optimizer, TrainConfig, TrainReport, acquire_dataset, train

log = logging.getLogger(__name__)

SUMMARY_FORMAT_VERSION = 1
COMPARISON_FORMAT_VERSION = 1

# Per-optimizer settings applied on top of the experiment config in compare_optimizers.
COMPARISON_DEFAULTS = {
    "spsa": {},
    "nelder-mead": {"budget": 6000},
    "fd-adam": {"iterations": 150, "exact_mode": True},
    "ps-adam": {"iterations": 150, "exact_mode": True},
}


def parse_target(descriptor: str) -> dict:
    """``"xxz:L=6,J=1"`` -> ``{"kind": "xxz", "L": 6, "J": 1.0}``."""
    kind, _, rest = descriptor.partition(":")
    kind = kind.strip()
    if kind not in ("ghz", "xxz", "random-circuit"):
        raise ConfigurationError(f"unknown target kind {kind!r} in {descriptor!r}")
    out = {"kind": kind}
    for item in filter(None, (s.strip() for s in rest.split(","))):
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"malformed target field {item!r} in {descriptor!r}")
        out[key.strip()] = int(value) if key.strip() in ("n", "L", "layers", "seed") else float(value)
    return out


def format_target(target: dict) -> str:
    fields = [f"{k}={v:g}" if isinstance(v, float) else f"{k}={v}" for k, v in target.items() if k != "kind"]
    return f"{target['kind']}:" + ",".join(fields)


def target_qubits(target: dict) -> int:
    return int(target["L"] if target["kind"] == "xxz" else target["n"])


def make_target(target: dict) -> Statevector:
    kind = target["kind"]
    if kind == "ghz":
        return ghz_state(int(target["n"]))
    if kind == "xxz":
        _, state = xxz_ground_state(
            int(target["L"]), target.get("J", 1.0), target.get("Delta", 1.0), target.get("h", 1.0)
        )
        return state
    if "seed" not in target:
        raise ConfigurationError("random-circuit target needs an explicit seed")
    return random_circuit_state(RandomCircuitSpec(int(target["n"]), int(target.get("layers", 5)), int(target["seed"])))


def target_from_provenance(provenance: str) -> Optional[Statevector]:
    """Rebuild the target state from a dataset provenance label, or None if not parseable."""
    try:
        return make_target(parse_target(provenance))
    except (ConfigurationError, KeyError, ValueError):
        return None


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    target: str = "ghz:n=3"
    bases: str = "all"
    shots: int = 100
    layers: int = 10
    loss: str = "symmetric_kl"
    epsilon: float = 1e-3
    sigma: float = 0.1
    optimizer: str = "spsa"
    spsa: object = "auto"
    iterations: int = 1000
    budget: Optional[int] = None
    adam_lr: float = 0.05
    fd_delta: float = 1e-3
    exact_mode: bool = False
    shots_per_iteration: Optional[int] = None
    resample_data: Optional[bool] = None
    trials: int = 1
    seed: int = 0
    output_dir: Optional[str] = None
    workers: int = 1

    def __post_init__(self):
        self.optimizer = canonical_optimizer(self.optimizer)
        problems = []
        if self.trials < 1:
            problems.append(f"trials: must be >= 1, got {self.trials}")
        if self.shots < 1:
            problems.append(f"shots: must be >= 1, got {self.shots}")
        if self.layers < 1:
            problems.append(f"layers: must be >= 1, got {self.layers}")
        if self.optimizer not in OPTIMIZERS:
            problems.append(f"optimizer: unknown {self.optimizer!r}; valid names: {', '.join(OPTIMIZERS)}")
        if self.loss not in LOSS_KINDS:
            problems.append(f"loss: unknown {self.loss!r}; valid: {', '.join(LOSS_KINDS)}")
        if self.bases != "all" and not (self.bases.startswith("random:") and self.bases[7:].isdigit()):
            problems.append(f"bases: expected 'all' or 'random:k', got {self.bases!r}")
        if isinstance(self.spsa, str) and self.spsa != "auto" and self.spsa not in opt.SPSA_PRESETS:
            problems.append(f"spsa: unknown preset {self.spsa!r}; valid: {', '.join(opt.SPSA_PRESETS)}")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigurationError(f"unknown config fields: {', '.join(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def target_spec(self) -> dict:
        return parse_target(self.target)

    @property
    def n_qubits(self) -> int:
        return target_qubits(self.target_spec)

    @property
    def random_bases(self) -> Optional[int]:
        return int(self.bases[7:]) if self.bases.startswith("random:") else None

    @property
    def shares_data(self) -> bool:
        """Random-subset runs draw fresh bases (hence fresh data) per trial unless told otherwise."""
        if self.resample_data is None:
            return self.random_bases is None
        return not self.resample_data

    def resolve(self) -> "ExperimentConfig":
        """Fill in every implicit seed so the config alone reproduces the run."""
        spec = self.target_spec
        if spec["kind"] == "random-circuit" and "seed" not in spec:
            spec["seed"] = derive_seed(self.seed, "target")
            return replace(self, target=format_target(spec))
        return self

    def spsa_config(self) -> opt.SpsaConfig:
        """``"auto"`` picks the tuned gains matching the loss."""
        if self.spsa == "auto":
            return opt.SPSA_PRESETS["tuned-3q-mmd" if self.loss == "mmd" else "tuned-3q"](max_iterations=self.iterations)
        if isinstance(self.spsa, str):
            return opt.SPSA_PRESETS[self.spsa](max_iterations=self.iterations)
        return opt.SpsaConfig(**{**dict(self.spsa), "max_iterations": self.iterations})

    def train_config(self, trial: int) -> TrainConfig:
        return TrainConfig(
            ansatz=AnsatzSpec(self.n_qubits, self.layers),
            loss=LossConfig(self.loss, self.epsilon, self.sigma),
            optimizer=self.optimizer,
            spsa=self.spsa_config() if self.optimizer == "spsa" else None,
            adam=opt.AdamConfig(learning_rate=self.adam_lr),
            fd_delta=self.fd_delta,
            max_iterations=self.iterations,
            budget=self.budget,
            shots_per_iteration=self.shots_per_iteration,
            exact=self.exact_mode,
            seed=self.seed,
            trial=trial,
        )


def build_dataset(config: ExperimentConfig, trial: int = 0, target: Statevector = None) -> MeasurementDataset:
    config = config.resolve()
    data_trial = 0 if config.shares_data else trial
    if target is None:
        target = make_target(config.target_spec)
    if config.random_bases is None:
        bases = enumerate_bases(target.n_qubits)
    else:
        bases = random_basis_subset(
            target.n_qubits,
            config.random_bases,
            np.random.default_rng(derive_seed(config.seed, "bases", data_trial)),
        )
    data_seed = derive_seed(config.seed, "data", data_trial)
    return acquire_dataset(target, bases, config.shots, data_seed, provenance=config.target)


def run_trial(config: ExperimentConfig, trial: int, progress_every: int = 0) -> TrainReport:
    config = config.resolve()
    target = make_target(config.target_spec)
    dataset = build_dataset(config, trial, target)
    progress = None
    if progress_every:

        def progress(k, trace):
            if k % progress_every == 0:
                log.info("%s trial %d iter %d loss %.4f calls %d", config.name, trial, k, trace.losses[-1], trace.calls[-1])

    report = train(dataset, config.train_config(trial), target=target, progress=progress)
    report.seeds["data"] = dataset.seed
    return report


def _trial_job(args):
    config, trial, progress_every = args
    try:
        return trial, run_trial(config, trial, progress_every), None
    except Exception as exc:  # recorded per trial; the batch keeps going
        return trial, None, f"{type(exc).__name__}: {exc}"


@dataclass
class BatchSummary:
    trials: List[dict]
    median_fidelity: Optional[float]
    quartiles: List[float]
    infidelity_quartiles: List[float]
    loss_outliers: List[int] = field(default_factory=list)
    incomplete: List[int] = field(default_factory=list)
    csv_path: Optional[str] = None
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"format_version": SUMMARY_FORMAT_VERSION, **asdict(self)}

    @classmethod
    def from_dict(cls, doc: dict) -> "BatchSummary":
        if doc.get("format_version") != SUMMARY_FORMAT_VERSION:
            raise ValidationError([f"format_version: expected {SUMMARY_FORMAT_VERSION}, got {doc.get('format_version')!r}"])
        return cls(**{k: v for k, v in doc.items() if k != "format_version"})

    @property
    def fidelities(self) -> List[float]:
        return [t["fidelity"] for t in self.trials if t.get("fidelity") is not None]


def loss_outliers(final_losses: Dict[int, float]) -> List[int]:
    """Trials whose final loss lies above the upper Tukey fence Q3 + 1.5 IQR."""
    if len(final_losses) < 4:
        return []
    values = np.array(list(final_losses.values()))
    q1, q3 = np.percentile(values, [25, 75])
    fence = q3 + 1.5 * (q3 - q1)
    return sorted(t for t, v in final_losses.items() if v > fence)


def summarize(trials: List[dict], config: dict = None) -> BatchSummary:
    ok = [t for t in trials if t["status"] == "ok" and t["fidelity"] is not None]
    fids = np.array([t["fidelity"] for t in ok])
    if fids.size:
        quartiles = [float(x) for x in np.percentile(fids, [25, 50, 75])]
        infid = [float(x) for x in np.percentile(1 - fids, [25, 50, 75])]
        median = float(np.median(fids))
    else:
        quartiles, infid, median = [], [], None
    return BatchSummary(
        trials=trials,
        median_fidelity=median,
        quartiles=quartiles,
        infidelity_quartiles=infid,
        loss_outliers=loss_outliers({t["trial"]: t["final_loss"] for t in ok}),
        incomplete=[t["trial"] for t in trials if t["status"] != "ok"],
        config=config or {},
    )


def _trial_row(trial: int, report: Optional[TrainReport], error: Optional[str], report_path=None) -> dict:
    if report is None:
        return {"trial": trial, "status": "failed", "error": error, "fidelity": None, "final_loss": None,
                "function_calls": None, "iterations": None, "seeds": None, "report_path": None}
    return {
        "trial": trial,
        "status": "ok" if report.error is None else "aborted",
        "error": report.error,
        "fidelity": report.fidelity,
        "final_loss": report.final_loss,
        "initial_loss": report.initial_loss,
        "function_calls": report.function_calls,
        "iterations": int(report.loss_trace[-1][0]),
        "seeds": report.seeds,
        "wall_clock_s": report.wall_clock_s,
        "report_path": report_path,
    }


def _map_trials(config: ExperimentConfig, trials, progress_every: int):
    jobs = [(config, t, progress_every) for t in trials]
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            yield from pool.map(_trial_job, jobs)
    else:
        for job in jobs:
            yield _trial_job(job)


def run_batch(config: ExperimentConfig, progress_every: int = 0) -> Tuple[BatchSummary, Dict[int, TrainReport]]:
    """Run ``config.trials`` independent trainings; write files when ``output_dir`` is set."""
    config = config.resolve()
    outdir = config.output_dir
    if outdir:
        os.makedirs(outdir, exist_ok=True)
    reports, rows = {}, []
    for trial, report, error in _map_trials(config, range(config.trials), progress_every):
        path = None
        if report is not None:
            reports[trial] = report
            if outdir:
                path = os.path.join(outdir, f"trial_{trial:03d}.json")
                report.save(path)
        else:
            log.warning("%s trial %d failed: %s", config.name, trial, error)
        rows.append(_trial_row(trial, report, error, path))
        log.info("%s trial %d done: fidelity=%s", config.name, trial, rows[-1]["fidelity"])
    summary = summarize(rows, config.to_dict())
    if outdir:
        summary.csv_path = os.path.join(outdir, "trials.csv")
        with open(summary.csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["trial", "fidelity", "final_loss"])
            for row in rows:
                writer.writerow([row["trial"], row["fidelity"], row["final_loss"]])
        with open(os.path.join(outdir, "summary.json"), "w") as fh:
            json.dump(summary.to_dict(), fh, indent=1)
    return summary, reports


def calls_per_progress(row: dict) -> float:
    """Function calls per optimizer iteration, one iteration being one parameter update."""
    return row["function_calls"] / row["iterations"] if row["iterations"] else float("inf")


def compare_optimizers(
    config: ExperimentConfig, optimizers: List[str], trials: int = 25, overrides: Dict[str, dict] = None,
    progress_every: int = 0,
) -> dict:
    """Run every optimizer on the same trials (same datasets and initial points)."""
    if len(optimizers) < 2:
        raise ConfigurationError(f"need at least 2 optimizers to compare, got {optimizers}")
    optimizers = [canonical_optimizer(o) for o in optimizers]
    unknown = [o for o in optimizers if o not in OPTIMIZERS]
    if unknown:
        raise ConfigurationError(f"unknown optimizers {unknown}; valid names: {', '.join(OPTIMIZERS)}")
    config = config.resolve()
    overrides = overrides or {}
    result = {"format_version": COMPARISON_FORMAT_VERSION, "config": config.to_dict(), "trials": trials, "optimizers": {}}
    for name in optimizers:
        settings = {**COMPARISON_DEFAULTS.get(name, {}), **overrides.get(name, {})}
        if name == PS_ADAM:
            settings["exact_mode"] = True
        sub = replace(config, optimizer=name, trials=trials, output_dir=None, **settings)
        summary, _ = run_batch(sub, progress_every)
        rows = [r for r in summary.trials if r["status"] == "ok"]
        result["optimizers"][name] = {
            "settings": settings,
            "median_fidelity": summary.median_fidelity,
            "infidelity_quartiles": summary.infidelity_quartiles,
            "median_function_calls": float(np.median([r["function_calls"] for r in rows])) if rows else None,
            "median_calls_per_progress": float(np.median([calls_per_progress(r) for r in rows])) if rows else None,
            "trials": [
                {k: r[k] for k in ("trial", "fidelity", "final_loss", "initial_loss", "function_calls", "iterations", "seeds")}
                for r in rows
            ],
            "incomplete": summary.incomplete,
        }
    if config.output_dir:
        os.makedirs(config.output_dir, exist_ok=True)
        path = os.path.join(config.output_dir, "comparison.json")
        with open(path, "w") as fh:
            json.dump(result, fh, indent=1)
        csv_path = os.path.join(config.output_dir, "comparison.csv")
        with open(csv_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["optimizer", "trial", "fidelity", "final_loss", "function_calls"])
            for name, block in result["optimizers"].items():
                for r in block["trials"]:
                    writer.writerow([name, r["trial"], r["fidelity"], r["final_loss"], r["function_calls"]])
        result["path"] = path
    return result
