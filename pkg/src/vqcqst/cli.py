"""Command-line entry point: ``vqcqst {gen-data,train,batch,compare-optimizers}``.

Standard output carries only the paths of written files (plus a checksum for
``gen-data``); progress goes to standard error.  Exit status 2 marks invalid input or
configuration, 1 an I/O failure; low fidelity is never an error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import os
import sys
from dataclasses import replace

from .errors import ConfigurationError, UsageError, ValidationError
from .experiments import (
    ExperimentConfig,
    build_dataset,
    compare_optimizers,
    run_batch,
    target_from_provenance,
)
from .measurement import MeasurementDataset
from .tomography import train

log = logging.getLogger("vqcqst")

# CLI flag -> ExperimentConfig field
_OVERRIDES = {
    "seed": "seed",
    "trials": "trials",
    "shots": "shots",
    "layers": "layers",
    "optimizer": "optimizer",
    "loss": "loss",
    "bases": "bases",
    "target": "target",
    "iterations": "iterations",
    "spsa_preset": "spsa",
    "budget": "budget",
    "workers": "workers",
    "output_dir": "output_dir",
    "name": "name",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON experiment config; flags below override its fields")
    p.add_argument("--name")
    p.add_argument("--target", help="ghz:n=3 | xxz:L=6,J=1,Delta=1,h=1 | random-circuit:n=3,layers=5,seed=7")
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--optimizer")
    p.add_argument("--loss", choices=["symmetric_kl", "mmd"])
    p.add_argument("--bases", help="all | random:k")
    p.add_argument("--iterations", type=int)
    p.add_argument("--spsa-preset", dest="spsa_preset")
    p.add_argument("--budget", type=int, help="Nelder-Mead function-call budget")
    p.add_argument("--workers", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--exact-mode", action="store_true", default=None, help="exact ansatz distributions, no sampling")
    p.add_argument("--progress-every", type=int, default=0, help="log every N iterations to stderr")


def load_config(args) -> ExperimentConfig:
    doc = {}
    if args.config:
        with open(args.config) as fh:
            doc = json.load(fh)
    for flag, fieldname in _OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            doc[fieldname] = value
    if getattr(args, "exact_mode", None):
        doc["exact_mode"] = True
    return ExperimentConfig.from_dict(doc).resolve()


def _sha256(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def cmd_gen_data(args) -> int:
    config = load_config(args)
    dataset = build_dataset(config)
    out = args.out or os.path.join(config.output_dir or ".", f"{config.name}_dataset.json")
    dataset.save(out)
    print(out, _sha256(out))
    return 0


def cmd_train(args) -> int:
    config = load_config(args)
    dataset = MeasurementDataset.load(args.dataset)
    if config.n_qubits != dataset.n_qubits:
        # the dataset decides the register size; the config target only matters for gen-data
        config = replace(config, target=dataset.provenance or config.target)
    target = target_from_provenance(dataset.provenance)
    if target is not None and target.n_qubits != dataset.n_qubits:
        target = None
    tc = config.train_config(args.trial)
    if tc.ansatz.n_qubits != dataset.n_qubits:
        tc = replace(tc, ansatz=replace(tc.ansatz, n_qubits=dataset.n_qubits))
    progress = None
    if args.progress_every:

        def progress(k, trace):
            if k % args.progress_every == 0:
                log.info("iter %d loss %.4f calls %d", k, trace.losses[-1], trace.calls[-1])

    report = train(dataset, tc, target=target, progress=progress)
    report.seeds["data"] = dataset.seed
    out = args.out or os.path.join(config.output_dir or ".", f"{config.name}_report.json")
    report.save(out)
    print(out)
    return 0


def cmd_batch(args) -> int:
    config = load_config(args)
    if not config.output_dir:
        config = replace(config, output_dir=f"{config.name}_batch")
    summary, _ = run_batch(config, args.progress_every)
    print(os.path.join(config.output_dir, "summary.json"))
    print(summary.csv_path)
    return 0


def cmd_compare(args) -> int:
    config = load_config(args)
    if not config.output_dir:
        config = replace(config, output_dir=f"{config.name}_comparison")
    optimizers = [o.strip() for o in args.optimizers.split(",") if o.strip()]
    result = compare_optimizers(config, optimizers, trials=args.compare_trials, progress_every=args.progress_every)
    print(result["path"])
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vqcqst", description="Variational pure-state tomography experiments")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="measure a target state and write a dataset JSON")
    _add_config_flags(p)
    p.add_argument("--out", help="dataset path (default <output-dir>/<name>_dataset.json)")
    p.set_defaults(func=cmd_gen_data)

    p = sub.add_parser("train", help="train the ansatz on a dataset file")
    p.add_argument("dataset")
    _add_config_flags(p)
    p.add_argument("--trial", type=int, default=0, help="trial index used for seed derivation")
    p.add_argument("--out", help="report path (default <output-dir>/<name>_report.json)")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("batch", help="run independent trials and summarize")
    _add_config_flags(p)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("compare-optimizers", help="run several optimizers on identical trials")
    _add_config_flags(p)
    p.add_argument("--optimizers", default="spsa,nelder-mead", help="comma-separated optimizer names")
    p.add_argument("--compare-trials", type=int, default=25)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if (args.verbose or getattr(args, "progress_every", 0)) else logging.WARNING,
                        stream=sys.stderr, format="%(asctime)s %(levelname)s %(message)s")
    try:
        return args.func(args)
    except ValidationError as exc:
        print("validation error:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  {problem}", file=sys.stderr)
        return 2
    except (ConfigurationError, UsageError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
