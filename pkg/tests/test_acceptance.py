"""Acceptance suite: full-size reconstruction experiments with pinned tolerances.

Each test records one PASS/FAIL line (see ``conftest.pytest_terminal_summary``) before
asserting, so the summary lists every criterion even when some fail.  Runtime is of
order two hours on one core; per-trial reports are written under the pytest temp dir.
"""

import numpy as np
import pytest

from acceptance_log import record
from vqcqst.ansatz import AnsatzSpec, evaluate, init_params
from vqcqst.experiments import ExperimentConfig, compare_optimizers, run_batch
from vqcqst.losses import LossConfig, mmd, symmetric_kl
from vqcqst.measurement import MeasurementDataset, OutcomeDistribution, enumerate_bases
from vqcqst.optimizers import finite_difference_gradient, parameter_shift_gradient
from vqcqst.statevector import new_zero_state
from vqcqst.targets import ghz_state, xxz_ground_state
from vqcqst.tomography import TrainConfig, TrainReport, acquire_dataset, train

pytestmark = pytest.mark.slow

SEED = 2024
TRIALS = 20

# Iteration budgets and SPSA gains.  3-qubit runs use the tuned gains; 6-qubit runs use
# gains calibrated at the initial point and a larger budget.
THREE_QUBIT = {"iterations": 1000}
SIX_QUBIT = {"iterations": 5000, "spsa": "calibrated"}


def batch(tmp_path_factory, name, trials=TRIALS, **kwargs):
    out = tmp_path_factory.mktemp(name)
    config = ExperimentConfig(name=name, seed=SEED, trials=trials, output_dir=str(out), **kwargs)
    summary, reports = run_batch(config)
    assert not summary.incomplete, f"{name}: incomplete trials {summary.incomplete}"
    return summary, reports


def fids(summary):
    return np.array(summary.fidelities)


def test_criterion_1_ghz3(tmp_path_factory):
    summary, reports = batch(tmp_path_factory, "ghz3", target="ghz:n=3", layers=10, **THREE_QUBIT)
    f = fids(summary)
    q75_infidelity = float(np.percentile(1 - f, 75))
    ok = np.median(f) >= 0.98 and q75_infidelity <= 0.02
    record("1", "GHZ3, 27 bases, 10 layers", ok,
           f"median {np.median(f):.4f} (>= 0.98); 75th-pct infidelity {q75_infidelity:.4f} (<= 0.02)")
    assert ok
    # outlier screening by loss: the worst-loss trial is not the best-fidelity trial
    losses = np.array([r["final_loss"] for r in summary.trials])
    assert np.argmax(losses) != np.argmax(f)


def test_criterion_2_xxz3(tmp_path_factory):
    summary, _ = batch(tmp_path_factory, "xxz3", target="xxz:L=3", layers=10, **THREE_QUBIT)
    f = fids(summary)
    ok = np.median(f) >= 0.98
    record("2", "XXZ3 ground state, 10 layers", ok, f"median {np.median(f):.4f} (>= 0.98)")
    assert ok


def test_criterion_3_ghz6(tmp_path_factory):
    summary, _ = batch(tmp_path_factory, "ghz6", target="ghz:n=6", layers=10, **SIX_QUBIT)
    f = fids(summary)
    losses = np.array([r["final_loss"] for r in summary.trials])
    outliers = np.flatnonzero(f < 0.95)
    top_loss = set(np.argsort(losses)[::-1][: len(outliers)])
    identified = set(outliers) == top_loss
    ok = np.median(f) >= 0.98 and len(outliers) <= 4 and identified
    record("3", "GHZ6, 729 bases, 10 layers", ok,
           f"median {np.median(f):.4f} (>= 0.98); outliers (F < 0.95) {sorted(outliers.tolist())} (<= 4); "
           f"outliers are the highest-loss trials: {identified}")
    assert ok


def test_criterion_4_xxz6(tmp_path_factory):
    summary, _ = batch(tmp_path_factory, "xxz6", target="xxz:L=6", layers=16, **SIX_QUBIT)
    f = fids(summary)
    ok = np.median(f) >= 0.90
    record("4", "XXZ6 ground state, 16 layers", ok, f"median {np.median(f):.4f} (>= 0.90)")
    assert ok


@pytest.mark.parametrize(
    "label, target, k, layers, threshold, settings",
    [
        ("GHZ3, 15 random bases", "ghz:n=3", 15, 10, 0.97, THREE_QUBIT),
        ("XXZ3, 15 random bases", "xxz:L=3", 15, 10, 0.97, THREE_QUBIT),
        ("GHZ6, 200 random bases", "ghz:n=6", 200, 10, 0.98, SIX_QUBIT),
        ("XXZ6, 200 random bases", "xxz:L=6", 200, 16, 0.88, SIX_QUBIT),
    ],
    ids=["ghz3-15", "xxz3-15", "ghz6-200", "xxz6-200"],
)
def test_criterion_5_incomplete_bases(tmp_path_factory, label, target, k, layers, threshold, settings):
    summary, _ = batch(tmp_path_factory, f"subset-{target}-{k}", target=target, bases=f"random:{k}",
                       layers=layers, **settings)
    f = fids(summary)
    ok = np.median(f) >= threshold
    record("5", label, ok, f"median {np.median(f):.4f} (>= {threshold})")
    assert ok


def test_criterion_6_random_circuits_3q(tmp_path_factory):
    medians = []
    for seed in range(1, 6):
        summary, _ = batch(tmp_path_factory, f"rc3-{seed}", trials=10,
                           target=f"random-circuit:n=3,layers=5,seed={seed}", layers=10, **THREE_QUBIT)
        medians.append(float(np.median(fids(summary))))
    ok = min(medians) >= 0.9
    record("6", "random circuits, 5 x 3-qubit targets x 10 trials", ok,
           f"per-target medians {[round(m, 4) for m in medians]} (each >= 0.9)")
    assert ok


def test_criterion_6_random_circuits_6q(tmp_path_factory):
    values = []
    for seed in range(1, 6):
        summary, _ = batch(tmp_path_factory, f"rc6-{seed}", trials=3,
                           target=f"random-circuit:n=6,layers=5,seed={seed}", layers=12, **SIX_QUBIT)
        values.extend(summary.fidelities)
    typical = float(np.median(values))
    ok = typical >= 0.85
    record("6", "random circuits, 5 x 6-qubit targets x 3 trials, 12 layers (class-level)", ok,
           f"median over all runs {typical:.4f} (>= 0.85); per-run {[round(v, 3) for v in values]}")
    assert ok


@pytest.mark.parametrize(
    "label, target, layers, threshold, settings",
    [
        ("MMD sigma=0.1, GHZ3", "ghz:n=3", 10, 0.97, THREE_QUBIT),
        ("MMD sigma=0.1, XXZ6", "xxz:L=6", 16, 0.88, SIX_QUBIT),
    ],
    ids=["ghz3", "xxz6"],
)
def test_criterion_7_mmd(tmp_path_factory, label, target, layers, threshold, settings):
    summary, _ = batch(tmp_path_factory, f"mmd-{target}", target=target, layers=layers, loss="mmd", sigma=0.1,
                       **settings)
    f = fids(summary)
    ok = np.median(f) >= threshold
    record("7", label, ok, f"median {np.median(f):.4f} (>= {threshold})")
    assert ok


def test_criterion_8_optimizer_comparison(tmp_path_factory):
    out = tmp_path_factory.mktemp("compare")
    config = ExperimentConfig(name="compare", target="ghz:n=3", layers=10, seed=SEED, output_dir=str(out),
                              **THREE_QUBIT)
    result = compare_optimizers(config, ["spsa", "nelder-mead", "fd-adam", "ps-adam"], trials=25)
    blocks = result["optimizers"]
    spsa, nm = blocks["spsa"], blocks["nelder-mead"]
    two_per_iteration = all(t["function_calls"] == 2 * t["iterations"] for t in spsa["trials"])
    per_iteration = {name: b["median_calls_per_progress"] for name, b in blocks.items()}
    gradient_most = min(per_iteration["fd-adam"], per_iteration["ps-adam"]) > max(
        per_iteration["spsa"], per_iteration["nelder-mead"]
    )
    ok = (spsa["median_fidelity"] >= 0.9 and nm["median_fidelity"] < 0.9 and two_per_iteration
          and len(spsa["trials"]) == 25 and gradient_most)
    record("8", "optimizer comparison, GHZ3, 25 trials", ok,
           f"SPSA median {spsa['median_fidelity']:.4f} (>= 0.9); Nelder-Mead median {nm['median_fidelity']:.4f} "
           f"(< 0.9); SPSA 2 calls/iteration: {two_per_iteration}; calls per iteration "
           f"{ {k: round(v, 2) for k, v in per_iteration.items()} } (gradient methods highest: {gradient_most}); "
           f"median fidelity fd-adam {blocks['fd-adam']['median_fidelity']:.4f}, "
           f"ps-adam {blocks['ps-adam']['median_fidelity']:.4f}")
    assert ok


def test_criterion_9_property_suites(tmp_path):
    checks = {}
    rng = np.random.default_rng(SEED)

    # norm conservation under the ansatz and under measurement sampling-free evolution
    worst = 0.0
    for n, layers in [(1, 3), (3, 10), (6, 16)]:
        spec = AnsatzSpec(n, layers)
        for _ in range(5):
            worst = max(worst, abs(evaluate(spec, init_params(spec, rng)).norm() - 1))
    checks["norm conservation <= 1e-10"] = worst <= 1e-10

    # parameter shift vs finite differences on <Z x Z>
    spec = AnsatzSpec(2, 4)
    parity = np.array([1, -1, -1, 1])

    def zz(p):
        return float(np.sum(parity * np.abs(evaluate(spec, p).amplitudes) ** 2))

    err = max(
        np.max(np.abs(parameter_shift_gradient(zz, p) - finite_difference_gradient(zz, p, 1e-5)))
        for p in (init_params(spec, rng) for _ in range(5))
    )
    checks["shift rule vs FD <= 1e-6"] = err <= 1e-6

    # XXZ L=2 ground state against a dense 4x4 eigensolve of the hand-built matrix
    energy, state = xxz_ground_state(2)
    hand = np.array([[3, 0, 0, 0], [0, -1, 2, 0], [0, 2, -1, 0], [0, 0, 0, -1]], dtype=float)
    w, v = np.linalg.eigh(hand)
    singlet = np.array([0, 1, -1, 0]) / np.sqrt(2)
    checks["XXZ L=2 energy -3, singlet"] = (
        abs(energy + 3) < 1e-12 and abs(w[0] + 3) < 1e-12 and abs(abs(np.vdot(singlet, state.amplitudes)) - 1) < 1e-12
    )

    # KL self-divergence and MMD bounds on random distributions
    eps = 1e-3
    kl_ok, mmd_ok = True, True
    for _ in range(20):
        p = OutcomeDistribution(3, rng.dirichlet(np.ones(8)))
        q = OutcomeDistribution(3, rng.dirichlet(np.ones(8)))
        support = int(np.count_nonzero(p.probs))
        kl_ok &= abs(symmetric_kl(p, p, eps)) <= 2 * eps * support
        mmd_ok &= mmd(p, q, 0.1) >= -1e-12 and abs(mmd(p, p, 0.1)) <= 1e-12
    checks["KL self-divergence <= 2 eps S"] = kl_ok
    checks["MMD >= 0 and MMD(P,P) <= 1e-12"] = mmd_ok

    # JSON round trips
    data = acquire_dataset(ghz_state(3), enumerate_bases(3), 100, SEED, provenance="ghz:n=3")
    data.save(tmp_path / "d.json")
    cfg = TrainConfig(AnsatzSpec(3, 10), max_iterations=50, seed=SEED)
    report = train(data, cfg, target=ghz_state(3))
    report.save(tmp_path / "r.json")
    checks["dataset/report JSON round trip"] = (
        MeasurementDataset.load(tmp_path / "d.json") == data
        and TrainReport.load(tmp_path / "r.json").to_dict() == report.to_dict()
    )

    # bit-identical reruns
    again = train(acquire_dataset(ghz_state(3), enumerate_bases(3), 100, SEED, provenance="ghz:n=3"), cfg,
                  target=ghz_state(3))
    a, b = report.to_dict(), again.to_dict()
    a.pop("wall_clock_s"), b.pop("wall_clock_s")
    checks["bit-identical reruns"] = a == b and new_zero_state(3).amplitudes[0] == 1

    ok = all(checks.values())
    record("9", "property suites", ok, "; ".join(f"{k}: {'ok' if v else 'FAILED'}" for k, v in checks.items()))
    assert ok
