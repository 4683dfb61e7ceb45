"""Optimizers over real parameter vectors.

Every minimizer returns an :class:`OptimizerTrace`.  Function calls are counted by
wrapping the objective in :class:`CountingObjective`, so the count reflects real
evaluations regardless of which helper made them.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .errors import ConfigurationError, OptimizerAbort, UsageError

Objective = Callable[[np.ndarray], float]


class CountingObjective:
    """Wraps a callable and counts how many times it has been evaluated."""

    def __init__(self, fn: Callable):
        self.fn = fn
        self.calls = 0

    def __call__(self, params):
        self.calls += 1
        return self.fn(params)


def _counted(objective):
    # objectives that keep their own ``calls`` counter are used as-is
    return objective if hasattr(objective, "calls") else CountingObjective(objective)


@dataclass
class OptimizerTrace:
    iterations: List[int] = field(default_factory=list)
    losses: List[float] = field(default_factory=list)
    calls: List[int] = field(default_factory=list)
    final_params: Optional[np.ndarray] = None
    info: dict = field(default_factory=dict)

    def record(self, iteration: int, loss: float, calls: int) -> None:
        self.iterations.append(int(iteration))
        self.losses.append(float(loss))
        self.calls.append(int(calls))

    def __len__(self) -> int:
        return len(self.iterations)

    @property
    def function_calls(self) -> int:
        return self.calls[-1] if self.calls else 0


@dataclass
class SpsaConfig:
    """Gains a_k = a / (A + k)^alpha and c_k = c / k^gamma, k = 1, 2, ...

    With ``calibrate=True`` the given ``a`` is ignored and replaced, before the first
    iteration, by ``target_magnitude / mean |f(x + c D) - f(x - c D)| / (2c)`` over
    ``calibration_steps`` random directions at the initial point.  The first update then
    moves each parameter by about ``target_magnitude``.  Calibration costs
    ``2 * calibration_steps`` calls, made before iteration 1.
    """

    a: float
    A: float
    alpha: float
    c: float
    gamma: float
    max_iterations: int = 1000
    seed: int = 0
    calibrate: bool = False
    target_magnitude: float = 2 * np.pi / 10
    calibration_steps: int = 25

    def __post_init__(self):
        if not self.a > 0 or not self.c > 0:
            raise ConfigurationError(f"a and c must be positive, got a={self.a}, c={self.c}")
        if self.A < 0:
            raise ConfigurationError(f"A must be >= 0, got {self.A}")
        if not (0 < self.alpha <= 1 and 0 < self.gamma <= 1):
            raise ConfigurationError(f"alpha and gamma must lie in (0, 1], got {self.alpha}, {self.gamma}")
        if self.max_iterations < 0:
            raise ConfigurationError(f"max_iterations must be >= 0, got {self.max_iterations}")
        if self.calibrate and not (self.target_magnitude > 0 and self.calibration_steps >= 1):
            raise ConfigurationError("calibration needs target_magnitude > 0 and calibration_steps >= 1")

    @classmethod
    def tuned_3q(cls, max_iterations: int = 1000, seed: int = 0) -> "SpsaConfig":
        """Gains tuned for the 3-qubit reconstructions."""
        return cls(a=0.4739, A=0.3186, alpha=0.6374, c=0.1258, gamma=0.06059, max_iterations=max_iterations, seed=seed)

    @classmethod
    def tuned_3q_mmd(cls, max_iterations: int = 1000, seed: int = 0) -> "SpsaConfig":
        """The 3-qubit gains with ``a`` scaled by 10.

        MMD values at small bandwidth are roughly ten times smaller than symmetric KL
        values, so the same step schedule barely moves; this is equivalent to
        optimizing ten times the MMD loss.
        """
        base = cls.tuned_3q(max_iterations, seed)
        return replace(base, a=10 * base.a)

    @classmethod
    def calibrated(cls, max_iterations: int = 1000, seed: int = 0) -> "SpsaConfig":
        """Spall's exponents with c = 0.2, A = 0 and ``a`` calibrated at the initial point."""
        return cls(a=1.0, A=0.0, alpha=0.602, c=0.2, gamma=0.101, max_iterations=max_iterations, seed=seed,
                   calibrate=True)

    @classmethod
    def standard(cls, max_iterations: int = 1000, seed: int = 0) -> "SpsaConfig":
        """Spall's canonical exponents with small fixed gains."""
        return cls(a=0.2, A=0.0, alpha=0.602, c=0.1, gamma=0.101, max_iterations=max_iterations, seed=seed)

    def learning_rate(self, k: int) -> float:
        return self.a / (self.A + k) ** self.alpha

    def perturbation(self, k: int) -> float:
        return self.c / k**self.gamma

    def to_dict(self) -> dict:
        return asdict(self)


SPSA_PRESETS = {
    "tuned-3q": SpsaConfig.tuned_3q,
    "tuned-3q-mmd": SpsaConfig.tuned_3q_mmd,
    "calibrated": SpsaConfig.calibrated,
    "standard": SpsaConfig.standard,
}


def spsa_gradient(objective: Objective, params: np.ndarray, ck: float, delta: np.ndarray):
    """One simultaneous-perturbation estimate; returns ``(g, f_plus, f_minus)``."""
    f_plus = objective(params + ck * delta)
    f_minus = objective(params - ck * delta)
    g = (f_plus - f_minus) / (2 * ck) / delta
    return g, f_plus, f_minus


def calibrate_gain(objective: Objective, params, config: SpsaConfig, rng: np.random.Generator) -> float:
    """Choose ``a`` so the first SPSA step has per-component size ``target_magnitude``."""
    params = np.asarray(params, dtype=float)
    magnitudes = []
    for _ in range(config.calibration_steps):
        delta = rng.choice((-1.0, 1.0), size=params.size)
        diff = objective(params + config.c * delta) - objective(params - config.c * delta)
        magnitudes.append(abs(diff) / (2 * config.c))
    mean = float(np.mean(magnitudes))
    if not np.isfinite(mean) or mean < 1e-10:
        # flat or broken neighbourhood: fall back to a unit-gradient assumption
        return config.target_magnitude * (config.A + 1) ** config.alpha
    return config.target_magnitude / mean * (config.A + 1) ** config.alpha


def spsa_minimize(objective: Objective, initial, config: SpsaConfig, callback=None) -> OptimizerTrace:
    """Run SPSA for ``config.max_iterations`` steps with Rademacher perturbations.

    Exactly two objective calls per iteration (plus the calibration calls up front when
    ``config.calibrate`` is set).  The recorded loss for iteration k is the mean of its
    two perturbed evaluations, so tracing costs no extra calls.
    """
    f = _counted(objective)
    rng = np.random.default_rng(config.seed)
    theta = np.array(initial, dtype=float)
    trace = OptimizerTrace()
    if config.calibrate:
        config = replace(config, a=calibrate_gain(f, theta, config, rng), calibrate=False)
        trace.info["calibrated_a"] = config.a
        trace.info["calibration_calls"] = f.calls
    last_finite = theta
    for k in range(1, config.max_iterations + 1):
        delta = rng.choice((-1.0, 1.0), size=theta.size)
        g, f_plus, f_minus = spsa_gradient(f, theta, config.perturbation(k), delta)
        if not (np.isfinite(f_plus) and np.isfinite(f_minus)):
            trace.final_params = last_finite
            raise OptimizerAbort(f"non-finite objective at SPSA iteration {k}: {f_plus}, {f_minus}", trace)
        theta = theta - config.learning_rate(k) * g
        if np.all(np.isfinite(theta)):
            last_finite = theta
        trace.record(k, 0.5 * (f_plus + f_minus), f.calls)
        if callback is not None:
            callback(k, trace)
    trace.final_params = theta
    return trace


def finite_difference_gradient(objective: Objective, params, delta: float = 1e-5) -> np.ndarray:
    """Central differences; 2 * dim calls."""
    if not delta > 0:
        raise ConfigurationError(f"delta must be > 0, got {delta}")
    params = np.asarray(params, dtype=float)
    grad = np.empty(params.size)
    for i in range(params.size):
        step = np.zeros(params.size)
        step[i] = delta
        grad[i] = (objective(params + step) - objective(params - step)) / (2 * delta)
    return grad


def parameter_shift_gradient(objective: Callable, params, check: bool = False, check_tol: float = 1e-6):
    """Shift-rule derivative 1/2 [f(theta + pi/2 e_i) - f(theta - pi/2 e_i)].

    Exact when ``objective`` is an expectation of a circuit whose parameters each enter a
    single ``exp(-i theta P / 2)`` gate.  ``objective`` may return an array (for example a
    stack of outcome probabilities); the result then has shape ``(dim, *value_shape)``.

    With ``check=True`` the result is compared against central finite differences and a
    :class:`UsageError` is raised when they disagree, which flags objectives the rule does
    not apply to.
    """
    params = np.asarray(params, dtype=float)
    rows = []
    for i in range(params.size):
        shift = np.zeros(params.size)
        shift[i] = np.pi / 2
        rows.append(0.5 * (np.asarray(objective(params + shift)) - np.asarray(objective(params - shift))))
    grad = np.stack(rows)
    if check:
        fd = np.stack(
            [
                (np.asarray(objective(params + d)) - np.asarray(objective(params - d))) / 2e-5
                for d in np.eye(params.size) * 1e-5
            ]
        )
        err = float(np.max(np.abs(fd - grad)))
        if err > check_tol:
            raise UsageError(f"parameter-shift and finite-difference gradients differ by {err:.3g}")
    return grad


@dataclass
class AdamConfig:
    learning_rate: float = 0.05
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ConfigurationError(f"learning rate must be > 0, got {self.learning_rate}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigurationError("beta1 and beta2 must lie in (0, 1)")
        if not self.eps > 0:
            raise ConfigurationError("eps must be > 0")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros(cls, dim: int) -> "AdamState":
        return cls(np.zeros(dim), np.zeros(dim), 0)


def adam_step(params, state: AdamState, gradient, config: AdamConfig):
    """One bias-corrected Adam update; returns ``(new_params, new_state)``."""
    gradient = np.asarray(gradient, dtype=float)
    if gradient.shape != state.m.shape:
        raise UsageError(f"gradient shape {gradient.shape} does not match state {state.m.shape}")
    t = state.t + 1
    m = config.beta1 * state.m + (1 - config.beta1) * gradient
    v = config.beta2 * state.v + (1 - config.beta2) * gradient**2
    m_hat = m / (1 - config.beta1**t)
    v_hat = v / (1 - config.beta2**t)
    new = np.asarray(params, dtype=float) - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.eps)
    return new, AdamState(m, v, t)


def adam_minimize(
    objective: Objective,
    gradient: Callable[[np.ndarray], np.ndarray],
    initial,
    config: AdamConfig,
    max_iterations: int,
    callback=None,
) -> OptimizerTrace:
    """Gradient descent with Adam.

    ``gradient`` should evaluate through ``objective`` (or share its ``calls`` counter)
    so the recorded call counts include gradient evaluations.
    The loss recorded per iteration is evaluated at the pre-update point and counted.
    """
    f = _counted(objective)
    theta = np.array(initial, dtype=float)
    state = AdamState.zeros(theta.size)
    trace = OptimizerTrace()
    last_finite = theta
    for k in range(1, max_iterations + 1):
        loss = f(theta)
        if not np.isfinite(loss):
            trace.final_params = last_finite
            raise OptimizerAbort(f"non-finite objective at Adam iteration {k}: {loss}", trace)
        last_finite = theta
        theta, state = adam_step(theta, state, gradient(theta), config)
        trace.record(k, loss, f.calls)
        if callback is not None:
            callback(k, trace)
    trace.final_params = theta
    return trace


def nelder_mead_minimize(
    objective: Objective, initial, budget: int, initial_step: float = 0.1, callback=None
) -> OptimizerTrace:
    """Simplex search with reflection 1, expansion 2, contraction 0.5, shrink 0.5.

    Runs until the function-call budget is spent; there is no convergence-based stop.
    One trace record per simplex iteration, holding the best vertex value so far.
    """
    x0 = np.array(initial, dtype=float)
    dim = x0.size
    if budget < dim + 1:
        raise ConfigurationError(f"budget {budget} is below dim + 1 = {dim + 1}")
    f = _counted(objective)
    trace = OptimizerTrace()

    def call(x):
        value = f(x)
        if not np.isfinite(value):
            trace.final_params = simplex[int(np.argmin(values))] if len(values) else x0
            raise OptimizerAbort(f"non-finite objective after {f.calls} Nelder-Mead calls: {value}", trace)
        return float(value)

    simplex = [x0]
    values: list = []
    values.append(call(x0))
    for i in range(dim):
        x = x0.copy()
        x[i] += initial_step
        simplex.append(x)
        values.append(call(x))
    simplex = np.array(simplex)
    values = np.array(values)

    iteration = 0
    while f.calls < budget:
        iteration += 1
        order = np.argsort(values, kind="stable")
        simplex, values = simplex[order], values[order]
        centroid = simplex[:-1].mean(axis=0)
        worst = simplex[-1]

        xr = centroid + (centroid - worst)
        fr = call(xr)
        if fr < values[0]:
            if f.calls < budget:
                xe = centroid + 2.0 * (centroid - worst)
                fe = call(xe)
                simplex[-1], values[-1] = (xe, fe) if fe < fr else (xr, fr)
            else:
                simplex[-1], values[-1] = xr, fr
        elif fr < values[-2]:
            simplex[-1], values[-1] = xr, fr
        elif f.calls < budget:
            if fr < values[-1]:
                xc = centroid + 0.5 * (xr - centroid)
                fc = call(xc)
                accept = fc <= fr
            else:
                xc = centroid + 0.5 * (worst - centroid)
                fc = call(xc)
                accept = fc < values[-1]
            if accept:
                simplex[-1], values[-1] = xc, fc
            else:
                for j in range(1, dim + 1):
                    if f.calls >= budget:
                        break
                    simplex[j] = simplex[0] + 0.5 * (simplex[j] - simplex[0])
                    values[j] = call(simplex[j])
        best = int(np.argmin(values))
        trace.record(iteration, values[best], f.calls)
        if callback is not None:
            callback(iteration, trace)
    trace.final_params = simplex[int(np.argmin(values))].copy()
    return trace
