"""Distribution discrepancies between target histograms and ansatz outcomes.

All sums run over every bitstring of a basis, with ``0 * log(0 / x) = 0``.  Logs are natural.
The array-level helpers (``*_rows``) work on stacked ``(n_bases, 2**n)`` matrices and are what
training calls; the :class:`OutcomeDistribution` functions wrap them for single bases.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import ConfigurationError, UsageError
from .measurement import MeasurementDataset, OutcomeDistribution, as_basis

SYMMETRIC_KL = "symmetric_kl"
MMD = "mmd"
LOSS_KINDS = (SYMMETRIC_KL, MMD)


@dataclass(frozen=True)
class LossConfig:
    kind: str = SYMMETRIC_KL
    epsilon: float = 1e-3
    sigma: float = 0.1

    def __post_init__(self):
        if self.kind not in LOSS_KINDS:
            raise ConfigurationError(f"unknown loss kind {self.kind!r}; expected one of {LOSS_KINDS}")
        if self.kind == SYMMETRIC_KL and not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be > 0, got {self.epsilon}")
        if self.kind == MMD and not self.sigma > 0:
            raise ConfigurationError(f"sigma must be > 0, got {self.sigma}")


def kl_rows(p1: np.ndarray, p2: np.ndarray, epsilon: float) -> np.ndarray:
    """sum_s p1 log(p1 / (p2 + eps)) along the last axis."""
    ratio = np.divide(p1, p2 + epsilon, out=np.ones_like(p1, dtype=float), where=p1 > 0)
    return np.sum(p1 * np.log(ratio), axis=-1)


def symmetric_kl_rows(p1: np.ndarray, p2: np.ndarray, epsilon: float) -> np.ndarray:
    return kl_rows(p1, p2, epsilon) + kl_rows(p2, p1, epsilon)


@lru_cache(maxsize=32)
def gaussian_kernel(n_qubits: int, sigma: float) -> np.ndarray:
    """K[x, y] = exp(-|x - y|^2 / (2 sigma)) on 0/1 bit vectors; |x - y|^2 is the Hamming distance."""
    idx = np.arange(2**n_qubits)
    bits = (idx[:, None] >> np.arange(n_qubits)) & 1
    hamming = (bits[:, None, :] != bits[None, :, :]).sum(axis=-1)
    kernel = np.exp(-hamming / (2 * sigma))
    kernel.setflags(write=False)
    return kernel


def mmd_rows(p: np.ndarray, q: np.ndarray, sigma: float) -> np.ndarray:
    """E_pp[K] - 2 E_pq[K] + E_qq[K] row by row, written as (p - q)^T K (p - q)."""
    n = int(round(np.log2(p.shape[-1])))
    diff = p - q
    return np.einsum("...i,...i->...", diff @ gaussian_kernel(n, float(sigma)), diff)


def per_basis_loss(target: np.ndarray, model: np.ndarray, config: LossConfig) -> np.ndarray:
    if config.kind == SYMMETRIC_KL:
        return symmetric_kl_rows(target, model, config.epsilon)
    return mmd_rows(target, model, config.sigma)


def loss_gradient_rows(target: np.ndarray, model: np.ndarray, config: LossConfig) -> np.ndarray:
    """Partial derivative of the per-basis loss with respect to each model probability."""
    if config.kind == MMD:
        n = int(round(np.log2(model.shape[-1])))
        return 2 * (model - target) @ gaussian_kernel(n, float(config.sigma))
    eps = config.epsilon
    grad = -target / (model + eps)
    # d/dp [p log(p / (t + eps))] = log(p / (t + eps)) + 1; its p -> 0 limit is cancelled by dp = 0
    positive = model > 0
    grad[positive] += np.log(model[positive] / (target[positive] + eps)) + 1
    return grad


def _check_pair(P1: OutcomeDistribution, P2: OutcomeDistribution) -> None:
    if P1.n_qubits != P2.n_qubits:
        raise UsageError(f"distributions over {P1.n_qubits} and {P2.n_qubits} qubits")


def kl_divergence(P1: OutcomeDistribution, P2: OutcomeDistribution, epsilon: float) -> float:
    if not epsilon > 0:
        raise ConfigurationError(f"epsilon must be > 0, got {epsilon}")
    _check_pair(P1, P2)
    return float(kl_rows(P1.probs, P2.probs, epsilon))


def symmetric_kl(P1: OutcomeDistribution, P2: OutcomeDistribution, epsilon: float) -> float:
    return kl_divergence(P1, P2, epsilon) + kl_divergence(P2, P1, epsilon)


def mmd(P: OutcomeDistribution, Q: OutcomeDistribution, sigma: float) -> float:
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be > 0, got {sigma}")
    _check_pair(P, Q)
    return float(mmd_rows(P.probs, Q.probs, sigma))


def total_loss(
    target: MeasurementDataset, ansatz_dists: Mapping[object, OutcomeDistribution], config: LossConfig
) -> float:
    """Mean per-basis loss between the dataset's empirical distributions and ``ansatz_dists``."""
    by_axes = {as_basis(b).axes: d for b, d in ansatz_dists.items()}
    wanted = {b.axes for b in target.bases}
    if set(by_axes) != wanted:
        missing = sorted(wanted - set(by_axes))
        extra = sorted(set(by_axes) - wanted)
        raise UsageError(f"basis mismatch: missing {missing}, unexpected {extra}")
    emp = target.empirical_matrix()
    model = np.stack([by_axes[b.axes].probs for b in target.bases])
    return float(np.mean(per_basis_loss(emp, model, config)))
