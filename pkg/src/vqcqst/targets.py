"""Target states: GHZ, XXZ spin-chain ground states, and seeded random circuits."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Tuple

import numpy as np

from .errors import ConfigurationError, UsageError
from .statevector import (
    GATE_KINDS,
    MAX_QUBITS,
    ROTATION_KINDS,
    SINGLE_QUBIT_KINDS,
    TWO_QUBIT_KINDS,
    Circuit,
    GateOp,
    Statevector,
    apply_circuit,
    new_zero_state,
)


def ghz_state(n_qubits: int) -> Statevector:
    if not 2 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"GHZ needs 2..{MAX_QUBITS} qubits, got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = amps[-1] = 1 / np.sqrt(2)
    return Statevector(n_qubits, amps)


@dataclass(frozen=True)
class XxzParams:
    """Open XXZ chain with Pauli-matrix couplings (no factor 1/2 per spin)."""

    L: int
    J: float = 1.0
    Delta: float = 1.0
    h: float = 1.0

    def __post_init__(self):
        if not 2 <= self.L <= MAX_QUBITS:
            raise ConfigurationError(f"L must be in [2, {MAX_QUBITS}], got {self.L}")


def xxz_hamiltonian(p: XxzParams) -> np.ndarray:
    """Dense ``2**L`` matrix of sum_l [J(XX + YY) + Delta ZZ] + h sum_l Z.

    Built directly in the computational basis: ZZ and Z are diagonal (bit 0 -> +1),
    and XX + YY maps ``..01..`` <-> ``..10..`` on neighbouring sites with amplitude 2J.
    """
    L = p.L
    dim = 2**L
    idx = np.arange(dim)
    z = 1 - 2 * ((idx[:, None] >> (L - 1 - np.arange(L))) & 1)
    H = np.zeros((dim, dim))
    H[idx, idx] = p.Delta * (z[:, :-1] * z[:, 1:]).sum(axis=1) + p.h * z.sum(axis=1)
    for l in range(L - 1):
        mask = (1 << (L - 1 - l)) | (1 << (L - 2 - l))
        differ = z[:, l] != z[:, l + 1]
        src = idx[differ]
        H[src ^ mask, src] += 2 * p.J
    return H


def ground_state(H: np.ndarray) -> Tuple[float, Statevector]:
    """Lowest eigenpair of a dense Hermitian matrix.

    The returned vector's phase is fixed so that its largest-magnitude component
    (lowest index on ties) is real and positive; repeated calls are identical.
    """
    H = np.asarray(H)
    dim = H.shape[0]
    if H.ndim != 2 or H.shape != (dim, dim) or dim & (dim - 1) or dim < 2:
        raise UsageError(f"expected a square matrix with power-of-two dimension, got shape {H.shape}")
    asym = np.max(np.abs(H - H.conj().T))
    if asym > 1e-10:
        raise UsageError(f"matrix is not Hermitian (max asymmetry {asym:.3g})")
    w, v = np.linalg.eigh(H)
    vec = v[:, 0].astype(complex)
    mags = np.abs(vec)
    pivot = int(np.flatnonzero(mags >= mags.max() - 1e-12)[0])
    vec *= np.exp(-1j * np.angle(vec[pivot]))
    vec /= np.linalg.norm(vec)
    return float(w[0]), Statevector.from_amplitudes(vec)


def xxz_ground_state(L: int, J: float = 1.0, Delta: float = 1.0, h: float = 1.0) -> Tuple[float, Statevector]:
    return ground_state(xxz_hamiltonian(XxzParams(L, J, Delta, h)))


@dataclass(frozen=True)
class RandomCircuitSpec:
    n_qubits: int
    n_layers: int
    seed: int
    gate_pool: Tuple[str, ...] = field(default=GATE_KINDS)

    def __post_init__(self):
        object.__setattr__(self, "gate_pool", tuple(self.gate_pool))
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be >= 1, got {self.n_layers}")
        if not self.gate_pool:
            raise ConfigurationError("gate_pool is empty")
        bad = [k for k in self.gate_pool if k not in GATE_KINDS]
        if bad:
            raise ConfigurationError(f"unknown gate kinds in pool: {bad}")


def random_circuit(spec: RandomCircuitSpec) -> Circuit:
    """Layered random circuit.

    Each layer shuffles the qubits and walks through them, opening a two-qubit slot
    (next two qubits) with probability 1/2 when possible, otherwise a one-qubit slot.
    A qubit left alone when the pool has no single-qubit kinds stays idle that layer.
    """
    rng = np.random.default_rng(spec.seed)
    singles = [k for k in spec.gate_pool if k in SINGLE_QUBIT_KINDS]
    doubles = [k for k in spec.gate_pool if k in TWO_QUBIT_KINDS]
    circuit = Circuit(spec.n_qubits)
    for _ in range(spec.n_layers):
        order = [int(q) for q in rng.permutation(spec.n_qubits)]
        pos = 0
        while pos < len(order):
            remaining = len(order) - pos
            pair = doubles and remaining >= 2 and (not singles or rng.random() < 0.5)
            if pair:
                kind = doubles[rng.integers(len(doubles))]
                circuit.append(GateOp(kind, (order[pos], order[pos + 1])))
                pos += 2
                continue
            if singles:
                kind = singles[rng.integers(len(singles))]
                if kind in ROTATION_KINDS:
                    circuit.append(GateOp(kind, (order[pos],), angle=float(rng.uniform(0, 2 * np.pi))))
                else:
                    circuit.append(GateOp(kind, (order[pos],)))
            pos += 1
    return circuit


def random_circuit_state(spec: RandomCircuitSpec) -> Statevector:
    return apply_circuit(new_zero_state(spec.n_qubits), random_circuit(spec))
