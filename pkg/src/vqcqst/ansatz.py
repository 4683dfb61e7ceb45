"""Alternating Rx/Ry layered ansatz with linear CNOT entanglers.

Layer ``l`` (1-based) applies Rx on every qubit when ``l`` is odd and Ry when it
is even.  Every rotation layer except the last is followed by the chain
``CNOT(0,1), CNOT(1,2), ..., CNOT(n-2,n-1)``.  Parameters are laid out
layer-major then qubit-major, so slot ``l * n + q`` drives qubit ``q`` in layer
``l`` (0-based).

The entangler topology is confined to :func:`build` and :func:`_cnot_chain_permutation`;
changing it means editing only those two.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import ConfigurationError, UsageError
from .statevector import MAX_QUBITS, Circuit, GateOp, Statevector, apply_circuit, new_zero_state


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    n_layers: int

    def __post_init__(self):
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        if self.n_layers < 1:
            raise ConfigurationError(f"n_layers must be >= 1, got {self.n_layers}")

    @property
    def parameter_count(self) -> int:
        return self.n_qubits * self.n_layers


def layer_kind(layer: int) -> str:
    """Rotation kind of 0-based layer index ``layer``."""
    return "Rx" if layer % 2 == 0 else "Ry"


def build(spec: AnsatzSpec) -> Circuit:
    n = spec.n_qubits
    circuit = Circuit(n)
    for layer in range(spec.n_layers):
        kind = layer_kind(layer)
        for q in range(n):
            circuit.append(GateOp(kind, (q,), param=layer * n + q))
        if layer < spec.n_layers - 1:
            for q in range(n - 1):
                circuit.append(GateOp("CNOT", (q, q + 1)))
    return circuit


def init_params(spec: AnsatzSpec, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw from [-pi, pi) for every slot."""
    return rng.uniform(-np.pi, np.pi, size=spec.parameter_count)


@lru_cache(maxsize=None)
def _cnot_chain_permutation(n: int) -> np.ndarray:
    # psi_after = psi_before[perm]; the chain maps basis state b to b' with
    # b'_{q+1} = b_{q+1} xor b'_q, applied for q = 0..n-2 in order.
    idx = np.arange(2**n)
    weights = 1 << (n - 1 - np.arange(n))
    bits = (idx[:, None] >> (n - 1 - np.arange(n))) & 1
    for q in range(n - 1):
        bits[:, q + 1] ^= bits[:, q]
    image = bits @ weights
    perm = np.empty_like(image)
    perm[image] = idx
    perm.setflags(write=False)
    return perm


def _rotation_stack(kind: str, angles: np.ndarray) -> np.ndarray:
    c = np.cos(angles / 2)
    s = np.sin(angles / 2)
    mats = np.empty((angles.size, 2, 2), dtype=complex)
    mats[:, 0, 0] = c
    mats[:, 1, 1] = c
    if kind == "Rx":
        mats[:, 0, 1] = -1j * s
        mats[:, 1, 0] = -1j * s
    else:
        mats[:, 0, 1] = -s
        mats[:, 1, 0] = s
    return mats


def evaluate_amplitudes(spec: AnsatzSpec, params) -> np.ndarray:
    """Amplitude vector of the ansatz state; the hot path used during training."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.parameter_count,):
        raise UsageError(f"expected {spec.parameter_count} parameters, got shape {params.shape}")
    n = spec.n_qubits
    perm = _cnot_chain_permutation(n)
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1.0
    angles = params.reshape(spec.n_layers, n)
    for layer in range(spec.n_layers):
        mats = _rotation_stack(layer_kind(layer), angles[layer])
        # contracting axis 0 each time cycles the qubit axes back into order after n steps
        tensor = psi.reshape((2,) * n)
        for q in range(n):
            tensor = np.tensordot(tensor, mats[q], axes=([0], [1]))
        psi = tensor.reshape(-1)
        if layer < spec.n_layers - 1:
            psi = psi[perm]
    return psi


def evaluate(spec: AnsatzSpec, params) -> Statevector:
    return Statevector(spec.n_qubits, evaluate_amplitudes(spec, params))


def evaluate_reference(spec: AnsatzSpec, params) -> Statevector:
    """Gate-by-gate evaluation through the generic simulator (slow, used as a cross-check)."""
    params = np.asarray(params, dtype=float)
    if params.shape != (spec.parameter_count,):
        raise UsageError(f"expected {spec.parameter_count} parameters, got shape {params.shape}")
    return apply_circuit(new_zero_state(spec.n_qubits), build(spec), params)
