"""Dense statevector simulation.

Bit ordering: amplitude index ``i`` encodes the bitstring whose leftmost
character is qubit 0, and qubit 0 is the most significant bit.  Reshaping the
amplitude vector to ``(2,) * n`` therefore puts qubit ``q`` on axis ``q``.

Rotations follow ``R_P(theta) = exp(-i theta P / 2)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, UsageError

MAX_QUBITS = 12

SINGLE_QUBIT_KINDS = ("H", "X", "Y", "Z", "S", "Sdg", "T", "Rx", "Ry", "Rz")
TWO_QUBIT_KINDS = ("CNOT", "CZ", "SWAP")
ROTATION_KINDS = ("Rx", "Ry", "Rz")
GATE_KINDS = SINGLE_QUBIT_KINDS + TWO_QUBIT_KINDS

_SQRT1_2 = 1 / np.sqrt(2)
_FIXED_1Q = {
    "H": np.array([[_SQRT1_2, _SQRT1_2], [_SQRT1_2, -_SQRT1_2]], dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "S": np.array([[1, 0], [0, 1j]], dtype=complex),
    "Sdg": np.array([[1, 0], [0, -1j]], dtype=complex),
    "T": np.array([[1, 0], [0, np.exp(1j * np.pi / 4)]], dtype=complex),
}
_INVERSE_KIND = {"S": "Sdg", "Sdg": "S"}


def rotation_matrix(kind: str, angle: float) -> np.ndarray:
    c, s = np.cos(angle / 2), np.sin(angle / 2)
    if kind == "Rx":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)
    if kind == "Ry":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if kind == "Rz":
        return np.array([[np.exp(-0.5j * angle), 0], [0, np.exp(0.5j * angle)]], dtype=complex)
    raise UsageError(f"{kind} is not a rotation gate")


@dataclass(frozen=True)
class GateOp:
    """One gate application.

    Rotation gates carry either a bound ``angle`` or an unbound ``param`` slot
    index into a parameter vector.  For CNOT the targets are ``(control, target)``.
    """

    kind: str
    targets: tuple
    angle: Optional[float] = None
    param: Optional[int] = None

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        arity = 2 if self.kind in TWO_QUBIT_KINDS else 1
        if len(self.targets) != arity:
            raise ConfigurationError(f"{self.kind} takes {arity} target(s), got {self.targets}")
        if len(set(self.targets)) != len(self.targets):
            raise ConfigurationError(f"{self.kind} targets must be distinct, got {self.targets}")
        if any(t < 0 for t in self.targets):
            raise ConfigurationError(f"negative qubit index in {self.targets}")
        if self.kind in ROTATION_KINDS:
            if (self.angle is None) == (self.param is None):
                raise ConfigurationError(f"{self.kind} needs exactly one of angle or param")
        elif self.angle is not None or self.param is not None:
            raise ConfigurationError(f"{self.kind} takes no angle")

    @property
    def is_bound(self) -> bool:
        return self.param is None

    def bind(self, params: Sequence[float]) -> "GateOp":
        if self.param is None:
            return self
        return GateOp(self.kind, self.targets, angle=float(params[self.param]))

    def inverse(self) -> "GateOp":
        if not self.is_bound:
            raise UsageError("cannot invert an unbound gate")
        if self.kind in ROTATION_KINDS:
            return GateOp(self.kind, self.targets, angle=-self.angle)
        if self.kind == "T":
            raise UsageError("T has no inverse in the gate set")
        return GateOp(_INVERSE_KIND.get(self.kind, self.kind), self.targets)

    def matrix(self) -> np.ndarray:
        """2x2 unitary of a bound single-qubit gate."""
        if self.kind in ROTATION_KINDS:
            if self.angle is None:
                raise UsageError("gate is unbound")
            return rotation_matrix(self.kind, self.angle)
        if self.kind in _FIXED_1Q:
            return _FIXED_1Q[self.kind]
        raise UsageError(f"{self.kind} is not a single-qubit gate")


@dataclass
class Circuit:
    n_qubits: int
    ops: list = field(default_factory=list)

    def __iter__(self) -> Iterator[GateOp]:
        return iter(self.ops)

    def __len__(self) -> int:
        return len(self.ops)

    def append(self, op: GateOp) -> None:
        if max(op.targets) >= self.n_qubits:
            raise UsageError(f"gate {op} exceeds {self.n_qubits} qubits")
        self.ops.append(op)

    def extend(self, ops: Iterable[GateOp]) -> None:
        for op in ops:
            self.append(op)

    @property
    def n_params(self) -> int:
        slots = [op.param for op in self.ops if op.param is not None]
        return max(slots) + 1 if slots else 0

    def bind(self, params: Sequence[float]) -> "Circuit":
        params = np.asarray(params, dtype=float)
        if params.shape != (self.n_params,):
            raise UsageError(f"expected {self.n_params} parameters, got shape {params.shape}")
        return Circuit(self.n_qubits, [op.bind(params) for op in self.ops])

    def inverse(self) -> "Circuit":
        return Circuit(self.n_qubits, [op.inverse() for op in reversed(self.ops)])


@dataclass
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n_qubits,):
            raise UsageError(
                f"{self.n_qubits} qubits need {2**self.n_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "Statevector":
        amplitudes = np.asarray(amplitudes, dtype=complex)
        n = int(round(np.log2(amplitudes.size)))
        if 2**n != amplitudes.size:
            raise UsageError(f"length {amplitudes.size} is not a power of two")
        if normalize:
            amplitudes = amplitudes / np.linalg.norm(amplitudes)
        return cls(n, amplitudes)

    def copy(self) -> "Statevector":
        return Statevector(self.n_qubits, self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probabilities(self) -> np.ndarray:
        a = self.amplitudes
        return a.real**2 + a.imag**2


def new_zero_state(n_qubits: int) -> Statevector:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be in [1, {MAX_QUBITS}], got {n_qubits}")
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[0] = 1.0
    return Statevector(n_qubits, amps)


def _apply_1q(amps: np.ndarray, n: int, q: int, u: np.ndarray) -> None:
    view = amps.reshape(2**q, 2, 2 ** (n - q - 1))
    a0 = view[:, 0, :].copy()
    a1 = view[:, 1, :]
    view[:, 0, :] = u[0, 0] * a0 + u[0, 1] * a1
    view[:, 1, :] = u[1, 0] * a0 + u[1, 1] * a1


def _slice(n: int, fixed: dict) -> tuple:
    return tuple(fixed.get(axis, slice(None)) for axis in range(n))


def apply_gate(state: Statevector, gate: GateOp) -> Statevector:
    """Apply ``gate`` to ``state`` in place and return the same object."""
    n = state.n_qubits
    if any(t >= n for t in gate.targets):
        raise UsageError(f"gate {gate.kind}{gate.targets} out of range for {n} qubits")
    if not gate.is_bound:
        raise UsageError(f"gate {gate.kind} on {gate.targets} has unbound parameter slot {gate.param}")
    amps = state.amplitudes
    if gate.kind in SINGLE_QUBIT_KINDS:
        _apply_1q(amps, n, gate.targets[0], gate.matrix())
        return state
    tensor = amps.reshape((2,) * n)
    a, b = gate.targets
    if gate.kind == "CNOT":
        lo = _slice(n, {a: 1, b: 0})
        hi = _slice(n, {a: 1, b: 1})
    elif gate.kind == "SWAP":
        lo = _slice(n, {a: 0, b: 1})
        hi = _slice(n, {a: 1, b: 0})
    else:  # CZ
        tensor[_slice(n, {a: 1, b: 1})] *= -1
        return state
    tmp = tensor[lo].copy()
    tensor[lo] = tensor[hi]
    tensor[hi] = tmp
    return state


def apply_circuit(state: Statevector, circuit: Circuit, params: Optional[Sequence[float]] = None) -> Statevector:
    if circuit.n_qubits != state.n_qubits:
        raise UsageError(f"circuit has {circuit.n_qubits} qubits, state has {state.n_qubits}")
    if params is not None:
        circuit = circuit.bind(params)
    for op in circuit:
        apply_gate(state, op)
    return state


def inner_product(a: Statevector, b: Statevector) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    if a.n_qubits != b.n_qubits:
        raise UsageError(f"dimension mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    return complex(np.vdot(a.amplitudes, b.amplitudes))
