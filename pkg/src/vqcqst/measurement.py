"""Pauli-basis measurement: rotations, outcome distributions, shot sampling, datasets.

Conventions
-----------
* A basis is a string over ``X``, ``Y``, ``Z``; character ``q`` is the axis for qubit ``q``.
* X is measured by applying H, Y by applying Sdg then H, Z by nothing, followed by a
  computational-basis readout.  The +1 eigenstate of each axis therefore reads ``0``.
* Bitstring character ``q`` is the outcome of qubit ``q`` (same ordering as amplitudes).

Dataset files are JSON documents::

    {"format_version": 1, "n_qubits": 3, "shots_per_basis": 100, "seed": 17,
     "provenance": "ghz:n=3",
     "records": [{"basis": "XYZ", "counts": {"010": 37, ...}}, ...]}

Histograms are sparse: a bitstring absent from ``counts`` was observed zero times.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Sequence, Tuple

import numpy as np

from .errors import ConfigurationError, UsageError, ValidationError
from .statevector import MAX_QUBITS, Circuit, GateOp, Statevector, apply_circuit

AXES = "XYZ"
DATASET_FORMAT_VERSION = 1

_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_SDG = np.diag([1, -1j])
# Rows follow AXES order; each entry is the 2x2 change of basis for that axis.
_BASIS_CHANGE = np.stack([_H, _H @ _SDG, np.eye(2, dtype=complex)])

# Above this many entries the all-bases tensor is skipped in favour of per-basis rotation.
_FULL_TENSOR_LIMIT = 1 << 22


def bitstring(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def bitstring_index(bits: str) -> int:
    return int(bits, 2)


@dataclass(frozen=True)
class MeasurementBasis:
    axes: str

    def __post_init__(self):
        if not self.axes or any(ch not in AXES for ch in self.axes):
            raise ConfigurationError(f"basis must be a nonempty string over XYZ, got {self.axes!r}")

    @property
    def n_qubits(self) -> int:
        return len(self.axes)

    @property
    def index(self) -> int:
        """Position in :func:`enumerate_bases` order (base-3 digits, X=0, Y=1, Z=2)."""
        value = 0
        for ch in self.axes:
            value = value * 3 + AXES.index(ch)
        return value

    def __str__(self) -> str:
        return self.axes


def as_basis(basis) -> MeasurementBasis:
    return basis if isinstance(basis, MeasurementBasis) else MeasurementBasis(str(basis))


@dataclass
class OutcomeDistribution:
    """Dense probability vector over all ``2**n`` bitstrings."""

    n_qubits: int
    probs: np.ndarray

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=float)
        if self.probs.shape != (2**self.n_qubits,):
            raise UsageError(f"expected {2**self.n_qubits} probabilities, got shape {self.probs.shape}")

    @classmethod
    def from_mapping(cls, probabilities: Mapping[str, float], n_qubits: int = None) -> "OutcomeDistribution":
        if n_qubits is None:
            n_qubits = len(next(iter(probabilities)))
        probs = np.zeros(2**n_qubits)
        for bits, p in probabilities.items():
            if len(bits) != n_qubits:
                raise UsageError(f"bitstring {bits!r} does not have {n_qubits} characters")
            probs[bitstring_index(bits)] += p
        return cls(n_qubits, probs)

    @property
    def probabilities(self) -> Dict[str, float]:
        return {bitstring(i, self.n_qubits): float(p) for i, p in enumerate(self.probs) if p > 0}


@dataclass
class Histogram:
    shots: int
    counts: Dict[str, int] = field(default_factory=dict)

    @classmethod
    def from_array(cls, counts: np.ndarray, n_qubits: int) -> "Histogram":
        nz = np.flatnonzero(counts)
        return cls(int(counts.sum()), {bitstring(int(i), n_qubits): int(counts[i]) for i in nz})

    def to_array(self, n_qubits: int) -> np.ndarray:
        out = np.zeros(2**n_qubits, dtype=np.int64)
        for bits, c in self.counts.items():
            out[bitstring_index(bits)] = c
        return out

    def empirical(self, n_qubits: int) -> OutcomeDistribution:
        return OutcomeDistribution(n_qubits, self.to_array(n_qubits) / self.shots)


@dataclass
class MeasurementDataset:
    n_qubits: int
    shots_per_basis: int
    records: List[Tuple[MeasurementBasis, Histogram]]
    seed: int
    provenance: str = ""

    def __post_init__(self):
        problems = _dataset_problems(self.n_qubits, self.shots_per_basis, self.records)
        if problems:
            raise ValidationError(problems)

    @property
    def bases(self) -> List[MeasurementBasis]:
        return [b for b, _ in self.records]

    def empirical_matrix(self) -> np.ndarray:
        """Empirical distributions stacked as ``(n_bases, 2**n)``, in record order."""
        return np.stack([h.to_array(self.n_qubits) for _, h in self.records]) / self.shots_per_basis

    def to_dict(self) -> dict:
        return {
            "format_version": DATASET_FORMAT_VERSION,
            "n_qubits": self.n_qubits,
            "shots_per_basis": self.shots_per_basis,
            "seed": self.seed,
            "provenance": self.provenance,
            "records": [
                {"basis": b.axes, "counts": {k: h.counts[k] for k in sorted(h.counts)}} for b, h in self.records
            ],
        }

    @classmethod
    def from_dict(cls, doc: Mapping) -> "MeasurementDataset":
        problems = []
        if not isinstance(doc, Mapping):
            raise ValidationError(["document: expected a JSON object"])
        if doc.get("format_version") != DATASET_FORMAT_VERSION:
            problems.append(f"format_version: expected {DATASET_FORMAT_VERSION}, got {doc.get('format_version')!r}")
        for key in ("n_qubits", "shots_per_basis", "seed"):
            if not isinstance(doc.get(key), int) or isinstance(doc.get(key), bool):
                problems.append(f"{key}: expected an integer, got {doc.get(key)!r}")
        if not isinstance(doc.get("provenance", ""), str):
            problems.append("provenance: expected a string")
        raw_records = doc.get("records")
        if not isinstance(raw_records, list) or not raw_records:
            problems.append("records: expected a nonempty array")
            raw_records = []
        records = []
        for i, rec in enumerate(raw_records):
            try:
                basis = MeasurementBasis(rec["basis"])
                counts = rec["counts"]
                if not isinstance(counts, Mapping) or not all(
                    isinstance(v, int) and not isinstance(v, bool) for v in counts.values()
                ):
                    raise TypeError("counts must map bitstrings to integers")
                records.append((basis, Histogram(int(sum(counts.values())), dict(counts))))
            except (KeyError, TypeError, ConfigurationError) as exc:
                problems.append(f"records[{i}]: {exc}")
        if records and not any(p.startswith(("n_qubits", "shots_per_basis")) for p in problems):
            problems.extend(_dataset_problems(doc["n_qubits"], doc["shots_per_basis"], records))
        if problems:
            raise ValidationError(problems)
        return cls(doc["n_qubits"], doc["shots_per_basis"], records, doc["seed"], doc.get("provenance", ""))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=False) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "MeasurementDataset":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError([f"document: invalid JSON ({exc})"]) from exc
        return cls.from_dict(doc)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "MeasurementDataset":
        with open(path) as fh:
            return cls.from_json(fh.read())


def _dataset_problems(n_qubits, shots_per_basis, records) -> List[str]:
    problems = []
    if not isinstance(n_qubits, int) or not 1 <= n_qubits <= MAX_QUBITS:
        return [f"n_qubits: must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}"]
    if not isinstance(shots_per_basis, int) or shots_per_basis < 1:
        problems.append(f"shots_per_basis: must be a positive integer, got {shots_per_basis!r}")
    if not records:
        problems.append("records: dataset has no records")
    seen = set()
    for i, (basis, hist) in enumerate(records):
        if basis.n_qubits != n_qubits:
            problems.append(f"records[{i}].basis: {basis.axes!r} has length {basis.n_qubits}, expected {n_qubits}")
        if basis.axes in seen:
            problems.append(f"records[{i}].basis: duplicate basis {basis.axes!r}")
        seen.add(basis.axes)
        for bits, c in hist.counts.items():
            if len(bits) != n_qubits or any(ch not in "01" for ch in bits):
                problems.append(f"records[{i}].counts: invalid bitstring {bits!r}")
            if c < 0:
                problems.append(f"records[{i}].counts[{bits}]: negative count {c}")
        total = sum(hist.counts.values())
        if total != hist.shots:
            problems.append(f"records[{i}].counts: sum {total} does not match histogram shots {hist.shots}")
        if hist.shots != shots_per_basis:
            problems.append(f"records[{i}].counts: sum {hist.shots} does not match shots_per_basis {shots_per_basis}")
    return problems


def basis_rotation(basis) -> Circuit:
    basis = as_basis(basis)
    circuit = Circuit(basis.n_qubits)
    for q, axis in enumerate(basis.axes):
        if axis == "X":
            circuit.append(GateOp("H", (q,)))
        elif axis == "Y":
            circuit.append(GateOp("Sdg", (q,)))
            circuit.append(GateOp("H", (q,)))
    return circuit


def exact_distribution(state: Statevector, basis) -> OutcomeDistribution:
    basis = as_basis(basis)
    if basis.n_qubits != state.n_qubits:
        raise UsageError(f"basis {basis.axes!r} does not match {state.n_qubits} qubits")
    rotated = apply_circuit(state.copy(), basis_rotation(basis))
    return OutcomeDistribution(state.n_qubits, rotated.probabilities())


def basis_probabilities(amplitudes: np.ndarray, bases: Sequence = None) -> np.ndarray:
    """Outcome probabilities for many bases at once, shape ``(len(bases), 2**n)``.

    With ``bases=None`` all ``3**n`` bases are returned in :func:`enumerate_bases` order.
    Accepts either a sequence of bases or an integer index array from :attr:`MeasurementBasis.index`.
    """
    amplitudes = np.asarray(amplitudes, dtype=complex)
    n = int(round(np.log2(amplitudes.size)))
    if bases is not None and not isinstance(bases, np.ndarray):
        bases = np.array([as_basis(b).index for b in bases], dtype=np.intp)
    if 6**n <= _FULL_TENSOR_LIMIT:
        tensor = amplitudes.reshape((2,) * n)
        for _ in range(n):
            # consumes the leading qubit axis and appends (axis choice, outcome bit)
            tensor = np.tensordot(tensor, _BASIS_CHANGE, axes=([0], [2]))
        tensor = tensor.transpose(list(range(0, 2 * n, 2)) + list(range(1, 2 * n, 2)))
        rotated = tensor.reshape(3**n, 2**n)
        if bases is not None:
            rotated = rotated[bases]
        return rotated.real**2 + rotated.imag**2
    if bases is None:
        bases = np.arange(3**n)
    out = np.empty((len(bases), 2**n))
    for row, idx in enumerate(bases):
        out[row] = exact_distribution(Statevector(n, amplitudes), basis_from_index(int(idx), n)).probs
    return out


def sample_counts(probs: np.ndarray, shots: int, rng: np.random.Generator) -> np.ndarray:
    """Multinomial counts for each row of ``probs``."""
    if shots < 1:
        raise ConfigurationError(f"shots must be >= 1, got {shots}")
    p = np.clip(probs, 0.0, None)
    p = p / p.sum(axis=-1, keepdims=True)
    return rng.multinomial(shots, p)


def sample(dist: OutcomeDistribution, shots: int, rng: np.random.Generator) -> Histogram:
    counts = sample_counts(dist.probs, shots, rng)
    return Histogram.from_array(counts, dist.n_qubits)


def enumerate_bases(n_qubits: int) -> List[MeasurementBasis]:
    if n_qubits < 1:
        raise ConfigurationError(f"n_qubits must be >= 1, got {n_qubits}")
    return [MeasurementBasis("".join(p)) for p in itertools.product(AXES, repeat=n_qubits)]


def basis_from_index(index: int, n_qubits: int) -> MeasurementBasis:
    return MeasurementBasis("".join(AXES[(index // 3 ** (n_qubits - 1 - q)) % 3] for q in range(n_qubits)))


def random_basis_subset(n_qubits: int, k: int, rng: np.random.Generator) -> List[MeasurementBasis]:
    total = 3**n_qubits
    if not 1 <= k <= total:
        raise ConfigurationError(f"k must be in [1, {total}], got {k}")
    picks = rng.choice(total, size=k, replace=False)
    return [basis_from_index(int(i), n_qubits) for i in picks]
