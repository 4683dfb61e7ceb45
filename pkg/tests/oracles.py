"""Independent dense-matrix reference implementations used as test oracles.

Nothing here imports the package.  Everything is built from explicit Kronecker
products, so it shares no code path with the in-place simulator.
"""

import itertools

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
SDG = np.diag([1, -1j])
PAULI = {"X": X, "Y": Y, "Z": Z}


def kron_all(mats):
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def embed(u, q, n):
    """Single-qubit operator on qubit q (qubit 0 leftmost / most significant)."""
    return kron_all([u if i == q else I2 for i in range(n)])


def rot(p, theta):
    # exp(-i theta P / 2) via the identity cos I - i sin P
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * PAULI[p]


def cnot(control, target, n):
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        bits = [(i >> (n - 1 - q)) & 1 for q in range(n)]
        if bits[control]:
            bits[target] ^= 1
        j = sum(b << (n - 1 - q) for q, b in enumerate(bits))
        m[j, i] = 1
    return m


def ansatz_unitary(n, layers, params):
    """Rx on even layers, Ry on odd, CNOT chain q -> q+1 between layers."""
    params = np.asarray(params).reshape(layers, n)
    u = np.eye(2**n, dtype=complex)
    for layer in range(layers):
        kind = "X" if layer % 2 == 0 else "Y"
        u = kron_all([rot(kind, params[layer, q]) for q in range(n)]) @ u
        if layer < layers - 1:
            for q in range(n - 1):
                u = cnot(q, q + 1, n) @ u
    return u


def ansatz_state(n, layers, params):
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1
    return ansatz_unitary(n, layers, params) @ psi


def basis_change(axis):
    return {"X": H, "Y": H @ SDG, "Z": I2}[axis]


def measurement_probs(psi, axes):
    n = len(axes)
    u = kron_all([basis_change(a) for a in axes])
    return np.abs(u @ psi) ** 2


def xxz_dense(L, J=1.0, Delta=1.0, h=1.0):
    dim = 2**L
    Hm = np.zeros((dim, dim), dtype=complex)
    for l in range(L - 1):
        Hm += J * (embed(X, l, L) @ embed(X, l + 1, L) + embed(Y, l, L) @ embed(Y, l + 1, L))
        Hm += Delta * embed(Z, l, L) @ embed(Z, l + 1, L)
    for l in range(L):
        Hm += h * embed(Z, l, L)
    return Hm


def kl_loop(p1, p2, eps):
    """Direct summation over the union of supports."""
    total = 0.0
    for s in set(np.flatnonzero(p1)) | set(np.flatnonzero(p2)):
        if p1[s] > 0:
            total += p1[s] * np.log(p1[s] / (p2[s] + eps))
    return total


def mmd_loop(p, q, sigma):
    """E_pp K - 2 E_pq K + E_qq K with explicit bit-vector kernel sums."""
    dim = len(p)
    n = int(np.log2(dim))
    bits = [np.array([(i >> (n - 1 - k)) & 1 for k in range(n)]) for i in range(dim)]

    def k(x, y):
        return np.exp(-np.sum((bits[x] - bits[y]) ** 2) / (2 * sigma))

    def e(a, b):
        return sum(a[x] * b[y] * k(x, y) for x, y in itertools.product(range(dim), repeat=2))

    return e(p, p) - 2 * e(p, q) + e(q, q)
