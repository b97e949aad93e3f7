"""Shared test helpers: dense-matrix circuit oracle and finite differences."""

import numpy as np
import pytest

from qnnff import statevec


def kron_on(num_qubits, qubit, u2):
    """Embed a 2x2 matrix on one qubit (little-endian: qubit 0 is the LSB)."""
    full = np.eye(1, dtype=complex)
    for q in range(num_qubits - 1, -1, -1):
        full = np.kron(full, u2 if q == qubit else np.eye(2))
    return full


def gate_matrix(num_qubits, gate):
    """Explicit 2^n x 2^n unitary for a BoundGate."""
    if gate.kind == "ry":
        t = gate.angle / 2
        u = np.array([[np.cos(t), -np.sin(t)], [np.sin(t), np.cos(t)]], dtype=complex)
        return kron_on(num_qubits, gate.qubits[0], u)
    if gate.kind == "rz":
        t = gate.angle / 2
        u = np.diag([np.exp(-1j * t), np.exp(1j * t)])
        return kron_on(num_qubits, gate.qubits[0], u)
    if gate.kind == "cnot":
        c, t = gate.qubits
        dim = 1 << num_qubits
        mat = np.zeros((dim, dim), dtype=complex)
        for b in range(dim):
            out = b ^ (1 << t) if (b >> c) & 1 else b
            mat[out, b] = 1.0
        return mat
    if gate.kind == "multiz":
        dim = 1 << num_qubits
        diag = np.empty(dim, dtype=complex)
        for b in range(dim):
            parity = 0
            for q in gate.qubits:
                parity ^= (b >> q) & 1
            diag[b] = np.exp(-1j * gate.angle * (1 - 2 * parity))
        return np.diag(diag)
    raise ValueError(gate.kind)


def circuit_matrix(num_qubits, gates):
    full = np.eye(1 << num_qubits, dtype=complex)
    for g in gates:
        full = gate_matrix(num_qubits, g) @ full
    return full


def random_gate_sequence(rng, num_qubits, length):
    kinds = ["ry", "rz", "multiz"] + (["cnot"] if num_qubits > 1 else [])
    gates = []
    for _ in range(length):
        kind = rng.choice(kinds)
        if kind in ("ry", "rz"):
            gates.append(statevec.BoundGate(kind, (int(rng.integers(num_qubits)),),
                                            float(rng.uniform(-np.pi, np.pi))))
        elif kind == "cnot":
            c, t = rng.choice(num_qubits, size=2, replace=False)
            gates.append(statevec.cnot(int(c), int(t)))
        else:
            k = int(rng.integers(1, num_qubits + 1))
            qs = tuple(int(q) for q in rng.choice(num_qubits, size=k, replace=False))
            gates.append(statevec.multiz(qs, float(rng.uniform(-np.pi, np.pi))))
    return gates


def central_diff(f, x, h=1e-4):
    """Central finite-difference gradient of a scalar function of a vector."""
    x = np.asarray(x, dtype=float)
    grad = np.zeros_like(x)
    for i in range(x.size):
        xp, xm = x.copy(), x.copy()
        xp[i] += h
        xm[i] -= h
        grad[i] = (f(xp) - f(xm)) / (2 * h)
    return grad


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
