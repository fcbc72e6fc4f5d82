"""Stabilizer tableau simulation of Clifford circuits (CHP algorithm).

Rows 0..n-1 hold destabilizers, rows n..2n-1 stabilizers; every gate updates all
rows at once on uint8 columns.
"""

import logging

import numpy as np

from modules.errors import ContractViolation

logger = logging.getLogger(__name__)

CLIFFORD_GATES = {"I": 1, "H": 1, "S": 1, "X": 1, "Y": 1, "Z": 1, "CNOT": 2, "CX": 2, "CZ": 2}


def validate_circuit(circuit, n_qubits: int):
    """Reject anything outside the Clifford gate set or outside the register."""
    for gate in circuit:
        name, *qubits = gate
        if name not in CLIFFORD_GATES:
            raise ContractViolation(f"non-Clifford or unknown gate: {name}")
        if len(qubits) != CLIFFORD_GATES[name]:
            raise ContractViolation(f"gate {name} acts on {CLIFFORD_GATES[name]} qubit(s), got {qubits}")
        if any(q < 0 or q >= n_qubits for q in qubits):
            raise ContractViolation(f"gate {gate} addresses a qubit outside 0..{n_qubits - 1}")
        if len(qubits) == 2 and qubits[0] == qubits[1]:
            raise ContractViolation(f"two-qubit gate {gate} needs distinct qubits")


def shift_circuit(circuit, offset: int) -> list:
    return [(name, *(q + offset for q in qubits)) for name, *qubits in circuit]


class StabilizerTableau:

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.x[np.arange(n), np.arange(n)] = 1
        self.z[n + np.arange(n), np.arange(n)] = 1

    def h(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def cnot(self, a, b):
        self.r ^= self.x[:, a] & self.z[:, b] & (self.x[:, b] ^ self.z[:, a] ^ 1)
        self.x[:, b] ^= self.x[:, a]
        self.z[:, a] ^= self.z[:, b]

    def cz(self, a, b):
        self.h(b)
        self.cnot(a, b)
        self.h(b)

    def pauli(self, name, a):
        if name in ("X", "Y"):
            self.r ^= self.z[:, a]
        if name in ("Z", "Y"):
            self.r ^= self.x[:, a]

    def _rowsum(self, h_x, h_z, h_r, i):
        # phase of (row i) * (row h); returns the updated row h
        x1, z1 = self.x[i].astype(np.int64), self.z[i].astype(np.int64)
        x2, z2 = h_x.astype(np.int64), h_z.astype(np.int64)
        g = np.where(
            (x1 == 1) & (z1 == 1),
            z2 - x2,
            np.where((x1 == 1) & (z1 == 0), z2 * (2 * x2 - 1), np.where((x1 == 0) & (z1 == 1), x2 * (1 - 2 * z2), 0)),
        )
        total = (2 * int(h_r) + 2 * int(self.r[i]) + int(g.sum())) % 4
        return h_x ^ self.x[i], h_z ^ self.z[i], np.uint8(1 if total == 2 else 0)

    def measure(self, a, rng: np.random.Generator = None) -> tuple:
        """Z measurement of qubit a.

        Random outcomes come from `rng`, or are fixed to 0 without one.

        Returns:
            (outcome, was_random)
        """
        n = self.n
        hits = np.nonzero(self.x[n:, a])[0]
        if hits.size:
            p = n + int(hits[0])
            for i in np.nonzero(self.x[:, a])[0]:
                if i != p:
                    self.x[i], self.z[i], self.r[i] = self._rowsum(self.x[i], self.z[i], self.r[i], p)
            self.x[p - n], self.z[p - n], self.r[p - n] = self.x[p], self.z[p], self.r[p]
            self.x[p] = 0
            self.z[p] = 0
            self.z[p, a] = 1
            outcome = int(rng.integers(2)) if rng is not None else 0
            self.r[p] = outcome
            return outcome, True

        sx = np.zeros(n, dtype=np.uint8)
        sz = np.zeros(n, dtype=np.uint8)
        sr = np.uint8(0)
        for i in np.nonzero(self.x[:n, a])[0]:
            sx, sz, sr = self._rowsum(sx, sz, sr, i + n)
        return int(sr), False

    def apply(self, gate):
        name, *qubits = gate
        if name == "H":
            self.h(*qubits)
        elif name == "S":
            self.s(*qubits)
        elif name in ("CNOT", "CX"):
            self.cnot(*qubits)
        elif name == "CZ":
            self.cz(*qubits)
        elif name in ("X", "Y", "Z"):
            self.pauli(name, *qubits)
        elif name == "I":
            pass
        else:
            raise ContractViolation(f"non-Clifford or unknown gate: {name}")

    def run(self, circuit):
        validate_circuit(circuit, self.n)
        for gate in circuit:
            self.apply(gate)
        return self

    def stabilizers(self) -> np.ndarray:
        """Stabilizer generators as (x | z) rows, signs dropped."""
        return np.concatenate([self.x[self.n:], self.z[self.n:]], axis=1).copy()

    def signs(self) -> np.ndarray:
        return self.r[self.n:].copy()
