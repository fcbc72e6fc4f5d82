"""Binary symplectic Pauli vectors and dense GF(2) linear algebra.

A Pauli string on n qubits is a length-2n vector (x | z) of uint8 bits; signs are
dropped throughout. Row operations are XORs on numpy uint8 arrays.
"""

from __future__ import annotations

import logging

import numpy as np

from modules.errors import ContractViolation

logger = logging.getLogger(__name__)

_LETTERS = {"I": (0, 0), "X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def pauli_from_string(label: str) -> np.ndarray:
    """'XZIY' -> symplectic vector; a leading sign or phase is ignored."""
    label = label.strip().lstrip("+-").lstrip("i").upper()
    if not label or any(c not in _LETTERS for c in label):
        raise ContractViolation(f"not a Pauli string: {label!r}")
    n = len(label)
    vec = np.zeros(2 * n, dtype=np.uint8)
    for q, c in enumerate(label):
        vec[q], vec[n + q] = _LETTERS[c]
    return vec


def pauli_to_string(vec) -> str:
    vec = np.asarray(vec, dtype=np.uint8)
    n = vec.size // 2
    return "".join("IZXY"[2 * int(vec[q]) + int(vec[n + q])] for q in range(n))


def weight(vec) -> int:
    vec = np.asarray(vec, dtype=np.uint8)
    n = vec.size // 2
    return int(np.count_nonzero(vec[:n] | vec[n:]))


def symplectic_product(mat1, mat2) -> np.ndarray:
    """Commutation parities: entry (a, b) is 1 iff row a of mat1 anticommutes with row b of mat2."""
    a = np.atleast_2d(np.asarray(mat1, dtype=np.uint8))
    b = np.atleast_2d(np.asarray(mat2, dtype=np.uint8))
    n = a.shape[1] // 2
    swapped = np.concatenate([b[:, n:], b[:, :n]], axis=1)
    return (a.astype(np.int64) @ swapped.T.astype(np.int64) % 2).astype(np.uint8)


def gf2_row_echelon(M, n_pivot_cols=None, reduced=True):
    """Row-reduce a binary matrix over GF(2).

    Args:
        M: Binary matrix (m x n), values in {0, 1}.
        n_pivot_cols: Only search for pivots in the first *n_pivot_cols* columns.
        reduced: Also clear entries above each pivot.

    Returns:
        (R, pivot_cols)
    """
    R = np.atleast_2d(np.asarray(M, dtype=np.uint8) % 2).copy()
    if R.shape[0] == 0:
        return R, []
    m, n = R.shape
    if n_pivot_cols is None:
        n_pivot_cols = n

    pivot_cols: list[int] = []
    pivot_row = 0
    for col in range(n_pivot_cols):
        if pivot_row == m:
            break
        candidates = np.nonzero(R[pivot_row:, col])[0]
        if candidates.size == 0:
            continue
        found = pivot_row + int(candidates[0])
        if found != pivot_row:
            R[[pivot_row, found]] = R[[found, pivot_row]]
        rows = np.nonzero(R[:, col])[0] if reduced else pivot_row + 1 + np.nonzero(R[pivot_row + 1:, col])[0]
        for row in rows:
            if row != pivot_row:
                R[row] ^= R[pivot_row]
        pivot_cols.append(col)
        pivot_row += 1
    return R, pivot_cols


def gf2_rank(M) -> int:
    M = np.asarray(M, dtype=np.uint8)
    if M.size == 0:
        return 0
    return len(gf2_row_echelon(M, reduced=False)[1])


def gf2_nullspace(M) -> np.ndarray:
    """Basis (rows) of {v : M v = 0} over GF(2)."""
    M = np.atleast_2d(np.asarray(M, dtype=np.uint8))
    n = M.shape[1]
    if M.shape[0] == 0:
        return np.eye(n, dtype=np.uint8)
    R, pivots = gf2_row_echelon(M)
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for k, f in enumerate(free):
        basis[k, f] = 1
        for row, p in enumerate(pivots):
            basis[k, p] = R[row, f]
    return basis


def gf2_solve(M, b) -> np.ndarray:
    """One solution x of M x = b over GF(2).

    Raises:
        ContractViolation: the system is inconsistent.
    """
    M = np.atleast_2d(np.asarray(M, dtype=np.uint8))
    b = np.asarray(b, dtype=np.uint8).reshape(-1, 1)
    n = M.shape[1]
    R, pivots = gf2_row_echelon(np.concatenate([M, b], axis=1), n_pivot_cols=n)
    rank = len(pivots)
    if np.any(R[rank:, n]):
        raise ContractViolation("linear system over GF(2) has no solution")
    x = np.zeros(n, dtype=np.uint8)
    for row, p in enumerate(pivots):
        x[p] = R[row, n]
    return x


def in_span(rows, vec) -> bool:
    rows = np.atleast_2d(np.asarray(rows, dtype=np.uint8))
    if rows.shape[0] == 0:
        return not np.any(vec)
    return gf2_rank(np.vstack([rows, vec])) == gf2_rank(rows)


def pack(vecs) -> tuple:
    """Rows of (x | z) bits -> (x_masks, z_masks) as uint64 arrays (n <= 64)."""
    vecs = np.atleast_2d(np.asarray(vecs, dtype=np.uint8))
    n = vecs.shape[1] // 2
    if n > 64:
        raise ContractViolation(f"bitmask packing supports at most 64 qubits, got {n}")
    powers = np.left_shift(np.uint64(1), np.arange(n, dtype=np.uint64))
    x = (vecs[:, :n].astype(np.uint64) * powers).sum(axis=1, dtype=np.uint64)
    z = (vecs[:, n:].astype(np.uint64) * powers).sum(axis=1, dtype=np.uint64)
    return x, z
