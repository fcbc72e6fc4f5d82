"""Parity checks on Bell samples, Pauli frame updates and the lookup-table decoder."""

import itertools
import logging
from dataclasses import dataclass

import numpy as np

from modules import configuration
from modules.errors import QweError, ResourceLimitError, require
from modules.sampler.samples import BellSampleSet
from modules.states.stabilizer import StabilizerGroup
from modules.states.symplectic import pauli_from_string, pauli_to_string, symplectic_product

logger = logging.getLogger(__name__)

# Pauli letters in tie-breaking order
_LETTERS = ("X", "Y", "Z")
_BITS = {"X": (1, 0), "Y": (1, 1), "Z": (0, 1)}


def _as_pauli(pauli, n: int) -> np.ndarray:
    vec = pauli_from_string(pauli) if isinstance(pauli, str) else np.asarray(pauli, dtype=np.uint8)
    require(vec.size == 2 * n, f"Pauli acts on {vec.size // 2} qubits, samples have {n} pairs")
    return vec


def _frame_mask(paulis: np.ndarray, n: int) -> np.ndarray:
    # X toggles the z-bit (1), Z the x-bit (2), Y both
    return (paulis[..., :n] + 2 * paulis[..., n:]).astype(np.uint8)


def pauli_frame_update(symbols, pauli) -> np.ndarray:
    """Bell symbols after a Pauli on one copy; one row per shot."""
    symbols = np.atleast_2d(np.asarray(symbols, dtype=np.uint8))
    n = symbols.shape[1]
    return symbols ^ _frame_mask(_as_pauli(pauli, n), n)[None, :]


def check_parities(symbols, code: StabilizerGroup) -> np.ndarray:
    """Syndrome bits (shots x generators): bit g is 1 iff S_g (x) S_g has eigenvalue -1."""
    symbols = np.atleast_2d(np.asarray(symbols, dtype=np.uint8))
    require(symbols.shape[1] == code.n, f"samples have {symbols.shape[1]} pairs, code has {code.n} qubits")
    gx = code.generators[:, : code.n].astype(np.int64)
    gz = code.generators[:, code.n:].astype(np.int64)
    xbits = (symbols >> 1).astype(np.int64)
    zbits = (symbols & 1).astype(np.int64)
    # per pair: X -> x-bit, Z -> z-bit, Y -> x ^ z ^ 1
    offset = np.sum(gx & gz, axis=1)
    return ((xbits @ gx.T + zbits @ gz.T + offset[None, :]) % 2).astype(np.uint8)


def syndrome_keys(syndromes: np.ndarray) -> np.ndarray:
    weights = 1 << np.arange(syndromes.shape[1], dtype=np.int64)
    return syndromes.astype(np.int64) @ weights


@dataclass(frozen=True, eq=False)
class LookupDecoder:
    code: StabilizerGroup
    corrections: np.ndarray

    def correction(self, syndrome) -> str:
        key = int(syndrome_keys(np.atleast_2d(np.asarray(syndrome, dtype=np.uint8)))[0])
        return pauli_to_string(self.corrections[key])

    def table(self) -> dict:
        m = self.code.generators.shape[0]
        return {format(key, f"0{m}b")[::-1]: pauli_to_string(c) for key, c in enumerate(self.corrections)}


def build_lookup_decoder(code: StabilizerGroup, max_checks: int = None) -> LookupDecoder:
    """Minimum-weight correction for every syndrome.

    Breadth-first over weight; positions in lexicographic order, letters X < Y < Z,
    the first Pauli reaching a syndrome keeps it.
    """
    max_checks = max_checks or configuration.active().getInt("Stabilizer", "max_decoder_checks")
    n, m = code.n, code.generators.shape[0]
    if m > max_checks:
        raise ResourceLimitError(f"decoder table for {m} checks exceeds the limit of {max_checks}")
    corrections = np.zeros((2**m, 2 * n), dtype=np.uint8)
    filled = np.zeros(2**m, dtype=bool)
    filled[0] = True
    remaining = 2**m - 1
    for w in range(1, n + 1):
        if remaining == 0:
            break
        for positions in itertools.combinations(range(n), w):
            for letters in itertools.product(_LETTERS, repeat=w):
                error = np.zeros(2 * n, dtype=np.uint8)
                for q, letter in zip(positions, letters):
                    error[q], error[n + q] = _BITS[letter]
                key = int(syndrome_keys(symplectic_product(error, code.generators))[0])
                if not filled[key]:
                    filled[key] = True
                    corrections[key] = error
                    remaining -= 1
            if remaining == 0:
                break
    if remaining:
        raise QweError(f"{remaining} syndromes of {code.name or 'the code'} are unreachable")
    logger.debug(f"Built lookup decoder with {2**m} entries for {code.name or 'code'}")
    corrections.setflags(write=False)
    return LookupDecoder(code, corrections)


def correct(samples: BellSampleSet, decoder: LookupDecoder) -> BellSampleSet:
    """Apply the decoded correction to every shot; afterwards every syndrome is zero."""
    require(samples.per_shot, "correction needs per-shot samples")
    keys = syndrome_keys(check_parities(samples.symbols, decoder.code))
    masks = _frame_mask(decoder.corrections[keys], samples.n)
    corrected = samples.symbols ^ masks
    logger.debug(f"Corrected {int(np.count_nonzero(keys))} of {samples.shots} shots")
    return samples.with_symbols(corrected, corrected=True)


def postselect(samples: BellSampleSet, code: StabilizerGroup) -> tuple:
    """Keep the shots with zero syndrome.

    Returns:
        (BellSampleSet, retained fraction)
    """
    require(samples.per_shot, "postselection needs per-shot samples")
    keep = ~np.any(check_parities(samples.symbols, code), axis=1)
    fraction = float(np.count_nonzero(keep)) / samples.shots if samples.shots else 0.0
    logger.debug(f"Postselection keeps {int(np.count_nonzero(keep))} of {samples.shots} shots")
    return samples.with_symbols(samples.symbols[keep], postselected=True, retained_fraction=fraction), fraction
