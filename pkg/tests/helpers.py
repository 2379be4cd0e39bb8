"""Shared test utilities."""

import numpy as np

from qbrush.statevec import Statevector


def haar_state(n_qubits: int, rng: np.random.Generator) -> Statevector:
    """Haar-random pure state (normalized complex Gaussian vector)."""
    v = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return Statevector(n_qubits, v / np.linalg.norm(v))


def random_pauli_sum(n_qubits: int, n_terms: int, rng: np.random.Generator):
    from qbrush.statevec import PauliString, PauliSum

    terms = []
    for _ in range(n_terms):
        ops = "".join(rng.choice(list("IXYZ")) for _ in range(n_qubits))
        terms.append(PauliString(ops, float(rng.normal())))
    return PauliSum(terms)
