"""Dense statevector simulation for small qubit registers (n <= 4).

Conventions used throughout the package:

* Qubit 0 is the most significant bit of the computational-basis index,
  i.e. ``|q0 q1 ... q_{n-1}>`` sits at index ``q0*2^{n-1} + ... + q_{n-1}``.
* Rotation gates follow ``R_A(theta) = exp(-i * theta * A / 2)``.

All types are value-like: operations never mutate their inputs and the
amplitude buffers are marked read-only, so instances can be shared freely
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Sequence

import numpy as np

MAX_QUBITS = 4

NORM_TOL = 1e-10

PAULI_MATRICES = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex),
    "Y": np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex),
    "Z": np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex),
}


class DimensionMismatchError(ValueError):
    """Raised when operands act on different qubit counts."""


class HermiticityError(RuntimeError):
    """Raised when a dense realization that must be Hermitian is not."""


def _readonly(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Statevector:
    """Unit-norm complex amplitude vector for ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        if not 1 <= self.n_qubits <= MAX_QUBITS:
            raise ValueError(f"n_qubits must be in [1, {MAX_QUBITS}], got {self.n_qubits}")
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.n_qubits:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {2**self.n_qubits}"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > 1e-6:
            raise ValueError(f"statevector must be unit norm, got {nrm!r}")
        object.__setattr__(self, "amplitudes", _readonly(amps))

    @classmethod
    def zero(cls, n_qubits: int) -> "Statevector":
        """|00...0>."""
        amps = np.zeros(2**n_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(n_qubits, amps)

    @classmethod
    def from_bits(cls, bits: str) -> "Statevector":
        """Computational basis state from an MSB-first bit string, e.g. '1100'."""
        n = len(bits)
        amps = np.zeros(2**n, dtype=complex)
        amps[int(bits, 2)] = 1.0
        return cls(n, amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per qubit (axis 0 = qubit 0)."""
        return self.amplitudes.reshape((2,) * self.n_qubits)


@dataclass(frozen=True)
class PauliString:
    """Weighted tensor product of Pauli operators, e.g. 0.5 * XIZY.

    ``ops`` is a string over {I, X, Y, Z} with one letter per qubit,
    qubit 0 first.  The coefficient is real, so the operator is Hermitian.
    """

    ops: str
    coefficient: float = 1.0

    def __post_init__(self) -> None:
        if not self.ops or any(c not in "IXYZ" for c in self.ops):
            raise ValueError(f"invalid Pauli string {self.ops!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def n_qubits(self) -> int:
        return len(self.ops)

    @classmethod
    def single(cls, axis: str, qubit: int, n_qubits: int, coefficient: float = 1.0) -> "PauliString":
        """A single-qubit Pauli embedded in an n-qubit register."""
        if not 0 <= qubit < n_qubits:
            raise ValueError(f"qubit {qubit} out of range for {n_qubits} qubits")
        ops = "".join(axis if k == qubit else "I" for k in range(n_qubits))
        return cls(ops, coefficient)

    def to_matrix(self) -> np.ndarray:
        mats = [PAULI_MATRICES[c] for c in self.ops]
        return self.coefficient * reduce(np.kron, mats)


class PauliSum:
    """Real-weighted sum of Pauli strings over a common register.

    Treated as immutable; the dense matrix and its eigendecomposition are
    cached on first use (filling the cache is idempotent, so this stays
    thread-safe).
    """

    def __init__(self, terms: Iterable[PauliString]):
        terms = tuple(terms)
        if not terms:
            raise ValueError("PauliSum needs at least one term")
        n = terms[0].n_qubits
        if any(t.n_qubits != n for t in terms):
            raise DimensionMismatchError("all terms must share one qubit count")
        self.terms = terms
        self._n_qubits = n
        self._matrix: np.ndarray | None = None
        self._eig: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def n_qubits(self) -> int:
        return self._n_qubits

    def __len__(self) -> int:
        return len(self.terms)

    def __repr__(self) -> str:
        inner = " + ".join(f"{t.coefficient:+.6g}*{t.ops}" for t in self.terms[:4])
        more = "" if len(self.terms) <= 4 else f" + ... ({len(self.terms)} terms)"
        return f"PauliSum({inner}{more})"

    def to_matrix(self) -> np.ndarray:
        if self._matrix is None:
            dim = 2**self._n_qubits
            mat = np.zeros((dim, dim), dtype=complex)
            for t in self.terms:
                mat += t.to_matrix()
            self._matrix = _readonly(mat)
        return self._matrix

    def eigensystem(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues and eigenvectors of the dense realization.

        Raises HermiticityError if the matrix is not Hermitian to 1e-12.
        """
        if self._eig is None:
            mat = self.to_matrix()
            dev = np.max(np.abs(mat - mat.conj().T))
            if dev >= 1e-12:
                raise HermiticityError(f"dense realization deviates from Hermitian by {dev:g}")
            vals, vecs = np.linalg.eigh(mat)
            self._eig = (_readonly(vals), _readonly(vecs))
        return self._eig


def _check_same_register(a_qubits: int, b_qubits: int) -> None:
    if a_qubits != b_qubits:
        raise DimensionMismatchError(f"qubit counts differ: {a_qubits} vs {b_qubits}")


def _apply_2x2(amps: np.ndarray, mat: np.ndarray, qubit: int, n_qubits: int) -> np.ndarray:
    """Apply a 2x2 matrix to one qubit of a flat amplitude vector."""
    pre = 1 << qubit  # qubit 0 is the MSB, so `qubit` higher bits precede it
    post = amps.size >> (qubit + 1)
    t = amps.reshape(pre, 2, post)
    a, b = t[:, 0, :], t[:, 1, :]
    out = np.empty_like(t)
    out[:, 0, :] = mat[0, 0] * a + mat[0, 1] * b
    out[:, 1, :] = mat[1, 0] * a + mat[1, 1] * b
    return out.reshape(-1)


def rotation_matrix(axis: str, angle: float) -> np.ndarray:
    """2x2 matrix of R_axis(angle) = exp(-i*angle*axis/2)."""
    half = 0.5 * angle
    c, s = np.cos(half), np.sin(half)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]])
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=complex)
    if axis == "Z":
        return np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]])
    raise ValueError(f"rotation axis must be X, Y or Z, got {axis!r}")


def apply_rotation(state: Statevector, axis: str, qubit: int, angle: float) -> Statevector:
    """Rotate one qubit: R_axis(angle) = exp(-i*angle*axis/2)."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    if not np.isfinite(angle):
        raise ValueError("rotation angle must be finite")
    amps = _apply_2x2(state.amplitudes, rotation_matrix(axis, angle), qubit, state.n_qubits)
    return Statevector(state.n_qubits, amps)


def apply_pauli(state_amps: np.ndarray, axis: str, qubit: int, n_qubits: int) -> np.ndarray:
    """Raw Pauli application on a flat amplitude buffer (no wrapping)."""
    return _apply_2x2(state_amps, PAULI_MATRICES[axis], qubit, n_qubits)


def expectation(state: Statevector, op: PauliSum | PauliString) -> float:
    """Real expectation value <psi|op|psi>."""
    if isinstance(op, PauliString):
        op = PauliSum([op])
    _check_same_register(state.n_qubits, op.n_qubits)
    val = np.vdot(state.amplitudes, op.to_matrix() @ state.amplitudes)
    if abs(val.imag) > NORM_TOL:
        raise HermiticityError(f"expectation has imaginary residue {val.imag:g}")
    return float(val.real)


def fidelity(a: Statevector, b: Statevector) -> float:
    """|<a|b>|^2, in [0, 1]; equals 1 iff the states match up to global phase."""
    _check_same_register(a.n_qubits, b.n_qubits)
    return float(abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2)


def exp_apply(h: PauliSum, scale: float, state: Statevector) -> Statevector:
    """Apply exp(-i * scale * H) to the state via exact eigendecomposition."""
    _check_same_register(state.n_qubits, h.n_qubits)
    vals, vecs = h.eigensystem()
    phases = np.exp(-1j * scale * vals)
    amps = vecs @ (phases * (vecs.conj().T @ state.amplitudes))
    return Statevector(state.n_qubits, amps)


def reduced_density_matrix(state: Statevector, qubit: int) -> np.ndarray:
    """2x2 reduced density matrix of one qubit."""
    if not 0 <= qubit < state.n_qubits:
        raise ValueError(f"qubit {qubit} out of range for {state.n_qubits} qubits")
    t = np.moveaxis(state.tensor(), qubit, 0).reshape(2, -1)
    return t @ t.conj().T


def reduced_bloch(state: Statevector, qubit: int) -> tuple[float, float, float]:
    """Bloch vector (<X>, <Y>, <Z>) of one qubit's reduced state."""
    rho = reduced_density_matrix(state, qubit)
    x = 2.0 * rho[0, 1].real
    y = -2.0 * rho[0, 1].imag
    z = (rho[0, 0] - rho[1, 1]).real
    return (float(x), float(y), float(z))
