"""H2 electronic structure in the STO-3G minimal basis, from scratch.

Pipeline: closed-form integrals over contracted s-type Gaussians (Boys
function for the Coulomb ones) -> restricted Hartree-Fock, solved exactly by
symmetry (bonding/antibonding combinations; no SCF iterations are needed for
two electrons in two symmetric basis functions) -> second-quantized
Hamiltonian over four spin orbitals -> Jordan-Wigner mapping to a 4-qubit
Pauli sum -> dense exact diagonalization as the ground-truth oracle.

Conventions: bond distances are accepted in Angstrom and converted to bohr
internally; all energies are in Hartree.  Spin orbitals are ordered
(g-up, g-down, u-up, u-down) so the Hartree-Fock determinant is the
computational basis state |1100>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from .statevec import PauliString, PauliSum, Statevector

ANGSTROM_TO_BOHR = 1.0 / 0.529177210903

# STO-3G hydrogen 1s: standard published exponents/contractions (already
# scaled for zeta = 1.24); coefficients refer to normalized primitives.
STO3G_H_EXPONENTS = (3.425250914, 0.6239137298, 0.1688554040)
STO3G_H_COEFFS = (0.1543289673, 0.5353281423, 0.4446345422)

N_SPIN_ORBITALS = 4
MIN_DISTANCE = 0.725
MAX_DISTANCE = 2.5

COEFF_PRUNE_TOL = 1e-12


@dataclass(frozen=True)
class MoleculeSpec:
    """H2 at a given internuclear separation (Angstrom) in STO-3G."""

    bond_distance: float
    name: str = "H2"
    basis: str = "STO-3G"

    def __post_init__(self) -> None:
        if self.name != "H2":
            raise ValueError("only H2 is supported")
        if self.basis != "STO-3G":
            raise ValueError("only the STO-3G basis is supported")
        if not MIN_DISTANCE <= self.bond_distance <= MAX_DISTANCE:
            raise ValueError(
                f"bond distance {self.bond_distance} outside supported interval "
                f"[{MIN_DISTANCE}, {MAX_DISTANCE}] Angstrom"
            )


def boys_f0(t: float) -> float:
    """Zeroth Boys function F0(t) = integral_0^1 exp(-t u^2) du."""
    if t < 1e-12:
        return 1.0 - t / 3.0
    st = math.sqrt(t)
    return 0.5 * math.sqrt(math.pi / t) * math.erf(st)


def _primitive_norm(alpha: float) -> float:
    return (2.0 * alpha / math.pi) ** 0.75


class _Contracted:
    """Contracted s-orbital: coefficients over normalized primitives at a 1-D center."""

    def __init__(self, center: float):
        self.center = center
        self.alphas = np.array(STO3G_H_EXPONENTS)
        norms = np.array([_primitive_norm(a) for a in self.alphas])
        coeffs = np.array(STO3G_H_COEFFS) * norms
        # Renormalize so the contracted self-overlap is exactly 1.
        self_overlap = 0.0
        for ca, aa in zip(coeffs, self.alphas):
            for cb, ab in zip(coeffs, self.alphas):
                self_overlap += ca * cb * _s00(aa, ab, 0.0)
        self.coeffs = coeffs / math.sqrt(self_overlap)


def _s00(alpha: float, beta: float, dist: float) -> float:
    """Overlap of two unnormalized unit-coefficient s-Gaussians."""
    p = alpha + beta
    mu = alpha * beta / p
    return (math.pi / p) ** 1.5 * math.exp(-mu * dist * dist)


def _t00(alpha: float, beta: float, dist: float) -> float:
    p = alpha + beta
    mu = alpha * beta / p
    return mu * (3.0 - 2.0 * mu * dist * dist) * (math.pi / p) ** 1.5 * math.exp(-mu * dist * dist)


def _v00(alpha: float, beta: float, center_a: float, center_b: float, nucleus: float) -> float:
    """Nuclear attraction (single unit-charge nucleus), unnormalized primitives."""
    p = alpha + beta
    mu = alpha * beta / p
    dist = center_a - center_b
    p_center = (alpha * center_a + beta * center_b) / p
    rpc2 = (p_center - nucleus) ** 2
    return -(2.0 * math.pi / p) * math.exp(-mu * dist * dist) * boys_f0(p * rpc2)


def _eri0000(
    alpha: float, beta: float, gamma: float, delta: float,
    a: float, b: float, c: float, d: float,
) -> float:
    """(ab|cd) over unnormalized s primitives at 1-D centers a, b, c, d."""
    p = alpha + beta
    q = gamma + delta
    mu_ab = alpha * beta / p
    mu_cd = gamma * delta / q
    p_center = (alpha * a + beta * b) / p
    q_center = (gamma * c + delta * d) / q
    rpq2 = (p_center - q_center) ** 2
    pref = 2.0 * math.pi**2.5 / (p * q * math.sqrt(p + q))
    return (
        pref
        * math.exp(-mu_ab * (a - b) ** 2 - mu_cd * (c - d) ** 2)
        * boys_f0(p * q / (p + q) * rpq2)
    )


@dataclass(frozen=True)
class IntegralSet:
    """AO-basis integrals for H2: two 1s functions, atoms on the z-axis."""

    distance_bohr: float
    overlap: np.ndarray  # (2, 2)
    kinetic: np.ndarray  # (2, 2)
    nuclear: np.ndarray  # (2, 2), both nuclei summed
    two_electron: np.ndarray  # (2, 2, 2, 2), chemists' notation (ij|kl)


def sto3g_integrals(distance: float) -> IntegralSet:
    """Integrals for H2 at the given internuclear separation in Angstrom."""
    if distance <= 0:
        raise ValueError("distance must be positive")
    r = distance * ANGSTROM_TO_BOHR
    basis = [_Contracted(0.0), _Contracted(r)]
    nuclei = [0.0, r]

    s = np.zeros((2, 2))
    t = np.zeros((2, 2))
    v = np.zeros((2, 2))
    for i, j in product(range(2), repeat=2):
        fi, fj = basis[i], basis[j]
        dist = fi.center - fj.center
        for ca, aa in zip(fi.coeffs, fi.alphas):
            for cb, ab in zip(fj.coeffs, fj.alphas):
                s[i, j] += ca * cb * _s00(aa, ab, dist)
                t[i, j] += ca * cb * _t00(aa, ab, dist)
                for nucleus in nuclei:
                    v[i, j] += ca * cb * _v00(aa, ab, fi.center, fj.center, nucleus)

    eri = np.zeros((2, 2, 2, 2))
    for i, j, k, l in product(range(2), repeat=4):
        fi, fj, fk, fl = basis[i], basis[j], basis[k], basis[l]
        acc = 0.0
        for ca, aa in zip(fi.coeffs, fi.alphas):
            for cb, ab in zip(fj.coeffs, fj.alphas):
                for cc, ac in zip(fk.coeffs, fk.alphas):
                    for cd, ad in zip(fl.coeffs, fl.alphas):
                        acc += ca * cb * cc * cd * _eri0000(
                            aa, ab, ac, ad, fi.center, fj.center, fk.center, fl.center
                        )
        eri[i, j, k, l] = acc

    return IntegralSet(r, s, t, v, eri)


@dataclass(frozen=True)
class HartreeFockResult:
    coefficients: np.ndarray  # (2, 2); columns = bonding, antibonding MOs
    orbital_energies: np.ndarray  # (2,)
    hf_energy: float  # total, includes nuclear repulsion
    nuclear_repulsion: float


def hartree_fock(spec: MoleculeSpec) -> HartreeFockResult:
    """Restricted HF for H2, exact by symmetry (no SCF needed).

    The bonding/antibonding combinations diagonalize every symmetric 2x2
    operator in this basis, so the occupied orbital is the symmetric one at
    all distances.
    """
    ints = sto3g_integrals(spec.bond_distance)
    s12 = ints.overlap[0, 1]
    h_core = ints.kinetic + ints.nuclear

    c_g = np.array([1.0, 1.0]) / math.sqrt(2.0 * (1.0 + s12))
    c_u = np.array([1.0, -1.0]) / math.sqrt(2.0 * (1.0 - s12))
    coeffs = np.column_stack([c_g, c_u])

    h_mo = coeffs.T @ h_core @ coeffs
    eri_mo = np.einsum("ip,jq,kr,ls,ijkl->pqrs", coeffs, coeffs, coeffs, coeffs, ints.two_electron)

    e_nuc = 1.0 / ints.distance_bohr
    hf_energy = 2.0 * h_mo[0, 0] + eri_mo[0, 0, 0, 0] + e_nuc
    eps_g = h_mo[0, 0] + eri_mo[0, 0, 0, 0]
    eps_u = h_mo[1, 1] + 2.0 * eri_mo[1, 1, 0, 0] - eri_mo[1, 0, 1, 0]
    return HartreeFockResult(coeffs, np.array([eps_g, eps_u]), float(hf_energy), float(e_nuc))


# ---------------------------------------------------------------------------
# Fermionic operators -> Pauli strings (Jordan-Wigner)
# ---------------------------------------------------------------------------

# Single-qubit products: (left, right) -> (phase, result).
_PAULI_MUL = {
    ("I", "I"): (1, "I"), ("I", "X"): (1, "X"), ("I", "Y"): (1, "Y"), ("I", "Z"): (1, "Z"),
    ("X", "I"): (1, "X"), ("X", "X"): (1, "I"), ("X", "Y"): (1j, "Z"), ("X", "Z"): (-1j, "Y"),
    ("Y", "I"): (1, "Y"), ("Y", "X"): (-1j, "Z"), ("Y", "Y"): (1, "I"), ("Y", "Z"): (1j, "X"),
    ("Z", "I"): (1, "Z"), ("Z", "X"): (1j, "Y"), ("Z", "Y"): (-1j, "X"), ("Z", "Z"): (1, "I"),
}

PauliTerms = dict[str, complex]


def _multiply_strings(a: str, b: str) -> tuple[complex, str]:
    phase: complex = 1
    out = []
    for ca, cb in zip(a, b):
        ph, op = _PAULI_MUL[(ca, cb)]
        phase *= ph
        out.append(op)
    return phase, "".join(out)


def _terms_product(a: PauliTerms, b: PauliTerms) -> PauliTerms:
    out: PauliTerms = {}
    for ops_a, ca in a.items():
        for ops_b, cb in b.items():
            phase, ops = _multiply_strings(ops_a, ops_b)
            out[ops] = out.get(ops, 0.0) + phase * ca * cb
    return out


def _ladder(p: int, dagger: bool, n_qubits: int = N_SPIN_ORBITALS) -> PauliTerms:
    """a_p (or a_p^dagger): (prod_{q<p} Z_q) (X_p +- i Y_p) / 2."""
    prefix = "Z" * p
    suffix = "I" * (n_qubits - p - 1)
    sign = -0.5j if dagger else 0.5j
    return {prefix + "X" + suffix: 0.5, prefix + "Y" + suffix: sign}


def ladder_product_to_pauli(ops: list[tuple[int, bool]], n_qubits: int = N_SPIN_ORBITALS) -> PauliTerms:
    """Pauli expansion of a product of ladder operators [(index, dagger), ...]."""
    acc: PauliTerms = {"I" * n_qubits: 1.0}
    for index, dagger in ops:
        acc = _terms_product(acc, _ladder(index, dagger, n_qubits))
    return acc


def _accumulate(acc: PauliTerms, terms: PauliTerms, scale: complex) -> None:
    for ops, coeff in terms.items():
        acc[ops] = acc.get(ops, 0.0) + scale * coeff


def _terms_to_pauli_sum(acc: PauliTerms, n_qubits: int = N_SPIN_ORBITALS) -> PauliSum:
    strings = []
    for ops, coeff in sorted(acc.items()):
        if abs(coeff) < COEFF_PRUNE_TOL:
            continue
        if abs(coeff.imag) > 1e-10:
            raise ValueError(f"non-real Pauli coefficient {coeff} on {ops}")
        strings.append(PauliString(ops, coeff.real))
    if not strings:
        strings.append(PauliString("I" * n_qubits, 0.0))
    return PauliSum(strings)


@dataclass(frozen=True)
class QubitHamiltonian:
    """Jordan-Wigner image of the molecular Hamiltonian (total energies)."""

    n_qubits: int
    pauli_sum: PauliSum
    nuclear_repulsion: float
    hf_energy: float
    bond_distance: float  # Angstrom


def jordan_wigner(spec: MoleculeSpec) -> QubitHamiltonian:
    """4-qubit Pauli Hamiltonian in the HF molecular-orbital basis.

    The identity term absorbs the nuclear repulsion so expectation values
    are total energies, directly comparable with ``hf_energy``.
    """
    ints = sto3g_integrals(spec.bond_distance)
    hf = hartree_fock(spec)
    coeffs = hf.coefficients
    h_mo = coeffs.T @ (ints.kinetic + ints.nuclear) @ coeffs
    eri_mo = np.einsum("ip,jq,kr,ls,ijkl->pqrs", coeffs, coeffs, coeffs, coeffs, ints.two_electron)

    def spatial(p: int) -> int:
        return p // 2

    def spin(p: int) -> int:
        return p % 2

    acc: PauliTerms = {"I" * N_SPIN_ORBITALS: complex(hf.nuclear_repulsion)}

    for p, q in product(range(N_SPIN_ORBITALS), repeat=2):
        if spin(p) != spin(q):
            continue
        coeff = h_mo[spatial(p), spatial(q)]
        if abs(coeff) < COEFF_PRUNE_TOL:
            continue
        _accumulate(acc, ladder_product_to_pauli([(p, True), (q, False)]), coeff)

    # 1/2 sum <pq|rs> a_p^+ a_q^+ a_s a_r with physicists' <pq|rs> built from
    # chemists' MO integrals: <pq|rs> = (P(p)P(r)|P(q)P(s)) d(sp,sr) d(sq,ss).
    for p, q, r, s in product(range(N_SPIN_ORBITALS), repeat=4):
        if spin(p) != spin(r) or spin(q) != spin(s):
            continue
        coeff = 0.5 * eri_mo[spatial(p), spatial(r), spatial(q), spatial(s)]
        if abs(coeff) < COEFF_PRUNE_TOL:
            continue
        _accumulate(
            acc,
            ladder_product_to_pauli([(p, True), (q, True), (s, False), (r, False)]),
            coeff,
        )

    return QubitHamiltonian(
        N_SPIN_ORBITALS, _terms_to_pauli_sum(acc), hf.nuclear_repulsion, hf.hf_energy,
        spec.bond_distance,
    )


def number_operator(n_qubits: int = N_SPIN_ORBITALS) -> PauliSum:
    """Total particle number sum_p (1 - Z_p) / 2 under Jordan-Wigner."""
    terms = [PauliString("I" * n_qubits, n_qubits / 2.0)]
    terms += [PauliString.single("Z", p, n_qubits, -0.5) for p in range(n_qubits)]
    return PauliSum(terms)


def hartree_fock_state(n_qubits: int = N_SPIN_ORBITALS, n_electrons: int = 2) -> Statevector:
    """|1100>: the HF determinant as a computational basis state."""
    bits = "1" * n_electrons + "0" * (n_qubits - n_electrons)
    return Statevector.from_bits(bits)


@dataclass(frozen=True)
class ExactGround:
    e0: float
    ground_state: Statevector


def exact_ground(h: QubitHamiltonian) -> ExactGround:
    """Lowest eigenvalue/eigenvector of the dense Hamiltonian."""
    vals, vecs = h.pauli_sum.eigensystem()
    vec = vecs[:, 0]
    return ExactGround(float(vals[0]), Statevector(h.n_qubits, vec / np.linalg.norm(vec)))
