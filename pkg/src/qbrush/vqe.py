"""VQE for H2 with a disentangled-UCC ansatz, recording the full trajectory.

The ansatz applies exp(theta_j G_j) factors in a fixed ("standard") order:
single g-up -> u-up, single g-down -> u-down, then the paired double
excitation.  Each generator G = T - T^dagger is anti-Hermitian, so every
factor is unitary and the state stays in the two-particle sector.

The optimizer is a monotone line search: descent directions come from a
BFGS-updated inverse-Hessian model (plain gradient descent needs far more
iterations than the default budget near the minimum), and an Armijo
backtracking rule accepts only strictly energy-decreasing steps.  Every
accepted iterate (eta_i, f_i) is recorded, which makes the energy sequence
non-increasing by construction.

Families of recorded trajectories serialize to JSON, one file per bond
distance, named ``H2_STO-3G_<distance:.6f>.json`` plus an ``index.json``
listing all distances in a data directory.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .h2chem import (
    MAX_DISTANCE,
    MIN_DISTANCE,
    MoleculeSpec,
    QubitHamiltonian,
    exact_ground,
    hartree_fock_state,
    jordan_wigner,
    ladder_product_to_pauli,
    _terms_to_pauli_sum,
)
from .statevec import PauliSum, Statevector, exp_apply, expectation

SCHEMA_VERSION = 1
ANSATZ_NAME = "ducc-standard"
MAPPING_NAME = "jordan-wigner"
FAMILY_FILE_TEMPLATE = "H2_STO-3G_{distance:.6f}.json"
INDEX_FILE = "index.json"

GRID_SIZE = 1000


class FamilyParseError(ValueError):
    """A family document violates the schema; ``field`` names the offender."""

    def __init__(self, field_name: str, message: str):
        super().__init__(f"field {field_name!r}: {message}")
        self.field = field_name


class FamilyStoreEmptyError(RuntimeError):
    """The family data directory holds no usable families."""


# ---------------------------------------------------------------------------
# Ansatz
# ---------------------------------------------------------------------------


def _anti_hermitian_generator(creators: list[int], annihilators: list[int]) -> PauliSum:
    """i * (T - T^dagger) as a real-coefficient Pauli sum.

    exp(theta * (T - T^dagger)) is then exp_apply(result, theta).
    """
    t_ops = [(p, True) for p in creators] + [(p, False) for p in annihilators]
    tdag_ops = [(p, True) for p in reversed(annihilators)] + [(p, False) for p in reversed(creators)]
    acc: dict[str, complex] = {}
    for ops_str, coeff in ladder_product_to_pauli(t_ops).items():
        acc[ops_str] = acc.get(ops_str, 0.0) + 1j * coeff
    for ops_str, coeff in ladder_product_to_pauli(tdag_ops).items():
        acc[ops_str] = acc.get(ops_str, 0.0) - 1j * coeff
    return _terms_to_pauli_sum(acc)


@dataclass(frozen=True)
class DuccAnsatz:
    """Fixed three-parameter disentangled-UCC ansatz for H2 (4 spin orbitals)."""

    n_qubits: int = 4
    excitation_labels: tuple[str, ...] = ("single 0->2", "single 1->3", "double 01->23")
    generators: tuple[PauliSum, ...] = field(default=None, repr=False)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.generators is None:
            gens = (
                _anti_hermitian_generator([2], [0]),
                _anti_hermitian_generator([3], [1]),
                _anti_hermitian_generator([2, 3], [1, 0]),
            )
            object.__setattr__(self, "generators", gens)

    @property
    def n_parameters(self) -> int:
        return len(self.generators)

    def apply(self, params: np.ndarray, reference: Statevector) -> Statevector:
        params = np.asarray(params, dtype=float).reshape(-1)
        if params.size != self.n_parameters:
            raise ValueError(f"expected {self.n_parameters} parameters, got {params.size}")
        if reference.n_qubits != self.n_qubits:
            raise ValueError("reference state register size mismatch")
        state = reference
        for theta, gen in zip(params, self.generators):
            state = exp_apply(gen, theta, state)
        return state


def apply_ansatz(params: np.ndarray, reference: Statevector, ansatz: DuccAnsatz | None = None) -> Statevector:
    """U(eta)|reference> with the standard-ordered DUCC factors."""
    return (ansatz or DuccAnsatz()).apply(params, reference)


# ---------------------------------------------------------------------------
# VQE driver
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VqeConfig:
    max_iters: int = 200
    grad_tol: float = 1e-7
    seed: int = 0
    fd_step: float = 1e-6
    trajectory_cap: int = 256


@dataclass(frozen=True)
class CircuitFamily:
    """One VQE run: parameter vectors eta_i and energies f_i, plus metadata."""

    molecule: str
    distance: float
    basis: str
    mapping: str
    ansatz: str
    n_qubits: int
    parameters: tuple[tuple[float, ...], ...]
    energies: tuple[float, ...]
    hf_energy: float
    exact_e0: float
    config: VqeConfig = VqeConfig()

    def __post_init__(self) -> None:
        if len(self.parameters) != len(self.energies):
            raise ValueError("parameters and energies must have equal length")
        if not self.parameters:
            raise ValueError("a family needs at least one entry")

    @property
    def size(self) -> int:
        return len(self.parameters)


def _energy_fn(h: QubitHamiltonian, ansatz: DuccAnsatz):
    reference = hartree_fock_state(h.n_qubits)

    def energy(params: np.ndarray) -> float:
        return expectation(ansatz.apply(params, reference), h.pauli_sum)

    return energy


def _fd_gradient(energy, params: np.ndarray, step: float) -> np.ndarray:
    grad = np.zeros_like(params)
    for i in range(params.size):
        plus, minus = params.copy(), params.copy()
        plus[i] += step
        minus[i] -= step
        grad[i] = (energy(plus) - energy(minus)) / (2.0 * step)
    return grad


def _downsample(indices_len: int, cap: int) -> np.ndarray:
    """Uniform subsequence keeping the first and last entries."""
    if indices_len <= cap:
        return np.arange(indices_len)
    return np.unique(np.round(np.linspace(0, indices_len - 1, cap)).astype(int))


def run_vqe(h: QubitHamiltonian, config: VqeConfig = VqeConfig()) -> CircuitFamily:
    """Minimize <psi(eta)|H|psi(eta)> from eta = 0, recording every accepted step."""
    ansatz = DuccAnsatz()
    energy = _energy_fn(h, ansatz)

    params = np.zeros(ansatz.n_parameters)
    value = energy(params)
    if not math.isfinite(value):
        raise RuntimeError(f"non-finite energy {value!r} at the HF reference")
    trajectory = [(params.copy(), value)]

    h_inv = np.eye(params.size)
    grad = _fd_gradient(energy, params, config.fd_step)
    armijo = 1e-4

    for _ in range(config.max_iters):
        if np.max(np.abs(grad)) <= config.grad_tol:
            break
        direction = -h_inv @ grad
        slope = float(direction @ grad)
        if slope >= 0.0:  # model lost descent; reset to steepest descent
            h_inv = np.eye(params.size)
            direction = -grad
            slope = -float(grad @ grad)

        alpha, accepted = 1.0, None
        for _ in range(60):
            candidate = params + alpha * direction
            cand_value = energy(candidate)
            if not math.isfinite(cand_value):
                raise RuntimeError(f"non-finite energy {cand_value!r} during line search")
            if cand_value <= value + armijo * alpha * slope:
                accepted = (candidate, cand_value)
                break
            alpha *= 0.5
        if accepted is None:
            break

        new_params, new_value = accepted
        new_grad = _fd_gradient(energy, new_params, config.fd_step)
        s = new_params - params
        y = new_grad - grad
        ys = float(y @ s)
        if ys > 1e-12:
            rho = 1.0 / ys
            eye = np.eye(params.size)
            h_inv = (eye - rho * np.outer(s, y)) @ h_inv @ (eye - rho * np.outer(y, s)) + rho * np.outer(s, s)
        params, value, grad = new_params, new_value, new_grad
        trajectory.append((params.copy(), value))

    keep = _downsample(len(trajectory), config.trajectory_cap)
    parameters = tuple(tuple(float(x) for x in trajectory[i][0]) for i in keep)
    energies = tuple(float(trajectory[i][1]) for i in keep)
    return CircuitFamily(
        molecule="H2",
        distance=float(h.bond_distance),
        basis="STO-3G",
        mapping=MAPPING_NAME,
        ansatz=ANSATZ_NAME,
        n_qubits=h.n_qubits,
        parameters=parameters,
        energies=energies,
        hf_energy=float(h.hf_energy),
        exact_e0=float(exact_ground(h).e0),
        config=config,
    )


def solve_distance(distance: float, config: VqeConfig = VqeConfig()) -> CircuitFamily:
    """Full pipeline: integrals -> HF -> Jordan-Wigner -> VQE at one distance."""
    return run_vqe(jordan_wigner(MoleculeSpec(distance)), config)


# ---------------------------------------------------------------------------
# Serialization: floats emitted with 17 significant digits (lossless)
# ---------------------------------------------------------------------------


def _emit(value, indent: int = 0) -> str:
    pad = "  " * indent
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return json.dumps(value)
    if isinstance(value, (list, tuple)):
        if not value:
            return "[]"
        inner = ", ".join(_emit(v) for v in value)
        if len(inner) <= 100 and "\n" not in inner:
            return f"[{inner}]"
        lines = ",\n".join("  " * (indent + 1) + _emit(v, indent + 1) for v in value)
        return f"[\n{lines}\n{pad}]"
    if isinstance(value, dict):
        lines = ",\n".join(
            f"{'  ' * (indent + 1)}{json.dumps(k)}: {_emit(v, indent + 1)}" for k, v in value.items()
        )
        return f"{{\n{lines}\n{pad}}}"
    raise TypeError(f"cannot serialize {type(value)}")


def serialize_family(family: CircuitFamily) -> str:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "molecule": family.molecule,
        "distance": family.distance,
        "basis": family.basis,
        "mapping": family.mapping,
        "ansatz": family.ansatz,
        "n_qubits": family.n_qubits,
        "parameters": [list(p) for p in family.parameters],
        "energies": list(family.energies),
        "hf_energy": family.hf_energy,
        "exact_e0": family.exact_e0,
        "config": {
            "max_iters": family.config.max_iters,
            "grad_tol": family.config.grad_tol,
            "seed": family.config.seed,
            "fd_step": family.config.fd_step,
            "trajectory_cap": family.config.trajectory_cap,
        },
    }
    return _emit(doc) + "\n"


def _require(doc: dict, name: str, kinds) -> object:
    if name not in doc:
        raise FamilyParseError(name, "missing")
    value = doc[name]
    if not isinstance(value, kinds):
        raise FamilyParseError(name, f"expected {kinds}, got {type(value).__name__}")
    return value


def deserialize_family(text: str | bytes | dict) -> CircuitFamily:
    if isinstance(text, dict):
        doc = text
    else:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise FamilyParseError("<document>", f"invalid JSON: {err}") from err
    if not isinstance(doc, dict):
        raise FamilyParseError("<document>", "top level must be an object")

    n_qubits = int(_require(doc, "n_qubits", int))
    raw_params = _require(doc, "parameters", list)
    parameters = []
    for i, row in enumerate(raw_params):
        if not isinstance(row, list) or not all(isinstance(x, (int, float)) for x in row):
            raise FamilyParseError("parameters", f"entry {i} is not a list of numbers")
        parameters.append(tuple(float(x) for x in row))
    raw_energies = _require(doc, "energies", list)
    if not all(isinstance(x, (int, float)) for x in raw_energies):
        raise FamilyParseError("energies", "entries must be numbers")
    if len(parameters) != len(raw_energies):
        raise FamilyParseError("energies", "length differs from parameters")

    cfg_doc = doc.get("config", {})
    if not isinstance(cfg_doc, dict):
        raise FamilyParseError("config", "must be an object")
    config = VqeConfig(
        max_iters=int(cfg_doc.get("max_iters", 200)),
        grad_tol=float(cfg_doc.get("grad_tol", 1e-7)),
        seed=int(cfg_doc.get("seed", 0)),
        fd_step=float(cfg_doc.get("fd_step", 1e-6)),
        trajectory_cap=int(cfg_doc.get("trajectory_cap", 256)),
    )
    return CircuitFamily(
        molecule=str(_require(doc, "molecule", str)),
        distance=float(_require(doc, "distance", (int, float))),
        basis=str(_require(doc, "basis", str)),
        mapping=str(_require(doc, "mapping", str)),
        ansatz=str(_require(doc, "ansatz", str)),
        n_qubits=n_qubits,
        parameters=tuple(parameters),
        energies=tuple(float(x) for x in raw_energies),
        hf_energy=float(_require(doc, "hf_energy", (int, float))),
        exact_e0=float(_require(doc, "exact_e0", (int, float))),
        config=config,
    )


# ---------------------------------------------------------------------------
# Family store: one JSON per grid distance plus an index
# ---------------------------------------------------------------------------


def grid_distances(count: int = GRID_SIZE, lo: float = MIN_DISTANCE, hi: float = MAX_DISTANCE) -> np.ndarray:
    """Uniform bond-distance grid, endpoints included."""
    if count < 2:
        raise ValueError("grid needs at least 2 points")
    return np.linspace(lo, hi, count)


def family_filename(distance: float) -> str:
    return FAMILY_FILE_TEMPLATE.format(distance=distance)


class FamilyStore:
    """Directory of precomputed family files with nearest-distance lookup."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        self._distances: np.ndarray | None = None
        self._cache: dict[float, CircuitFamily] = {}

    def _scan(self) -> np.ndarray:
        index_path = self.directory / INDEX_FILE
        distances: list[float] = []
        if index_path.exists():
            doc = json.loads(index_path.read_text())
            distances = [float(d) for d in doc.get("distances", [])]
        else:
            for path in sorted(self.directory.glob("H2_STO-3G_*.json")):
                try:
                    distances.append(float(path.stem.rsplit("_", 1)[1]))
                except ValueError:
                    continue
        return np.array(sorted(distances))

    @property
    def distances(self) -> np.ndarray:
        if self._distances is None:
            self._distances = self._scan()
        return self._distances

    def __len__(self) -> int:
        return int(self.distances.size)

    def refresh(self) -> None:
        self._distances = None
        self._cache.clear()

    def nearest_distance(self, requested: float) -> float:
        ds = self.distances
        if ds.size == 0:
            raise FamilyStoreEmptyError(f"no families in {self.directory}")
        return float(ds[int(np.argmin(np.abs(ds - requested)))])

    def load(self, distance: float) -> CircuitFamily:
        if distance not in self._cache:
            path = self.directory / family_filename(distance)
            self._cache[distance] = deserialize_family(path.read_text())
        return self._cache[distance]

    def load_nearest(self, requested: float) -> CircuitFamily:
        return self.load(self.nearest_distance(requested))


def write_index(directory: str | Path, distances) -> Path:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "molecule": "H2",
        "basis": "STO-3G",
        "distances": [float(d) for d in distances],
    }
    path = Path(directory) / INDEX_FILE
    path.write_text(_emit(doc) + "\n")
    return path


def precompute_grid(
    directory: str | Path,
    count: int = GRID_SIZE,
    lo: float = MIN_DISTANCE,
    hi: float = MAX_DISTANCE,
    config: VqeConfig = VqeConfig(),
    workers: int | None = None,
    report=None,
) -> list[float]:
    """Write family files for a uniform grid; existing files are kept.

    Returns the distances computed in this call (resumable: rerunning over a
    complete directory recomputes nothing).  ``report``, if given, is called
    as report(distance, family) after each freshly computed family.  A
    per-distance failure raises PrecomputeError after finishing the rest.
    """
    computed, failures = _precompute(directory, count, lo, hi, config, workers, report)
    if failures:
        raise PrecomputeError(failures)
    return computed


class PrecomputeError(RuntimeError):
    """Some grid distances failed; ``failures`` maps distance -> message."""

    def __init__(self, failures: list[tuple[float, str]]):
        lines = ", ".join(f"{d:.6f}: {msg}" for d, msg in failures)
        super().__init__(f"{len(failures)} distance(s) failed: {lines}")
        self.failures = failures


def _precompute(
    directory, count, lo, hi, config, workers, report
) -> tuple[list[float], list[tuple[float, str]]]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    distances = grid_distances(count, lo, hi)
    todo = [float(d) for d in distances if not (directory / family_filename(d)).exists()]

    computed: list[float] = []
    failures: list[tuple[float, str]] = []

    def handle(distance: float, outcome) -> None:
        if isinstance(outcome, Exception):
            failures.append((distance, str(outcome)))
            return
        (directory / family_filename(distance)).write_text(serialize_family(outcome))
        computed.append(distance)
        if report is not None:
            report(distance, outcome)

    if workers and workers > 1 and len(todo) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=workers) as pool:
            for distance, outcome in pool.map(_solve_for_pool, [(d, config) for d in todo]):
                handle(distance, outcome)
    else:
        for distance in todo:
            try:
                outcome = solve_distance(distance, config)
            except Exception as err:
                outcome = err
            handle(distance, outcome)

    present = [float(d) for d in distances if (directory / family_filename(d)).exists()]
    write_index(directory, present)
    return computed, failures


def _solve_for_pool(args: tuple[float, VqeConfig]):
    distance, config = args
    try:
        return distance, solve_distance(distance, config)
    except Exception as err:  # surfaced by the parent as a per-distance failure
        return distance, err
