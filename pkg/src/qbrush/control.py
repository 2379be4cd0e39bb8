"""Bilinear quantum control for the Steerable effect.

The system evolves under ``H(t) = H0 + sum_i u_i(t) H_i`` with a Heisenberg
chain as drift and one single-qubit Pauli control per qubit.  Time stepping
uses a symmetric (Strang) splitting over N steps of the unit interval:

    step k:  exp(-i H0 dt/2)
             R_1(u_1 dt) ... R_m(u_m dt)   (each factor exp(-i u_i H_i dt/2))
             R_m(u_m dt) ... R_1(u_1 dt)
             exp(-i H0 dt/2)

Control amplitudes are sampled at the step midpoint (k - 1/2) * dt; endpoint
sampling would degrade the scheme to first order for time-varying controls.
The controls themselves come from a small tanh MLP whose parameters are
trained by exact reverse-mode (adjoint) differentiation of the loss

    L = 1 - F(rho(1), target) + energy_weight * dt * sum_{k,i} u_i(t_k)^2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .statevec import (
    PauliString,
    PauliSum,
    Statevector,
    _apply_2x2,
    apply_pauli,
    fidelity,
    rotation_matrix,
)

CONTROL_AXES = "XYZ"  # control k (1-based) uses axis (k-1) mod 3 on qubit k-1


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, iteration: int):
        super().__init__(f"training diverged at iteration {iteration}")
        self.iteration = iteration


def heisenberg_drift(n_qubits: int) -> PauliSum:
    """Nearest-neighbour XX + YY + ZZ chain."""
    terms = []
    for k in range(n_qubits - 1):
        for axis in "XYZ":
            ops = "".join(axis if q in (k, k + 1) else "I" for q in range(n_qubits))
            terms.append(PauliString(ops))
    return PauliSum(terms)


def control_axis(k: int) -> str:
    """Axis of the k-th control Hamiltonian (k is 1-based): X, Y, Z, X, ..."""
    return CONTROL_AXES[(k - 1) % 3]


@dataclass(frozen=True)
class ControlSystem:
    """Drift + control Hamiltonians for an n-qubit register (2 <= n <= 4)."""

    n_qubits: int
    drift: PauliSum
    controls: tuple[PauliString, ...]

    @classmethod
    def build(cls, n_qubits: int) -> "ControlSystem":
        if n_qubits not in (2, 3, 4):
            raise ValueError(f"control systems support 2-4 qubits, got {n_qubits}")
        controls = tuple(
            PauliString.single(control_axis(k), k - 1, n_qubits) for k in range(1, n_qubits + 1)
        )
        return cls(n_qubits, heisenberg_drift(n_qubits), controls)

    @property
    def n_controls(self) -> int:
        return len(self.controls)

    def control_qubit_axis(self, i: int) -> tuple[int, str]:
        """(qubit, axis) pair of control i (0-based)."""
        return i, control_axis(i + 1)

    def drift_step(self, duration: float) -> np.ndarray:
        """Dense unitary exp(-i * H0 * duration)."""
        vals, vecs = self.drift.eigensystem()
        return (vecs * np.exp(-1j * duration * vals)) @ vecs.conj().T


# ---------------------------------------------------------------------------
# Neural controller
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Controller:
    """Tanh MLP mapping time t to m bounded control amplitudes.

    Architecture: 1 -> hidden[0] -> hidden[1] -> m, tanh everywhere, final
    tanh scaled by ``amplitude_bound`` so |u_i(t)| < amplitude_bound for any
    finite t (including extrapolation t > 1).
    """

    n_controls: int
    hidden: tuple[int, int] = (32, 32)
    amplitude_bound: float = 4.0
    params: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        if self.params is None:
            object.__setattr__(self, "params", np.zeros(self.n_params))
        p = np.array(self.params, dtype=float).reshape(-1)
        if p.size != self.n_params:
            raise ValueError(f"expected {self.n_params} parameters, got {p.size}")
        p.setflags(write=False)
        object.__setattr__(self, "params", p)

    @property
    def shapes(self) -> list[tuple[int, ...]]:
        h1, h2 = self.hidden
        m = self.n_controls
        return [(h1, 1), (h1,), (h2, h1), (h2,), (m, h2), (m,)]

    @property
    def n_params(self) -> int:
        return sum(int(np.prod(s)) for s in self.shapes)

    @classmethod
    def initialized(
        cls,
        n_controls: int,
        seed: int,
        hidden: tuple[int, int] = (32, 32),
        amplitude_bound: float = 4.0,
        init_scale: float = 0.1,
    ) -> "Controller":
        proto = cls(n_controls, hidden, amplitude_bound)
        rng = np.random.default_rng(seed)
        params = rng.uniform(-init_scale, init_scale, proto.n_params)
        return replace(proto, params=params)

    def _unpack(self, flat: np.ndarray) -> list[np.ndarray]:
        out, pos = [], 0
        for s in self.shapes:
            size = int(np.prod(s))
            out.append(flat[pos : pos + size].reshape(s))
            pos += size
        return out

    def forward(self, ts: np.ndarray) -> tuple[np.ndarray, tuple]:
        """Evaluate at times ts (shape (K,)); returns (u of shape (K, m), cache)."""
        w1, b1, w2, b2, w3, b3 = self._unpack(self.params)
        x = np.asarray(ts, dtype=float).reshape(-1, 1)
        a1 = np.tanh(x @ w1.T + b1)
        a2 = np.tanh(a1 @ w2.T + b2)
        a3 = np.tanh(a2 @ w3.T + b3)
        u = self.amplitude_bound * a3
        return u, (x, a1, a2, a3)

    def evaluate(self, ts) -> np.ndarray:
        """Control amplitudes u_i(t) for each requested time; shape (K, m)."""
        return self.forward(np.atleast_1d(np.asarray(ts, dtype=float)))[0]

    def backward(self, cache: tuple, du: np.ndarray) -> np.ndarray:
        """Accumulate dL/dparams from dL/du (shape (K, m)) via the cached pass."""
        w1, b1, w2, b2, w3, b3 = self._unpack(self.params)
        x, a1, a2, a3 = cache
        d3 = du * self.amplitude_bound * (1.0 - a3**2)
        gw3 = d3.T @ a2
        gb3 = d3.sum(axis=0)
        d2 = (d3 @ w3) * (1.0 - a2**2)
        gw2 = d2.T @ a1
        gb2 = d2.sum(axis=0)
        d1 = (d2 @ w2) * (1.0 - a1**2)
        gw1 = d1.T @ x
        gb1 = d1.sum(axis=0)
        return np.concatenate([g.reshape(-1) for g in (gw1, gb1, gw2, gb2, gw3, gb3)])


# ---------------------------------------------------------------------------
# Steering problem and propagation
# ---------------------------------------------------------------------------


#: Default weight of the control-energy penalty.  Unit weight makes the
#: energy term dominate for well-separated state pairs (reaching fidelity
#: ~1 between Haar-random 2-qubit states costs energy ~10), so the default
#: keeps the regularizer gentle; pass 1.0 for equal weighting of both terms.
DEFAULT_ENERGY_WEIGHT = 0.01


@dataclass(frozen=True)
class SteeringProblem:
    """Steer ``source`` to ``target`` over t in [0, 1] with N splitting steps."""

    system: ControlSystem
    source: Statevector
    target: Statevector
    n_steps: int = 25
    energy_weight: float = DEFAULT_ENERGY_WEIGHT

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ValueError("n_steps must be >= 1")
        for name, state in (("source", self.source), ("target", self.target)):
            if state.n_qubits != self.system.n_qubits:
                raise ValueError(f"{name} acts on {state.n_qubits} qubits, system on {self.system.n_qubits}")

    @property
    def dt(self) -> float:
        return 1.0 / self.n_steps


def _steps_between(t_start: float, t_end: float, dt: float):
    """Sub-intervals of [t_start, t_end] aligned to the global grid k*dt.

    Yields (width, midpoint) per step; the first/last step shrink when the
    endpoints are not grid-aligned.
    """
    eps = 1e-12
    a = t_start
    while a < t_end - eps:
        k = math.floor(a / dt + 1e-9) + 1
        b = min(k * dt, t_end)
        yield b - a, 0.5 * (a + b)
        a = b


def _apply_step(
    amps: np.ndarray,
    system: ControlSystem,
    u_row: np.ndarray,
    width: float,
    half_drift: np.ndarray,
) -> np.ndarray:
    """One symmetric splitting step on a flat amplitude buffer."""
    n = system.n_qubits
    amps = half_drift @ amps
    order = list(range(system.n_controls))
    for i in order + order[::-1]:
        qubit, axis = system.control_qubit_axis(i)
        amps = _apply_2x2(amps, rotation_matrix(axis, u_row[i] * width), qubit, n)
    return half_drift @ amps


def propagate(
    problem: SteeringProblem,
    controller: Controller,
    t_end: float,
    *,
    initial: Statevector | None = None,
    t_start: float = 0.0,
) -> Statevector:
    """State rho(t_end), starting from rho(t_start) = initial (default source)."""
    if t_end < t_start:
        raise ValueError(f"t_end must be >= t_start, got {t_end} < {t_start}")
    state = problem.source if initial is None else initial
    if state.n_qubits != problem.system.n_qubits:
        raise ValueError("initial state register size mismatch")
    steps = list(_steps_between(t_start, t_end, problem.dt))
    if not steps:
        return state
    u = controller.evaluate(np.array([mid for _, mid in steps]))
    amps = state.amplitudes.copy()
    half_cache: dict[float, np.ndarray] = {}
    for (width, _), u_row in zip(steps, u):
        half = half_cache.get(width)
        if half is None:
            half = problem.system.drift_step(0.5 * width)
            half_cache[width] = half
        amps = _apply_step(amps, problem.system, u_row, width, half)
    return Statevector(state.n_qubits, amps)


def control_times(problem: SteeringProblem) -> np.ndarray:
    """Midpoint sampling times (k - 1/2) * dt, k = 1..N, used on [0, 1]."""
    return (np.arange(1, problem.n_steps + 1) - 0.5) * problem.dt


def loss(problem: SteeringProblem, controller: Controller) -> float:
    """1 - F(rho(1), target) + energy_weight * dt * sum u_i(t_k)^2."""
    return _loss_and_grad(problem, controller, want_grad=False)[0]


def gradient(problem: SteeringProblem, controller: Controller) -> np.ndarray:
    """Exact dloss/dparams via costate back-propagation through the gates."""
    return _loss_and_grad(problem, controller, want_grad=True)[1]


def _loss_and_grad(
    problem: SteeringProblem, controller: Controller, want_grad: bool = True
) -> tuple[float, np.ndarray | None]:
    system = problem.system
    n, m, dt = system.n_qubits, system.n_controls, problem.dt
    ts = control_times(problem)
    u, cache = controller.forward(ts)

    half = system.drift_step(0.5 * dt)
    amps = problem.source.amplitudes.copy()
    for k in range(problem.n_steps):
        amps = _apply_step(amps, system, u[k], dt, half)

    target = problem.target.amplitudes
    overlap = np.vdot(target, amps)
    energy = problem.energy_weight * dt * float(np.sum(u**2))
    value = 1.0 - float(abs(overlap) ** 2) + energy
    if not want_grad:
        return value, None

    # Costate sweep: lam is defined so that d(fidelity term) = 2 Re(lam^H dpsi).
    # For a rotation gate R(theta) = exp(-i theta A / 2) applied at some point
    # in the sequence, dL/dtheta = Im(<lam | A psi>) evaluated with psi taken
    # *after* the gate and lam with all later gates stripped off.
    du = 2.0 * problem.energy_weight * dt * u
    lam = -overlap * target
    half_dag = half.conj().T
    for k in range(problem.n_steps - 1, -1, -1):
        amps = half_dag @ amps
        lam = half_dag @ lam
        order = list(range(m))
        for i in order + order[::-1]:  # reverse of ascending-then-descending
            qubit, axis = system.control_qubit_axis(i)
            v = apply_pauli(amps, axis, qubit, n)
            du[k, i] += float(np.imag(np.vdot(lam, v))) * dt  # dtheta/du = dt
            rot_dag = rotation_matrix(axis, u[k, i] * dt).conj().T
            amps = _apply_2x2(amps, rot_dag, qubit, n)
            lam = _apply_2x2(lam, rot_dag, qubit, n)
        amps = half_dag @ amps
        lam = half_dag @ lam

    return value, controller.backward(cache, du)


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    max_iters: int = 500
    learning_rate: float = 1e-2
    seed: int = 0


@dataclass(frozen=True)
class TrainedSteering:
    problem: SteeringProblem
    controller: Controller
    final_fidelity: float
    loss_history: np.ndarray

    def __post_init__(self) -> None:
        hist = np.array(self.loss_history, dtype=float).reshape(-1)
        hist.setflags(write=False)
        object.__setattr__(self, "loss_history", hist)


def train(
    problem: SteeringProblem,
    config: TrainConfig = TrainConfig(),
    progress=None,
) -> TrainedSteering:
    """Adam on the controller parameters; keeps the lowest-loss iterate.

    Deterministic for a fixed (problem, config).  ``progress``, if given,
    is called as progress(iteration, max_iters) after every step.
    """
    controller = Controller.initialized(problem.system.n_controls, config.seed)
    params = controller.params.copy()
    best_params = params.copy()
    best_loss = math.inf
    history = np.zeros(config.max_iters)

    beta1, beta2, eps = 0.9, 0.999, 1e-8
    m_t = np.zeros_like(params)
    v_t = np.zeros_like(params)

    for it in range(config.max_iters):
        cur = replace(controller, params=params)
        value, grad = _loss_and_grad(problem, cur)
        if not math.isfinite(value):
            raise TrainingDivergedError(it)
        history[it] = value
        if value < best_loss:
            best_loss = value
            best_params = params.copy()
        m_t = beta1 * m_t + (1 - beta1) * grad
        v_t = beta2 * v_t + (1 - beta2) * grad**2
        mhat = m_t / (1 - beta1 ** (it + 1))
        vhat = v_t / (1 - beta2 ** (it + 1))
        params = params - config.learning_rate * mhat / (np.sqrt(vhat) + eps)
        if progress is not None:
            progress(it + 1, config.max_iters)

    best = replace(controller, params=best_params)
    final_fid = fidelity(propagate(problem, best, 1.0), problem.target)
    return TrainedSteering(problem, best, final_fid, history)


def evaluate_path(trained: TrainedSteering, ts) -> list[Statevector]:
    """rho(t) for each t >= 0, re-propagating from the source each time."""
    out = []
    for t in ts:
        if t < 0:
            raise ValueError(f"evaluation times must be >= 0, got {t}")
        out.append(propagate(trained.problem, trained.controller, float(t)))
    return out


# ---------------------------------------------------------------------------
# Serialization (sidecar files / service cache survive process boundaries)
# ---------------------------------------------------------------------------


def _state_to_lists(state: Statevector) -> dict:
    return {
        "n_qubits": state.n_qubits,
        "re": state.amplitudes.real.tolist(),
        "im": state.amplitudes.imag.tolist(),
    }


def _state_from_lists(doc: dict) -> Statevector:
    amps = np.array(doc["re"], dtype=float) + 1j * np.array(doc["im"], dtype=float)
    return Statevector(int(doc["n_qubits"]), amps)


def trained_to_dict(trained: TrainedSteering) -> dict:
    p, c = trained.problem, trained.controller
    return {
        "n_qubits": p.system.n_qubits,
        "source": _state_to_lists(p.source),
        "target": _state_to_lists(p.target),
        "n_steps": p.n_steps,
        "energy_weight": p.energy_weight,
        "controller": {
            "n_controls": c.n_controls,
            "hidden": list(c.hidden),
            "amplitude_bound": c.amplitude_bound,
            "params": c.params.tolist(),
        },
        "final_fidelity": trained.final_fidelity,
        "loss_history": trained.loss_history.tolist(),
    }


def trained_from_dict(doc: dict) -> TrainedSteering:
    system = ControlSystem.build(int(doc["n_qubits"]))
    problem = SteeringProblem(
        system,
        _state_from_lists(doc["source"]),
        _state_from_lists(doc["target"]),
        n_steps=int(doc["n_steps"]),
        energy_weight=float(doc["energy_weight"]),
    )
    c = doc["controller"]
    controller = Controller(
        int(c["n_controls"]),
        tuple(c["hidden"]),
        float(c["amplitude_bound"]),
        np.array(c["params"], dtype=float),
    )
    return TrainedSteering(
        problem,
        controller,
        float(doc["final_fidelity"]),
        np.array(doc["loss_history"], dtype=float),
    )
