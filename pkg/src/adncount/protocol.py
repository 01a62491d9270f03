"""Incremental counting engine.

For candidate sizes k = 2, 3, ... each iteration runs three phases over a
shared global round counter r that also drives the topology schedule:

* collection: non-leaders send a 1/(2*delta) fraction of their energy to
  each neighbor; the leader keeps everything it has and receives and sends
  nothing. Experimental mode loops until the leader holds at least
  k - 1 - 1/k^c; theoretical mode runs the fixed budget
  tau(k) = k * ceil((2*delta)^k * ln k) regardless of the energy level.
* verification: the leader is checked against k - 1, then the maximum
  residual energy is max-gossiped for 1 + ceil(k / (1 - 1/k^c)) rounds and
  compared with 1/k^c. With disconnection tolerance the phase keeps going
  until the leader has heard from every node (per-node origin bitmasks).
* notification: the leader's verdict is OR-gossiped for k rounds, plus,
  with disconnection tolerance, until a positive verdict has reached all
  nodes.

The candidate is confirmed exactly when k equals the true size, which is
the headline correctness property checked by the test suite.

Threshold comparisons are raw float comparisons with no epsilon. One
literal deviation from the reference pseudocode: the notification OR
includes the node's own flag (as the verification max already does), so
halting is monotone even when a halted node is momentarily isolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import DynamicsSchedule
from .errors import (
    BudgetOverflow,
    DegreeBoundViolated,
    InvalidParameters,
    RoundLimitExceeded,
)
from .topology import Topology

LOG2_5 = math.log2(5.0)

_THEORETICAL_N_GATE = 8
_THEORETICAL_DELTA_GATE = 4


@dataclass(frozen=True)
class ProtocolConfig:
    """Engine knobs; defaults follow the simulation setup (c = 1.01)."""

    c: float = 1.01
    mode: str = "experimental"
    max_rounds: int | None = None  # None -> 10 * delta * n**4
    disconnection_tolerant: bool = False
    allow_large_theoretical: bool = False

    def __post_init__(self):
        if self.mode not in ("experimental", "theoretical"):
            raise InvalidParameters(f"unknown mode {self.mode!r}")
        if not self.c > 1.0:
            raise InvalidParameters("c must be > 1")
        if self.mode == "theoretical" and not self.c > LOG2_5:
            raise InvalidParameters(
                f"theoretical mode requires c > log2(5) ~ {LOG2_5:.4f}"
            )
        if self.max_rounds is not None and self.max_rounds < 1:
            raise InvalidParameters("max_rounds must be >= 1")

    def effective_max_rounds(self, n: int, delta: int) -> int:
        if self.max_rounds is not None:
            return self.max_rounds
        return 10 * delta * n**4


@dataclass
class ProtocolState:
    """Per-round vectors plus the candidate size and global round counter."""

    k: int
    r: int
    energy: np.ndarray
    max_heard: np.ndarray
    heard_sources: list[int] | None
    halt: np.ndarray
    is_correct: bool

    @classmethod
    def initial(cls, n: int) -> "ProtocolState":
        return cls(
            k=1,
            r=1,
            energy=np.zeros(n),
            max_heard=np.zeros(n),
            heard_sources=None,
            halt=np.zeros(n, dtype=bool),
            is_correct=False,
        )

    def reset_energy(self) -> None:
        """(0, 1, 1, ..., 1): leader empty, one unit everywhere else."""
        self.energy = np.zeros(len(self.energy))
        self.energy[1:] = 1.0


@dataclass(frozen=True)
class PhaseTrace:
    k: int
    collection: int
    verification: int
    notification: int


@dataclass(frozen=True)
class RunDiagnostics:
    """Worst-case per-round statistics gathered during collection."""

    max_conservation_error: float
    max_nonleader_energy: float
    min_energy: float
    min_leader_gain: float


@dataclass(frozen=True)
class RunRecord:
    """Outcome of one full execution, including all input parameters."""

    family: str
    n: int
    delta: int
    T: float
    p: float | None
    mode: str
    c: float
    seed: int
    max_rounds: int
    disconnection_tolerant: bool
    estimate: int | None
    rounds_total: int
    rounds_collection: int
    rounds_verification: int
    rounds_notification: int
    status: str  # "ok" | "round_limit"
    per_k_trace: tuple[PhaseTrace, ...]
    diagnostics: RunDiagnostics

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "n": self.n,
            "delta": self.delta,
            "T": "inf" if self.T == math.inf else self.T,
            "p": self.p,
            "mode": self.mode,
            "c": self.c,
            "seed": self.seed,
            "max_rounds": self.max_rounds,
            "disconnection_tolerant": self.disconnection_tolerant,
            "estimate": self.estimate,
            "rounds_total": self.rounds_total,
            "rounds_collection": self.rounds_collection,
            "rounds_verification": self.rounds_verification,
            "rounds_notification": self.rounds_notification,
            "status": self.status,
            "per_k_trace": [
                {
                    "k": t.k,
                    "collection": t.collection,
                    "verification": t.verification,
                    "notification": t.notification,
                }
                for t in self.per_k_trace
            ],
            "diagnostics": {
                "max_conservation_error": self.diagnostics.max_conservation_error,
                "max_nonleader_energy": self.diagnostics.max_nonleader_energy,
                "min_energy": self.diagnostics.min_energy,
                "min_leader_gain": self.diagnostics.min_leader_gain,
            },
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "RunRecord":
        return cls(
            family=data["family"],
            n=data["n"],
            delta=data["delta"],
            T=math.inf if data["T"] == "inf" else data["T"],
            p=data["p"],
            mode=data["mode"],
            c=data["c"],
            seed=data["seed"],
            max_rounds=data["max_rounds"],
            disconnection_tolerant=data["disconnection_tolerant"],
            estimate=data["estimate"],
            rounds_total=data["rounds_total"],
            rounds_collection=data["rounds_collection"],
            rounds_verification=data["rounds_verification"],
            rounds_notification=data["rounds_notification"],
            status=data["status"],
            per_k_trace=tuple(
                PhaseTrace(t["k"], t["collection"], t["verification"], t["notification"])
                for t in data["per_k_trace"]
            ),
            diagnostics=RunDiagnostics(**data["diagnostics"]),
        )


def verification_rounds(k: int, c: float) -> int:
    """Fixed verification length: 1 + ceil(k / (1 - 1/k^c))."""
    return 1 + math.ceil(k / (1.0 - k ** (-c)))


def notification_rounds(k: int) -> int:
    """Fixed notification length: k rounds."""
    return k


def collection_budget(k: int, delta: int) -> int:
    """Theoretical collection length tau(k) = k * ceil((2*delta)^k * ln k)."""
    base = (2 * delta) ** k  # exact integer
    try:
        rho = math.ceil(base * math.log(k))
    except OverflowError:
        raise BudgetOverflow(f"tau({k}) overflows for delta={delta}") from None
    tau = k * rho
    if tau >= 1 << 128:
        raise BudgetOverflow(f"tau({k}) = {tau} exceeds 128 bits")
    return tau


def collection_round(energy: np.ndarray, topology: Topology, delta: int) -> np.ndarray:
    """One energy-exchange round as a sparse per-edge update.

    Equivalent to multiplying by the share-fraction matrix: each non-leader
    j keeps energy[j] * (1 - deg(j)/(2*delta)) and sends energy[j]/(2*delta)
    to each neighbor; the leader retains everything and sends nothing.
    """
    if topology.max_degree > delta:
        raise DegreeBoundViolated(
            f"max degree {topology.max_degree} exceeds delta={delta}"
        )
    new = topology.retention(delta) * energy
    src, dst = topology.collection_arrays()
    if src.size:
        new += np.bincount(dst, weights=energy[src], minlength=topology.n) / (
            2.0 * delta
        )
    return new


def verification_round(values: np.ndarray, topology: Topology) -> np.ndarray:
    """Max-gossip round over neighbors and self."""
    new = values.copy()
    src, dst = topology.symmetric_arrays()
    if src.size:
        np.maximum.at(new, dst, values[src])
    return new


def notification_round(halt: np.ndarray, topology: Topology) -> np.ndarray:
    """OR-gossip round over neighbors and self."""
    new = halt.copy()
    src, dst = topology.symmetric_arrays()
    if src.size:
        np.logical_or.at(new, dst, halt[src])
    return new


def heard_round(heard: list[int], topology: Topology) -> list[int]:
    """Union each node's origin bitmask with its neighbors' bitmasks."""
    new = list(heard)
    for u, v in topology.edges:
        new[u] |= heard[v]
        new[v] |= heard[u]
    return new


class _RunStats:
    """Mutable accumulator for diagnostics and partial-phase accounting."""

    __slots__ = (
        "max_conservation_error",
        "max_nonleader_energy",
        "min_energy",
        "min_leader_gain",
        "phase_rounds",
    )

    def __init__(self):
        self.max_conservation_error = 0.0
        self.max_nonleader_energy = 0.0
        self.min_energy = math.inf
        self.min_leader_gain = math.inf
        self.phase_rounds = {"collection": 0, "verification": 0, "notification": 0}

    def begin_k(self):
        self.phase_rounds = {"collection": 0, "verification": 0, "notification": 0}

    def update_collection(self, energy: np.ndarray, prev_leader: float, n: int):
        total = float(energy.sum())
        err = abs(total - (n - 1.0))
        if err > self.max_conservation_error:
            self.max_conservation_error = err
        nonleader = float(energy[1:].max())
        if nonleader > self.max_nonleader_energy:
            self.max_nonleader_energy = nonleader
        low = float(energy.min())
        if low < self.min_energy:
            self.min_energy = low
        gain = float(energy[0]) - prev_leader
        if gain < self.min_leader_gain:
            self.min_leader_gain = gain

    def diagnostics(self) -> RunDiagnostics:
        return RunDiagnostics(
            max_conservation_error=self.max_conservation_error,
            max_nonleader_energy=self.max_nonleader_energy,
            min_energy=0.0 if self.min_energy == math.inf else self.min_energy,
            min_leader_gain=0.0 if self.min_leader_gain == math.inf else self.min_leader_gain,
        )


def _check_limit(state: ProtocolState, limit: int, phase: str) -> None:
    if state.r > limit:
        raise RoundLimitExceeded(f"round limit {limit} exceeded during {phase}")


def run_collection(
    state: ProtocolState,
    schedule: DynamicsSchedule,
    config: ProtocolConfig,
    stats: _RunStats | None = None,
) -> int:
    """Run the collection phase for the current k; returns rounds used.

    Precondition: the energy vector is freshly reset to (0, 1, ..., 1).
    """
    params = schedule.params
    n, delta = params.n, params.delta
    limit = config.effective_max_rounds(n, delta)

    def step():
        _check_limit(state, limit, "collection")
        topo = schedule.topology_at(state.r)
        prev_leader = float(state.energy[0])
        state.energy = collection_round(state.energy, topo, delta)
        state.r += 1
        if stats is not None:
            stats.update_collection(state.energy, prev_leader, n)
            stats.phase_rounds["collection"] += 1

    rounds = 0
    if config.mode == "theoretical":
        for _ in range(collection_budget(state.k, delta)):
            step()
            rounds += 1
    else:
        threshold = state.k - 1 - state.k ** (-config.c)
        while state.energy[0] < threshold:
            step()
            rounds += 1
    return rounds


def run_verification(
    state: ProtocolState,
    schedule: DynamicsSchedule,
    config: ProtocolConfig,
    stats: _RunStats | None = None,
) -> tuple[bool, int]:
    """Run the verification phase; returns (is_correct, rounds used)."""
    params = schedule.params
    n = params.n
    k = state.k
    limit = config.effective_max_rounds(n, params.delta)
    # Both rejection tests have zero real-arithmetic margin at k = n (the
    # leader's energy converges to exactly k-1 and the residuals to 1/k^c
    # from below), so they get the conservation tolerance 1e-9*n as slack;
    # for k < n the detection margins exceed it by orders of magnitude.
    drift_tol = 1e-9 * n
    if state.energy[0] > k - 1 + drift_tol:
        state.is_correct = False
    state.max_heard = state.energy.copy()
    state.max_heard[0] = 0.0
    tolerant = config.disconnection_tolerant
    if tolerant:
        state.heard_sources = [1 << i for i in range(n)]

    def step():
        _check_limit(state, limit, "verification")
        topo = schedule.topology_at(state.r)
        state.max_heard = verification_round(state.max_heard, topo)
        if tolerant:
            state.heard_sources = heard_round(state.heard_sources, topo)
        state.r += 1
        if stats is not None:
            stats.phase_rounds["verification"] += 1

    rounds = 0
    for _ in range(verification_rounds(k, config.c)):
        step()
        rounds += 1
    if tolerant:
        everyone = (1 << n) - 1
        while state.heard_sources[0] != everyone:
            step()
            rounds += 1
    if state.max_heard[0] > k ** (-config.c) + drift_tol:
        state.is_correct = False
    return state.is_correct, rounds


def run_notification(
    state: ProtocolState,
    schedule: DynamicsSchedule,
    config: ProtocolConfig,
    stats: _RunStats | None = None,
) -> int:
    """Run the notification phase; returns rounds used."""
    params = schedule.params
    limit = config.effective_max_rounds(params.n, params.delta)
    state.halt = np.zeros(params.n, dtype=bool)
    state.halt[0] = state.is_correct

    def step():
        _check_limit(state, limit, "notification")
        topo = schedule.topology_at(state.r)
        state.halt = notification_round(state.halt, topo)
        state.r += 1
        if stats is not None:
            stats.phase_rounds["notification"] += 1

    rounds = 0
    for _ in range(notification_rounds(state.k)):
        step()
        rounds += 1
    if config.disconnection_tolerant:
        while bool(state.halt[0]) and not bool(state.halt.all()):
            step()
            rounds += 1
    return rounds


def count(schedule: DynamicsSchedule, config: ProtocolConfig | None = None) -> RunRecord:
    """Run the full protocol until the candidate size is confirmed.

    Accepts any n >= 2; note that n <= 3 lies outside the regime of the
    proven verification guarantee (which needs n > 3) and is covered
    empirically by the test grids instead.

    Raises RoundLimitExceeded with the partial record attached when the
    safety cap is hit (e.g. a G(n, p) stream that stays disconnected).
    """
    if config is None:
        config = ProtocolConfig()
    params = schedule.params
    if config.mode == "theoretical" and not config.allow_large_theoretical:
        if params.n > _THEORETICAL_N_GATE or params.delta > _THEORETICAL_DELTA_GATE:
            raise InvalidParameters(
                f"theoretical mode is gated to n <= {_THEORETICAL_N_GATE} and "
                f"delta <= {_THEORETICAL_DELTA_GATE}; set allow_large_theoretical "
                "to override"
            )
    state = ProtocolState.initial(params.n)
    stats = _RunStats()
    traces: list[PhaseTrace] = []
    try:
        while True:
            state.k += 1
            state.is_correct = True
            state.reset_energy()
            stats.begin_k()
            rc = run_collection(state, schedule, config, stats)
            _, rv = run_verification(state, schedule, config, stats)
            rn = run_notification(state, schedule, config, stats)
            traces.append(
                PhaseTrace(k=state.k, collection=rc, verification=rv, notification=rn)
            )
            if state.is_correct:
                break
    except RoundLimitExceeded as exc:
        traces.append(PhaseTrace(k=state.k, **stats.phase_rounds))
        record = _assemble(params, config, state, traces, stats, None, "round_limit")
        raise RoundLimitExceeded(str(exc), record=record) from None
    return _assemble(params, config, state, traces, stats, state.k, "ok")


def _assemble(params, config, state, traces, stats, estimate, status) -> RunRecord:
    rounds_collection = sum(t.collection for t in traces)
    rounds_verification = sum(t.verification for t in traces)
    rounds_notification = sum(t.notification for t in traces)
    rounds_total = rounds_collection + rounds_verification + rounds_notification
    assert rounds_total == state.r - 1, "phase accounting out of sync"
    return RunRecord(
        family=params.family,
        n=params.n,
        delta=params.delta,
        T=params.T,
        p=params.p,
        mode=config.mode,
        c=config.c,
        seed=params.seed,
        max_rounds=config.effective_max_rounds(params.n, params.delta),
        disconnection_tolerant=config.disconnection_tolerant,
        estimate=estimate,
        rounds_total=rounds_total,
        rounds_collection=rounds_collection,
        rounds_verification=rounds_verification,
        rounds_notification=rounds_notification,
        status=status,
        per_k_trace=tuple(traces),
        diagnostics=stats.diagnostics(),
    )
