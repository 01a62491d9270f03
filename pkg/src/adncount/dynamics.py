"""T-stable streams of topology snapshots.

A schedule serves the snapshot in force at each round. Links are redrawn
after the exchange of every round r with r = 0 mod T, so a new snapshot
takes effect at rounds m*T + 1: the first change is visible at round
T + 1 and every snapshot persists for exactly T rounds. T = inf means a
static network.

Per family, a change means: a fresh uniform rooted tree (pruned to the
degree bound) or a fresh G(n, p) draw, or, for star and path, a uniform
relabeling of the non-leader positions with the leader pinned to the
star center / path endpoint. Every snapshot of epoch e is generated from
the sub-seed derive_seed(seed, e), so sequences are reproducible and
independent of anything else that consumes randomness.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass

from .errors import InvalidParameters, NonMonotoneAccess
from .seeds import derive_seed
from .topology import Topology, gnp, path, star, tree_to_topology
from .trees import SubtreeDistribution, prune, ranrut, sizes_table

FAMILIES = ("random-tree", "star", "path", "gnp")


@dataclass(frozen=True)
class ScheduleParams:
    """Inputs that define one dynamic-network instance."""

    family: str
    n: int
    delta: int
    T: float  # positive int, or math.inf for static
    seed: int
    p: float | None = None


def validate_params(params: ScheduleParams) -> None:
    f = params.family
    n = params.n
    delta = params.delta
    T = params.T
    if f not in FAMILIES:
        raise InvalidParameters(f"unknown family {f!r}")
    if n < 2:
        raise InvalidParameters("n must be >= 2")
    if T != math.inf and (not isinstance(T, int) or T < 1):
        raise InvalidParameters("T must be a positive integer or inf")
    if not 1 <= delta <= n - 1:
        raise InvalidParameters(f"delta must be in [1, n-1], got {delta}")
    if f in ("star", "gnp"):
        if delta != n - 1:
            raise InvalidParameters(f"{f} requires delta = n-1")
    else:
        if n >= 3 and delta < 2:
            raise InvalidParameters(f"{f} with n >= 3 requires delta >= 2")
    if f == "gnp":
        if params.p is None or not 0.0 <= params.p <= 1.0:
            raise InvalidParameters("gnp requires p in [0, 1]")
        if T == math.inf:
            raise InvalidParameters(
                "gnp with T = inf is rejected: a statically disconnected "
                "graph would never complete"
            )
    elif params.p is not None:
        raise InvalidParameters(f"p is only meaningful for gnp, not {f}")


class DynamicsSchedule:
    """Stateful snapshot stream owned by exactly one protocol run.

    Access is monotone: ``topology_at(r)`` may only be called with r at or
    beyond every previously served round.
    """

    def __init__(self, params: ScheduleParams, ranrut_variant: str = "paper-literal",
                 trace=None):
        validate_params(params)
        self.params = params
        self._variant = ranrut_variant
        self._trace = trace
        self._dist = None
        if params.family == "random-tree":
            self._dist = SubtreeDistribution(sizes_table(params.n), params.n)
        self._epoch = -1
        self._topology = None
        self._served = 1
        self._set_epoch(0)

    def topology_at(self, r: int) -> Topology:
        """Snapshot in force at round r (r >= 1, monotone)."""
        if r < 1 or r < self._served:
            raise NonMonotoneAccess(
                f"round {r} precedes already-served round {self._served}"
            )
        self._served = r
        T = self.params.T
        epoch = 0 if T == math.inf else (r - 1) // int(T)
        if epoch != self._epoch:
            self._set_epoch(epoch)
        return self._topology

    @property
    def current(self) -> Topology:
        return self._topology

    @property
    def current_since(self) -> int:
        """First round at which the current snapshot is in force."""
        if self._epoch == 0:
            return 1
        return self._epoch * int(self.params.T) + 1

    def _set_epoch(self, epoch: int) -> None:
        self._epoch = epoch
        self._topology = self._generate(epoch)
        if self._trace is not None:
            line = {"round": self.current_since,
                    "topology": self._topology.to_json_dict()}
            self._trace.write(json.dumps(line, separators=(",", ":")) + "\n")

    def _generate(self, epoch: int) -> Topology:
        p = self.params
        rng = random.Random(derive_seed(p.seed, epoch))
        if p.family == "star":
            # relabeling the leaves of a star is the identity on adjacency
            return star(p.n)
        if p.family == "path":
            if epoch == 0:
                return path(p.n)
            return _permuted_path(p.n, rng)
        if p.family == "gnp":
            return gnp(p.n, p.p, rng)
        tree = ranrut(p.n, self._dist, rng, self._variant)
        tree = prune(tree, p.delta, rng)
        return tree_to_topology(tree)


def _permuted_path(n: int, rng: random.Random) -> Topology:
    """Path with the leader at one end and the rest uniformly relabeled."""
    labels = list(range(1, n))
    rng.shuffle(labels)
    order = [0] + labels
    return Topology(n, [(order[i], order[i + 1]) for i in range(n - 1)])


def new_schedule(family: str, n: int, delta: int, T: float, seed: int,
                 p: float | None = None, **kwargs) -> DynamicsSchedule:
    """Convenience constructor mirroring the schedule parameter list."""
    return DynamicsSchedule(
        ScheduleParams(family=family, n=n, delta=delta, T=T, seed=seed, p=p),
        **kwargs,
    )
