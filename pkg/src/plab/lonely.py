"""Non-interacting walker systems: lonely-walker counts and the poissonised
multi-step model with strong/weak collision classification.

Plain model: walkers at independent uniform starts, one uniformly chosen
walker takes a walk step per time step; a walker is lonely while it has never
shared a vertex with another walker (co-location at time 0 counts as a
meeting).  Poissonised model: Po(lambda0) particles per vertex, each taking
Po(rate) walk steps per time step; two particles collide strongly when they
sit on the same vertex immediately after a time step, and weakly when their
per-step visited vertex sets intersect without the pair ever colliding
strongly.  Weak detection walks movers' paths against per-vertex occupant
indices, never an all-pairs scan.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._rng import make_bitgen, make_generator
from .backend import kernels
from .graphs import Graph, WalkKind

__all__ = [
    "PlainLonelyResult",
    "run_plain",
    "PoissonSystem",
    "run_poissonised",
    "CouplingResult",
    "couple_to_plain",
    "default_horizon",
]


def default_horizon(n: int) -> int:
    return math.ceil(0.11 * n * math.log(n))


@dataclass(frozen=True, eq=False)
class PlainLonelyResult:
    lonely: int
    met: int
    walkers: int
    steps: int
    met_flags: np.ndarray  # per-walker flag array

    def __eq__(self, other):
        return isinstance(other, PlainLonelyResult) and (
            self.lonely,
            self.met,
            self.walkers,
            self.steps,
        ) == (other.lonely, other.met, other.walkers, other.steps) and bool(
            np.array_equal(self.met_flags, other.met_flags)
        )


def run_plain(g: Graph, walkers: int, T: int, walk: WalkKind = WalkKind.SIMPLE, seed: int = 0) -> PlainLonelyResult:
    """Count walkers that never met anyone in T single-walker steps."""
    if walkers < 1:
        raise ValueError("need at least one walker")
    indptr, adj = g.csr()
    met, _pos = kernels.lonely_plain(indptr, adj, walk is WalkKind.LAZY, walkers, T, make_bitgen(seed))
    met_count = int(met.sum())
    return PlainLonelyResult(walkers - met_count, met_count, walkers, T, met)


# ---------------------------------------------------------------------------
# poissonised model


@dataclass
class PoissonSystem:
    graph: Graph
    lambda0: float
    move_rate: float
    horizon: int
    seed: int
    starts: np.ndarray  # start vertex per particle
    finals: np.ndarray  # final vertex per particle
    status: np.ndarray  # 0 none, 1 weak, 2 strong per particle
    moves_by_step: list  # per time step: list of (pid, path tuple incl. start)
    max_multi_move: int

    @property
    def particles(self) -> int:
        return len(self.starts)

    def summary(self) -> dict:
        return {
            "particles": self.particles,
            "lonely": int((self.status == 0).sum()),
            "weak_colliders": int((self.status == 1).sum()),
            "strong_colliders": int((self.status == 2).sum()),
            "max_multi_move": self.max_multi_move,
        }


def run_poissonised(
    g: Graph,
    lambda0: float = 1.1,
    move_rate: float | None = None,
    horizon: int | None = None,
    seed: int = 0,
) -> PoissonSystem:
    """Run the poissonised dynamics and classify collisions.

    Per time step the total number of moves is Po(particles * rate) assigned
    to uniform particles (equivalent, by Poisson splitting, to independent
    Po(rate) step counts per particle); simultaneous movers are processed in
    particle-id order, which is distributionally irrelevant by
    exchangeability but fixes determinism.
    """
    n = g.n
    rate = move_rate if move_rate is not None else 1.0 / n
    if not 0.0 < rate <= 1.0:
        raise ValueError("move rate must lie in (0, 1]")
    steps = horizon if horizon is not None else default_horizon(n)
    if lambda0 <= 0:
        raise ValueError("lambda0 must be positive")
    rng = make_generator(seed, 0x901)

    counts = rng.poisson(lambda0, size=n)
    total = int(counts.sum())
    starts = np.repeat(np.arange(n, dtype=np.int64), counts)
    pos = starts.copy()

    occupants: list[set[int]] = [set() for _ in range(n)]
    strong_pairs: set[tuple[int, int]] = set()
    intersect_pairs: set[tuple[int, int]] = set()

    def mark_strong_vertex(v: int) -> None:
        occ = sorted(occupants[v])
        for i, a in enumerate(occ):
            for b in occ[i + 1 :]:
                strong_pairs.add((a, b))

    for pid, v in enumerate(starts):
        occupants[v].add(pid)
    for v in range(n):
        if len(occupants[v]) >= 2:
            mark_strong_vertex(v)

    adjacency = g.adjacency
    moves_by_step: list[list[tuple[int, tuple[int, ...]]]] = []
    max_multi = 0

    for _t in range(steps):
        n_moves = int(rng.poisson(total * rate))
        step_record: list[tuple[int, tuple[int, ...]]] = []
        if n_moves:
            movers_raw = rng.integers(total, size=n_moves)
            per: dict[int, int] = {}
            for m in movers_raw.tolist():
                per[m] = per.get(m, 0) + 1
            step_visits: dict[int, list[int]] = {}
            arrivals: list[int] = []
            for pid in sorted(per):
                k = per[pid]
                if k > max_multi:
                    max_multi = k
                path = [int(pos[pid])]
                v = path[0]
                for _ in range(k):
                    row = adjacency[v]
                    v = row[int(rng.integers(len(row)))]
                    path.append(v)
                # visited-set intersections: live occupants plus earlier movers
                for x in path:
                    for other in occupants[x]:
                        if other != pid:
                            intersect_pairs.add((pid, other) if pid < other else (other, pid))
                    for other in step_visits.get(x, ()):
                        if other != pid:
                            intersect_pairs.add((pid, other) if pid < other else (other, pid))
                seen_once = set()
                for x in path:
                    if x not in seen_once:
                        seen_once.add(x)
                        step_visits.setdefault(x, []).append(pid)
                occupants[path[0]].discard(pid)
                occupants[v].add(pid)
                pos[pid] = v
                arrivals.append(v)
                step_record.append((pid, tuple(path)))
            for v in set(arrivals):
                if len(occupants[v]) >= 2:
                    mark_strong_vertex(v)
        moves_by_step.append(step_record)

    status = np.zeros(total, dtype=np.int64)
    for a, b in intersect_pairs - strong_pairs:
        for p in (a, b):
            if status[p] == 0:
                status[p] = 1
    for a, b in strong_pairs:
        status[a] = 2
        status[b] = 2
    return PoissonSystem(
        graph=g,
        lambda0=lambda0,
        move_rate=rate,
        horizon=steps,
        seed=seed,
        starts=starts,
        finals=pos,
        status=status,
        moves_by_step=moves_by_step,
        max_multi_move=max_multi,
    )


# ---------------------------------------------------------------------------
# coupling the poissonised model to the plain model


@dataclass(frozen=True)
class CouplingResult:
    success: bool
    reason: str
    walkers: int
    steps_requested: int
    moves_available: int
    lonely: int | None
    met: int | None


def couple_to_plain(system: PoissonSystem, walkers: int, steps: int, seed: int = 0) -> CouplingResult:
    """Extract a plain-model trace from a poissonised run: a uniform random
    subset of particles, with the subset's movements within each time step
    serialized in uniformly random order (per-particle step order kept).
    Fails when there are too few particles or too few movements."""
    if walkers == 0:
        return CouplingResult(True, "ok", 0, steps, 0, 0, 0)
    if system.particles < walkers:
        return CouplingResult(False, "too few particles", walkers, steps, 0, None, None)
    rng = make_generator(seed, 0xC0eb)
    chosen = rng.choice(system.particles, size=walkers, replace=False)
    chosen_set = {int(p) for p in chosen}
    remap = {int(p): i for i, p in enumerate(sorted(chosen_set))}

    serialized: list[tuple[int, int]] = []  # (walker index, destination)
    for step_record in system.moves_by_step:
        queue = [
            (remap[pid], list(path[1:]))
            for pid, path in step_record
            if pid in chosen_set
        ]
        remaining = sum(len(p) for _, p in queue)
        while remaining:
            # uniform over remaining unit moves = random interleaving
            r = int(rng.integers(remaining))
            acc = 0
            for w, p in queue:
                if r < acc + len(p):
                    serialized.append((w, p.pop(0)))
                    break
                acc += len(p)
            queue = [(w, p) for w, p in queue if p]
            remaining -= 1

    if len(serialized) < steps:
        return CouplingResult(False, "too few movements", walkers, steps, len(serialized), None, None)

    pos = [int(system.starts[p]) for p in sorted(chosen_set)]
    met = [False] * walkers
    where: dict[int, list[int]] = {}
    for w, v in enumerate(pos):
        if v in where:
            met[w] = True
            for o in where[v]:
                met[o] = True
        where.setdefault(v, []).append(w)
    for w, dst in serialized[:steps]:
        where[pos[w]].remove(w)
        residents = where.get(dst, ())
        if residents:
            met[w] = True
            for o in residents:
                met[o] = True
        where.setdefault(dst, []).append(w)
        pos[w] = dst
    met_count = sum(met)
    return CouplingResult(True, "ok", walkers, steps, len(serialized), walkers - met_count, met_count)
