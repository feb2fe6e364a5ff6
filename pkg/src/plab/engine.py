"""Core discrete-time dynamics: speed-weighted selection, walk steps, and
random-order meetings with sampled reactions.

Each selection event picks a species with probability proportional to
speed * count, a uniform particle of that species, and moves it one walk
step.  On a genuine arrival the mover meets the particles already at the
vertex in uniform random order until an effective reaction fires or all
meetings are ineffective; a lazy stay arrives nowhere and meets nobody, so
suppressing lazy selections reproduces the simple-walk process exactly.
Output particles of a reaction appear at the reaction vertex with fresh ids
and do not meet anyone during the step that created them.  T counts
selection events.

Runs are reproducible: identical (graph, model, configuration, seed) give a
bit-identical result on either kernel backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._rng import make_bitgen, make_generator
from .backend import BACKEND, kernels
from . import _kernels_py
from .graphs import Graph, WalkKind
from .reactions import ModelSpec

__all__ = [
    "Particle",
    "Configuration",
    "SimResult",
    "EngineEvent",
    "Meeting",
    "init_balanced_random",
    "init_stationary",
    "init_explicit",
    "run",
    "is_equilibrium",
    "activity_state",
]

DEFAULT_STEP_CAP = 10**9


@dataclass(frozen=True)
class Particle:
    id: int
    species: str
    vertex: int


@dataclass(frozen=True)
class Configuration:
    """Immutable particle snapshot; ids are stable and assigned in order."""

    particles: tuple[Particle, ...]

    def counts(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for p in self.particles:
            out[p.species] = out.get(p.species, 0) + 1
        return out

    def __len__(self):
        return len(self.particles)


@dataclass(frozen=True)
class Meeting:
    other_id: int
    other_species: str
    outcome: tuple[str, ...] | None  # sampled output multiset; None = inert pair
    effective: bool


@dataclass(frozen=True)
class EngineEvent:
    step: int
    mover_id: int
    mover_species: str
    src: int
    dst: int
    moved: bool
    meetings: tuple[Meeting, ...]


@dataclass(frozen=True)
class SimResult:
    termination: str  # "equilibrium" | "step-cap" | "frozen"
    T: int
    steps_by_species: dict[str, int]
    reactions_count: int
    max_occupancy_seen: int
    nonlazy_steps: int
    final_counts: dict[str, int]
    final_particles: tuple[Particle, ...]
    time_series: tuple[tuple[int, dict[str, int]], ...] | None
    events: tuple[EngineEvent, ...] | None
    backend: str

    def comparable(self):
        """Everything except the backend tag (used for replay checks)."""
        return (
            self.termination,
            self.T,
            tuple(sorted(self.steps_by_species.items())),
            self.reactions_count,
            self.max_occupancy_seen,
            self.nonlazy_steps,
            tuple(sorted(self.final_counts.items())),
            self.final_particles,
            self.time_series,
        )


# ---------------------------------------------------------------------------
# initialisers


def init_balanced_random(g: Graph, seed: int, species: tuple[str, str] = ("red", "blue")) -> Configuration:
    """floor(n/2) particles of each of two species on distinct uniformly
    random vertices; exactly one vertex stays empty iff n is odd."""
    rng = make_generator(seed, 0xBA1A)
    half = g.n // 2
    perm = rng.permutation(g.n)
    particles = [Particle(i, species[0], int(perm[i])) for i in range(half)]
    particles += [Particle(half + i, species[1], int(perm[half + i])) for i in range(half)]
    return Configuration(tuple(particles))


def init_stationary(g: Graph, counts: Mapping[str, int], seed: int) -> Configuration:
    """Each particle at an independent uniform vertex (multiplicity allowed)."""
    rng = make_generator(seed, 0x57A7)
    particles = []
    pid = 0
    for name in counts:
        for _ in range(int(counts[name])):
            particles.append(Particle(pid, name, int(rng.integers(g.n))))
            pid += 1
    return Configuration(tuple(particles))


def init_explicit(placements: Iterable[tuple[int, str]]) -> Configuration:
    """Exact placement; ids follow list order."""
    return Configuration(tuple(Particle(i, sp, int(v)) for i, (v, sp) in enumerate(placements)))


# ---------------------------------------------------------------------------
# reaction-table compilation


def _compile_tables(m: ModelSpec):
    s = len(m.species)
    pair_reactive = np.zeros(s * s, dtype=np.uint8)
    pair_off = np.zeros(s * s + 1, dtype=np.int64)
    cum: list[float] = []
    identity: list[int] = []
    counts_rows: list[tuple[int, ...]] = []
    rows_for_pair: dict[tuple[int, int], tuple[int, int]] = {}
    for a in range(s):
        for b in range(a, s):
            rows = m.pair_outcomes(a, b)
            inp = tuple(1 if i == a else 0 for i in range(s))
            inp = tuple(c + (1 if i == b else 0) for i, c in enumerate(inp))
            reactive = any(p > 0 and counts != inp for counts, p in rows)
            if reactive:
                start = len(cum)
                acc = 0.0
                for counts, p in rows:
                    acc += float(p)
                    cum.append(acc)
                    identity.append(1 if counts == inp else 0)
                    counts_rows.append(counts)
                rows_for_pair[(a, b)] = (start, len(cum))
    # every ordered pair index points at its unordered row range; the two
    # orders of a pair share rows, so explicit start/stop arrays are used
    start_arr = np.zeros(s * s, dtype=np.int64)
    stop_arr = np.zeros(s * s, dtype=np.int64)
    for a in range(s):
        for b in range(s):
            key = (a, b) if a <= b else (b, a)
            if key in rows_for_pair:
                st, sp_ = rows_for_pair[key]
                start_arr[a * s + b] = st
                stop_arr[a * s + b] = sp_
                pair_reactive[a * s + b] = 1
    react_pairs = sorted(rows_for_pair)
    react_a = np.array([a for a, _ in react_pairs], dtype=np.int64)
    react_b = np.array([b for _, b in react_pairs], dtype=np.int64)
    out_counts = (
        np.array(counts_rows, dtype=np.int64).reshape(len(cum), s)
        if cum
        else np.zeros((0, s), dtype=np.int64)
    )
    return (
        pair_reactive,
        start_arr,
        stop_arr,
        np.array(cum, dtype=np.float64),
        np.array(identity, dtype=np.uint8),
        out_counts,
        react_a,
        react_b,
    )


def _counts_from_configuration(m: ModelSpec, c: Configuration) -> list[int]:
    counts = [0] * len(m.species)
    for p in c.particles:
        counts[m.index[p.species]] += 1
    return counts


def activity_state(m: ModelSpec, c: Configuration) -> str:
    """"equilibrium" (no reactive pair realizable by counts), "frozen" (some
    realizable reactive pair, but every one joins two zero-speed species, so
    no meeting can ever happen), or "active"."""
    counts = _counts_from_configuration(m, c)
    speeds = [float(s.speed) for s in m.species]
    (_, _, _, _, _, _, react_a, react_b) = _compile_tables(m)
    code = _kernels_py._activity(counts, speeds, react_a.tolist(), react_b.tolist())
    return {0: "equilibrium", 2: "frozen", -1: "active"}[code]


def is_equilibrium(m: ModelSpec, c: Configuration) -> bool:
    return activity_state(m, c) == "equilibrium"


# ---------------------------------------------------------------------------
# running


_TERM_NAMES = {0: "equilibrium", 1: "step-cap", 2: "frozen"}


def run(
    g: Graph,
    m: ModelSpec,
    c0: Configuration,
    walk: WalkKind = WalkKind.SIMPLE,
    seed: int = 0,
    step_cap: int = DEFAULT_STEP_CAP,
    time_series: bool = False,
    event_log: bool = False,
    backend=None,
) -> SimResult:
    """Run the dynamics until equilibrium, a frozen state, or the step cap.

    ``time_series`` samples per-species counts every n steps.  ``event_log``
    records every selection event (forces the pure-Python kernel; results are
    bit-identical to the compiled one)."""
    if not g.is_connected:
        raise ValueError("the dynamics require a connected graph")
    for p in c0.particles:
        if p.species not in m.index:
            raise ValueError(f"unknown species {p.species!r} in configuration")
        if not 0 <= p.vertex < g.n:
            raise ValueError(f"vertex {p.vertex} out of range")

    (
        pair_reactive,
        start_arr,
        stop_arr,
        out_cum,
        out_identity,
        out_counts,
        react_a,
        react_b,
    ) = _compile_tables(m)
    indptr, adj = g.csr()
    init_species = np.array([m.index[p.species] for p in c0.particles], dtype=np.int64)
    init_vertex = np.array([p.vertex for p in c0.particles], dtype=np.int64)
    speeds = np.array([float(s.speed) for s in m.species], dtype=np.float64)

    log: list | None = [] if event_log else None
    kern = backend if backend is not None else (_kernels_py if event_log else kernels)
    if event_log and kern is not _kernels_py:
        raise ValueError("event logging is only supported by the pure-Python kernel")
    raw = kern.engine_run(
        indptr,
        adj,
        walk is WalkKind.LAZY,
        speeds,
        pair_reactive,
        start_arr,
        stop_arr,
        out_cum,
        out_identity,
        out_counts,
        react_a,
        react_b,
        init_species,
        init_vertex,
        int(step_cap),
        g.n if time_series else 0,
        make_bitgen(seed),
        **({"log": log} if kern is _kernels_py else {}),
    )
    (
        status,
        t_total,
        steps_by_species,
        reactions,
        max_occ,
        nonlazy,
        ids,
        fin_species,
        fin_vertex,
        _next_id,
        ts_steps,
        ts_counts,
    ) = raw

    names = m.names
    final = tuple(
        Particle(int(i), names[int(s)], int(v)) for i, s, v in zip(ids, fin_species, fin_vertex)
    )
    final_counts = {n: 0 for n in names}
    for p in final:
        final_counts[p.species] += 1
    series = None
    if time_series:
        series = tuple(
            (int(t), {names[s]: int(c) for s, c in enumerate(row)})
            for t, row in zip(ts_steps, ts_counts)
        )
    events = _decode_log(m, out_counts, out_identity, log) if event_log else None
    return SimResult(
        termination=_TERM_NAMES[status],
        T=int(t_total),
        steps_by_species={names[s]: int(c) for s, c in enumerate(steps_by_species)},
        reactions_count=int(reactions),
        max_occupancy_seen=int(max_occ),
        nonlazy_steps=int(nonlazy),
        final_counts=final_counts,
        final_particles=final,
        time_series=series,
        events=events,
        backend=getattr(kern, "BACKEND_NAME", BACKEND),
    )


def _decode_log(m: ModelSpec, out_counts, out_identity, log) -> tuple[EngineEvent, ...]:
    names = m.names
    events = []
    for (t, pid, sp, src, dst, moved, meetings) in log:
        decoded = []
        for other, other_sp, row in meetings:
            if row < 0:
                decoded.append(Meeting(other, names[other_sp], None, False))
            else:
                outs = tuple(
                    names[s] for s in range(len(names)) for _ in range(int(out_counts[row, s]))
                )
                decoded.append(Meeting(other, names[other_sp], outs, not bool(out_identity[row])))
        events.append(EngineEvent(t, pid, names[sp], src, dst, moved, tuple(decoded)))
    return tuple(events)
