"""Canonical one- and two-type reaction models, and the stationary-red
particle-hole model driven by site-wise instruction stacks.

The five deterministic models come with default energies that make each one
dissipative out of the box (infection needs the healthy type heavier than the
infected one).  The toppling machinery pre-samples, per vertex, a fixed list
of uniform neighbor instructions; a "toppling" moves one mobile (blue)
particle along its vertex's next unused instruction, annihilating against a
stationary red on arrival.  The per-vertex toppling counts (the odometer) are
independent of the toppling order, which the tests check exactly.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from ._rng import make_generator, seed_seq
from .graphs import Graph
from .reactions import ModelSpec, Species, as_number

__all__ = [
    "SPECIAL_KINDS",
    "make_special",
    "TopplingInstance",
    "TopplingResult",
    "StackExhausted",
    "toppling_build",
    "toppling_run",
    "toppling_auto",
]

SPECIAL_KINDS = (
    "one-type-annihilation",
    "coalescence",
    "two-type-annihilation",
    "predator-prey",
    "infection",
)

_DEFAULT_NAMES = {
    "one-type-annihilation": ("red",),
    "coalescence": ("red",),
    "two-type-annihilation": ("red", "blue"),
    "predator-prey": ("predator", "prey"),
    "infection": ("infected", "healthy"),
}


def make_special(kind: str, speeds=None, names: Sequence[str] | None = None, energies=None) -> ModelSpec:
    """Build one of the canonical models.

    speeds: None for equal speeds; for two-species kinds a single number p
    gives (p, 1-p) with p the speed of the first species; or a mapping
    name -> speed.  energies: optional mapping overriding the defaults
    (unit energies, except infection where healthy has energy 2).
    """
    if kind not in SPECIAL_KINDS:
        raise ValueError(f"unknown special model {kind!r}; choose from {SPECIAL_KINDS}")
    names = tuple(names) if names is not None else _DEFAULT_NAMES[kind]
    expected = len(_DEFAULT_NAMES[kind])
    if len(names) != expected:
        raise ValueError(f"{kind} takes {expected} species, got {len(names)}")

    if speeds is None:
        speed_list = [Fraction(1, expected)] * expected
    elif isinstance(speeds, Mapping):
        speed_list = [as_number(speeds[n]) for n in names]
    else:
        if expected != 2:
            raise ValueError(f"{kind} has one species; pass speeds=None or a mapping")
        p = as_number(speeds)
        speed_list = [p, 1 - p]

    energy_defaults = {n: Fraction(1) for n in names}
    if kind == "infection":
        energy_defaults[names[1]] = Fraction(2)
    if energies:
        for n, e in energies.items():
            energy_defaults[n] = as_number(e)

    species = [Species(n, s, energy_defaults[n]) for n, s in zip(names, speed_list)]
    a = names[0]
    b = names[-1]
    tables = {
        "one-type-annihilation": {(a, a): [((), 1)]},
        "coalescence": {(a, a): [((a,), 1)]},
        "two-type-annihilation": {(a, b): [((), 1)]},
        "predator-prey": {(a, b): [((a,), 1)]},
        "infection": {(a, b): [((a, a), 1)]},
    }
    return ModelSpec(species, tables[kind])


# ---------------------------------------------------------------------------
# site-wise instruction stacks and abelian toppling


class StackExhausted(RuntimeError):
    def __init__(self, vertex: int):
        super().__init__(f"instruction stack of vertex {vertex} is exhausted")
        self.vertex = vertex


@dataclass(frozen=True)
class TopplingInstance:
    """Graph, per-vertex instruction stacks, and blue/red start occupancies.

    The stacks are immutable; each run keeps its own odometer (used-count per
    vertex), so one instance supports many runs with shared randomness.
    Stacks are prefix-stable in ``stack_len``: rebuilding with a longer
    length and the same seed extends every stack without changing its prefix.
    """

    graph: Graph
    stacks: tuple[tuple[int, ...], ...]
    blue: tuple[int, ...]  # vertices, with multiplicity
    red: tuple[int, ...]
    seed: int
    stack_len: int


@dataclass
class TopplingResult:
    odometer: np.ndarray  # per-vertex toppling counts
    total_moves: int
    complete: bool  # reached equilibrium (no blue left) legally
    remaining_blue: int


def toppling_build(g: Graph, blue: Iterable[int], red: Iterable[int], stack_len: int, seed: int) -> TopplingInstance:
    """Sample instruction stacks of the given length, one uniform incident
    edge-end per entry, from an independent per-vertex stream."""
    stacks = []
    for v in range(g.n):
        row = g.adjacency[v]
        rng = make_generator(seed, 0x70BB, v)
        idx = rng.integers(len(row), size=stack_len) if stack_len else []
        stacks.append(tuple(row[i] for i in idx))
    return TopplingInstance(g, tuple(stacks), tuple(int(v) for v in blue), tuple(int(v) for v in red), seed, stack_len)


def toppling_run(
    inst: TopplingInstance,
    policy: str = "random-order",
    order: Sequence[int] | None = None,
    seed: int | None = None,
) -> TopplingResult:
    """Topple until no blue remains or the policy yields no legal move.

    Policies: "fixed-order" repeatedly scans ``order`` and topples the first
    blue-occupied vertex; "random-order" picks a uniformly random occupied
    vertex; "greedy-first" picks the vertex holding the most blues (lowest id
    on ties).  When several blues share a vertex the lowest particle id moves
    (order-irrelevant for odometers, fixed for determinism).
    """
    g = inst.graph
    blues: list[list[int]] = [[] for _ in range(g.n)]
    for pid, v in enumerate(inst.blue):
        blues[v].append(pid)
    for row in blues:
        row.sort()
    reds = Counter(inst.red)
    used = [0] * g.n
    occupied = sorted(v for v in range(g.n) if blues[v])
    remaining = len(inst.blue)
    rng = None
    if policy == "random-order":
        rng = make_generator(seed if seed is not None else 0, 0x0BD)
    elif policy == "fixed-order":
        if order is None:
            raise ValueError("fixed-order policy needs an order")
        order = [int(v) for v in order]
    elif policy != "greedy-first":
        raise ValueError(f"unknown policy {policy!r}")

    total = 0
    while remaining:
        if policy == "random-order":
            v = occupied[int(rng.integers(len(occupied)))]
        elif policy == "greedy-first":
            v = max(occupied, key=lambda u: (len(blues[u]), -u))
        else:
            v = next((u for u in order if blues[u]), -1)
            if v < 0:
                return TopplingResult(np.array(used, dtype=np.int64), total, False, remaining)
        if used[v] >= len(inst.stacks[v]):
            raise StackExhausted(v)
        dst = inst.stacks[v][used[v]]
        used[v] += 1
        pid = blues[v].pop(0)
        if not blues[v]:
            occupied.remove(v)
        total += 1
        if reds[dst] > 0:
            reds[dst] -= 1
            remaining -= 1
        else:
            if not blues[dst]:
                occupied.append(dst)
                occupied.sort()
            blues[dst].append(pid)
            blues[dst].sort()
    return TopplingResult(np.array(used, dtype=np.int64), total, True, 0)


def toppling_auto(
    g: Graph,
    blue: Iterable[int],
    red: Iterable[int],
    seed: int,
    policy: str = "random-order",
    order: Sequence[int] | None = None,
    run_seed: int | None = None,
    start_len: int | None = None,
    max_len: int | None = None,
) -> tuple[TopplingInstance, TopplingResult]:
    """Run with geometric stack doubling on exhaustion (paper-scale hitting
    times keep expected stack use near n^2, so doubling terminates quickly)."""
    blue = tuple(blue)
    red = tuple(red)
    length = start_len if start_len is not None else max(4 * g.n, 64)
    cap = max_len if max_len is not None else 1 << 40
    while True:
        inst = toppling_build(g, blue, red, length, seed)
        try:
            return inst, toppling_run(inst, policy, order=order, seed=run_seed)
        except StackExhausted:
            if length * 2 > cap:
                raise
            length *= 2
