"""Pure-Python kernels: reference implementations of the hot simulation loops.

The compiled extension ``plab._kernels`` mirrors every function here with the
exact same random-draw order (see ``plab._rng``), so the two backends produce
bit-identical outputs for identical inputs.  This module is the semantic
reference; it additionally supports event logging and internal-state audits,
which the compiled twin omits.

All functions take a graph as ``(indptr, adj)`` int64 CSR arrays and a
``numpy.random.PCG64`` bit generator that they consume exclusively.
"""

from __future__ import annotations

import numpy as np

from ._rng import RawStream

BACKEND_NAME = "python"

TERM_EQUILIBRIUM = 0
TERM_STEP_CAP = 1
TERM_FROZEN = 2

STRATEGY_BERNOULLI = 0
STRATEGY_ALTERNATING = 1


# ---------------------------------------------------------------------------
# engine


class _EngineState:
    """Live configuration: per-species member arrays with swap-remove, and a
    per-vertex doubly linked occupancy list, both O(1) per update."""

    __slots__ = (
        "n_species",
        "n_vertices",
        "species",
        "vertex",
        "slot",
        "nxt",
        "prv",
        "head",
        "members",
        "counts",
        "next_id",
    )

    def __init__(self, n_vertices, n_species, init_species, init_vertex):
        self.n_vertices = n_vertices
        self.n_species = n_species
        self.species: list[int] = []
        self.vertex: list[int] = []
        self.slot: list[int] = []
        self.nxt: list[int] = []
        self.prv: list[int] = []
        self.head = [-1] * n_vertices
        self.members: list[list[int]] = [[] for _ in range(n_species)]
        self.counts = [0] * n_species
        self.next_id = 0
        for s, v in zip(init_species, init_vertex):
            self.create(int(s), int(v))

    def create(self, s: int, v: int) -> int:
        pid = self.next_id
        self.next_id += 1
        self.species.append(s)
        self.vertex.append(v)
        self.slot.append(len(self.members[s]))
        self.members[s].append(pid)
        self.counts[s] += 1
        # push-front into the occupancy list of v
        h = self.head[v]
        self.nxt.append(h)
        self.prv.append(-1)
        if h != -1:
            self.prv[h] = pid
        self.head[v] = pid
        return pid

    def unlink(self, pid: int) -> None:
        p, q = self.prv[pid], self.nxt[pid]
        if p != -1:
            self.nxt[p] = q
        else:
            self.head[self.vertex[pid]] = q
        if q != -1:
            self.prv[q] = p

    def link(self, pid: int, v: int) -> None:
        self.vertex[pid] = v
        h = self.head[v]
        self.nxt[pid] = h
        self.prv[pid] = -1
        if h != -1:
            self.prv[h] = pid
        self.head[v] = pid

    def remove(self, pid: int) -> None:
        self.unlink(pid)
        s = self.species[pid]
        mem = self.members[s]
        pos = self.slot[pid]
        last = mem[-1]
        mem[pos] = last
        self.slot[last] = pos
        mem.pop()
        self.counts[s] -= 1
        self.species[pid] = -1  # tombstone

    def residents(self, v: int) -> list[int]:
        out = []
        pid = self.head[v]
        while pid != -1:
            out.append(pid)
            pid = self.nxt[pid]
        return out

    def audit(self) -> None:
        """Consistency assertions for tests: counts, slots, occupancy agree."""
        live = [pid for pid in range(self.next_id) if self.species[pid] >= 0]
        assert sum(self.counts) == len(live)
        for s in range(self.n_species):
            assert self.counts[s] == len(self.members[s])
            for pos, pid in enumerate(self.members[s]):
                assert self.species[pid] == s and self.slot[pid] == pos
        seen = set()
        for v in range(self.n_vertices):
            for pid in self.residents(v):
                assert self.vertex[pid] == v and pid not in seen
                seen.add(pid)
        assert seen == set(live)


def _activity(counts, speeds, react_a, react_b):
    """0 = equilibrium, 2 = frozen, -1 = still active."""
    any_realizable = False
    all_zero_speed = True
    for a, b in zip(react_a, react_b):
        if a == b:
            realizable = counts[a] >= 2
        else:
            realizable = counts[a] >= 1 and counts[b] >= 1
        if realizable:
            any_realizable = True
            if speeds[a] != 0.0 or speeds[b] != 0.0:
                all_zero_speed = False
                break
    if not any_realizable:
        return TERM_EQUILIBRIUM
    if all_zero_speed:
        return TERM_FROZEN
    return -1


def engine_run(
    indptr,
    adj,
    lazy,
    speeds,
    pair_reactive,
    pair_start,
    pair_stop,
    out_cum,
    out_identity,
    out_counts,
    react_a,
    react_b,
    init_species,
    init_vertex,
    step_cap,
    ts_stride,
    bitgen,
    log=None,
    audit=False,
):
    """Run the discrete-time meeting dynamics until equilibrium, frozen state
    or the step cap.  Returns a raw result tuple; ``plab.engine`` wraps it.

    ``log``, when a list, receives one entry per selection event:
    ``(T, mover_id, mover_species, src, dst, moved, meetings)`` with
    ``meetings`` a list of ``(other_id, other_species, outcome_row)`` where
    row -1 means an inert pair (nothing sampled).
    """
    n = len(indptr) - 1
    n_species = len(speeds)
    speeds = [float(x) for x in speeds]
    indptr_l = indptr.tolist()
    adj_l = adj.tolist()
    state = _EngineState(n, n_species, init_species, init_vertex)
    rng = RawStream(bitgen)

    t_total = 0
    nonlazy = 0
    reactions = 0
    max_occ = 0
    for v in range(n):
        occ = len(state.residents(v))
        if occ > max_occ:
            max_occ = occ
    steps_by_species = [0] * n_species
    ts_steps: list[int] = []
    ts_counts: list[list[int]] = []

    status = _activity(state.counts, speeds, react_a, react_b)
    out_cum_l = out_cum.tolist()
    out_identity_l = out_identity.tolist()
    out_counts_l = out_counts.tolist()
    pair_start_l = pair_start.tolist()
    pair_stop_l = pair_stop.tolist()
    pair_reactive_l = pair_reactive.tolist()

    while status == -1 and t_total < step_cap:
        # (1) species weighted by speed * count, then a uniform member
        total = 0.0
        for s in range(n_species):
            total += speeds[s] * state.counts[s]
        thr = rng.random01() * total
        acc = 0.0
        sel = -1
        for s in range(n_species):
            acc += speeds[s] * state.counts[s]
            if thr < acc:
                sel = s
                break
        if sel < 0:  # thr rounded up to total: take the last positive-weight species
            for s in range(n_species - 1, -1, -1):
                if speeds[s] * state.counts[s] > 0.0:
                    sel = s
                    break
        pid = state.members[sel][rng.randint(state.counts[sel])]
        src = state.vertex[pid]
        steps_by_species[sel] += 1

        # (2) one walk step; a lazy stay arrives nowhere and meets nobody
        deg = indptr_l[src + 1] - indptr_l[src]
        moved = True
        if lazy:
            k = rng.randint(2 * deg)
            if k < deg:
                dst = adj_l[indptr_l[src] + k]
            else:
                dst = src
                moved = False
        else:
            dst = adj_l[indptr_l[src] + rng.randint(deg)]

        meetings = [] if log is not None else None
        if moved:
            nonlazy += 1
            state.unlink(pid)
            residents = state.residents(dst)
            state.link(pid, dst)
            occ = len(residents) + 1
            if occ > max_occ:
                max_occ = occ
            if residents:
                rng.shuffle(residents)
                sp_m = state.species[pid]
                for other in residents:
                    sp_o = state.species[other]
                    a, b = (sp_m, sp_o) if sp_m <= sp_o else (sp_o, sp_m)
                    pk = a * n_species + b
                    if not pair_reactive_l[pk]:
                        if meetings is not None:
                            meetings.append((other, sp_o, -1))
                        continue
                    u = rng.random01()
                    row = pair_start_l[pk]
                    stop = pair_stop_l[pk]
                    while row < stop - 1 and u >= out_cum_l[row]:
                        row += 1
                    if meetings is not None:
                        meetings.append((other, sp_o, row))
                    if out_identity_l[row]:
                        continue
                    # effective reaction: both inputs out, outputs in at dst
                    state.remove(pid)
                    state.remove(other)
                    for s in range(n_species):
                        for _ in range(out_counts_l[row][s]):
                            state.create(s, dst)
                    reactions += 1
                    status = _activity(state.counts, speeds, react_a, react_b)
                    break
        t_total += 1
        if log is not None:
            log.append((t_total, pid, sel, src, dst, moved, meetings))
        if audit:
            state.audit()
        if ts_stride and t_total % ts_stride == 0:
            ts_steps.append(t_total)
            ts_counts.append(list(state.counts))

    if status == -1:
        status = TERM_STEP_CAP

    live = sorted(pid for pid in range(state.next_id) if state.species[pid] >= 0)
    ids = np.array(live, dtype=np.int64)
    fin_species = np.array([state.species[p] for p in live], dtype=np.int64)
    fin_vertex = np.array([state.vertex[p] for p in live], dtype=np.int64)
    return (
        status,
        t_total,
        np.array(steps_by_species, dtype=np.int64),
        reactions,
        max_occ,
        nonlazy,
        ids,
        fin_species,
        fin_vertex,
        state.next_id,
        np.array(ts_steps, dtype=np.int64),
        np.array(ts_counts, dtype=np.int64).reshape(len(ts_steps), n_species),
    )


# ---------------------------------------------------------------------------
# single-walk Monte Carlo loops


def mc_hit_times(indptr, adj, lazy, starts, uniform_start, target, min_time, max_steps, reps, bitgen):
    """First time >= min_time the walk is on the target; max_steps+1 if never.

    Per replicate the start is ``starts[0]`` or, with ``uniform_start``, a
    uniform draw from ``starts``.  Positions are examined at integer times
    0, 1, ... after placement (time 0 = the start itself).
    """
    rng = RawStream(bitgen)
    indptr_l = indptr.tolist()
    adj_l = adj.tolist()
    starts_l = [int(x) for x in starts]
    target_l = target.tolist()
    out = np.empty(reps, dtype=np.int64)
    for rep in range(reps):
        v = starts_l[rng.randint(len(starts_l))] if uniform_start else starts_l[0]
        t = 0
        hit = max_steps + 1
        if min_time <= 0 and target_l[v]:
            hit = 0
        else:
            while t < max_steps:
                deg = indptr_l[v + 1] - indptr_l[v]
                if lazy:
                    k = rng.randint(2 * deg)
                    if k < deg:
                        v = adj_l[indptr_l[v] + k]
                else:
                    v = adj_l[indptr_l[v] + rng.randint(deg)]
                t += 1
                if t >= min_time and target_l[v]:
                    hit = t
                    break
        out[rep] = hit
    return out


def mc_meeting(indptr, adj, lazy, x, y, strategy, p, cap, reps, bitgen):
    """Steps until two tokens co-locate; the strategy picks the mover each
    step (bernoulli: token 0 with probability p; alternating: token 0 on even
    steps).  cap+1 marks a capped replicate."""
    rng = RawStream(bitgen)
    indptr_l = indptr.tolist()
    adj_l = adj.tolist()
    out = np.empty(reps, dtype=np.int64)
    for rep in range(reps):
        a, b = x, y
        t = 0
        while a != b and t < cap:
            if strategy == STRATEGY_BERNOULLI:
                move_first = rng.random01() < p
            else:
                move_first = (t % 2) == 0
            v = a if move_first else b
            deg = indptr_l[v + 1] - indptr_l[v]
            if lazy:
                k = rng.randint(2 * deg)
                if k < deg:
                    v = adj_l[indptr_l[v] + k]
            else:
                v = adj_l[indptr_l[v] + rng.randint(deg)]
            if move_first:
                a = v
            else:
                b = v
            t += 1
        out[rep] = t if a == b else cap + 1
    return out


def mc_p_return(indptr, adj, a_list, a_mask, T, reps, bitgen):
    """Lazy walk from a uniform vertex of A; success iff the walk sits in A at
    some time 1 <= t <= T-1 having taken at least one non-lazy step by then."""
    rng = RawStream(bitgen)
    indptr_l = indptr.tolist()
    adj_l = adj.tolist()
    a_l = [int(v) for v in a_list]
    mask_l = a_mask.tolist()
    out = np.zeros(reps, dtype=np.uint8)
    for rep in range(reps):
        v = a_l[rng.randint(len(a_l))]
        moved_once = False
        for t in range(1, T):
            deg = indptr_l[v + 1] - indptr_l[v]
            k = rng.randint(2 * deg)
            if k < deg:
                v = adj_l[indptr_l[v] + k]
                moved_once = True
            if moved_once and mask_l[v]:
                out[rep] = 1
                break
    return out


# ---------------------------------------------------------------------------
# non-interacting walkers


def lonely_plain(indptr, adj, lazy, n_walkers, T, bitgen):
    """Plain lonely-walker dynamics: uniform independent starts (co-location
    at time 0 counts as a meeting), then T single-walker moves, marking the
    mover and everyone at its arrival vertex as met."""
    rng = RawStream(bitgen)
    n = len(indptr) - 1
    indptr_l = indptr.tolist()
    adj_l = adj.tolist()

    pos = [rng.randint(n) for _ in range(n_walkers)]
    met = [0] * n_walkers
    head = [-1] * n
    nxt = [-1] * n_walkers
    prv = [-1] * n_walkers

    def link(w, v):
        h = head[v]
        nxt[w] = h
        prv[w] = -1
        if h != -1:
            prv[h] = w
        head[v] = w

    def unlink(w, v):
        pn, qn = prv[w], nxt[w]
        if pn != -1:
            nxt[pn] = qn
        else:
            head[v] = qn
        if qn != -1:
            prv[qn] = pn

    for w, v in enumerate(pos):
        if head[v] != -1:
            met[w] = 1
            r = head[v]
            while r != -1:
                met[r] = 1
                r = nxt[r]
        link(w, v)

    for _ in range(T):
        w = rng.randint(n_walkers)
        v = pos[w]
        deg = indptr_l[v + 1] - indptr_l[v]
        if lazy:
            k = rng.randint(2 * deg)
            dst = adj_l[indptr_l[v] + k] if k < deg else v
            stepped = k < deg
        else:
            dst = adj_l[indptr_l[v] + rng.randint(deg)]
            stepped = True
        if not stepped:
            continue
        unlink(w, v)
        r = head[dst]
        if r != -1:
            met[w] = 1
            while r != -1:
                met[r] = 1
                r = nxt[r]
        link(w, dst)
        pos[w] = dst

    return (
        np.array(met, dtype=np.uint8),
        np.array(pos, dtype=np.int64),
    )
