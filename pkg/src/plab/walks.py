"""Single random walks on a graph: exact and Monte-Carlo functionals.

Exact quantities (hitting times, stationary-hitting identities, mixing
distances) come from linear solves and matrix-vector iteration; Monte-Carlo
estimates run in the kernel backend and always carry standard errors, with
downstream checks using 3-sigma tolerances.  Time convention: the walk's
position is examined at integer times 0, 1, ..., with time 0 the initial
placement, so "before time T" means times 0..T-1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import spsolve

from ._rng import make_bitgen
from .backend import kernels
from .graphs import Graph, WalkKind, sparse_transition, spectral_mu2

__all__ = [
    "WalkFunctionalResult",
    "Strategy",
    "step",
    "hitting_exact",
    "h_max",
    "return_time_mc",
    "stationary_hitting_Z",
    "meeting_time_mc",
    "hit_from_random_mc",
    "HitFromRandomResult",
    "mixing_distance",
    "p_return_mc",
    "p_hit_mc",
]

# open-ended Monte-Carlo loops abort past this (H_max = O(n^2) on connected
# regular graphs, so 100 n^2 is safely above any expected stopping time)
def _step_cap(n: int) -> int:
    return 100 * n * n


@dataclass(frozen=True)
class WalkFunctionalResult:
    estimate: float
    stderr: float
    samples: int
    method: str  # "exact-linear-solve" | "monte-carlo"


@dataclass(frozen=True)
class Strategy:
    """Rule choosing which of two tokens moves at each step."""

    rule: str  # "bernoulli" | "alternating" | "custom"
    p: float = 0.5
    fn: Callable | None = None  # custom: full history -> token index

    @staticmethod
    def bernoulli(p: float) -> "Strategy":
        if not 0.0 <= p <= 1.0:
            raise ValueError("bernoulli parameter must be in [0, 1]")
        return Strategy("bernoulli", p=p)

    @staticmethod
    def alternating() -> "Strategy":
        return Strategy("alternating")

    @staticmethod
    def custom(fn: Callable) -> "Strategy":
        return Strategy("custom", fn=fn)


def step(g: Graph, v: int, walk: WalkKind, rng: np.random.Generator) -> int:
    """One walk step from v (convenience wrapper; deterministic given rng state)."""
    row = g.adjacency[v]
    deg = len(row)
    if walk is WalkKind.LAZY:
        k = int(rng.integers(2 * deg))
        return row[k] if k < deg else v
    return row[int(rng.integers(deg))]


def _mean_stderr(values: np.ndarray) -> tuple[float, float]:
    n = len(values)
    mean = float(np.mean(values))
    if n < 2:
        return mean, 0.0
    return mean, float(np.std(values, ddof=1) / math.sqrt(n))


def _prob_stderr(successes: int, n: int) -> tuple[float, float]:
    p = successes / n
    # floor at 1/n so 3-sigma bands stay meaningful at observed 0 or 1
    return p, max(math.sqrt(p * (1.0 - p) / n), 1.0 / n)


def _target_mask(g: Graph, target: Iterable[int]) -> np.ndarray:
    mask = np.zeros(g.n, dtype=np.uint8)
    tl = [int(v) for v in target]
    if not tl:
        raise ValueError("target set must be nonempty")
    for v in tl:
        if not 0 <= v < g.n:
            raise ValueError(f"target vertex {v} out of range")
        mask[v] = 1
    return mask


# ---------------------------------------------------------------------------
# exact functionals


def hitting_exact(g: Graph, target: Iterable[int], walk: WalkKind = WalkKind.SIMPLE) -> np.ndarray:
    """Expected steps to first reach the target set, from every vertex.

    Solves h = 0 on the target and (I - Q) h = 1 off it, where Q is the
    transition matrix restricted to non-target vertices; the solution is
    refined until the residual is at most 1e-10.
    """
    if not g.is_connected:
        raise ValueError("hitting_exact requires a connected graph")
    mask = _target_mask(g, target).astype(bool)
    h = np.zeros(g.n)
    free = ~mask
    if not free.any():
        return h
    p = sparse_transition(g, walk)
    q = p[free][:, free]
    a = (np.eye(int(free.sum())) - q.toarray()) if g.n <= 2048 else None
    b = np.ones(int(free.sum()))
    if a is not None:
        z = np.linalg.solve(a, b)
        for _ in range(3):
            r = b - (z - q @ z)
            if np.max(np.abs(r)) <= 1e-10:
                break
            z = z + np.linalg.solve(a, r)
    else:
        m = (sp.eye(int(free.sum()), format="csr") - q).tocsc()
        z = spsolve(m, b)
        for _ in range(3):
            r = b - (z - q @ z)
            if np.max(np.abs(r)) <= 1e-10:
                break
            z = z + spsolve(m, r)
    resid = float(np.max(np.abs(b - (z - q @ z))))
    if resid > 1e-10:
        raise RuntimeError(f"hitting-time solve residual {resid:g} exceeds 1e-10")
    h[free] = z
    return h


def h_max(g: Graph, walk: WalkKind = WalkKind.SIMPLE) -> float:
    """Worst-case expected hitting time max_{x,y} H_x(y): n single-target solves."""
    best = 0.0
    for y in range(g.n):
        h = hitting_exact(g, [y], walk)
        best = max(best, float(h.max()))
    return best


def stationary_hitting_Z(g: Graph, v: int, walk: WalkKind = WalkKind.LAZY) -> tuple[float, float]:
    """(Z_vv, expected hitting time of v from a uniform start).

    Z_vv sums P^t_vv - 1/n until the geometric tail bound mu2^t/(1-mu2) drops
    below 1e-10; the uniform-start hitting expectation is n * Z_vv.  Lazy
    walks only: nonnegative eigenvalues make the series absolutely convergent.
    """
    if walk is not WalkKind.LAZY:
        raise ValueError("stationary_hitting_Z is defined for the lazy walk")
    if g.d is None:
        raise ValueError("stationary_hitting_Z requires a regular graph (uniform stationary law)")
    mu2 = spectral_mu2(g, WalkKind.LAZY)
    if mu2 >= 1.0 - 1e-12:
        raise ValueError(f"mu2 = {mu2} too close to 1: no spectral gap")
    p = sparse_transition(g, WalkKind.LAZY).T.tocsr()
    x = np.zeros(g.n)
    x[v] = 1.0
    inv_n = 1.0 / g.n
    z = 0.0
    t = 0
    tail = 1.0 / (1.0 - mu2)
    while tail >= 1e-10:
        z += x[v] - inv_n
        x = p @ x
        t += 1
        tail *= mu2
    return z, g.n * z


def mixing_distance(g: Graph, u: int, t: int, walk: WalkKind = WalkKind.LAZY) -> float:
    """max_v |P^t(u, v) - 1/n| via t sparse matrix-vector products."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    p = sparse_transition(g, walk).T.tocsr()
    x = np.zeros(g.n)
    x[u] = 1.0
    for _ in range(t):
        x = p @ x
    return float(np.max(np.abs(x - 1.0 / g.n)))


# ---------------------------------------------------------------------------
# Monte-Carlo functionals


def _csr(g: Graph):
    return g.csr()


def return_time_mc(g: Graph, v: int, walk: WalkKind, reps: int, seed: int) -> WalkFunctionalResult:
    """Empirical mean first positive time back at v."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    indptr, adj = _csr(g)
    times = kernels.mc_hit_times(
        indptr, adj, walk is WalkKind.LAZY,
        np.array([v], dtype=np.int64), False,
        _target_mask(g, [v]), 1, _step_cap(g.n), reps, make_bitgen(seed),
    )
    if times.max() > _step_cap(g.n):
        raise RuntimeError(f"return walk exceeded the {_step_cap(g.n)}-step cap")
    mean, se = _mean_stderr(times)
    return WalkFunctionalResult(mean, se, reps, "monte-carlo")


def meeting_time_mc(
    g: Graph,
    x: int,
    y: int,
    strategy: Strategy,
    walk: WalkKind,
    reps: int,
    seed: int,
) -> WalkFunctionalResult:
    """Empirical mean steps until the two tokens co-locate; the strategy picks
    which token takes the single walk step each time."""
    if x == y:
        raise ValueError("tokens must start at distinct vertices")
    cap = _step_cap(g.n)
    if strategy.rule == "custom":
        times = _meeting_custom(g, x, y, strategy.fn, walk, reps, seed, cap)
    else:
        code = kernels.STRATEGY_BERNOULLI if strategy.rule == "bernoulli" else kernels.STRATEGY_ALTERNATING
        indptr, adj = _csr(g)
        times = kernels.mc_meeting(
            indptr, adj, walk is WalkKind.LAZY, x, y, code, strategy.p, cap, reps, make_bitgen(seed)
        )
    if times.max() > cap:
        bad = int(np.argmax(times))
        raise RuntimeError(f"meeting replicate {bad} exceeded the {cap}-step cap")
    mean, se = _mean_stderr(times)
    return WalkFunctionalResult(mean, se, reps, "monte-carlo")


def _meeting_custom(g, x, y, fn, walk, reps, seed, cap):
    from ._rng import RawStream

    rng = RawStream(make_bitgen(seed))
    out = np.empty(reps, dtype=np.int64)
    for rep in range(reps):
        pos = [x, y]
        history = [(x, y)]
        t = 0
        while pos[0] != pos[1] and t < cap:
            token = int(fn(history)) & 1
            pos[token] = _raw_step(g, pos[token], walk, rng)
            t += 1
            history.append((pos[0], pos[1]))
        out[rep] = t if pos[0] == pos[1] else cap + 1
    return out


def _raw_step(g, v, walk, rng):
    row = g.adjacency[v]
    deg = len(row)
    if walk is WalkKind.LAZY:
        k = rng.randint(2 * deg)
        return row[k] if k < deg else v
    return row[rng.randint(deg)]


@dataclass(frozen=True)
class HitFromRandomResult:
    mean: float
    mean_stderr: float
    tail_prob: float
    tail_stderr: float
    threshold: float
    samples: int


def hit_from_random_mc(
    g: Graph,
    a: Iterable[int],
    b: Iterable[int],
    walk: WalkKind,
    reps: int,
    seed: int,
) -> HitFromRandomResult:
    """Start at a uniform vertex of A, walk until B; returns the empirical
    mean hitting time and the empirical P(H >= |A| / (2|B|))."""
    a_list = sorted({int(v) for v in a})
    b_set = {int(v) for v in b}
    if not a_list or not b_set:
        raise ValueError("A and B must be nonempty")
    if b_set.intersection(a_list):
        raise ValueError("A and B must be disjoint")
    indptr, adj = _csr(g)
    times = kernels.mc_hit_times(
        indptr, adj, walk is WalkKind.LAZY,
        np.array(a_list, dtype=np.int64), True,
        _target_mask(g, b_set), 0, _step_cap(g.n), reps, make_bitgen(seed),
    )
    if times.max() > _step_cap(g.n):
        raise RuntimeError(f"hitting walk exceeded the {_step_cap(g.n)}-step cap")
    mean, se = _mean_stderr(times)
    threshold = len(a_list) / (2.0 * len(b_set))
    tail, tail_se = _prob_stderr(int((times >= threshold).sum()), reps)
    return HitFromRandomResult(mean, se, tail, tail_se, threshold, reps)


def p_return_mc(g: Graph, a: Iterable[int], T: int, reps: int, seed: int) -> WalkFunctionalResult:
    """Estimate of the probability that a lazy walk from a uniform vertex of A
    revisits A before time T after at least one non-lazy step."""
    a_list = sorted({int(v) for v in a})
    if not a_list:
        raise ValueError("A must be nonempty")
    indptr, adj = _csr(g)
    wins = kernels.mc_p_return(
        indptr, adj, np.array(a_list, dtype=np.int64), _target_mask(g, a_list), T, reps, make_bitgen(seed)
    )
    p, se = _prob_stderr(int(wins.sum()), reps)
    return WalkFunctionalResult(p, se, reps, "monte-carlo")


def p_hit_mc(
    g: Graph,
    v: int,
    b: Iterable[int],
    T: int,
    reps: int,
    seed: int,
    walk: WalkKind = WalkKind.LAZY,
) -> WalkFunctionalResult:
    """Estimate of the probability that a walk from v visits B before time T."""
    b_set = {int(w) for w in b}
    if v in b_set:
        raise ValueError("start vertex must lie outside B")
    indptr, adj = _csr(g)
    max_steps = max(T - 1, 0)
    times = kernels.mc_hit_times(
        indptr, adj, walk is WalkKind.LAZY,
        np.array([v], dtype=np.int64), False,
        _target_mask(g, b_set), 1, max_steps, reps, make_bitgen(seed),
    )
    hits = int((times < T).sum())
    p, se = _prob_stderr(hits, reps)
    return WalkFunctionalResult(p, se, reps, "monte-carlo")
