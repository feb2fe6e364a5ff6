"""Regular multigraphs: generators, validation, walk spectra, chain collapsing.

Vertices are dense integer ids ``0..n-1`` for cheap hot-loop indexing.
Adjacency lists may contain repeats (parallel edges) and a self-loop appears
as two entries of the vertex in its own list, so ``len(adjacency[v])`` is the
degree with the usual loop-counts-twice convention and a uniform draw from
the list is a correct multigraph walk step.  Graphs are immutable after
construction and safe to share across concurrent readers.
"""

from __future__ import annotations

import math
from collections import Counter, defaultdict, deque
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.sparse as sp

__all__ = [
    "WalkKind",
    "Graph",
    "GenerationError",
    "gen_random_regular",
    "gen_named",
    "gen_complete",
    "gen_cycle",
    "gen_torus2d",
    "gen_hypercube",
    "validate",
    "ValidationReport",
    "spectral_mu2",
    "collapse",
    "adjacency_matrix",
    "transition_matrix",
    "sparse_transition",
    "save_edge_list",
    "load_edge_list",
]


class WalkKind(Enum):
    """Walk semantics: SIMPLE steps to a uniform incident edge-end; LAZY stays
    put with probability 1/2 and otherwise takes a simple step."""

    SIMPLE = "simple"
    LAZY = "lazy"


class GenerationError(RuntimeError):
    """Random-graph sampling exhausted its attempt budget."""

    def __init__(self, message: str, attempts: int):
        super().__init__(f"{message} (after {attempts} attempts)")
        self.attempts = attempts


class Graph:
    """Undirected multigraph with adjacency lists.

    Attributes
    ----------
    n : vertex count
    adjacency : tuple of sorted tuples of neighbor ids
    degrees : numpy int64 array of list lengths
    d : common degree, or None if the graph is not regular
    is_simple : no loops and no parallel edges
    is_connected : reachability of every vertex from vertex 0
    """

    __slots__ = ("n", "adjacency", "degrees", "d", "is_simple", "is_connected", "_csr")

    def __init__(self, adjacency):
        adj = tuple(tuple(sorted(int(w) for w in row)) for row in adjacency)
        n = len(adj)
        for v, row in enumerate(adj):
            for w in row:
                if not 0 <= w < n:
                    raise ValueError(f"neighbor {w} of vertex {v} out of range 0..{n - 1}")
        self.n = n
        self.adjacency = adj
        self.degrees = np.array([len(row) for row in adj], dtype=np.int64)
        degs = set(self.degrees.tolist())
        self.d = degs.pop() if len(degs) == 1 else None
        self.is_simple = all(
            len(set(row)) == len(row) and v not in row for v, row in enumerate(adj)
        )
        self.is_connected = self._connected()
        self._csr = None

    def _connected(self) -> bool:
        if self.n == 0:
            return False
        seen = bytearray(self.n)
        seen[0] = 1
        queue = deque([0])
        count = 1
        while queue:
            v = queue.popleft()
            for w in self.adjacency[v]:
                if not seen[w]:
                    seen[w] = 1
                    count += 1
                    queue.append(w)
        return count == self.n

    def csr(self):
        """(indptr, flat neighbor array) as int64 numpy arrays, cached."""
        if self._csr is None:
            indptr = np.zeros(self.n + 1, dtype=np.int64)
            np.cumsum(self.degrees, out=indptr[1:])
            flat = np.fromiter(
                (w for row in self.adjacency for w in row),
                dtype=np.int64,
                count=int(indptr[-1]),
            )
            self._csr = (indptr, flat)
        return self._csr

    def __eq__(self, other):
        return isinstance(other, Graph) and self.adjacency == other.adjacency

    def __hash__(self):
        return hash(self.adjacency)

    def __repr__(self):
        kind = "regular" if self.d is not None else "irregular"
        return f"Graph(n={self.n}, {kind} d={self.d}, simple={self.is_simple}, connected={self.is_connected})"


# ---------------------------------------------------------------------------
# generators


def _pairing_attempt(n: int, d: int, rng: np.random.Generator):
    """One stub-matching pass of the configuration model with repair of
    clashing stubs (loops / parallel edges), as in the standard samplers.
    Returns an edge set or None when no simple completion exists."""
    edges: set[tuple[int, int]] = set()
    stubs = [v for v in range(n) for _ in range(d)]
    while stubs:
        a = np.array(stubs, dtype=np.int64)
        rng.shuffle(a)
        stubs = a.tolist()
        clashes: dict[int, int] = defaultdict(int)
        it = iter(stubs)
        for s1, s2 in zip(it, it):
            if s1 > s2:
                s1, s2 = s2, s1
            if s1 != s2 and (s1, s2) not in edges:
                edges.add((s1, s2))
            else:
                clashes[s1] += 1
                clashes[s2] += 1
        if clashes and not _repairable(edges, clashes):
            return None
        stubs = [v for v, c in clashes.items() for _ in range(c)]
    return edges


def _repairable(edges, clashes) -> bool:
    pending = list(clashes)
    for i, s1 in enumerate(pending):
        for s2 in pending[:i]:
            if (min(s1, s2), max(s1, s2)) not in edges and s1 != s2:
                return True
    return not pending


def gen_random_regular(n: int, d: int, seed: int, max_attempts: int = 1000) -> Graph:
    """Random simple connected d-regular graph via configuration-model stub
    matching; disconnected or unrepairable pairings are rejected and retried.
    Deterministic given the seed."""
    if n * d % 2 != 0:
        raise ValueError(f"n*d must be even, got n={n}, d={d}")
    if not 0 < d < n:
        raise ValueError(f"need 0 < d < n, got n={n}, d={d}")
    from ._rng import make_generator

    rng = make_generator(seed, 0x9E37)
    for attempt in range(1, max_attempts + 1):
        edges = _pairing_attempt(n, d, rng)
        if edges is None:
            continue
        adj = [[] for _ in range(n)]
        for u, v in edges:
            adj[u].append(v)
            adj[v].append(u)
        g = Graph(adj)
        if g.is_connected:
            return g
    raise GenerationError(f"no simple connected {d}-regular graph on {n} vertices found", max_attempts)


def gen_complete(n: int) -> Graph:
    if n < 2:
        raise ValueError("complete graph needs n >= 2")
    return Graph([[w for w in range(n) if w != v] for v in range(n)])


def gen_cycle(n: int) -> Graph:
    if n < 3:
        raise ValueError("cycle needs n >= 3")
    return Graph([[(v - 1) % n, (v + 1) % n] for v in range(n)])


def gen_torus2d(side: int) -> Graph:
    """side x side square lattice with wraparound; 4-regular."""
    if side < 3:
        raise ValueError("torus side must be >= 3")
    n = side * side

    def vid(r, c):
        return (r % side) * side + (c % side)

    adj = [[] for _ in range(n)]
    for r in range(side):
        for c in range(side):
            adj[vid(r, c)] = [vid(r - 1, c), vid(r + 1, c), vid(r, c - 1), vid(r, c + 1)]
    return Graph(adj)


def gen_hypercube(dim: int) -> Graph:
    if dim < 1:
        raise ValueError("hypercube dimension must be >= 1")
    n = 1 << dim
    return Graph([[v ^ (1 << b) for b in range(dim)] for v in range(n)])


_NAMED = {
    "complete": (gen_complete, "n"),
    "cycle": (gen_cycle, "n"),
    "torus2d": (gen_torus2d, "side"),
    "hypercube": (gen_hypercube, "dim"),
}


def gen_named(kind: str, **params) -> Graph:
    """Named regular families: complete(n), cycle(n), torus2d(side), hypercube(dim)."""
    if kind not in _NAMED:
        raise ValueError(f"unknown graph kind {kind!r}; choose from {sorted(_NAMED)}")
    fn, argname = _NAMED[kind]
    if set(params) != {argname}:
        raise ValueError(f"graph kind {kind!r} takes exactly the parameter {argname!r}")
    return fn(params[argname])


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    ok: bool
    failures: list[tuple[str, str]] = field(default_factory=list)

    def __str__(self):
        if self.ok:
            return "valid"
        return "; ".join(f"{check}: {msg}" for check, msg in self.failures)


def validate(g: Graph) -> ValidationReport:
    """Check regularity, edge symmetry and connectivity; the report carries the
    first counterexample of each failing check."""
    failures = []
    if g.d is None:
        v = int(np.argmax(g.degrees != g.degrees[0]))
        failures.append(
            ("regularity", f"vertex {v} has degree {g.degrees[v]}, vertex 0 has {g.degrees[0]}")
        )
    sym_fail = None
    counters = [Counter(row) for row in g.adjacency]
    for u in range(g.n):
        for w, c in counters[u].items():
            if w == u:
                if c % 2 != 0:
                    sym_fail = (u, u, f"odd loop entry count {c} at vertex {u}")
                    break
            elif counters[w][u] != c:
                sym_fail = (u, w, f"{w} appears {c}x in list of {u} but {u} appears {counters[w][u]}x in list of {w}")
                break
        if sym_fail:
            break
    if sym_fail:
        failures.append(("symmetry", sym_fail[2]))
    if not g.is_connected:
        failures.append(("connectivity", "graph is not connected"))
    return ValidationReport(ok=not failures, failures=failures)


# ---------------------------------------------------------------------------
# matrices and spectra


def adjacency_matrix(g: Graph) -> sp.csr_matrix:
    """Sparse adjacency with multiplicities; a loop at v contributes 2 to A[v,v]."""
    indptr, flat = g.csr()
    data = np.ones(len(flat))
    rows = np.repeat(np.arange(g.n), np.diff(indptr))
    return sp.csr_matrix((data, (rows, flat)), shape=(g.n, g.n))


def sparse_transition(g: Graph, walk: WalkKind) -> sp.csr_matrix:
    """Row-stochastic transition matrix of the chosen walk."""
    a = adjacency_matrix(g)
    dinv = sp.diags(1.0 / g.degrees)
    p = dinv @ a
    if walk is WalkKind.LAZY:
        p = 0.5 * sp.eye(g.n, format="csr") + 0.5 * p
    return sp.csr_matrix(p)


def transition_matrix(g: Graph, walk: WalkKind) -> np.ndarray:
    """Dense transition matrix (small graphs: tests, oracles, mixing checks)."""
    return sparse_transition(g, walk).toarray()


def spectral_mu2(
    g: Graph,
    walk: WalkKind = WalkKind.LAZY,
    tol: float = 1e-9,
    max_iter: int = 10**6,
) -> float:
    """Second-largest transition-matrix eigenvalue by deflated power iteration.

    Works on the degree-symmetrised operator N = D^{-1/2} (dP) D^{-1/2}-style
    form (plain P for regular graphs, where the deflated top eigenvector is
    exactly uniform), shifted to (N + I)/2 so all eigenvalues are nonnegative
    and the algebraically second-largest dominates after deflation.
    """
    if not g.is_connected:
        raise ValueError("spectral_mu2 requires a connected graph")
    a = adjacency_matrix(g)
    sqrt_deg = np.sqrt(g.degrees.astype(float))
    inv_sqrt = 1.0 / sqrt_deg
    nsym = sp.diags(inv_sqrt) @ a @ sp.diags(inv_sqrt)
    lazy = walk is WalkKind.LAZY

    def apply_shifted(x):
        px = nsym @ x
        if lazy:
            px = 0.5 * x + 0.5 * px
        return 0.5 * (px + x)

    top = sqrt_deg / math.sqrt(float(g.degrees.sum()))
    rng = np.random.Generator(np.random.PCG64(0x5EED5EED))
    v = rng.standard_normal(g.n)
    v -= (top @ v) * top
    norm = np.linalg.norm(v)
    if norm < 1e-12:  # n == 1 style degeneracy
        raise ValueError("graph too small for a second eigenvalue")
    v /= norm
    inner_tol = min(tol, 1e-9) / 4.0
    residual = math.inf
    for _ in range(max_iter):
        w = apply_shifted(v)
        w -= (top @ w) * top
        nu = float(v @ w)
        residual = float(np.linalg.norm(w - nu * v))
        if residual <= inner_tol:
            return 2.0 * nu - 1.0
        norm = float(np.linalg.norm(w))
        if norm < 1e-200:  # deflated spectrum is exactly zero (e.g. K2 lazy-free)
            return 2.0 * nu - 1.0
        v = w / norm
    raise RuntimeError(
        f"power iteration did not reach residual {inner_tol:g} within {max_iter} iterations "
        f"(last residual {residual:g})"
    )


# ---------------------------------------------------------------------------
# collapsing


def collapse(g: Graph, subset) -> Graph:
    """Contract the vertex set ``subset`` to a single vertex.

    Every edge xy of g becomes an edge between the images of x and y, kept
    with multiplicity; edges inside the subset become loops at the new vertex.
    The contracted vertex gets the last id; remaining vertices keep their
    relative order.  The result is generally an irregular multigraph (the
    contracted vertex has degree |subset| * d).
    """
    a = set(int(v) for v in subset)
    if not a or len(a) >= g.n:
        raise ValueError("subset must be a nonempty proper subset of the vertices")
    for v in a:
        if not 0 <= v < g.n:
            raise ValueError(f"vertex {v} out of range")
    keep = [v for v in range(g.n) if v not in a]
    remap = {v: i for i, v in enumerate(keep)}
    va = len(keep)
    new_id = lambda v: va if v in a else remap[v]

    adj = [[] for _ in range(va + 1)]
    for u in range(g.n):
        loops_here = 0
        for w in g.adjacency[u]:
            if w == u:
                loops_here += 1
            elif w > u:
                x, y = new_id(u), new_id(w)
                if x == y:
                    adj[x].extend((x, x))
                else:
                    adj[x].append(y)
                    adj[y].append(x)
        for _ in range(loops_here // 2):
            x = new_id(u)
            adj[x].extend((x, x))
    return Graph(adj)


# ---------------------------------------------------------------------------
# edge-list text format


def save_edge_list(g: Graph, path) -> None:
    """Write the text format: header ``n d``, then one ``u v`` line per
    undirected edge (u <= v, sorted), loops written once as ``u u``."""
    if g.d is None:
        raise ValueError("edge-list format stores regular graphs only")
    lines = [f"{g.n} {g.d}"]
    for u in range(g.n):
        row = Counter(g.adjacency[u])
        for w in sorted(row):
            if w == u:
                lines.extend([f"{u} {u}"] * (row[w] // 2))
            elif w > u:
                lines.extend([f"{u} {w}"] * row[w])
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def load_edge_list(path) -> Graph:
    with open(path) as fh:
        tokens = fh.read().split()
    if len(tokens) < 2:
        raise ValueError("edge-list file must start with 'n d'")
    n, d = int(tokens[0]), int(tokens[1])
    pairs = tokens[2:]
    if len(pairs) % 2 != 0:
        raise ValueError("edge-list file has a dangling vertex id")
    adj = [[] for _ in range(n)]
    for i in range(0, len(pairs), 2):
        u, v = int(pairs[i]), int(pairs[i + 1])
        if u == v:
            adj[u].extend((u, u))
        else:
            adj[u].append(v)
            adj[v].append(u)
    g = Graph(adj)
    if g.d != d:
        raise ValueError(f"edge-list header says d={d} but graph has d={g.d}")
    return g
