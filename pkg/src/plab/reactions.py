"""Reaction models: species, pairwise reaction tables, and their analysis.

A model lists species (name, speed, energy) and a table mapping unordered
species pairs to distributions over output multisets.  Missing pairs default
to the identity output (no interaction).  The module checks dissipativity
(every effective reaction strictly lowers total energy), classifies types as
persistent or ephemeral in the mean-field continuous-firing relaxation,
builds ephemeral orderings, and checks the one-persistent-input-per-reaction
("agential") condition.

Quantities given as ints, strings or Fractions are kept exact and the
persistence program is solved with an exact rational simplex; float inputs
fall back to a floating-point LP with tolerance 1e-9.
"""

from __future__ import annotations

import graphlib
import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Species",
    "ModelSpec",
    "Variant",
    "expand_variants",
    "DissipativeReport",
    "validate_dissipative",
    "TypeVerdict",
    "Classification",
    "persistence_classify",
    "OrderingResult",
    "ephemeral_ordering",
    "AgentialReport",
    "validate_agential",
    "load_model",
    "model_to_dict",
    "parse_densities",
]

Number = int | float | Fraction

_FLOAT_EPS = 1e-9


def as_number(x) -> Number:
    """ints and fraction strings stay exact; floats stay floats."""
    if isinstance(x, bool):
        raise TypeError("booleans are not numbers here")
    if isinstance(x, (int, Fraction)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return x
    raise TypeError(f"cannot interpret {x!r} as a number")


def _all_exact(values: Iterable[Number]) -> bool:
    return all(isinstance(v, Fraction) for v in values)


@dataclass(frozen=True)
class Species:
    name: str
    speed: Number
    energy: Number

    def __post_init__(self):
        object.__setattr__(self, "speed", as_number(self.speed))
        object.__setattr__(self, "energy", as_number(self.energy))
        if not 0 <= self.speed <= 1:
            raise ValueError(f"speed of {self.name!r} must lie in [0, 1]")
        if self.energy <= 0:
            raise ValueError(f"energy of {self.name!r} must be positive")


@dataclass(frozen=True)
class Variant:
    """One deterministic effective reaction: an input pair realising a
    particular positive-probability output that differs from the input."""

    input_pair: tuple[int, int]  # species indices, a <= b
    output: tuple[int, ...]  # output multiset as per-species counts
    prob: Number
    delta: tuple[int, ...]  # stoichiometry: output minus input

    def describe(self, names: Sequence[str]) -> str:
        a, b = self.input_pair
        outs = [names[s] for s, c in enumerate(self.output) for _ in range(c)]
        rhs = "+".join(outs) if outs else "0"
        return f"{names[a]}+{names[b]}->{rhs}"


class ModelSpec:
    """Validated species list plus reaction table.

    ``reactions`` maps unordered name pairs to lists of ``(output, prob)``
    where output is an iterable of species names (a multiset).  Probabilities
    for each pair must sum to 1 (within 1e-12 when floats are involved).
    """

    def __init__(self, species: Sequence[Species], reactions: Mapping | None = None):
        self.species = tuple(species)
        names = [s.name for s in self.species]
        if len(set(names)) != len(names):
            raise ValueError("species names must be unique")
        self.index = {s.name: i for i, s in enumerate(self.species)}
        total_speed = sum(s.speed for s in self.species)
        if _all_exact([s.speed for s in self.species]):
            if total_speed != 1:
                raise ValueError(f"species speeds must sum to 1, got {total_speed}")
        elif abs(float(total_speed) - 1.0) > _FLOAT_EPS:
            raise ValueError(f"species speeds must sum to 1, got {float(total_speed)}")
        self.table: dict[tuple[int, int], tuple[tuple[tuple[int, ...], Number], ...]] = {}
        for pair, outcomes in (reactions or {}).items():
            a, b = (self.index[pair[0]], self.index[pair[1]])
            key = (a, b) if a <= b else (b, a)
            if key in self.table:
                raise ValueError(f"duplicate reaction entry for pair {pair}")
            rows = []
            total_p = 0
            for output, prob in outcomes:
                prob = as_number(prob)
                if prob < 0:
                    raise ValueError("probabilities must be nonnegative")
                counts = [0] * len(self.species)
                for name in output:
                    counts[self.index[name]] += 1
                rows.append((tuple(counts), prob))
                total_p = total_p + prob
            if isinstance(total_p, Fraction):
                ok = total_p == 1
            else:
                ok = abs(float(total_p) - 1.0) <= 1e-12
            if not ok:
                raise ValueError(f"probabilities for pair {pair} sum to {total_p}, not 1")
            self.table[key] = tuple(rows)
        self._variants: tuple[Variant, ...] | None = None
        self._classifications: dict = {}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(s.name for s in self.species)

    def speed(self, name: str) -> Number:
        return self.species[self.index[name]].speed

    def energy(self, name: str) -> Number:
        return self.species[self.index[name]].energy

    def pair_outcomes(self, a: int, b: int):
        """Outcome rows for an unordered index pair; identity when absent."""
        key = (a, b) if a <= b else (b, a)
        if key in self.table:
            return self.table[key]
        counts = [0] * len(self.species)
        counts[a] += 1
        counts[b] += 1
        return ((tuple(counts), Fraction(1)),)

    def __repr__(self):
        return f"ModelSpec(species={self.names}, reactions={len(self.table)})"


def _input_counts(pair: tuple[int, int], n: int) -> tuple[int, ...]:
    counts = [0] * n
    counts[pair[0]] += 1
    counts[pair[1]] += 1
    return tuple(counts)


def expand_variants(m: ModelSpec) -> tuple[Variant, ...]:
    """Every (input pair, output) with positive probability and output
    differing from the input, as stoichiometry vectors."""
    if m._variants is not None:
        return m._variants
    n = len(m.species)
    out = []
    for key, rows in sorted(m.table.items()):
        inp = _input_counts(key, n)
        for counts, prob in rows:
            if prob > 0 and counts != inp:
                delta = tuple(c - i for c, i in zip(counts, inp))
                out.append(Variant(key, counts, prob, delta))
    m._variants = tuple(out)
    return m._variants


# ---------------------------------------------------------------------------
# dissipativity


@dataclass
class DissipativeReport:
    ok: bool
    violations: list[tuple[str, Number, Number]] = field(default_factory=list)

    def __str__(self):
        if self.ok:
            return "dissipative"
        return "not dissipative: " + "; ".join(
            f"{desc} keeps energy {ein} -> {eout}" for desc, ein, eout in self.violations
        )


def validate_dissipative(m: ModelSpec) -> DissipativeReport:
    """Every effective reaction must strictly decrease total particle energy."""
    energies = [s.energy for s in m.species]
    report = DissipativeReport(ok=True)
    for var in expand_variants(m):
        a, b = var.input_pair
        e_in = energies[a] + energies[b]
        e_out = sum(c * e for c, e in zip(var.output, energies))
        if not e_in > e_out:
            report.ok = False
            report.violations.append((var.describe(m.names), e_in, e_out))
    return report


# ---------------------------------------------------------------------------
# mean-field persistence (continuous-firing relaxation)


@dataclass(frozen=True)
class TypeVerdict:
    name: str
    persistent: bool
    epsilon: Number  # minimum achievable density (exact LP optimum)
    certificate: tuple[Number, ...] | None  # firing amounts reaching epsilon
    caveat: str | None = None


@dataclass(frozen=True)
class Classification:
    per_type: dict  # name -> TypeVerdict
    system: TypeVerdict
    enabled: tuple[int, ...]  # indices into expand_variants(m)
    exact: bool
    densities: dict

    @property
    def ephemeral(self) -> tuple[str, ...]:
        return tuple(n for n, v in self.per_type.items() if not v.persistent)

    @property
    def persistent_types(self) -> tuple[str, ...]:
        return tuple(n for n, v in self.per_type.items() if v.persistent)


def _enabled_variants(variants, support: set[int]) -> list[int]:
    """Fireable-support fixpoint: a variant is enabled once both inputs lie in
    the reachable support, which grows by the outputs of enabled variants."""
    enabled: list[int] = []
    changed = True
    done = [False] * len(variants)
    while changed:
        changed = False
        for i, var in enumerate(variants):
            if done[i]:
                continue
            a, b = var.input_pair
            if a in support and b in support:
                done[i] = True
                enabled.append(i)
                new = {s for s, c in enumerate(var.output) if c > 0} - support
                if new:
                    support |= new
                changed = True
    return sorted(enabled)


def _lp_min_exact(obj, columns, d0):
    """minimize obj . (d0 + C f) over f >= 0 with d0 + C f >= 0, exactly."""
    from sympy import Rational, symbols
    from sympy.solvers.simplex import lpmin

    k = len(columns)
    base = sum(Rational(o) * Rational(v) for o, v in zip(obj, d0))
    if k == 0:
        return Fraction(base), ()
    fs = symbols(f"f:{k}", nonnegative=True)
    exprs = []
    for s, v in enumerate(d0):
        e = Rational(v)
        for j in range(k):
            coef = columns[j][s]
            if coef:
                e = e + Rational(coef) * fs[j]
        exprs.append(e)
    objective = sum(Rational(o) * e for o, e in zip(obj, exprs) if o)
    if objective == 0:
        objective = Rational(0)
    constraints = [e >= 0 for e in exprs]
    opt, sol = lpmin(objective, constraints)
    cert = tuple(Fraction(sol.get(fs[j], 0)) for j in range(k))
    return Fraction(opt), cert


def _lp_min_float(obj, columns, d0):
    import numpy as np
    from scipy.optimize import linprog

    k = len(columns)
    d0v = np.array([float(v) for v in d0])
    objv = np.array([float(o) for o in obj])
    base = float(objv @ d0v)
    if k == 0:
        return base, ()
    c_mat = np.array([[float(x) for x in col] for col in columns]).T  # species x variants
    res = linprog(
        c=objv @ c_mat,
        A_ub=-c_mat,
        b_ub=d0v,
        bounds=[(0, None)] * k,
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"persistence LP failed: {res.message}")
    return base + float(res.fun), tuple(float(x) for x in res.x)


def persistence_classify(m: ModelSpec, densities: Mapping[str, Number]) -> Classification:
    """Classify each type and the system as persistent or ephemeral.

    A type is ephemeral iff some nonnegative firing vector over the enabled
    variants keeps all densities nonnegative and drives the type's density to
    zero; epsilon is the exact minimum achievable density.  The system verdict
    minimises total density the same way.  Verdicts carry a "fluid-semantics"
    caveat where the discrete process provably cannot reach the continuous
    limit (every variant consuming the type re-emits it, so the final particle
    survives; likewise a system whose variants all have nonempty output).
    """
    key = tuple(sorted((k, as_number(v)) for k, v in densities.items()))
    if key in m._classifications:
        return m._classifications[key]
    n = len(m.species)
    d0 = [Fraction(0)] * n
    exact = True
    for name, value in densities.items():
        value = as_number(value)
        if value < 0:
            raise ValueError(f"density of {name!r} must be nonnegative")
        if not isinstance(value, Fraction):
            exact = False
        d0[m.index[name]] = value
    if not exact:
        d0 = [float(v) for v in d0]

    variants = expand_variants(m)
    support = {i for i, v in enumerate(d0) if v > 0}
    enabled = _enabled_variants(variants, support)
    columns = [variants[i].delta for i in enabled]
    solve = _lp_min_exact if exact else _lp_min_float
    zero_tol = 0 if exact else _FLOAT_EPS

    per_type = {}
    for s, sp_ in enumerate(m.species):
        obj = [0] * n
        obj[s] = 1
        eps, cert = solve(obj, columns, d0)
        persistent = eps > zero_tol
        caveat = None
        if not persistent:
            consumers = [v for v in (variants[i] for i in enabled) if v.delta[s] < 0]
            if consumers and all(v.output[s] > 0 for v in consumers):
                caveat = "fluid-semantics"
        per_type[sp_.name] = TypeVerdict(
            sp_.name, persistent, eps, None if persistent else cert, caveat
        )

    eps_sys, cert_sys = solve([1] * n, columns, d0)
    sys_persistent = eps_sys > zero_tol
    sys_caveat = None
    if not sys_persistent and enabled and all(
        sum(variants[i].output) > 0 for i in enabled
    ):
        sys_caveat = "fluid-semantics"
    system = TypeVerdict(
        "<system>", sys_persistent, eps_sys, None if sys_persistent else cert_sys, sys_caveat
    )
    cls = Classification(per_type, system, tuple(enabled), exact, dict(densities))
    m._classifications[key] = cls
    return cls


# ---------------------------------------------------------------------------
# ephemeral ordering and the agential condition


@dataclass(frozen=True)
class OrderingResult:
    order: tuple[str, ...] | None
    cycle: tuple[str, ...] | None

    @property
    def ok(self) -> bool:
        return self.cycle is None


def ephemeral_ordering(m: ModelSpec, cls: Classification) -> OrderingResult:
    """Topological order of ephemeral types under "input can produce output":
    x before y whenever some effective variant consumes x and emits y.  A
    detected cycle is returned as data (it certifies the model is not
    dissipative-agential as classified)."""
    ephem = set(cls.ephemeral)
    sorter: graphlib.TopologicalSorter = graphlib.TopologicalSorter()
    for name in sorted(ephem):
        sorter.add(name)
    names = m.names
    for var in expand_variants(m):
        inputs = {names[var.input_pair[0]], names[var.input_pair[1]]}
        outputs = {names[s] for s, c in enumerate(var.output) if c > 0}
        for x in sorted(inputs & ephem):
            for y in sorted(outputs & ephem):
                sorter.add(y, x)
    try:
        order = tuple(sorter.static_order())
    except graphlib.CycleError as err:
        cycle = tuple(err.args[1])
        return OrderingResult(None, cycle)
    return OrderingResult(order, None)


@dataclass
class AgentialReport:
    ok: bool
    violations: list[str] = field(default_factory=list)

    def __str__(self):
        if self.ok:
            return "agential"
        return "not agential: effective reactions between ephemeral types: " + ", ".join(self.violations)


def validate_agential(m: ModelSpec, cls: Classification) -> AgentialReport:
    """Every effective variant needs at least one persistent input type."""
    ephem = set(cls.ephemeral)
    names = m.names
    report = AgentialReport(ok=True)
    for var in expand_variants(m):
        a, b = var.input_pair
        if names[a] in ephem and names[b] in ephem:
            report.ok = False
            report.violations.append(var.describe(names))
    return report


# ---------------------------------------------------------------------------
# model files


def load_model(path) -> ModelSpec:
    """JSON model file: {"species": [{"name","speed","energy"}...],
    "reactions": [{"in": [a, b], "out": [{"set": [...], "p": num}...]}...]};
    numbers may be rationals written as strings."""
    with open(path) as fh:
        data = json.load(fh)
    return model_from_dict(data)


def model_from_dict(data: Mapping) -> ModelSpec:
    species = [Species(s["name"], as_number(s["speed"]), as_number(s["energy"])) for s in data["species"]]
    reactions = {}
    for entry in data.get("reactions", []):
        pair = tuple(entry["in"])
        if len(pair) != 2:
            raise ValueError(f"reaction input must be a pair, got {pair}")
        reactions[pair] = [(tuple(out["set"]), as_number(out["p"])) for out in entry["out"]]
    return ModelSpec(species, reactions)


def _num_to_json(x: Number):
    if isinstance(x, Fraction):
        return int(x) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"
    return x


def model_to_dict(m: ModelSpec) -> dict:
    names = m.names
    reactions = []
    for (a, b), rows in sorted(m.table.items()):
        reactions.append(
            {
                "in": [names[a], names[b]],
                "out": [
                    {
                        "set": [names[s] for s, c in enumerate(counts) for _ in range(c)],
                        "p": _num_to_json(p),
                    }
                    for counts, p in rows
                ],
            }
        )
    return {
        "species": [
            {"name": s.name, "speed": _num_to_json(s.speed), "energy": _num_to_json(s.energy)}
            for s in m.species
        ],
        "reactions": reactions,
    }


def parse_densities(text: str) -> dict[str, Number]:
    """Parse "A=0.55,B=0.45" (values may be rationals like 11/20)."""
    out = {}
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        name, _, value = part.partition("=")
        if not _:
            raise ValueError(f"bad density entry {part!r}")
        v = value.strip()
        out[name.strip()] = as_number(v) if "/" in v or "." not in v else float(v)
    return out
