"""Synthetic binary data from causal DAGs, with exact interventional oracles.

A DAG file is plain text, one statement per line (``#`` starts a comment)::

    treatment W
    outcome Y
    node X1
    node W
    node Y
    edge X1 W
    edge X1 Y
    edge W Y
    cpd X1 0.5          # root: a single probability
    cpd W 0 0.3         # one line per parent bit-string,
    cpd W 1 0.7         # parents in the order their edges were declared
    cpd Y 00 0.1
    ...

Column order of sampled data follows the ``node`` lines.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from graphlib import CycleError, TopologicalSorter
from importlib import resources
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Set, Tuple

import numpy as np

from .dataset import BinaryDataset

__all__ = [
    "CausalDag",
    "DagError",
    "DagFormatError",
    "parse_dag",
    "load_dag",
    "format_dag",
    "builtin_dag",
    "collider_backdoor_dag",
    "additive_cpds",
    "sample",
    "exact_marginal",
    "exact_cate",
    "d_separated",
    "satisfies_backdoor",
    "oracle_structure",
    "subgroup_oracle_table",
    "MAX_EXACT_NODES",
]

MAX_EXACT_NODES = 20


class DagError(ValueError):
    pass


class DagFormatError(DagError):
    def __init__(self, line_no: int, msg: str):
        super().__init__(f"line {line_no}: {msg}")
        self.line_no = line_no


@dataclass(frozen=True, eq=False)
class CausalDag:
    """Binary causal DAG with Bernoulli conditional probability tables.

    ``cpds[v][k]`` is P(v=1 | parents) where ``k`` reads the parent values,
    in ``parents[v]`` order, as a binary number (first parent most significant).
    """

    nodes: Tuple[str, ...]
    parents: Mapping[str, Tuple[str, ...]]
    cpds: Mapping[str, np.ndarray]
    treatment: str = "W"
    outcome: str = "Y"
    order: Tuple[str, ...] = field(init=False, repr=False)

    def __post_init__(self):
        nodes = tuple(self.nodes)
        object.__setattr__(self, "nodes", nodes)
        if len(set(nodes)) != len(nodes):
            raise DagError("duplicate node names")
        parents = {v: tuple(self.parents.get(v, ())) for v in nodes}
        extra = set(self.parents) - set(nodes)
        if extra:
            raise DagError(f"parents given for unknown nodes: {sorted(extra)}")
        for v, ps in parents.items():
            for p in ps:
                if p not in parents:
                    raise DagError(f"unknown parent {p!r} of {v!r}")
                if p == v:
                    raise DagError(f"self loop on {v!r}")
            if len(set(ps)) != len(ps):
                raise DagError(f"duplicate edge into {v!r}")
        object.__setattr__(self, "parents", parents)
        for role in (self.treatment, self.outcome):
            if role not in parents:
                raise DagError(f"node {role!r} missing")
        if any(self.outcome in ps for ps in parents.values()):
            raise DagError(f"outcome {self.outcome!r} must not have children")
        cpds = {}
        for v in nodes:
            if v not in self.cpds:
                raise DagError(f"no cpd for {v!r}")
            table = np.asarray(self.cpds[v], dtype=float).reshape(-1)
            if table.shape[0] != 2 ** len(parents[v]):
                raise DagError(
                    f"cpd of {v!r} has {table.shape[0]} entries, needs {2 ** len(parents[v])}"
                )
            if ((table < 0) | (table > 1)).any():
                raise DagError(f"cpd of {v!r} has entries outside [0, 1]")
            table.setflags(write=False)
            cpds[v] = table
        object.__setattr__(self, "cpds", cpds)
        try:
            order = tuple(TopologicalSorter({v: parents[v] for v in nodes}).static_order())
        except CycleError as exc:
            raise DagError(f"graph has a directed cycle: {exc.args[1]}") from None
        object.__setattr__(self, "order", order)

    @property
    def edges(self) -> List[Tuple[str, str]]:
        return [(p, v) for v in self.nodes for p in self.parents[v]]

    @property
    def covariates(self) -> Tuple[str, ...]:
        return tuple(v for v in self.nodes if v not in (self.treatment, self.outcome))

    def children(self, v: str) -> List[str]:
        return [c for c in self.nodes if v in self.parents[c]]

    def descendants(self, v: str) -> Set[str]:
        out, stack = set(), [v]
        while stack:
            for c in self.children(stack.pop()):
                if c not in out:
                    out.add(c)
                    stack.append(c)
        return out

    def with_cpds(self, cpds: Mapping[str, Sequence[float]]) -> "CausalDag":
        merged = dict(self.cpds)
        merged.update(cpds)
        return CausalDag(self.nodes, self.parents, merged, self.treatment, self.outcome)

    def add_node(self, name: str, p: float = 0.5) -> "CausalDag":
        """Copy with an extra root node unconnected to everything else."""
        parents = dict(self.parents)
        parents[name] = ()
        cpds = dict(self.cpds)
        cpds[name] = [p]
        return CausalDag(self.nodes + (name,), parents, cpds, self.treatment, self.outcome)


def additive_cpds(dag_parents: Mapping[str, Sequence[str]], strength: float) -> Dict[str, np.ndarray]:
    """P(v=1 | pa) = 0.5 - s/2 + s * mean(pa): every edge pushes upward."""
    if not 0.0 <= strength <= 1.0:
        raise ValueError("strength must lie in [0, 1]")
    out = {}
    for v, ps in dag_parents.items():
        k = len(ps)
        if k == 0:
            out[v] = np.array([0.5])
            continue
        ones = np.array([bin(i).count("1") for i in range(2 ** k)], dtype=float)
        out[v] = 0.5 - strength / 2 + strength * ones / k
    return out


# --- file format -----------------------------------------------------------

def parse_dag(text: str) -> CausalDag:
    nodes: List[str] = []
    parents: Dict[str, List[str]] = {}
    raw_cpd: Dict[str, Dict[str, Tuple[float, int]]] = {}
    roles = {"treatment": "W", "outcome": "Y"}
    first_line = {}
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = line.split("#", 1)[0].split()
        if not tokens:
            continue
        kind, args = tokens[0], tokens[1:]
        if kind in roles:
            if len(args) != 1:
                raise DagFormatError(line_no, f"'{kind}' takes one name")
            roles[kind] = args[0]
        elif kind == "node":
            if len(args) != 1:
                raise DagFormatError(line_no, "'node' takes one name")
            if args[0] in parents:
                raise DagFormatError(line_no, f"node {args[0]!r} declared twice")
            nodes.append(args[0])
            parents[args[0]] = []
            first_line[args[0]] = line_no
        elif kind == "edge":
            if len(args) != 2 and not (len(args) == 3 and args[1] == "->"):
                raise DagFormatError(line_no, "expected 'edge PARENT CHILD'")
            src, dst = args[0], args[-1]
            for v in (src, dst):
                if v not in parents:
                    raise DagFormatError(line_no, f"undeclared node {v!r}")
            if src in parents[dst]:
                raise DagFormatError(line_no, f"duplicate edge {src} -> {dst}")
            parents[dst].append(src)
        elif kind == "cpd":
            if len(args) not in (2, 3):
                raise DagFormatError(line_no, "expected 'cpd NODE [BITS] PROB'")
            v = args[0]
            if v not in parents:
                raise DagFormatError(line_no, f"undeclared node {v!r}")
            bits = args[1] if len(args) == 3 else ""
            if bits.strip("01"):
                raise DagFormatError(line_no, f"bad parent bit-string {bits!r}")
            try:
                prob = float(args[-1])
            except ValueError:
                raise DagFormatError(line_no, f"bad probability {args[-1]!r}") from None
            if not 0.0 <= prob <= 1.0:
                raise DagFormatError(line_no, f"probability {prob} outside [0, 1]")
            table = raw_cpd.setdefault(v, {})
            if bits in table:
                raise DagFormatError(line_no, f"duplicate cpd entry for {v} {bits}")
            table[bits] = (prob, line_no)
        else:
            raise DagFormatError(line_no, f"unknown statement {kind!r}")

    cpds = {}
    for v in nodes:
        k = len(parents[v])
        entries = raw_cpd.get(v, {})
        for bits, (_, line_no) in entries.items():
            if len(bits) != k:
                raise DagFormatError(
                    line_no, f"{v} has {k} parents but bit-string {bits!r} has {len(bits)}"
                )
        keys = ["".join(b) for b in itertools.product("01", repeat=k)]
        missing = [b or "(root)" for b in keys if b not in entries]
        if missing:
            raise DagFormatError(first_line[v], f"cpd of {v} lacks entries {missing}")
        cpds[v] = [entries[b][0] for b in keys]
    try:
        return CausalDag(tuple(nodes), parents, cpds, roles["treatment"], roles["outcome"])
    except DagError as exc:
        raise DagFormatError(0, str(exc)) from None


def load_dag(path) -> CausalDag:
    return parse_dag(Path(path).read_text())


def format_dag(dag: CausalDag) -> str:
    lines = [f"treatment {dag.treatment}", f"outcome {dag.outcome}"]
    lines += [f"node {v}" for v in dag.nodes]
    lines += [f"edge {p} {v}" for p, v in dag.edges]
    for v in dag.nodes:
        k = len(dag.parents[v])
        for i, bits in enumerate(itertools.product("01", repeat=k)):
            key = "".join(bits)
            prob = f"{dag.cpds[v][i]:.10g}"
            lines.append(f"cpd {v} {key} {prob}" if k else f"cpd {v} {prob}")
    return "\n".join(lines) + "\n"


def builtin_dag(name: str) -> CausalDag:
    """Load one of the DAG fixtures shipped with the package."""
    ref = resources.files("deep").joinpath("fixtures").joinpath(f"{name}.dag")
    if not ref.is_file():
        raise DagError(f"no built-in DAG named {name!r}")
    return parse_dag(ref.read_text())


def collider_backdoor_dag(strength: Optional[float] = None) -> CausalDag:
    """The 11-node example graph; ``strength`` rescales every edge."""
    dag = builtin_dag("collider_backdoor")
    if strength is None:
        return dag
    return dag.with_cpds(additive_cpds(dag.parents, strength))


# --- sampling --------------------------------------------------------------

def sample(dag: CausalDag, n: int, seed=None) -> BinaryDataset:
    """Ancestral sampling of ``n`` records; ``seed`` feeds numpy's default_rng."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    cols: Dict[str, np.ndarray] = {}
    for v in dag.order:
        idx = np.zeros(n, dtype=np.int64)
        for p in dag.parents[v]:
            idx = (idx << 1) | cols[p]
        cols[v] = rng.random(n) < dag.cpds[v][idx]
    names = dag.nodes
    return BinaryDataset(
        names,
        np.stack([cols[v] for v in names]),
        names.index(dag.treatment),
        names.index(dag.outcome),
    )


# --- exact inference -------------------------------------------------------

@lru_cache(maxsize=4)
def _states(k: int) -> np.ndarray:
    """All 2**k assignments as a (2**k, k) bool matrix, column j = node j."""
    codes = np.arange(2 ** k, dtype=np.int64)
    shifts = np.arange(k - 1, -1, -1, dtype=np.int64)
    return ((codes[:, None] >> shifts) & 1).astype(bool)


def _joint(dag: CausalDag, do: Optional[Mapping[str, int]] = None) -> np.ndarray:
    k = len(dag.nodes)
    if k > MAX_EXACT_NODES:
        raise DagError(f"exact inference limited to {MAX_EXACT_NODES} nodes")
    do = dict(do or {})
    states = _states(k)
    col = {v: j for j, v in enumerate(dag.nodes)}
    prob = np.ones(states.shape[0])
    for v in dag.nodes:
        x = states[:, col[v]]
        if v in do:
            prob *= x == bool(do[v])
            continue
        idx = np.zeros(states.shape[0], dtype=np.int64)
        for p in dag.parents[v]:
            idx = (idx << 1) | states[:, col[p]]
        p1 = dag.cpds[v][idx]
        prob *= np.where(x, p1, 1.0 - p1)
    return prob


def _mask(dag: CausalDag, assignment: Mapping[str, int]) -> np.ndarray:
    states = _states(len(dag.nodes))
    m = np.ones(states.shape[0], dtype=bool)
    for v, val in assignment.items():
        m &= states[:, dag.nodes.index(v)] == bool(val)
    return m


def exact_marginal(dag: CausalDag, node: str, given: Mapping[str, int] = None) -> float:
    """P(node = 1 | given) by full enumeration of the joint."""
    joint = _joint(dag)
    m = _mask(dag, given or {})
    den = joint[m].sum()
    if den <= 0:
        raise DagError("conditioning event has probability zero")
    return float(joint[m & _mask(dag, {node: 1})].sum() / den)


def exact_cate(dag: CausalDag, subgroup: Mapping[str, int]) -> float:
    """P(Y=1 | do(W=1), subgroup) - P(Y=1 | do(W=0), subgroup), exactly."""
    bad = {dag.treatment, dag.outcome} & set(subgroup)
    if bad:
        raise DagError(f"subgroup may only fix covariates, got {sorted(bad)}")
    for v in subgroup:
        if v not in dag.parents:
            raise DagError(f"unknown node {v!r}")
    sub = _mask(dag, subgroup)
    y = _mask(dag, {dag.outcome: 1})
    effect = []
    for w in (1, 0):
        joint = _joint(dag, {dag.treatment: w})
        den = joint[sub].sum()
        if den <= 0:
            raise DagError(f"subgroup {dict(subgroup)} has probability zero")
        effect.append(joint[sub & y].sum() / den)
    return float(effect[0] - effect[1])


# --- graphical oracles -----------------------------------------------------

def _paths(dag: CausalDag, a: str, b: str) -> Iterable[List[str]]:
    nbrs = {v: set(dag.parents[v]) | set(dag.children(v)) for v in dag.nodes}
    stack = [(a, [a])]
    while stack:
        v, path = stack.pop()
        for u in nbrs[v]:
            if u == b:
                yield path + [u]
            elif u not in path:
                stack.append((u, path + [u]))


def _blocked(dag: CausalDag, path: Sequence[str], given: FrozenSet[str]) -> bool:
    for prev, v, nxt in zip(path, path[1:], path[2:]):
        collider = prev in dag.parents[v] and nxt in dag.parents[v]
        if collider:
            if v not in given and not (dag.descendants(v) & given):
                return True
        elif v in given:
            return True
    return False


def d_separated(dag: CausalDag, a: str, b: str, given: Iterable[str] = ()) -> bool:
    """Brute force: every simple path between ``a`` and ``b`` must be blocked."""
    given = frozenset(given)
    return all(_blocked(dag, p, given) for p in _paths(dag, a, b))


def satisfies_backdoor(dag: CausalDag, z: Iterable[str]) -> bool:
    """Backdoor criterion for (treatment, outcome) checked path by path."""
    z = frozenset(z)
    w, y = dag.treatment, dag.outcome
    if z & dag.descendants(w):
        return False
    for p in _paths(dag, w, y):
        into_w = p[1] in dag.parents[w]
        if into_w and not _blocked(dag, p, z):
            return False
    return True


def oracle_structure(dag: CausalDag) -> Tuple[Tuple[str, ...], Tuple[str, ...], Tuple[str, ...]]:
    """(parents of Y, adjustment set Z, Y-parent-only set C) read off the graph."""
    pa = tuple(v for v in dag.parents[dag.outcome] if v != dag.treatment)
    c = tuple(v for v in pa if d_separated(dag, v, dag.treatment))
    z = tuple(v for v in pa if v not in c)
    return pa, z, c


def subgroup_oracle_table(dag: CausalDag) -> List[Tuple[Dict[str, int], float]]:
    """Exact CATE for every value-vector of the outcome's covariate parents."""
    pa = oracle_structure(dag)[0]
    rows = []
    for values in itertools.product((0, 1), repeat=len(pa)):
        sub = dict(zip(pa, values))
        try:
            rows.append((sub, exact_cate(dag, sub)))
        except DagError:
            rows.append((sub, float("nan")))
    return rows
