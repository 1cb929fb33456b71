"""Arguments over the factor graph: effects, strength, union, decomposition.

An argument is a DAG laid over the factor graph.  Premise variables are its
sources, every factor node applies its CPT as an inference rule to the
evidence factors of its in-neighbours, and the conclusions accumulate by
multiplying the per-rule step effects.  The same factor node may feed more
than one conclusion (unions of chains routinely produce this).
"""

from __future__ import annotations

import heapq
import itertools
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .factors import (
    Factor,
    FactorError,
    Variable,
    factor_distance,
    implied_logodds,
    indicator_factor,
)
from .model_io import FACTOR_NODE, VAR_NODE, FactorGraph, NodeKey, var_node

__all__ = [
    "Argument",
    "ArgumentError",
    "UnionCycleError",
    "UnionClashError",
    "EffectTable",
    "chain_argument",
    "step_effect",
    "argument_effect",
    "argument_strength",
    "argument_union",
    "is_subargument",
    "decompose_simple",
    "is_independent",
    "is_proper",
    "set_partitions",
]


class ArgumentError(ValueError):
    """Invalid argument structure or operation."""


class UnionCycleError(ArgumentError):
    """The union of the given arguments would contain a directed cycle."""


class UnionClashError(ArgumentError):
    """A premise of one argument is a non-premise node of another."""


Edge = tuple[NodeKey, NodeKey]


@dataclass(frozen=True)
class Argument:
    """Immutable DAG over factor-graph nodes with premises and a target."""

    nodes: frozenset[NodeKey]
    edges: frozenset[Edge]
    premises: tuple[tuple[str, str], ...]  # sorted (variable, state) pairs
    target: str

    @staticmethod
    def make(
        nodes: Iterable[NodeKey],
        edges: Iterable[Edge],
        premises: dict[str, str],
        target: str,
    ) -> "Argument":
        return Argument(
            nodes=frozenset(nodes),
            edges=frozenset(edges),
            premises=tuple(sorted(premises.items())),
            target=target,
        )

    @property
    def premise_map(self) -> dict[str, str]:
        return dict(self.premises)

    @cached_property
    def successors(self) -> dict[NodeKey, tuple[NodeKey, ...]]:
        out: dict[NodeKey, list[NodeKey]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            out[a].append(b)
        return {n: tuple(sorted(v)) for n, v in out.items()}

    @cached_property
    def predecessors(self) -> dict[NodeKey, tuple[NodeKey, ...]]:
        inc: dict[NodeKey, list[NodeKey]] = {n: [] for n in self.nodes}
        for a, b in self.edges:
            inc[b].append(a)
        return {n: tuple(sorted(v)) for n, v in inc.items()}

    @cached_property
    def canonical_key(self) -> tuple:
        return (self.target, self.premises, tuple(sorted(self.edges)),
                tuple(sorted(self.nodes)))

    def canonical_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    def to_dict(self) -> dict:
        return {
            "target": self.target,
            "premises": {v: s for v, s in self.premises},
            "nodes": sorted(f"{kind}:{name}" for kind, name in self.nodes),
            "edges": sorted(
                [f"{a[0]}:{a[1]}", f"{b[0]}:{b[1]}"] for a, b in self.edges
            ),
        }

    @staticmethod
    def from_dict(data: dict) -> "Argument":
        def parse_node(s: str) -> NodeKey:
            kind, _, name = s.partition(":")
            if kind not in (VAR_NODE, FACTOR_NODE) or not name:
                raise ArgumentError(f"bad node key {s!r}")
            return (kind, name)

        return Argument.make(
            nodes=[parse_node(s) for s in data["nodes"]],
            edges=[(parse_node(a), parse_node(b)) for a, b in data["edges"]],
            premises=dict(data["premises"]),
            target=data["target"],
        )


def chain_argument(
    path: Sequence[NodeKey], premise_state: str, target: str
) -> Argument:
    """Argument for a simple factor-graph path premise -> ... -> target."""
    if len(path) < 1 or path[0][0] != VAR_NODE or path[-1] != var_node(target):
        raise ArgumentError(f"not a premise-to-target path: {path}")
    edges = [(path[i], path[i + 1]) for i in range(len(path) - 1)]
    return Argument.make(
        nodes=path,
        edges=edges,
        premises={path[0][1]: premise_state},
        target=target,
    )


def topological_order(arg: Argument) -> list[NodeKey]:
    """Canonical topological order: Kahn's algorithm popping the least key.

    This single order drives every downstream tie-break (effect evaluation,
    explanation line ordering), keeping all outputs byte-deterministic.
    """
    indeg = {n: len(arg.predecessors[n]) for n in arg.nodes}
    ready = [n for n, d in indeg.items() if d == 0]
    heapq.heapify(ready)
    order: list[NodeKey] = []
    while ready:
        node = heapq.heappop(ready)
        order.append(node)
        for nxt in arg.successors[node]:
            indeg[nxt] -= 1
            if indeg[nxt] == 0:
                heapq.heappush(ready, nxt)
    if len(order) != len(arg.nodes):
        raise UnionCycleError("argument graph contains a directed cycle")
    return order


def validate_argument(arg: Argument, graph: FactorGraph) -> None:
    """Check the structural invariants against the factor graph."""
    premises = arg.premise_map
    net = graph.network
    for node in arg.nodes:
        kind, name = node
        if kind == VAR_NODE:
            net.variable(name)
        elif name not in net.cpts:
            raise ArgumentError(f"unknown factor node {name!r}")
    for a, b in arg.edges:
        if a not in arg.nodes or b not in arg.nodes:
            raise ArgumentError(f"edge {a}->{b} uses a node outside the argument")
        if a[0] == b[0]:
            raise ArgumentError(f"edge {a}->{b} is not variable<->factor")
        fnode = a if a[0] == FACTOR_NODE else b
        vnode = b if a[0] == FACTOR_NODE else a
        if vnode[1] not in graph.scope_names(fnode):
            raise ArgumentError(
                f"edge {a}->{b}: {vnode[1]!r} not in scope of factor {fnode[1]!r}"
            )
    topological_order(arg)
    if var_node(arg.target) not in arg.nodes:
        raise ArgumentError(f"target {arg.target!r} not in argument")
    if arg.successors[var_node(arg.target)]:
        raise ArgumentError("target must be a sink")
    for node in arg.nodes:
        if not arg.predecessors[node]:
            if node[0] != VAR_NODE or node[1] not in premises:
                raise ArgumentError(f"source {node} is not a premise variable")
        if node[0] == VAR_NODE and node[1] in premises and arg.predecessors[node]:
            raise ArgumentError(f"premise {node[1]!r} has incoming edges")
        if node != var_node(arg.target) and not arg.successors[node]:
            raise ArgumentError(f"{node} is a sink but not the target")
    for vname, state in premises.items():
        net.variable(vname).index_of(state)
        if var_node(vname) not in arg.nodes:
            raise ArgumentError(f"premise {vname!r} not a node of the argument")


def step_effect(
    rule: Factor, premises: Sequence[Factor], conclusion: Variable
) -> Factor:
    """Evidence the rule passes to `conclusion` given premise evidence.

    [sum over scope minus conclusion of rule * prod(premises)] divided by
    [same marginal of the bare rule], so the result isolates what the
    premises add on top of what the table already implies.
    """
    scope_names = rule.variable_names
    if conclusion.name not in scope_names:
        raise ArgumentError(
            f"conclusion {conclusion.name!r} not in rule scope {scope_names}"
        )
    seen: set[str] = set()
    for prem in premises:
        if len(prem.scope) != 1:
            raise ArgumentError("premises must be single-variable factors")
        pname = prem.scope[0].name
        if pname == conclusion.name or pname not in scope_names:
            raise ArgumentError(
                f"premise variable {pname!r} invalid for conclusion "
                f"{conclusion.name!r} of rule over {scope_names}"
            )
        if pname in seen:
            raise ArgumentError(f"duplicate premise for variable {pname!r}")
        seen.add(pname)
    numerator = rule
    for prem in premises:
        numerator = numerator.product(prem)
    numerator = numerator.marginalize({conclusion.name})
    denominator = rule.marginalize({conclusion.name})
    try:
        return numerator.divide(denominator)
    except FactorError as exc:
        raise ArgumentError(f"degenerate rule in step effect: {exc}") from exc


@dataclass
class EffectTable:
    """Per-node evidence factors of one argument, with per-rule detail."""

    node_effects: dict[str, Factor]
    step_effects: dict[tuple[NodeKey, str], Factor]  # (factor node, conclusion)

    def __getitem__(self, variable: str) -> Factor:
        return self.node_effects[variable]


def argument_effect(arg: Argument, graph: FactorGraph) -> EffectTable:
    """Recursive accumulation of step effects from premises to the target.

    Premises carry their observation indicators; every other variable in the
    argument is the product of the step effects of its incoming rules.
    Effects are kept unnormalized (strength and distance are scale-free).
    """
    net = graph.network
    premises = arg.premise_map
    node_effects: dict[str, Factor] = {}
    step_effects: dict[tuple[NodeKey, str], Factor] = {}
    for node in topological_order(arg):
        kind, name = node
        if kind != VAR_NODE:
            continue
        variable = net.variable(name)
        if name in premises:
            node_effects[name] = indicator_factor(variable, premises[name])
            continue
        combined: Factor | None = None
        for fnode in arg.predecessors[node]:
            rule = graph.factor_for(fnode)
            inputs = [
                node_effects[v[1]]
                for v in arg.predecessors[fnode]
            ]
            eff = step_effect(rule, inputs, variable)
            step_effects[(fnode, name)] = eff
            combined = eff if combined is None else combined.product(eff)
        if combined is None:
            raise ArgumentError(f"variable {name!r} has no incoming rule")
        node_effects[name] = combined
    return EffectTable(node_effects=node_effects, step_effects=step_effects)


def argument_strength(
    arg: Argument, graph: FactorGraph, outcome: str,
    effects: EffectTable | None = None,
) -> float:
    """Log odds toward target=outcome implied by the argument's effect.

    Positive favors the outcome, negative argues against it; +/-inf marks
    degenerate hard evidence.
    """
    if effects is None:
        effects = argument_effect(arg, graph)
    return implied_logodds(effects[arg.target], outcome)


def argument_union(args: Sequence[Argument]) -> Argument:
    """Union of graphs; fails on directed cycles or premise clashes."""
    if not args:
        raise ArgumentError("cannot union zero arguments")
    target = args[0].target
    for a in args[1:]:
        if a.target != target:
            raise ArgumentError(
                f"union requires a common target ({a.target!r} != {target!r})"
            )
    premises: dict[str, str] = {}
    for a in args:
        for v, s in a.premises:
            if premises.get(v, s) != s:
                raise UnionClashError(
                    f"premise {v!r} observed as both {premises[v]!r} and {s!r}"
                )
            premises[v] = s
    for a in args:
        for b in args:
            if a is b:
                continue
            b_premises = b.premise_map
            for v, _ in a.premises:
                node = var_node(v)
                if node in b.nodes and v not in b_premises:
                    raise UnionClashError(
                        f"premise {v!r} is a non-premise node of another argument"
                    )
    union = Argument.make(
        nodes=frozenset().union(*(a.nodes for a in args)),
        edges=frozenset().union(*(a.edges for a in args)),
        premises=premises,
        target=target,
    )
    topological_order(union)  # raises UnionCycleError on a directed loop
    return union


def is_subargument(a: Argument, b: Argument) -> bool:
    """True when every node, edge and premise of `a` is also in `b`."""
    return (
        a.target == b.target
        and a.nodes <= b.nodes
        and a.edges <= b.edges
        and set(a.premises) <= set(b.premises)
    )


def decompose_simple(arg: Argument) -> list[Argument]:
    """All simple premise-to-target directed paths within the argument.

    Every argument equals the union of this set; simple arguments decompose
    to themselves.
    """
    target_node = var_node(arg.target)
    premises = arg.premise_map
    results: list[Argument] = []
    seen: set[tuple] = set()

    def walk(node: NodeKey, path: list[NodeKey]) -> None:
        if node == target_node:
            cand = chain_argument(list(path), premises[path[0][1]], arg.target)
            if cand.canonical_key not in seen:
                seen.add(cand.canonical_key)
                results.append(cand)
            return
        for nxt in arg.successors[node]:
            if nxt in path:
                continue
            path.append(nxt)
            walk(nxt, path)
            path.pop()

    for vname in sorted(premises):
        start = var_node(vname)
        walk(start, [start])
    results.sort(key=lambda a: a.canonical_key)
    return results


def _target_effect_product(
    members: Sequence[Argument], graph: FactorGraph, cache: dict | None = None
) -> Factor:
    out: Factor | None = None
    for m in members:
        eff = _cached_effect(m, graph, cache)[m.target]
        out = eff if out is None else out.product(eff)
    assert out is not None
    return out


def _cached_effect(arg: Argument, graph: FactorGraph, cache: dict | None):
    if cache is None:
        return argument_effect(arg, graph)
    key = arg.canonical_key
    hit = cache.get(key)
    if hit is None:
        hit = argument_effect(arg, graph)
        cache[key] = hit
    return hit


def is_independent(
    args: Sequence[Argument],
    graph: FactorGraph,
    threshold: float,
    cache: dict | None = None,
) -> bool:
    """Approximate independence of a family of arguments.

    For every subset of size >= 2 the product of the members' target effects
    must lie within `threshold` factor distance of the union's target effect.
    Subsets whose union is undefined (cycle or clash) count as dependent: the
    family could not be presented as a decomposition.
    """
    if threshold < 0:
        raise ArgumentError("threshold must be >= 0")
    if len(args) <= 1:
        return True
    for size in range(2, len(args) + 1):
        for combo in itertools.combinations(args, size):
            try:
                union = argument_union(combo)
            except ArgumentError:
                return False
            prod = _target_effect_product(combo, graph, cache)
            union_eff = _cached_effect(union, graph, cache)[union.target]
            if factor_distance(prod, union_eff) > threshold:
                return False
    return True


def set_partitions(items: Sequence) -> Iterable[list[list]]:
    """All partitions of `items` into nonempty blocks, deterministic order."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]
        yield [[first]] + sub


def is_proper(
    arg: Argument,
    graph: FactorGraph,
    threshold: float,
    cache: dict | None = None,
) -> bool:
    """Simple, or not expressible as a union of independent subarguments.

    Tries every partition of the simple decomposition into >= 2 blocks; if
    some partition's block unions form a threshold-independent family the
    argument should be presented in parts and is not proper.
    """
    simples = decompose_simple(arg)
    if len(simples) <= 1:
        return True
    for partition in set_partitions(simples):
        if len(partition) < 2:
            continue
        try:
            blocks = [argument_union(block) for block in partition]
        except ArgumentError:
            continue
        if is_independent(blocks, graph, threshold, cache=cache):
            return False
    return True
