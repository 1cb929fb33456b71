"""Mining relevant, approximately independent arguments from evidence.

Pipeline: enumerate simple factor-graph paths from each evidence variable to
the target, compose entangled combinations, keep the proper and maximal
ones, then merge any output pair that still fails pairwise independence.
Everything is canonically ordered so the output is byte-deterministic.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .argument_core import (
    Argument,
    ArgumentError,
    EffectTable,
    argument_effect,
    argument_strength,
    argument_union,
    chain_argument,
    decompose_simple,
    is_independent,
    is_subargument,
    set_partitions,
)
from .factors import factor_distance
from .model_io import FactorGraph, NodeKey, VAR_NODE, var_node

__all__ = [
    "MiningConfig",
    "default_config",
    "all_simple_arguments",
    "all_local_arguments",
    "ranked_strengths",
]

# |strength| below this is treated as "provides no evidence" and dropped
# from the final ranking (constant effects arise from blocked v-structures).
RELEVANCE_EPS = 1e-9

# Networks larger than this get the heuristic caps by default.
SMALL_NETWORK_VARS = 12
DEFAULT_THRESHOLD = 0.5
DEFAULT_MAX_PATH_LENGTH = 7
DEFAULT_COMPLEXITY_LIMIT = 3


@dataclass(frozen=True)
class MiningConfig:
    """Knobs of the argument search.

    threshold: approximate-independence distance used for properness and the
    final pairwise merge.  max_path_length caps simple-path length counted in
    factor-graph edges; complexity_limit caps how many simple arguments may
    be combined.  Caps of None mean exact (exhaustive) mode.
    """

    threshold: float = DEFAULT_THRESHOLD
    max_path_length: int | None = None
    complexity_limit: int | None = None

    def __post_init__(self) -> None:
        if self.threshold < 0:
            raise ValueError("threshold must be >= 0")
        for cap in (self.max_path_length, self.complexity_limit):
            if cap is not None and cap < 1:
                raise ValueError("caps must be >= 1 when present")


def default_config(graph: FactorGraph, threshold: float = DEFAULT_THRESHOLD) -> MiningConfig:
    """Exact mode for small networks, (7, 3) caps otherwise."""
    if len(graph.network.variables) <= SMALL_NETWORK_VARS:
        return MiningConfig(threshold=threshold)
    return MiningConfig(
        threshold=threshold,
        max_path_length=DEFAULT_MAX_PATH_LENGTH,
        complexity_limit=DEFAULT_COMPLEXITY_LIMIT,
    )


def all_simple_arguments(
    graph: FactorGraph,
    target: str,
    evidence: dict[str, str],
    max_path_length: int | None = None,
) -> list[Argument]:
    """One chain argument per simple path from an evidence variable to target.

    Paths that travel along an observed intermediate variable are discarded;
    whatever lies beyond a known value is screened off.  Path length counts
    factor-graph edges, so variable -> CPT -> variable is length 2.
    """
    if target in evidence:
        raise ArgumentError(f"target {target!r} is observed")
    if not evidence:
        raise ArgumentError("evidence must be nonempty")
    graph.network.variable(target)
    target_node = var_node(target)
    results: list[Argument] = []

    def walk(node: NodeKey, path: list[NodeKey], start_state: str) -> None:
        if node == target_node:
            results.append(chain_argument(list(path), start_state, target))
            return
        if max_path_length is not None and len(path) - 1 >= max_path_length:
            return
        for nxt in graph.neighbors[node]:
            if nxt in path:
                continue
            # never pass through another observed variable
            if nxt[0] == VAR_NODE and nxt != target_node and nxt[1] in evidence:
                continue
            path.append(nxt)
            walk(nxt, path, start_state)
            path.pop()

    for ev_name in sorted(evidence):
        start = var_node(ev_name)
        walk(start, [start], evidence[ev_name])
    results.sort(key=lambda a: a.canonical_key)
    return results


def _entangled(a: Argument, b: Argument, target: str) -> bool:
    """Shared structure beyond the target and common premises."""
    a_premises = a.premise_map
    b_premises = b.premise_map
    for node in a.nodes & b.nodes:
        if node == var_node(target):
            continue
        kind, name = node
        if (
            kind == VAR_NODE
            and name in a_premises
            and name in b_premises
        ):
            continue
        return True
    return False


def _connected_subsets(
    adjacency: dict[int, set[int]], max_size: int
) -> list[tuple[int, ...]]:
    """Connected vertex subsets of size 2..max_size, each exactly once.

    Only combinations whose members are pairwise entangled through shared
    structure can ever be proper, so disconnected subsets are never visited.
    Each subset is generated once, rooted at its minimum vertex.
    """
    out: list[tuple[int, ...]] = []
    n = len(adjacency)

    def grow(start: int, subset: list[int], banned: frozenset[int]) -> None:
        if len(subset) >= 2:
            out.append(tuple(sorted(subset)))
        if len(subset) >= max_size:
            return
        members = set(subset)
        frontier = sorted(
            {
                v
                for u in subset
                for v in adjacency[u]
                if v > start and v not in members and v not in banned
            }
        )
        blocked = set(banned)
        for v in frontier:
            grow(start, subset + [v], frozenset(blocked))
            blocked.add(v)

    for start in range(n):
        grow(start, [start], frozenset())
    return sorted(out)


def _is_proper_composition(
    components: tuple[Argument, ...],
    union: Argument,
    graph: FactorGraph,
    threshold: float,
    cache: dict,
) -> bool:
    """Properness via partitions of the union's full simple decomposition."""
    simples = decompose_simple(union)
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


def _remove_subarguments(args: list[Argument]) -> list[Argument]:
    """Keep only arguments that are maximal under the subargument relation."""
    keep: list[Argument] = []
    for a in args:
        if any(
            is_subargument(a, b) and a.canonical_key != b.canonical_key
            for b in args
        ):
            continue
        keep.append(a)
    return keep


def all_local_arguments(
    graph: FactorGraph,
    target_outcome: tuple[str, str],
    evidence: dict[str, str],
    config: MiningConfig | None = None,
) -> list[Argument]:
    """Ranked list of relevant, approximately independent arguments.

    Exact mode (no caps) considers every combination of simple arguments;
    heuristic mode restricts path length and combination size, then repairs
    leftover dependence by pairwise merging.  Output is sorted by decreasing
    absolute strength toward `target_outcome` with canonical tie-breaks, is
    free of mutual subarguments, and omits zero-strength arguments.
    """
    target, outcome = target_outcome
    graph.network.variable(target).index_of(outcome)
    config = config or default_config(graph)
    simples = all_simple_arguments(
        graph, target, evidence, max_path_length=config.max_path_length
    )
    if not simples:
        return []
    cache: dict = {}

    # compose entangled combinations; parallel combinations are exactly
    # independent and can never be proper, so they are skipped outright
    adjacency = {
        i: {
            j
            for j in range(len(simples))
            if j != i and _entangled(simples[i], simples[j], target)
        }
        for i in range(len(simples))
    }
    max_size = config.complexity_limit or len(simples)
    composites: dict[tuple, Argument] = {}
    for combo_idx in _connected_subsets(adjacency, max_size):
        combo = tuple(simples[i] for i in combo_idx)
        try:
            union = argument_union(combo)
        except ArgumentError:
            continue
        if union.canonical_key in composites:
            continue
        if _is_proper_composition(combo, union, graph, config.threshold, cache):
            composites[union.canonical_key] = union

    candidates = list(simples) + list(composites.values())
    candidates = _remove_subarguments(candidates)
    candidates.sort(key=lambda a: a.canonical_key)

    # pairwise repair: combine any two results that are still dependent
    changed = True
    while changed:
        changed = False
        for i, j in itertools.combinations(range(len(candidates)), 2):
            a, b = candidates[i], candidates[j]
            try:
                union = argument_union((a, b))
            except ArgumentError:
                continue
            prod = (
                _effect(a, graph, cache)[target]
                .product(_effect(b, graph, cache)[target])
            )
            union_eff = _effect(union, graph, cache)[target]
            if factor_distance(prod, union_eff) > config.threshold:
                del candidates[j], candidates[i]
                candidates.append(union)
                candidates.sort(key=lambda a: a.canonical_key)
                changed = True
                break

    candidates = _remove_subarguments(candidates)

    ranked = []
    for arg in candidates:
        strength = argument_strength(
            arg, graph, outcome, effects=_effect(arg, graph, cache)
        )
        if abs(strength) < RELEVANCE_EPS:
            continue
        ranked.append((arg, strength))
    ranked.sort(key=lambda item: (-abs(item[1]), item[0].canonical_key))
    return [arg for arg, _ in ranked]


def _effect(arg: Argument, graph: FactorGraph, cache: dict) -> EffectTable:
    key = arg.canonical_key
    hit = cache.get(key)
    if hit is None:
        hit = argument_effect(arg, graph)
        cache[key] = hit
    return hit


def ranked_strengths(
    graph: FactorGraph,
    args: list[Argument],
    outcome_target: tuple[str, str],
) -> list[tuple[Argument, float, EffectTable]]:
    """Arguments with their strengths and effect tables, in given order."""
    target, outcome = outcome_target
    out = []
    for arg in args:
        effects = argument_effect(arg, graph)
        out.append((arg, argument_strength(arg, graph, outcome, effects), effects))
    return out
