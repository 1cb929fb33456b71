"""Loopy belief propagation over the factor graph, plus a brute-force oracle.

Message passing is the algorithm the extracted arguments approximate.  It is
exact on polytrees and approximate in general; the flooding schedule below
(compute every message from the previous sweep, then swap) is deterministic
and insensitive to node ordering.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .factors import Factor, constant_factor, indicator_factor
from .model_io import (
    DiscreteNetwork,
    FactorGraph,
    NodeKey,
    VAR_NODE,
    var_node,
)

__all__ = [
    "ContradictionError",
    "MessageState",
    "BeliefResult",
    "init_potentials",
    "run_message_passing",
    "posterior_beliefs",
    "enumerate_posterior",
    "prior_odds",
]

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 200
ENUMERATION_LIMIT = 10**7


class ContradictionError(RuntimeError):
    """Evidence has zero probability under the model."""

    def __init__(self, variable: str):
        super().__init__(
            f"evidence contradicts the model: belief for {variable!r} is all zero"
        )
        self.variable = variable


def validate_evidence(net: DiscreteNetwork, evidence: dict[str, str]) -> None:
    for name, state in evidence.items():
        net.variable(name).index_of(state)


@dataclass
class MessageState:
    """Potentials and directed messages of one inference run."""

    graph: FactorGraph
    potentials: dict[NodeKey, Factor]
    messages: dict[tuple[NodeKey, NodeKey], Factor] = field(default_factory=dict)


@dataclass
class BeliefResult:
    beliefs: dict[str, Factor]
    converged: bool
    iterations: int


def init_potentials(graph: FactorGraph, evidence: dict[str, str]) -> MessageState:
    """CPT potentials on factor nodes; indicator or constant on variables."""
    net = graph.network
    validate_evidence(net, evidence)
    potentials: dict[NodeKey, Factor] = {}
    for v in net.variables:
        node = var_node(v.name)
        if v.name in evidence:
            potentials[node] = indicator_factor(v, evidence[v.name])
        else:
            potentials[node] = constant_factor(v)
        potentials[("factor", v.name)] = net.cpts[v.name]
    state = MessageState(graph=graph, potentials=potentials)
    for node, nbrs in graph.neighbors.items():
        for other in nbrs:
            shared = node if node[0] == VAR_NODE else other
            state.messages[(node, other)] = constant_factor(
                net.variable(shared[1])
            ).normalize()
    return state


def _factor_to_var_message(
    state: MessageState, fnode: NodeKey, vname: str, messages
) -> Factor:
    """sum_{scope \\ v} phi_f * prod of incoming variable messages."""
    net = state.graph.network
    phi = state.potentials[fnode]
    axes = {name: i for i, name in enumerate(phi.variable_names)}
    operands: list = [phi.values, list(range(len(phi.scope)))]
    for other_name in phi.variable_names:
        if other_name == vname:
            continue
        msg = messages[(var_node(other_name), fnode)]
        operands.extend([msg.values, [axes[other_name]]])
    out = np.einsum(*operands, [axes[vname]])
    return Factor((net.variable(vname),), out)


def _var_to_factor_message(
    state: MessageState, vname: str, fnode: NodeKey, messages
) -> Factor:
    phi = state.potentials[var_node(vname)]
    out = phi.values.copy()
    for nbr in state.graph.neighbors[var_node(vname)]:
        if nbr == fnode:
            continue
        out = out * messages[(nbr, var_node(vname))].values
    return Factor(phi.scope, out)


def run_message_passing(
    state: MessageState,
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> BeliefResult:
    """Synchronous flooding until messages move less than `tol`.

    Messages are normalized after every update to avoid underflow; this does
    not change the final beliefs.  Non-convergence within `max_iters` returns
    best-effort beliefs with converged=False rather than raising.
    """
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    if tol <= 0:
        raise ValueError("tol must be positive")
    graph = state.graph
    edges = sorted(state.messages.keys())
    messages = state.messages
    converged = False
    iterations = 0
    for iterations in range(1, max_iters + 1):
        new_messages: dict[tuple[NodeKey, NodeKey], Factor] = {}
        delta = 0.0
        for sender, receiver in edges:
            if sender[0] == VAR_NODE:
                msg = _var_to_factor_message(state, sender[1], receiver, messages)
            else:
                msg = _factor_to_var_message(state, sender, receiver[1], messages)
            total = msg.total()
            if total > 0:
                msg = Factor(msg.scope, msg.values / total)
            old = messages[(sender, receiver)]
            delta = max(delta, float(np.abs(msg.values - old.values).max()))
            new_messages[(sender, receiver)] = msg
        messages = new_messages
        if delta < tol:
            converged = True
            break
    state.messages = messages

    beliefs: dict[str, Factor] = {}
    for v in graph.network.variables:
        node = var_node(v.name)
        out = state.potentials[node].values.copy()
        for nbr in graph.neighbors[node]:
            out = out * messages[(nbr, node)].values
        if out.sum() <= 0.0:
            raise ContradictionError(v.name)
        beliefs[v.name] = Factor((v,), out / out.sum())
    return BeliefResult(beliefs=beliefs, converged=converged, iterations=iterations)


def posterior_beliefs(
    graph: FactorGraph,
    evidence: dict[str, str],
    max_iters: int = DEFAULT_MAX_ITERS,
    tol: float = DEFAULT_TOL,
) -> BeliefResult:
    """Convenience wrapper: init potentials and run message passing."""
    return run_message_passing(
        init_potentials(graph, evidence), max_iters=max_iters, tol=tol
    )


def enumerate_posterior(
    net: DiscreteNetwork, evidence: dict[str, str], target: str
) -> Factor:
    """Exact posterior over `target` by summing the full joint table.

    Independent of the message passing code path; used as the test oracle.
    Refuses joints above ENUMERATION_LIMIT assignments.
    """
    validate_evidence(net, evidence)
    target_var = net.variable(target)
    size = 1
    for v in net.variables:
        size *= v.arity
        if size > ENUMERATION_LIMIT:
            raise ValueError(
                f"joint has more than {ENUMERATION_LIMIT} assignments; refusing"
            )
    axes = {v.name: i for i, v in enumerate(net.variables)}
    operands: list = []
    for v in net.variables:
        cpt = net.cpts[v.name]
        operands.extend([cpt.values, [axes[n] for n in cpt.variable_names]])
    for name, state in evidence.items():
        ind = indicator_factor(net.variable(name), state)
        operands.extend([ind.values, [axes[name]]])
    joint = np.einsum(*operands, list(range(len(net.variables))), optimize=True)
    marg = joint.sum(
        axis=tuple(i for i, v in enumerate(net.variables) if v.name != target)
    )
    if marg.sum() <= 0.0:
        raise ContradictionError(target)
    return Factor((target_var,), marg / marg.sum())


def odds_for(belief: Factor, outcome: str) -> float:
    """p/(1-p) odds of one outcome under a normalized belief."""
    var = belief.scope[0]
    p = float(belief.values[var.index_of(outcome)])
    rest = float(belief.values.sum() - p)
    if rest <= 0.0:
        return float("inf")
    return p / rest


def prior_odds(
    net: DiscreteNetwork,
    target: str,
    outcome: str,
    graph: FactorGraph | None = None,
    prior_beliefs: BeliefResult | None = None,
) -> float:
    """Odds of the outcome under the no-evidence marginal from message passing."""
    if prior_beliefs is None:
        from .model_io import build_factor_graph

        graph = graph or build_factor_graph(net)
        prior_beliefs = posterior_beliefs(graph, {})
    return odds_for(prior_beliefs.beliefs[target], outcome)
