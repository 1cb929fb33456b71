"""Template-based natural language rendering of arguments.

Each inference step is classified from graph structure alone (causal,
evidential or intercausal), gets a weak/moderate/strong qualifier from the
implied log odds of its effect, and is rendered through fixed templates.
Three modes: `direct` states every step plainly, `contrastive` renders
intercausal steps as a counterfactual two-liner, `overview` compresses the
whole argument into one sentence.

All orderings derive from one canonical topological order of the argument,
so rendering is byte-deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .argument_core import (
    Argument,
    ArgumentError,
    EffectTable,
    argument_effect,
    step_effect,
    topological_order,
)
from .factors import Factor
from .model_io import (
    DescriptionDictionary,
    DiscreteNetwork,
    FACTOR_NODE,
    FactorGraph,
    NodeKey,
    VAR_NODE,
)

__all__ = [
    "MODES",
    "StepClassification",
    "classify_step",
    "strength_qualifier",
    "favored_outcomes",
    "favored_set_logodds",
    "explain_step",
    "explain_argument",
]

MODES = ("direct", "contrastive", "overview")

# Qualifier cut points, calibrated on the four labelled example steps
# (2.98 strong, 2.98 strong, 0.69 moderate, 0.26 weak).
QUALIFIER_WEAK_BELOW = 0.5
QUALIFIER_STRONG_FROM = 1.5

# States within this ratio of the best state are reported together
# ("X is A or X is B").
FAVORED_RATIO = 0.8


def strength_qualifier(logodds: float) -> str:
    """weak / moderate / strong label for an implied-logodds magnitude."""
    magnitude = abs(logodds)
    if magnitude < QUALIFIER_WEAK_BELOW:
        return "weak"
    if magnitude < QUALIFIER_STRONG_FROM:
        return "moderate"
    return "strong"


def favored_outcomes(effect: Factor) -> list[str]:
    """States the evidence factor favors, in declaration order."""
    var = effect.scope[0]
    values = effect.values
    best = float(values.max())
    if best <= 0.0:
        return list(var.states)
    return [s for s, v in zip(var.states, values) if v >= FAVORED_RATIO * best]


def favored_set_logodds(effect: Factor, favored: list[str]) -> float:
    """Log odds of the favored states against the average of the rest."""
    var = effect.scope[0]
    fav_idx = [var.index_of(s) for s in favored]
    rest_idx = [i for i in range(var.arity) if i not in fav_idx]
    if not rest_idx:
        return 0.0
    fav = float(np.mean([effect.values[i] for i in fav_idx]))
    rest = float(np.mean([effect.values[i] for i in rest_idx]))
    if fav > 0.0 and rest > 0.0:
        return float(np.log(fav / rest))
    if fav == 0.0 and rest > 0.0:
        return float("-inf")
    if fav > 0.0 and rest == 0.0:
        return float("inf")
    return 0.0


@dataclass(frozen=True)
class StepClassification:
    """Inference type plus the outcome(s) and strength of one rule firing."""

    kind: str  # causal | evidential | intercausal
    favored: tuple[str, ...]
    step_logodds: float


def classify_step(
    rule_child: str,
    premise_vars: set[str],
    conclusion: str,
    net: DiscreteNetwork,
) -> str:
    """Kind of inference, read off the parent relation of the rule's CPT."""
    parents = set(net.parents[rule_child])
    if conclusion == rule_child:
        return "causal"
    if conclusion not in parents:
        raise ArgumentError(
            f"conclusion {conclusion!r} unrelated to rule for {rule_child!r}"
        )
    if rule_child in premise_vars and len(premise_vars) > 1:
        return "intercausal"
    return "evidential"


def _join_and(parts: list[str]) -> str:
    if len(parts) == 1:
        return parts[0]
    return ", ".join(parts[:-1]) + " and " + parts[-1]


def _join_or(parts: list[str]) -> str:
    return " or ".join(parts)


@dataclass
class _Step:
    fnode: NodeKey
    conclusion: str
    inputs: list[str]  # input variables, canonical order
    effect: Factor
    classification: StepClassification


def _outcome_clause(
    dictionary: DescriptionDictionary, variable: str, states: list[str]
) -> str:
    return _join_or([dictionary.outcome_clause(variable, s) for s in states])


def _variable_clause(
    variable: str,
    arg: Argument,
    effects: EffectTable,
    dictionary: DescriptionDictionary,
) -> str:
    """How a variable is mentioned: its observation or its favored outcome."""
    premises = arg.premise_map
    if variable in premises:
        return dictionary.outcome_clause(variable, premises[variable])
    return _outcome_clause(dictionary, variable, favored_outcomes(effects[variable]))


def explain_step(
    step: _Step,
    arg: Argument,
    graph: FactorGraph,
    effects: EffectTable,
    dictionary: DescriptionDictionary,
    mode: str,
) -> list[str]:
    """Sentence(s) describing one rule firing."""
    cls = step.classification
    conclusion_clause = _outcome_clause(dictionary, step.conclusion, list(cls.favored))
    qualifier = strength_qualifier(cls.step_logodds)
    premise_clause = _join_and(
        [_variable_clause(v, arg, effects, dictionary) for v in step.inputs]
    )

    if cls.kind == "intercausal" and mode == "contrastive":
        child = step.fnode[1]
        counterfactual = step_effect(
            graph.factor_for(step.fnode),
            [effects[child]],
            graph.network.variable(step.conclusion),
        )
        actual = favored_set_logodds(step.effect, list(cls.favored))
        hypothetical = favored_set_logodds(counterfactual, list(cls.favored))
        comparative = "more" if actual > hypothetical else "less"
        child_clause = _variable_clause(child, arg, effects, dictionary)
        coparents = _join_and(
            [
                _variable_clause(v, arg, effects, dictionary)
                for v in step.inputs
                if v != child
            ]
        )
        return [
            f"Usually, if {child_clause} then {conclusion_clause}.",
            f"Since {coparents}, we can be {comparative} certain than this is "
            f"the case ({qualifier} inference).",
        ]

    verb = "causes that" if cls.kind == "causal" else "is evidence that"
    return [
        f"That {premise_clause} {verb} {conclusion_clause} "
        f"({qualifier} inference)."
    ]


def _build_steps(
    arg: Argument, graph: FactorGraph, effects: EffectTable
) -> list[_Step]:
    """Steps in canonical explanation order.

    Conclusions appear in topological order; several rules concluding the
    same variable are explained deepest-dependency first (the order their
    factor nodes become ready in the canonical topological sort, reversed).
    """
    order = topological_order(arg)
    pos = {node: i for i, node in enumerate(order)}
    net = graph.network
    steps: list[_Step] = []
    for node in order:
        if node[0] != VAR_NODE or not arg.predecessors[node]:
            continue
        conclusion = node[1]
        rules = sorted(arg.predecessors[node], key=lambda f: -pos[f])
        for fnode in rules:
            inputs = sorted(
                (v[1] for v in arg.predecessors[fnode]), key=lambda n: pos[(VAR_NODE, n)]
            )
            effect = effects.step_effects[(fnode, conclusion)]
            favored = favored_outcomes(effect)
            cls = StepClassification(
                kind=classify_step(fnode[1], set(inputs), conclusion, net),
                favored=tuple(favored),
                step_logodds=favored_set_logodds(effect, favored),
            )
            steps.append(
                _Step(
                    fnode=fnode,
                    conclusion=conclusion,
                    inputs=inputs,
                    effect=effect,
                    classification=cls,
                )
            )
    return steps


def _ordered_premises(arg: Argument) -> list[str]:
    """Premises ordered by how late their consuming rule fires, then name."""
    order = topological_order(arg)
    pos = {node: i for i, node in enumerate(order)}
    ranked = []
    for name, _ in arg.premises:
        consumers = [pos[f] for f in arg.successors[(VAR_NODE, name)]]
        ranked.append((-max(consumers), name))
    return [name for _, name in sorted(ranked)]


def explain_argument(
    arg: Argument,
    graph: FactorGraph,
    dictionary: DescriptionDictionary,
    mode: str = "direct",
    effects: EffectTable | None = None,
) -> str:
    """Full rendering of one argument in the requested mode."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    if effects is None:
        effects = argument_effect(arg, graph)
    premises = arg.premise_map
    premise_clause = _join_and(
        [
            dictionary.outcome_clause(name, premises[name])
            for name in _ordered_premises(arg)
        ]
    )

    target_effect = effects[arg.target]
    target_favored = favored_outcomes(target_effect)
    target_logodds = favored_set_logodds(target_effect, target_favored)
    target_clause = _outcome_clause(dictionary, arg.target, target_favored)

    if mode == "overview":
        qualifier = strength_qualifier(target_logodds)
        return (
            f"Since {premise_clause}, we infer that {target_clause} "
            f"({qualifier} inference)."
        )

    lines = [f"We have observed that {premise_clause}."]
    steps = _build_steps(arg, graph, effects)
    by_conclusion: dict[str, int] = {}
    for step in steps:
        by_conclusion[step.conclusion] = by_conclusion.get(step.conclusion, 0) + 1
    emitted: dict[str, int] = {}
    for step in steps:
        lines.extend(explain_step(step, arg, graph, effects, dictionary, mode))
        emitted[step.conclusion] = emitted.get(step.conclusion, 0) + 1
        if (
            by_conclusion[step.conclusion] > 1
            and emitted[step.conclusion] == by_conclusion[step.conclusion]
        ):
            node_effect = effects[step.conclusion]
            favored = favored_outcomes(node_effect)
            qualifier = strength_qualifier(favored_set_logodds(node_effect, favored))
            clause = _outcome_clause(dictionary, step.conclusion, favored)
            lines.append(
                f"All in all, this is evidence that {clause} "
                f"({qualifier} inference)."
            )
    return "\n".join(lines)
