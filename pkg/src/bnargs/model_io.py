"""BIF model loading, network/factor-graph construction and descriptions.

Supports the BIF 0.15 dialect that the classic bnlearn-repository networks
(ASIA, ALARM, ...) are distributed in: `network`, `variable` blocks with
`type discrete`, and `probability` blocks using either a `table` line or
per-parent-assignment rows.  Properties and comments are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .factors import Factor, FactorError, Variable

__all__ = [
    "BifSyntaxError",
    "NetworkValidationError",
    "DiscreteNetwork",
    "FactorGraph",
    "DescriptionDictionary",
    "parse_bif",
    "load_bif_file",
    "build_factor_graph",
    "load_descriptions",
    "network_summary",
    "to_bif",
]

ROW_SUM_TOL = 1e-4


class BifSyntaxError(ValueError):
    """Malformed BIF input; carries the 1-based line and column."""

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class NetworkValidationError(ValueError):
    """Structurally parsed but semantically invalid network."""


@dataclass
class DiscreteNetwork:
    """A discrete Bayesian network: variables, parent sets and CPTs.

    CPT factors have scope (child, *parents) with rows normalized so that
    for every parent assignment the child states sum to one.
    """

    name: str
    variables: list[Variable]
    parents: dict[str, tuple[str, ...]]
    cpts: dict[str, Factor]

    def __post_init__(self) -> None:
        self._by_name = {v.name: v for v in self.variables}

    def variable(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise NetworkValidationError(f"unknown variable {name!r}") from None

    @property
    def variable_names(self) -> list[str]:
        return [v.name for v in self.variables]

    def topological_order(self) -> list[str]:
        order: list[str] = []
        temp: set[str] = set()
        done: set[str] = set()

        def visit(name: str) -> None:
            if name in done:
                return
            if name in temp:
                raise NetworkValidationError(
                    f"parent relation has a directed cycle through {name!r}"
                )
            temp.add(name)
            for p in self.parents[name]:
                visit(p)
            temp.discard(name)
            done.add(name)
            order.append(name)

        for v in self.variables:
            visit(v.name)
        return order

    def is_polytree(self) -> bool:
        """True when the undirected skeleton has no cycle."""
        parent_of: dict[str, str] = {n: n for n in self.variable_names}

        def find(x: str) -> str:
            while parent_of[x] != x:
                parent_of[x] = parent_of[parent_of[x]]
                x = parent_of[x]
            return x

        for child, ps in self.parents.items():
            for p in ps:
                ra, rb = find(child), find(p)
                if ra == rb:
                    return False
                parent_of[ra] = rb
        return True

    def validate(self) -> None:
        self.topological_order()
        for name, cpt in self.cpts.items():
            child = self.variable(name)
            expected_scope = (name,) + self.parents[name]
            if cpt.variable_names != expected_scope:
                raise NetworkValidationError(
                    f"CPT scope {cpt.variable_names} for {name!r} does not match "
                    f"(child, *parents) = {expected_scope}"
                )
            col_sums = cpt.values.sum(axis=0)
            if not np.allclose(col_sums, 1.0, atol=1e-6):
                worst = float(np.abs(col_sums - 1.0).max())
                raise NetworkValidationError(
                    f"CPT for {child.name!r} is not column-stochastic "
                    f"(worst deviation {worst:g})"
                )


VAR_NODE = "var"
FACTOR_NODE = "factor"

NodeKey = tuple[str, str]


def var_node(name: str) -> NodeKey:
    return (VAR_NODE, name)


def factor_node(name: str) -> NodeKey:
    """Key of the factor node holding the CPT of `name`."""
    return (FACTOR_NODE, name)


@dataclass
class FactorGraph:
    """Bipartite graph of variable nodes and one factor node per CPT."""

    network: DiscreteNetwork
    neighbors: dict[NodeKey, tuple[NodeKey, ...]] = field(default_factory=dict)

    @property
    def variable_nodes(self) -> list[NodeKey]:
        return [var_node(v.name) for v in self.network.variables]

    @property
    def factor_nodes(self) -> list[NodeKey]:
        return [factor_node(v.name) for v in self.network.variables]

    @property
    def edge_count(self) -> int:
        return sum(len(ns) for ns in self.neighbors.values()) // 2

    def factor_for(self, node: NodeKey) -> Factor:
        kind, name = node
        if kind != FACTOR_NODE:
            raise ValueError(f"{node} is not a factor node")
        return self.network.cpts[name]

    def scope_names(self, node: NodeKey) -> tuple[str, ...]:
        kind, name = node
        if kind == VAR_NODE:
            return (name,)
        return self.network.cpts[name].variable_names


def build_factor_graph(net: DiscreteNetwork) -> FactorGraph:
    neighbors: dict[NodeKey, list[NodeKey]] = {
        var_node(v.name): [] for v in net.variables
    }
    for name in net.variable_names:
        fnode = factor_node(name)
        neighbors[fnode] = []
        for member in net.cpts[name].variable_names:
            neighbors[fnode].append(var_node(member))
            neighbors[var_node(member)].append(fnode)
    frozen = {node: tuple(sorted(ns)) for node, ns in neighbors.items()}
    return FactorGraph(network=net, neighbors=frozen)


# ----------------------------------------------------------------------
# BIF parsing
# ----------------------------------------------------------------------

_PUNCT = set("{}()[],;|=")


class _Tokenizer:
    def __init__(self, text: str):
        self.tokens: list[tuple[str, int, int]] = []
        line, col = 1, 1
        i, n = 0, len(text)
        while i < n:
            c = text[i]
            if c == "\n":
                line += 1
                col = 1
                i += 1
            elif c in " \t\r":
                i += 1
                col += 1
            elif text.startswith("//", i):
                while i < n and text[i] != "\n":
                    i += 1
            elif text.startswith("/*", i):
                end = text.find("*/", i + 2)
                if end < 0:
                    raise BifSyntaxError("unterminated comment", line, col)
                skipped = text[i : end + 2]
                line += skipped.count("\n")
                col = 1 if "\n" in skipped else col + len(skipped)
                i = end + 2
            elif c in _PUNCT:
                self.tokens.append((c, line, col))
                i += 1
                col += 1
            else:
                j = i
                while j < n and text[j] not in _PUNCT and text[j] not in " \t\r\n":
                    j += 1
                self.tokens.append((text[i:j], line, col))
                col += j - i
                i = j
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos][0] if self.pos < len(self.tokens) else None

    def next(self, expect: str | None = None) -> str:
        if self.pos >= len(self.tokens):
            last = self.tokens[-1] if self.tokens else ("", 1, 1)
            raise BifSyntaxError("unexpected end of input", last[1], last[2])
        tok, line, col = self.tokens[self.pos]
        self.pos += 1
        if expect is not None and tok != expect:
            raise BifSyntaxError(f"expected {expect!r}, got {tok!r}", line, col)
        return tok

    def here(self) -> tuple[int, int]:
        if self.pos < len(self.tokens):
            _, line, col = self.tokens[self.pos]
            return line, col
        return self.tokens[-1][1], self.tokens[-1][2]

    def error(self, message: str) -> BifSyntaxError:
        line, col = self.here()
        return BifSyntaxError(message, line, col)


def _skip_block(tz: _Tokenizer) -> None:
    depth = 0
    while True:
        tok = tz.next()
        if tok == "{":
            depth += 1
        elif tok == "}":
            depth -= 1
            if depth == 0:
                return


def _parse_number(tz: _Tokenizer) -> float:
    tok = tz.next()
    try:
        return float(tok)
    except ValueError:
        raise tz.error(f"expected a number, got {tok!r}") from None


def parse_bif(text: str) -> DiscreteNetwork:
    """Parse BIF text into a validated DiscreteNetwork."""
    tz = _Tokenizer(text)
    name = "unknown"
    variables: list[Variable] = []
    var_map: dict[str, Variable] = {}
    parents: dict[str, tuple[str, ...]] = {}
    cpts: dict[str, Factor] = {}

    while tz.peek() is not None:
        kw = tz.next()
        if kw == "network":
            name = tz.next()
            _skip_block(tz)
        elif kw == "variable":
            vname = tz.next()
            if vname in var_map:
                raise tz.error(f"variable {vname!r} declared twice")
            tz.next("{")
            states: tuple[str, ...] | None = None
            while tz.peek() != "}":
                inner = tz.next()
                if inner == "type":
                    if tz.next() != "discrete":
                        raise tz.error(f"variable {vname!r} is not discrete")
                    tz.next("[")
                    count = int(_parse_number(tz))
                    tz.next("]")
                    tz.next("{")
                    labels = []
                    while tz.peek() != "}":
                        tok = tz.next()
                        if tok != ",":
                            labels.append(tok)
                    tz.next("}")
                    tz.next(";")
                    if len(labels) != count:
                        raise tz.error(
                            f"variable {vname!r} declares {count} states but "
                            f"lists {len(labels)}"
                        )
                    states = tuple(labels)
                else:
                    # property line or similar; swallow to ';'
                    while tz.next() != ";":
                        pass
            tz.next("}")
            if states is None:
                raise tz.error(f"variable {vname!r} has no type declaration")
            try:
                var = Variable(vname, states)
            except FactorError as exc:
                raise tz.error(str(exc)) from None
            variables.append(var)
            var_map[vname] = var
        elif kw == "probability":
            child, par_names, cpt = _parse_probability(tz, var_map)
            if child in cpts:
                raise tz.error(f"duplicate probability block for {child!r}")
            parents[child] = par_names
            cpts[child] = cpt
        else:
            raise tz.error(f"unexpected token {kw!r}")

    missing = [v.name for v in variables if v.name not in cpts]
    if missing:
        raise NetworkValidationError(f"variables without CPTs: {missing}")

    net = DiscreteNetwork(name=name, variables=variables, parents=parents, cpts=cpts)
    net.validate()
    return net


def _parse_probability(
    tz: _Tokenizer, var_map: dict[str, Variable]
) -> tuple[str, tuple[str, ...], Factor]:
    tz.next("(")
    child_name = tz.next()
    if child_name not in var_map:
        raise tz.error(f"probability block for undeclared variable {child_name!r}")
    child = var_map[child_name]
    par_names: list[str] = []
    if tz.peek() == "|":
        tz.next()
        while tz.peek() != ")":
            tok = tz.next()
            if tok == ",":
                continue
            if tok not in var_map:
                raise tz.error(f"undeclared parent {tok!r} of {child_name!r}")
            par_names.append(tok)
    tz.next(")")
    par_vars = [var_map[p] for p in par_names]
    shape = tuple(v.arity for v in par_vars)
    n_configs = int(np.prod(shape, dtype=np.int64)) if shape else 1
    table = np.full((child.arity,) + shape, np.nan)

    tz.next("{")
    while tz.peek() != "}":
        tok = tz.peek()
        if tok == "table":
            tz.next()
            values: list[float] = []
            while tz.peek() != ";":
                if tz.peek() == ",":
                    tz.next()
                    continue
                values.append(_parse_number(tz))
            tz.next(";")
            if len(values) != child.arity * n_configs:
                raise tz.error(
                    f"table for {child_name!r} has {len(values)} entries, "
                    f"expected {child.arity * n_configs}"
                )
            # child varies slowest, parents row-major (last parent fastest)
            table[...] = np.asarray(values).reshape((child.arity,) + shape)
        elif tok == "(":
            tz.next()
            labels: list[str] = []
            while tz.peek() != ")":
                t = tz.next()
                if t != ",":
                    labels.append(t)
            tz.next(")")
            if len(labels) != len(par_vars):
                raise tz.error(
                    f"row for {child_name!r} lists {len(labels)} parent states, "
                    f"expected {len(par_vars)}"
                )
            try:
                idx = tuple(v.index_of(lab) for v, lab in zip(par_vars, labels))
            except FactorError as exc:
                raise tz.error(str(exc)) from None
            values = []
            while tz.peek() != ";":
                if tz.peek() == ",":
                    tz.next()
                    continue
                values.append(_parse_number(tz))
            tz.next(";")
            if len(values) != child.arity:
                raise tz.error(
                    f"row {labels} for {child_name!r} has {len(values)} values, "
                    f"expected {child.arity}"
                )
            table[(slice(None),) + idx] = values
        elif tok == "property":
            while tz.next() != ";":
                pass
        else:
            raise tz.error(f"unexpected token {tok!r} in probability block")
    tz.next("}")

    if np.isnan(table).any():
        raise NetworkValidationError(
            f"probability block for {child_name!r} does not cover every "
            f"parent assignment"
        )
    sums = table.sum(axis=0)
    if not np.allclose(sums, 1.0, atol=ROW_SUM_TOL):
        flat = np.argwhere(np.abs(sums - 1.0) > ROW_SUM_TOL)
        offending = []
        for raw in flat[:5]:
            assignment = ", ".join(
                f"{v.name}={v.states[i]}" for v, i in zip(par_vars, raw)
            )
            offending.append(f"P({child_name} | {assignment}) sums to {sums[tuple(raw)]:g}")
        raise NetworkValidationError(
            f"CPT rows must sum to 1 +/- {ROW_SUM_TOL}: " + "; ".join(offending)
        )
    factor = Factor((child, *par_vars), table)
    return child_name, tuple(par_names), factor


def load_bif_file(path) -> DiscreteNetwork:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_bif(fh.read())


def to_bif(net: DiscreteNetwork) -> str:
    """Serialize back to BIF (row form); round-trips through parse_bif."""
    out = [f"network {net.name} {{", "}"]
    for v in net.variables:
        out.append(f"variable {v.name} {{")
        out.append(
            f"  type discrete [ {v.arity} ] {{ {', '.join(v.states)} }};"
        )
        out.append("}")
    for v in net.variables:
        ps = net.parents[v.name]
        cpt = net.cpts[v.name]
        if not ps:
            vals = ", ".join(repr(float(x)) for x in cpt.values)
            out.append(f"probability ( {v.name} ) {{")
            out.append(f"  table {vals};")
            out.append("}")
            continue
        out.append(f"probability ( {v.name} | {', '.join(ps)} ) {{")
        par_vars = [net.variable(p) for p in ps]
        for idx in np.ndindex(*[p.arity for p in par_vars]):
            labels = ", ".join(p.states[i] for p, i in zip(par_vars, idx))
            col = cpt.values[(slice(None),) + idx]
            vals = ", ".join(repr(float(x)) for x in col)
            out.append(f"  ({labels}) {vals};")
        out.append("}")
    return "\n".join(out) + "\n"


# ----------------------------------------------------------------------
# Description dictionary
# ----------------------------------------------------------------------


@dataclass
class DescriptionDictionary:
    """Phrases used by the explanation templates.

    Missing entries fall back to the mechanical "<VAR> is <STATE>" form, so
    any network can be explained without a sidecar file.
    """

    node_phrases: dict[str, str] = field(default_factory=dict)
    outcome_phrases: dict[tuple[str, str], str] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def outcome_clause(self, variable: str, state: str) -> str:
        return self.outcome_phrases.get((variable, state), f"{variable} is {state}")

    def node_phrase(self, variable: str) -> str:
        return self.node_phrases.get(variable, variable)


def load_descriptions(
    text: str, network: DiscreteNetwork | None = None
) -> DescriptionDictionary:
    """Load the JSON sidecar {var: {"phrase": ..., "outcomes": {state: clause}}}."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValueError(f"description dictionary is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ValueError("description dictionary must be a JSON object")
    result = DescriptionDictionary()
    known = set(network.variable_names) if network is not None else None
    for var, entry in raw.items():
        if known is not None and var not in known:
            result.warnings.append(f"unknown variable {var!r} in descriptions")
            continue
        if not isinstance(entry, dict):
            raise ValueError(f"entry for {var!r} must be an object")
        phrase = entry.get("phrase")
        if phrase is not None:
            result.node_phrases[var] = str(phrase)
        for state, clause in entry.get("outcomes", {}).items():
            if known is not None and network is not None:
                states = network.variable(var).states
                if state not in states:
                    result.warnings.append(
                        f"unknown state {state!r} for variable {var!r} in descriptions"
                    )
                    continue
            result.outcome_phrases[(var, state)] = str(clause)
    return result


def network_summary(net: DiscreteNetwork) -> dict:
    """JSON-ready summary used by the inspect command."""
    graph = build_factor_graph(net)
    return {
        "name": net.name,
        "n_variables": len(net.variables),
        "n_parameters": sum(
            (v.arity - 1)
            * int(np.prod([net.variable(p).arity for p in net.parents[v.name]]))
            for v in net.variables
        ),
        "n_factor_graph_edges": graph.edge_count,
        "variables": [
            {
                "name": v.name,
                "states": list(v.states),
                "parents": list(net.parents[v.name]),
                "cpt_rows": int(
                    np.prod([net.variable(p).arity for p in net.parents[v.name]])
                ),
            }
            for v in net.variables
        ],
    }
