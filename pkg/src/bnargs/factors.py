"""Discrete factors and the small algebra everything else is built on.

A factor is a dense table of nonnegative reals indexed by the joint states
of an ordered scope of discrete variables.  Conditional probability tables,
observations, messages and evidence updates are all factors, so the whole
library reduces to products, divisions, marginalizations and a couple of
log-odds summaries of these tables.

Factors are immutable after construction and every operation returns a new
factor, so they can be shared freely across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

__all__ = [
    "Variable",
    "Factor",
    "FactorError",
    "constant_factor",
    "indicator_factor",
    "implied_logodds",
    "factor_distance",
]


class FactorError(ValueError):
    """A factor operation was applied outside its domain."""


@dataclass(frozen=True)
class Variable:
    """A named discrete variable with an ordered list of state labels."""

    name: str
    states: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "states", tuple(self.states))
        if len(self.states) < 2:
            raise FactorError(f"variable {self.name!r} needs at least 2 states")
        if len(set(self.states)) != len(self.states):
            raise FactorError(f"variable {self.name!r} has duplicate state labels")

    @property
    def arity(self) -> int:
        return len(self.states)

    def index_of(self, state: str) -> int:
        try:
            return self.states.index(state)
        except ValueError:
            raise FactorError(
                f"variable {self.name!r} has no state {state!r} "
                f"(states: {', '.join(self.states)})"
            ) from None


class Factor:
    """Nonnegative table over the joint states of `scope` (row-major)."""

    __slots__ = ("scope", "values")

    def __init__(self, scope: Sequence[Variable], values) -> None:
        scope = tuple(scope)
        names = [v.name for v in scope]
        if len(set(names)) != len(names):
            raise FactorError(f"duplicate variable in scope: {names}")
        shape = tuple(v.arity for v in scope)
        expected = int(np.prod(shape, dtype=np.int64)) if shape else 1
        arr = np.asarray(values, dtype=np.float64)
        if arr.size != expected:
            raise FactorError(
                f"value table has {arr.size} entries, scope {names} needs {expected}"
            )
        arr = arr.reshape(shape)
        if np.any(arr < 0) or not np.all(np.isfinite(arr)):
            raise FactorError("factor values must be finite and nonnegative")
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "values", arr)

    def __setattr__(self, name, value):  # immutability guard
        raise AttributeError("Factor is immutable")

    # -- introspection -------------------------------------------------

    @property
    def variable_names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.scope)

    def variable(self, name: str) -> Variable:
        for v in self.scope:
            if v.name == name:
                return v
        raise FactorError(f"variable {name!r} not in scope {self.variable_names}")

    def __repr__(self) -> str:
        return f"Factor({self.variable_names}, {self.values.tolist()})"

    def entry(self, assignment: dict[str, str]) -> float:
        """Value at a full assignment of the scope, given as {name: state}."""
        idx = tuple(v.index_of(assignment[v.name]) for v in self.scope)
        return float(self.values[idx])

    # -- algebra -------------------------------------------------------

    def product(self, other: "Factor") -> "Factor":
        """Pointwise product over the union of both scopes."""
        axes = {v.name: i for i, v in enumerate(self.scope)}
        merged = list(self.scope)
        for v in other.scope:
            seen = axes.get(v.name)
            if seen is None:
                axes[v.name] = len(merged)
                merged.append(v)
            elif merged[seen] != v:
                raise FactorError(
                    f"variable {v.name!r} has mismatched state lists in product"
                )
        out = np.einsum(
            self.values,
            [axes[v.name] for v in self.scope],
            other.values,
            [axes[v.name] for v in other.scope],
            list(range(len(merged))),
        )
        return Factor(merged, out)

    def __mul__(self, other: "Factor") -> "Factor":
        return self.product(other)

    def divide(self, other: "Factor") -> "Factor":
        """Pointwise division with the 0/0 = 0 convention.

        Requires scope(other) to be contained in scope(self); a positive
        entry divided by zero is always a logic error and raises.
        """
        own = {v.name: v for v in self.scope}
        for v in other.scope:
            if v.name not in own:
                raise FactorError(
                    f"divisor scope {other.variable_names} not contained in "
                    f"{self.variable_names}"
                )
            if own[v.name] != v:
                raise FactorError(f"variable {v.name!r} mismatched in division")
        # align divisor axes with our scope, inserting broadcast axes
        other_names = list(other.variable_names)
        perm = [other_names.index(v.name) for v in self.scope if v.name in other_names]
        div = np.transpose(other.values, perm) if perm else other.values
        index = tuple(
            slice(None) if v.name in other_names else np.newaxis for v in self.scope
        )
        div = div[index] if self.scope else div
        div = np.broadcast_to(div, self.values.shape)
        bad = (div == 0) & (self.values > 0)
        if np.any(bad):
            where = np.argwhere(bad)[0]
            assignment = {
                v.name: v.states[i] for v, i in zip(self.scope, where)
            }
            raise FactorError(f"positive value divided by zero at {assignment}")
        out = np.divide(
            self.values,
            div,
            out=np.zeros_like(self.values),
            where=div != 0,
        )
        return Factor(self.scope, out)

    def marginalize(self, keep: Iterable[Variable | str]) -> "Factor":
        """Sum out every scope variable not in `keep` (order preserved)."""
        keep_names = {v if isinstance(v, str) else v.name for v in keep}
        unknown = keep_names - set(self.variable_names)
        if unknown:
            raise FactorError(
                f"cannot keep {sorted(unknown)}: not in scope {self.variable_names}"
            )
        drop_axes = tuple(
            i for i, v in enumerate(self.scope) if v.name not in keep_names
        )
        out = self.values.sum(axis=drop_axes) if drop_axes else self.values
        new_scope = tuple(v for v in self.scope if v.name in keep_names)
        return Factor(new_scope, out)

    def normalize(self) -> "Factor":
        """Scale so entries sum to one."""
        total = float(self.values.sum())
        if total <= 0.0:
            raise FactorError("cannot normalize an all-zero factor")
        return Factor(self.scope, self.values / total)

    def total(self) -> float:
        return float(self.values.sum())

    def allclose(self, other: "Factor", atol: float = 1e-9) -> bool:
        """Entrywise comparison after aligning the other factor's scope."""
        if set(self.variable_names) != set(other.variable_names):
            return False
        other_names = list(other.variable_names)
        perm = [other_names.index(v.name) for v in self.scope]
        return bool(
            np.allclose(self.values, np.transpose(other.values, perm), atol=atol)
        )


def constant_factor(var: Variable) -> Factor:
    """Uniform all-ones factor over a single variable."""
    return Factor((var,), np.ones(var.arity))


def indicator_factor(var: Variable, state: str) -> Factor:
    """Lopsided factor putting all mass on one observed state."""
    values = np.zeros(var.arity)
    values[var.index_of(state)] = 1.0
    return Factor((var,), values)


def implied_logodds(factor: Factor, outcome: str) -> float:
    """Log odds of `outcome` against the average of the other outcomes.

    Returns +/-inf when the outcome or the average of the rest is zero,
    and 0.0 in the doubly degenerate all-zero case.
    """
    if len(factor.scope) != 1:
        raise FactorError(
            f"implied_logodds needs a single-variable factor, got scope "
            f"{factor.variable_names}"
        )
    var = factor.scope[0]
    idx = var.index_of(outcome)
    p = float(factor.values[idx])
    rest = np.delete(factor.values, idx)
    mean_rest = float(rest.mean())
    if p > 0.0 and mean_rest > 0.0:
        return float(np.log(p / mean_rest))
    if p == 0.0 and mean_rest > 0.0:
        return float("-inf")
    if p > 0.0 and mean_rest == 0.0:
        return float("inf")
    return 0.0


def factor_distance(a: Factor, b: Factor) -> float:
    """Maximum absolute implied-logodds of the ratio a/b over outcomes.

    The ratio uses the 0/0 = 0 convention; outcomes where the ratio is zero
    are excluded, so the distance is scale-invariant on the common support.
    Zero on positive scalings of the same factor.
    """
    if len(a.scope) != 1 or len(b.scope) != 1 or a.scope[0] != b.scope[0]:
        raise FactorError(
            f"factor_distance needs matching single-variable scopes, got "
            f"{a.variable_names} and {b.variable_names}"
        )
    ratio = a.divide(b)
    support = ratio.values[ratio.values > 0]
    if support.size <= 1:
        return 0.0
    total = support.sum()
    mean_rest = (total - support) / (support.size - 1)
    return float(np.abs(np.log(support / mean_rest)).max())
