"""SLD resolution with negation as failure.

Search is depth-first, literals resolve left to right, clauses are
tried in source order, so answer order is deterministic. Negated
literals must be ground when selected (floundering is an error, not a
silent failure) and succeed exactly when the subproof yields nothing.
Two builtins: ground/1 and =/2. Budgets turn accidental
non-termination into LimitExceeded instead of a hang; subproofs spend
from the same step budget as the outer proof.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Optional, Sequence

from .terms import (
    Atom,
    Int,
    Struct,
    Substitution,
    Term,
    Var,
    is_ground,
    rename_term,
    resolve,
    term_vars,
    unify,
)


class LogicError(Exception):
    """Base class for resolution-time errors."""


class LimitExceeded(LogicError):
    def __init__(self, kind: str, limit: int):
        super().__init__(f"resolution {kind} limit exceeded ({limit})")
        self.kind = kind
        self.limit = limit


class FlounderedNegation(LogicError):
    def __init__(self, goal: Term):
        super().__init__(f"negated goal is not ground when selected: \\+ {goal}")
        self.goal = goal


class UnknownPredicate(LogicError):
    def __init__(self, functor: str, arity: int):
        super().__init__(f"unknown predicate {functor}/{arity}")
        self.functor = functor
        self.arity = arity


@dataclass(frozen=True, slots=True)
class Literal:
    term: Term
    negated: bool = False

    def __str__(self) -> str:
        if self.negated:
            return f"\\+ {self.term}"
        if isinstance(self.term, Struct) and self.term.functor == "=" and len(self.term.args) == 2:
            return f"{self.term.args[0]} = {self.term.args[1]}"
        return str(self.term)


def pos(term: Term) -> Literal:
    return Literal(term, False)


def neg(term: Term) -> Literal:
    return Literal(term, True)


@dataclass(frozen=True, slots=True)
class Clause:
    head: Term
    body: "tuple[Literal, ...]" = ()

    def __post_init__(self) -> None:
        if not isinstance(self.head, (Atom, Struct)):
            raise ValueError(f"clause head must be an atom or compound, got {self.head!r}")

    def key(self) -> "tuple[str, int]":
        if isinstance(self.head, Struct):
            return (self.head.functor, len(self.head.args))
        return (self.head.name, 0)

    def __str__(self) -> str:
        if not self.body:
            return f"{self.head}."
        return f"{self.head} :- {', '.join(str(l) for l in self.body)}."


def rename_apart(clause: Clause, ordinal: int) -> Clause:
    """Standardize a clause apart by stamping `ordinal` on every variable.

    Distinct variables in a parsed clause always have distinct names, so a
    shared ordinal keeps them distinct while guaranteeing freshness against
    every other renaming step.
    """
    head = rename_term(clause.head, ordinal)
    body = tuple(Literal(rename_term(l.term, ordinal), l.negated) for l in clause.body)
    return Clause(head, body)


class RuleBase:
    """An immutable, source-ordered program indexed by functor/arity."""

    def __init__(self, clauses: Iterable[Clause]):
        self._clauses: tuple[Clause, ...] = tuple(clauses)
        index: dict[tuple[str, int], list[Clause]] = {}
        for c in self._clauses:
            index.setdefault(c.key(), []).append(c)
        self._index = {k: tuple(v) for k, v in index.items()}

    @property
    def clauses(self) -> "tuple[Clause, ...]":
        return self._clauses

    def matching(self, key: "tuple[str, int]") -> "tuple[Clause, ...]":
        return self._index.get(key, ())

    def defines(self, key: "tuple[str, int]") -> bool:
        return key in self._index

    def __len__(self) -> int:
        return len(self._clauses)


@dataclass(frozen=True, slots=True)
class ResolutionLimits:
    max_steps: int = 100_000
    max_depth: int = 512


BUILTINS = {("ground", 1), ("=", 2)}


@dataclass
class _Budget:
    remaining: int
    limit: int = field(init=False)

    def __post_init__(self) -> None:
        self.limit = self.remaining

    def spend(self) -> None:
        if self.remaining <= 0:
            raise LimitExceeded("step", self.limit)
        self.remaining -= 1


def _goal_key(term: Term) -> "tuple[str, int]":
    if isinstance(term, Struct):
        return (term.functor, len(term.args))
    if isinstance(term, Atom):
        return (term.name, 0)
    raise LogicError(f"callable goal expected, got {term}")


def solve(
    rulebase: RuleBase,
    goal: Sequence[Literal],
    limits: Optional[ResolutionLimits] = None,
) -> Iterator[Substitution]:
    """Yield answer substitutions for `goal`, restricted to its variables.

    Lazy: answers are produced on demand in derivation order. Unbound goal
    variables are left out of an answer.
    """
    limits = limits or ResolutionLimits()
    goals = tuple(goal)
    if not goals:
        raise ValueError("empty goal")
    budget = _Budget(limits.max_steps)
    ordinals = itertools.count(1)
    goal_variables: list[Var] = []
    seen: set[Var] = set()
    for lit in goals:
        for v in term_vars(lit.term):
            if v not in seen:
                seen.add(v)
                goal_variables.append(v)
    for subst in _search(rulebase, goals, {}, 0, budget, limits.max_depth, ordinals):
        answer: Substitution = {}
        for v in goal_variables:
            value = resolve(v, subst)
            if value != v:
                answer[v] = value
        yield answer


def _search(
    rb: RuleBase,
    goals: "tuple[Literal, ...]",
    subst: Substitution,
    depth: int,
    budget: _Budget,
    max_depth: int,
    ordinals: "itertools.count[int]",
) -> Iterator[Substitution]:
    # Explicit stack; pushing alternatives in reverse keeps clause order.
    stack: list[tuple[tuple[Literal, ...], Substitution, int]] = [(goals, subst, depth)]
    while stack:
        goals, subst, depth = stack.pop()
        if not goals:
            yield subst
            continue
        budget.spend()
        lit, rest = goals[0], goals[1:]
        term = resolve(lit.term, subst)

        if lit.negated:
            if not is_ground(term):
                raise FlounderedNegation(term)
            sub = _search(rb, (Literal(term, False),), subst, depth, budget, max_depth, ordinals)
            if next(sub, None) is None:
                stack.append((rest, subst, depth))
            continue

        key = _goal_key(term)
        if key == ("=", 2):
            assert isinstance(term, Struct)
            bound = unify(term.args[0], term.args[1], subst)
            if bound is not None:
                stack.append((rest, bound, depth))
            continue
        if key == ("ground", 1):
            assert isinstance(term, Struct)
            if is_ground(term.args[0]):
                stack.append((rest, subst, depth))
            continue

        if not rb.defines(key):
            raise UnknownPredicate(*key)
        if depth + 1 > max_depth:
            raise LimitExceeded("depth", max_depth)
        alternatives: list[tuple[tuple[Literal, ...], Substitution, int]] = []
        for clause in rb.matching(key):
            renamed = rename_apart(clause, next(ordinals))
            bound = unify(term, renamed.head, subst)
            if bound is not None:
                alternatives.append((renamed.body + rest, bound, depth + 1))
        stack.extend(reversed(alternatives))


def solve_all(
    rulebase: RuleBase,
    goal: Sequence[Literal],
    limits: Optional[ResolutionLimits] = None,
) -> "list[Substitution]":
    return list(solve(rulebase, goal, limits))
