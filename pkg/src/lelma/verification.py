"""Query catalogue, evaluation, corrections, and feedback rendering.

A Query is one formal claim about a game, in one of the catalogue
kinds. Outcome claims are decided by running the resolution engine
over the full game program; every other kind is decided on the payoff
view (the 2x2 matrix seen from the reasoner's side, in prompt-label
space). Failed queries carry corrections: (role, value) pairs that,
substituted back via apply_corrections, always produce a holding
query. The wording of the correction sentences lives in an editable
resource file, resources/feedback_templates.json.

Comparisons are strict. A failed comparison between equal values is
corrected to an internal `equal` form that the translator never
produces; it exists only so corrections of ties substitute back into
something true.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib.resources import files
from typing import Optional, Sequence

from .engine import pos, solve
from .games import GameSpec
from .terms import Atom, Int, Struct, Var

Correction = "tuple[str, object]"


class VerificationError(Exception):
    """Base class for query validation/parsing failures."""


class MalformedQueryError(VerificationError):
    pass


class UnknownMoveError(VerificationError):
    def __init__(self, move: str, valid: Sequence[str]):
        super().__init__(f"unknown move label {move!r} (valid: {', '.join(valid)})")
        self.move = move


class EmptyFailureSetError(VerificationError):
    pass


class QueryKind(str, Enum):
    OUTCOME = "outcome"
    HIGHER = "higher"
    LOWER = "lower"
    EQUAL = "equal"  # internal correction target, never parsed from LLM output
    HIGHEST_POSSIBLE = "highest_possible_individual_payoff"
    LOWEST_POSSIBLE = "lowest_possible_individual_payoff"
    HIGHEST_FOR_CHOICE = "highest_individual_payoff_for_choice"
    LOWEST_FOR_CHOICE = "lowest_individual_payoff_for_choice"
    HIGHEST_GUARANTEED_CHOICE = "highest_guaranteed_payoff_choice"
    HIGHER_GUARANTEED = "higher_guaranteed_payoff"
    LOWER_GUARANTEED = "lower_guaranteed_payoff"
    HIGHEST_MUTUAL = "highest_mutual_payoff"
    LOWEST_MUTUAL = "lowest_mutual_payoff"


@dataclass(frozen=True)
class Query:
    """One formal claim; args are in template argument order."""

    kind: QueryKind
    args: "tuple[object, ...]"
    source_text: str = field(default="", compare=False)


@dataclass(frozen=True)
class QueryResult:
    query: Query
    holds: bool
    corrections: "tuple[tuple[str, object], ...]" = ()
    explanation: str = ""
    error: Optional[str] = None


@dataclass(frozen=True)
class VerificationReport:
    results: "tuple[QueryResult, ...]"

    @property
    def queries(self) -> "tuple[Query, ...]":
        return tuple(r.query for r in self.results)

    @property
    def failed(self) -> "tuple[QueryResult, ...]":
        return tuple(r for r in self.results if r.error is None and not r.holds)

    @property
    def errors(self) -> "tuple[QueryResult, ...]":
        return tuple(r for r in self.results if r.error is not None)

    @property
    def all_hold(self) -> bool:
        return all(r.holds for r in self.results if r.error is None)


# Catalogue of simple (non-outcome) templates: predicate -> (kind, arg schema).
SIMPLE_TEMPLATES: "dict[str, tuple[QueryKind, tuple[str, ...]]]" = {
    "higher": (QueryKind.HIGHER, ("int", "int")),
    "lower": (QueryKind.LOWER, ("int", "int")),
    "highest_possible_individual_payoff": (QueryKind.HIGHEST_POSSIBLE, ("int",)),
    "lowest_possible_individual_payoff": (QueryKind.LOWEST_POSSIBLE, ("int",)),
    "highest_individual_payoff_for_choice": (QueryKind.HIGHEST_FOR_CHOICE, ("int", "move")),
    "lowest_individual_payoff_for_choice": (QueryKind.LOWEST_FOR_CHOICE, ("int", "move")),
    "highest_guaranteed_payoff_choice": (QueryKind.HIGHEST_GUARANTEED_CHOICE, ("move",)),
    "higher_guaranteed_payoff": (QueryKind.HIGHER_GUARANTEED, ("move", "move")),
    "lower_guaranteed_payoff": (QueryKind.LOWER_GUARANTEED, ("move", "move")),
    "highest_mutual_payoff": (QueryKind.HIGHEST_MUTUAL, ("move", "move")),
    "lowest_mutual_payoff": (QueryKind.LOWEST_MUTUAL, ("move", "move")),
}

_OUTCOME_RE = re.compile(
    r"""finally\s*\(\s*outcome\s*\(\s*you\s*,\s*(?P<m>'?[A-Za-z][A-Za-z0-9_]*'?)\s*,
        \s*(?P<n>-?\d+)\s*,\s*them\s*,\s*(?P<o>'?[A-Za-z][A-Za-z0-9_]*'?)\s*,\s*_\s*\)
        \s*,\s*S\s*\)\s*""",
    re.IGNORECASE | re.VERBOSE,
)

_SIMPLE_RE = re.compile(r"(?P<name>[A-Za-z_][A-Za-z0-9_]*)\s*\(\s*(?P<args>[^()]*?)\s*\)\s*")


def _parse_move_label(token: str, g: GameSpec) -> str:
    label = token.strip().strip("'\"").upper()
    if label not in g.move_labels:
        raise UnknownMoveError(token.strip(), sorted(g.move_labels))
    return label


def parse_query_line(line: str, g: GameSpec) -> Query:
    """Parse one line of translator output into a Query.

    Predicate names are case-insensitive and whitespace between tokens is
    ignored; a trailing period is allowed. Raises MalformedQueryError or
    UnknownMoveError on anything outside the catalogue.
    """
    text = line.strip()
    if text.endswith("."):
        text = text[:-1].rstrip()
    if not text:
        raise MalformedQueryError("empty line")

    m = _OUTCOME_RE.fullmatch(text)
    if m:
        return Query(
            QueryKind.OUTCOME,
            (_parse_move_label(m["m"], g), int(m["n"]), _parse_move_label(m["o"], g)),
            source_text=line.strip(),
        )

    m = _SIMPLE_RE.fullmatch(text)
    if not m:
        raise MalformedQueryError(f"not a recognized query template: {line.strip()!r}")
    name = m["name"].lower()
    if name not in SIMPLE_TEMPLATES:
        raise MalformedQueryError(f"unknown query predicate {m['name']!r}")
    kind, schema = SIMPLE_TEMPLATES[name]
    raw_args = [a.strip() for a in m["args"].split(",")] if m["args"].strip() else []
    if len(raw_args) != len(schema):
        raise MalformedQueryError(
            f"{name} takes {len(schema)} argument(s), got {len(raw_args)}"
        )
    args: list[object] = []
    for raw, want in zip(raw_args, schema):
        if want == "int":
            if not re.fullmatch(r"-?\d+", raw):
                raise MalformedQueryError(f"{name}: expected an integer, got {raw!r}")
            args.append(int(raw))
        else:
            args.append(_parse_move_label(raw, g))
    return Query(kind, tuple(args), source_text=line.strip())


def query_to_text(q: Query) -> str:
    """Canonical template text for a query; parse_query_line inverts it."""
    if q.kind is QueryKind.OUTCOME:
        m, n, o = q.args
        return f"finally(outcome(you,{m},{n},them,{o},_),S)"
    return f"{q.kind.value}({', '.join(str(a) for a in q.args)})"


# Payoff view helpers. All take and return prompt labels, reasoner = row.


def _labels(g: GameSpec) -> "tuple[str, ...]":
    return g.labels_in_move_order


def reasoner_payoff(g: GameSpec, own: str, other: str) -> int:
    u1, _ = g.payoffs.payoff(g.move_for_label(own), g.move_for_label(other))
    return u1


def guaranteed_payoff(g: GameSpec, own: str) -> int:
    """Worst-case (maximin component) payoff for committing to `own`."""
    return min(reasoner_payoff(g, own, other) for other in _labels(g))


def best_payoff_for_choice(g: GameSpec, own: str) -> int:
    return max(reasoner_payoff(g, own, other) for other in _labels(g))


def mutual_payoff(g: GameSpec, own: str, other: str) -> int:
    u1, u2 = g.payoffs.payoff(g.move_for_label(own), g.move_for_label(other))
    return u1 + u2


def _all_reasoner_payoffs(g: GameSpec) -> "list[int]":
    return [reasoner_payoff(g, a, b) for a in _labels(g) for b in _labels(g)]


def _label_pairs(g: GameSpec) -> "list[tuple[str, str]]":
    return [(a, b) for a in _labels(g) for b in _labels(g)]


def _validate(q: Query, g: GameSpec) -> None:
    schema_by_kind = {kind: schema for _, (kind, schema) in SIMPLE_TEMPLATES.items()}
    schema_by_kind[QueryKind.OUTCOME] = ("move", "int", "move")
    schema_by_kind[QueryKind.EQUAL] = ("int", "int")
    schema = schema_by_kind.get(q.kind)
    if schema is None or len(q.args) != len(schema):
        raise MalformedQueryError(f"bad arity for {q.kind.value}: {q.args}")
    for arg, want in zip(q.args, schema):
        if want == "int" and not isinstance(arg, int):
            raise MalformedQueryError(f"{q.kind.value}: expected int, got {arg!r}")
        if want == "move":
            if not isinstance(arg, str):
                raise MalformedQueryError(f"{q.kind.value}: expected move label, got {arg!r}")
            if arg not in g.move_labels:
                raise UnknownMoveError(arg, sorted(g.move_labels))


def _outcome_holds(g: GameSpec, own: str, n: int, other: str) -> bool:
    # Dispatched through the engine over the full game program, not the
    # payoff view: this is the route the published worked query takes.
    situation = Var("S")
    outcome = Struct(
        "outcome",
        (
            Atom(g.reasoner),
            Atom(g.move_for_label(own)),
            Int(n),
            Atom(g.opponent),
            Atom(g.move_for_label(other)),
            Var("U2"),
        ),
    )
    goal = (
        pos(Struct("game", (g.initial_situation, situation))),
        pos(Struct("finally", (outcome, situation))),
    )
    return next(solve(g.rulebase, goal), None) is not None


def evaluate_query(q: Query, g: GameSpec) -> QueryResult:
    """Decide one query against the game and build corrections on failure."""
    _validate(q, g)
    kind = q.kind

    if kind is QueryKind.OUTCOME:
        own, n, other = q.args
        if _outcome_holds(g, own, n, other):
            return _holding(q)
        correct = reasoner_payoff(g, own, other)
        return _failing(q, g, (("payoff", correct),))

    if kind in (QueryKind.HIGHER, QueryKind.LOWER, QueryKind.EQUAL):
        a, b = q.args
        holds = {
            QueryKind.HIGHER: a > b,
            QueryKind.LOWER: a < b,
            QueryKind.EQUAL: a == b,
        }[kind]
        if holds:
            return _holding(q)
        true_relation = "higher" if a > b else ("lower" if a < b else "equal")
        return _failing(q, g, (("relation", true_relation),))

    if kind in (QueryKind.HIGHEST_POSSIBLE, QueryKind.LOWEST_POSSIBLE):
        (n,) = q.args
        payoffs = _all_reasoner_payoffs(g)
        correct = max(payoffs) if kind is QueryKind.HIGHEST_POSSIBLE else min(payoffs)
        if n == correct:
            return _holding(q)
        return _failing(q, g, (("payoff", correct),))

    if kind in (QueryKind.HIGHEST_FOR_CHOICE, QueryKind.LOWEST_FOR_CHOICE):
        n, move = q.args
        correct = (
            best_payoff_for_choice(g, move)
            if kind is QueryKind.HIGHEST_FOR_CHOICE
            else guaranteed_payoff(g, move)
        )
        if n == correct:
            return _holding(q)
        return _failing(q, g, (("payoff", correct),))

    if kind is QueryKind.HIGHEST_GUARANTEED_CHOICE:
        (move,) = q.args
        best = max(guaranteed_payoff(g, l) for l in _labels(g))
        winners = tuple(l for l in _labels(g) if guaranteed_payoff(g, l) == best)
        if move in winners:
            return _holding(q)
        return _failing(q, g, tuple(("choice", w) for w in winners))

    if kind in (QueryKind.HIGHER_GUARANTEED, QueryKind.LOWER_GUARANTEED):
        m1, m2 = q.args
        g1, g2 = guaranteed_payoff(g, m1), guaranteed_payoff(g, m2)
        holds = g1 > g2 if kind is QueryKind.HIGHER_GUARANTEED else g1 < g2
        if holds:
            return _holding(q)
        if g1 == g2:
            return _failing(q, g, (("relation", "equal"), ("payoff", g1)))
        true_relation = "higher" if g1 > g2 else "lower"
        return _failing(q, g, (("relation", true_relation),))

    if kind in (QueryKind.HIGHEST_MUTUAL, QueryKind.LOWEST_MUTUAL):
        m1, m2 = q.args
        sums = {pair: mutual_payoff(g, *pair) for pair in _label_pairs(g)}
        target = max(sums.values()) if kind is QueryKind.HIGHEST_MUTUAL else min(sums.values())
        winners = tuple(pair for pair in _label_pairs(g) if sums[pair] == target)
        if sums[(m1, m2)] == target:
            return _holding(q)
        return _failing(q, g, tuple(("choices", pair) for pair in winners))

    raise MalformedQueryError(f"unhandled query kind {kind!r}")


def _holding(q: Query) -> QueryResult:
    return QueryResult(q, True, (), f"Confirmed: {query_to_text(q)}")


def _failing(q: Query, g: GameSpec, corrections: "tuple[tuple[str, object], ...]") -> QueryResult:
    assert corrections, "a failed query must carry corrections"
    return QueryResult(q, False, corrections, _render_failure(q, corrections, g))


def apply_corrections(q: Query, corrections: "tuple[tuple[str, object], ...]") -> Query:
    """Substitute a failed query's corrections back in, yielding a true claim."""
    roles = dict(corrections)  # first entry wins below where order matters
    kind = q.kind
    if kind is QueryKind.OUTCOME:
        own, _, other = q.args
        return Query(kind, (own, roles["payoff"], other))
    if kind in (QueryKind.HIGHER, QueryKind.LOWER, QueryKind.EQUAL):
        target = {
            "higher": QueryKind.HIGHER,
            "lower": QueryKind.LOWER,
            "equal": QueryKind.EQUAL,
        }[str(roles["relation"])]
        return Query(target, q.args)
    if kind in (
        QueryKind.HIGHEST_POSSIBLE,
        QueryKind.LOWEST_POSSIBLE,
    ):
        return Query(kind, (roles["payoff"],))
    if kind in (QueryKind.HIGHEST_FOR_CHOICE, QueryKind.LOWEST_FOR_CHOICE):
        _, move = q.args
        return Query(kind, (roles["payoff"], move))
    if kind is QueryKind.HIGHEST_GUARANTEED_CHOICE:
        first_choice = next(v for r, v in corrections if r == "choice")
        return Query(kind, (first_choice,))
    if kind in (QueryKind.HIGHER_GUARANTEED, QueryKind.LOWER_GUARANTEED):
        relation = str(roles["relation"])
        if relation == "equal":
            v = roles["payoff"]
            return Query(QueryKind.EQUAL, (v, v))
        target = (
            QueryKind.HIGHER_GUARANTEED if relation == "higher" else QueryKind.LOWER_GUARANTEED
        )
        return Query(target, q.args)
    if kind in (QueryKind.HIGHEST_MUTUAL, QueryKind.LOWEST_MUTUAL):
        pair = next(v for r, v in corrections if r == "choices")
        assert isinstance(pair, tuple)
        return Query(kind, pair)
    raise ValueError(f"cannot apply corrections to {kind!r}")


_TEMPLATES_CACHE: "dict[str, str] | None" = None


def feedback_templates() -> "dict[str, str]":
    global _TEMPLATES_CACHE
    if _TEMPLATES_CACHE is None:
        raw = files("lelma").joinpath("resources", "feedback_templates.json").read_text()
        _TEMPLATES_CACHE = json.loads(raw)
    return _TEMPLATES_CACHE


def _render_failure(
    q: Query, corrections: "tuple[tuple[str, object], ...]", g: GameSpec
) -> str:
    templates = feedback_templates()
    roles = dict(corrections)
    kind = q.kind
    if kind is QueryKind.OUTCOME:
        own, n, other = q.args
        return templates["outcome"].format(
            reasoner_move=own, opponent_move=other, claimed=n, correct=roles["payoff"]
        )
    if kind in (QueryKind.HIGHER, QueryKind.LOWER, QueryKind.EQUAL):
        a, b = q.args
        return templates[f"{kind.value}.{roles['relation']}"].format(a=a, b=b)
    if kind in (QueryKind.HIGHEST_POSSIBLE, QueryKind.LOWEST_POSSIBLE):
        (n,) = q.args
        return templates[kind.value].format(claimed=n, correct=roles["payoff"])
    if kind in (QueryKind.HIGHEST_FOR_CHOICE, QueryKind.LOWEST_FOR_CHOICE):
        n, move = q.args
        return templates[kind.value].format(claimed=n, correct=roles["payoff"], move=move)
    if kind is QueryKind.HIGHEST_GUARANTEED_CHOICE:
        (move,) = q.args
        winner = next(v for r, v in corrections if r == "choice")
        return templates[kind.value].format(
            claimed=move,
            claimed_value=guaranteed_payoff(g, move),
            correct=winner,
            correct_value=guaranteed_payoff(g, str(winner)),
        )
    if kind in (QueryKind.HIGHER_GUARANTEED, QueryKind.LOWER_GUARANTEED):
        m1, m2 = q.args
        g1, g2 = guaranteed_payoff(g, m1), guaranteed_payoff(g, m2)
        variant = roles["relation"]
        if variant == "equal":
            return templates[f"{kind.value}.equal"].format(m1=m1, m2=m2, g1=g1, g2=g2)
        return templates[f"{kind.value}.{variant}"].format(m1=m1, m2=m2, g1=g1, g2=g2)
    if kind in (QueryKind.HIGHEST_MUTUAL, QueryKind.LOWEST_MUTUAL):
        m1, m2 = q.args
        pairs = [v for r, v in corrections if r == "choices"]
        best = mutual_payoff(g, *pairs[0])  # type: ignore[misc]
        rendered = ", ".join(f"({a}, {b})" for a, b in pairs)  # type: ignore[misc]
        return templates[kind.value].format(
            m1=m1, m2=m2, got=mutual_payoff(g, m1, m2), best=best, pairs=rendered
        )
    raise ValueError(f"no failure template for {kind!r}")


def evaluate_all(queries: Sequence[Query], g: GameSpec) -> VerificationReport:
    """Evaluate a batch; per-query errors are captured, never raised."""
    results = []
    for q in queries:
        try:
            results.append(evaluate_query(q, g))
        except VerificationError as exc:
            results.append(
                QueryResult(q, False, (), f"Could not verify: {exc}", error=str(exc))
            )
    return VerificationReport(tuple(results))


def render_feedback(report: VerificationReport, g: GameSpec) -> str:
    """The correction sentences for a report's failed queries, one per line."""
    if not report.failed:
        raise EmptyFailureSetError("no failed queries to render feedback for")
    return "\n".join(r.explanation for r in report.failed)
