from __future__ import annotations

from collections import Counter

import pytest

from lelma.engine import solve_all
from lelma.games import (
    GameSpecError,
    IncompletePayoffsError,
    InvalidLabelMapError,
    MissingPredicateError,
    enumerate_outcomes,
    enumerate_outcomes_direct,
    game_independent_rules,
    game_to_text,
    load_game,
    parse_game,
)
from lelma.gdl import parse_goal
from lelma.terms import Atom

# Published payoff tables, reasoner = row player.
PD_TABLE = {
    ("D", "D"): (1, 1),
    ("C", "D"): (0, 5),
    ("D", "C"): (5, 0),
    ("C", "C"): (3, 3),
}
SH_TABLE = {
    ("Hare", "Hare"): (1, 1),
    ("Stag", "Hare"): (0, 3),
    ("Hare", "Stag"): (3, 0),
    ("Stag", "Stag"): (5, 5),
}
HD_TABLE = {
    ("Hawk", "Hawk"): (0, 0),
    ("Dove", "Hawk"): (1, 5),
    ("Hawk", "Dove"): (5, 1),
    ("Dove", "Dove"): (3, 3),
}


def test_bundled_payoff_tables(games):
    assert games["pd"].payoffs.entries == PD_TABLE
    assert games["sh"].payoffs.entries == SH_TABLE
    assert games["hd"].payoffs.entries == HD_TABLE


def test_bundled_metadata(games):
    assert games["pd"].move_labels == {"R": "D", "B": "C"}
    assert games["sh"].move_labels == {"R": "Hare", "B": "Stag"}
    assert games["hd"].move_labels == {"R": "Hawk", "B": "Dove"}
    for g in games.values():
        assert (g.reasoner, g.opponent) == ("p1", "p2")
        assert g.initial_situation == Atom("s0")
        assert g.payoffs.moves == (g.move_labels["R"], g.move_labels["B"])


def test_payoff_orderings(games):
    # temptation/reward/punishment/sucker orderings that type each dilemma
    def trps(g):
        defect, coop = g.move_labels["R"], g.move_labels["B"]
        t = g.payoffs.payoff(defect, coop)[0]
        r = g.payoffs.payoff(coop, coop)[0]
        p = g.payoffs.payoff(defect, defect)[0]
        s = g.payoffs.payoff(coop, defect)[0]
        return t, r, p, s

    t, r, p, s = trps(games["pd"])
    assert t > r > p > s and (t, r, p, s) == (5, 3, 1, 0)
    t, r, p, s = trps(games["sh"])
    assert r > t > p > s
    t, r, p, s = trps(games["hd"])
    assert t > r > s > p


def test_enumerate_outcomes_matches_tables(games):
    for name, table in (("pd", PD_TABLE), ("sh", SH_TABLE), ("hd", HD_TABLE)):
        outcomes = enumerate_outcomes(games[name])
        assert len(outcomes) == 4
        got = {(o.p1_move, o.p2_move): (o.p1_payoff, o.p2_payoff) for o in outcomes}
        assert got == table


def test_solver_outcomes_agree_with_direct_enumerator(games):
    for g in games.values():
        direct = enumerate_outcomes_direct(g)
        assert len(direct) == 8
        solver = enumerate_outcomes(g)
        assert Counter(o.as_tuple() for o in direct) == Counter(
            {o.as_tuple(): 2 for o in solver}
        )
        assert {str(o.situation) for o in direct} == set(
            str(a[list(a.keys())[0]])
            for a in solve_all(g.rulebase, parse_goal("game(s0,F)"))
        )


def test_each_move_pair_reached_by_exactly_two_orders(games):
    for g in games.values():
        pairs = Counter((o.p1_move, o.p2_move) for o in enumerate_outcomes_direct(g))
        assert set(pairs.values()) == {2}


def test_game_independent_rules_shape():
    rules = game_independent_rules()
    assert len(rules) == 5
    keys = Counter(c.key() for c in rules)
    assert keys == {("game", 2): 2, ("holds", 2): 3}
    assert game_independent_rules() == rules  # stable across calls


def test_round_trip_through_text(games):
    for g in games.values():
        assert parse_game(game_to_text(g)) == g


def test_load_game_by_path(tmp_path, pd):
    path = tmp_path / "copy.gdl"
    path.write_text(game_to_text(pd))
    assert load_game(str(path)) == pd


def test_load_game_unknown_name():
    with pytest.raises(GameSpecError):
        load_game("chess")


# --- validation ------------------------------------------------------------


def _game_text_without(g, predicate_line_fragment: str) -> str:
    lines = [
        line
        for line in game_to_text(g).splitlines()
        if predicate_line_fragment not in line
    ]
    return "\n".join(lines)


def test_missing_predicate_detected(pd):
    broken = _game_text_without(pd, "legal(")
    with pytest.raises(MissingPredicateError) as err:
        parse_game(broken)
    assert (err.value.functor, err.value.arity) == ("legal", 2)


def test_incomplete_payoffs_detected(pd):
    broken = _game_text_without(pd, "payoff('C','C'")
    with pytest.raises(IncompletePayoffsError) as err:
        parse_game(broken)
    assert err.value.missing == ("C", "C")


def test_duplicate_payoff_detected(pd):
    text = game_to_text(pd) + "\npayoff('D','D',9,9).\n"
    with pytest.raises(IncompletePayoffsError):
        parse_game(text)


def test_invalid_label_map_detected(pd):
    text = game_to_text(pd).replace("%! label B: 'C'", "%! label B: 'Z'")
    with pytest.raises(InvalidLabelMapError):
        parse_game(text)
    text = game_to_text(pd).replace("%! label B: 'C'", "")
    with pytest.raises(InvalidLabelMapError):
        parse_game(text)


def test_missing_name_detected(pd):
    text = game_to_text(pd).replace("%! name: pd", "")
    with pytest.raises(GameSpecError):
        parse_game(text)
