"""Formula semantics, counterfactual shifts, derived protocols, and the
implementation check."""

import random
from fractions import Fraction as F

import pytest

from conftest import make_entry, make_fig3
from kbeq.epistemic import (ALL_NONZERO, And, Bel, CF, DoMove, DoStrat, EUeq,
                            EUle, ForallEU, GuardsNotExclusive,
                            IllegalDeviation, Not, Var, counterfactual_shift,
                            derived_protocol, eqef, eqnf, holds, implements,
                            implies)
from kbeq.games import BehavioralStrategy, MixedStrategy, pure_mixed
from kbeq.systems import (Point, TrembleSpec, complete_system, make_context,
                          prior_from_mixed, tremble_prior, type_protocol)


def fig3_system(profile):
    game = make_fig3()
    ctx = make_context(game, prior_from_mixed(game, profile))
    return game, ctx, complete_system(ctx, type_protocol(game))


MIXED = {"Alice": MixedStrategy("Alice", {"T": F(1, 2), "B": F(1, 2)}),
         "Bob": MixedStrategy("Bob", {"L": F(1, 2), "R": F(1, 2)})}


def test_atomic_do_and_eu():
    game, ctx, system = fig3_system(MIXED)
    run = system.find_run(("T", "L"), ("T", "L"))
    pt = Point(run, 0)
    assert holds(system, pt, DoStrat("Alice", "T"))
    assert not holds(system, pt, DoStrat("Alice", "B"))
    assert holds(system, pt, EUeq("Alice", F(2)))
    assert holds(system, pt, EUle("Alice", F(2)))
    assert not holds(system, pt, EUle("Alice", F(3, 2)))


def test_belief_requires_truth_on_every_positive_mass_point():
    game, ctx, system = fig3_system(MIXED)
    run = system.find_run(("T", "L"), ("T", "L"))
    pt = Point(run, 0)
    # Alice of type T knows her own strategy but not Bob's
    assert holds(system, pt, Bel("Alice", DoStrat("Alice", "T")))
    assert not holds(system, pt, Bel("Alice", DoStrat("Bob", "L")))
    assert holds(system, pt, Bel("Alice", Not(DoStrat("Alice", "B"))))


def test_belief_false_when_conditioning_undefined():
    game, ctx, system = fig3_system(
        {"Alice": pure_mixed("Alice", "T"), "Bob": pure_mixed("Bob", "L")})
    run = system.find_run(("B", "R"), ("B", "R"))
    assert not holds(system, Point(run, 0), Bel("Alice", DoStrat("Alice", "B")))


def test_propositional_soundness_on_random_formulas():
    game, ctx, system = fig3_system(MIXED)
    run = system.find_run(("T", "L"), ("T", "L"))
    pt = Point(run, 0)
    rng = random.Random(140)
    atoms = [DoStrat("Alice", "T"), DoStrat("Bob", "R"),
             EUeq("Alice", F(2)), EUle("Bob", F(0))]
    for _ in range(50):
        f = rng.choice(atoms)
        g = rng.choice(atoms)
        assert holds(system, pt, Not(f)) == (not holds(system, pt, f))
        assert holds(system, pt, And((f, g))) == (
            holds(system, pt, f) and holds(system, pt, g))


def test_counterfactual_shift_preserves_opponents_and_identity():
    game, ctx, system = fig3_system(MIXED)
    run = system.find_run(("T", "L"), ("T", "L"))
    pt = Point(run, 0)
    shifted = counterfactual_shift(system, pt, "Alice", DoStrat("Alice", "B"))
    assert shifted.run.initial == ("T", "L")
    assert shifted.run.played == ("B", "L")
    same = counterfactual_shift(system, pt, "Alice", DoStrat("Alice", "T"))
    assert same == pt


def test_counterfactual_shift_rejects_unknown_strategy():
    game, ctx, system = fig3_system(MIXED)
    run = system.find_run(("T", "L"), ("T", "L"))
    with pytest.raises(IllegalDeviation):
        counterfactual_shift(system, Point(run, 0), "Alice",
                             DoStrat("Alice", "Z"))


def test_counterfactual_eu_is_deviation_payoff_under_factual_beliefs():
    game, ctx, system = fig3_system(MIXED)
    run = system.find_run(("T", "L"), ("T", "L"))
    pt = Point(run, 0)
    # against the conditioned 1/2-1/2 Bob, B also earns (4+0)/2 = 2
    assert holds(system, pt, CF(DoStrat("Alice", "B"), EUeq("Alice", F(2))))
    assert holds(system, pt, Bel("Alice", ForallEU(
        "Alice", "x", implies(EUeq("Alice", Var("x")),
                              CF(DoStrat("Alice", "B"),
                                 EUle("Alice", Var("x")))))))


def test_cf_with_impossible_move_is_vacuously_true():
    game = make_entry()
    profile = {"A": BehavioralStrategy("A", {"I_A": {"across_A": F(1)}}),
               "B": BehavioralStrategy("B", {"I_B": {"down_B": F(1)}})}
    ctx = make_context(game, tremble_prior(game, profile, TrembleSpec()))
    system = complete_system(ctx, type_protocol(game))
    run = system.find_run(("across_A", "down_B"), ("across_A", "down_B"))
    # at time 0 only A moves; any move test against B's actions is vacuous
    pt = Point(run, 0)
    assert holds(system, pt, CF(DoMove("B", "across_B"), EUeq("B", F(-99))))


def test_derived_protocol_matches_type_protocol_at_equilibrium():
    game, ctx, system = fig3_system(MIXED)
    derived = derived_protocol(eqnf(game), system, "Alice")
    by_type = {state.strategy: action for state, action in derived.items()}
    assert by_type == {"T": "T", "B": "B"}


def test_derived_protocol_prescribes_nothing_off_equilibrium():
    game, ctx, system = fig3_system(
        {"Alice": pure_mixed("Alice", "T"), "Bob": pure_mixed("Bob", "L")})
    derived = derived_protocol(eqnf(game), system, "Alice")
    by_type = {state.strategy: action for state, action in derived.items()}
    # T is not a best response to L, so no guard fires at type T
    assert by_type["T"] is None


def test_implements_verdicts_and_witness_content():
    game = make_fig3()

    def check(profile):
        ctx = make_context(game, prior_from_mixed(game, profile))
        return implements(type_protocol(game), eqnf(game), ctx)

    assert check(MIXED).ok
    assert check({"Alice": pure_mixed("Alice", "B"),
                  "Bob": pure_mixed("Bob", "L")}).ok
    verdict = check({"Alice": pure_mixed("Alice", "T"),
                     "Bob": pure_mixed("Bob", "L")})
    assert not verdict.ok
    w = verdict.witness
    assert w.player == "Alice"
    assert w.actual == "T"
    assert w.factual_eu == F(3)
    assert w.best_action == "B"
    assert w.best_eu == F(4)


def test_implements_eqef_on_entry_game():
    game = make_entry()

    def check(a, b, scope=None):
        profile = {"A": BehavioralStrategy("A", {"I_A": {a: F(1)}}),
                   "B": BehavioralStrategy("B", {"I_B": {b: F(1)}})}
        ctx = make_context(game, tremble_prior(game, profile, TrembleSpec()))
        kwargs = {"scope": scope} if scope else {}
        return implements(type_protocol(game), eqef(game), ctx,
                          mode="standard", **kwargs)

    assert check("across_A", "down_B").ok
    verdict = check("down_A", "across_B")
    assert not verdict.ok
    assert verdict.witness.player == "B"
    assert verdict.witness.local_state.stage == ("infoset", "I_B")
    # the all-nonzero scope also holds infinitesimal own-type runs to
    # rationality, so it rejects even the backward-induction profile: the
    # tremble type down_A would itself prefer across_A
    strict = check("across_A", "down_B", scope=ALL_NONZERO)
    assert not strict.ok
    assert strict.witness.player == "A"
    assert strict.witness.local_state.strategy == "down_A"
    assert not check("down_A", "across_B", scope=ALL_NONZERO).ok


def test_eqnf_guards_are_mutually_exclusive_on_corpus_systems():
    for profile in (MIXED,
                    {"Alice": pure_mixed("Alice", "B"),
                     "Bob": pure_mixed("Bob", "L")}):
        game, ctx, system = fig3_system(profile)
        for player in game.players:
            # raises GuardsNotExclusive on violation
            derived_protocol(eqnf(game), system, player)


def test_guards_not_exclusive_is_detectable():
    game, ctx, system = fig3_system(MIXED)
    program = eqnf(game)
    # a degenerate program whose guards overlap must be rejected
    true_guard = Bel("Alice", EUeq("Alice", F(2)))
    bad = type(program)({"Alice": ((true_guard, "T"), (true_guard, "B")),
                         "Bob": program.clauses["Bob"]})
    with pytest.raises(GuardsNotExclusive):
        derived_protocol(bad, system, "Alice")
