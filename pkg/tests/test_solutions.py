"""Direct verifiers, kb-pipeline equivalences, and cross-concept properties."""

import itertools
import random
from fractions import Fraction as F

import pytest

from conftest import (NORMAL_CORPUS, make_dominance3x3, make_entry,
                      make_fig3, make_forgetful, make_mp, make_pd)
from kbeq.epistemic import eqnf, implements
from kbeq.games import (BehavioralStrategy, MixedStrategy, pure_mixed,
                        strategic_form)
from kbeq.solutions import (CorrelatedDistribution, NashEnumeration,
                            check_perfect, check_sequential, correlated_value,
                            correlated_via_kb, enumerate_nash_2p,
                            induced_mixed_profile, is_correlated, is_nash,
                            nash_via_kb, rationalizable_set,
                            rationalizable_via_kb)
from kbeq.systems import TrembleSpec, type_protocol


def random_mixed(rng, player, strategies):
    weights = [rng.randint(0, 4) for _ in strategies]
    if sum(weights) == 0:
        weights[rng.randrange(len(weights))] = 1
    total = sum(weights)
    return MixedStrategy(player, {s: F(w, total)
                                  for s, w in zip(strategies, weights) if w})


def random_profiles(game, count, seed):
    rng = random.Random(seed)
    return [{p: random_mixed(rng, p, game.strategies[p])
             for p in game.players} for _ in range(count)]


def random_distributions(game, count, seed):
    rng = random.Random(seed)
    joints = list(game.joint_strategies())
    out = []
    for _ in range(count):
        weights = [rng.randint(0, 3) for _ in joints]
        if sum(weights) == 0:
            weights[rng.randrange(len(weights))] = 1
        total = sum(weights)
        out.append(CorrelatedDistribution(
            {j: F(w, total) for j, w in zip(joints, weights) if w}))
    return out


# ---------------------------------------------------------------------------
# Nash
# ---------------------------------------------------------------------------

def test_is_nash_fig3_values():
    fig3 = make_fig3()
    mixed = {"Alice": MixedStrategy("Alice", {"T": F(1, 2), "B": F(1, 2)}),
             "Bob": MixedStrategy("Bob", {"L": F(1, 2), "R": F(1, 2)})}
    assert is_nash(fig3, mixed)
    assert not is_nash(fig3, {"Alice": pure_mixed("Alice", "T"),
                              "Bob": pure_mixed("Bob", "L")})


def test_enumerate_nash_fig3_pd_mp():
    fig3 = make_fig3()
    result = enumerate_nash_2p(fig3)
    assert not result.degenerate
    profiles = {(tuple(sorted(eq["Alice"].probs.items())),
                 tuple(sorted(eq["Bob"].probs.items())))
                for eq in result}
    assert profiles == {
        ((("B", F(1)),), (("L", F(1)),)),
        ((("T", F(1)),), (("R", F(1)),)),
        ((("B", F(1, 2)), ("T", F(1, 2))), (("L", F(1, 2)), ("R", F(1, 2)))),
    }
    pd = enumerate_nash_2p(make_pd())
    assert len(pd) == 1 and pd.equilibria[0]["P1"].prob("D") == 1
    mp = enumerate_nash_2p(make_mp())
    assert len(mp) == 1
    assert mp.equilibria[0]["P1"].probs == {"H": F(1, 2), "T": F(1, 2)}


def test_enumerated_equilibria_pass_is_nash_everywhere():
    for make in NORMAL_CORPUS:
        game = make()
        for eq in enumerate_nash_2p(game):
            assert is_nash(game, eq), game.name


def test_degenerate_game_sets_flag():
    from kbeq.games import NormalFormGame
    flat = NormalFormGame(
        ("A", "B"), {"A": ("x", "y"), "B": ("u", "v")},
        {("x", "u"): (F(1), F(1)), ("x", "v"): (F(1), F(1)),
         ("y", "u"): (F(1), F(1)), ("y", "v"): (F(1), F(1))}, "flat")
    result = enumerate_nash_2p(flat)
    assert result.degenerate
    assert len(result) >= 1


def test_nash_kb_pipeline_matches_direct_oracle():
    for make in NORMAL_CORPUS:
        game = make()
        candidates = list(enumerate_nash_2p(game))
        candidates += random_profiles(
            game, 10, seed=sum(ord(c) for c in game.name))
        for profile in candidates:
            assert nash_via_kb(game, profile).ok == is_nash(game, profile), \
                (game.name, {p: profile[p].probs for p in game.players})


# ---------------------------------------------------------------------------
# correlated
# ---------------------------------------------------------------------------

def test_three_cell_uniform_is_correlated_with_value_8_3():
    fig3 = make_fig3()
    d = CorrelatedDistribution({("T", "L"): F(1, 3), ("T", "R"): F(1, 3),
                                ("B", "L"): F(1, 3)})
    assert is_correlated(fig3, d)
    assert correlated_value(fig3, d) == (F(8, 3), F(8, 3))
    assert not is_correlated(fig3, CorrelatedDistribution({("T", "L"): F(1)}))


def test_correlated_kb_pipeline_matches_direct_oracle():
    for make in NORMAL_CORPUS:
        game = make()
        tested = random_distributions(game, 10, seed=len(game.name) * 7717)
        for eq in enumerate_nash_2p(game):
            product = {}
            for joint in game.joint_strategies():
                mass = F(1)
                for p, s in zip(game.players, joint):
                    mass *= eq[p].prob(s)
                if mass:
                    product[joint] = mass
            tested.append(CorrelatedDistribution(product))
        for dist in tested:
            assert correlated_via_kb(game, dist).ok == \
                is_correlated(game, dist), game.name


def test_nash_product_measures_are_correlated():
    for make in NORMAL_CORPUS:
        game = make()
        for eq in enumerate_nash_2p(game):
            product = {}
            for joint in game.joint_strategies():
                mass = F(1)
                for p, s in zip(game.players, joint):
                    mass *= eq[p].prob(s)
                if mass:
                    product[joint] = mass
            assert is_correlated(game, CorrelatedDistribution(product))


# ---------------------------------------------------------------------------
# rationalizability
# ---------------------------------------------------------------------------

def test_rationalizable_sets_on_corpus():
    assert rationalizable_set(make_pd()) == {"P1": ("D",), "P2": ("D",)}
    assert rationalizable_set(make_mp()) == {"P1": ("H", "T"),
                                             "P2": ("H", "T")}
    assert rationalizable_set(make_fig3()) == {"Alice": ("T", "B"),
                                               "Bob": ("L", "R")}
    # R falls in round one (dominated), D only becomes dominated afterwards
    assert rationalizable_set(make_dominance3x3()) == {"Row": ("U", "M"),
                                                       "Col": ("L", "C")}


def test_independent_mode_matches_correlated_for_two_players():
    for make in NORMAL_CORPUS + (make_dominance3x3,):
        game = make()
        assert rationalizable_set(game, "independent") == \
            rationalizable_set(game, "correlated")


def test_nash_support_is_rationalizable():
    for make in NORMAL_CORPUS:
        game = make()
        survivors = rationalizable_set(game)
        for eq in enumerate_nash_2p(game):
            for p in game.players:
                assert set(eq[p].support()) <= set(survivors[p])


def test_rationalizable_witness_iff_surviving():
    for make in (make_pd, make_fig3, make_dominance3x3):
        game = make()
        survivors = rationalizable_set(game)
        for player in game.players:
            for s in game.strategies[player]:
                witness = rationalizable_via_kb(game, player, s)
                if s in survivors[player]:
                    assert witness is not None, (game.name, player, s)
                    # the witness context must itself pass the program check
                    assert implements(type_protocol(game), eqnf(game),
                                      witness).ok
                    assert any(state[game.player_index(player)] == s
                               for state in witness.g0)
                else:
                    assert witness is None, (game.name, player, s)


# ---------------------------------------------------------------------------
# sequential / perfect
# ---------------------------------------------------------------------------

def entry_profile(a, b):
    return {"A": BehavioralStrategy("A", {"I_A": {a: F(1)}}),
            "B": BehavioralStrategy("B", {"I_B": {b: F(1)}})}


def one_shot_deviation_ok(game, profile, beliefs):
    """Independent oracle: at every information set, the prescribed action
    maximizes expected utility given the beliefs and continuation play."""
    def value(node_id, player):
        node = game.nodes[node_id]
        kind = type(node).__name__
        if kind == "Leaf":
            return node.payoffs[game.player_index(player)]
        if kind == "Chance":
            return sum(p * value(child, player) for child, p in node.dist)
        return sum(profile[node.player].prob(node.infoset, a)
                   * value(child, player)
                   for a, child in node.actions)

    for infoset, (player, nodes) in game.infosets().items():
        dist = beliefs.at(infoset)
        actions = game.infoset_actions(infoset)
        played = [a for a in actions
                  if profile[player].prob(infoset, a) > 0]
        action_value = {
            a: sum(dist[h] * value(dict(game.nodes[h].actions)[a], player)
                   for h in nodes)
            for a in actions}
        best = max(action_value.values())
        if any(action_value[a] != best for a in played):
            return False
    return True


def test_entry_game_sequential_verdicts_and_beliefs():
    game = make_entry()
    good = check_sequential(game, entry_profile("across_A", "down_B"))
    assert good.ok
    assert good.beliefs.at("I_B") == {"nodeB": F(1)}
    assert good.beliefs.at("I_A") == {"rootA": F(1)}

    bad = check_sequential(game, entry_profile("down_A", "across_B"))
    assert not bad.ok
    assert bad.witness.local_state.stage == ("infoset", "I_B")
    # ... even though the same profile is Nash on the strategic form
    sf = strategic_form(game)
    assert is_nash(sf, induced_mixed_profile(
        game, entry_profile("down_A", "across_B")))


def test_one_shot_deviation_oracle_agrees_on_entry_game():
    game = make_entry()
    for a, b in itertools.product(("down_A", "across_A"),
                                  ("down_B", "across_B")):
        profile = entry_profile(a, b)
        result = check_sequential(game, profile)
        assert result.ok == one_shot_deviation_ok(game, profile,
                                                  result.beliefs), (a, b)


def test_perfect_verdicts_and_implication():
    game = make_entry()
    for a, b in itertools.product(("down_A", "across_A"),
                                  ("down_B", "across_B")):
        profile = entry_profile(a, b)
        if check_perfect(game, profile).ok:
            assert check_sequential(game, profile).ok, (a, b)
    assert check_perfect(game, entry_profile("across_A", "down_B")).ok
    assert not check_perfect(game, entry_profile("down_A", "across_B")).ok


def test_sequential_accepts_imply_nash_on_strategic_form():
    game = make_entry()
    sf = strategic_form(game)
    for a, b in itertools.product(("down_A", "across_A"),
                                  ("down_B", "across_B")):
        profile = entry_profile(a, b)
        if check_sequential(game, profile).ok:
            assert is_nash(sf, induced_mixed_profile(game, profile))


def test_sequential_rejects_imperfect_recall():
    game = make_forgetful()
    profile = {"P": BehavioralStrategy(
        "P", {"I1": {"S": F(1)}, "I2": {"S": F(1)}, "X": {"L": F(1)}})}
    with pytest.raises(ValueError):
        check_sequential(game, profile)


def test_single_player_single_node_optimal_move():
    from kbeq.games import Decision, ExtensiveFormGame, Leaf
    nodes = {"r": Decision("P", "I", (("good", "g"), ("bad", "b"))),
             "g": Leaf((F(1),)), "b": Leaf((F(0),))}
    game = ExtensiveFormGame(players=("P",), nodes=nodes, root="r",
                             name="oneshot")
    good = {"P": BehavioralStrategy("P", {"I": {"good": F(1)}})}
    bad = {"P": BehavioralStrategy("P", {"I": {"bad": F(1)}})}
    assert check_sequential(game, good).ok
    assert not check_sequential(game, bad).ok
    assert check_perfect(game, good).ok
