"""Acceptance gate: eleven exact-value and oracle-equivalence criteria.

Each test prints exactly one `criterion NN: PASS|FAIL` line (visible with
`pytest -s` or in failure output) and asserts the same condition.
"""

import json
import random
from fractions import Fraction as F

from conftest import (NORMAL_CORPUS, make_dominance3x3, make_entry,
                      make_fig3, make_forgetful, make_mp, make_pd)
from kbeq.cli import main as cli_main
from kbeq.epistemic import eqnf, implements
from kbeq.games import (expected_utility, has_perfect_recall, strategic_form)
from kbeq.numerics import (EPS, ONE, ZERO, compare, is_zero, lp_feasible,
                           standard_part)
from kbeq.solutions import (CorrelatedDistribution, check_perfect,
                            check_sequential, correlated_value,
                            correlated_via_kb, enumerate_nash_2p,
                            induced_mixed_profile, is_correlated, is_nash,
                            nash_via_kb, rationalizable_set,
                            rationalizable_via_kb)
from kbeq.systems import type_protocol
from test_numerics import _lp_corpus, random_eps, vertex_feasible
from test_solutions import (entry_profile, one_shot_deviation_ok,
                            random_distributions, random_profiles)


def _report(n: int, ok: bool):
    print(f"criterion {n:02d}: {'PASS' if ok else 'FAIL'}")
    assert ok, f"criterion {n:02d} failed"


def test_criterion_01_fig3_equilibria_and_mixed_value():
    fig3 = make_fig3()
    result = enumerate_nash_2p(fig3)
    ok = len(result) == 3 and not result.degenerate
    mixed = [eq for eq in result if len(eq["Alice"].support()) == 2]
    ok = ok and len(mixed) == 1
    ok = ok and expected_utility(fig3, mixed[0]) == (F(2), F(2))
    _report(1, ok)


def test_criterion_02_correlated_value_8_3():
    fig3 = make_fig3()
    d = CorrelatedDistribution({("T", "L"): F(1, 3), ("T", "R"): F(1, 3),
                                ("B", "L"): F(1, 3)})
    ok = correlated_via_kb(fig3, d).ok
    ok = ok and correlated_value(fig3, d) == (F(8, 3), F(8, 3))
    ok = ok and not correlated_via_kb(
        fig3, CorrelatedDistribution({("T", "L"): F(1)})).ok
    _report(2, ok)


def test_criterion_03_nash_pipeline_equivalence():
    ok = len(NORMAL_CORPUS) >= 5
    for make in NORMAL_CORPUS:
        game = make()
        candidates = list(enumerate_nash_2p(game))
        candidates += random_profiles(
            game, 10, seed=sum(ord(c) for c in game.name))
        for profile in candidates:
            ok = ok and (nash_via_kb(game, profile).ok
                         == is_nash(game, profile))
    _report(3, ok)


def test_criterion_04_correlated_pipeline_equivalence():
    ok = True
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
            ok = ok and (correlated_via_kb(game, dist).ok
                         == is_correlated(game, dist))
    _report(4, ok)


def test_criterion_05_rationalizability_sets_and_witnesses():
    ok = rationalizable_set(make_pd()) == {"P1": ("D",), "P2": ("D",)}
    ok = ok and rationalizable_set(make_mp()) == {"P1": ("H", "T"),
                                                  "P2": ("H", "T")}
    ok = ok and rationalizable_set(make_fig3()) == {"Alice": ("T", "B"),
                                                    "Bob": ("L", "R")}
    # D survives round one but falls in round two, after R is eliminated
    ok = ok and rationalizable_set(make_dominance3x3()) == {
        "Row": ("U", "M"), "Col": ("L", "C")}
    for make in (make_pd, make_fig3, make_dominance3x3):
        game = make()
        survivors = rationalizable_set(game)
        for player in game.players:
            for s in game.strategies[player]:
                witness = rationalizable_via_kb(game, player, s)
                if s in survivors[player]:
                    ok = ok and witness is not None
                    ok = ok and implements(type_protocol(game), eqnf(game),
                                           witness).ok
                else:
                    ok = ok and witness is None
    _report(5, ok)


def test_criterion_06_entry_game_sequential_verdicts():
    game = make_entry()
    sf = strategic_form(game)

    threat = entry_profile("down_A", "across_B")
    ok = is_nash(sf, induced_mixed_profile(game, threat))
    bad = check_sequential(game, threat)
    ok = ok and not bad.ok
    ok = ok and bad.witness.local_state.stage == ("infoset", "I_B")
    ok = ok and not one_shot_deviation_ok(game, threat, bad.beliefs)

    good_profile = entry_profile("across_A", "down_B")
    good = check_sequential(game, good_profile)
    ok = ok and good.ok and check_perfect(game, good_profile).ok
    ok = ok and one_shot_deviation_ok(game, good_profile, good.beliefs)
    ok = ok and good.beliefs.at("I_B") == {"nodeB": F(1)}
    _report(6, ok)


def test_criterion_07_perfect_recall_reports():
    ok = has_perfect_recall(make_forgetful()) == {"P": False}
    ok = ok and has_perfect_recall(make_entry()) == {"A": True, "B": True}
    _report(7, ok)


def test_criterion_08_nonstandard_field_properties():
    ok = ZERO < EPS < F(1, 10 ** 9)
    rng = random.Random(811235)
    for _ in range(200):
        a, b, c = (random_eps(rng) for _ in range(3))
        ok = ok and a + b == b + a and a * b == b * a
        ok = ok and (a + b) + c == a + (b + c)
        ok = ok and (a * b) * c == a * (b * c)
        ok = ok and a * (b + c) == a * b + a * c
        ok = ok and a + (-a) == ZERO and a * ONE == a
        if not is_zero(a):
            ok = ok and compare(a * (ONE / a), ONE) == 0
        if a < b and c > ZERO:
            ok = ok and a + c < b + c and a * c < b * c
        if a.is_finite and b.is_finite:
            ok = ok and standard_part(a + b) == \
                standard_part(a) + standard_part(b)
            ok = ok and standard_part(a * b) == \
                standard_part(a) * standard_part(b)
    _report(8, ok)


def test_criterion_09_lp_vs_vertex_enumeration():
    corpus = _lp_corpus()
    ok = len(corpus) >= 20
    for system in corpus:
        witness = lp_feasible(system)
        ok = ok and (witness is not None) == vertex_feasible(system)
        if witness is not None:
            ok = ok and system.satisfies(witness)
    _report(9, ok)


def test_criterion_10_dsl_round_trip_and_diagnostics(corpus_dir):
    from test_dsl import GOOD_FILES, MALFORMED
    from kbeq import dsl
    ok = len(GOOD_FILES) >= 6 and len(MALFORMED) >= 5
    for name in GOOD_FILES:
        first = dsl.parse((corpus_dir / name).read_text())
        second = dsl.parse(dsl.render(first.document))
        ok = ok and first.ok and second.ok \
            and second.document == first.document
    for name, (code, line) in MALFORMED.items():
        result = dsl.parse((corpus_dir / name).read_text())
        diagnostics = list(result.diagnostics) \
            or list(dsl.build(result.document).diagnostics)
        ok = ok and any(d.code == code and d.line == line
                        for d in diagnostics)
    _report(10, ok)


def test_criterion_11_cli_matrix(corpus_dir, capsys):
    from test_cli import MATRIX
    ok = len(MATRIX) >= 12
    for expected, argv in MATRIX:
        code = cli_main(argv(corpus_dir))
        out = capsys.readouterr().out
        payload = json.loads(out)
        ok = ok and code == expected
        ok = ok and set(payload) == {"verdict", "witness", "values"}
    code = cli_main(["nash", "verify", "/no/such/file.kbeq",
                     "--profile", "x"])
    capsys.readouterr()
    ok = ok and code == 2
    _report(11, ok)
