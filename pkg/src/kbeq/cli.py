"""Command-line front end.

Every subcommand prints one JSON object with `verdict`, `witness`, and
`values` fields (or a plain-text table with --format table) and exits 0 for
verified/true, 1 for refuted/false, 2 for input errors.  Output ordering is
deterministic.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from typing import Dict, Optional

from . import dsl
from .epistemic import (ALL_NONZERO, POSITIVE_MASS, Verdict, Witness, eqef,
                        eqnf, holds, implements)
from .games import (ExtensiveFormGame, NormalFormGame, expected_utility,
                    has_perfect_recall, strategic_form, validate_game)
from .numerics import format_number
from .solutions import (CorrelatedDistribution, correlated_value,
                        correlated_via_kb, check_perfect, check_sequential,
                        enumerate_nash_2p, nash_via_kb, rationalizable_set)
from .systems import (Point, TrembleSpec, complete_system, full_g0,
                      make_context, prior_from_mixed, tremble_prior,
                      type_protocol)

EXIT_TRUE = 0
EXIT_FALSE = 1
EXIT_ERROR = 2


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# serialization helpers
# ---------------------------------------------------------------------------

def _num(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return format_number(value)


def _witness_json(witness: Optional[Witness]):
    if witness is None:
        return None
    return {
        "player": witness.player,
        "local_state": witness.local_state.describe(),
        "prescribed": witness.prescribed,
        "actual": witness.actual,
        "factual_eu": _num(witness.factual_eu)
        if witness.factual_eu is not None else None,
        "best_action": witness.best_action,
        "best_eu": _num(witness.best_eu)
        if witness.best_eu is not None else None,
    }


def _profile_json(game, profile):
    out = {}
    for player in game.players:
        strat = profile[player]
        if hasattr(strat, "choices"):   # behavioral
            out[player] = {i: {a: _num(p) for a, p in sorted(dist.items())}
                           for i, dist in sorted(strat.choices.items())}
        else:
            out[player] = {s: _num(p) for s, p in sorted(strat.probs.items())
                           if p != 0}
    return out


def _emit(args, verdict, witness=None, values=None) -> int:
    payload = {"verdict": verdict, "witness": witness,
               "values": values if values is not None else {}}
    if args.format == "structured":
        print(json.dumps(payload, indent=2, sort_keys=True))
    else:
        color = os.environ.get("KBEQ_COLOR", "0") == "1"
        label = {True: "verified", False: "refuted"}.get(verdict, str(verdict))
        if color:
            code = "32" if verdict is True else "31"
            label = f"\x1b[{code}m{label}\x1b[0m"
        print(f"verdict: {label}")
        if witness:
            for key in sorted(witness):
                print(f"  witness.{key}: {witness[key]}")
        if values:
            print(json.dumps(values, indent=2, sort_keys=True))
    if verdict is True:
        return EXIT_TRUE
    if verdict is False:
        return EXIT_FALSE
    return EXIT_TRUE


# ---------------------------------------------------------------------------
# document loading and item lookup
# ---------------------------------------------------------------------------

def _load(path: str) -> dsl.BuildResult:
    try:
        text = open(path, encoding="utf-8").read()
    except OSError as err:
        raise InputError(f"cannot read {path}: {err.strerror}")
    result = dsl.parse(text)
    if result.diagnostics:
        raise InputError("; ".join(d.describe() for d in result.diagnostics))
    built = dsl.build(result.document)
    if built.diagnostics:
        raise InputError("; ".join(d.describe() for d in built.diagnostics))
    return built


def _get(built: dsl.BuildResult, name: str, kind: str):
    item = built.objects.get(name)
    if item is None:
        raise InputError(f"no item named {name!r} in the document")
    if item.kind != kind:
        raise InputError(f"{name!r} is a {item.kind}, expected a {kind}")
    return item


def _only_game(built: dsl.BuildResult, name: Optional[str]):
    if name is not None:
        return _get(built, name, "game").value
    games = [b for b in built.objects.values() if b.kind == "game"]
    if len(games) != 1:
        raise InputError("document holds several games; pass --game")
    return games[0].value


def _game_of(built: dsl.BuildResult, item_name: str, kind: str):
    item = _get(built, item_name, kind)
    return built.objects[item.game].value, item.value


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_validate(args) -> int:
    try:
        text = open(args.file, encoding="utf-8").read()
    except OSError as err:
        raise InputError(f"cannot read {args.file}: {err.strerror}")
    result = dsl.parse(text)
    diagnostics = list(result.diagnostics)
    if not diagnostics:
        built = dsl.build(result.document)
        diagnostics += built.diagnostics
        for item in result.document.items:
            if item.kind == "game" and item.name in built.objects:
                for problem in validate_game(built.objects[item.name].value):
                    diagnostics.append(dsl.Diagnostic(
                        dsl.SYNTAX, problem, item.line, item.col))
    values = {"diagnostics": [d.describe() for d in diagnostics],
              "items": sorted(i.name for i in result.document.items)}
    return _emit(args, not diagnostics, None, values)


def _cmd_info(args) -> int:
    built = _load(args.file)
    game = _only_game(built, args.game)
    if isinstance(game, NormalFormGame):
        values = {
            "name": game.name,
            "form": "normal",
            "players": list(game.players),
            "strategic_form_size": [len(game.strategies[p])
                                    for p in game.players],
        }
    else:
        sf = strategic_form(game)
        values = {
            "name": game.name,
            "form": "extensive",
            "players": list(game.players),
            "perfect_recall": has_perfect_recall(game),
            "strategic_form_size": [len(sf.strategies[p])
                                    for p in game.players],
        }
    return _emit(args, True, None, values)


def _cmd_nash(args) -> int:
    built = _load(args.file)
    if args.action == "enumerate":
        game = _only_game(built, args.game)
        if not isinstance(game, NormalFormGame):
            raise InputError("nash enumerate requires a normal-form game")
        result = enumerate_nash_2p(game)
        values = {
            "equilibria": [_profile_json(game, eq) for eq in result],
            "degenerate": result.degenerate,
        }
        return _emit(args, True, None, values)
    game, profile = _game_of(built, args.profile, "profile")
    if not isinstance(game, NormalFormGame):
        raise InputError("nash verify requires a normal-form game profile")
    verdict = nash_via_kb(game, profile)
    values = {"expected_utility": {
        p: _num(v) for p, v in zip(game.players,
                                   expected_utility(game, profile))}}
    return _emit(args, verdict.ok, _witness_json(verdict.witness), values)


def _cmd_correlated(args) -> int:
    built = _load(args.file)
    game, dist = _game_of(built, args.measure, "measure")
    verdict = correlated_via_kb(game, dist)
    values = {"expected_utility": {
        p: _num(v) for p, v in zip(game.players,
                                   correlated_value(game, dist))}}
    return _emit(args, verdict.ok, _witness_json(verdict.witness), values)


def _cmd_rationalizable(args) -> int:
    built = _load(args.file)
    game = _only_game(built, args.game)
    if not isinstance(game, NormalFormGame):
        raise InputError("rationalizable requires a normal-form game")
    mode = "independent" if args.independent else "correlated"
    survivors = rationalizable_set(game, mode)
    values = {"mode": mode,
              "survivors": {p: list(survivors[p]) for p in game.players}}
    return _emit(args, True, None, values)


def _tremble_of(built, args, game) -> TrembleSpec:
    if args.tremble is None:
        return TrembleSpec()
    tremble_game, tremble = _game_of(built, args.tremble, "tremble")
    if tremble_game is not game:
        raise InputError("tremble and profile refer to different games")
    return tremble


def _cmd_sequential(args) -> int:
    built = _load(args.file)
    game, profile = _game_of(built, args.profile, "profile")
    if not isinstance(game, ExtensiveFormGame):
        raise InputError("sequential verify requires an extensive-form game")
    result = check_sequential(game, profile, _tremble_of(built, args, game))
    values = {"beliefs": {
        infoset: {node: _num(p) for node, p in sorted(dist.items())}
        for infoset, dist in sorted(result.beliefs.beliefs.items())}}
    return _emit(args, result.ok, _witness_json(result.witness), values)


def _cmd_perfect(args) -> int:
    built = _load(args.file)
    game, profile = _game_of(built, args.profile, "profile")
    if not isinstance(game, ExtensiveFormGame):
        raise InputError("perfect verify requires an extensive-form game")
    verdict = check_perfect(game, profile, _tremble_of(built, args, game))
    return _emit(args, verdict.ok, _witness_json(verdict.witness), {})


def _context_from_prior(built, args, game):
    """A context from either a measure item or a profile item."""
    item = built.objects.get(args.prior)
    if item is None:
        raise InputError(f"no item named {args.prior!r} in the document")
    if built.objects[item.game].value is not game:
        raise InputError("prior and game items do not match")
    if item.kind == "measure":
        dist: CorrelatedDistribution = item.value
        prior = {joint: dist.prob(joint) for joint in full_g0(game)}
        return make_context(game, prior)
    if item.kind == "profile":
        if isinstance(game, NormalFormGame):
            return make_context(game, prior_from_mixed(game, item.value))
        tremble = _tremble_of(built, args, game)
        return make_context(game, tremble_prior(game, item.value, tremble))
    raise InputError(f"{args.prior!r} is a {item.kind}, expected a prior")


def _cmd_kb(args) -> int:
    built = _load(args.file)
    game = _only_game(built, args.game)
    if args.program == "eqnf":
        if not isinstance(game, NormalFormGame):
            raise InputError("eqnf applies to normal-form games")
        program = eqnf(game)
        mode = "exact"
    else:
        if not isinstance(game, ExtensiveFormGame):
            raise InputError("eqef applies to extensive-form games")
        program = eqef(game)
        mode = "standard"
    context = _context_from_prior(built, args, game)
    scope = POSITIVE_MASS if args.scope == "std" else ALL_NONZERO
    verdict = implements(type_protocol(game), program, context,
                         scope=scope, mode=mode)
    values = {"program": args.program, "scope": args.scope, "mode": mode}
    return _emit(args, verdict.ok, _witness_json(verdict.witness), values)


def _cmd_eval(args) -> int:
    built = _load(args.file)
    game = _only_game(built, args.game)
    try:
        formula = dsl.parse_formula(args.formula)
    except dsl.FormulaSyntaxError as err:
        raise InputError(f"formula: {err}")
    formula = dsl.resolve_formula(formula, game)
    context = _context_from_prior(built, args, game)
    try:
        run_part, time_part = args.at.rsplit(":", 1)
        time = int(time_part)
        initial = tuple(s.strip() for s in run_part.split(","))
    except ValueError:
        raise InputError("--at must look like 'type1,type2:time'")
    if len(initial) != len(game.players):
        raise InputError(f"--at needs one type per player "
                         f"({len(game.players)} players)")
    system = complete_system(context, type_protocol(game))
    runs = system.matching_runs(initial=initial, played=initial)
    if not runs:
        raise InputError(f"no run with initial types {initial}")
    run = runs[0]
    if not 0 <= time < len(run):
        raise InputError(f"time {time} out of range (run has {len(run)} "
                         "points)")
    mode = "standard" if args.mode == "standard" else "exact"
    truth = holds(system, Point(run, time), formula, mode)
    values = {"formula": args.formula, "at": args.at, "mode": mode}
    return _emit(args, truth, None, values)


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbeq",
        description="verify game-theoretic solution concepts through "
                    "knowledge-based programs")
    parser.add_argument("--format", choices=("structured", "table"),
                        default="structured")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="parse and cross-check a document")
    p.add_argument("file")
    p.set_defaults(handler=_cmd_validate)

    p = sub.add_parser("info", help="summarize a game")
    p.add_argument("file")
    p.add_argument("--game")
    p.set_defaults(handler=_cmd_info)

    p = sub.add_parser("nash", help="Nash equilibria")
    p.add_argument("action", choices=("verify", "enumerate"))
    p.add_argument("file")
    p.add_argument("--profile")
    p.add_argument("--game")
    p.set_defaults(handler=_cmd_nash)

    p = sub.add_parser("correlated", help="correlated equilibria")
    p.add_argument("action", choices=("verify",))
    p.add_argument("file")
    p.add_argument("--measure", required=True)
    p.set_defaults(handler=_cmd_correlated)

    p = sub.add_parser("rationalizable", help="iterated elimination")
    p.add_argument("file")
    p.add_argument("--game")
    p.add_argument("--independent", action="store_true")
    p.set_defaults(handler=_cmd_rationalizable)

    p = sub.add_parser("sequential", help="sequential equilibrium")
    p.add_argument("action", choices=("verify",))
    p.add_argument("file")
    p.add_argument("--profile", required=True)
    p.add_argument("--tremble")
    p.set_defaults(handler=_cmd_sequential)

    p = sub.add_parser("perfect", help="trembling-hand perfection")
    p.add_argument("action", choices=("verify",))
    p.add_argument("file")
    p.add_argument("--profile", required=True)
    p.add_argument("--tremble")
    p.set_defaults(handler=_cmd_perfect)

    p = sub.add_parser("kb", help="run a knowledge-based program check")
    p.add_argument("action", choices=("check",))
    p.add_argument("file")
    p.add_argument("--game")
    p.add_argument("--program", choices=("eqnf", "eqef"), required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--tremble")
    p.add_argument("--scope", choices=("std", "all"), default="std")
    p.set_defaults(handler=_cmd_kb)

    p = sub.add_parser("eval", help="evaluate a formula at a point")
    p.add_argument("file")
    p.add_argument("--game")
    p.add_argument("--formula", required=True)
    p.add_argument("--prior", required=True)
    p.add_argument("--tremble")
    p.add_argument("--at", required=True,
                   help="point selector 'type1,type2:time'")
    p.add_argument("--mode", choices=("exact", "standard"), default="exact")
    p.set_defaults(handler=_cmd_eval)

    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as err:
        return EXIT_ERROR if err.code not in (0, None) else 0
    try:
        if args.command == "nash" and args.action == "verify" \
                and args.profile is None:
            raise InputError("nash verify needs --profile")
        return args.handler(args)
    except InputError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
