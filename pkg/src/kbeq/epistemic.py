"""Belief/counterfactual formulas, the two guarded-action programs, and the
de facto implementation checker.

Guards are belief-rooted, so their truth value depends only on the owning
player's local state; the derived-protocol construction verifies this rather
than assuming it.  Counterfactual tests are evaluated in complete systems,
where the closest deviation point always exists.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Optional, Tuple, Union

from .games import ExtensiveFormGame, NormalFormGame
from .numerics import EpsNum, Number, compare, is_zero, standard_part
from .systems import (SKIP, Context, JointProtocol, LocalState, Point, System,
                      UndefinedExpectation, complete_system, generate_system,
                      legal_actions, point_eu)

# ---------------------------------------------------------------------------
# formulas
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Var:
    name: str


Value = Union[Fraction, EpsNum, Var]


@dataclass(frozen=True)
class Bel:
    player: str
    body: "Formula"


@dataclass(frozen=True)
class DoStrat:
    player: str
    strategy: str


@dataclass(frozen=True)
class DoMove:
    player: str
    action: str


@dataclass(frozen=True)
class EUeq:
    player: str
    value: Value


@dataclass(frozen=True)
class EUle:
    player: str
    value: Value


@dataclass(frozen=True)
class CF:
    antecedent: Union[DoStrat, DoMove]
    body: "Formula"


@dataclass(frozen=True)
class Not:
    body: "Formula"


@dataclass(frozen=True)
class And:
    parts: Tuple["Formula", ...]


@dataclass(frozen=True)
class ForallEU:
    """Binds the variable to the point's expected utility; equivalent to
    quantifying over all reals because EUeq pins the variable to one value."""

    player: str
    var: str
    body: "Formula"


Formula = Union[Bel, DoStrat, DoMove, EUeq, EUle, CF, Not, And, ForallEU]


def implies(a: Formula, b: Formula) -> Formula:
    return Not(And((a, Not(b))))


# ---------------------------------------------------------------------------
# program constructors
# ---------------------------------------------------------------------------

@dataclass
class KbProgram:
    """Per player, an ordered sequence of (guard, action) clauses."""

    clauses: Dict[str, Tuple[Tuple[Formula, str], ...]]


def eqnf(game: NormalFormGame) -> KbProgram:
    """One clause per pure strategy: believe you play it and that no other
    strategy would counterfactually do better, then play it."""
    clauses = {}
    for player in game.players:
        rows = []
        for s in game.strategies[player]:
            no_better = And(tuple(CF(DoStrat(player, alt), EUle(player, Var("x")))
                                  for alt in game.strategies[player]))
            guard = Bel(player, And((
                DoStrat(player, s),
                ForallEU(player, "x",
                         implies(EUeq(player, Var("x")), no_better)))))
            rows.append((guard, s))
        clauses[player] = tuple(rows)
    return KbProgram(clauses)


def eqef(game: ExtensiveFormGame) -> KbProgram:
    """One clause per move a player owns anywhere (plus Skip), guarded on the
    move being the one currently performed and counterfactually unimprovable.

    Deviation tests to moves that are impossible at the current local state
    are vacuously true, so each clause specializes to the moves possible
    there; at non-mover states only the Skip clause can fire.
    """
    clauses = {}
    for player in game.players:
        moves = []
        for infoset in game.player_infosets(player):
            for a in game.infoset_actions(infoset):
                if a not in moves:
                    moves.append(a)
        rows = []
        for a in moves + [SKIP]:
            no_better = And(tuple(CF(DoMove(player, alt), EUle(player, Var("x")))
                                  for alt in moves + [SKIP]))
            guard = Bel(player, And((
                DoMove(player, a),
                ForallEU(player, "x",
                         implies(EUeq(player, Var("x")), no_better)))))
            rows.append((guard, a))
        clauses[player] = tuple(rows)
    return KbProgram(clauses)


# ---------------------------------------------------------------------------
# counterfactual shift
# ---------------------------------------------------------------------------

class IllegalDeviation(ValueError):
    pass


def _performed_action(system: System, point: Point, player: str) -> Optional[str]:
    """The action player takes in the step following `point`, or None at the
    final state of a run."""
    run, m = point.run, point.time
    if m >= len(run) - 1:
        return None
    idx = system.game.players.index(player)
    state = run.local(idx, m)
    if state.stage[0] == "infoset":
        decoded = system.game.decode_pure(player, run.played[idx])
        return decoded[state.stage[1]]
    if state.stage == ("init",):
        return run.played[idx]
    return SKIP


def counterfactual_shift(system: System, point: Point, player: str,
                         deviation: Union[DoStrat, DoMove]) -> Point:
    """The closest point where `player` deviates as stated: same initial
    state, same opponents' strategies, same chance history."""
    game = system.game
    idx = game.players.index(player)
    run, m = point.run, point.time

    if isinstance(deviation, DoStrat):
        target = deviation.strategy
        from .systems import game_pure_strategies
        if target not in game_pure_strategies(game, player):
            raise IllegalDeviation(f"{target!r} is not a strategy of {player}")
        if target == run.played[idx]:
            return point
        new_played = run.played[:idx] + (target,) + run.played[idx + 1:]
    else:
        state = run.local(idx, m)
        legal = legal_actions(game, state)
        if deviation.action not in legal:
            raise IllegalDeviation(
                f"move {deviation.action!r} is not available at {state.describe()}")
        if deviation.action == SKIP:
            return point
        if isinstance(game, NormalFormGame):
            # a normal-form "move" is the choice of a pure strategy
            if deviation.action == run.played[idx]:
                return point
            new_played = (run.played[:idx] + (deviation.action,)
                          + run.played[idx + 1:])
        else:
            infoset = state.stage[1]
            decoded = dict(game.decode_pure(player, run.played[idx]))
            if decoded[infoset] == deviation.action:
                return point
            decoded[infoset] = deviation.action
            combo = tuple((i, decoded[i]) for i in game.player_infosets(player))
            new_played = (run.played[:idx] + (game._strategy_name(combo),)
                          + run.played[idx + 1:])

    prefix = run.states[m].chance_prefix
    candidates = [r for r in system.matching_runs(initial=run.initial,
                                                  played=new_played)
                  if r.chance[:len(prefix)] == prefix]
    if not candidates:
        raise IllegalDeviation("no deviation run found; system is not complete")

    def common_prefix_len(a, b):
        n = 0
        for x, y in zip(a, b):
            if x != y:
                break
            n += 1
        return n

    candidates.sort(key=lambda r: (-common_prefix_len(r.chance, run.chance),
                                   r.chance))
    chosen = candidates[0]
    return Point(chosen, min(m, len(chosen) - 1))


# ---------------------------------------------------------------------------
# truth
# ---------------------------------------------------------------------------

def _resolve(value: Value, env) -> Number:
    if isinstance(value, Var):
        if env is None or value.name not in env:
            raise ValueError(f"unbound utility variable {value.name!r}")
        return env[value.name]
    return value


def holds(system: System, point: Point, formula: Formula,
          mode: str = "exact", env=None) -> bool:
    """Truth at a point of a complete system.  `mode` selects whether
    expected-utility tests compare exact values or standard parts."""
    game = system.game

    if isinstance(formula, Bel):
        from .systems import condition_prior, indistinguishable
        cond = condition_prior(system, point, formula.player)
        if cond is None:
            return False
        by_run = {}
        for pt in indistinguishable(system, point, formula.player):
            by_run.setdefault(pt.run.key, []).append(pt)
        for run, mass in cond.items():
            if is_zero(mass):
                continue
            if not any(holds(system, pt, formula.body, mode, env)
                       for pt in by_run[run.key]):
                return False
        return True

    if isinstance(formula, DoStrat):
        idx = game.players.index(formula.player)
        if isinstance(game, NormalFormGame) and point.time != 0:
            return False
        return point.run.played[idx] == formula.strategy

    if isinstance(formula, DoMove):
        return _performed_action(system, point, formula.player) == formula.action

    if isinstance(formula, EUeq):
        eu = point_eu(system, point, formula.player, mode)
        return compare(eu, _resolve(formula.value, env)) == 0

    if isinstance(formula, EUle):
        eu = point_eu(system, point, formula.player, mode)
        return compare(eu, _resolve(formula.value, env)) <= 0

    if isinstance(formula, CF):
        ant = formula.antecedent
        player = ant.player
        idx = game.players.index(player)
        if isinstance(ant, DoMove):
            state = point.run.local(idx, point.time)
            if ant.action not in legal_actions(game, state):
                return True   # no closest world: vacuously true
        shifted = counterfactual_shift(system, point, player, ant)
        return holds(system, shifted, formula.body, mode, env)

    if isinstance(formula, Not):
        return not holds(system, point, formula.body, mode, env)

    if isinstance(formula, And):
        return all(holds(system, point, part, mode, env)
                   for part in formula.parts)

    if isinstance(formula, ForallEU):
        value = point_eu(system, point, formula.player, mode)
        inner = dict(env) if env else {}
        inner[formula.var] = value
        return holds(system, point, formula.body, mode, inner)

    raise TypeError(f"not a formula: {formula!r}")


# ---------------------------------------------------------------------------
# derived protocols and implementation
# ---------------------------------------------------------------------------

class GuardsNotExclusive(ValueError):
    pass


class GuardNotLocal(ValueError):
    pass


def derived_protocol(program: KbProgram, system: System, player: str,
                     mode: str = "exact",
                     states: Optional[set] = None) -> Dict[LocalState, Optional[str]]:
    """The partial protocol a kb program induces on a complete system.

    Maps each of the player's non-terminal local states to the action of its
    unique true guard, or None where no guard is true.  Guard truth must be
    constant on each indistinguishability class and at most one guard may be
    true; violations raise.
    """
    idx = system.game.players.index(player)
    classes: Dict[LocalState, list] = {}
    for pt in system.points():
        state = pt.run.local(idx, pt.time)
        if state.is_terminal:
            continue
        if states is not None and state not in states:
            continue
        classes.setdefault(state, []).append(pt)

    out: Dict[LocalState, Optional[str]] = {}
    for state, points in classes.items():
        true_actions = []
        for guard, action in program.clauses[player]:
            values = {holds(system, pt, guard, mode) for pt in points}
            if len(values) > 1:
                raise GuardNotLocal(
                    f"guard for action {action!r} is not constant on the "
                    f"class of {state.describe()}")
            if values.pop():
                true_actions.append(action)
        if len(true_actions) > 1:
            raise GuardsNotExclusive(
                f"guards not mutually exclusive at {state.describe()}: "
                f"{true_actions}")
        out[state] = true_actions[0] if true_actions else None
    return out


@dataclass
class Witness:
    player: str
    local_state: LocalState
    prescribed: Optional[str]       # what the kb program derives (None: no guard)
    actual: str                     # what the checked protocol does
    factual_eu: Number
    best_action: Optional[str]
    best_eu: Optional[Number]

    def describe(self) -> str:
        presc = self.prescribed if self.prescribed is not None else "(no guard true)"
        gap = ""
        if self.best_action is not None:
            gap = (f"; best deviation {self.best_action} gives {self.best_eu} "
                   f"vs factual {self.factual_eu}")
        return (f"{self.local_state.describe()}: protocol plays {self.actual}, "
                f"program prescribes {presc}{gap}")


@dataclass
class Verdict:
    ok: bool
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.ok


POSITIVE_MASS = "positive-mass"
POSITIVE_STANDARD_MASS = "positive-standard-mass"
ALL_NONZERO = "all-nonzero"


def _run_in_scope(context: Context, generated: System, player: str,
                  run, scope: str) -> bool:
    mass = generated.prior(player, run)
    if scope == POSITIVE_STANDARD_MASS:
        return standard_part(mass) > 0
    if is_zero(mass):
        return False
    if scope == ALL_NONZERO:
        return True
    idx = context.game.players.index(player)
    # hold a player to rationality only at types of positive standard
    # probability; opponents' infinitesimal trembles still expose every
    # information set to checking
    return standard_part(context.type_marginal(player, run.initial[idx])) > 0


def _deviation_report(system: System, point: Point, player: str, mode: str):
    """Factual EU plus the best legal deviation at a point, for witnesses."""
    game = system.game
    idx = game.players.index(player)
    state = point.run.local(idx, point.time)
    try:
        factual = point_eu(system, point, player, mode)
    except UndefinedExpectation:
        return None, None, None
    best_action, best_eu = None, None
    if state.stage == ("init",):
        from .systems import game_pure_strategies
        deviations = [DoStrat(player, s)
                      for s in game_pure_strategies(game, player)]
    elif state.stage[0] == "infoset":
        deviations = [DoMove(player, a)
                      for a in game.infoset_actions(state.stage[1])]
    else:
        deviations = []
    for dev in deviations:
        shifted = counterfactual_shift(system, point, player, dev)
        eu = point_eu(system, shifted, player, mode)
        if best_eu is None or compare(eu, best_eu) > 0:
            best_eu = eu
            best_action = dev.strategy if isinstance(dev, DoStrat) else dev.action
    return factual, best_action, best_eu


def implements(protocol: JointProtocol, program: KbProgram, context: Context,
               scope: str = POSITIVE_MASS, mode: str = "exact") -> Verdict:
    """Does the protocol agree with the program-derived protocol at every
    in-scope local state?  Failing states produce a checkable witness."""
    generated = generate_system(protocol, context)
    complete = complete_system(context, protocol)
    idx_of = {p: k for k, p in enumerate(context.game.players)}

    for player in context.game.players:
        wanted = set()
        for run in generated.runs:
            if not _run_in_scope(context, generated, player, run, scope):
                continue
            for m in range(len(run) - 1):   # final states are terminal
                state = run.local(idx_of[player], m)
                if not state.is_terminal:
                    wanted.add(state)
        if not wanted:
            continue
        derived = derived_protocol(program, complete, player, mode, wanted)
        for state in sorted(wanted, key=lambda s: (s.strategy, str(s.stage))):
            prescribed = derived.get(state)
            actual = protocol[player].action(state)
            if prescribed == actual:
                continue
            comp_point = None
            for pt in complete.points():
                if pt.run.local(idx_of[player], pt.time) == state \
                        and not is_zero(complete.prior(player, pt.run)):
                    comp_point = pt
                    break
            factual, best_action, best_eu = (None, None, None)
            if comp_point is not None:
                factual, best_action, best_eu = _deviation_report(
                    complete, comp_point, player, mode)
            return Verdict(False, Witness(player, state, prescribed, actual,
                                          factual, best_action, best_eu))
    return Verdict(True)
