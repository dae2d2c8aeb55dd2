"""Contexts, protocols, runs, points, and priors (standard and infinitesimal).

Initial global states are indexed by joint pure strategies: player i's
component ``s_S`` is the type "plays S".  A run is identified by its initial
state, the joint pure strategy actually played (which may differ from the
types in complete systems), and its chance realization.  Normal-form runs
have exactly two times; extensive-form runs advance one tree edge per step,
with non-movers performing the null action Skip.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Mapping, Optional, Tuple

from .games import (BehavioralStrategy, Chance, Decision, ExtensiveFormGame,
                    Leaf, MixedStrategy, NormalFormGame, behavioral_to_mixed,
                    has_perfect_recall)
from .numerics import EPS, Number, is_zero, standard_part

SKIP = "Skip"

INIT = ("init",)
IDLE = ("idle",)


@dataclass(frozen=True)
class LocalState:
    """Everything player knows: own type plus the current stage marker.

    stage is one of ("init",), ("infoset", I), ("idle",) or
    ("terminal", realized payoff).
    """

    player: str
    strategy: str
    stage: tuple

    @property
    def is_terminal(self):
        return self.stage[0] == "terminal"

    @property
    def infoset(self):
        return self.stage[1] if self.stage[0] == "infoset" else None

    def describe(self) -> str:
        kind = self.stage[0]
        if kind == "infoset":
            where = f"at {self.stage[1]}"
        elif kind == "terminal":
            where = f"terminal payoff {self.stage[1]}"
        else:
            where = kind
        return f"{self.player}[type {self.strategy}, {where}]"


@dataclass(frozen=True)
class GlobalState:
    locals: Tuple[LocalState, ...]
    env: str                       # current node id, or "initial"/"done"
    chance_prefix: Tuple[Tuple[str, str], ...] = ()


@dataclass(frozen=True)
class Run:
    initial: Tuple[str, ...]       # per-player type strategies
    played: Tuple[str, ...]        # per-player pure strategies actually used
    chance: Tuple[Tuple[str, str], ...]
    states: Tuple[GlobalState, ...]
    payoffs: Tuple[Fraction, ...]

    def __len__(self):
        return len(self.states)

    def local(self, player_index: int, time: int) -> LocalState:
        return self.states[time].locals[player_index]

    @property
    def key(self):
        return (self.initial, self.played, self.chance)


@dataclass(frozen=True)
class Point:
    run: Run
    time: int


@dataclass
class Context:
    """A game plus initial states and per-player priors over them."""

    game: object                   # NormalFormGame | ExtensiveFormGame
    g0: Tuple[Tuple[str, ...], ...]
    priors: Dict[str, Dict[Tuple[str, ...], Number]]
    common: bool = False

    def prior(self, player: str) -> Dict[Tuple[str, ...], Number]:
        return self.priors[player]

    def type_marginal(self, player: str, strategy: str) -> Number:
        i = self.game.players.index(player)
        return sum((m for s, m in self.priors[player].items() if s[i] == strategy),
                   Fraction(0))


def game_pure_strategies(game, player: str) -> Tuple[str, ...]:
    if isinstance(game, NormalFormGame):
        return game.strategies[player]
    return game.pure_strategies(player)


def full_g0(game) -> Tuple[Tuple[str, ...], ...]:
    """The full product of type spaces, one type per pure strategy."""
    return tuple(itertools.product(*(game_pure_strategies(game, p)
                                     for p in game.players)))


def make_context(game, prior, per_player: Optional[Mapping] = None,
                 g0=None) -> Context:
    """Common-prior context from one measure, or per-player from a mapping."""
    if g0 is None:
        g0 = full_g0(game)
    g0 = tuple(g0)
    if per_player is not None:
        priors = {p: dict(per_player[p]) for p in game.players}
        common = all(priors[p] == priors[game.players[0]] for p in game.players)
    else:
        priors = {p: dict(prior) for p in game.players}
        common = True
    for p, mu in priors.items():
        mass = sum(mu.get(s, Fraction(0)) for s in g0)
        if mass != 1:
            raise ValueError(f"prior for {p} sums to {mass}, not 1")
    # store zero-extended priors over exactly g0
    priors = {p: {s: mu.get(s, Fraction(0)) for s in g0} for p, mu in priors.items()}
    return Context(game, g0, priors, common)


# ---------------------------------------------------------------------------
# priors
# ---------------------------------------------------------------------------

def prior_from_mixed(game, profile: Mapping[str, MixedStrategy]
                     ) -> Dict[Tuple[str, ...], Fraction]:
    """Product measure on the full type space induced by a mixed profile."""
    out = {}
    for joint in full_g0(game):
        mass = Fraction(1)
        for p, s in zip(game.players, joint):
            mass *= profile[p].prob(s)
        out[joint] = mass
    return out


@dataclass
class TrembleSpec:
    """Per (information set, action) infinitesimal exponents, default 1."""

    exponents: Dict[Tuple[str, str], int] = field(default_factory=dict)
    default: int = 1

    def __post_init__(self):
        if self.default < 1 or any(e < 1 for e in self.exponents.values()):
            raise ValueError("tremble exponents must be >= 1")

    def exponent(self, infoset: str, action: str) -> int:
        return self.exponents.get((infoset, action), self.default)


def tremble_prior(game: ExtensiveFormGame,
                  profile: Mapping[str, BehavioralStrategy],
                  trembles: Optional[TrembleSpec] = None
                  ) -> Dict[Tuple[str, ...], Number]:
    """Full-support infinitesimally perturbed product prior on the type space.

    Each action a at information set I gets unnormalized weight
    b(I)(a) + eps^t(I,a), renormalized within I; pure-strategy mass is the
    product over information sets, joint mass the product over players.
    """
    trembles = trembles or TrembleSpec()
    recall = has_perfect_recall(game)
    bad = [p for p in game.players if not recall[p]]
    if bad:
        raise ValueError(f"imperfect recall for {', '.join(bad)}; "
                         "tremble priors need perfect recall")
    weights = {}   # (player, infoset) -> {action: EpsNum}
    for infoset, (player, _) in game.infosets().items():
        b = profile[player]
        raw = {a: b.prob(infoset, a) + EPS ** trembles.exponent(infoset, a)
               for a in game.infoset_actions(infoset)}
        total = sum(raw.values())
        weights[(player, infoset)] = {a: w / total for a, w in raw.items()}

    marginals = {}
    for p in game.players:
        marg = {}
        for name in game.pure_strategies(p):
            mass = Fraction(1)
            for infoset, action in game.decode_pure(p, name).items():
                mass = weights[(p, infoset)][action] * mass
            marg[name] = mass
        marginals[p] = marg

    out = {}
    for joint in full_g0(game):
        mass = Fraction(1)
        for p, s in zip(game.players, joint):
            mass = marginals[p][s] * mass
        out[joint] = mass
    return out


# ---------------------------------------------------------------------------
# protocols
# ---------------------------------------------------------------------------

@dataclass
class Protocol:
    player: str
    rule: Callable[[LocalState], str]

    def action(self, state: LocalState) -> str:
        return self.rule(state)


JointProtocol = Dict[str, Protocol]


def legal_actions(game, state: LocalState) -> Tuple[str, ...]:
    if state.stage == INIT:
        return game.strategies[state.player]
    if state.stage[0] == "infoset":
        return game.infoset_actions(state.stage[1])
    return (SKIP,)


def type_protocol(game) -> JointProtocol:
    """The protocol that plays its type: strategy S at type state s_S."""
    def make(player):
        def rule(state: LocalState) -> str:
            if state.stage == INIT:
                return state.strategy
            if state.stage[0] == "infoset":
                return game.decode_pure(player, state.strategy)[state.stage[1]]
            return SKIP
        return Protocol(player, rule)
    return {p: make(p) for p in game.players}


class InappropriateProtocol(ValueError):
    def __init__(self, state: LocalState, action: str):
        self.state = state
        self.action = action
        super().__init__(f"protocol prescribes illegal action {action!r} "
                         f"at local state {state.describe()}")


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

def chance_probability(game, chance) -> Fraction:
    prob = Fraction(1)
    for nid, child in chance:
        prob *= dict(game.nodes[nid].dist)[child]
    return prob


def _normal_run(game: NormalFormGame, initial, played) -> Run:
    payoffs = game.payoffs[tuple(played)]
    start = GlobalState(tuple(LocalState(p, t, INIT)
                              for p, t in zip(game.players, initial)), "initial")
    end = GlobalState(tuple(LocalState(p, t, ("terminal", payoffs[k]))
                            for k, (p, t) in enumerate(zip(game.players, initial))),
                      "done")
    return Run(tuple(initial), tuple(played), (), (start, end), payoffs)


def _extensive_runs(game: ExtensiveFormGame, initial, played):
    """All runs (one per chance realization) of a joint pure strategy."""
    decoded = {p: game.decode_pure(p, s) for p, s in zip(game.players, played)}

    def state_at(nid, prefix):
        node = game.nodes[nid]
        locs = []
        for k, p in enumerate(game.players):
            if isinstance(node, Leaf):
                stage = ("terminal", node.payoffs[k])
            elif isinstance(node, Decision) and node.player == p:
                stage = ("infoset", node.infoset)
            else:
                stage = IDLE
            locs.append(LocalState(p, initial[k], stage))
        return GlobalState(tuple(locs), nid, prefix)

    runs = []

    def walk(nid, prefix, states):
        node = game.nodes[nid]
        states = states + (state_at(nid, prefix),)
        if isinstance(node, Leaf):
            runs.append(Run(tuple(initial), tuple(played), prefix, states,
                            node.payoffs))
        elif isinstance(node, Chance):
            for child, _p in node.dist:
                walk(child, prefix + ((nid, child),), states)
        else:
            action = decoded[node.player][node.infoset]
            walk(node.child(action), prefix, states)

    walk(game.root, (), ())
    return runs


def runs_of(game, initial, played):
    if isinstance(game, NormalFormGame):
        return [_normal_run(game, initial, played)]
    return _extensive_runs(game, initial, played)


def protocol_play(game, protocol: JointProtocol, initial) -> Tuple[str, ...]:
    """The joint pure strategy a protocol uses when types are `initial`."""
    played = []
    for k, p in enumerate(game.players):
        if isinstance(game, NormalFormGame):
            state = LocalState(p, initial[k], INIT)
            action = protocol[p].action(state)
            if action not in game.strategies[p]:
                raise InappropriateProtocol(state, action)
            played.append(action)
        else:
            choice = {}
            for infoset in game.player_infosets(p):
                state = LocalState(p, initial[k], ("infoset", infoset))
                action = protocol[p].action(state)
                if action not in game.infoset_actions(infoset):
                    raise InappropriateProtocol(state, action)
                choice[infoset] = action
            combo = tuple((i, choice[i]) for i in game.player_infosets(p))
            played.append(game._strategy_name(combo))
    return tuple(played)


# ---------------------------------------------------------------------------
# systems
# ---------------------------------------------------------------------------

@dataclass
class System:
    game: object
    context: Context
    runs: Tuple[Run, ...]
    priors: Dict[str, Dict[Run, Number]]
    kind: str                      # "generated" | "complete"

    def __post_init__(self):
        self._index = {r.key: r for r in self.runs}

    def prior(self, player: str, run: Run) -> Number:
        return self.priors[player].get(run, Fraction(0))

    def find_run(self, initial, played, chance=None) -> Optional[Run]:
        if chance is not None:
            return self._index.get((tuple(initial), tuple(played), tuple(chance)))
        hits = [r for r in self.runs
                if r.initial == tuple(initial) and r.played == tuple(played)]
        return hits[0] if hits else None

    def matching_runs(self, initial=None, played=None):
        out = []
        for r in self.runs:
            if initial is not None and r.initial != tuple(initial):
                continue
            if played is not None and r.played != tuple(played):
                continue
            out.append(r)
        return out

    def points(self):
        for r in self.runs:
            for m in range(len(r)):
                yield Point(r, m)


def generate_system(protocol: JointProtocol, context: Context) -> System:
    """The system of one run per (initial state, chance realization)."""
    game = context.game
    runs = []
    masses = []
    for initial in context.g0:
        played = protocol_play(game, protocol, initial)
        for run in runs_of(game, initial, played):
            runs.append(run)
            masses.append(chance_probability(game, run.chance)
                          if run.chance else Fraction(1))
    priors = {}
    for p in game.players:
        mu = context.prior(p)
        priors[p] = {r: mu[r.initial] * m for r, m in zip(runs, masses)}
    return System(game, context, tuple(runs), priors, "generated")


def complete_system(context: Context,
                    protocol: Optional[JointProtocol] = None) -> System:
    """Every run any appropriate protocol could generate from G0.

    The prior extension keeps the generated system's masses (runs played by
    `protocol`, the type-following protocol by default) and puts mass 0 on
    every counterfactual run.
    """
    game = context.game
    protocol = protocol or type_protocol(game)
    on_protocol = {initial: protocol_play(game, protocol, initial)
                   for initial in context.g0}
    all_played = tuple(itertools.product(*(game_pure_strategies(game, p)
                                           for p in game.players)))
    runs = []
    masses = []
    for initial in context.g0:
        for played in all_played:
            for run in runs_of(game, initial, played):
                runs.append(run)
                if played == on_protocol[initial]:
                    masses.append(chance_probability(game, run.chance)
                                  if run.chance else Fraction(1))
                else:
                    masses.append(None)
    priors = {}
    for p in game.players:
        mu = context.prior(p)
        priors[p] = {r: (Fraction(0) if m is None else mu[r.initial] * m)
                     for r, m in zip(runs, masses)}
    return System(game, context, tuple(runs), priors, "complete")


# ---------------------------------------------------------------------------
# indistinguishability, conditioning, expected utility
# ---------------------------------------------------------------------------

def _system_cache(system: System) -> dict:
    return system.__dict__.setdefault("_cache", {})


def indistinguishable(system: System, point: Point, player: str):
    """All points whose local state for `player` equals the one at `point`."""
    idx = system.game.players.index(player)
    target = point.run.local(idx, point.time)
    cache = _system_cache(system)
    key = ("K", player, target)
    if key not in cache:
        out = []
        for r in system.runs:
            for m in range(len(r)):
                if r.local(idx, m) == target:
                    out.append(Point(r, m))
        cache[key] = tuple(out)
    return cache[key]


def condition_prior(system: System, point: Point, player: str):
    """The player's prior conditioned on the runs through their local state,
    or None when that event has mass exactly 0."""
    idx = system.game.players.index(player)
    target = point.run.local(idx, point.time)
    cache = _system_cache(system)
    key = ("cond", player, target)
    if key in cache:
        return cache[key]
    seen = set()
    runs = []
    for pt in indistinguishable(system, point, player):
        if pt.run.key not in seen:
            seen.add(pt.run.key)
            runs.append(pt.run)
    total = Fraction(0)
    for r in runs:
        total = system.prior(player, r) + total
    if is_zero(total):
        cache[key] = None
        return None
    out = {}
    for r in runs:
        mass = system.prior(player, r)
        if not is_zero(mass):
            out[r] = mass / total
    cache[key] = out
    return out


def _continuation_value(game, run: Run, player: str, own_strategy: str) -> Fraction:
    """Utility to `player` when they play `own_strategy` while everyone else
    (and realized chance) follows `run`; unrealized chance is folded."""
    idx = game.players.index(player)
    if isinstance(game, NormalFormGame):
        joint = list(run.played)
        joint[idx] = own_strategy
        return game.payoffs[tuple(joint)][idx]
    own = game.decode_pure(player, own_strategy)
    others = {p: game.decode_pure(p, run.played[k])
              for k, p in enumerate(game.players) if p != player}
    realized = dict(run.chance)

    def walk(nid) -> Fraction:
        node = game.nodes[nid]
        if isinstance(node, Leaf):
            return node.payoffs[idx]
        if isinstance(node, Chance):
            if nid in realized:
                return walk(realized[nid])
            return sum((p * walk(child) for child, p in node.dist), Fraction(0))
        action = (own if node.player == player else others[node.player])[node.infoset]
        return walk(node.child(action))

    return walk(game.root)


class UndefinedExpectation(ValueError):
    pass


def point_eu(system: System, point: Point, player: str, mode: str = "exact"):
    """Player's expected utility at a point, under their conditioned prior.

    The utility of each conditioned run is taken with the player's own
    strategy replaced by the one used in `point`'s run, which is what makes
    counterfactually shifted points report deviation payoffs.
    """
    idx = system.game.players.index(player)
    own = point.run.played[idx]
    target = point.run.local(idx, point.time)
    cache = _system_cache(system)
    key = ("eu", player, target, own, mode)
    if key in cache:
        return cache[key]
    cond = condition_prior(system, point, player)
    if cond is None:
        raise UndefinedExpectation(
            f"expected utility undefined: conditioning on a mass-0 state "
            f"({target.describe()})")
    total = Fraction(0)
    for run, mass in cond.items():
        total = mass * _continuation_value(system.game, run, player, own) + total
    if mode == "standard":
        total = standard_part(total)
    cache[key] = total
    return total
