"""Normal-form and extensive-form games over exact rational payoffs.

Pure strategies of an extensive-form game assign an action to every one of
the player's information sets, including sets excluded by the player's own
earlier choices; the strategic form is the full product over those maps.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Mapping, Tuple

__all__ = [
    "NormalFormGame", "ExtensiveFormGame", "Decision", "Chance", "Leaf",
    "MixedStrategy", "BehavioralStrategy",
    "validate_game", "has_perfect_recall", "strategic_form",
    "expected_utility", "behavioral_to_mixed", "pure_mixed",
]


@dataclass
class NormalFormGame:
    players: Tuple[str, ...]
    strategies: Dict[str, Tuple[str, ...]]   # per player, ordered
    payoffs: Dict[Tuple[str, ...], Tuple[Fraction, ...]]
    name: str = ""

    def player_index(self, player: str) -> int:
        return self.players.index(player)

    def joint_strategies(self):
        return itertools.product(*(self.strategies[p] for p in self.players))

    def utility(self, joint: Tuple[str, ...], player: str) -> Fraction:
        return self.payoffs[tuple(joint)][self.player_index(player)]


# -- extensive-form nodes -----------------------------------------------------

@dataclass(frozen=True)
class Decision:
    player: str
    infoset: str
    actions: Tuple[Tuple[str, str], ...]  # (action name, child id), ordered

    def action_names(self):
        return tuple(a for a, _ in self.actions)

    def child(self, action: str) -> str:
        for a, c in self.actions:
            if a == action:
                return c
        raise KeyError(action)


@dataclass(frozen=True)
class Chance:
    dist: Tuple[Tuple[str, Fraction], ...]  # (child id, probability)


@dataclass(frozen=True)
class Leaf:
    payoffs: Tuple[Fraction, ...]


@dataclass
class ExtensiveFormGame:
    players: Tuple[str, ...]
    nodes: Dict[str, object]   # node id -> Decision | Chance | Leaf
    root: str
    name: str = ""

    def player_index(self, player: str) -> int:
        return self.players.index(player)

    def infosets(self) -> Dict[str, Tuple[str, Tuple[str, ...]]]:
        """infoset id -> (player, node ids in tree order)."""
        cached = self.__dict__.get("_infosets")
        if cached is not None:
            return cached
        out: Dict[str, Tuple[str, list]] = {}
        for nid in self._preorder():
            node = self.nodes[nid]
            if isinstance(node, Decision):
                player, members = out.setdefault(node.infoset, (node.player, []))
                members.append(nid)
        result = {i: (p, tuple(ms)) for i, (p, ms) in out.items()}
        self.__dict__["_infosets"] = result
        return result

    def player_infosets(self, player: str) -> Tuple[str, ...]:
        return tuple(i for i, (p, _) in self.infosets().items() if p == player)

    def infoset_actions(self, infoset: str) -> Tuple[str, ...]:
        _, members = self.infosets()[infoset]
        return self.nodes[members[0]].action_names()

    def _preorder(self):
        order, stack, seen = [], [self.root], set()
        while stack:
            nid = stack.pop()
            if nid in seen or nid not in self.nodes:
                continue
            seen.add(nid)
            order.append(nid)
            node = self.nodes[nid]
            if isinstance(node, Decision):
                stack.extend(c for _, c in reversed(node.actions))
            elif isinstance(node, Chance):
                stack.extend(c for c, _ in reversed(node.dist))
        return order

    def parent_map(self) -> Dict[str, Tuple[str, str]]:
        """child id -> (parent id, edge label)."""
        out = {}
        for nid, node in self.nodes.items():
            if isinstance(node, Decision):
                for a, c in node.actions:
                    out.setdefault(c, (nid, a))
            elif isinstance(node, Chance):
                for c, _ in node.dist:
                    out.setdefault(c, (nid, ""))
        return out

    # -- strategic-form pure strategies ---------------------------------------

    def pure_strategies(self, player: str) -> Tuple[str, ...]:
        names = []
        for combo in self._pure_tuples(player):
            names.append(self._strategy_name(combo))
        return tuple(names)

    def _pure_tuples(self, player: str):
        infosets = self.player_infosets(player)
        choices = [self.infoset_actions(i) for i in infosets]
        for combo in itertools.product(*choices):
            yield tuple(zip(infosets, combo))

    @staticmethod
    def _strategy_name(combo) -> str:
        if len(combo) == 1:
            return combo[0][1]
        return ".".join(a for _, a in combo)

    def decode_pure(self, player: str, name: str) -> Dict[str, str]:
        """Pure strategy name -> map from infoset id to action."""
        cache = self.__dict__.setdefault("_decode_cache", {})
        hit = cache.get((player, name))
        if hit is not None:
            return hit
        for combo in self._pure_tuples(player):
            if self._strategy_name(combo) == name:
                cache[(player, name)] = dict(combo)
                return cache[(player, name)]
        raise KeyError(f"unknown pure strategy {name!r} for player {player!r}")


@dataclass
class MixedStrategy:
    player: str
    probs: Dict[str, Fraction]

    def __post_init__(self):
        self.probs = {k: Fraction(v) for k, v in self.probs.items()}
        if any(v < 0 for v in self.probs.values()):
            raise ValueError("negative probability in mixed strategy")
        if sum(self.probs.values()) != 1:
            raise ValueError("mixed strategy does not sum to 1")

    def prob(self, strategy: str) -> Fraction:
        return self.probs.get(strategy, Fraction(0))

    def support(self):
        return tuple(s for s, p in self.probs.items() if p > 0)


def pure_mixed(player: str, strategy: str) -> MixedStrategy:
    return MixedStrategy(player, {strategy: Fraction(1)})


@dataclass
class BehavioralStrategy:
    player: str
    choices: Dict[str, Dict[str, Fraction]]   # infoset -> action -> prob

    def __post_init__(self):
        for infoset, dist in self.choices.items():
            self.choices[infoset] = {a: Fraction(p) for a, p in dist.items()}
            if any(p < 0 for p in dist.values()):
                raise ValueError(f"negative probability at infoset {infoset}")
            if sum(dist.values()) != 1:
                raise ValueError(f"distribution at infoset {infoset} does not sum to 1")

    def prob(self, infoset: str, action: str) -> Fraction:
        return self.choices[infoset].get(action, Fraction(0))


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def validate_game(game) -> list:
    """All violated structural invariants, with offending ids.  Empty = ok."""
    if isinstance(game, NormalFormGame):
        return _validate_normal(game)
    if isinstance(game, ExtensiveFormGame):
        return _validate_extensive(game)
    raise TypeError(f"not a game: {game!r}")


def _validate_normal(g: NormalFormGame) -> list:
    problems = []
    if not g.players:
        problems.append("game has no players")
    for p in g.players:
        if not g.strategies.get(p):
            problems.append(f"player {p} has an empty strategy set")
    n = len(g.players)
    for joint in g.joint_strategies():
        if joint not in g.payoffs:
            problems.append(f"missing payoff entry for {joint}")
        elif len(g.payoffs[joint]) != n:
            problems.append(f"payoff arity for {joint} is {len(g.payoffs[joint])}, expected {n}")
    for joint in g.payoffs:
        if len(joint) != n or any(s not in g.strategies.get(p, ())
                                  for p, s in zip(g.players, joint)):
            problems.append(f"payoff entry {joint} does not match the strategy sets")
    return problems


def _validate_extensive(g: ExtensiveFormGame) -> list:
    problems = []
    if g.root not in g.nodes:
        problems.append(f"root {g.root} is not a node")
        return problems
    children = {}
    for nid, node in g.nodes.items():
        if isinstance(node, Decision):
            if node.player not in g.players:
                problems.append(f"node {nid}: unknown player {node.player}")
            if not node.actions:
                problems.append(f"node {nid}: decision node with no actions")
            for _, c in node.actions:
                children.setdefault(c, []).append(nid)
        elif isinstance(node, Chance):
            mass = sum(p for _, p in node.dist)
            if mass != 1:
                problems.append(f"node {nid}: chance mass {mass} != 1")
            if any(p <= 0 for _, p in node.dist):
                problems.append(f"node {nid}: nonpositive chance probability")
            for c, _ in node.dist:
                children.setdefault(c, []).append(nid)
        elif isinstance(node, Leaf):
            if len(node.payoffs) != len(g.players):
                problems.append(f"node {nid}: payoff arity {len(node.payoffs)}, "
                                f"expected {len(g.players)}")
        else:
            problems.append(f"node {nid}: unknown node kind")
    for c, parents in children.items():
        if c not in g.nodes:
            problems.append(f"edge to unknown node {c}")
        if len(parents) > 1:
            problems.append(f"node {c} has {len(parents)} parents: not a tree")
    if g.root in children:
        problems.append(f"root {g.root} has a parent")
    reachable = set(g._preorder())
    for nid in g.nodes:
        if nid not in reachable:
            problems.append(f"node {nid} unreachable from root")
    # information set consistency
    sets: Dict[str, list] = {}
    for nid, node in g.nodes.items():
        if isinstance(node, Decision):
            sets.setdefault(node.infoset, []).append(nid)
    for iset, members in sets.items():
        owners = {g.nodes[m].player for m in members}
        if len(owners) > 1:
            problems.append(f"information set {iset} spans players {sorted(owners)}")
        acts = {g.nodes[m].action_names() for m in members}
        if len(acts) > 1:
            problems.append(f"information set {iset} has mismatched action sets")
    return problems


# ---------------------------------------------------------------------------
# perfect recall
# ---------------------------------------------------------------------------

def has_perfect_recall(g: ExtensiveFormGame) -> Dict[str, bool]:
    """Per player: do all nodes of each information set share the same
    own-experience (sequence of (information set, action) on the root path)?"""
    parents = g.parent_map()

    def experience(nid: str, player: str):
        path = []
        cur = nid
        while cur in parents:
            parent, label = parents[cur]
            pnode = g.nodes[parent]
            if isinstance(pnode, Decision) and pnode.player == player:
                path.append((pnode.infoset, label))
            cur = parent
        return tuple(reversed(path))

    result = {p: True for p in g.players}
    for iset, (player, members) in g.infosets().items():
        exps = {experience(m, player) for m in members}
        if len(exps) > 1:
            result[player] = False
    return result


# ---------------------------------------------------------------------------
# strategic form and expected utility
# ---------------------------------------------------------------------------

def outcome_utilities(g: ExtensiveFormGame, pure: Mapping[str, Mapping[str, str]]
                      ) -> Tuple[Fraction, ...]:
    """Chance-folded utility vector of a joint pure strategy (infoset->action maps)."""
    def walk(nid):
        node = g.nodes[nid]
        if isinstance(node, Leaf):
            return node.payoffs
        if isinstance(node, Chance):
            total = [Fraction(0)] * len(g.players)
            for child, p in node.dist:
                sub = walk(child)
                total = [t + p * s for t, s in zip(total, sub)]
            return tuple(total)
        action = pure[node.player][node.infoset]
        return walk(node.child(action))
    return walk(g.root)


def strategic_form(g: ExtensiveFormGame) -> NormalFormGame:
    strategies = {p: g.pure_strategies(p) for p in g.players}
    payoffs = {}
    for joint in itertools.product(*(strategies[p] for p in g.players)):
        pure = {p: g.decode_pure(p, s) for p, s in zip(g.players, joint)}
        payoffs[joint] = outcome_utilities(g, pure)
    return NormalFormGame(g.players, strategies, payoffs, name=g.name)


def expected_utility(g: NormalFormGame, profile: Mapping[str, MixedStrategy]
                     ) -> Tuple[Fraction, ...]:
    """Exact product-measure expectation of each player's utility."""
    total = [Fraction(0)] * len(g.players)
    for joint in g.joint_strategies():
        mass = Fraction(1)
        for p, s in zip(g.players, joint):
            mass *= profile[p].prob(s)
            if mass == 0:
                break
        if mass == 0:
            continue
        for k, u in enumerate(g.payoffs[joint]):
            total[k] += mass * u
    return tuple(total)


def behavioral_to_mixed(g: ExtensiveFormGame, b: BehavioralStrategy) -> MixedStrategy:
    """Kuhn transform onto strategic-form pure strategies (perfect recall only)."""
    if not has_perfect_recall(g)[b.player]:
        raise ValueError(f"player {b.player} has imperfect recall; "
                         "behavioral strategies have no mixed equivalent")
    probs = {}
    for combo in g._pure_tuples(b.player):
        mass = Fraction(1)
        for infoset, action in combo:
            mass *= b.prob(infoset, action)
        if mass:
            probs[g._strategy_name(combo)] = mass
    return MixedStrategy(b.player, probs)
