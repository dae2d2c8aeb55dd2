"""Solution-concept verifiers and enumerators.

Each concept gets a direct checker against its textbook definition and,
where applicable, an equivalent pipeline through the belief-program
characterization (`eqnf`/`eqef` plus `implements`).  The two roads are
cross-validated in the test suite.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from .epistemic import Verdict, Witness, eqef, eqnf, implements
from .games import (BehavioralStrategy, ExtensiveFormGame, MixedStrategy,
                    NormalFormGame, behavioral_to_mixed, has_perfect_recall,
                    pure_mixed, strategic_form)
from .numerics import (EQ, GE, LinearSystem, is_zero, lp_feasible,
                       standard_part)
from .systems import (Context, TrembleSpec, full_g0, make_context,
                      prior_from_mixed, tremble_prior, type_protocol)

JointMixed = Dict[str, MixedStrategy]


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------

@dataclass
class CorrelatedDistribution:
    """Probability distribution over joint pure strategies."""

    probs: Dict[Tuple[str, ...], Fraction]

    def __post_init__(self):
        self.probs = {k: Fraction(v) for k, v in self.probs.items()}
        if any(p < 0 for p in self.probs.values()):
            raise ValueError("negative probability in distribution")
        if sum(self.probs.values()) != 1:
            raise ValueError("distribution does not sum to 1")

    def prob(self, joint: Tuple[str, ...]) -> Fraction:
        return self.probs.get(joint, Fraction(0))


@dataclass
class BeliefSystem:
    """Per information set, a distribution over the nodes in that set."""

    beliefs: Dict[str, Dict[str, Fraction]]

    def __post_init__(self):
        for infoset, dist in self.beliefs.items():
            if sum(dist.values()) != 1:
                raise ValueError(
                    f"beliefs at information set {infoset} do not sum to 1")

    def at(self, infoset: str) -> Dict[str, Fraction]:
        return self.beliefs[infoset]


# ---------------------------------------------------------------------------
# Nash equilibrium
# ---------------------------------------------------------------------------

def _pure_vs_mixed(game: NormalFormGame, player: str, strategy: str,
                   profile: JointMixed) -> Fraction:
    """Expected utility of a pure strategy against the others' mixtures."""
    others = [p for p in game.players if p != player]
    total = Fraction(0)
    for combo in itertools.product(*(profile[p].support() for p in others)):
        weight = Fraction(1)
        for p, s in zip(others, combo):
            weight *= profile[p].prob(s)
        joint = tuple(strategy if p == player else combo[others.index(p)]
                      for p in game.players)
        total += weight * game.utility(joint, player)
    return total


def is_nash(game: NormalFormGame, profile: JointMixed) -> bool:
    """Every strategy in each player's support must attain the pure best
    response value against the others, exactly."""
    for player in game.players:
        values = {s: _pure_vs_mixed(game, player, s, profile)
                  for s in game.strategies[player]}
        best = max(values.values())
        if any(values[s] != best for s in profile[player].support()):
            return False
    return True


def nash_via_kb(game: NormalFormGame, profile: JointMixed) -> Verdict:
    """Knowledge-based check: the type protocol must realize the equilibrium
    program under the product prior the profile induces."""
    context = make_context(game, prior_from_mixed(game, profile))
    return implements(type_protocol(game), eqnf(game), context)


# ---------------------------------------------------------------------------
# two-player Nash enumeration (support enumeration, exact)
# ---------------------------------------------------------------------------

@dataclass
class NashEnumeration:
    equilibria: List[JointMixed]
    degenerate: bool = False

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self):
        return len(self.equilibria)


def _gauss(rows: List[Tuple[List[Fraction], Fraction]], n: int):
    """Exact Gaussian elimination.  Returns ("inconsistent", None),
    ("unique", solution) or ("under", particular-solution-with-free-zeros)."""
    aug = [list(coeffs) + [rhs] for coeffs, rhs in rows]
    pivots = []
    row = 0
    for col in range(n):
        piv = next((r for r in range(row, len(aug)) if aug[r][col] != 0), None)
        if piv is None:
            continue
        aug[row], aug[piv] = aug[piv], aug[row]
        scale = aug[row][col]
        aug[row] = [v / scale for v in aug[row]]
        for r in range(len(aug)):
            if r != row and aug[r][col] != 0:
                factor = aug[r][col]
                aug[r] = [a - factor * b for a, b in zip(aug[r], aug[row])]
        pivots.append(col)
        row += 1
    for r in range(row, len(aug)):
        if aug[r][n] != 0:
            return ("inconsistent", None)
    solution = [Fraction(0)] * n
    for r, col in enumerate(pivots):
        solution[col] = aug[r][n]
    return ("unique" if len(pivots) == n else "under", solution)


def _support_system(game: NormalFormGame, mover: str, responder: str,
                    support: Tuple[str, ...], resp_support: Tuple[str, ...]):
    """Indifference equations: the responder's mixture over `resp_support`
    plus a value variable making the mover indifferent across `support`.
    Unknowns are the responder's probabilities followed by the value."""
    idx = game.player_index(mover)
    n = len(resp_support) + 1

    def payoff(own: str, other: str) -> Fraction:
        joint = (own, other) if game.players[0] == mover else (other, own)
        return game.utility(joint, mover)

    rows = []
    for s in support:
        coeffs = [payoff(s, t) for t in resp_support] + [Fraction(-1)]
        rows.append((coeffs, Fraction(0)))
    rows.append(([Fraction(1)] * len(resp_support) + [Fraction(0)],
                 Fraction(1)))
    return rows, n, payoff


def _solve_support_side(game, mover, responder, support, resp_support):
    """Responder mixture making `mover` indifferent on `support` and no
    better off outside it.  Returns (probs, value, underdetermined) or None."""
    rows, n, payoff = _support_system(game, mover, responder,
                                      support, resp_support)
    status, sol = _gauss(rows, n)
    if status == "inconsistent":
        return None
    under = status == "under"
    if under:
        # look for any feasible witness with weak inequalities
        system = LinearSystem(n, [], (True,) * (n - 1) + (False,))
        for coeffs, rhs in rows:
            system.add(coeffs, EQ, rhs)
        for s in game.strategies[mover]:
            if s in support:
                continue
            system.add([payoff(s, t) for t in resp_support] + [Fraction(-1)],
                       GE, Fraction(0))   # value >= outside strategies
        # lp is stated as <=/=/>= rows over nonneg+free vars
        witness = lp_feasible(system)
        if witness is None:
            return None
        sol = witness
    probs, value = sol[:-1], sol[-1]
    if any(p <= 0 for p in probs):
        return None   # support must be exact; smaller supports run separately
    for s in game.strategies[mover]:
        if s not in support and sum(
                payoff(s, t) * p for t, p in zip(resp_support, probs)) > value:
            return None
    return probs, value, under


def enumerate_nash_2p(game: NormalFormGame) -> NashEnumeration:
    """All equilibria of a two-player game by exact support enumeration.
    Degenerate support pairs yield one representative and set the flag."""
    if len(game.players) != 2:
        raise ValueError("support enumeration requires exactly two players")
    one, two = game.players
    found: List[JointMixed] = []
    seen = set()
    degenerate = False
    for sup1 in _nonempty_subsets(game.strategies[one]):
        for sup2 in _nonempty_subsets(game.strategies[two]):
            side2 = _solve_support_side(game, one, two, sup1, sup2)
            if side2 is None:
                continue
            side1 = _solve_support_side(game, two, one, sup2, sup1)
            if side1 is None:
                continue
            q, _, under_q = side2
            p, _, under_p = side1
            if under_q or under_p:
                degenerate = True
            profile = {
                one: MixedStrategy(one, dict(zip(sup1, p))),
                two: MixedStrategy(two, dict(zip(sup2, q))),
            }
            key = (tuple(sorted(profile[one].probs.items())),
                   tuple(sorted(profile[two].probs.items())))
            if key not in seen:
                seen.add(key)
                found.append(profile)
    found.sort(key=lambda pr: tuple(
        tuple(sorted(pr[p].probs.items())) for p in game.players))
    # a mixture with more pure best responses than its support size signals
    # infinitely many equilibria even when each support system was square
    for profile in found:
        for player, other in ((one, two), (two, one)):
            values = {s: _pure_vs_mixed(game, other, s, profile)
                      for s in game.strategies[other]}
            best = max(values.values())
            responses = sum(1 for v in values.values() if v == best)
            if responses > len(profile[player].support()):
                degenerate = True
    return NashEnumeration(found, degenerate)


def _nonempty_subsets(items: Tuple[str, ...]):
    for size in range(1, len(items) + 1):
        yield from itertools.combinations(items, size)


# ---------------------------------------------------------------------------
# correlated equilibrium
# ---------------------------------------------------------------------------

def is_correlated(game: NormalFormGame, dist: CorrelatedDistribution) -> bool:
    """Obedience: no player gains by deviating from any recommendation that
    has positive marginal probability."""
    for player in game.players:
        idx = game.player_index(player)
        for rec in game.strategies[player]:
            marginal = sum(
                dist.prob(joint) for joint in game.joint_strategies()
                if joint[idx] == rec)
            if marginal == 0:
                continue
            for alt in game.strategies[player]:
                gain = Fraction(0)
                for joint in game.joint_strategies():
                    if joint[idx] != rec:
                        continue
                    swapped = joint[:idx] + (alt,) + joint[idx + 1:]
                    gain += dist.prob(joint) * (
                        game.utility(swapped, player)
                        - game.utility(joint, player))
                if gain > 0:
                    return False
    return True


def correlated_via_kb(game: NormalFormGame,
                      dist: CorrelatedDistribution) -> Verdict:
    """The distribution itself is the common prior; no independence asked."""
    prior = {joint: dist.prob(joint) for joint in full_g0(game)}
    context = make_context(game, prior)
    return implements(type_protocol(game), eqnf(game), context)


def correlated_value(game: NormalFormGame,
                     dist: CorrelatedDistribution) -> Tuple[Fraction, ...]:
    """Per-player expected utility under the distribution."""
    totals = [Fraction(0)] * len(game.players)
    for joint in game.joint_strategies():
        for k, p in enumerate(game.players):
            totals[k] += dist.prob(joint) * game.utility(joint, p)
    return tuple(totals)


# ---------------------------------------------------------------------------
# rationalizability
# ---------------------------------------------------------------------------

CORRELATED = "correlated"
INDEPENDENT = "independent"

_GRID_DENOMINATOR = 12   # independent-mode belief grid resolution


def _best_response_belief(game: NormalFormGame, player: str, strategy: str,
                          own: Tuple[str, ...],
                          opposing: List[Tuple[str, ...]]):
    """A belief over the opposing joint strategies making `strategy` weakly
    best among `own`, or None.  Pure linear feasibility."""
    idx = game.player_index(player)

    def payoff(own_s, combo):
        joint = list(combo)
        joint.insert(idx, own_s)
        return game.utility(tuple(joint), player)

    system = LinearSystem(len(opposing), [], (True,) * len(opposing))
    system.add([Fraction(1)] * len(opposing), EQ, Fraction(1))
    for alt in own:
        if alt == strategy:
            continue
        system.add([payoff(strategy, c) - payoff(alt, c) for c in opposing],
                   GE, Fraction(0))
    witness = lp_feasible(system)
    if witness is None:
        return None
    return dict(zip(opposing, witness))


def _grid_distributions(options: Tuple[str, ...], denominator: int):
    n = len(options)
    for cut in itertools.combinations_with_replacement(
            range(denominator + 1), n - 1):
        parts = [a - b for a, b in zip(cut + (denominator,), (0,) + cut)]
        yield {s: Fraction(k, denominator)
               for s, k in zip(options, parts) if k}


def _best_response_product(game: NormalFormGame, player: str, strategy: str,
                           own: Tuple[str, ...],
                           survivors: Dict[str, Tuple[str, ...]]) -> bool:
    """Independent mode: search product beliefs on a fixed rational grid."""
    others = [p for p in game.players if p != player]
    idx = game.player_index(player)

    def payoff(own_s, combo):
        joint = list(combo)
        joint.insert(idx, own_s)
        return game.utility(tuple(joint), player)

    grids = [list(_grid_distributions(survivors[p], _GRID_DENOMINATOR))
             for p in others]
    combos = list(itertools.product(*(survivors[p] for p in others)))
    for choice in itertools.product(*grids):
        def weight(combo):
            w = Fraction(1)
            for dist, s in zip(choice, combo):
                w *= dist.get(s, Fraction(0))
            return w
        eu_s = sum(weight(c) * payoff(strategy, c) for c in combos)
        if all(eu_s >= sum(weight(c) * payoff(alt, c) for c in combos)
               for alt in own):
            return True
    return False


def _eliminate(game: NormalFormGame, beliefs: str):
    survivors = {p: tuple(game.strategies[p]) for p in game.players}
    while True:
        changed = False
        for player in game.players:
            others = [p for p in game.players if p != player]
            opposing = list(itertools.product(*(survivors[p] for p in others)))
            kept = []
            for s in survivors[player]:
                if beliefs == CORRELATED or len(game.players) == 2:
                    ok = _best_response_belief(
                        game, player, s, survivors[player], opposing) is not None
                else:
                    ok = _best_response_product(
                        game, player, s, survivors[player], survivors)
                if ok:
                    kept.append(s)
            if tuple(kept) != survivors[player]:
                survivors[player] = tuple(kept)
                changed = True
        if not changed:
            return survivors


def rationalizable_set(game: NormalFormGame,
                       beliefs: str = CORRELATED) -> Dict[str, Tuple[str, ...]]:
    """Iterated elimination of never-best-responses to a fixed point."""
    if beliefs not in (CORRELATED, INDEPENDENT):
        raise ValueError(f"unknown belief mode {beliefs!r}")
    return _eliminate(game, beliefs)


@dataclass
class RationalizabilityWitness:
    context: Context
    beliefs: Dict[str, Dict[str, Dict[Tuple[str, ...], Fraction]]]


def rationalizable_via_kb(game: NormalFormGame, player: str,
                          strategy: str) -> Optional[Context]:
    """Witness context under which the type protocol realizes the
    equilibrium program and the strategy is actually played, or None if the
    strategy does not survive elimination."""
    survivors = rationalizable_set(game, CORRELATED)
    if strategy not in survivors[player]:
        return None

    # one supporting belief per surviving strategy, against the fixed point
    supports: Dict[str, Dict[str, Dict[Tuple[str, ...], Fraction]]] = {}
    for p in game.players:
        others = [q for q in game.players if q != p]
        opposing = list(itertools.product(*(survivors[q] for q in others)))
        supports[p] = {}
        for s in survivors[p]:
            belief = _best_response_belief(game, p, s, survivors[p], opposing)
            if belief is None:
                raise RuntimeError(
                    f"fixed point inconsistency at {p}/{s}")
            supports[p][s] = belief

    g0 = tuple(itertools.product(*(survivors[p] for p in game.players)))
    priors = {}
    for p in game.players:
        idx = game.player_index(p)
        weight = Fraction(1, len(survivors[p]))
        mu = {state: Fraction(0) for state in g0}
        for s in survivors[p]:
            for combo, mass in supports[p][s].items():
                state = combo[:idx] + (s,) + combo[idx:]
                mu[state] += weight * mass
        priors[p] = mu

    context = make_context(game, None, per_player=priors, g0=g0)
    verdict = implements(type_protocol(game), eqnf(game), context)
    if not verdict.ok:
        raise RuntimeError(
            f"witness context fails the program check: "
            f"{verdict.witness.describe()}")
    return context


# ---------------------------------------------------------------------------
# sequential and perfect equilibrium
# ---------------------------------------------------------------------------

@dataclass
class SequentialResult:
    ok: bool
    beliefs: Optional[BeliefSystem]
    witness: Optional[Witness] = None

    def __bool__(self):
        return self.ok


def _node_masses(game: ExtensiveFormGame, prior) -> Dict[str, object]:
    """Unconditional reach probability of every node under the prior over
    joint type states, with the type protocol in force."""
    masses: Dict[str, object] = {}
    for initial, mass in prior.items():
        if is_zero(mass):
            continue
        decoded = {p: game.decode_pure(p, s)
                   for p, s in zip(game.players, initial)}
        stack = [(game.root, mass)]
        while stack:
            node_id, m = stack.pop()
            masses[node_id] = masses.get(node_id, 0) + m
            node = game.nodes[node_id]
            kind = type(node).__name__
            if kind == "Decision":
                action = decoded[node.player][node.infoset]
                stack.append((node.child(action), m))
            elif kind == "Chance":
                for child, prob in node.dist:
                    stack.append((child, m * prob))
    return masses


def _belief_system(game: ExtensiveFormGame, prior) -> BeliefSystem:
    masses = _node_masses(game, prior)
    beliefs = {}
    for infoset, (_, nodes) in game.infosets().items():
        total = sum((masses.get(h, 0) for h in nodes), start=Fraction(0))
        beliefs[infoset] = {
            h: standard_part(masses.get(h, Fraction(0)) / total)
            for h in nodes}
    return BeliefSystem(beliefs)


def _tremble_check(game: ExtensiveFormGame,
                   profile: Dict[str, BehavioralStrategy],
                   trembles: Optional[TrembleSpec], mode: str):
    if not all(has_perfect_recall(game).values()):
        raise ValueError("sequential analysis requires perfect recall")
    trembles = trembles if trembles is not None else TrembleSpec()
    prior = tremble_prior(game, profile, trembles)
    context = make_context(game, prior)
    verdict = implements(type_protocol(game), eqef(game), context, mode=mode)
    return verdict, prior


def check_sequential(game: ExtensiveFormGame,
                     profile: Dict[str, BehavioralStrategy],
                     trembles: Optional[TrembleSpec] = None
                     ) -> SequentialResult:
    """Standard-part optimality at every information set under the supplied
    tremble prior; also reports the induced (consistent) belief system."""
    verdict, prior = _tremble_check(game, profile, trembles, "standard")
    beliefs = _belief_system(game, prior)
    return SequentialResult(verdict.ok, beliefs, verdict.witness)


def check_perfect(game: ExtensiveFormGame,
                  profile: Dict[str, BehavioralStrategy],
                  trembles: Optional[TrembleSpec] = None) -> Verdict:
    """Exact (infinitesimal-sensitive) optimality under the tremble prior."""
    verdict, _ = _tremble_check(game, profile, trembles, "exact")
    return verdict


def induced_mixed_profile(game: ExtensiveFormGame,
                          profile: Dict[str, BehavioralStrategy]) -> JointMixed:
    """The mixed profile a behavioral profile induces on the strategic form."""
    return {p: behavioral_to_mixed(game, profile[p]) for p in game.players}
