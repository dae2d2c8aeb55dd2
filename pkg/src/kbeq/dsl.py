"""Textual format for games, profiles, measures, trembles, and formulas.

A document is a sequence of named items behind an optional `kbeq 1` header.
`parse` never raises on bad input: it returns the items it could read plus
positioned diagnostics.  `render` prints the canonical form, and
`parse(render(parse(t)))` is structurally equal to `parse(t)`.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from . import epistemic
from .games import (BehavioralStrategy, Chance, Decision, ExtensiveFormGame,
                    Leaf, MixedStrategy, NormalFormGame)
from .solutions import CorrelatedDistribution
from .systems import TrembleSpec

FORMAT_VERSION = 1

# diagnostic codes
SYNTAX = "syntax"
UNKNOWN_REF = "unknown-ref"
DUPLICATE = "duplicate"


@dataclass(frozen=True)
class Diagnostic:
    code: str
    message: str
    line: int
    col: int

    def describe(self) -> str:
        return f"{self.line}:{self.col}: {self.code}: {self.message}"


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeafTarget:
    payoffs: Tuple[Fraction, ...]


Target = Union[str, LeafTarget]


@dataclass(frozen=True)
class NormalGameDecl:
    players: Tuple[str, ...]
    strategies: Tuple[Tuple[str, Tuple[str, ...]], ...]
    payoffs: Tuple[Tuple[Tuple[str, ...], Tuple[Fraction, ...]], ...]


@dataclass(frozen=True)
class ChanceDecl:
    node_id: str
    branches: Tuple[Tuple[Fraction, Target], ...]


@dataclass(frozen=True)
class DecisionDecl:
    node_id: str
    player: str
    infoset: str
    edges: Tuple[Tuple[str, Target], ...]


@dataclass(frozen=True)
class ExtensiveGameDecl:
    players: Tuple[str, ...]
    nodes: Tuple[Union[ChanceDecl, DecisionDecl], ...]
    root: str


@dataclass(frozen=True)
class ProfileDecl:
    game: str
    # per player: either strategy -> prob (mixed) or infoset -> action -> prob
    entries: Tuple[Tuple[str, Union[Tuple[Tuple[str, Fraction], ...],
                                    Tuple[Tuple[str, Tuple[Tuple[str, Fraction], ...]], ...]]], ...]
    behavioral: bool


@dataclass(frozen=True)
class MeasureDecl:
    game: str
    entries: Tuple[Tuple[Tuple[str, ...], Fraction], ...]


@dataclass(frozen=True)
class TrembleDecl:
    game: str
    default: Optional[int]
    entries: Tuple[Tuple[Tuple[str, str], int], ...]


@dataclass(frozen=True)
class FormulaDecl:
    game: str
    text: str


Payload = Union[NormalGameDecl, ExtensiveGameDecl, ProfileDecl, MeasureDecl,
                TrembleDecl, FormulaDecl]


@dataclass(frozen=True)
class Item:
    kind: str          # game | profile | measure | tremble | formula
    name: str
    payload: Payload
    line: int = field(compare=False, default=0)
    col: int = field(compare=False, default=0)


@dataclass(frozen=True)
class Document:
    items: Tuple[Item, ...]

    def find(self, name: str) -> Optional[Item]:
        for item in self.items:
            if item.name == name:
                return item
        return None


@dataclass
class ParseResult:
    document: Document
    diagnostics: List[Diagnostic]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


# ---------------------------------------------------------------------------
# tokenizer
# ---------------------------------------------------------------------------

_SYMBOLS = ("->", "<=", "{", "}", "(", ")", "[", "]", ":", ";", ",", "=",
            "/", "-", "!", "&")


@dataclass(frozen=True)
class Token:
    kind: str      # ident | num | str | sym | eof
    value: str
    line: int
    col: int


class _Tokenizer:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.line = 1
        self.col = 1
        self.diagnostics: List[Diagnostic] = []

    def _advance(self, n: int = 1):
        for _ in range(n):
            if self.pos < len(self.text) and self.text[self.pos] == "\n":
                self.line += 1
                self.col = 1
            else:
                self.col += 1
            self.pos += 1

    def tokens(self) -> List[Token]:
        out: List[Token] = []
        text = self.text
        while self.pos < len(text):
            ch = text[self.pos]
            if ch in " \t\r\n":
                self._advance()
                continue
            if ch == "#":
                while self.pos < len(text) and text[self.pos] != "\n":
                    self._advance()
                continue
            line, col = self.line, self.col
            if ch == '"':
                end = text.find('"', self.pos + 1)
                if end == -1 or "\n" in text[self.pos + 1:end]:
                    self.diagnostics.append(Diagnostic(
                        SYNTAX, "unterminated string literal", line, col))
                    self._advance(len(text) - self.pos)
                    break
                value = text[self.pos + 1:end]
                self._advance(end + 1 - self.pos)
                out.append(Token("str", value, line, col))
                continue
            if ch.isalpha() or ch == "_":
                start = self.pos
                while self.pos < len(text) and (text[self.pos].isalnum()
                                                or text[self.pos] == "_"):
                    self._advance()
                out.append(Token("ident", text[start:self.pos], line, col))
                continue
            if ch.isdigit():
                start = self.pos
                while self.pos < len(text) and text[self.pos].isdigit():
                    self._advance()
                out.append(Token("num", text[start:self.pos], line, col))
                continue
            for sym in _SYMBOLS:
                if text.startswith(sym, self.pos):
                    self._advance(len(sym))
                    out.append(Token("sym", sym, line, col))
                    break
            else:
                self.diagnostics.append(Diagnostic(
                    SYNTAX, f"unexpected character {ch!r}", line, col))
                self._advance()
        out.append(Token("eof", "", self.line, self.col))
        return out


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

class _ParseError(Exception):
    def __init__(self, message: str, token: Token):
        self.diagnostic = Diagnostic(SYNTAX, message, token.line, token.col)
        super().__init__(message)


_ITEM_KEYWORDS = ("game", "profile", "measure", "tremble", "formula")


class _Parser:
    def __init__(self, tokens: List[Token]):
        self.tokens = tokens
        self.pos = 0
        self.diagnostics: List[Diagnostic] = []

    # -- token plumbing -----------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            want = value if value is not None else kind
            got = tok.value if tok.value else tok.kind
            raise _ParseError(f"expected {want!r}, found {got!r}", tok)
        return self.next()

    def accept(self, kind: str, value: Optional[str] = None) -> Optional[Token]:
        tok = self.peek()
        if tok.kind == kind and (value is None or tok.value == value):
            return self.next()
        return None

    # -- primitives ---------------------------------------------------------

    def number(self) -> Fraction:
        sign = -1 if self.accept("sym", "-") else 1
        tok = self.expect("num")
        value = Fraction(int(tok.value))
        if self.accept("sym", "/"):
            den = self.expect("num")
            if int(den.value) == 0:
                raise _ParseError("zero denominator", den)
            value /= int(den.value)
        return sign * value

    def integer(self) -> int:
        tok = self.expect("num")
        return int(tok.value)

    def ident_list(self) -> Tuple[str, ...]:
        names = [self.expect("ident").value]
        while self.accept("sym", ","):
            names.append(self.expect("ident").value)
        return tuple(names)

    def joint(self) -> Tuple[str, ...]:
        self.expect("sym", "(")
        names = self.ident_list()
        self.expect("sym", ")")
        return names

    def payoff_tuple(self) -> Tuple[Fraction, ...]:
        self.expect("sym", "(")
        values = [self.number()]
        while self.accept("sym", ","):
            values.append(self.number())
        self.expect("sym", ")")
        return tuple(values)

    # -- items --------------------------------------------------------------

    def document(self) -> Document:
        if (self.peek().kind == "ident" and self.peek().value == "kbeq"):
            head = self.next()
            version = self.expect("num")
            if int(version.value) != FORMAT_VERSION:
                self.diagnostics.append(Diagnostic(
                    SYNTAX, f"unsupported format version {version.value}",
                    head.line, head.col))
        items: List[Item] = []
        names = set()
        while self.peek().kind != "eof":
            try:
                item = self.item()
            except _ParseError as err:
                self.diagnostics.append(err.diagnostic)
                self.recover()
                continue
            if item.name in names:
                self.diagnostics.append(Diagnostic(
                    DUPLICATE, f"duplicate item name {item.name!r}",
                    item.line, item.col))
            else:
                names.add(item.name)
                items.append(item)
        return Document(tuple(items))

    def recover(self):
        """Skip ahead to the next top-level item keyword."""
        depth = 0
        while self.peek().kind != "eof":
            tok = self.peek()
            if tok.kind == "sym" and tok.value == "{":
                depth += 1
            elif tok.kind == "sym" and tok.value == "}":
                depth = max(0, depth - 1)
            elif (depth == 0 and tok.kind == "ident"
                  and tok.value in _ITEM_KEYWORDS):
                return
            self.next()

    def item(self) -> Item:
        tok = self.expect("ident")
        if tok.value not in _ITEM_KEYWORDS:
            raise _ParseError(
                f"expected one of {', '.join(_ITEM_KEYWORDS)}", tok)
        name = self.expect("str").value
        if tok.value == "game":
            payload = self.game_body()
        else:
            self.expect("ident", "for")
            game = self.expect("str").value
            payload = {
                "profile": self.profile_body,
                "measure": self.measure_body,
                "tremble": self.tremble_body,
                "formula": self.formula_body,
            }[tok.value](game)
        return Item(tok.value, name, payload, tok.line, tok.col)

    def game_body(self) -> Union[NormalGameDecl, ExtensiveGameDecl]:
        form = self.expect("ident")
        if form.value == "normal":
            return self.normal_body()
        if form.value == "extensive":
            return self.extensive_body()
        raise _ParseError("expected 'normal' or 'extensive'", form)

    def normal_body(self) -> NormalGameDecl:
        self.expect("sym", "{")
        self.expect("ident", "players")
        self.expect("sym", ":")
        players = self.ident_list()
        self.expect("sym", ";")
        strategies: List[Tuple[str, Tuple[str, ...]]] = []
        while self.peek().kind == "ident" and self.peek().value == "strategies":
            self.next()
            player = self.expect("ident").value
            self.expect("sym", ":")
            strategies.append((player, self.ident_list()))
            self.expect("sym", ";")
        payoffs: List[Tuple[Tuple[str, ...], Tuple[Fraction, ...]]] = []
        while self.peek().kind == "ident" and self.peek().value == "payoff":
            self.next()
            joint = self.joint()
            self.expect("sym", "=")
            payoffs.append((joint, self.payoff_tuple()))
            self.expect("sym", ";")
        self.expect("sym", "}")
        return NormalGameDecl(players, tuple(strategies), tuple(payoffs))

    def target(self) -> Target:
        tok = self.expect("ident")
        if tok.value == "leaf":
            return LeafTarget(self.payoff_tuple())
        return tok.value

    def extensive_body(self) -> ExtensiveGameDecl:
        self.expect("sym", "{")
        self.expect("ident", "players")
        self.expect("sym", ":")
        players = self.ident_list()
        self.expect("sym", ";")
        nodes: List[Union[ChanceDecl, DecisionDecl]] = []
        root = None
        while not self.accept("sym", "}"):
            tok = self.expect("ident")
            if tok.value == "chance":
                node_id = self.expect("ident").value
                self.expect("sym", "{")
                branches = []
                while not self.accept("sym", "}"):
                    prob = self.number()
                    self.expect("sym", "->")
                    branches.append((prob, self.target()))
                    self.expect("sym", ";")
                nodes.append(ChanceDecl(node_id, tuple(branches)))
            elif tok.value == "node":
                node_id = self.expect("ident").value
                self.expect("ident", "player")
                player = self.expect("ident").value
                self.expect("ident", "infoset")
                infoset = self.expect("ident").value
                self.expect("sym", "{")
                edges = []
                while not self.accept("sym", "}"):
                    action = self.expect("ident").value
                    self.expect("sym", "->")
                    edges.append((action, self.target()))
                    self.expect("sym", ";")
                nodes.append(DecisionDecl(node_id, player, infoset,
                                          tuple(edges)))
            elif tok.value == "root":
                root = self.expect("ident").value
                self.expect("sym", ";")
            else:
                raise _ParseError("expected 'chance', 'node' or 'root'", tok)
        if root is None:
            raise _ParseError("extensive game missing root declaration",
                              self.peek())
        return ExtensiveGameDecl(players, tuple(nodes), root)

    def _dist(self) -> Tuple[Tuple[str, Fraction], ...]:
        self.expect("sym", "{")
        entries = []
        while True:
            key = self.expect("ident").value
            self.expect("sym", ":")
            entries.append((key, self.number()))
            if not self.accept("sym", ","):
                break
        self.expect("sym", "}")
        return tuple(entries)

    def profile_body(self, game: str) -> ProfileDecl:
        self.expect("sym", "{")
        entries = []
        behavioral = None
        while not self.accept("sym", "}"):
            player = self.expect("ident").value
            self.expect("sym", ":")
            self.expect("sym", "{")
            first = self.expect("ident").value
            self.expect("sym", ":")
            nested = self.peek().kind == "sym" and self.peek().value == "{"
            if behavioral is None:
                behavioral = nested
            elif behavioral != nested:
                raise _ParseError(
                    "profile mixes flat and per-infoset entries", self.peek())
            if nested:
                rows = [(first, self._dist())]
                while self.accept("sym", ","):
                    key = self.expect("ident").value
                    self.expect("sym", ":")
                    rows.append((key, self._dist()))
            else:
                rows = [(first, self.number())]
                while self.accept("sym", ","):
                    key = self.expect("ident").value
                    self.expect("sym", ":")
                    rows.append((key, self.number()))
            self.expect("sym", "}")
            self.expect("sym", ";")
            entries.append((player, tuple(rows)))
        return ProfileDecl(game, tuple(entries), bool(behavioral))

    def measure_body(self, game: str) -> MeasureDecl:
        self.expect("sym", "{")
        entries = []
        while not self.accept("sym", "}"):
            joint = self.joint()
            self.expect("sym", ":")
            entries.append((joint, self.number()))
            self.expect("sym", ";")
        return MeasureDecl(game, tuple(entries))

    def tremble_body(self, game: str) -> TrembleDecl:
        self.expect("sym", "{")
        default = None
        entries = []
        while not self.accept("sym", "}"):
            if self.peek().kind == "ident" and self.peek().value == "default":
                self.next()
                self.expect("sym", ":")
                default = self.integer()
                self.expect("sym", ";")
                continue
            self.expect("sym", "(")
            infoset = self.expect("ident").value
            self.expect("sym", ",")
            action = self.expect("ident").value
            self.expect("sym", ")")
            self.expect("sym", ":")
            entries.append(((infoset, action), self.integer()))
            self.expect("sym", ";")
        return TrembleDecl(game, default, tuple(entries))

    def formula_body(self, game: str) -> FormulaDecl:
        """The body is re-lexed by the formula parser; capture it verbatim."""
        open_tok = self.expect("sym", "{")
        depth = 1
        parts = []
        while depth > 0:
            tok = self.next()
            if tok.kind == "eof":
                raise _ParseError("unterminated formula body", open_tok)
            if tok.kind == "sym" and tok.value == "{":
                depth += 1
            elif tok.kind == "sym" and tok.value == "}":
                depth -= 1
                if depth == 0:
                    break
            parts.append(tok.value)
        text = " ".join(parts)
        # validate the surface syntax right away for early diagnostics
        try:
            parse_formula(text)
        except FormulaSyntaxError as err:
            raise _ParseError(str(err), open_tok)
        return FormulaDecl(game, text)


def parse(text: str) -> ParseResult:
    tokenizer = _Tokenizer(text)
    tokens = tokenizer.tokens()
    parser = _Parser(tokens)
    document = parser.document()
    return ParseResult(document, tokenizer.diagnostics + parser.diagnostics)


# ---------------------------------------------------------------------------
# renderer
# ---------------------------------------------------------------------------

def _render_target(target: Target) -> str:
    if isinstance(target, LeafTarget):
        return "leaf(" + ", ".join(str(v) for v in target.payoffs) + ")"
    return target


def _render_item(item: Item) -> str:
    p = item.payload
    if isinstance(p, NormalGameDecl):
        lines = [f'game "{item.name}" normal {{',
                 "  players: " + ", ".join(p.players) + ";"]
        for player, strategies in p.strategies:
            lines.append(f"  strategies {player}: " + ", ".join(strategies) + ";")
        for joint, values in p.payoffs:
            lines.append("  payoff (" + ", ".join(joint) + ") = ("
                         + ", ".join(str(v) for v in values) + ");")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(p, ExtensiveGameDecl):
        lines = [f'game "{item.name}" extensive {{',
                 "  players: " + ", ".join(p.players) + ";"]
        for node in p.nodes:
            if isinstance(node, ChanceDecl):
                lines.append(f"  chance {node.node_id} {{")
                for prob, target in node.branches:
                    lines.append(f"    {prob} -> {_render_target(target)};")
            else:
                lines.append(f"  node {node.node_id} player {node.player} "
                             f"infoset {node.infoset} {{")
                for action, target in node.edges:
                    lines.append(f"    {action} -> {_render_target(target)};")
            lines.append("  }")
        lines.append(f"  root {p.root};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(p, ProfileDecl):
        lines = [f'profile "{item.name}" for "{p.game}" {{']
        for player, rows in p.entries:
            if p.behavioral:
                cells = ", ".join(
                    key + ": { " + ", ".join(f"{a}: {v}" for a, v in dist)
                    + " }" for key, dist in rows)
            else:
                cells = ", ".join(f"{key}: {v}" for key, v in rows)
            lines.append(f"  {player}: {{ {cells} }};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(p, MeasureDecl):
        lines = [f'measure "{item.name}" for "{p.game}" {{']
        for joint, value in p.entries:
            lines.append("  (" + ", ".join(joint) + f"): {value};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(p, TrembleDecl):
        lines = [f'tremble "{item.name}" for "{p.game}" {{']
        if p.default is not None:
            lines.append(f"  default: {p.default};")
        for (infoset, action), exponent in p.entries:
            lines.append(f"  ({infoset}, {action}): {exponent};")
        lines.append("}")
        return "\n".join(lines)
    if isinstance(p, FormulaDecl):
        return (f'formula "{item.name}" for "{p.game}" {{ {p.text} }}')
    raise TypeError(f"unknown payload {p!r}")


def render(document: Document) -> str:
    parts = ["kbeq 1", ""]
    parts.extend(_render_item(item) + "\n" for item in document.items)
    return "\n".join(parts)


# ---------------------------------------------------------------------------
# building domain objects
# ---------------------------------------------------------------------------

@dataclass
class Built:
    kind: str
    value: object
    game: Optional[str] = None     # referenced game name, where applicable


@dataclass
class BuildResult:
    objects: Dict[str, Built]
    diagnostics: List[Diagnostic]

    @property
    def ok(self) -> bool:
        return not self.diagnostics


def _build_normal(item: Item, diags: List[Diagnostic]) -> Optional[NormalFormGame]:
    decl: NormalGameDecl = item.payload
    strategies = dict(decl.strategies)
    for player in decl.players:
        if player not in strategies:
            diags.append(Diagnostic(
                UNKNOWN_REF, f"no strategies declared for player {player!r}",
                item.line, item.col))
            return None
    payoffs = {}
    for joint, values in decl.payoffs:
        if len(joint) != len(decl.players) or len(values) != len(decl.players):
            diags.append(Diagnostic(
                SYNTAX,
                f"payoff entry {joint} must list one strategy and one value "
                f"per player ({len(decl.players)} players)",
                item.line, item.col))
            return None
        for player, s in zip(decl.players, joint):
            if s not in strategies[player]:
                diags.append(Diagnostic(
                    UNKNOWN_REF, f"unknown strategy {s!r} for {player!r}",
                    item.line, item.col))
                return None
        payoffs[joint] = values
    missing = [j for j in itertools.product(
                   *(strategies[p] for p in decl.players))
               if tuple(j) not in payoffs]
    if missing:
        diags.append(Diagnostic(
            UNKNOWN_REF, f"missing payoff entry for {missing[0]}",
            item.line, item.col))
        return None
    return NormalFormGame(decl.players, strategies, payoffs, item.name)


def _build_extensive(item: Item,
                     diags: List[Diagnostic]) -> Optional[ExtensiveFormGame]:
    decl: ExtensiveGameDecl = item.payload
    nodes: Dict[str, object] = {}
    counter = [0]

    def place(target: Target) -> str:
        if isinstance(target, LeafTarget):
            if len(target.payoffs) != len(decl.players):
                diags.append(Diagnostic(
                    SYNTAX, f"leaf must list {len(decl.players)} payoffs",
                    item.line, item.col))
            counter[0] += 1
            leaf_id = f"_leaf{counter[0]}"
            nodes[leaf_id] = Leaf(target.payoffs)
            return leaf_id
        return target

    declared = set()
    for node in decl.nodes:
        if node.node_id in declared:
            diags.append(Diagnostic(
                DUPLICATE, f"duplicate node id {node.node_id!r}",
                item.line, item.col))
            return None
        declared.add(node.node_id)
        if isinstance(node, ChanceDecl):
            nodes[node.node_id] = Chance(
                tuple((place(t), prob) for prob, t in node.branches))
        else:
            if node.player not in decl.players:
                diags.append(Diagnostic(
                    UNKNOWN_REF, f"unknown player {node.player!r}",
                    item.line, item.col))
                return None
            nodes[node.node_id] = Decision(
                node.player, node.infoset,
                tuple((a, place(t)) for a, t in node.edges))
    referenced = set()
    for node_obj in list(nodes.values()):
        if isinstance(node_obj, Chance):
            referenced.update(c for c, _ in node_obj.dist)
        elif isinstance(node_obj, Decision):
            referenced.update(c for _, c in node_obj.actions)
    for ref in sorted(referenced):
        if ref not in nodes:
            diags.append(Diagnostic(
                UNKNOWN_REF, f"unknown node id {ref!r}", item.line, item.col))
            return None
    if decl.root not in nodes:
        diags.append(Diagnostic(
            UNKNOWN_REF, f"unknown root node {decl.root!r}",
            item.line, item.col))
        return None
    return ExtensiveFormGame(players=decl.players, nodes=nodes,
                             root=decl.root, name=item.name)


def _build_profile(item: Item, game, diags: List[Diagnostic]):
    decl: ProfileDecl = item.payload
    try:
        if isinstance(game, NormalFormGame):
            if decl.behavioral:
                diags.append(Diagnostic(
                    SYNTAX, "per-infoset profile given for a normal-form game",
                    item.line, item.col))
                return None
            out = {}
            for player, rows in decl.entries:
                if player not in game.players:
                    diags.append(Diagnostic(
                        UNKNOWN_REF, f"unknown player {player!r}",
                        item.line, item.col))
                    return None
                for s, _ in rows:
                    if s not in game.strategies[player]:
                        diags.append(Diagnostic(
                            UNKNOWN_REF,
                            f"unknown strategy {s!r} for {player!r}",
                            item.line, item.col))
                        return None
                out[player] = MixedStrategy(player, dict(rows))
        else:
            infosets = game.infosets()
            out = {}
            for player, rows in decl.entries:
                if player not in game.players:
                    diags.append(Diagnostic(
                        UNKNOWN_REF, f"unknown player {player!r}",
                        item.line, item.col))
                    return None
                if not decl.behavioral:
                    # single-infoset shorthand: keys are the actions there
                    own = game.player_infosets(player)
                    if len(own) != 1:
                        diags.append(Diagnostic(
                            SYNTAX,
                            f"flat profile for {player!r} needs exactly one "
                            "information set", item.line, item.col))
                        return None
                    rows = ((own[0], rows),)
                for infoset, dist in rows:
                    if (infoset not in infosets
                            or infosets[infoset][0] != player):
                        diags.append(Diagnostic(
                            UNKNOWN_REF,
                            f"unknown information set {infoset!r} for "
                            f"{player!r}", item.line, item.col))
                        return None
                    legal = game.infoset_actions(infoset)
                    for action, _ in dist:
                        if action not in legal:
                            diags.append(Diagnostic(
                                UNKNOWN_REF,
                                f"unknown action {action!r} at {infoset!r}",
                                item.line, item.col))
                            return None
                out[player] = BehavioralStrategy(
                    player, {i: dict(d) for i, d in rows})
        missing = [p for p in game.players if p not in out]
        if missing:
            diags.append(Diagnostic(
                UNKNOWN_REF, f"profile missing player {missing[0]!r}",
                item.line, item.col))
            return None
        return out
    except ValueError as err:
        diags.append(Diagnostic(SYNTAX, str(err), item.line, item.col))
        return None


def _build_measure(item: Item, game, diags: List[Diagnostic]):
    decl: MeasureDecl = item.payload
    if not isinstance(game, NormalFormGame):
        diags.append(Diagnostic(
            SYNTAX, "measures require a normal-form game",
            item.line, item.col))
        return None
    for joint, _ in decl.entries:
        if len(joint) != len(game.players):
            diags.append(Diagnostic(
                SYNTAX, f"joint strategy {joint} has wrong arity",
                item.line, item.col))
            return None
        for player, s in zip(game.players, joint):
            if s not in game.strategies[player]:
                diags.append(Diagnostic(
                    UNKNOWN_REF, f"unknown strategy {s!r} for {player!r}",
                    item.line, item.col))
                return None
    try:
        return CorrelatedDistribution(dict(decl.entries))
    except ValueError as err:
        diags.append(Diagnostic(SYNTAX, str(err), item.line, item.col))
        return None


def _build_tremble(item: Item, game, diags: List[Diagnostic]):
    decl: TrembleDecl = item.payload
    if not isinstance(game, ExtensiveFormGame):
        diags.append(Diagnostic(
            SYNTAX, "trembles require an extensive-form game",
            item.line, item.col))
        return None
    infosets = game.infosets()
    for (infoset, action), _ in decl.entries:
        if infoset not in infosets:
            diags.append(Diagnostic(
                UNKNOWN_REF, f"unknown information set {infoset!r}",
                item.line, item.col))
            return None
        if action not in game.infoset_actions(infoset):
            diags.append(Diagnostic(
                UNKNOWN_REF, f"unknown action {action!r} at {infoset!r}",
                item.line, item.col))
            return None
    try:
        return TrembleSpec(dict(decl.entries),
                           decl.default if decl.default is not None else 1)
    except ValueError as err:
        diags.append(Diagnostic(SYNTAX, str(err), item.line, item.col))
        return None


def build(document: Document) -> BuildResult:
    """Resolve a document's items to domain objects, checking references."""
    diags: List[Diagnostic] = []
    objects: Dict[str, Built] = {}
    for item in document.items:
        if item.kind != "game":
            continue
        if isinstance(item.payload, NormalGameDecl):
            game = _build_normal(item, diags)
        else:
            game = _build_extensive(item, diags)
        if game is not None:
            objects[item.name] = Built("game", game)
    for item in document.items:
        if item.kind == "game":
            continue
        game_name = item.payload.game
        ref = objects.get(game_name)
        if ref is None or ref.kind != "game":
            diags.append(Diagnostic(
                UNKNOWN_REF, f"unknown game {game_name!r}",
                item.line, item.col))
            continue
        game = ref.value
        if item.kind == "profile":
            value = _build_profile(item, game, diags)
        elif item.kind == "measure":
            value = _build_measure(item, game, diags)
        elif item.kind == "tremble":
            value = _build_tremble(item, game, diags)
        else:
            value = item.payload.text
        if value is not None:
            objects[item.name] = Built(item.kind, value, game_name)
    return BuildResult(objects, diags)


# ---------------------------------------------------------------------------
# formula surface syntax
# ---------------------------------------------------------------------------

class FormulaSyntaxError(ValueError):
    pass


@dataclass(frozen=True)
class Do:
    """Surface 'do' before the game form is known; resolved in resolve_formula."""
    player: str
    name: str


class _FormulaParser:
    def __init__(self, text: str):
        self.tokens = _Tokenizer(text).tokens()
        self.pos = 0

    def peek(self) -> Token:
        return self.tokens[self.pos]

    def next(self) -> Token:
        tok = self.tokens[self.pos]
        if tok.kind != "eof":
            self.pos += 1
        return tok

    def expect(self, kind: str, value: Optional[str] = None) -> Token:
        tok = self.peek()
        if tok.kind != kind or (value is not None and tok.value != value):
            raise FormulaSyntaxError(
                f"expected {value or kind!r}, found {tok.value or tok.kind!r}")
        return self.next()

    def bracketed_player(self) -> str:
        self.expect("sym", "[")
        player = self.expect("ident").value
        self.expect("sym", "]")
        return player

    def number(self) -> Fraction:
        sign = -1 if (self.peek().kind == "sym"
                      and self.peek().value == "-" and self.next()) else 1
        tok = self.expect("num")
        value = Fraction(int(tok.value))
        if self.peek().kind == "sym" and self.peek().value == "/":
            self.next()
            value /= int(self.expect("num").value)
        return sign * value

    def formula(self):
        parts = [self.unary()]
        while self.peek().kind == "sym" and self.peek().value == "&":
            self.next()
            parts.append(self.unary())
        return parts[0] if len(parts) == 1 else epistemic.And(tuple(parts))

    def unary(self):
        if self.peek().kind == "sym" and self.peek().value == "!":
            self.next()
            return epistemic.Not(self.unary())
        return self.atom()

    def do_atom(self) -> Do:
        self.expect("ident", "do")
        player = self.bracketed_player()
        self.expect("sym", "(")
        name = self.expect("ident").value
        self.expect("sym", ")")
        return Do(player, name)

    def atom(self):
        tok = self.peek()
        if tok.kind == "sym" and tok.value == "(":
            self.next()
            inner = self.formula()
            self.expect("sym", ")")
            return inner
        if tok.kind != "ident":
            raise FormulaSyntaxError(f"unexpected {tok.value or tok.kind!r}")
        if tok.value == "B":
            self.next()
            player = self.bracketed_player()
            self.expect("sym", "(")
            body = self.formula()
            self.expect("sym", ")")
            return epistemic.Bel(player, body)
        if tok.value == "do":
            return self.do_atom()
        if tok.value == "cf":
            self.next()
            self.expect("sym", "(")
            antecedent = self.do_atom()
            self.expect("sym", ",")
            body = self.formula()
            self.expect("sym", ")")
            return epistemic.CF(antecedent, body)
        if tok.value == "EU":
            self.next()
            player = self.bracketed_player()
            op = self.expect("sym")
            if op.value == "<":   # tolerate split '<=' from re-lexed text
                self.expect("sym", "=")
                op_value = "<="
            else:
                op_value = op.value
            if op_value not in ("=", "<="):
                raise FormulaSyntaxError(f"expected '=' or '<=' after EU")
            if self.peek().kind == "ident":
                value = epistemic.Var(self.next().value)
            else:
                value = self.number()
            cls = epistemic.EUeq if op_value == "=" else epistemic.EUle
            return cls(player, value)
        if tok.value == "forall":
            self.next()
            var = self.expect("ident").value
            self.expect("sym", "(")
            body = self.formula()
            self.expect("sym", ")")
            player = _first_eu_player(body, var)
            if player is None:
                raise FormulaSyntaxError(
                    f"quantified variable {var!r} is never used in an EU test")
            return epistemic.ForallEU(player, var, body)
        raise FormulaSyntaxError(f"unexpected identifier {tok.value!r}")


def _first_eu_player(formula, var: str) -> Optional[str]:
    """The player whose expected utility binds a quantified variable."""
    if isinstance(formula, (epistemic.EUeq, epistemic.EUle)):
        if isinstance(formula.value, epistemic.Var) and formula.value.name == var:
            return formula.player
        return None
    if isinstance(formula, epistemic.And):
        for part in formula.parts:
            player = _first_eu_player(part, var)
            if player is not None:
                return player
        return None
    for attr in ("body",):
        if hasattr(formula, attr):
            return _first_eu_player(getattr(formula, attr), var)
    return None


def parse_formula(text: str):
    """Parse the surface syntax into the formula AST ('do' still unresolved)."""
    parser = _FormulaParser(text)
    result = parser.formula()
    if parser.peek().kind != "eof":
        tok = parser.peek()
        raise FormulaSyntaxError(f"trailing input at {tok.value!r}")
    return result


def resolve_formula(formula, game):
    """Replace surface Do nodes with DoStrat (normal) or DoMove (extensive)."""
    cls = (epistemic.DoStrat if isinstance(game, NormalFormGame)
           else epistemic.DoMove)
    if isinstance(formula, Do):
        return cls(formula.player, formula.name)
    if isinstance(formula, epistemic.Bel):
        return epistemic.Bel(formula.player,
                             resolve_formula(formula.body, game))
    if isinstance(formula, epistemic.Not):
        return epistemic.Not(resolve_formula(formula.body, game))
    if isinstance(formula, epistemic.And):
        return epistemic.And(tuple(resolve_formula(p, game)
                                   for p in formula.parts))
    if isinstance(formula, epistemic.CF):
        return epistemic.CF(resolve_formula(formula.antecedent, game),
                            resolve_formula(formula.body, game))
    if isinstance(formula, epistemic.ForallEU):
        return epistemic.ForallEU(formula.player, formula.var,
                                  resolve_formula(formula.body, game))
    return formula
