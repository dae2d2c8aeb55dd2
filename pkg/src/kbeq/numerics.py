"""Exact arithmetic: rationals, the ordered field Q(eps), and exact LP feasibility.

Every quantity in the engine is either a ``fractions.Fraction`` or an
:class:`EpsNum`, an element of the field of rational functions in a single
positive infinitesimal ``eps``.  Nothing in this package touches floats.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

Number = Union[Fraction, "EpsNum"]


# ---------------------------------------------------------------------------
# polynomials in eps, represented as tuples of Fractions indexed by degree
# ---------------------------------------------------------------------------

def _ptrim(cs):
    cs = list(cs)
    while cs and cs[-1] == 0:
        cs.pop()
    return tuple(cs)


def _padd(a, b):
    n = max(len(a), len(b))
    return _ptrim([(a[i] if i < len(a) else 0) + (b[i] if i < len(b) else 0)
                   for i in range(n)])


def _pneg(a):
    return tuple(-c for c in a)


def _psub(a, b):
    return _padd(a, _pneg(b))


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        for j, cb in enumerate(b):
            out[i + j] += ca * cb
    return _ptrim(out)


def _pdivmod(a, b):
    """Exact polynomial long division of a by b (b nonzero)."""
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    while len(r) >= len(b) and _ptrim(r):
        r = list(_ptrim(r))
        if len(r) < len(b):
            break
        k = len(r) - len(b)
        c = r[-1] / b[-1]
        q[k] = c
        for i, cb in enumerate(b):
            r[k + i] -= c * cb
        r = list(_ptrim(r))
    return _ptrim(q), _ptrim(r)


def _pgcd(a, b):
    while b:
        _, r = _pdivmod(a, b)
        a, b = b, r
    return a


def _plow(a):
    """(degree, coefficient) of the lowest-degree nonzero term, or None."""
    for i, c in enumerate(a):
        if c != 0:
            return i, c
    return None


@dataclass(frozen=True)
class EpsPoly:
    """Polynomial in eps with rational coefficients, trailing zeros trimmed."""

    coeffs: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "coeffs",
                           _ptrim(Fraction(c) for c in self.coeffs))

    @property
    def is_zero(self):
        return not self.coeffs


# ---------------------------------------------------------------------------
# the ordered field
# ---------------------------------------------------------------------------

class EpsNum:
    """Ratio of polynomials in eps, normalized to a canonical representative.

    The order is the one induced by treating eps as a positive infinitesimal:
    the sign of a nonzero element is the sign of the lowest-degree nonzero
    coefficient of its numerator, once the denominator's lowest-degree
    coefficient has been scaled to 1.  Under this order 0 < eps < r for every
    positive rational r.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Sequence = (), den: Sequence = (1,)):
        num = _ptrim(Fraction(c) for c in num)
        den = _ptrim(Fraction(c) for c in den)
        if not den:
            raise ZeroDivisionError("EpsNum with zero denominator")
        if num:
            g = _pgcd(num, den)
            num, _ = _pdivmod(num, g)
            den, _ = _pdivmod(den, g)
        # scale so the lowest-degree nonzero coefficient of den is exactly 1
        _, c = _plow(den)
        num = tuple(x / c for x in num)
        den = tuple(x / c for x in den)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    # -- construction helpers ------------------------------------------------

    @staticmethod
    def from_rational(q) -> "EpsNum":
        return EpsNum((Fraction(q),))

    @staticmethod
    def _coerce(x):
        if isinstance(x, EpsNum):
            return x
        if isinstance(x, (int, Fraction)):
            return EpsNum.from_rational(x)
        return NotImplemented

    # -- field operations ----------------------------------------------------

    def __add__(self, other):
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsNum(_padd(_pmul(self.num, o.den), _pmul(o.num, self.den)),
                      _pmul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return EpsNum(_pneg(self.num), self.den)

    def __sub__(self, other):
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return EpsNum(_pmul(self.num, o.num), _pmul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        if not o.num:
            raise ZeroDivisionError("division by zero EpsNum")
        return EpsNum(_pmul(self.num, o.den), _pmul(self.den, o.num))

    def __rtruediv__(self, other):
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return o / self

    def __pow__(self, n: int):
        if n < 0:
            return EpsNum((1,)) / self ** (-n)
        out = EpsNum((1,))
        for _ in range(n):
            out = out * self
        return out

    # -- order ---------------------------------------------------------------

    def sign(self) -> int:
        low = _plow(self.num)
        if low is None:
            return 0
        return 1 if low[1] > 0 else -1

    def _cmp(self, other) -> int:
        o = EpsNum._coerce(other)
        if o is NotImplemented:
            return NotImplemented
        return (self - o).sign()

    def __eq__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is NotImplemented else c >= 0

    def __hash__(self):
        if self.is_rational:
            return hash(self.as_rational())
        return hash((self.num, self.den))

    def __bool__(self):
        return bool(self.num)

    # -- structure -----------------------------------------------------------

    @property
    def is_rational(self):
        return len(self.num) <= 1 and len(self.den) <= 1

    def as_rational(self) -> Fraction:
        if not self.is_rational:
            raise ValueError(f"not a rational constant: {self}")
        if not self.num:
            return Fraction(0)
        return self.num[0] / self.den[0]

    @property
    def is_finite(self):
        if not self.num:
            return True
        return _plow(self.num)[0] >= _plow(self.den)[0]

    def standard_part(self) -> Fraction:
        """The degree-0 coefficient of the power-series expansion."""
        if not self.num:
            return Fraction(0)
        ordn = _plow(self.num)[0]
        ordd = _plow(self.den)[0]
        if ordn < ordd:
            raise ValueError(f"no standard part: {self} is infinite")
        if ordn > ordd:
            return Fraction(0)
        return self.num[ordn]  # den's lowest coefficient is normalized to 1

    def __repr__(self):
        return f"EpsNum({format_number(self)!r})"

    def __str__(self):
        return format_number(self)


EPS = EpsNum((0, 1))
ZERO = EpsNum()
ONE = EpsNum((1,))


def as_number(x) -> Number:
    """Coerce an int/Fraction/EpsNum, collapsing constant EpsNums to Fraction."""
    if isinstance(x, EpsNum):
        return x.as_rational() if x.is_rational else x
    return Fraction(x)


def standard_part(x) -> Fraction:
    if isinstance(x, EpsNum):
        return x.standard_part()
    return Fraction(x)


def is_zero(x) -> bool:
    if isinstance(x, EpsNum):
        return not x.num
    return x == 0


def compare(a, b) -> int:
    """-1, 0, or 1 according to the field order."""
    if isinstance(a, EpsNum) or isinstance(b, EpsNum):
        return EpsNum._coerce(a)._cmp(b)
    return (a > b) - (a < b)


# ---------------------------------------------------------------------------
# literal syntax: integers, p/q, and eps-expressions like (1-eps)/(1+eps)
# ---------------------------------------------------------------------------

class NumberSyntaxError(ValueError):
    pass


def _tokenize_num(text):
    toks = []
    i = 0
    while i < len(text):
        c = text[i]
        if c.isspace():
            i += 1
        elif c.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(("int", text[i:j]))
            i = j
        elif text.startswith("eps", i):
            toks.append(("eps", "eps"))
            i += 3
        elif c in "+-*/^()":
            toks.append((c, c))
            i += 1
        else:
            raise NumberSyntaxError(f"unexpected character {c!r} in number literal")
    return toks


class _NumParser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0] if self.pos < len(self.toks) else None

    def take(self, kind=None):
        if self.pos >= len(self.toks):
            raise NumberSyntaxError("unexpected end of number literal")
        k, v = self.toks[self.pos]
        if kind is not None and k != kind:
            raise NumberSyntaxError(f"expected {kind!r}, got {v!r}")
        self.pos += 1
        return v

    def expr(self):
        t = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()
            u = self.term()
            t = t + u if op == "+" else t - u
        return t

    def term(self):
        t = self.factor()
        while self.peek() in ("*", "/"):
            op = self.take()
            u = self.factor()
            t = t * u if op == "*" else t / u
        return t

    def factor(self):
        if self.peek() == "-":
            self.take()
            return -self.factor()
        if self.peek() == "+":
            self.take()
            return self.factor()
        a = self.atom()
        if self.peek() == "^":
            self.take()
            neg = False
            if self.peek() == "-":
                self.take()
                neg = True
            n = int(self.take("int"))
            a = a ** (-n if neg else n)
        return a

    def atom(self):
        k = self.peek()
        if k == "int":
            return EpsNum.from_rational(int(self.take()))
        if k == "eps":
            self.take()
            return EPS
        if k == "(":
            self.take()
            e = self.expr()
            self.take(")")
            return e
        raise NumberSyntaxError(f"unexpected token in number literal")


def parse_number(text: str) -> Number:
    """Parse an integer, p/q, or eps-expression.  Exact; never a float."""
    p = _NumParser(_tokenize_num(text))
    val = p.expr()
    if p.pos != len(p.toks):
        raise NumberSyntaxError(f"trailing input in number literal: {text!r}")
    return as_number(val)


def _format_poly(cs):
    if not cs:
        return "0"
    parts = []
    for deg, c in enumerate(cs):
        if c == 0:
            continue
        if deg == 0:
            p = str(c)
        else:
            e = "eps" if deg == 1 else f"eps^{deg}"
            if c == 1:
                p = e
            elif c == -1:
                p = f"-{e}"
            else:
                p = f"{c}*{e}"
        parts.append(p)
    out = parts[0]
    for p in parts[1:]:
        out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
    return out


def format_number(x) -> str:
    if isinstance(x, EpsNum):
        if x.is_rational:
            return str(x.as_rational())
        n = _format_poly(x.num)
        d = _format_poly(x.den)
        if x.den == (Fraction(1),):
            return n
        npart = n if len([c for c in x.num if c != 0]) <= 1 else f"({n})"
        return f"{npart}/({d})"
    return str(Fraction(x))


# ---------------------------------------------------------------------------
# exact linear-program feasibility
# ---------------------------------------------------------------------------

LE, EQ, GE = "<=", "=", ">="


@dataclass
class LinearSystem:
    """A set of exact linear constraints over rational variables.

    constraints: list of (coefficient vector, relation, bound); relations are
    "<=", "=", ">=".  nonneg marks which variables are sign-constrained.
    """

    num_vars: int
    constraints: list = field(default_factory=list)
    nonneg: tuple = ()

    def __post_init__(self):
        if not self.nonneg:
            self.nonneg = tuple(True for _ in range(self.num_vars))
        for coeffs, rel, _bound in self.constraints:
            if len(coeffs) != self.num_vars:
                raise ValueError("coefficient vector length mismatch")
            if rel not in (LE, EQ, GE):
                raise ValueError(f"bad relation {rel!r}")

    def add(self, coeffs, rel, bound):
        coeffs = tuple(Fraction(c) for c in coeffs)
        if len(coeffs) != self.num_vars:
            raise ValueError("coefficient vector length mismatch")
        self.constraints.append((coeffs, rel, Fraction(bound)))

    def satisfies(self, x) -> bool:
        if len(x) != self.num_vars:
            return False
        for xi, nn in zip(x, self.nonneg):
            if nn and xi < 0:
                return False
        for coeffs, rel, bound in self.constraints:
            lhs = sum(c * xi for c, xi in zip(coeffs, x))
            if rel == LE and not lhs <= bound:
                return False
            if rel == GE and not lhs >= bound:
                return False
            if rel == EQ and lhs != bound:
                return False
        return True


def lp_feasible(system: LinearSystem):
    """Exact feasibility check: a rational witness vector, or None.

    Phase-1 simplex with Bland's rule over Fractions; free variables are
    split into differences of nonnegative ones.
    """
    n = system.num_vars
    # map original variables to columns of the standard-form program
    cols = []  # per original var: (pos_col, neg_col or None)
    ncols = 0
    for nn in system.nonneg:
        if nn:
            cols.append((ncols, None))
            ncols += 1
        else:
            cols.append((ncols, ncols + 1))
            ncols += 2

    rows = []  # (coeffs over ncols, rel, bound) with rel in {LE, EQ}
    for coeffs, rel, bound in system.constraints:
        c = [Fraction(0)] * ncols
        for j, a in enumerate(coeffs):
            p, q = cols[j]
            c[p] += a
            if q is not None:
                c[q] -= a
        if rel == GE:
            c = [-x for x in c]
            bound = -bound
            rel = LE
        rows.append((c, rel, Fraction(bound)))

    # slack variables for inequalities
    nslack = sum(1 for _, rel, _ in rows if rel == LE)
    total = ncols + nslack
    A = []
    b = []
    si = 0
    for c, rel, bound in rows:
        row = list(c) + [Fraction(0)] * nslack
        if rel == LE:
            row[ncols + si] = Fraction(1)
            si += 1
        if bound < 0:
            row = [-x for x in row]
            bound = -bound
        A.append(row)
        b.append(bound)

    m = len(A)
    if m == 0:
        witness = [Fraction(0)] * n
        return witness if system.satisfies(witness) else None

    # artificial variables, one per row; phase-1 objective minimizes their sum
    for i in range(m):
        for k in range(m):
            A[i].append(Fraction(1) if k == i else Fraction(0))
    basis = [total + i for i in range(m)]
    cost = [Fraction(0)] * total + [Fraction(1)] * m

    # reduced costs maintained implicitly; use the classical tableau
    tableau = [row[:] + [b[i]] for i, row in enumerate(A)]
    width = total + m

    def reduced_costs():
        # z_j - c_j for minimization; pivot in when c_j - z_j < 0
        rc = []
        for j in range(width):
            zj = sum(cost[basis[i]] * tableau[i][j] for i in range(m))
            rc.append(cost[j] - zj)
        return rc

    while True:
        rc = reduced_costs()
        enter = None
        for j in range(width):
            if rc[j] < 0:
                enter = j  # Bland: smallest index
                break
        if enter is None:
            break
        leave = None
        best = None
        for i in range(m):
            if tableau[i][enter] > 0:
                ratio = tableau[i][-1] / tableau[i][enter]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best = ratio
                    leave = i
        if leave is None:
            break  # unbounded phase-1 cannot happen, but stay safe
        piv = tableau[leave][enter]
        tableau[leave] = [x / piv for x in tableau[leave]]
        for i in range(m):
            if i != leave and tableau[i][enter] != 0:
                f = tableau[i][enter]
                tableau[i] = [x - f * y for x, y in zip(tableau[i], tableau[leave])]
        basis[leave] = enter

    obj = sum(cost[basis[i]] * tableau[i][-1] for i in range(m))
    if obj != 0:
        return None

    values = [Fraction(0)] * width
    for i in range(m):
        values[basis[i]] = tableau[i][-1]
    witness = []
    for p, q in cols:
        v = values[p] - (values[q] if q is not None else 0)
        witness.append(v)
    assert system.satisfies(witness), "simplex returned a non-solution"
    return witness
