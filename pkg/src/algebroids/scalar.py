"""Exact scalar layer: rational functions on a coordinate chart.

Every symbolic object in this package has coefficients in the field
QQ(x_1, ..., x_n) of rational functions with rational coefficients over a
fixed chart.  The representation is canonical (numerator/denominator in
lowest terms, denominator sign-normalised), so equality and the zero test
are exact and decidable.  sympy's sparse polynomial fields provide the
arithmetic backend; this module wraps them behind a small `Scalar` type,
adds a strict expression parser for user input, and supplies exact linear
algebra over the scalar field (Gaussian elimination, inverse, nullspace).

No floating point enters here: floats only appear when a `Scalar` is
compiled to a callable for the numerical verifiers.
"""

from __future__ import annotations

import fractions
import string

import sympy
from sympy import QQ
from sympy.polys.fields import FracField

Fraction = fractions.Fraction


class ParseError(ValueError):
    """Raised for malformed scalar expressions; carries the 0-based offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class UnknownIdentifierError(ParseError):
    """Raised when an expression uses an identifier that is not a coordinate."""


def _to_qq(value):
    """Convert an int/Fraction to an element of sympy's QQ domain."""
    frac = Fraction(value)
    return QQ(frac.numerator, frac.denominator)


class Chart:
    """An ordered tuple of coordinate names, carrying the scalar field.

    Charts compare equal iff their coordinate tuples are equal; scalars from
    equal charts interoperate.  A chart may be empty (n = 0), in which case
    the scalar field is just QQ — used for algebroids over a point.
    """

    def __init__(self, coords):
        coords = tuple(coords)
        seen = set()
        for name in coords:
            if not name or name[0] not in string.ascii_letters + "_" or not all(
                c in string.ascii_letters + string.digits + "_" for c in name
            ):
                raise ValueError(f"invalid coordinate name {name!r}")
            if name in seen:
                raise ValueError(f"duplicate coordinate name {name!r}")
            seen.add(name)
        self.coords = coords
        self.field = FracField(coords, QQ)
        self._index = {name: i for i, name in enumerate(coords)}

    @property
    def dim(self):
        return len(self.coords)

    def __eq__(self, other):
        return isinstance(other, Chart) and self.coords == other.coords

    def __hash__(self):
        return hash(self.coords)

    def __repr__(self):
        return f"Chart({', '.join(self.coords)})"

    # -- constructors -------------------------------------------------

    def zero(self):
        return Scalar(self, self.field.zero)

    def one(self):
        return Scalar(self, self.field.one)

    def constant(self, value):
        return Scalar(self, self.field.one * _to_qq(value))

    def coordinate(self, name):
        if name not in self._index:
            raise KeyError(f"{name!r} is not a coordinate of {self!r}")
        return Scalar(self, self.field.gens[self._index[name]])

    def coordinates(self):
        return [self.coordinate(name) for name in self.coords]

    def scalar(self, value):
        """Coerce a Scalar / int / Fraction / expression string."""
        if isinstance(value, Scalar):
            if value.chart != self:
                raise ValueError(f"scalar lives on {value.chart!r}, not {self!r}")
            return value
        if isinstance(value, str):
            return self.parse(value)
        return self.constant(value)

    def parse(self, text):
        """Parse an expression in the model grammar (see `_Parser`)."""
        return _Parser(text, self).parse()

    # -- chart surgery -------------------------------------------------

    def extended(self, names, front=True):
        """A new chart with extra coordinates prepended (or appended)."""
        names = tuple(names)
        return Chart(names + self.coords if front else self.coords + names)

    def embed(self, scalar):
        """Re-express a scalar over this chart, matching coordinates by name.

        Source coordinates missing from this chart are tolerated as long as
        the scalar does not actually involve them.
        """
        src = scalar.chart
        if src == self:
            return scalar
        posmap = [self._index.get(name) for name in src.coords]

        def embed_poly(p):
            d = {}
            for monom, coeff in p.terms():
                m = [0] * len(self.coords)
                for i, e in enumerate(monom):
                    if e:
                        if posmap[i] is None:
                            raise KeyError(
                                f"scalar involves {src.coords[i]!r}, absent from {self!r}"
                            )
                        m[posmap[i]] = e
                d[tuple(m)] = coeff
            return self.field.ring.from_dict(d)

        num = embed_poly(scalar.f.numer)
        den = embed_poly(scalar.f.denom)
        return Scalar(self, self.field(num) / self.field(den))


class Scalar:
    """An exact rational function on a chart.

    Supports field arithmetic, integer powers, partial derivatives,
    substitution by other scalars, exact evaluation at rational points, and
    compilation to a float callable.  Instances are immutable and hashable;
    `==` and `is_zero()` are exact.
    """

    __slots__ = ("chart", "f", "_compiled")

    def __init__(self, chart, frac_element):
        self.chart = chart
        self.f = frac_element
        self._compiled = None

    # -- coercion helpers ----------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Scalar):
            if other.chart != self.chart:
                raise ValueError("scalars live on different charts")
            return other
        if isinstance(other, (int, Fraction)):
            return self.chart.constant(other)
        return NotImplemented

    # -- arithmetic -----------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.chart, self.f + other.f)

    __radd__ = __add__

    def __neg__(self):
        return Scalar(self.chart, -self.f)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.chart, self.f - other.f)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.chart, other.f - self.f)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return Scalar(self.chart, self.f * other.f)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not other.f:
            raise ZeroDivisionError("division by the zero scalar")
        return Scalar(self.chart, self.f / other.f)

    def __rtruediv__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.f:
            raise ZeroDivisionError("division by the zero scalar")
        return Scalar(self.chart, other.f / self.f)

    def __pow__(self, n):
        if not isinstance(n, int):
            raise TypeError("scalar exponents must be integers")
        if n < 0 and not self.f:
            raise ZeroDivisionError("negative power of the zero scalar")
        return Scalar(self.chart, self.f ** n)

    # -- predicates -----------------------------------------------------

    def is_zero(self):
        return not self.f

    def __bool__(self):
        return bool(self.f)

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.chart.constant(other)
        if not isinstance(other, Scalar) or other.chart != self.chart:
            return NotImplemented
        return self.f == other.f

    def __hash__(self):
        return hash((self.chart.coords, self.f))

    def __repr__(self):
        return str(self.f)

    def to_source(self):
        """Render in the model grammar (round-trips through `Chart.parse`)."""
        return str(self.f).replace("**", "^")

    # -- calculus -------------------------------------------------------

    def diff(self, coord):
        """Exact partial derivative with respect to a coordinate name."""
        i = self.chart._index[coord]
        return Scalar(self.chart, self.f.diff(self.chart.field.gens[i]))

    def subs(self, mapping):
        """Substitute scalars (or rationals) for coordinates.

        `mapping` sends coordinate names to replacement values; coordinates
        not mentioned stay themselves.  All replacement scalars must live on
        one common chart, which becomes the chart of the result (defaulting
        to this scalar's chart).  Raises ZeroDivisionError if the
        substitution kills the denominator.
        """
        target = None
        for value in mapping.values():
            if isinstance(value, Scalar):
                if target is not None and value.chart != target:
                    raise ValueError("replacement scalars live on different charts")
                target = value.chart
        if target is None:
            target = self.chart
        vals = []
        for name in self.chart.coords:
            if name in mapping:
                vals.append(target.scalar(mapping[name]).f)
            else:
                vals.append(target.coordinate(name).f)

        def apply(p):
            acc = target.field.zero
            for monom, coeff in p.terms():
                term = target.field.one * coeff
                for i, e in enumerate(monom):
                    if e:
                        term *= vals[i] ** e
                acc += term
            return acc

        num = apply(self.f.numer)
        den = apply(self.f.denom)
        if not den:
            raise ZeroDivisionError("substitution makes a denominator vanish")
        return Scalar(target, num / den)

    def evaluate(self, point):
        """Exact value at a rational point (sequence in coordinate order,
        or a name -> value mapping).  Returns a `fractions.Fraction`."""
        values = self._point_values(point)
        num = _eval_poly(self.f.numer, values)
        den = _eval_poly(self.f.denom, values)
        if den == 0:
            raise ZeroDivisionError(f"denominator vanishes at {point}")
        return num / den

    def _point_values(self, point):
        coords = self.chart.coords
        if isinstance(point, dict):
            missing = [c for c in coords if c not in point]
            if missing:
                raise ValueError(f"point is missing coordinates {missing}")
            return [Fraction(point[c]) for c in coords]
        point = list(point)
        if len(point) != len(coords):
            raise ValueError(
                f"point has {len(point)} entries, chart has {len(coords)}"
            )
        return [Fraction(v) for v in point]

    def compile(self):
        """A float-valued callable `f(point_sequence)` for the numerics."""
        if self._compiled is None:
            if not self.chart.coords:
                value = float(self.evaluate(()))
                self._compiled = lambda point=None, _v=value: _v
            else:
                symbols = sympy.symbols(self.chart.coords)
                fn = sympy.lambdify(symbols, self.f.as_expr(), modules="math")
                self._compiled = lambda point, _fn=fn: _fn(*point)
        return self._compiled

    def as_poly_in(self, coord):
        """Coefficients {exponent: Scalar} if polynomial in `coord`, else None.

        The coefficient scalars live on the same chart but do not involve
        `coord`.  Used by the homotopy operator to integrate exactly in the
        scale variable.
        """
        i = self.chart._index[coord]
        for monom, _ in self.f.denom.terms():
            if monom[i]:
                return None
        coeffs = {}
        field = self.chart.field
        for monom, coeff in self.f.numer.terms():
            e = monom[i]
            rest = list(monom)
            rest[i] = 0
            part = field(field.ring.from_dict({tuple(rest): coeff}))
            entry = coeffs.get(e, field.zero)
            coeffs[e] = entry + part
        den = Scalar(self.chart, field(self.f.denom))
        return {e: Scalar(self.chart, c) / den for e, c in coeffs.items() if c}


def _eval_poly(p, values):
    """Exact evaluation of a PolyElement at Fractions (handles n = 0)."""
    total = Fraction(0)
    for monom, coeff in p.terms():
        term = Fraction(int(coeff.numerator), int(coeff.denominator))
        for v, e in zip(values, monom):
            if e:
                term *= v ** e
        total += term
    return total


# ---------------------------------------------------------------------------
# Expression parser
# ---------------------------------------------------------------------------

class _Parser:
    """Recursive-descent parser for the scalar expression grammar.

        expr   := term  (('+' | '-') term)*
        term   := unary (('*' | '/') unary)*
        unary  := '-' unary | power
        power  := atom ('^' signed-integer)?
        atom   := integer | coordinate | '(' expr ')'

    Whitespace is ignored.  Exponents are integer literals (optionally
    signed).  Unknown identifiers and malformed syntax raise `ParseError`
    subclasses carrying the offending position.
    """

    def __init__(self, text, chart):
        self.text = text
        self.chart = chart
        self.pos = 0

    def parse(self):
        value = self._expr()
        self._skip_ws()
        if self.pos != len(self.text):
            raise ParseError(
                f"unexpected character {self.text[self.pos]!r}", self.pos
            )
        return value

    # -- lexing helpers -------------------------------------------------

    def _skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self):
        self._skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _take(self, char):
        if self._peek() == char:
            self.pos += 1
            return True
        return False

    def _integer(self):
        self._skip_ws()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if self.pos == start:
            raise ParseError("expected an integer", start)
        return int(self.text[start:self.pos])

    # -- grammar --------------------------------------------------------

    def _expr(self):
        value = self._term()
        while True:
            if self._take("+"):
                value = value + self._term()
            elif self._take("-"):
                value = value - self._term()
            else:
                return value

    def _term(self):
        value = self._unary()
        while True:
            if self._take("*"):
                value = value * self._unary()
            elif self._take("/"):
                start = self.pos
                rhs = self._unary()
                if rhs.is_zero():
                    raise ParseError("division by zero", start)
                value = value / rhs
            else:
                return value

    def _unary(self):
        if self._take("-"):
            return -self._unary()
        return self._power()

    def _power(self):
        base = self._atom()
        if self._take("^"):
            sign = -1 if self._take("-") else 1
            exponent = sign * self._integer()
            if exponent < 0 and base.is_zero():
                raise ParseError("negative power of zero", self.pos)
            return base ** exponent
        return base

    def _atom(self):
        ch = self._peek()
        start = self.pos
        if ch == "(":
            self.pos += 1
            value = self._expr()
            if not self._take(")"):
                raise ParseError("expected ')'", self.pos)
            return value
        if ch.isdigit():
            return self.chart.constant(self._integer())
        if ch.isalpha() or ch == "_":
            while self.pos < len(self.text) and (
                self.text[self.pos].isalnum() or self.text[self.pos] == "_"
            ):
                self.pos += 1
            name = self.text[start:self.pos]
            try:
                return self.chart.coordinate(name)
            except KeyError:
                raise UnknownIdentifierError(
                    f"unknown identifier {name!r}", start
                ) from None
        if ch == "":
            raise ParseError("unexpected end of expression", self.pos)
        raise ParseError(f"unexpected character {ch!r}", self.pos)


# ---------------------------------------------------------------------------
# Exact linear algebra over the scalar field
# ---------------------------------------------------------------------------
#
# Matrices are plain lists of lists of Scalars over a common chart.  Sizes in
# this package are tiny (rank + dim at most ~10), so straightforward Gaussian
# elimination with exact division is both adequate and canonical.

def mat_shape(m):
    rows = len(m)
    cols = len(m[0]) if rows else 0
    if any(len(row) != cols for row in m):
        raise ValueError("ragged matrix")
    return rows, cols


def mat_identity(chart, n):
    return [
        [chart.one() if i == j else chart.zero() for j in range(n)]
        for i in range(n)
    ]


def mat_transpose(m):
    rows, cols = mat_shape(m)
    return [[m[i][j] for i in range(rows)] for j in range(cols)]


def mat_mul(a, b):
    ra, ca = mat_shape(a)
    rb, cb = mat_shape(b)
    if ca != rb:
        raise ValueError(f"incompatible shapes {ra}x{ca} and {rb}x{cb}")
    return [
        [sum((a[i][k] * b[k][j] for k in range(ca)), a[i][0].chart.zero())
         for j in range(cb)]
        for i in range(ra)
    ]


def mat_vec(m, v):
    return [row[0] for row in mat_mul(m, [[x] for x in v])]


def _rref(m):
    """Reduced row echelon form; returns (rref, pivot column list)."""
    rows, cols = mat_shape(m)
    m = [row[:] for row in m]
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if not m[i][c].is_zero()), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = m[r][c]
        m[r] = [entry / inv for entry in m[r]]
        for i in range(rows):
            if i != r and not m[i][c].is_zero():
                factor = m[i][c]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def mat_rank(m):
    return len(_rref(m)[1])


def mat_nullspace(m):
    """Basis of the right nullspace, as a list of column vectors."""
    rows, cols = mat_shape(m)
    if rows == 0:
        chart = None
        raise ValueError("cannot infer chart from an empty matrix")
    chart = m[0][0].chart
    rref, pivots = _rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [chart.zero()] * cols
        vec[f] = chart.one()
        for r, c in enumerate(pivots):
            vec[c] = -rref[r][f]
        basis.append(vec)
    return basis


def mat_solve(m, rhs):
    """Solve m @ x = rhs exactly (rhs a vector); raises if singular."""
    rows, cols = mat_shape(m)
    if rows != cols:
        raise ValueError("mat_solve requires a square matrix")
    aug = [row[:] + [rhs[i]] for i, row in enumerate(m)]
    rref, pivots = _rref(aug)
    if pivots != list(range(cols)):
        raise ValueError("matrix is singular")
    return [rref[i][cols] for i in range(cols)]


def mat_inv(m):
    rows, cols = mat_shape(m)
    if rows != cols:
        raise ValueError("cannot invert a non-square matrix")
    chart = m[0][0].chart
    aug = [row[:] + ident_row for row, ident_row in zip(m, mat_identity(chart, rows))]
    rref, pivots = _rref(aug)
    if pivots != list(range(rows)):
        raise ValueError("matrix is singular")
    return [row[rows:] for row in rref]


def mat_det(m):
    rows, cols = mat_shape(m)
    if rows != cols:
        raise ValueError("determinant of a non-square matrix")
    if rows == 0:
        raise ValueError("empty matrix")
    chart = m[0][0].chart
    m = [row[:] for row in m]
    det = chart.one()
    for c in range(cols):
        pivot = next((i for i in range(c, rows) if not m[i][c].is_zero()), None)
        if pivot is None:
            return chart.zero()
        if pivot != c:
            m[c], m[pivot] = m[pivot], m[c]
            det = -det
        det = det * m[c][c]
        inv = m[c][c]
        for i in range(c + 1, rows):
            if not m[i][c].is_zero():
                factor = m[i][c] / inv
                m[i] = [a - factor * b for a, b in zip(m[i], m[c])]
    return det


def mat_evaluate(m, point):
    """Evaluate a scalar matrix entrywise at a rational point (Fractions)."""
    return [[entry.evaluate(point) for entry in row] for row in m]


# ---------------------------------------------------------------------------
# The same elimination over plain rationals (for pointwise fibre computations)
# ---------------------------------------------------------------------------

def rat_rref(m):
    rows = len(m)
    cols = len(m[0]) if rows else 0
    m = [[Fraction(v) for v in row] for row in m]
    pivots = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = m[r][c]
        m[r] = [entry / inv for entry in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                factor = m[i][c]
                m[i] = [a - factor * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rat_rank(m):
    return len(rat_rref(m)[1])


def rat_nullspace(m):
    rows = len(m)
    cols = len(m[0]) if rows else 0
    rref, pivots = rat_rref(m)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        vec = [Fraction(0)] * cols
        vec[f] = Fraction(1)
        for r, c in enumerate(pivots):
            vec[c] = -rref[r][f]
        basis.append(vec)
    return basis


def rat_solve(m, rhs):
    """One exact solution of m x = rhs, or None if inconsistent."""
    rows = len(m)
    cols = len(m[0]) if rows else 0
    aug = [[Fraction(v) for v in row] + [Fraction(rhs[i])] for i, row in enumerate(m)]
    rref, pivots = rat_rref(aug)
    if cols in pivots:
        return None
    x = [Fraction(0)] * cols
    for r, c in enumerate(pivots):
        x[c] = rref[r][cols]
    return x
