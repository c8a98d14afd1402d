"""Lie algebroid presentations over a single coordinate chart.

An algebroid of rank r on a chart (x_1, ..., x_n) is presented by a frame
e_1, ..., e_r together with

* an anchor matrix: row i holds the coefficients of the vector field
  an(e_i) = sum_m anchor[i][m] d/dx_m, and
* structure functions c[i][j][k] (antisymmetric in i, j) defining the frame
  brackets [e_i, e_j] = sum_k c[i][j][k] e_k.

The bracket of arbitrary sections sigma = sum sigma^i e_i is then forced by
the Leibniz rule:

    [sigma, tau]^k = sum_{i,j} sigma^i tau^j c_ij^k
                     + sigma . tau^k - tau . sigma^k,

where sigma . f denotes the derivative of f along an(sigma).  Whether the
data actually defines a Lie algebroid is decidable on the frame: the anchor
must intertwine frame brackets with vector-field brackets, and the Jacobi
identity must hold on frame triples; both are checked exactly by
`check_axioms`.

All coefficient arithmetic is exact (see `scalar`).  Frame indices are
0-based throughout the code; the text model format used by the CLI is
1-based.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .scalar import (
    Chart,
    mat_rank,
    mat_shape,
    rat_nullspace,
    rat_rank,
)


# ---------------------------------------------------------------------------
# Vector fields (coefficient lists over a chart)
# ---------------------------------------------------------------------------

def vf_apply(chart, coeffs, f):
    """Derivative of the scalar f along the vector field sum coeffs[m] d_m."""
    out = chart.zero()
    for name, c in zip(chart.coords, coeffs):
        if not c.is_zero():
            out = out + c * f.diff(name)
    return out


def vf_bracket(chart, xs, ys):
    """Commutator of two vector fields, coefficientwise and exact."""
    out = []
    for m, name in enumerate(chart.coords):
        term = chart.zero()
        for mu, mu_name in enumerate(chart.coords):
            term = term + xs[mu] * ys[m].diff(mu_name) - ys[mu] * xs[m].diff(mu_name)
        out.append(term)
    return out


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class CheckReport:
    """Outcome of an exact structural check; failures list what broke."""

    ok: bool
    failures: list

    def __bool__(self):
        return self.ok

    def describe(self):
        if self.ok:
            return "pass"
        return "fail: " + "; ".join(self.failures)


# ---------------------------------------------------------------------------
# The presentation
# ---------------------------------------------------------------------------

class Algebroid:
    """A chart-level Lie algebroid presentation (see module docstring)."""

    def __init__(self, chart, anchor, structure):
        self.chart = chart
        self.anchor = [[chart.scalar(v) for v in row] for row in anchor]
        self.rank = len(self.anchor)
        for row in self.anchor:
            if len(row) != chart.dim:
                raise ValueError("anchor rows must have one entry per coordinate")
        r = self.rank
        self.structure = [
            [[chart.scalar(structure[i][j][k]) for k in range(r)] for j in range(r)]
            for i in range(r)
        ]
        for i in range(r):
            for j in range(r):
                for k in range(r):
                    if self.structure[i][j][k] != -self.structure[j][i][k]:
                        raise ValueError(
                            f"structure functions not antisymmetric at ({i},{j},{k})"
                        )

    @classmethod
    def from_structure_dict(cls, chart, anchor, entries, rank):
        """Build from sparse {(i,j,k): scalar} data, antisymmetrised in i,j."""
        z = chart.zero()
        structure = [[[z for _ in range(rank)] for _ in range(rank)] for _ in range(rank)]
        for (i, j, k), value in entries.items():
            value = chart.scalar(value)
            structure[i][j][k] = structure[i][j][k] + value
            structure[j][i][k] = structure[j][i][k] - value
        return cls(chart, anchor, structure)

    def __repr__(self):
        return f"Algebroid(rank {self.rank} over {self.chart!r})"

    # -- sections -------------------------------------------------------

    def section(self, coeffs):
        return Section(self, [self.chart.scalar(c) for c in coeffs])

    def frame(self, i):
        coeffs = [self.chart.zero()] * self.rank
        coeffs[i] = self.chart.one()
        return Section(self, coeffs)

    def frame_sections(self):
        return [self.frame(i) for i in range(self.rank)]

    def zero_section(self):
        return self.section([0] * self.rank)

    # -- core maps --------------------------------------------------------

    def anchor_of(self, section):
        """Coefficients of the vector field an(sigma)."""
        out = []
        for m in range(self.chart.dim):
            entry = self.chart.zero()
            for i in range(self.rank):
                entry = entry + section.coeffs[i] * self.anchor[i][m]
            out.append(entry)
        return out

    def apply(self, section, f):
        """sigma . f, the derivative of f along the anchor image."""
        return vf_apply(self.chart, self.anchor_of(section), self.chart.scalar(f))

    def bracket(self, sigma, tau):
        out = []
        for k in range(self.rank):
            entry = self.apply(sigma, tau.coeffs[k]) - self.apply(tau, sigma.coeffs[k])
            for i in range(self.rank):
                if sigma.coeffs[i].is_zero():
                    continue
                for j in range(self.rank):
                    c = self.structure[i][j][k]
                    if not c.is_zero():
                        entry = entry + sigma.coeffs[i] * tau.coeffs[j] * c
            out.append(entry)
        return Section(self, out)

    # -- axioms -----------------------------------------------------------

    def check_axioms(self):
        """Exact anchor-compatibility and Jacobi checks on the frame."""
        failures = []
        frames = self.frame_sections()
        for i in range(self.rank):
            for j in range(i + 1, self.rank):
                lhs = vf_bracket(self.chart, self.anchor[i], self.anchor[j])
                rhs = self.anchor_of(self.bracket(frames[i], frames[j]))
                if any((a - b) for a, b in zip(lhs, rhs)):
                    failures.append(f"anchor compatibility fails on (e_{i+1}, e_{j+1})")
        for i, j, k in combinations(range(self.rank), 3):
            acc = [self.chart.zero()] * self.rank
            for a, b, c in ((i, j, k), (j, k, i), (k, i, j)):
                term = self.bracket(self.bracket(frames[a], frames[b]), frames[c])
                acc = [u + v for u, v in zip(acc, term.coeffs)]
            if any(acc):
                failures.append(f"Jacobi fails on (e_{i+1}, e_{j+1}, e_{k+1})")
        return CheckReport(not failures, failures)

    # -- constructors -------------------------------------------------------

    @classmethod
    def tangent(cls, chart):
        """The tangent algebroid: identity anchor, commuting frame."""
        n = chart.dim
        anchor = [[1 if i == m else 0 for m in range(n)] for i in range(n)]
        zero = [[[0] * n for _ in range(n)] for _ in range(n)]
        return cls(chart, anchor, zero)

    @classmethod
    def log_tangent(cls, chart, divisor):
        """Vector fields tangent to the normal-crossing divisor
        prod_{name in divisor} {name = 0}: frame x_i d/dx_i on divisor
        coordinates, d/dx_i elsewhere; the frame commutes."""
        divisor = tuple(divisor)
        for name in divisor:
            if name not in chart.coords:
                raise ValueError(f"divisor coordinate {name!r} not in chart")
        n = chart.dim
        anchor = []
        for i, name in enumerate(chart.coords):
            row = [chart.zero()] * n
            row[i] = chart.coordinate(name) if name in divisor else chart.one()
            anchor.append(row)
        zero = [[[0] * n for _ in range(n)] for _ in range(n)]
        return cls(chart, anchor, zero)

    @classmethod
    def lie_algebra(cls, constants):
        """A Lie algebra viewed as an algebroid over a point (empty chart):
        zero anchor, constant structure functions.  Jacobi is enforced by
        the constructor's axiom data being checked downstream."""
        chart = Chart(())
        r = len(constants)
        anchor = [[] for _ in range(r)]
        structure = [
            [[chart.scalar(constants[i][j][k]) for k in range(r)] for j in range(r)]
            for i in range(r)
        ]
        return cls(chart, anchor, structure)

    @classmethod
    def action(cls, chart, constants, generators):
        """Action algebroid of a Lie algebra acting by vector fields.

        `constants[i][j][k]` are rational structure constants of the Lie
        algebra, `generators[i]` the acting vector field for the i-th basis
        element.  The generator map must be a homomorphism
        [gen_i, gen_j] = sum_k c_ij^k gen_k, checked exactly; a failing pair
        raises ValueError (signs are never flipped silently).
        """
        r = len(constants)
        gens = [[chart.scalar(v) for v in g] for g in generators]
        if len(gens) != r:
            raise ValueError("one generator vector field per basis element required")
        for i in range(r):
            for j in range(i + 1, r):
                lhs = vf_bracket(chart, gens[i], gens[j])
                rhs = [chart.zero()] * chart.dim
                for k in range(r):
                    c = chart.scalar(constants[i][j][k])
                    if not c.is_zero():
                        rhs = [u + c * v for u, v in zip(rhs, gens[k])]
                if any((a - b) for a, b in zip(lhs, rhs)):
                    raise ValueError(
                        f"generators do not represent the bracket on pair ({i+1},{j+1})"
                    )
        structure = [
            [[chart.scalar(constants[i][j][k]) for k in range(r)] for j in range(r)]
            for i in range(r)
        ]
        return cls(chart, gens, structure)

    @classmethod
    def adiabatic(cls, algebroid, parameter="t"):
        """Rescale anchor and bracket by a new base parameter t."""
        chart = algebroid.chart.extended((parameter,), front=True)
        t = chart.coordinate(parameter)
        anchor = []
        for row in algebroid.anchor:
            new_row = [chart.zero()]  # no movement in the t direction
            new_row.extend(t * chart.embed(entry) for entry in row)
            anchor.append(new_row)
        r = algebroid.rank
        structure = [
            [[t * chart.embed(algebroid.structure[i][j][k]) for k in range(r)]
             for j in range(r)]
            for i in range(r)
        ]
        return cls(chart, anchor, structure)

    # -- pointwise fibre computations ---------------------------------------

    def anchor_at(self, point):
        """The anchor matrix evaluated at a rational point (Fractions)."""
        return [[entry.evaluate(point) for entry in row] for row in self.anchor]

    def stabilizer(self, point):
        """Exact rational basis of ker(an at point) inside the fibre."""
        rows = self.anchor_at(point)
        # kernel of a |-> sum_i a_i an(e_i): nullspace of the transpose
        transposed = [[rows[i][m] for i in range(self.rank)]
                      for m in range(self.chart.dim)]
        if self.chart.dim == 0:
            return [[Fraction(1) if i == j else Fraction(0) for j in range(self.rank)]
                    for i in range(self.rank)]
        return rat_nullspace(transposed)


@dataclass
class Section:
    """A section sigma = sum coeffs[i] e_i of an algebroid presentation."""

    algebroid: Algebroid
    coeffs: list

    def __post_init__(self):
        if len(self.coeffs) != self.algebroid.rank:
            raise ValueError("coefficient count must equal the rank")

    def __add__(self, other):
        self._check(other)
        return Section(self.algebroid, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __sub__(self, other):
        self._check(other)
        return Section(self.algebroid, [a - b for a, b in zip(self.coeffs, other.coeffs)])

    def __neg__(self):
        return Section(self.algebroid, [-a for a in self.coeffs])

    def __rmul__(self, f):
        f = self.algebroid.chart.scalar(f)
        return Section(self.algebroid, [f * a for a in self.coeffs])

    __mul__ = __rmul__

    def _check(self, other):
        if other.algebroid is not self.algebroid:
            raise ValueError("sections belong to different presentations")

    def is_zero(self):
        return all(c.is_zero() for c in self.coeffs)

    def __eq__(self, other):
        return (
            isinstance(other, Section)
            and other.algebroid is self.algebroid
            and all(a == b for a, b in zip(self.coeffs, other.coeffs))
        )

    def anchor(self):
        return self.algebroid.anchor_of(self)

    def apply(self, f):
        return self.algebroid.apply(self, f)

    def bracket(self, other):
        self._check(other)
        return self.algebroid.bracket(self, other)

    def __repr__(self):
        parts = [f"({c})*e{i+1}" for i, c in enumerate(self.coeffs) if not c.is_zero()]
        return " + ".join(parts) if parts else "0"


@dataclass
class SubBundleAtPoints:
    """A subbundle recorded pointwise: a coordinate subspace of the base
    together with spanning fibre vectors at each sample point."""

    base_subspace: dict
    samples: dict  # point tuple -> list of rational fibre vectors

    def dimension(self):
        dims = {len(vectors) for vectors in self.samples.values()}
        if len(dims) > 1:
            raise ValueError("sample fibres have inconsistent dimensions")
        return dims.pop() if dims else 0


# ---------------------------------------------------------------------------
# Morphisms
# ---------------------------------------------------------------------------

class AlgebroidMorphism:
    """A chart-level algebroid morphism over a base map.

    `base_map` sends each target coordinate name to a Scalar over the source
    chart; `fibre` is the (target rank) x (source rank) matrix of Scalars
    over the source chart with phi(e_i) = sum_a fibre[a][i] e'_a.
    """

    def __init__(self, source, target, base_map, fibre):
        self.source = source
        self.target = target
        self.base_map = {
            name: source.chart.scalar(v) for name, v in base_map.items()
        }
        missing = [c for c in target.chart.coords if c not in self.base_map]
        if missing:
            raise ValueError(f"base map missing target coordinates {missing}")
        self.fibre = [[source.chart.scalar(v) for v in row] for row in fibre]
        rows, cols = mat_shape(self.fibre) if self.fibre else (0, 0)
        if rows != target.rank or (target.rank and cols != source.rank):
            raise ValueError("fibre matrix must be target-rank x source-rank")

    @classmethod
    def identity(cls, algebroid):
        base = {name: algebroid.chart.coordinate(name) for name in algebroid.chart.coords}
        fibre = [
            [1 if i == j else 0 for j in range(algebroid.rank)]
            for i in range(algebroid.rank)
        ]
        return cls(algebroid, algebroid, base, fibre)

    def pull_scalar(self, f):
        """Pull back a scalar on the target chart through the base map."""
        f = self.target.chart.scalar(f)
        if not self.target.chart.coords:
            return self.source.chart.constant(f.evaluate(()))
        return f.subs(dict(self.base_map))

    def push_section(self, section):
        """Coefficients (over the source chart) of phi(sigma) in the target frame."""
        out = []
        for a in range(self.target.rank):
            entry = self.source.chart.zero()
            for i in range(self.source.rank):
                entry = entry + self.fibre[a][i] * section.coeffs[i]
            out.append(entry)
        return out

    def compose(self, other):
        """The composite self o other (other maps into self's source)."""
        if other.target is not self.source:
            raise ValueError("morphisms do not compose")
        base = {
            name: other.pull_scalar(value)
            for name, value in self.base_map.items()
        }
        fibre = []
        for c in range(self.target.rank):
            row = []
            for i in range(other.source.rank):
                entry = other.source.chart.zero()
                for b in range(self.source.rank):
                    entry = entry + other.pull_scalar(self.fibre[c][b]) * other.fibre[b][i]
                row.append(entry)
            fibre.append(row)
        return AlgebroidMorphism(other.source, self.target, base, fibre)

    def base_point(self, point):
        """Image of a rational source point under the base map."""
        return tuple(self.base_map[name].evaluate(point) for name in self.target.chart.coords)

    def fibre_at(self, point):
        return [[entry.evaluate(point) for entry in row] for row in self.fibre]

    def __repr__(self):
        return (
            f"AlgebroidMorphism({self.source!r} -> {self.target!r})"
        )


def morphism_check(phi):
    """Exact morphism test: the pullback commutes with the differentials on
    the generators (target coordinate functions and target frame 1-forms).

    On functions this is anchor compatibility; on the frame 1-forms
    eps^a the identity d(phi* eps^a) = phi*(d eps^a) expands, on a source
    frame pair (e_i, e_j), to

        e_i . F_aj - e_j . F_ai - sum_k [e_i,e_j]^k F_ak
            = - sum_{b,c} F_bi F_cj (c_bc^a o base),

    with F the fibre matrix.  Both families are checked exactly.
    """
    src, tgt = phi.source, phi.target
    failures = []
    frames = src.frame_sections()
    # functions: anchor compatibility through the base map
    for m, name in enumerate(tgt.chart.coords):
        for i in range(src.rank):
            lhs = src.chart.zero()
            for a in range(tgt.rank):
                lhs = lhs + phi.fibre[a][i] * phi.pull_scalar(tgt.anchor[a][m])
            rhs = src.apply(frames[i], phi.base_map[name])
            if lhs != rhs:
                failures.append(
                    f"pullback of d({name}) fails on e_{i+1} (anchor compatibility)"
                )
    # frame 1-forms
    pulled_structure = {}
    for b in range(tgt.rank):
        for c in range(tgt.rank):
            for a in range(tgt.rank):
                entry = tgt.structure[b][c][a]
                if not entry.is_zero():
                    pulled_structure[(b, c, a)] = phi.pull_scalar(entry)
    for a in range(tgt.rank):
        for i in range(src.rank):
            for j in range(i + 1, src.rank):
                lhs = (
                    src.apply(frames[i], phi.fibre[a][j])
                    - src.apply(frames[j], phi.fibre[a][i])
                )
                bracket = src.bracket(frames[i], frames[j])
                for k in range(src.rank):
                    lhs = lhs - bracket.coeffs[k] * phi.fibre[a][k]
                rhs = src.chart.zero()
                for b in range(tgt.rank):
                    for c in range(tgt.rank):
                        entry = pulled_structure.get((b, c, a))
                        if entry is not None:
                            rhs = rhs - phi.fibre[b][i] * phi.fibre[c][j] * entry
                if lhs != rhs:
                    failures.append(
                        f"pullback of frame form {a+1} fails on (e_{i+1}, e_{j+1})"
                    )
    return CheckReport(not failures, failures)


# ---------------------------------------------------------------------------
# Pullback presentations
# ---------------------------------------------------------------------------

def pullback_projection(algebroid, total_chart):
    """Pull back along a coordinate projection P -> M.

    `total_chart` must contain every coordinate of the algebroid's chart; the
    extra coordinates are the fibre directions.  The frame of the pullback is
    the horizontal lifts of the original frame (anchored at the embedded
    anchor rows) followed by the vertical coordinate fields of the extra
    coordinates.  Returns (pullback presentation, projection morphism).
    """
    base_chart = algebroid.chart
    for name in base_chart.coords:
        if name not in total_chart.coords:
            raise ValueError(f"total chart must contain base coordinate {name!r}")
    extras = [name for name in total_chart.coords if name not in base_chart.coords]
    col = {name: i for i, name in enumerate(total_chart.coords)}
    r, n_total = algebroid.rank, total_chart.dim
    anchor = []
    for row in algebroid.anchor:
        new_row = [total_chart.zero()] * n_total
        for name, entry in zip(base_chart.coords, row):
            new_row[col[name]] = total_chart.embed(entry)
        anchor.append(new_row)
    for name in extras:
        new_row = [total_chart.zero()] * n_total
        new_row[col[name]] = total_chart.one()
        anchor.append(new_row)
    total_rank = r + len(extras)
    z = total_chart.zero()
    structure = [[[z for _ in range(total_rank)] for _ in range(total_rank)]
                 for _ in range(total_rank)]
    for i in range(r):
        for j in range(r):
            for k in range(r):
                structure[i][j][k] = total_chart.embed(algebroid.structure[i][j][k])
    pulled = Algebroid(total_chart, anchor, structure)
    base_map = {name: total_chart.coordinate(name) for name in base_chart.coords}
    fibre = [
        [1 if i == j else 0 for j in range(total_rank)] for i in range(r)
    ]
    projection = AlgebroidMorphism(pulled, algebroid, base_map, fibre)
    return pulled, projection


def restrict_to_subspace(algebroid, fixed, sample_points=()):
    """Pull back along the inclusion of the coordinate subspace
    {name = value for (name, value) in fixed}.

    The fibre over a point p of the subspace is {a in A_p : an(a) tangent to
    the subspace}; a frame is computed as the exact nullspace of the normal
    anchor components over the subspace's function field.  Cleanness (locally
    constant fibre dimension) is certified by comparing the generic rank with
    the exact rank at each supplied rational sample point of the subspace;
    a mismatch raises ValueError.  Bracket closure of the frame is verified
    exactly.  Returns (restricted presentation, inclusion morphism).
    """
    chart = algebroid.chart
    for name in fixed:
        if name not in chart.coords:
            raise ValueError(f"{name!r} is not a coordinate")
    sub_chart = Chart([name for name in chart.coords if name not in fixed])
    subs_map = {name: Fraction(value) for name, value in fixed.items()}

    def restrict(scalar):
        out = scalar.subs(subs_map)
        return sub_chart.embed(out) if out.chart != sub_chart else out

    # anchor restricted to the subspace, split into normal and tangential parts
    normal_names = [name for name in chart.coords if name in fixed]
    restricted_anchor = [[restrict(entry) for entry in row] for row in algebroid.anchor]
    col = {name: m for m, name in enumerate(chart.coords)}
    normal_matrix = [
        [restricted_anchor[i][col[name]] for name in normal_names]
        for i in range(algebroid.rank)
    ]
    # frame of the pullback: kernel of the normal part (transpose: vectors act
    # on the left of the anchor matrix, i.e. nullspace over the frame index)
    if normal_names:
        transposed = [
            [normal_matrix[i][j] for i in range(algebroid.rank)]
            for j in range(len(normal_names))
        ]
        basis = mat_nullspace_or_full(transposed, sub_chart, algebroid.rank)
        generic_rank = mat_rank(transposed)
    else:
        basis = [
            [sub_chart.one() if i == j else sub_chart.zero() for i in range(algebroid.rank)]
            for j in range(algebroid.rank)
        ]
        generic_rank = 0
    # cleanness certification at sample points
    for p in sample_points:
        if len(p) != sub_chart.dim:
            raise ValueError("sample points must lie on the subspace chart")
        numeric = [[entry.evaluate(p) for entry in row] for row in normal_matrix]
        transposed_numeric = [
            [numeric[i][j] for i in range(algebroid.rank)]
            for j in range(len(normal_names))
        ] if normal_names else []
        if normal_names and rat_rank(transposed_numeric) != generic_rank:
            raise ValueError(f"not clean at {tuple(p)}: fibre dimension jumps")

    return subalgebroid_from_frame(algebroid, fixed, basis, sample_points)


def subalgebroid_from_frame(algebroid, fixed, basis, sample_points=()):
    """Assemble the subalgebroid over {name = value} spanned by a given frame.

    `basis` lists fibre vectors whose entries are scalars over the subspace
    chart.  Verifies exactly that every frame vector's anchor is tangent to
    the subspace and that the frame closes under the bracket of lifted
    sections; certifies pointwise frame independence at the sample points.
    Returns (presentation, inclusion morphism).
    """
    chart = algebroid.chart
    sub_chart = Chart([name for name in chart.coords if name not in fixed])
    subs_map = {name: Fraction(value) for name, value in fixed.items()}

    def restrict(scalar):
        out = scalar.subs(subs_map)
        return sub_chart.embed(out) if out.chart != sub_chart else out

    restricted_anchor = [[restrict(entry) for entry in row] for row in algebroid.anchor]
    col = {name: m for m, name in enumerate(chart.coords)}
    sub_rank = len(basis)
    for j, vec in enumerate(basis):
        for name in fixed:
            entry = sub_chart.zero()
            for i in range(algebroid.rank):
                entry = entry + vec[i] * restricted_anchor[i][col[name]]
            if not entry.is_zero():
                raise ValueError(
                    f"frame vector {j+1} is not tangent to the subspace along {name!r}"
                )
    for p in sample_points:
        numeric = [[entry.evaluate(p) for entry in vec] for vec in basis]
        if numeric and rat_rank(numeric) != sub_rank:
            raise ValueError(f"frame drops rank at {tuple(p)}")

    tangential_cols = [col[name] for name in sub_chart.coords]
    sub_anchor = []
    for vec in basis:
        row = []
        for m in tangential_cols:
            entry = sub_chart.zero()
            for i in range(algebroid.rank):
                entry = entry + vec[i] * restricted_anchor[i][m]
            row.append(entry)
        sub_anchor.append(row)

    # brackets of lifted frame sections, restricted and re-expressed
    lifted = [
        algebroid.section([chart.embed(c) for c in vec]) for vec in basis
    ]
    basis_matrix = [[basis[j][i] for j in range(sub_rank)] for i in range(algebroid.rank)]
    z = sub_chart.zero()
    structure = [[[z for _ in range(sub_rank)] for _ in range(sub_rank)]
                 for _ in range(sub_rank)]
    for a in range(sub_rank):
        for b in range(a + 1, sub_rank):
            bracket = algebroid.bracket(lifted[a], lifted[b])
            target = [restrict(cc) for cc in bracket.coeffs]
            coeffs = solve_in_span(basis_matrix, target)
            if coeffs is None:
                raise ValueError(
                    f"restricted frame does not close under the bracket on ({a+1},{b+1})"
                )
            for k in range(sub_rank):
                structure[a][b][k] = coeffs[k]
                structure[b][a][k] = -coeffs[k]
    restricted = Algebroid(sub_chart, sub_anchor, structure)
    base_map = {}
    for name in chart.coords:
        if name in fixed:
            base_map[name] = sub_chart.constant(fixed[name])
        else:
            base_map[name] = sub_chart.coordinate(name)
    fibre = [[basis[j][i] for j in range(sub_rank)] for i in range(algebroid.rank)]
    inclusion = AlgebroidMorphism(restricted, algebroid, base_map, fibre)
    return restricted, inclusion


def pullback(algebroid, base, sample_points=()):
    """Dispatch on the supported base-map shapes.

    `base` is ("projection", total_chart) or ("inclusion", {name: value}).
    """
    kind = base[0]
    if kind == "projection":
        return pullback_projection(algebroid, base[1])
    if kind == "inclusion":
        return restrict_to_subspace(algebroid, base[1], sample_points)
    raise ValueError(f"unsupported base map shape {kind!r}")


def mat_nullspace_or_full(matrix, chart, width):
    """Nullspace basis of a scalar matrix; the full space if it has no rows."""
    if not matrix:
        return [
            [chart.one() if i == j else chart.zero() for i in range(width)]
            for j in range(width)
        ]
    from .scalar import mat_nullspace

    return mat_nullspace(matrix)


def solve_in_span(matrix, target):
    """Solve matrix @ x = target over the scalar field; None if inconsistent.

    `matrix` is a (tall) list of rows; uses exact elimination on the
    augmented system and checks consistency.
    """
    from .scalar import _rref

    rows = len(matrix)
    cols = len(matrix[0]) if rows else 0
    aug = [matrix[i][:] + [target[i]] for i in range(rows)]
    rref, pivots = _rref(aug)
    if cols in pivots:
        return None
    x = [matrix[0][0].chart.zero()] * cols if rows else []
    for r, c in enumerate(pivots):
        x[c] = rref[r][cols]
    return x


# ---------------------------------------------------------------------------
# Log tangent morphisms
# ---------------------------------------------------------------------------

def log_tangent_map(source_chart, source_divisor, target_chart, target_divisor,
                    base_map):
    """The induced morphism of log tangent algebroids over a base map that
    respects the divisors.

    `base_map` sends target coordinate names to Scalars over the source
    chart.  For a target divisor coordinate with component function phi, the
    matrix entries are (x_j dphi/dx_j)/phi against source log directions and
    (dphi/dx_j)/phi otherwise; the construction demands that these quotients
    are regular along the source divisor (exact check), or that phi is
    identically zero, in which case the row vanishes.  Raises ValueError when
    a quotient has a pole on the divisor ("not a log morphism").

    Restricted to a divisor stratum the diagonal entry recovers the order of
    vanishing: for phi = x^nu the distinguished section of {x=0} maps to nu
    times the target one.
    """
    source = Algebroid.log_tangent(source_chart, source_divisor)
    target = Algebroid.log_tangent(target_chart, target_divisor)
    base_map = {name: source_chart.scalar(v) for name, v in base_map.items()}
    fibre = []
    for name in target_chart.coords:
        phi = base_map[name]
        row = []
        if name in target_divisor and phi.is_zero():
            fibre.append([source_chart.zero()] * source_chart.dim)
            continue
        for j, src_name in enumerate(source_chart.coords):
            d = phi.diff(src_name)
            if src_name in source_divisor:
                d = source_chart.coordinate(src_name) * d
            if name in target_divisor:
                entry = d / phi
                # the quotient must be regular on the whole chart: after exact
                # cancellation nothing of phi may survive in the denominator
                if not entry.f.denom.is_ground:
                    raise ValueError(
                        f"not a log morphism: component {name!r} does not divide "
                        f"its {src_name!r}-derivative"
                    )
                row.append(entry)
            else:
                row.append(d)
        fibre.append(row)
    return AlgebroidMorphism(source, target, base_map, fibre)
