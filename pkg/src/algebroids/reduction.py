"""Presymplectic kernels, symplectization, and symplectic reduction.

The constructions here all follow the same discipline: smooth-category
hypotheses (constant rank, local freeness, transversality) are certified
exactly at supplied rational sample points, while every linear-algebraic
identity is verified over the scalar field.  Quotients are realized through
explicit transverse slices — a coordinate subspace S with T_xN = an(K_x) ⊕
T_xS — so the reduced object is again a presentation in a chart, never an
abstract quotient.

The last section covers the normal-crossing bookkeeping: the divisor induced
on a coordinate subspace, the log-linear Poisson structure of a Lie algebra
with chosen characters, and the closed model 2-form of its groupoid.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .algebroid import (
    Algebroid,
    AlgebroidMorphism,
    CheckReport,
    morphism_check,
    mat_nullspace_or_full,
    pullback_projection,
    restrict_to_subspace,
    solve_in_span,
    subalgebroid_from_frame,
)
from .calculus import (
    FormField,
    MultiSectionField,
    contract,
    d,
    lie_derivative,
    pullback_form,
)
from .phase import PhaseSpace
from .poisson import (
    PoissonStructure,
    SymplecticStructure,
    check_symplectic,
    coisotropic_test,
    poisson_morphism_check,
    submanifold_subbundle,
)
from .scalar import (
    Chart,
    mat_evaluate,
    mat_nullspace,
    rat_nullspace,
    rat_rank,
    rat_rref,
)


# ---------------------------------------------------------------------------
# Presymplectic kernel
# ---------------------------------------------------------------------------


@dataclass
class PresymplecticData:
    """A closed 2-form of constant rank together with its exact kernel frame.

    `kernel` lists fibre vectors (scalars over the chart) spanning ker ω at
    the generic point; constancy of the rank is certified at the sample
    points recorded in `samples`.
    """

    algebroid: Algebroid
    omega: FormField
    gram: list
    kernel: tuple
    samples: tuple

    @property
    def kernel_rank(self):
        return len(self.kernel)

    def kernel_sections(self):
        return [self.algebroid.section(list(vec)) for vec in self.kernel]


def presymplectic_kernel(algebroid, omega, samples=()):
    """The kernel of a closed 2-form, as certified data.

    Verifies exactly: closedness of ω, ι(κ)ω = 0 and L(κ)ω = 0 for each
    kernel frame section κ, and closure of the kernel frame under the
    bracket.  At each sample point the rank of the Gram matrix must equal
    its generic value (constant-rank certificate); a jump raises ValueError.
    """
    if not isinstance(omega, FormField) or omega.degree != 2:
        raise ValueError("a presymplectic structure is a degree-2 form")
    if omega.algebroid is not algebroid:
        raise ValueError("form lives on a different presentation")
    differential = d(algebroid, omega)
    if not differential.is_zero():
        key, coeff = sorted(differential.table.items())[0]
        labels = ",".join(str(i + 1) for i in key)
        raise ValueError(f"form is not closed: (d omega)({labels}) = {coeff}")
    r = algebroid.rank
    gram = [[omega.value_on((i, j)) for j in range(r)] for i in range(r)]
    kernel = mat_nullspace(gram) if r else []
    generic_rank = r - len(kernel)
    for point in samples:
        numeric = mat_evaluate(gram, point) if r else []
        if r and rat_rank(numeric) != generic_rank:
            raise ValueError(f"kernel rank jumps at {tuple(point)}")
    sections = [algebroid.section(list(vec)) for vec in kernel]
    for j, kappa in enumerate(sections):
        if not contract(kappa, omega).is_zero():
            raise ValueError(f"kernel frame vector {j+1} does not annihilate omega")
        if not lie_derivative(algebroid, kappa, omega).is_zero():
            raise ValueError(f"kernel frame vector {j+1} is not a symmetry of omega")
    if kernel:
        span = [[kernel[j][i] for j in range(len(kernel))] for i in range(r)]
        for a in range(len(sections)):
            for b in range(a + 1, len(sections)):
                bracket = algebroid.bracket(sections[a], sections[b])
                if solve_in_span(span, bracket.coeffs) is None:
                    raise ValueError(
                        f"kernel frame does not close under the bracket on ({a+1},{b+1})"
                    )
    return PresymplecticData(
        algebroid,
        omega,
        gram,
        tuple(tuple(vec) for vec in kernel),
        tuple(tuple(p) for p in samples),
    )


# ---------------------------------------------------------------------------
# Symplectization
# ---------------------------------------------------------------------------


class SymplectizationModel:
    """The symplectic model of a presymplectic structure.

    The total space is the dual K* of the kernel bundle, presented by
    extending the chart with one fibre coordinate per kernel frame vector.
    A splitting s: K* → B* of the restriction map (given by an r×l scalar
    matrix S with base map p = S·q, and required exactly to satisfy
    `Kmat·S = identity` where the rows of Kmat are the kernel frame vectors)
    embeds K* into the phase space of B, and the model form is

        ω^s = (projection)* ω_B + s_!^* ω_can.

    Along the zero section the form restricts back to ω_B exactly, and the
    mixed Gram block equals the splitting matrix, so the splitting whose
    columns are the kernel-dual directions reproduces the standard block
    table (zeros on the fibre pairs, identity pairings against the kernel,
    ω_B on the rest).
    """

    def __init__(self, data, splitting=None, momenta=None):
        base = data.algebroid
        chart = base.chart
        r = base.rank
        l = data.kernel_rank
        kmat = [list(vec) for vec in data.kernel]
        if splitting is None:
            splitting = []
            for a in range(l):
                target = [
                    chart.one() if b == a else chart.zero() for b in range(l)
                ]
                column = solve_in_span(kmat, target)
                if column is None:
                    raise ValueError("kernel frame admits no splitting")
                splitting.append(column)
            splitting = [
                [splitting[a][j] for a in range(l)] for j in range(r)
            ]
        if momenta is None:
            momenta = tuple(f"q{a+1}" for a in range(l))
        momenta = tuple(momenta)
        if len(momenta) != l:
            raise ValueError("one fibre coordinate per kernel frame vector")
        for name in momenta:
            if name in chart.coords:
                raise ValueError(f"fibre name {name!r} collides with the chart")

        self.data = data
        self.base = base
        self.momenta = momenta
        self.chart = chart.extended(momenta, front=False)
        self.algebroid, self.projection = pullback_projection(base, self.chart)
        self.phase = PhaseSpace(base)
        self.splitting, self.lift = self.lift_for_splitting(splitting)
        self.form = pullback_form(self.projection, data.omega) + pullback_form(
            self.lift, self.phase.omega.omega
        )
        self.structure = SymplecticStructure(self.algebroid, self.form)

        zero_base = {name: chart.coordinate(name) for name in chart.coords}
        for name in momenta:
            zero_base[name] = chart.zero()
        zero_fibre = [
            [chart.one() if i == j else chart.zero() for j in range(r)]
            for i in range(r + l)
        ]
        self.zero_section = AlgebroidMorphism(base, self.algebroid, zero_base, zero_fibre)
        zero_report = morphism_check(self.zero_section)
        if not zero_report.ok:
            raise ValueError(
                "zero section is not a morphism: " + "; ".join(zero_report.failures)
            )
        if pullback_form(self.zero_section, self.form) != data.omega:
            raise ValueError("model form does not restrict to omega on the zero section")

    def lift_for_splitting(self, splitting):
        """Validate a splitting exactly and build the induced embedding of
        the model into the phase space of the base (checked to be a
        morphism).  Returns the normalized splitting and the morphism."""
        base = self.base
        chart = base.chart
        r = base.rank
        l = self.data.kernel_rank
        kmat = [list(vec) for vec in self.data.kernel]
        splitting = [[chart.scalar(v) for v in row] for row in splitting]
        if len(splitting) != r or any(len(row) != l for row in splitting):
            raise ValueError("splitting must be an r x l matrix")
        for a in range(l):
            for b in range(l):
                entry = chart.zero()
                for j in range(r):
                    entry = entry + kmat[a][j] * splitting[j][b]
                expected = chart.one() if a == b else chart.zero()
                if entry != expected:
                    raise ValueError(
                        "not a splitting: the composite with the "
                        f"projection is not the identity on ({a+1},{b+1})"
                    )
        total = self.chart
        q = [total.coordinate(name) for name in self.momenta]
        emb = total.embed
        p_exprs = []
        for j in range(r):
            expr = total.zero()
            for a in range(l):
                expr = expr + emb(splitting[j][a]) * q[a]
            p_exprs.append(expr)
        base_map = {name: total.coordinate(name) for name in chart.coords}
        for j, name in enumerate(self.phase.momenta):
            base_map[name] = p_exprs[j]
        fibre = [
            [total.zero() for _ in range(r + l)] for _ in range(2 * r)
        ]
        for i in range(r):
            fibre[i][i] = total.one()
            for j in range(r):
                entry = total.zero()
                for m, name in enumerate(chart.coords):
                    a_im = emb(base.anchor[i][m])
                    if not a_im.is_zero():
                        entry = entry + a_im * p_exprs[j].diff(name)
                fibre[r + j][i] = entry
        for a in range(l):
            for j in range(r):
                fibre[r + j][r + a] = emb(splitting[j][a])
        lift = AlgebroidMorphism(
            self.algebroid, self.phase.algebroid, base_map, fibre
        )
        lift_report = morphism_check(lift)
        if not lift_report.ok:
            raise ValueError(
                "splitting does not induce a morphism: "
                + "; ".join(lift_report.failures)
            )
        return splitting, lift

    def form_for_splitting(self, splitting):
        """The model form induced by another splitting of the same kernel,
        expressed on this presentation so the two forms can be compared."""
        _, lift = self.lift_for_splitting(splitting)
        return pullback_form(self.projection, self.data.omega) + pullback_form(
            lift, self.phase.omega.omega
        )

    def block_table(self):
        """The Gram matrix of the model form along the zero section,
        as scalars over the base chart."""
        zero_subs = {name: Fraction(0) for name in self.momenta}
        chart = self.base.chart
        out = []
        for row in self.structure.gram:
            restricted = []
            for entry in row:
                value = entry.subs(zero_subs) if zero_subs else entry
                restricted.append(chart.embed(value) if value.chart != chart else value)
            out.append(restricted)
        return out

    def model_form_report(self):
        """Exact verification of the block structure along the zero section:
        fibre pairs vanish, the base block is the Gram matrix of ω_B, the
        mixed block is the splitting matrix, and contracting the mixed block
        with the kernel frame gives the identity."""
        chart = self.base.chart
        r = self.base.rank
        l = self.data.kernel_rank
        table = self.block_table()
        failures = []
        for a in range(l):
            for b in range(a + 1, l):
                if not table[r + a][r + b].is_zero():
                    failures.append(
                        f"fibre pair ({a+1},{b+1}) does not vanish: {table[r+a][r+b]}"
                    )
        for i in range(r):
            for j in range(i + 1, r):
                if table[i][j] != self.data.gram[i][j]:
                    failures.append(
                        f"base pair ({i+1},{j+1}) is {table[i][j]}, "
                        f"expected {self.data.gram[i][j]}"
                    )
        for j in range(r):
            for a in range(l):
                if table[j][r + a] != self.splitting[j][a]:
                    failures.append(
                        f"mixed pair ({j+1},{a+1}) differs from the splitting"
                    )
        for b in range(l):
            for a in range(l):
                entry = chart.zero()
                for j in range(r):
                    entry = entry + self.data.kernel[b][j] * table[j][r + a]
                expected = chart.one() if a == b else chart.zero()
                if entry != expected:
                    failures.append(
                        f"kernel pairing ({b+1},{a+1}) is {entry}, expected {expected}"
                    )
        return CheckReport(not failures, tuple(failures))

    def zero_section_coisotropic(self, samples):
        """The zero section is coisotropic in the model: tested pointwise
        against the inverse Poisson structure at base sample points."""
        fixed = {name: Fraction(0) for name in self.momenta}
        points = [tuple(p) + (Fraction(0),) * len(self.momenta) for p in samples]
        subbundle = submanifold_subbundle(self.algebroid, fixed, points)
        return coisotropic_test(self.structure.invert(), subbundle)


def symplectize(algebroid, omega, splitting=None, momenta=None, samples=()):
    """Build the symplectic model of a closed constant-rank 2-form.

    `splitting` is an r×l scalar matrix over the base chart (columns indexed
    by the kernel frame) satisfying Kmat·S = identity exactly; omitted, a
    particular exact solution is used.  With a degenerate ω the model lives
    over the chart extended by one fibre coordinate per kernel direction;
    a nondegenerate ω returns a model on the original chart with ω itself.
    """
    data = presymplectic_kernel(algebroid, omega, samples)
    return SymplectizationModel(data, splitting, momenta)


# ---------------------------------------------------------------------------
# Reduction along a transverse slice
# ---------------------------------------------------------------------------


def reduce_along_slice(data, slice_fixed, samples):
    """Reduce a presymplectic structure along a transverse coordinate slice.

    The slice S = {name = value} must satisfy T_xN = an(K_x) ⊕ T_xS at every
    sample (checked by exact rank computations), with as many fixed
    coordinates as the rank of the anchor on the kernel.  Returns the
    restricted presentation C = i_S^! B, its symplectic structure
    (i_S)^* ω_B — check failures raise — and the inclusion morphism.
    """
    B = data.algebroid
    chart = B.chart
    n = chart.dim
    if not samples:
        raise ValueError("at least one sample point on the slice is required")
    coord_index = {name: m for m, name in enumerate(chart.coords)}
    for name in slice_fixed:
        if name not in coord_index:
            raise ValueError(f"{name!r} is not a coordinate")
    free = [name for name in chart.coords if name not in slice_fixed]
    anchor_rows = []
    for vec in data.kernel:
        row = []
        for m in range(n):
            entry = chart.zero()
            for i in range(B.rank):
                entry = entry + vec[i] * B.anchor[i][m]
            row.append(entry)
        anchor_rows.append(row)
    foliation_rank = None
    for point in samples:
        for name, value in slice_fixed.items():
            if point[coord_index[name]] != Fraction(value):
                raise ValueError(f"sample {tuple(point)} does not lie on the slice")
        rows = [[entry.evaluate(point) for entry in row] for row in anchor_rows]
        rank_here = rat_rank(rows) if rows else 0
        if foliation_rank is None:
            foliation_rank = rank_here
        elif rank_here != foliation_rank:
            raise ValueError(f"kernel orbit dimension jumps at {tuple(point)}")
        slice_dirs = [
            [Fraction(1) if m == coord_index[name] else Fraction(0) for m in range(n)]
            for name in free
        ]
        stacked = rows + slice_dirs
        stacked_rank = rat_rank(stacked) if stacked else 0
        if stacked_rank != n:
            raise ValueError(f"slice is not transverse to the kernel orbits at {tuple(point)}")
    if foliation_rank != len(slice_fixed):
        raise ValueError(
            f"slice fixes {len(slice_fixed)} coordinates but the kernel "
            f"orbits have dimension {foliation_rank}"
        )
    sub_samples = [
        tuple(point[coord_index[name]] for name in free) for point in samples
    ]
    restricted, inclusion = restrict_to_subspace(B, slice_fixed, sub_samples)
    omega_c = pullback_form(inclusion, data.omega)
    report = check_symplectic(restricted, omega_c)
    if not report.ok:
        raise ValueError(
            "slice reduction is not symplectic: " + "; ".join(report.failures)
        )
    return restricted, SymplecticStructure(restricted, omega_c), inclusion


def reduce_at_point(data):
    """Reduce a presymplectic structure over a zero-dimensional chart.

    The kernel of a closed 2-form on a Lie algebra is an ideal (verified
    exactly); the quotient algebra carries the descended form, realized on
    the complement of the kernel spanned by the standard basis vectors at
    the kernel's non-pivot positions.  Returns (quotient, structure,
    complement indices).
    """
    B = data.algebroid
    chart = B.chart
    if chart.dim != 0:
        raise ValueError("fibre quotient requires a point base")
    r = B.rank
    kernel = [[Fraction(entry.evaluate(())) for entry in vec] for vec in data.kernel]
    l = len(kernel)
    if l:
        _, pivots = rat_rref([row[:] for row in kernel])
        complement = [i for i in range(r) if i not in pivots]
    else:
        complement = list(range(r))
    span = [[data.kernel[j][i] for j in range(l)] for i in range(r)]
    for i in range(r):
        for a in range(l):
            bracket = B.bracket(
                B.section([1 if k == i else 0 for k in range(r)]),
                B.section(list(data.kernel[a])),
            )
            if l and solve_in_span(span, bracket.coeffs) is None:
                raise ValueError(
                    f"kernel is not an ideal: [e_{i+1}, kernel {a+1}] leaves it"
                )
    m = len(complement)
    sub_chart = chart
    full_basis = [list(vec) for vec in kernel] + [
        [Fraction(1) if i == c else Fraction(0) for i in range(r)] for c in complement
    ]
    columns = [[full_basis[j][i] for j in range(r)] for i in range(r)]
    columns = [[sub_chart.constant(v) for v in row] for row in columns]
    z = sub_chart.zero()
    structure = [[[z for _ in range(m)] for _ in range(m)] for _ in range(m)]
    for a in range(m):
        for b in range(a + 1, m):
            bracket = B.bracket(
                B.section([1 if k == complement[a] else 0 for k in range(r)]),
                B.section([1 if k == complement[b] else 0 for k in range(r)]),
            )
            coeffs = solve_in_span(columns, bracket.coeffs)
            if coeffs is None:
                raise ValueError("kernel and complement do not span the fibre")
            for k in range(m):
                structure[a][b][k] = coeffs[l + k]
                structure[b][a][k] = -coeffs[l + k]
    quotient = Algebroid(sub_chart, [[] for _ in range(m)], structure)
    table = {}
    for a in range(m):
        for b in range(a + 1, m):
            value = data.gram[complement[a]][complement[b]]
            if not value.is_zero():
                table[(a, b)] = value
    omega_c = FormField(quotient, 2, table)
    report = check_symplectic(quotient, omega_c)
    if not report.ok:
        raise ValueError(
            "fibre quotient is not symplectic: " + "; ".join(report.failures)
        )
    return quotient, SymplecticStructure(quotient, omega_c), tuple(complement)


# ---------------------------------------------------------------------------
# Hamiltonian reduction
# ---------------------------------------------------------------------------


@dataclass
class ReductionResult:
    """Everything produced by a Hamiltonian reduction, with a transcript of
    the certified checks."""

    algebroid: Algebroid
    structure: SymplecticStructure
    moment_fibre: Algebroid
    fibre_inclusion: AlgebroidMorphism
    data: PresymplecticData
    fixed: dict
    symmetry_basis: tuple
    free: bool
    transcript: tuple


def _constant_value(scalar):
    if scalar.f.numer.is_ground and scalar.f.denom.is_ground:
        zeros = (Fraction(0),) * scalar.chart.dim
        return scalar.evaluate(zeros)
    return None


def _moment_fibre_equations(mu, point):
    """Solve the base map = point for a coordinate subspace {name = value}.

    Each component of the base map must be affine in a single source
    coordinate; anything else raises, as does an inconsistent or
    over-determined system.
    """
    source = mu.source.chart
    fixed = {}
    for a, name in enumerate(mu.target.chart.coords):
        expr = mu.base_map[name]
        varying = []
        for coord in source.coords:
            derivative = expr.diff(coord)
            if not derivative.is_zero():
                varying.append((coord, derivative))
        if not varying:
            value = _constant_value(expr)
            if value != Fraction(point[a]):
                raise ValueError(
                    f"the point is not in the image: component {name!r} is "
                    f"constant {expr}"
                )
            continue
        if len(varying) != 1 or _constant_value(varying[0][1]) is None:
            raise ValueError(
                "moment fibre is not a coordinate subspace in this chart: "
                f"component {name!r} is not affine in a single coordinate"
            )
        coord, derivative = varying[0]
        slope = _constant_value(derivative)
        offset = _constant_value(expr - slope * source.coordinate(coord))
        if offset is None:
            raise ValueError(
                "moment fibre is not a coordinate subspace in this chart: "
                f"component {name!r} is not affine in a single coordinate"
            )
        value = (Fraction(point[a]) - offset) / slope
        if coord in fixed and fixed[coord] != value:
            raise ValueError("the point is not in the image: fibre equations conflict")
        fixed[coord] = value
    return fixed


def _fmt(point):
    return "(" + ", ".join(str(v) for v in point) + ")"


def _span_equal(first, second):
    first = [list(v) for v in first]
    second = [list(v) for v in second]
    rank_first = rat_rank(first) if first else 0
    rank_second = rat_rank(second) if second else 0
    if rank_first != rank_second:
        return False
    combined = first + second
    return (rat_rank(combined) if combined else 0) == rank_first


def hamiltonian_reduce(
    structure,
    mu,
    target,
    point,
    subalgebra,
    slice_fixed=None,
    samples=(),
    require_free=True,
):
    """Reduce a symplectic presentation along a Poisson moment map.

    `structure` is the symplectic structure on the source of `mu`; `target`
    the Poisson structure on its codomain; `point` a rational point of the
    codomain chart; `subalgebra` a list of rational fibre vectors spanning a
    Lie subalgebra of the stabilizer at the point.  The moment fibre over
    N = (base map)⁻¹(point) is cut down to μ⁻¹(subalgebra), its presymplectic
    kernel computed, the induced symmetry algebra checked to act transitively
    on the kernel, and the quotient realized over the transverse slice
    `slice_fixed` (or by the fibre quotient when N is a point).  Sample
    points live on the source chart and must lie on N.

    Certified hypotheses that fail raise ValueError, except local freeness
    when `require_free` is false — the failure is then only recorded in the
    transcript, which matches the situations (identity moment at a stabilized
    point) where the construction still goes through.
    """
    A = structure.algebroid
    E = target.algebroid
    if mu.source is not A or mu.target is not E:
        raise ValueError("moment map does not connect the two structures")
    transcript = []
    report = morphism_check(mu)
    if not report.ok:
        raise ValueError("moment map is not a morphism: " + "; ".join(report.failures))
    transcript.append("moment map is an algebroid morphism (exact)")
    lam_a = structure.invert()
    report = poisson_morphism_check(mu, lam_a, target)
    if not report.ok:
        raise ValueError("moment map is not Poisson: " + "; ".join(report.failures))
    transcript.append("moment map intertwines the Poisson structures (exact)")

    point = tuple(Fraction(v) for v in point)
    if len(point) != E.chart.dim:
        raise ValueError("point has the wrong dimension")
    subalgebra = [tuple(Fraction(v) for v in vec) for vec in subalgebra]
    for vec in subalgebra:
        if len(vec) != E.rank:
            raise ValueError("subalgebra vectors must have the target rank")
    stab = E.stabilizer(point)
    anchor = E.anchor_at(point)
    for k, vec in enumerate(subalgebra):
        image = [
            sum(vec[i] * anchor[i][m] for i in range(E.rank))
            for m in range(E.chart.dim)
        ]
        if any(image):
            raise ValueError(f"subalgebra vector {k+1} is not in the stabilizer")
        if _span_not_containing(stab, vec):
            raise ValueError(f"subalgebra vector {k+1} is not in the stabilizer")
    structure_at = [
        [
            [E.structure[i][j][k].evaluate(point) for k in range(E.rank)]
            for j in range(E.rank)
        ]
        for i in range(E.rank)
    ]
    for a in range(len(subalgebra)):
        for b in range(a + 1, len(subalgebra)):
            bracket = [
                sum(
                    subalgebra[a][i] * subalgebra[b][j] * structure_at[i][j][k]
                    for i in range(E.rank)
                    for j in range(E.rank)
                )
                for k in range(E.rank)
            ]
            if _span_not_containing(subalgebra, bracket):
                raise ValueError(
                    f"vectors {a+1} and {b+1} do not span a subalgebra at the point"
                )
    transcript.append(
        f"subalgebra of dimension {len(subalgebra)} inside the stabilizer (exact)"
    )

    fixed = _moment_fibre_equations(mu, point)
    transcript.append(
        "moment fibre is the coordinate subspace {"
        + ", ".join(f"{name} = {value}" for name, value in sorted(fixed.items()))
        + "}"
    )
    coord_index = {name: m for m, name in enumerate(A.chart.coords)}
    samples = [tuple(Fraction(v) for v in p) for p in samples]
    for p in samples:
        if mu.base_point(p) != point:
            raise ValueError(f"sample {_fmt(p)} does not lie on the moment fibre")

    for p in samples:
        jacobian = [
            [mu.base_map[name].diff(coord).evaluate(p) for coord in A.chart.coords]
            for name in E.chart.coords
        ]
        if (rat_rank(jacobian) if jacobian else 0) != E.chart.dim:
            raise ValueError(
                f"not a regular value: the base tangent map drops rank at {_fmt(p)}"
            )
    transcript.append(f"regular value certified at {len(samples)} samples")

    free = True
    for p in samples:
        stab_p = A.stabilizer(p)
        gram_p = mat_evaluate(structure.gram, p)
        rows = [
            [
                sum(vec[i] * gram_p[i][j] for i in range(A.rank))
                for j in range(A.rank)
            ]
            for vec in stab_p
        ]
        orthogonal = rat_nullspace(rows) if rows else [
            [Fraction(1) if i == j else Fraction(0) for i in range(A.rank)]
            for j in range(A.rank)
        ]
        mu_fib = mu.fibre_at(p)
        images = [
            [sum(mu_fib[a][i] * vec[i] for i in range(A.rank)) for a in range(E.rank)]
            for vec in orthogonal
        ]
        if (rat_rank(images) if images else 0) != E.rank:
            free = False
            message = (
                f"local freeness fails at {_fmt(p)}: the stabilizer's symplectic "
                "orthogonal does not surject onto the target fibre"
            )
            if require_free:
                raise ValueError(message)
            transcript.append(message + " (continuing)")
    if free:
        transcript.append(f"local freeness certified at {len(samples)} samples")

    # the moment fibre subalgebroid B = mu^{-1}(subalgebra) over N
    annihilator = (
        rat_nullspace([list(vec) for vec in subalgebra])
        if subalgebra
        else [
            [Fraction(1) if i == j else Fraction(0) for i in range(E.rank)]
            for j in range(E.rank)
        ]
    )
    sub_chart = Chart([name for name in A.chart.coords if name not in fixed])
    subs_map = {name: value for name, value in fixed.items()}

    def restrict(scalar):
        out = scalar.subs(subs_map) if subs_map else scalar
        return sub_chart.embed(out) if out.chart != sub_chart else out

    mu_fibre_n = [[restrict(entry) for entry in row] for row in mu.fibre]
    rows = [
        [
            sum(
                (sub_chart.constant(xi[a]) * mu_fibre_n[a][i] for a in range(E.rank)),
                sub_chart.zero(),
            )
            for i in range(A.rank)
        ]
        for xi in annihilator
    ]
    rows = [row for row in rows if any(not entry.is_zero() for entry in row)]
    basis = mat_nullspace_or_full(rows, sub_chart, A.rank)
    sub_samples = [
        tuple(p[coord_index[name]] for name in sub_chart.coords) for p in samples
    ]
    fibre, inclusion = subalgebroid_from_frame(A, fixed, basis, sub_samples)
    transcript.append(f"moment fibre subalgebroid has rank {fibre.rank}")

    omega_b = pullback_form(inclusion, structure.omega)
    data = presymplectic_kernel(fibre, omega_b, sub_samples)
    transcript.append(f"presymplectic kernel has rank {data.kernel_rank}")

    lam_matrix = lam_a.matrix()
    lam_e_point = [
        [target.lam.value_on((a, b)).evaluate(point) for b in range(E.rank)]
        for a in range(E.rank)
    ]
    for p, p_sub in zip(samples, sub_samples):
        lam_p = mat_evaluate(lam_matrix, p)
        mu_fib = mu.fibre_at(p)
        # moment compatibility: mu · lambda^T · mu^T = lambda_target^T at p
        for a in range(E.rank):
            for b in range(E.rank):
                lhs = sum(
                    mu_fib[a][i] * lam_p[j][i] * mu_fib[b][j]
                    for i in range(A.rank)
                    for j in range(A.rank)
                )
                if lhs != lam_e_point[b][a]:
                    raise ValueError(f"moment compatibility fails at {_fmt(p)} on ({a+1},{b+1})")
        gamma = [
            [
                sum(lam_p[a][i] * mu_fib[e][a] for a in range(A.rank))
                for e in range(E.rank)
            ]
            for i in range(A.rank)
        ]
        inc_fib = inclusion.fibre_at(p_sub)
        kernel_in_a = [
            [
                sum(inc_fib[i][j] * vec[j].evaluate(p_sub) for j in range(fibre.rank))
                for i in range(A.rank)
            ]
            for vec in data.kernel
        ]
        # K_x = mu^{-1}(subalgebra) ∩ gamma(annihilator)
        constraint = [
            [
                sum(xi[a] * mu_fib[a][i] for a in range(E.rank))
                for i in range(A.rank)
            ]
            for xi in annihilator
        ]
        gamma_images = [
            [sum(gamma[i][e] * xi[e] for e in range(E.rank)) for i in range(A.rank)]
            for xi in annihilator
        ]
        if gamma_images:
            inside = [
                [sum(row[i] * g[i] for i in range(A.rank)) for g in gamma_images]
                for row in constraint
            ]
            coeff_basis = rat_nullspace(inside) if inside else [
                [Fraction(1) if i == j else Fraction(0) for i in range(len(gamma_images))]
                for j in range(len(gamma_images))
            ]
            intersection = [
                [
                    sum(c[k] * gamma_images[k][i] for k in range(len(gamma_images)))
                    for i in range(A.rank)
                ]
                for c in coeff_basis
            ]
        else:
            intersection = []
        if not _span_equal(kernel_in_a, intersection):
            raise ValueError(f"kernel identity fails at {_fmt(p)}")
    transcript.append(
        "kernel equals the moment preimage intersected with the symmetry "
        f"directions at {len(samples)} samples"
    )

    # the induced symmetry algebra h = (sharp at the point)^{-1}(subalgebra) ∩ annihilator
    sharp_rows = [
        [
            sum(eta[a] * lam_e_point[b][a] for a in range(E.rank))
            for b in range(E.rank)
        ]
        for eta in annihilator
    ]
    h_rows = sharp_rows + [list(vec) for vec in subalgebra]
    h_basis = rat_nullspace(h_rows) if h_rows else [
        [Fraction(1) if i == j else Fraction(0) for i in range(E.rank)]
        for j in range(E.rank)
    ]
    transcript.append(f"symmetry algebra has dimension {len(h_basis)}")
    for p, p_sub in zip(samples, sub_samples):
        lam_p = mat_evaluate(lam_matrix, p)
        mu_fib = mu.fibre_at(p)
        images = [
            [
                sum(lam_p[a][i] * mu_fib[e][a] * xi[e] for a in range(A.rank) for e in range(E.rank))
                for i in range(A.rank)
            ]
            for xi in h_basis
        ]
        inc_fib = inclusion.fibre_at(p_sub)
        kernel_in_a = [
            [
                sum(inc_fib[i][j] * vec[j].evaluate(p_sub) for j in range(fibre.rank))
                for i in range(A.rank)
            ]
            for vec in data.kernel
        ]
        if not _span_equal(images, kernel_in_a):
            raise ValueError(
                f"symmetry algebra does not act transitively on the kernel at {_fmt(p)}"
            )
    transcript.append(
        f"symmetry algebra acts transitively on the kernel at {len(samples)} samples"
    )

    if sub_chart.dim == 0:
        quotient, reduced_structure, _ = reduce_at_point(data)
        transcript.append("quotient realized by the fibre quotient at the point")
    else:
        if slice_fixed is None:
            raise ValueError("a transverse slice is required over a positive-dimensional fibre")
        slice_samples = [
            p_sub
            for p_sub in sub_samples
            if all(
                p_sub[sub_chart.coords.index(name)] == Fraction(value)
                for name, value in slice_fixed.items()
            )
        ]
        if not slice_samples:
            raise ValueError("no sample point lies on the slice")
        quotient, reduced_structure, _ = reduce_along_slice(
            data, slice_fixed, slice_samples
        )
        transcript.append(
            "quotient realized over the transverse slice {"
            + ", ".join(f"{name} = {value}" for name, value in sorted(slice_fixed.items()))
            + "}"
        )
    transcript.append(
        f"reduced presentation has rank {quotient.rank} over a chart of "
        f"dimension {quotient.chart.dim}"
    )
    return ReductionResult(
        quotient,
        reduced_structure,
        fibre,
        inclusion,
        data,
        fixed,
        tuple(tuple(vec) for vec in h_basis),
        free,
        tuple(transcript),
    )


def _span_not_containing(basis, vector):
    basis = [list(v) for v in basis]
    if not basis:
        return any(vector)
    before = rat_rank(basis)
    return rat_rank(basis + [list(vector)]) > before


# ---------------------------------------------------------------------------
# Normal-crossing bookkeeping
# ---------------------------------------------------------------------------


@dataclass
class InducedDivisor:
    """The divisor data a coordinate subspace inherits from a normal-crossing
    divisor: the components that slice it transversally, the rank of the
    trivial central subbundle contributed by the components containing it,
    and the components it misses entirely."""

    divisor: tuple
    central_rank: int
    missed: tuple


def induced_divisor(fixed, divisor):
    """Partition the divisor components against the subspace {name = value}.

    A component {x_k = 0} contains the subspace when x_k is fixed to 0
    (contributing one rank to the central subbundle), slices it when x_k
    stays free (contributing x_k to the induced divisor), and misses it when
    x_k is fixed to a nonzero value.
    """
    induced = []
    central = 0
    missed = []
    for name in divisor:
        if name in fixed:
            if Fraction(fixed[name]) == 0:
                central += 1
            else:
                missed.append(name)
        else:
            induced.append(name)
    return InducedDivisor(tuple(induced), central, tuple(missed))


def log_linear_poisson(constants, num_characters, coords=None):
    """The log-linear Poisson structure of a Lie algebra whose first
    `num_characters` dual basis vectors are characters.

    On the log tangent algebroid of the coordinate hyperplanes x_1 ⋯ x_l the
    structure is the uniform expression λ = Σ_{i<j} c_ij(x) e_i ∧ e_j with
    c_ij(x) = Σ_k c_ij^k x_k — the substitution of the log frame into the
    linear formula.  The character condition (c_ij^k = 0 for k ≤ l) is
    required exactly; involutivity is certified on construction.
    """
    n = len(constants)
    l = num_characters
    if not 0 <= l <= n:
        raise ValueError("character count must be between 0 and the dimension")
    for i in range(n):
        for j in range(n):
            for k in range(l):
                if Fraction(constants[i][j][k]) != 0:
                    raise ValueError(
                        f"the dual of basis vector {k+1} is not a character"
                    )
    if coords is None:
        coords = tuple(f"x{i+1}" for i in range(n))
    chart = Chart(coords)
    algebroid = Algebroid.log_tangent(chart, coords[:l])
    x = [chart.coordinate(name) for name in coords]
    table = {}
    for i in range(n):
        for j in range(i + 1, n):
            entry = chart.zero()
            for k in range(n):
                value = Fraction(constants[i][j][k])
                if value:
                    entry = entry + chart.constant(value) * x[k]
            if not entry.is_zero():
                table[(i, j)] = entry
    lam = MultiSectionField(algebroid, 2, table)
    poisson = PoissonStructure(algebroid, lam)
    poisson.require_involutive()
    return poisson


def log_groupoid_form(constants, num_characters, coords=None):
    """The closed model 2-form of the groupoid of a log-linear Poisson
    structure, presented on a rank-2n algebroid over the same chart.

    The frame is t_1 … t_n (anchor zero, realizing the opposite Lie algebra
    so that the Koszul differential of the dual coframe is the
    Maurer–Cartan system) followed by the commuting log frame e_1 … e_n;
    the form is ω = Σ_k τ^k ∧ ε^k − Σ_{i<j} c_ij(x) τ^i ∧ τ^j, with Gram
    matrix ((−c, I), (−I, 0)) of determinant one.  Closedness is exact and
    verified on construction.
    """
    n = len(constants)
    l = num_characters
    for i in range(n):
        for j in range(n):
            for k in range(l):
                if Fraction(constants[i][j][k]) != 0:
                    raise ValueError(
                        f"the dual of basis vector {k+1} is not a character"
                    )
    if coords is None:
        coords = tuple(f"x{i+1}" for i in range(n))
    chart = Chart(coords)
    log = Algebroid.log_tangent(chart, coords[:l])
    rank = 2 * n
    z = chart.zero()
    anchor = [[z for _ in range(n)] for _ in range(n)] + [
        list(row) for row in log.anchor
    ]
    structure = [[[z for _ in range(rank)] for _ in range(rank)] for _ in range(rank)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                value = Fraction(constants[i][j][k])
                if value:
                    structure[i][j][k] = chart.constant(-value)
    algebroid = Algebroid(chart, anchor, structure)
    x = [chart.coordinate(name) for name in coords]
    table = {(k, n + k): chart.one() for k in range(n)}
    for i in range(n):
        for j in range(i + 1, n):
            entry = chart.zero()
            for k in range(n):
                value = Fraction(constants[i][j][k])
                if value:
                    entry = entry + chart.constant(value) * x[k]
            if not entry.is_zero():
                table[(i, j)] = -entry
    omega = FormField(algebroid, 2, table)
    result = SymplecticStructure(algebroid, omega)
    if not result.closed:
        raise ValueError("model form is not closed")
    if not result.nondegenerate:
        raise ValueError("model form is degenerate")
    return result
