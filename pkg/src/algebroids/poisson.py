"""Poisson and symplectic structures on an algebroid presentation.

A Poisson structure is an involutive 2-section λ; a symplectic structure a
closed nondegenerate 2-form ω.  The musical maps are fixed by

    β(λ^♯ α) = λ(α, β)          (so λ^♯(ε^a) = Σ_b λ^{ab} e_b)
    flat(ω)(σ) = ω(·, σ)        (so flat(σ)_j = Σ_i ω(e_j, e_i) σ^i)

and `invert` produces the unique λ with sharp(λ) ∘ flat(ω) = id, which in
matrix terms is Λ = −W⁻¹ for the Gram matrix W[i][j] = ω(e_i, e_j).  With
these choices the tangent-bundle phase space carries the standard cotangent
bracket {x, p} = +1.
"""

from __future__ import annotations

from fractions import Fraction

from .algebroid import (
    Algebroid,
    AlgebroidMorphism,
    CheckReport,
    Section,
    SubBundleAtPoints,
)
from .calculus import (
    FormField,
    MultiSectionField,
    contract,
    contract_multi,
    d,
    pairing,
    schouten,
)
from .scalar import mat_det, mat_inv, mat_solve, rat_nullspace, rat_rank


class PoissonStructure:
    """An algebroid 2-section with a cached involutivity certificate.

    The certificate (the Schouten square [λ,λ]) is computed at construction;
    operations whose correctness depends on involutivity (the dual algebroid,
    reduction pipelines) refuse to run when it is nonzero.
    """

    def __init__(self, algebroid, lam):
        if not isinstance(lam, MultiSectionField) or lam.degree != 2:
            raise ValueError("a Poisson structure is a degree-2 multisection")
        if lam.algebroid is not algebroid:
            raise ValueError("2-section lives on a different presentation")
        self.algebroid = algebroid
        self.lam = lam
        self.jacobiator = schouten(lam, lam)
        self.involutive = self.jacobiator.is_zero()

    def require_involutive(self):
        if not self.involutive:
            raise ValueError(
                "involutivity certificate failed: [lam, lam] != 0"
            )

    def matrix(self):
        """Λ[a][b] = λ(ε^a, ε^b)."""
        r = self.algebroid.rank
        return [[self.lam.value_on((a, b)) for b in range(r)] for a in range(r)]

    def sharp(self, alpha):
        """λ^♯α, the section with β(λ^♯α) = λ(α, β)."""
        if alpha.degree != 1:
            raise ValueError("sharp takes a 1-form")
        A = self.algebroid
        coeffs = []
        for b in range(A.rank):
            val = A.chart.zero()
            for a in range(A.rank):
                c = alpha.coefficient((a,))
                if c.is_zero():
                    continue
                lab = self.lam.value_on((a, b))
                if not lab.is_zero():
                    val = val + c * lab
            coeffs.append(val)
        return Section(A, coeffs)

    def pair(self, alpha, beta):
        """λ(α, β) = ⟨λ, α∧β⟩."""
        return pairing(self.lam, alpha.wedge(beta))

    def poisson_bracket(self, f, g):
        """{f, g} = ι(λ)(d_A f ∧ d_A g)."""
        A = self.algebroid
        return self.pair(d(A, A.chart.scalar(f)), d(A, A.chart.scalar(g)))

    def hamiltonian_section(self, f):
        """The Hamiltonian section λ^♯(d_A f) (= schouten(λ, f))."""
        return self.sharp(d(self.algebroid, self.algebroid.chart.scalar(f)))

    def d_lambda(self, u):
        """The Poisson differential [λ, ·] on multisections; squares to zero
        exactly when the involutivity certificate holds."""
        return schouten(self.lam, u)

    def bracket_one_forms(self, alpha, beta):
        """The Koszul bracket on 1-forms:
        {α,β} = ι(λ^♯α) d_Aβ − ι(λ^♯β) d_Aα + d_A (ι(λ)(α∧β))."""
        A = self.algebroid
        first = contract(self.sharp(alpha), d(A, beta))
        second = contract(self.sharp(beta), d(A, alpha))
        third = d(A, contract_multi(self.lam, alpha.wedge(beta)))
        return first - second + third

    def dual_algebroid(self):
        """The algebroid structure on the dual bundle: anchor an∘λ^♯,
        bracket the Koszul bracket on the dual frame.  Requires the
        involutivity certificate (the axioms fail otherwise)."""
        self.require_involutive()
        A = self.algebroid
        r = A.rank
        frame_forms = [
            FormField(A, 1, {(a,): A.chart.one()}) for a in range(r)
        ]
        anchor = [self.sharp(frame_forms[a]).anchor() for a in range(r)]
        structure = []
        for a in range(r):
            row = []
            for b in range(r):
                bracket = self.bracket_one_forms(frame_forms[a], frame_forms[b])
                row.append([bracket.coefficient((c,)) for c in range(r)])
            structure.append(row)
        return Algebroid(A.chart, anchor, structure)

    def sharp_morphism(self):
        """λ^♯ as a morphism from the dual algebroid to A (an algebroid
        morphism exactly when λ is involutive)."""
        A = self.algebroid
        dual = self.dual_algebroid()
        lam_matrix = self.matrix()
        fibre = [[lam_matrix[a][b] for a in range(A.rank)] for b in range(A.rank)]
        base_map = {name: A.chart.coordinate(name) for name in A.chart.coords}
        return AlgebroidMorphism(dual, A, base_map, fibre)

    def base_bivector(self):
        """The induced bivector field on the chart, an(λ) — a Poisson
        bivector whenever λ is involutive."""
        return self.lam.anchor_image()


class SymplecticStructure:
    """A 2-form together with its Gram matrix and musical maps."""

    def __init__(self, algebroid, omega):
        if not isinstance(omega, FormField) or omega.degree != 2:
            raise ValueError("a symplectic structure is a degree-2 form")
        if omega.algebroid is not algebroid:
            raise ValueError("form lives on a different presentation")
        self.algebroid = algebroid
        self.omega = omega
        r = algebroid.rank
        self.gram = [
            [omega.value_on((i, j)) for j in range(r)] for i in range(r)
        ]
        # the empty Gram matrix (rank-0 presentation) is vacuously invertible
        self.determinant = mat_det(self.gram) if r else algebroid.chart.one()
        self.nondegenerate = not self.determinant.is_zero()
        self.closed = d(algebroid, omega).is_zero()

    def flat(self, sigma):
        """ω(·, σ) as a 1-form."""
        A = self.algebroid
        out = {}
        for j in range(A.rank):
            val = A.chart.zero()
            for i, c in enumerate(sigma.coeffs):
                if not c.is_zero() and not self.gram[j][i].is_zero():
                    val = val + self.gram[j][i] * c
            if not val.is_zero():
                out[(j,)] = val
        return FormField(A, 1, out)

    def sharp(self, alpha):
        """The inverse of flat: the section σ with ω(·, σ) = α."""
        if not self.nondegenerate:
            raise ValueError("degenerate form has no sharp")
        target = [alpha.coefficient((j,)) for j in range(self.algebroid.rank)]
        coeffs = mat_solve(self.gram, target)
        return Section(self.algebroid, coeffs)

    def invert(self):
        """The Poisson structure ω⁻¹ (matrix −W⁻¹ so that
        sharp(ω⁻¹) ∘ flat(ω) = id)."""
        if not self.nondegenerate:
            raise ValueError("cannot invert a degenerate form")
        r = self.algebroid.rank
        inv = mat_inv(self.gram) if r else []
        table = {
            (a, b): -inv[a][b] for a in range(r) for b in range(a + 1, r)
        }
        lam = MultiSectionField(self.algebroid, 2, table)
        return PoissonStructure(self.algebroid, lam)

    def hamiltonian_section(self, f):
        return self.invert().hamiltonian_section(f)

    def poisson_bracket(self, f, g):
        return self.invert().poisson_bracket(f, g)


def check_symplectic(algebroid, omega):
    """Closedness, nondegeneracy, and the equivalence of d_Aω = 0 with the
    involutivity of ω⁻¹ — all exact; failures carry witnesses."""
    if isinstance(omega, SymplecticStructure):
        structure = omega
    else:
        structure = SymplecticStructure(algebroid, omega)
    failures = []
    differential = d(algebroid, structure.omega)
    if not differential.is_zero():
        key, coeff = sorted(differential.table.items())[0]
        labels = ",".join(str(i + 1) for i in key)
        failures.append(f"not closed: (d omega)({labels}) = {coeff}")
    if not structure.nondegenerate:
        failures.append("degenerate: det of the Gram matrix is 0")
    if structure.nondegenerate:
        involutive = structure.invert().involutive
        if involutive != structure.closed:
            failures.append(
                "equivalence broken: closedness and involutivity of the "
                "inverse disagree"
            )
    return CheckReport(not failures, tuple(failures))


def coisotropic_test(structure, subbundle):
    """Pointwise coisotropy test of a subbundle W against a Poisson or
    symplectic structure: at each sample point computes the annihilator W°,
    maps it through λ^♯, and tests containment λ^♯(W°) ⊆ W.  Returns a
    CheckReport with one failure line per offending sample.
    """
    if isinstance(structure, SymplecticStructure):
        poisson = structure.invert()
    else:
        poisson = structure
    A = poisson.algebroid
    lam_matrix = poisson.matrix()
    failures = []
    for point, vectors in subbundle.samples.items():
        lam_at = [
            [entry.evaluate(point) for entry in row] for row in lam_matrix
        ]
        basis = [list(map(Fraction, w)) for w in vectors]
        # annihilator: covectors xi with xi . w = 0 for all basis vectors w
        if basis:
            annihilator = rat_nullspace(basis)
        else:
            annihilator = [
                [Fraction(1 if a == b else 0) for b in range(A.rank)]
                for a in range(A.rank)
            ]
        for xi in annihilator:
            image = [
                sum(
                    (xi[a] * lam_at[a][b] for a in range(A.rank)),
                    Fraction(0),
                )
                for b in range(A.rank)
            ]
            if any(image) and _not_in_span(basis, image):
                failures.append(f"not coisotropic at {point}")
                break
    return CheckReport(not failures, tuple(failures))


def submanifold_subbundle(algebroid, fixed, samples):
    """The subbundle W_x = an⁻¹(T_xN) over the submanifold N obtained by
    freezing the coordinates named in `fixed`, recorded at the given sample
    points (which must lie on N)."""
    normal_cols = [algebroid.chart.coords.index(name) for name in fixed]
    if not normal_cols:
        raise ValueError("submanifold needs at least one fixed coordinate")
    table = {}
    for point in samples:
        anchor_at = algebroid.anchor_at(point)
        rows = [
            [anchor_at[i][m] for i in range(algebroid.rank)]
            for m in normal_cols
        ]
        table[tuple(point)] = rat_nullspace(rows)
    return SubBundleAtPoints(dict(fixed), table)


def _not_in_span(basis, vector):
    if not basis:
        return any(vector)
    stacked = [list(b) for b in basis]
    before = rat_rank(stacked)
    after = rat_rank(stacked + [list(vector)])
    return after > before


def poisson_morphism_check(phi, source, target):
    """Exact test that a morphism intertwines two Poisson structures:

        λ_source(φ*ε^a, φ*ε^b) = (λ_target)^{ab} ∘ base map

    for every target frame pair a < b, over the scalar field.  Pointwise
    this is φ ∘ λ_source^♯ ∘ φ* = λ_target^♯.
    """
    if phi.source is not source.algebroid:
        raise ValueError("source structure lives on a different presentation")
    if phi.target is not target.algebroid:
        raise ValueError("target structure lives on a different presentation")
    A = phi.source
    pulled = [
        FormField(A, 1, {(i,): phi.fibre[a][i] for i in range(A.rank)})
        for a in range(phi.target.rank)
    ]
    failures = []
    for a in range(phi.target.rank):
        for b in range(a + 1, phi.target.rank):
            lhs = source.pair(pulled[a], pulled[b])
            rhs = phi.pull_scalar(target.lam.value_on((a, b)))
            if lhs != rhs:
                failures.append(
                    f"not a Poisson morphism on ({a+1},{b+1}): "
                    f"{lhs} != {rhs}"
                )
    return CheckReport(not failures, tuple(failures))
