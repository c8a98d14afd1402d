"""The phase space of an algebroid presentation.

For a presentation B over a chart x with frame (b_1, …, b_r), the phase
space lives over the dual-bundle chart (x, p) and is the pullback of B
along the projection (x, p) ↦ x: its frame is the horizontal lifts
e_1, …, e_r followed by the vertical fields f_1, …, f_r = ∂/∂p_j.  It
carries the tautological 1-form α = Σ p_i ε^i and the canonical symplectic
form ω = −d_A α, whose only nonzero frame pairings are

    ω(e_i, e_j) = C_ij = Σ_k c_ij^k p_k,     ω(e_i, f_j) = δ_ij.

Inverting ω gives the fibrewise-linear Poisson structure with
{x_m, p_i} = an(b_i)^m and {p_i, p_j} = −C_ij; `verify_linear_poisson`
rebuilds that bivector directly from the presentation data and compares it
against an(ω⁻¹) exactly.
"""

from __future__ import annotations

from .algebroid import (
    CheckReport,
    morphism_check,
    pullback_projection,
    restrict_to_subspace,
)
from .calculus import FormField, d, pullback_form
from .poisson import SymplecticStructure
from .scalar import mat_det


class PhaseSpace:
    """The phase-space presentation of a base algebroid, bundled with its
    tautological 1-form, canonical symplectic structure, and the projection
    morphism back to the base."""

    def __init__(self, base, momenta=None):
        if momenta is None:
            momenta = tuple(f"p{i+1}" for i in range(base.rank))
        momenta = tuple(momenta)
        if len(momenta) != base.rank:
            raise ValueError("one momentum coordinate per frame section")
        for name in momenta:
            if name in base.chart.coords:
                raise ValueError(f"momentum name {name!r} collides with the chart")
        self.base = base
        self.momenta = momenta
        total_chart = base.chart.extended(momenta, front=False)
        self.algebroid, self.projection = pullback_projection(base, total_chart)
        self.chart = total_chart
        r = base.rank
        self.alpha = FormField(
            self.algebroid,
            1,
            {(i,): total_chart.coordinate(momenta[i]) for i in range(r)},
        )
        self.omega = SymplecticStructure(self.algebroid, -d(self.algebroid, self.alpha))

    @property
    def rank(self):
        return self.algebroid.rank

    def structure_pairing(self):
        """The matrix C with C_ij = Σ_k c_ij^k p_k (the (e, e) block of ω)."""
        r = self.base.rank
        chart = self.chart
        p = [chart.coordinate(name) for name in self.momenta]
        out = []
        for i in range(r):
            row = []
            for j in range(r):
                entry = chart.zero()
                for k in range(r):
                    c = self.base.structure[i][j][k]
                    if not c.is_zero():
                        entry = entry + chart.embed(c) * p[k]
                row.append(entry)
            out.append(row)
        return out

    def canonical_matrix(self):
        """The matrix of the contraction map σ ↦ ι_σ ω in the frame
        (e_1, …, e_r, f_1, …, f_r): the block form ((−C, −I), (I, 0))."""
        W = self.omega.gram
        return [[W[j][i] for j in range(self.rank)] for i in range(self.rank)]

    def poisson(self):
        """ω⁻¹, the fibrewise-linear Poisson structure."""
        return self.omega.invert()


def phase_space(base, momenta=None):
    return PhaseSpace(base, momenta)


def verify_linear_poisson(ps):
    """Rebuild the linear Poisson bivector on the dual-bundle chart directly
    from the presentation data ({x_m, p_i} = an(b_i)^m, {p_i, p_j} = −C_ij)
    and compare it exactly with the anchor image of ω⁻¹.  Both live in the
    tangent frame of the total chart."""
    ps.omega.invert().require_involutive()
    image = ps.poisson().base_bivector()
    tangent = image.algebroid
    chart = ps.chart
    n = ps.base.chart.dim
    r = ps.base.rank
    C = ps.structure_pairing()
    table = {}
    for i in range(r):
        for m in range(n):
            entry = chart.embed(ps.base.anchor[i][m])
            if not entry.is_zero():
                table[(m, n + i)] = table.get((m, n + i), chart.zero()) + entry
    for i in range(r):
        for j in range(i + 1, r):
            if not C[i][j].is_zero():
                table[(n + i, n + j)] = -C[i][j]
    from .calculus import MultiSectionField

    oracle = MultiSectionField(tangent, 2, table)
    failures = []
    if image != oracle:
        diff = image - oracle
        key, coeff = sorted(diff.table.items())[0]
        failures.append(
            f"bivector mismatch at tangent pair {key}: difference {coeff}"
        )
    det = mat_det(ps.omega.gram)
    if det * det != chart.one():
        failures.append(f"det of the Gram matrix is {det}, expected +-1")
    return CheckReport(not failures, tuple(failures))


def zero_section_check(ps, sample_points=()):
    """The zero section p = 0 is a Lagrangian-type calibration: the
    tautological form (hence ω) pulls back to zero, and the restricted
    algebroid is isomorphic to the base via the projection."""
    fixed = {name: 0 for name in ps.momenta}
    restricted, inclusion = restrict_to_subspace(ps.algebroid, fixed, sample_points)
    failures = []
    if restricted.rank != ps.base.rank:
        failures.append(
            f"restricted rank {restricted.rank} != base rank {ps.base.rank}"
        )
    if not pullback_form(inclusion, ps.alpha).is_zero():
        failures.append("tautological form does not vanish on the zero section")
    if not pullback_form(inclusion, ps.omega.omega).is_zero():
        failures.append("canonical form does not vanish on the zero section")
    composite = ps.projection.compose(inclusion)
    report = morphism_check(composite)
    if not report.ok:
        failures.extend(
            f"projection o inclusion: {line}" for line in report.failures
        )
    if restricted.rank == ps.base.rank and restricted.rank:
        if mat_det(composite.fibre).is_zero():
            failures.append("projection o inclusion is not a frame isomorphism")
    return CheckReport(not failures, tuple(failures))
