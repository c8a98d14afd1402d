"""Scratch checks for the reduction module (folded into tests/ later)."""

import sys

sys.path.insert(0, "/root/pkg/src")

from fractions import Fraction

from algebroids.scalar import Chart
from algebroids.algebroid import Algebroid, AlgebroidMorphism
from algebroids.calculus import FormField, MultiSectionField
from algebroids.poisson import (
    PoissonStructure,
    SymplecticStructure,
    check_symplectic,
)
from algebroids.reduction import (
    hamiltonian_reduce,
    induced_divisor,
    log_groupoid_form,
    log_linear_poisson,
    presymplectic_kernel,
    reduce_along_slice,
    reduce_at_point,
    symplectize,
)

# --- presymplectic kernel + symplectization on the rank-3 tangent model ----
ch3 = Chart(("x", "y", "z"))
B3 = Algebroid.tangent(ch3)
omega3 = FormField(B3, 2, {(0, 1): 1})
data3 = presymplectic_kernel(B3, omega3, samples=[(1, 2, 3), (0, 0, 0)])
assert data3.kernel_rank == 1
assert [c.evaluate((1, 1, 1)) for c in data3.kernel[0]] == [0, 0, 1]

# canonical splitting: the kernel-dual column
model = symplectize(B3, omega3, splitting=[[0], [0], [1]], samples=[(1, 2, 3)])
assert model.chart.coords == ("x", "y", "z", "q1")
assert model.algebroid.rank == 4
report = model.model_form_report()
assert report.ok, report.failures
table = model.block_table()
# four-line table: fibre pair block empty (single q), base block, identity pairing
assert table[0][1] == ch3.one() and table[0][2].is_zero() and table[1][2].is_zero()
assert table[2][3] == ch3.one() and table[0][3].is_zero() and table[1][3].is_zero()
cois = model.zero_section_coisotropic([(1, 2, 3), (2, -1, 5)])
assert cois.ok, cois.failures

# a non-constant splitting still satisfies every invariant
model_xy = symplectize(
    B3, omega3, splitting=[["x*y", ], [0], [1]], samples=[(1, 2, 3)]
)
rep2 = model_xy.model_form_report()
assert rep2.ok, rep2.failures
assert model_xy.block_table()[0][3] == ch3.parse("x*y")

# an invalid splitting is rejected exactly
try:
    symplectize(B3, omega3, splitting=[[0], [0], ["1 + x^2"]])
    raise AssertionError("expected rejection")
except ValueError as e:
    assert "not a splitting" in str(e)

# nondegenerate form: model collapses back onto the base chart
ch2 = Chart(("x", "y"))
A2 = Algebroid.log_tangent(ch2, ("x",))
w2 = FormField(A2, 2, {(0, 1): 1})
flat_model = symplectize(A2, w2, samples=[(1, 1)])
assert flat_model.chart.coords == ("x", "y")
assert flat_model.algebroid.rank == 2
assert flat_model.form == FormField(flat_model.algebroid, 2, {(0, 1): 1})

# zero form: the model is the phase space with its canonical form
zero_model = symplectize(A2, FormField(A2, 2, {}), samples=[(1, 1)])
assert zero_model.chart.coords == ("x", "y", "q1", "q2")
gram0 = zero_model.block_table()
assert gram0[0][1].is_zero() and gram0[0][2] == ch2.one() and gram0[1][3] == ch2.one()
sym0 = check_symplectic(zero_model.algebroid, zero_model.form)
assert sym0.ok

# --- reduce_along_slice on the rank-3 model ---------------------------------
C3, sC3, inc3 = reduce_along_slice(data3, {"z": 0}, [(1, 2, 0), (4, -1, 0)])
assert C3.rank == 2 and C3.chart.coords == ("x", "y")
assert sC3.gram[0][1] == C3.chart.one()

# --- Hamiltonian reduction: log plane, nonzero value ------------------------
chA = Chart(("x", "y"))
A = Algebroid.log_tangent(chA, ("x",))
omega = FormField(A, 2, {(0, 1): 1})
structure = SymplecticStructure(A, omega)
chE = Chart(("t",))
E = Algebroid.log_tangent(chE, ("t",))
lamE = PoissonStructure(E, MultiSectionField(E, 2, {}))
mu = AlgebroidMorphism(A, E, {"t": chA.coordinate("x")}, [[1, 0]])

res1 = hamiltonian_reduce(
    structure, mu, lamE, (1,), [], slice_fixed={"y": 0},
    samples=[(1, 0), (1, 3)],
)
assert res1.algebroid.rank == 0 and res1.algebroid.chart.dim == 0
assert res1.moment_fibre.rank == 1
assert res1.data.kernel_rank == 1
assert len(res1.symmetry_basis) == 1
assert res1.free
print("\n".join(res1.transcript))
print("---")

# --- Hamiltonian reduction: log plane, zero value ---------------------------
res2 = hamiltonian_reduce(
    structure, mu, lamE, (0,), [(1,)], slice_fixed={},
    samples=[(0, 0), (0, 2)],
)
assert res2.algebroid.rank == 2 and res2.algebroid.chart.coords == ("y",)
assert res2.data.kernel_rank == 0
assert res2.structure.gram[0][1] == res2.algebroid.chart.one()
assert res2.free
print("\n".join(res2.transcript))
print("---")

# --- identity moment at a stabilized point ----------------------------------
ch4 = Chart(("x1", "x2", "x3", "x4"))
A4 = Algebroid.log_tangent(ch4, ("x1", "x2"))
w4 = FormField(A4, 2, {(0, 1): 1, (2, 3): 1})
s4 = SymplecticStructure(A4, w4)
lam4 = s4.invert()
ident = AlgebroidMorphism.identity(A4)
pt = (0, 0, 5, 7)
stab = A4.stabilizer(pt)
assert stab == [[1, 0, 0, 0], [0, 1, 0, 0]]

try:
    hamiltonian_reduce(s4, ident, lam4, pt, stab, samples=[pt])
    raise AssertionError("expected freeness failure")
except ValueError as e:
    assert "local freeness" in str(e)

res3 = hamiltonian_reduce(
    s4, ident, lam4, pt, stab, samples=[pt], require_free=False
)
assert not res3.free
assert res3.algebroid.rank == 2 and res3.algebroid.chart.dim == 0
assert res3.moment_fibre.rank == 2
assert res3.structure.gram[0][1] == res3.algebroid.chart.one()
assert any("local freeness fails" in line for line in res3.transcript)
print("\n".join(res3.transcript))
print("---")

# a subalgebra with full omega-radical intersection still reduces: with the
# identity moment, mu^{-1}(span e1) = span e1, which is isotropic, so the
# kernel is everything and the quotient a/(a ∩ a^omega) collapses to rank 0.
res4 = hamiltonian_reduce(
    s4, ident, lam4, pt, [(1, 0, 0, 0)], samples=[pt], require_free=False
)
assert res4.moment_fibre.rank == 1
assert res4.data.kernel_rank == 1
assert len(res4.symmetry_basis) == 1
assert res4.algebroid.rank == 0
print("\n".join(res4.transcript))

# --- induced divisor bookkeeping --------------------------------------------
info = induced_divisor({"x": 0}, ("x",))
assert info.divisor == () and info.central_rank == 1 and info.missed == ()
info = induced_divisor({"y": 0}, ("x",))
assert info.divisor == ("x",) and info.central_rank == 0
info = induced_divisor({}, ("x", "y"))
assert info.divisor == ("x", "y") and info.central_rank == 0
info = induced_divisor({"x": 1}, ("x", "y"))
assert info.divisor == ("y",) and info.central_rank == 0 and info.missed == ("x",)

# --- log-linear Poisson structures -------------------------------------------
# aff(1): [v1, v2] = v2 with v1* a character
aff = [
    [[0, 0], [0, 1]],
    [[0, -1], [0, 0]],
]
P_aff = log_linear_poisson(aff, 1)
assert P_aff.involutive
assert P_aff.lam.value_on((0, 1)) == P_aff.algebroid.chart.coordinate("x2")
image = P_aff.base_bivector()
T = image.algebroid
x1 = T.chart.coordinate("x1")
x2 = T.chart.coordinate("x2")
assert image == MultiSectionField(T, 2, {(0, 1): x1 * x2})

# Heisenberg: [X, Y] = Z with X* a character
heis = [[[0] * 3 for _ in range(3)] for _ in range(3)]
heis[0][1][2] = 1
heis[1][0][2] = -1
P_h = log_linear_poisson(heis, 1)
assert P_h.involutive
img_h = P_h.base_bivector()
Th = img_h.algebroid
assert img_h == MultiSectionField(
    Th, 2, {(0, 1): Th.chart.parse("x1*x3")}
)

# abelian: zero structure
P_ab = log_linear_poisson([[[0]] * 1], 1)
assert P_ab.lam.is_zero()

# Z* is not a character of the Heisenberg algebra
bad = [[[0] * 3 for _ in range(3)] for _ in range(3)]
bad[1][2][0] = 1
bad[2][1][0] = -1
try:
    log_linear_poisson(bad, 1)
    raise AssertionError("expected character failure")
except ValueError as e:
    assert "not a character" in str(e)

# --- groupoid model form ------------------------------------------------------
G_aff = log_groupoid_form(aff, 1)
assert G_aff.closed and G_aff.determinant == G_aff.algebroid.chart.one()
g = G_aff.gram
chg = G_aff.algebroid.chart
assert g[0][1] == -chg.coordinate("x2")
assert g[0][2] == chg.one() and g[1][3] == chg.one()
assert g[2][3].is_zero()

# dropping the correction term breaks closedness
bare = FormField(G_aff.algebroid, 2, {(0, 2): 1, (1, 3): 1})
bad_report = check_symplectic(G_aff.algebroid, bare)
assert not bad_report.ok
assert any("not closed" in f for f in bad_report.failures)

# the trivial algebra gives the standard pairing form
G_triv = log_groupoid_form([[[0]]], 0)
assert G_triv.closed and G_triv.gram[0][1] == G_triv.algebroid.chart.one()

print("reduction smoke OK")
