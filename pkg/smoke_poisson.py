import random
import sys

sys.path.insert(0, "src")

from fractions import Fraction

from algebroids.algebroid import Algebroid, SubBundleAtPoints, morphism_check
from algebroids.calculus import FormField, MultiSectionField, d, schouten
from algebroids.poisson import (
    PoissonStructure,
    SymplecticStructure,
    check_symplectic,
    coisotropic_test,
    submanifold_subbundle,
)
from algebroids.scalar import Chart

random.seed(7)

# --- log symplectic plane: (R^2, {x=0}), frame (x dx, dy) -------------------
log_plane = Algebroid.log_tangent(Chart(("x", "y")), ("x",))
ch = log_plane.chart
one = ch.one()

omega = SymplecticStructure(
    log_plane, FormField(log_plane, 2, {(0, 1): one})
)
assert omega.closed and omega.nondegenerate

lam_ps = omega.invert()
# omega^{-1} = e1 ^ e2
assert lam_ps.lam == MultiSectionField(log_plane, 2, {(0, 1): one}), lam_ps.lam
assert lam_ps.involutive

# sharp(lam, d y) = -e1
dy = d(log_plane, ch.coordinate("y"))
sig = lam_ps.sharp(dy)
assert sig.coeffs[0] == -one and sig.coeffs[1].is_zero(), sig

# hamiltonian section of y equals schouten(lam, y)
ham = lam_ps.hamiltonian_section("y")
sch = schouten(lam_ps.lam, ch.coordinate("y"))
assert [ham.coeffs[i] for i in range(2)] == [sch.coefficient((i,)) for i in range(2)]

# {x, y} = x ; {f, f} = 0
assert lam_ps.poisson_bracket("x", "y") == ch.coordinate("x")
f = ch.parse("x^2*y + 3*y")
assert lam_ps.poisson_bracket(f, f).is_zero()
assert omega.poisson_bracket("x", "y") == ch.coordinate("x")

# flat/sharp inverse pair
alpha = FormField(log_plane, 1, {(0,): ch.parse("y+2"), (1,): ch.parse("x*y")})
assert omega.flat(omega.sharp(alpha)) == alpha

# sharp(omega^{-1}) o flat(omega) = id on random sections
from algebroids.algebroid import Section
sec = Section(log_plane, [ch.parse("x-3*y"), ch.parse("1+x*y")])
assert lam_ps.sharp(omega.flat(sec)) == sec

# --- check_symplectic: failing closedness witness on rank 3 ----------------
three = Algebroid.tangent(Chart(("x", "y", "z")))
ch3 = three.chart
bad = FormField(three, 2, {(0, 1): ch3.coordinate("z"), (0, 2): ch3.one(), (1, 2): ch3.one()})
rep = check_symplectic(three, bad)
assert not rep.ok and any("not closed" in f for f in rep.failures), rep.failures

# degenerate on rank 3: eps1^eps2 only
degen = FormField(three, 2, {(0, 1): ch3.one()})
rep2 = check_symplectic(three, degen)
assert not rep2.ok and any("degenerate" in f for f in rep2.failures), rep2.failures
try:
    SymplecticStructure(three, degen).invert()
    raise AssertionError("expected degenerate invert to fail")
except ValueError:
    pass

# good symplectic on tangent plane: omega0 = eps1 ^ eps2
plane = Algebroid.tangent(Chart(("x", "y")))
chp = plane.chart
om0 = SymplecticStructure(plane, FormField(plane, 2, {(0, 1): chp.one()}))
assert check_symplectic(plane, om0.omega).ok

# --- dual algebroid -----------------------------------------------------
dual = lam_ps.dual_algebroid()
repd = dual.check_axioms()
assert repd.ok, repd.failures
mor = lam_ps.sharp_morphism()
repm = morphism_check(mor)
assert repm.ok, repm.failures

# sharp intertwines Koszul bracket with the algebroid bracket
e1f = FormField(log_plane, 1, {(0,): one})
e2f = FormField(log_plane, 1, {(1,): one})
a1 = ch.parse("1+x") * e1f + ch.parse("y") * e2f
b1 = ch.parse("x*y") * e1f + ch.parse("2") * e2f
lhs = lam_ps.sharp(lam_ps.bracket_one_forms(a1, b1))
rhs = lam_ps.sharp(a1).bracket(lam_ps.sharp(b1))
assert lhs == rhs, (lhs, rhs)

# lam = 0 -> abelian dual with zero anchor
zero_ps = PoissonStructure(log_plane, MultiSectionField(log_plane, 2, {}))
dz = zero_ps.dual_algebroid()
assert all(entry.is_zero() for row in dz.anchor for entry in row)
assert all(
    dz.structure[i][j][k].is_zero()
    for i in range(2) for j in range(2) for k in range(2)
)

# log symplectic case: dual is isomorphic to A via the sharp morphism with
# invertible fibre matrix
import algebroids.scalar as sc
det = sc.mat_det(mor.fibre)
assert not det.is_zero()

# base bivector {x,y} = x: an(lam) = x dx ^ dy
bb = lam_ps.base_bivector()
assert bb.value_on((0, 1)) == ch.coordinate("x"), bb

# --- non-involutive refusal -------------------------------------------------
# On the tangent 3-space lam = y e1^e2 + x e2^e3 has Jacobiator x e1^e2^e3.
bad_lam = MultiSectionField(
    three, 2, {(0, 1): ch3.coordinate("y"), (1, 2): ch3.coordinate("x")}
)
bad_ps = PoissonStructure(three, bad_lam)
assert not bad_ps.involutive
try:
    bad_ps.dual_algebroid()
    raise AssertionError("expected refusal")
except ValueError as e:
    assert "involutivity" in str(e)

# --- coisotropic tests -------------------------------------------------------
pts = [(0, 0), (0, 2)]
# line span(e1) at points of N = {x = 0} in the log plane: coisotropic
w_line = SubBundleAtPoints({"x": 0}, {p: [[Fraction(1), Fraction(0)]] for p in pts})
assert coisotropic_test(lam_ps, w_line).ok

# span(e2) at the origin: lam^sharp(ann) = lam^sharp(eps1) = e2... wait
w_e2 = SubBundleAtPoints({"x": 0}, {p: [[Fraction(0), Fraction(1)]] for p in pts})
rep_e2 = coisotropic_test(lam_ps, w_e2)
print("span(e2) coisotropic:", rep_e2.ok)

# zero subbundle: lam^sharp(everything) must be 0 -- fails where lam != 0 ...
w_zero = SubBundleAtPoints({}, {(1, 0): []})
rep_zero = coisotropic_test(lam_ps, w_zero)
assert not rep_zero.ok  # at x=1 lam is nonzero, zero subspace not coisotropic

# full fibre always coisotropic
w_full = SubBundleAtPoints(
    {}, {(1, 0): [[Fraction(1), Fraction(0)], [Fraction(0), Fraction(1)]]}
)
assert coisotropic_test(lam_ps, w_full).ok

# submanifold N = {x=0} in the log plane: an^{-1}(TN) is the whole fibre
# (both anchors tangent to N there), so coisotropic.
sub = submanifold_subbundle(log_plane, {"x": 0}, [(0, 0), (0, 1)])
assert sub.samples[(0, 0)] and coisotropic_test(lam_ps, sub).ok

# Lagrangian zero-sections etc. come with phase spaces; here check a
# symplectic-structure-valued call routes through invert()
assert coisotropic_test(omega, w_full).ok

print("poisson smoke OK")
