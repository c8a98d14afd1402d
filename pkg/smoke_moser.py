"""Scratch checks for the flow/Moser layer."""

import math
from fractions import Fraction

from algebroids.algebroid import Algebroid, Section
from algebroids.calculus import FormField, d, homotopy_kappa, RetractionSpec
from algebroids.poisson import SymplecticStructure
from algebroids.reduction import presymplectic_kernel, SymplectizationModel
from algebroids.scalar import Chart
from algebroids.moser import (
    FlowError,
    TimeSection,
    coisotropic_embedding_verify,
    dmw_verify,
    euler_like_check,
    flow_section,
    kappa_numeric,
    log_scaling_retraction,
    moser_verify,
    retraction_check,
    scaling_retraction,
    section_from_vector,
)

# --- log plane ------------------------------------------------------------
plane = Chart(("x", "y"))
LP = Algebroid.log_tangent(plane, ("x",))
x, y = plane.coordinate("x"), plane.coordinate("y")

# flow of e1 = x d/dx from (1, 0): x(1) = e
res = flow_section(LP, LP.frame(0), (1.0, 0.0))
assert abs(res.final_point[0] - math.e) < 1e-7, res.final_point
assert abs(res.final_point[1]) == 0.0
M = res.final_transport
assert max(abs(M[i][j] - (i == j)) for i in range(2) for j in range(2)) < 1e-12
assert res.anchor_ok, res.anchor_defect
V = res.final_variational
assert abs(V[0][0] - math.e) < 1e-7 and abs(V[1][1] - 1.0) < 1e-12

# zero section: identity flow
res0 = flow_section(LP, LP.zero_section(), (0.5, 0.25))
assert res0.final_point == (0.5, 0.25)
assert res0.final_transport == [[1.0, 0.0], [0.0, 1.0]]

# dense output midway: x(t) = e^t
mid = res.base_at(0.5)
assert abs(mid[0] - math.exp(0.5)) < 1e-6, mid

# non-section rejection: d/dx is not in the log span
try:
    section_from_vector(LP, [plane.one(), plane.zero()])
    raise AssertionError("expected rejection")
except ValueError as exc:
    assert "not a section" in str(exc)

# but x d/dx is e1
sec = section_from_vector(LP, [x, plane.zero()])
assert sec == LP.frame(0)

# divisor guard: flow of -e1-ish toward x=0 stays positive; crossing guard
# triggers on a field pushing through 0 (plain tangent plane)
T2 = Algebroid.tangent(plane)
push = Section(T2, [plane.scalar(-1), plane.zero()])
try:
    flow_section(T2, push, (0.5, 0.0), 1.0, guard=("x",))
    raise AssertionError("expected divisor error")
except FlowError as exc:
    assert exc.kind == "divisor", (exc.kind, exc)

# pole: flow of (1/x) d/dx reaches... 1/x is not a section coefficient issue;
# use coefficient with pole: sigma = (1/(1-x)) e1 on tangent line-ish
pole_sec = Section(T2, [plane.scalar("1/(1-x)"), plane.zero()])
try:
    flow_section(T2, pole_sec, (0.9, 0.0), 2.0)
    raise AssertionError("expected pole/underflow error")
except FlowError as exc:
    assert exc.kind in ("pole", "underflow"), exc.kind

# chart exit
try:
    flow_section(T2, Section(T2, [plane.one(), plane.zero()]), (0.0, 0.0), 1.0,
                 region=((-0.5, 0.5), (-0.5, 0.5)))
    raise AssertionError("expected chart exit")
except FlowError as exc:
    assert exc.kind == "chart-exit"

# time-dependent: sigma_t = t x e1 on the tangent plane: x' = t x, so
# x(1) = sqrt(e) x0
TS = TimeSection(T2, ["_t * x", 0])
res_t = flow_section(T2, TS, (1.0, 0.0))
assert abs(res_t.final_point[0] - math.exp(0.5)) < 1e-7, res_t.final_point

# --- euler-like ------------------------------------------------------------
radial = Section(T2, [x, y])
rep = euler_like_check(T2, radial, ("x", "y"))
assert rep.ok, rep.failures

line = Chart(("x",))
T1 = Algebroid.tangent(line)
xx = line.coordinate("x")
quad = Section(T1, [xx * xx])
rep2 = euler_like_check(T1, quad, ("x",))
assert not rep2.ok and "radial ratio" in rep2.failures[0], rep2.failures

twice = Section(T1, [2 * xx])
rep3 = euler_like_check(T1, twice, ("x",))
assert not rep3.ok
assert "2" in rep3.failures[0], rep3.failures

# non-vanishing coefficient
rep4 = euler_like_check(LP, LP.frame(0), ("x",))
assert not rep4.ok and "vanish" in rep4.failures[0]

# --- retractions -----------------------------------------------------------
rad_spec = scaling_retraction(T2, ("x", "y"), radial)
assert rad_spec.mu == [Fraction(-1), Fraction(-1)], rad_spec.mu
assert retraction_check(rad_spec).ok

log_spec = log_scaling_retraction(LP, ("x",))
assert log_spec.mu == [Fraction(0), Fraction(0)], log_spec.mu
assert log_spec.euler == LP.frame(0)

# y-scaling on the log plane: euler-like with mu = [0, -1]
y_euler = Section(LP, [plane.zero(), y])
y_spec = scaling_retraction(LP, ("y",), y_euler)
assert y_spec.mu == [Fraction(0), Fraction(-1)], y_spec.mu
assert retraction_check(y_spec).ok

# --- numeric kappa vs symbolic ----------------------------------------------
alpha = FormField(T2, 2, {(0, 1): x * x * y + 3})
sym = homotopy_kappa(rad_spec, alpha)
num = kappa_numeric(rad_spec, alpha)
pt = (0.3, -0.7)
for j in range(2):
    want = sym.coefficient((j,)).compile()(pt)
    got = num.coefficient_at((j,), pt)
    assert abs(want - got) < 1e-8, (j, want, got)
assert num.homotopy_defect([pt, (0.1, 0.2)]) < 1e-7

# log retraction kappa: diff = xy eps1^eps2, kappa = xy eps2
diff = FormField(LP, 2, {(0, 1): x * y})
k_log = homotopy_kappa(log_spec, diff)
assert k_log == FormField(LP, 1, {(1,): x * y}), k_log
n_log = kappa_numeric(log_spec, diff)
assert abs(n_log.coefficient_at((1,), (0.5, 0.25)) - 0.125) < 1e-9
assert n_log.homotopy_defect([(0.5, 0.25), (1.0, -0.5)]) < 1e-7

# --- moser on the log plane --------------------------------------------------
w0 = FormField(LP, 2, {(0, 1): 1})
w1 = FormField(LP, 2, {(0, 1): 1 + x * y})
assert w1 - w0 == d(LP, FormField(LP, 1, {(1,): x * y}))
alpha_m = FormField(LP, 1, {(1,): -x * y})
region = ((Fraction(1, 4), 1), (Fraction(-1, 2), Fraction(1, 2)))
report = moser_verify(LP, w0, w1, alpha_m, region, tol=1e-6)
print("moser defect:", report.max_defect, "anchor:", report.anchor_defect)
assert report.ok, report.describe()
assert report.max_defect <= 1e-6

# order check at the default tolerance pair: tightening the integrator
# tolerance tenfold shrinks the defect at least tenfold
loose = moser_verify(LP, w0, w1, alpha_m, region, tol=1e-2, integrator_tol=1e-8)
tight = moser_verify(LP, w0, w1, alpha_m, region, tol=1e-2, integrator_tol=1e-9)
ratio = loose.max_defect / max(tight.max_defect, 1e-300)
print("order:", loose.max_defect, tight.max_defect, ratio)
assert ratio >= 10.0, ratio

# bad primitive rejected
try:
    moser_verify(LP, w0, w1, FormField(LP, 1, {(1,): x}), region)
    raise AssertionError("expected precondition error")
except ValueError as exc:
    assert "not exact" in str(exc)

# identity pair
rep_id = moser_verify(LP, w0, w0, FormField(LP, 1), region, tol=1e-12, grid=2)
assert rep_id.max_defect == 0.0

# --- dmw on the log plane -----------------------------------------------------
dreport = dmw_verify(LP, w0, w1, log_spec, region, tol=1e-6)
print("dmw:", dreport.max_defect, dreport.base_residual, dreport.frame_residual)
print(dreport.describe())
assert dreport.ok
assert dreport.notes[0].startswith("primitive: symbolic")

# disagreement witness
w_bad = FormField(LP, 2, {(0, 1): 1 + y})
try:
    dmw_verify(LP, w0, w_bad, log_spec, region)
    raise AssertionError("expected disagreement error")
except ValueError as exc:
    assert "disagree" in str(exc)

# identity
rep_same = dmw_verify(LP, w0, w0, log_spec, region, tol=1e-12, grid=2)
assert rep_same.max_defect == 0.0 and rep_same.base_residual == 0.0

# --- coisotropic: rank-3 model, two splittings -------------------------------
c3 = Chart(("x", "y", "z"))
A3 = Algebroid.tangent(c3)
wB = FormField(A3, 2, {(0, 1): 1})
data = presymplectic_kernel(A3, wB, samples=((0, 0, 0), (1, 2, 3)))
model = SymplectizationModel(data)
other = [[c3.coordinate("x") * c3.coordinate("y")], [c3.scalar("z")], [c3.one()]]
rep_c = coisotropic_embedding_verify(model, other, grid=3)
print("coisotropic:", rep_c.max_defect, rep_c.base_residual, rep_c.frame_residual)
assert rep_c.ok, rep_c.describe()

# same splitting: identity
rep_same2 = coisotropic_embedding_verify(model, model.splitting, grid=2, tol=1e-12)
assert rep_same2.max_defect == 0.0

# --- lagrangian case: phase-space model, perturbed canonical form ------------
lag_line = Chart(("x",))
TL = Algebroid.tangent(lag_line)

lag_data = presymplectic_kernel(TL, FormField(TL, 2), samples=((0,), (1,)))
lag = SymplectizationModel(lag_data)
LA = lag.algebroid
q1 = LA.chart.coordinate("q1")
eta = FormField(LA, 1, {(0,): q1 * q1 / 4})
w_lag0 = lag.form
w_lag1 = w_lag0 + d(LA, eta)
from algebroids.moser import scaling_retraction as _sr

lag_euler = Section(LA, [LA.chart.zero(), q1])
lag_spec = _sr(LA, ("q1",), lag_euler)
rep_lag = dmw_verify(
    LA, w_lag0, w_lag1, lag_spec,
    ((Fraction(-1, 2), Fraction(1, 2)), (Fraction(-1, 2), Fraction(1, 2))),
    grid=3,
)
print("lagrangian:", rep_lag.max_defect, rep_lag.base_residual,
      rep_lag.frame_residual)
assert rep_lag.ok, rep_lag.describe()

# --- numeric-kappa dmw branch (rational scale dependence) ---------------------
f = x * y * y / (1 + x * x)
eta2 = FormField(T2, 1, {(1,): f})
w_n0 = FormField(T2, 2, {(0, 1): 1})
w_n1 = w_n0 + d(T2, eta2)
rep_num = dmw_verify(
    T2, w_n0, w_n1, rad_spec,
    ((Fraction(-1, 2), Fraction(1, 2)), (Fraction(-1, 2), Fraction(1, 2))),
    grid=2,
    integrator_tol=1e-6,
    tol=1e-4,
)
print("numeric dmw:", rep_num.max_defect, rep_num.notes)
assert rep_num.ok, rep_num.describe()
assert any("quadrature" in note for note in rep_num.notes)

print("moser smoke OK")
