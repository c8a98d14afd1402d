"""Flow-based verification of Moser-type normal forms.

The symbolic layers certify the hypotheses of a Moser argument exactly:
primitives of differences of symplectic forms, nondegeneracy along the
interpolation, vanishing on the subspace the normal form is anchored to.
This module integrates the resulting time-dependent flows in floating
point and measures the defects the theorems predict to vanish:

* the pullback defect |(phi_1^* omega_1 - omega_0)(e_i, e_j)| on a grid,
* fixed-point residuals of the base point and the frame transport on the
  anchored subspace,
* the consistency of the frame transport with the variational flow of the
  anchor field (an algebroid flow must cover its base flow).

The integrator is a hand-rolled Dormand-Prince 4(5) pair with cubic
Hermite dense output; tolerances are absolute-plus-relative with a single
knob.  Everything symbolic is prepared once per verification and compiled
to float callables, so the inner loop is plain arithmetic.
"""

import math
from bisect import bisect_left
from dataclasses import dataclass
from fractions import Fraction
from itertools import product

from .algebroid import Algebroid, CheckReport, Section, solve_in_span
from .calculus import (
    _SCALE,
    FormField,
    KappaNotPolynomial,
    RetractionSpec,
    d,
    homotopy_kappa,
    kappa_integrands,
)
from .poisson import check_symplectic
from .scalar import Scalar, mat_det, mat_solve, mat_transpose

_TIME = "_t"


# ---------------------------------------------------------------------------
# Sections for the flow: autonomous, time-dependent, or base vector fields
# ---------------------------------------------------------------------------

def section_from_vector(algebroid, components):
    """Express a base vector field as a frame combination, exactly.

    Raises when the field leaves the pointwise span of the anchor image —
    the coordinate field on a divisor direction of a log presentation is
    the standard example of a non-section.  The frame coefficients must be
    regular wherever the input components are: a solution that exists only
    with new poles (1/x against the divisor frame x d/dx) is rejected.  For
    anchors with a kernel the elimination picks one particular solution, so
    the regularity test is conservative.
    """
    chart = algebroid.chart
    comps = [chart.scalar(c) for c in components]
    n = len(chart.coords)
    if len(comps) != n:
        raise ValueError("one component per base coordinate required")
    if n == 0:
        return algebroid.zero_section()
    matrix = [
        [algebroid.anchor[i][m] for i in range(algebroid.rank)]
        for m in range(n)
    ]
    coeffs = solve_in_span(matrix, comps)
    if coeffs is None:
        raise ValueError(
            "the vector field is not a section: it leaves the image of "
            "the anchor"
        )
    allowed = chart.one().f.denom
    for comp in comps:
        allowed = allowed * comp.f.denom
    for entry in coeffs:
        den = entry.f.denom
        common = den.gcd(allowed)
        while not common.is_ground:
            den = den.quo(common)
            common = den.gcd(allowed)
        if not den.is_ground:
            raise ValueError(
                "the vector field is not a section: it leaves the image of "
                "the anchor along a pole locus of the frame coefficients"
            )
    return Section(algebroid, coeffs)


class TimeSection:
    """A time-dependent section: coefficients over the chart extended by a
    leading flow-time coordinate."""

    def __init__(self, algebroid, coeffs):
        self.algebroid = algebroid
        self.chart = algebroid.chart.extended((_TIME,))
        if len(coeffs) != algebroid.rank:
            raise ValueError("coefficient count must equal the rank")
        self.coeffs = [_on_chart(self.chart, c) for c in coeffs]

    def frozen(self, value):
        """The section at a fixed rational time."""
        value = Fraction(value)
        chart = self.algebroid.chart
        subs = {_TIME: value}
        return Section(
            self.algebroid,
            [chart.embed(c.subs(subs)) for c in self.coeffs],
        )


def _on_chart(chart, value):
    if isinstance(value, Scalar):
        return chart.embed(value)
    return chart.scalar(value)


# ---------------------------------------------------------------------------
# The flow field: everything the integrator needs, compiled to floats
# ---------------------------------------------------------------------------

class _FlowField:
    """Compiled right-hand sides of the joint flow system.

    The state is (x, M, V): the base point, the frame transport with
    M(0) = I whose columns express the images of the frame vectors in the
    frame at the moved point, and the variational matrix of the base flow.
    Writing [sigma_t, e_j] = sum_k G_kj e_k and a(t, x) for the anchor
    image of sigma_t,

        dx/dt = a(t, x),   dM/dt = -G(t, x) M,   dV/dt = (Da)(t, x) V.
    """

    def __init__(self, algebroid, sigma):
        if isinstance(sigma, (list, tuple)):
            sigma = section_from_vector(algebroid, sigma)
        if isinstance(sigma, Section):
            if sigma.algebroid is not algebroid:
                raise ValueError("section belongs to a different presentation")
            sigma = TimeSection(algebroid, sigma.coeffs)
        if not isinstance(sigma, TimeSection) or sigma.algebroid is not algebroid:
            raise ValueError(
                "the flow argument must be a section, a time-dependent "
                "section, or base vector-field components"
            )
        self.algebroid = algebroid
        chart = algebroid.chart
        te = sigma.chart
        n = len(chart.coords)
        r = algebroid.rank
        self.n, self.r = n, r
        emb = te.embed
        anchor = [[emb(entry) for entry in row] for row in algebroid.anchor]
        sig = sigma.coeffs
        velocity = []
        for m in range(n):
            entry = te.zero()
            for i in range(r):
                if not sig[i].is_zero() and not anchor[i][m].is_zero():
                    entry = entry + sig[i] * anchor[i][m]
            velocity.append(entry)
        transport = []
        for k in range(r):
            row = []
            for j in range(r):
                entry = te.zero()
                for i in range(r):
                    c = algebroid.structure[i][j][k]
                    if not sig[i].is_zero() and not c.is_zero():
                        entry = entry + sig[i] * emb(c)
                for m, name in enumerate(chart.coords):
                    if not anchor[j][m].is_zero():
                        entry = entry - anchor[j][m] * sig[k].diff(name)
                row.append(entry)
            transport.append(row)
        jacobian = [
            [velocity[m].diff(name) for name in chart.coords]
            for m in range(n)
        ]
        self._velocity = [e.compile() for e in velocity]
        self._transport = [[e.compile() for e in row] for row in transport]
        self._jacobian = [[e.compile() for e in row] for row in jacobian]

    def eval(self, t, x):
        point = (t, *x)
        a = [f(point) for f in self._velocity]
        g = [[f(point) for f in row] for row in self._transport]
        ja = [[f(point) for f in row] for row in self._jacobian]
        return a, g, ja


class _NumericFlowField:
    """Flow field for a Moser path whose primitive is known only through
    quadrature.  The path runs from omega_1 to omega_0 (so the time-one
    flow carries omega_0 into omega_1, matching `_moser_sigma`); the
    velocity solves iota(sigma) omega_t = kappa(omega_1 - omega_0) with
    the right side evaluated by the numeric homotopy operator, and its
    derivative comes from differentiating under the integral sign, so no
    finite differences enter the transport."""

    def __init__(self, algebroid, gram0, gram1, kappa):
        chart = algebroid.chart
        names = chart.coords
        n = len(names)
        r = algebroid.rank
        self.n, self.r = n, r
        self._w0 = [[e.compile() for e in row] for row in gram0]
        self._w1 = [[e.compile() for e in row] for row in gram1]
        self._dw0 = [
            [[e.diff(nm).compile() for nm in names] for e in row]
            for row in gram0
        ]
        self._dw1 = [
            [[e.diff(nm).compile() for nm in names] for e in row]
            for row in gram1
        ]
        self._anchor = [[e.compile() for e in row] for row in algebroid.anchor]
        self._danchor = [
            [[e.diff(nm).compile() for nm in names] for e in row]
            for row in algebroid.anchor
        ]
        self._structure = [
            [[e.compile() for e in col] for col in row]
            for row in algebroid.structure
        ]
        self._alpha = kappa.vector_fn()
        self._dalpha = kappa.jacobian_fn()

    def eval(self, t, x):
        n, r = self.n, self.r
        wt = [
            [
                (1.0 - t) * self._w1[i][j](x) + t * self._w0[i][j](x)
                for j in range(r)
            ]
            for i in range(r)
        ]
        wt_t = [[wt[j][i] for j in range(r)] for i in range(r)]
        avec = self._alpha(x)
        sigma = _float_solve(wt_t, avec)
        dalpha = self._dalpha(x)
        dsigma = []
        for m in range(n):
            rhs = []
            for j in range(r):
                entry = dalpha[j][m]
                for i in range(r):
                    # the solve matrix is the transpose of the Gram matrix,
                    # so row j differentiates the (i, j) Gram entries
                    dw = (1.0 - t) * self._dw1[i][j][m](x) + t * self._dw0[i][j][m](x)
                    entry -= dw * sigma[i]
                rhs.append(entry)
            dsigma.append(_float_solve(wt_t, rhs))
        an = [[self._anchor[i][m](x) for m in range(n)] for i in range(r)]
        a = [
            sum(sigma[i] * an[i][m] for i in range(r))
            for m in range(n)
        ]
        g = [
            [
                sum(
                    sigma[i] * self._structure[i][j][k](x)
                    for i in range(r)
                )
                - sum(an[j][m] * dsigma[m][k] for m in range(n))
                for j in range(r)
            ]
            for k in range(r)
        ]
        ja = [
            [
                sum(
                    dsigma[mp][i] * an[i][m]
                    + sigma[i] * self._danchor[i][m][mp](x)
                    for i in range(r)
                )
                for mp in range(n)
            ]
            for m in range(n)
        ]
        return a, g, ja


def _float_solve(matrix, rhs):
    """Gaussian elimination with partial pivoting on small float systems."""
    n = len(rhs)
    a = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    for col in range(n):
        pivot = max(range(col, n), key=lambda i: abs(a[i][col]))
        if abs(a[pivot][col]) < 1e-300:
            raise FlowError("pole", "degenerate pairing along the flow")
        a[col], a[pivot] = a[pivot], a[col]
        inv = 1.0 / a[col][col]
        for i in range(n):
            if i != col and a[i][col] != 0.0:
                factor = a[i][col] * inv
                for j in range(col, n + 1):
                    a[i][j] -= factor * a[col][j]
    return [a[i][n] / a[i][i] for i in range(n)]


# ---------------------------------------------------------------------------
# Dormand-Prince 4(5) with cubic Hermite dense output
# ---------------------------------------------------------------------------

class FlowError(RuntimeError):
    """Failure of the flow integration; `kind` is one of 'pole',
    'chart-exit', 'divisor', or 'underflow'."""

    def __init__(self, kind, message):
        super().__init__(message)
        self.kind = kind


_DP_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0)
_DP_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
)
_DP_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_DP_B4 = (
    5179 / 57600,
    0.0,
    7571 / 16695,
    393 / 640,
    -92097 / 339200,
    187 / 2100,
    1 / 40,
)
_MAX_STEPS = 200000


@dataclass
class FlowResult:
    """Trajectory of an algebroid section flow.

    `times`/`states`/`slopes` are the accepted nodes of the adaptive
    integrator (states packed as base point, then the frame transport
    row-major, then the variational matrix row-major); dense output is
    cubic Hermite between nodes.  `anchor_defect` is the worst checkpoint
    mismatch between the transported frame's anchor image and the
    variational image of the initial one — the numerical form of the
    statement that the flow covers its base flow.
    """

    algebroid: Algebroid
    times: tuple
    states: tuple
    slopes: tuple
    steps: int
    rejected: int
    tol: float
    anchor_defect: float = 0.0

    @property
    def anchor_ok(self):
        return self.anchor_defect <= 10.0 * self.tol

    def _unpack(self, state):
        n = len(self.algebroid.chart.coords)
        r = self.algebroid.rank
        x = tuple(state[:n])
        m = [list(state[n + i * r : n + (i + 1) * r]) for i in range(r)]
        off = n + r * r
        v = [list(state[off + i * n : off + (i + 1) * n]) for i in range(n)]
        return x, m, v

    def state_at(self, t):
        times = self.times
        lo_t = min(times[0], times[-1])
        hi_t = max(times[0], times[-1])
        if not (lo_t - 1e-12 <= t <= hi_t + 1e-12):
            raise ValueError("time outside the integrated range")
        if times[-1] >= times[0]:
            idx = bisect_left(times, t)
        else:
            idx = bisect_left([-v for v in times], -t)
        idx = min(max(idx, 1), len(times) - 1)
        lo, hi = idx - 1, idx
        t0, t1 = times[lo], times[hi]
        y0, y1 = self.states[lo], self.states[hi]
        f0, f1 = self.slopes[lo], self.slopes[hi]
        h = t1 - t0
        if h == 0:
            return list(y0)
        u = (t - t0) / h
        h00 = (1 + 2 * u) * (1 - u) ** 2
        h10 = u * (1 - u) ** 2
        h01 = u * u * (3 - 2 * u)
        h11 = u * u * (u - 1)
        return [
            h00 * a + h10 * h * fa + h01 * b + h11 * h * fb
            for a, fa, b, fb in zip(y0, f0, y1, f1)
        ]

    def base_at(self, t):
        return self._unpack(self.state_at(t))[0]

    def transport_at(self, t):
        return self._unpack(self.state_at(t))[1]

    def variational_at(self, t):
        return self._unpack(self.state_at(t))[2]

    @property
    def final_point(self):
        return self._unpack(self.states[-1])[0]

    @property
    def final_transport(self):
        return self._unpack(self.states[-1])[1]

    @property
    def final_variational(self):
        return self._unpack(self.states[-1])[2]


def _pack_rhs(field, n, r):
    def rhs(t, y):
        x = y[:n]
        a, g, ja = field.eval(t, x)
        out = list(a)
        for k in range(r):
            for j in range(r):
                val = 0.0
                for i in range(r):
                    gv = g[k][i]
                    if gv != 0.0:
                        val -= gv * y[n + i * r + j]
                out.append(val)
        off = n + r * r
        for m in range(n):
            for j in range(n):
                val = 0.0
                for i in range(n):
                    jv = ja[m][i]
                    if jv != 0.0:
                        val += jv * y[off + i * n + j]
                out.append(val)
        return out

    return rhs


def _integrate(field, algebroid, start, horizon, tol, guard, region,
               mandatory=()):
    chart = algebroid.chart
    n = len(chart.coords)
    r = algebroid.rank
    x0 = [float(v) for v in start]
    if len(x0) != n:
        raise ValueError("start point has the wrong dimension")
    horizon = float(horizon)
    if horizon == 0.0:
        raise ValueError("the flow horizon must be nonzero")
    guard_idx = []
    index = {name: m for m, name in enumerate(chart.coords)}
    for name in guard:
        if name not in index:
            raise ValueError(f"{name!r} is not a coordinate")
        guard_idx.append(index[name])
    box = None
    if region is not None:
        box = [(float(lo), float(hi)) for lo, hi in region]
        if len(box) != n:
            raise ValueError("one region interval per coordinate required")

    y = x0 + [0.0] * (r * r) + [0.0] * (n * n)
    for i in range(r):
        y[n + i * r + i] = 1.0
    off = n + r * r
    for m in range(n):
        y[off + m * n + m] = 1.0

    rhs = _pack_rhs(field, n, r)

    def checked_rhs(t, state):
        try:
            out = rhs(t, state)
        except (ZeroDivisionError, OverflowError, ValueError):
            return None
        if all(math.isfinite(v) for v in out):
            return out
        return None

    t = 0.0
    f = checked_rhs(t, y)
    if f is None:
        raise FlowError(
            "pole", f"the coefficients are singular at the start point {tuple(x0)}"
        )
    times = [t]
    states = [tuple(y)]
    slopes = [tuple(f)]
    direction = 1.0 if horizon > 0 else -1.0
    # interior times the integrator must land on exactly (checkpoint
    # states are then true nodes, not dense-output interpolants)
    pending = sorted(
        (float(m) for m in mandatory
         if 0.0 < float(m) * direction < abs(horizon)),
        key=lambda v: v * direction,
    )
    mi = 0
    h = direction * abs(horizon) / 100.0
    hmin = 1e-13 * max(abs(horizon), 1.0)
    steps = rejected = 0
    nonfinite = False
    while (horizon - t) * direction > 1e-14 * abs(horizon):
        while mi < len(pending) and (pending[mi] - t) * direction <= hmin:
            mi += 1
        if abs(h) < hmin:
            if nonfinite:
                raise FlowError(
                    "pole",
                    f"the trajectory hit a pole of the coefficients near t = {t:.6g}",
                )
            raise FlowError(
                "underflow",
                f"step size underflow at t = {t:.6g}: the tolerance cannot be met",
            )
        if steps + rejected > _MAX_STEPS:
            raise FlowError("underflow", "step budget exhausted")
        if (t + h - horizon) * direction > 0:
            h = horizon - t
        if mi < len(pending) and (t + h - pending[mi]) * direction > 0:
            h = pending[mi] - t
        ks = [f]
        failed = False
        for stage in range(1, 6):
            yy = list(y)
            coeffs = _DP_A[stage]
            for idx in range(len(yy)):
                acc = 0.0
                for sj, cc in enumerate(coeffs):
                    acc += cc * ks[sj][idx]
                yy[idx] += h * acc
            kf = checked_rhs(t + _DP_C[stage] * h, yy)
            if kf is None:
                failed = True
                break
            ks.append(kf)
        if not failed:
            y5 = list(y)
            for idx in range(len(y)):
                acc = 0.0
                for sj in range(6):
                    b = _DP_B5[sj]
                    if b:
                        acc += b * ks[sj][idx]
                y5[idx] += h * acc
            k7 = checked_rhs(t + h, y5)
            failed = k7 is None
        if failed:
            nonfinite = True
            rejected += 1
            h *= 0.25
            continue
        nonfinite = False
        ks.append(k7)
        err = 0.0
        for idx in range(len(y)):
            acc = 0.0
            for sj in range(7):
                db = _DP_B5[sj] - _DP_B4[sj]
                if db:
                    acc += db * ks[sj][idx]
            # error per unit step: local error rates accumulate over the
            # horizon, so this keeps the endpoint error proportional to
            # tol (a tenfold tighter tol buys a tenfold smaller defect)
            scale = (
                tol * (abs(h) / abs(horizon))
                * (1.0 + max(abs(y[idx]), abs(y5[idx])))
            )
            err = max(err, abs(h * acc) / scale)
        if err > 1.0:
            rejected += 1
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        crossed = None
        for m in guard_idx:
            if y[m] != 0.0 and (y5[m] == 0.0 or (y[m] > 0) != (y5[m] > 0)):
                crossed = m
                break
        if crossed is not None:
            rejected += 1
            h *= 0.5
            if abs(h) < hmin:
                raise FlowError(
                    "divisor",
                    "the trajectory reached the divisor component "
                    f"{chart.coords[crossed]!r} near t = {t:.6g}",
                )
            continue
        if box is not None:
            for m in range(n):
                lo, hi = box[m]
                if not (lo - 1e-12 <= y5[m] <= hi + 1e-12):
                    raise FlowError(
                        "chart-exit",
                        f"the trajectory left the region in {chart.coords[m]!r} "
                        f"near t = {t + h:.6g}",
                    )
        t += h
        if (horizon - t) * direction <= 1e-14 * abs(horizon):
            t = horizon
        elif mi < len(pending) and abs(t - pending[mi]) <= 2 * hmin:
            t = pending[mi]
            mi += 1
        y = y5
        f = k7
        steps += 1
        times.append(t)
        states.append(tuple(y))
        slopes.append(tuple(f))
        factor = 5.0 if err == 0.0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        h *= factor
    return FlowResult(
        algebroid=algebroid,
        times=tuple(times),
        states=tuple(states),
        slopes=tuple(slopes),
        steps=steps,
        rejected=rejected,
        tol=tol,
    )


def _anchor_checkpoints(result, checkpoints=8):
    """Worst relative mismatch of an(M e_i) against V an(e_i) along the
    trajectory — the transported frame must be anchor-related."""
    algebroid = result.algebroid
    n = len(algebroid.chart.coords)
    r = algebroid.rank
    if r == 0 or n == 0 or checkpoints <= 0:
        return 0.0
    compiled = [[e.compile() for e in row] for row in algebroid.anchor]
    x0, _, _ = result._unpack(result.states[0])
    an0 = [[compiled[i][m](x0) for m in range(n)] for i in range(r)]
    t0, t1 = result.times[0], result.times[-1]
    worst = 0.0
    for c in range(1, checkpoints + 1):
        t = t0 + (t1 - t0) * c / checkpoints
        x, mmat, vmat = result._unpack(result.state_at(t))
        an_moved = [[compiled[i][m](x) for m in range(n)] for i in range(r)]
        for i in range(r):
            for m in range(n):
                lhs = sum(mmat[j][i] * an_moved[j][m] for j in range(r))
                rhs = sum(vmat[m][mp] * an0[i][mp] for mp in range(n))
                scale = 1.0 + max(abs(lhs), abs(rhs))
                worst = max(worst, abs(lhs - rhs) / scale)
    return worst


def flow_section(
    algebroid,
    sigma,
    start,
    horizon=1.0,
    tol=1e-8,
    *,
    guard=(),
    region=None,
    checkpoints=8,
):
    """Integrate the flow of a (possibly time-dependent) section.

    Solves dx/dt = an(sigma_t)(x) from `start` over `horizon` together with
    the frame transport M(t) (M(0) = I, dM/dt = -G M where G collects the
    brackets [sigma_t, e_j]) and the variational matrix of the base flow.
    `sigma` may be a Section, a TimeSection, or a list of base vector-field
    components (rejected exactly when the field is not a section).  `guard`
    names coordinates whose sign the trajectory must not cross (divisor
    components): a crossing step is bisected and, if the crossing persists,
    reported as a FlowError.  `region` is an optional product box the
    trajectory must stay inside.
    """
    field = _FlowField(algebroid, sigma)
    marks = _checkpoint_times(horizon, checkpoints)
    result = _integrate(
        field, algebroid, start, horizon, tol, guard, region, marks
    )
    result.anchor_defect = _anchor_checkpoints(result, checkpoints)
    return result


def _checkpoint_times(horizon, checkpoints):
    if checkpoints <= 1:
        return ()
    return tuple(
        float(horizon) * c / checkpoints for c in range(1, checkpoints)
    )


# ---------------------------------------------------------------------------
# Euler-like sections and scaling retractions
# ---------------------------------------------------------------------------

def euler_like_check(
    algebroid,
    section,
    normal,
    h_grid=(Fraction(1, 16), Fraction(1, 32), Fraction(1, 64)),
    samples=(),
    ratio_tol=1e-3,
):
    """Is the section Euler-like along the subspace where `normal` vanish?

    Exact part: every coefficient must vanish on the subspace.  Numeric
    part: the anchor image at a point displaced by h in a normal direction
    must be h times that direction up to O(h^2); the Richardson
    extrapolation of the radial ratio over the two finest grid entries has
    to land within `ratio_tol` of 1, and the orthogonal leak has to
    extrapolate to 0.  Failure lines quote the measured rate, which
    distinguishes quadratic vanishing (ratio extrapolates to 0) from a
    wrong linear rate (ratio extrapolates to the rate).
    """
    if not isinstance(section, Section) or section.algebroid is not algebroid:
        raise ValueError("the candidate must be a section of this presentation")
    chart = algebroid.chart
    names = chart.coords
    normal = tuple(normal)
    if not normal:
        raise ValueError("at least one normal coordinate required")
    for name in normal:
        if name not in names:
            raise ValueError(f"{name!r} is not a coordinate")
    if len(h_grid) < 2:
        raise ValueError("need at least two step sizes for extrapolation")
    failures = []
    zeros = {name: Fraction(0) for name in normal}
    for i, coeff in enumerate(section.coeffs):
        if not coeff.subs(zeros).is_zero():
            failures.append(
                f"coefficient {i+1} does not vanish on the subspace"
            )
    if failures:
        return CheckReport(False, tuple(failures))

    n = len(names)
    index = {name: m for m, name in enumerate(names)}
    velocity = []
    for m in range(n):
        entry = chart.zero()
        for i in range(algebroid.rank):
            if not section.coeffs[i].is_zero():
                entry = entry + section.coeffs[i] * algebroid.anchor[i][m]
        velocity.append(entry.compile())
    if not samples:
        base = [Fraction(0)] * n
        for m, name in enumerate(names):
            if name not in normal:
                base[m] = Fraction(1, 2)
        samples = (tuple(base),)
    directions = []
    for name in normal:
        vec = [0.0] * n
        vec[index[name]] = 1.0
        directions.append((name, vec))
    if len(normal) > 1:
        scale = 1.0 / math.sqrt(len(normal))
        vec = [0.0] * n
        for name in normal:
            vec[index[name]] = scale
        directions.append(("+".join(normal), vec))

    hs = sorted(float(h) for h in h_grid)
    h1, h2 = hs[1], hs[0]
    for point in samples:
        p0 = [float(v) for v in point]
        for m, name in enumerate(names):
            if name in normal:
                p0[m] = 0.0
        for label, vec in directions:
            values = {}
            for h in (h1, h2):
                probe = [p0[m] + h * vec[m] for m in range(n)]
                w = [velocity[m](probe) for m in range(n)]
                radial = sum(w[m] * vec[m] for m in range(n)) / h
                leak = (
                    math.sqrt(
                        sum((w[m] - radial * h * vec[m]) ** 2 for m in range(n))
                    )
                    / h
                )
                values[h] = (radial, leak)
            r1, l1 = values[h1]
            r2, l2 = values[h2]
            ratio = 2 * r2 - r1
            leak = abs(2 * l2 - l1)
            if abs(ratio - 1.0) > ratio_tol:
                failures.append(
                    f"direction {label} at {tuple(float(v) for v in p0)}: "
                    f"radial ratio extrapolates to {ratio:.6g}, expected 1"
                )
            if leak > ratio_tol:
                failures.append(
                    f"direction {label} at {tuple(float(v) for v in p0)}: "
                    f"orthogonal leak {leak:.6g} does not vanish"
                )
    return CheckReport(not failures, tuple(failures))


def _constant_fraction(scalar):
    f = scalar.f
    if f.numer.is_ground and f.denom.is_ground:
        return scalar.evaluate([Fraction(0)] * len(scalar.chart.coords))
    return None


def _transport_exponents(algebroid, section):
    """Closed-form transport exponents: mu_j with [section, e_j] = mu_j e_j
    and mu_j constant, or None when some bracket leaves the span."""
    mu = []
    for j in range(algebroid.rank):
        bracket = section.bracket(algebroid.frame(j))
        value = None
        diagonal = True
        for i, coeff in enumerate(bracket.coeffs):
            if i == j:
                value = _constant_fraction(coeff)
                if value is None:
                    diagonal = False
            elif not coeff.is_zero():
                diagonal = False
        if not diagonal:
            return None
        mu.append(value)
    return mu


def retraction_check(spec):
    """Exact certificate that the scaling slices are algebroid morphisms.

    For a diagonal transport e_j -> s^(-mu_j) e_j over the coordinate
    scaling, two polynomial identities in the generic scale s must hold:
    the transported frame is anchor-related to the scaled base map, and
    the structure functions obey s^(-mu_i - mu_j) c_ij^k(scaled) =
    s^(-mu_k) c_ij^k.  Both are checked exactly; no check is possible (and
    none is claimed) without closed-form exponents.
    """
    if spec.mu is None:
        return CheckReport(True, ())
    A = spec.algebroid
    chart = A.chart
    ext = chart.extended((_SCALE,))
    s = ext.coordinate(_SCALE)
    failures = []
    powers = []
    for j, mu_j in enumerate(spec.mu):
        mu_j = Fraction(mu_j)
        if mu_j.denominator != 1:
            raise ValueError(
                f"transport exponent {mu_j} of frame vector {j+1} is not "
                "an integer"
            )
        powers.append(s ** int(-mu_j) if mu_j else ext.one())
    r = A.rank
    for j in range(r):
        for m, name in enumerate(chart.coords):
            entry = A.anchor[j][m]
            lhs = powers[j] * spec.scale_scalar(ext, entry)
            rhs = ext.embed(entry)
            if name in spec.normal:
                rhs = s * rhs
            if lhs != rhs:
                failures.append(
                    f"transported frame vector {j+1} is not anchor-related "
                    f"along {name!r}"
                )
    for i in range(r):
        for j in range(i + 1, r):
            for k in range(r):
                c = A.structure[i][j][k]
                lhs = powers[i] * powers[j] * spec.scale_scalar(ext, c)
                rhs = powers[k] * ext.embed(c)
                if lhs != rhs:
                    failures.append(
                        "transport is incompatible with the bracket on "
                        f"({i+1},{j+1})->{k+1}"
                    )
    return CheckReport(not failures, tuple(failures))


def scaling_retraction(algebroid, normal, section, h_grid=None, samples=()):
    """Build the scaling retraction generated by an Euler-like section.

    Certifies the Euler-like property first (exact vanishing plus the
    numeric linearization ratio), then looks for a closed-form frame
    transport: when every bracket [section, e_j] is a constant multiple
    mu_j e_j the transport is the diagonal scaling s^(-mu_j); otherwise
    the exponents are left unset and downstream consumers integrate the
    transport numerically with `flow_section`.
    """
    kwargs = {"samples": samples}
    if h_grid is not None:
        kwargs["h_grid"] = h_grid
    report = euler_like_check(algebroid, section, normal, **kwargs)
    if not report.ok:
        raise ValueError(
            "not Euler-like along the subspace: " + "; ".join(report.failures)
        )
    mu = _transport_exponents(algebroid, section)
    return RetractionSpec(algebroid, tuple(normal), section, mu)


def log_scaling_retraction(algebroid, normal, section=None):
    """The scaling retraction onto a divisor intersection of a log-type
    presentation.

    Here the generating section does not vanish on the subspace — its
    anchor does (x del_x against a frame coefficient of 1) — so the
    Euler-like certificate does not apply.  Instead the constructor finds
    the distinguished sections (frame vectors whose anchor is exactly
    x_k del_k for each scaled coordinate), reads the transport exponents
    off the brackets, and certifies the slice maps exactly with
    `retraction_check`.
    """
    chart = algebroid.chart
    normal = tuple(normal)
    if not normal:
        raise ValueError("at least one normal coordinate required")
    for name in normal:
        if name not in chart.coords:
            raise ValueError(f"{name!r} is not a coordinate")
    if section is None:
        coeffs = [chart.zero()] * algebroid.rank
        for name in normal:
            expected = [
                chart.coordinate(name) if other == name else chart.zero()
                for other in chart.coords
            ]
            hits = [
                i
                for i in range(algebroid.rank)
                if list(algebroid.anchor[i]) == expected
            ]
            if len(hits) != 1:
                raise ValueError(
                    f"no unique frame vector with anchor "
                    f"{name}*d/d{name}; pass the generating section explicitly"
                )
            coeffs[hits[0]] = chart.one()
        section = Section(algebroid, coeffs)
    elif not isinstance(section, Section) or section.algebroid is not algebroid:
        raise ValueError("the generator must be a section of this presentation")
    mu = _transport_exponents(algebroid, section)
    if mu is None:
        raise ValueError(
            "the divisor scaling has no closed-form transport; brackets "
            "with the generator leave the frame spans"
        )
    spec = RetractionSpec(algebroid, normal, section, mu)
    report = retraction_check(spec)
    if not report.ok:
        raise ValueError(
            "the scaling slices are not morphisms: " + "; ".join(report.failures)
        )
    return spec


# ---------------------------------------------------------------------------
# Numeric homotopy operator (quadrature in the scale)
# ---------------------------------------------------------------------------

def _simpson(fn, panels):
    h = 1.0 / panels
    total = fn(0.0) + fn(1.0)
    for i in range(1, panels):
        total += (4.0 if i % 2 else 2.0) * fn(i * h)
    return total * h / 3.0


def _integrate_scale(fn, tol):
    """Adaptive composite Simpson on [0, 1] with Richardson acceptance."""

    def safe(s):
        try:
            v = fn(s)
        except (ZeroDivisionError, OverflowError, ValueError) as exc:
            raise ValueError(
                f"the scale integrand is singular at s = {s:.6g}: "
                "the singularity is not removable for this input"
            ) from exc
        if not math.isfinite(v):
            raise ValueError(
                f"the scale integrand is singular at s = {s:.6g}: "
                "the singularity is not removable for this input"
            )
        return v

    panels = 4
    prev = _simpson(safe, panels)
    for _ in range(20):
        panels *= 2
        cur = _simpson(safe, panels)
        if abs(cur - prev) <= 15.0 * tol:
            return cur + (cur - prev) / 15.0
        prev = cur
    raise ValueError("quadrature did not converge to the requested tolerance")


def _parameter_extension(algebroid, ext):
    """The same frame over the scale-extended chart.  The anchor gains a
    zero component along the scale, so the Koszul differential of a form
    whose coefficients are scale integrands differentiates under the
    integral sign."""
    anchor = [
        [ext.zero()] + [ext.embed(entry) for entry in row]
        for row in algebroid.anchor
    ]
    structure = [
        [[ext.embed(c) for c in col] for col in row]
        for row in algebroid.structure
    ]
    return Algebroid(ext, anchor, structure)


class NumericKappa:
    """Pointwise homotopy-operator values by quadrature in the scale.

    The coefficients are exact symbolic integrands in (s, x) evaluated by
    adaptive composite Simpson with Richardson extrapolation to `quad_tol`.
    `homotopy_defect` measures d kappa(alpha) + kappa(d alpha) - alpha +
    rho_0^* alpha at sample points, assembling the whole defect as a single
    integral form (d commutes with the scale integral because the anchor
    of the scale extension has no scale component).
    """

    def __init__(self, retraction, alpha, quad_tol=1e-8):
        ext, integrands = kappa_integrands(retraction, alpha)
        self.retraction = retraction
        self.algebroid = retraction.algebroid
        self.alpha = alpha
        self.quad_tol = quad_tol
        self.degree = max(alpha.degree - 1, 0)
        self._ext = ext
        self._scale_algebroid = _parameter_extension(self.algebroid, ext)
        self._form = FormField(self._scale_algebroid, self.degree, integrands)
        self._compiled = {
            key: coeff.compile() for key, coeff in self._form.table.items()
        }

    def coefficient_at(self, indices, point):
        """One coefficient of kappa(alpha) at a base point."""
        fn = self._compiled.get(tuple(indices))
        if fn is None:
            return 0.0
        x = tuple(float(v) for v in point)
        return _integrate_scale(lambda s: fn((s, *x)), self.quad_tol)

    def table_at(self, point):
        return {
            key: self.coefficient_at(key, point) for key in self._form.table
        }

    def vector_fn(self):
        """For degree-1 output: point -> list of frame coefficients."""
        if self.degree != 1:
            raise ValueError("vector output needs a degree-1 result")
        r = self.algebroid.rank
        fns = [self._compiled.get((j,)) for j in range(r)]
        tol = self.quad_tol

        def vec(x):
            out = []
            for fn in fns:
                if fn is None:
                    out.append(0.0)
                else:
                    out.append(_integrate_scale(lambda s: fn((s, *x)), tol))
            return out

        return vec

    def jacobian_fn(self):
        """Coordinate derivatives of the degree-1 coefficients, computed by
        differentiating the integrand."""
        if self.degree != 1:
            raise ValueError("jacobian output needs a degree-1 result")
        r = self.algebroid.rank
        names = self.algebroid.chart.coords
        fns = [
            [
                self._form.coefficient((j,)).diff(name).compile()
                for name in names
            ]
            for j in range(r)
        ]
        tol = self.quad_tol

        def jac(x):
            return [
                [
                    _integrate_scale(lambda s: fn((s, *x)), tol)
                    for fn in row
                ]
                for row in fns
            ]

        return jac

    def homotopy_defect(self, points):
        """Max absolute defect of the homotopy formula at the points."""
        scale_a = self._scale_algebroid
        ext = self._ext
        d_kappa = d(scale_a, self._form)
        _, kd = kappa_integrands(
            self.retraction, d(self.algebroid, self.alpha)
        )
        kd_form = FormField(scale_a, self.alpha.degree, kd)
        endpoint = self.retraction.endpoint_pullback(self.alpha, 0) - self.alpha
        const_form = FormField(
            scale_a,
            self.alpha.degree,
            {key: ext.embed(v) for key, v in endpoint.table.items()},
        )
        defect = d_kappa + kd_form + const_form
        compiled = {k: v.compile() for k, v in defect.table.items()}
        worst = 0.0
        for point in points:
            x = tuple(float(v) for v in point)
            for fn in compiled.values():
                worst = max(
                    worst,
                    abs(_integrate_scale(lambda s: fn((s, *x)), self.quad_tol)),
                )
        return worst

    def max_on(self, points):
        """Max absolute coefficient over the points (vanishing witness)."""
        worst = 0.0
        for point in points:
            for value in self.table_at(point).values():
                worst = max(worst, abs(value))
        return worst


def kappa_numeric(retraction, alpha, quad_tol=1e-8):
    """The homotopy operator evaluated by quadrature in the scale."""
    return NumericKappa(retraction, alpha, quad_tol)


# ---------------------------------------------------------------------------
# Moser verification
# ---------------------------------------------------------------------------

@dataclass
class MoserReport:
    """Measured defects of a Moser isotopy.

    `max_defect` is the worst |(phi_1^* omega_0 - omega_1)(e_i, e_j)| over
    the grid; `anchor_defect` the worst transport/variational mismatch at
    flow checkpoints; `base_residual`/`frame_residual` the fixed-point
    defects on the anchored subspace (0 when no subspace was requested).
    """

    algebroid: Algebroid
    grid: tuple
    tol: float
    integrator_tol: float
    max_defect: float
    anchor_defect: float
    subspace_samples: tuple = ()
    base_residual: float = 0.0
    frame_residual: float = 0.0
    frame_columns: tuple = ()
    notes: tuple = ()

    @property
    def ok(self):
        return (
            self.max_defect <= self.tol
            and self.base_residual <= self.tol
            and self.frame_residual <= self.tol
            and self.anchor_defect <= 10.0 * self.integrator_tol
        )

    def describe(self):
        lines = [
            f"pullback defect max {self.max_defect:.3e} over "
            f"{len(self.grid)} grid points (tolerance {self.tol:.1e})",
            f"anchor-relatedness defect {self.anchor_defect:.3e} "
            f"(allowed {10.0 * self.integrator_tol:.1e})",
        ]
        if self.subspace_samples:
            lines.append(
                f"fixed-point residuals on the subspace: base "
                f"{self.base_residual:.3e}, frame {self.frame_residual:.3e} "
                f"over {len(self.subspace_samples)} samples"
            )
        lines.extend(self.notes)
        lines.append("PASS" if self.ok else "FAIL")
        return "\n".join(lines)


def grid_points(region, count):
    """A uniform product grid over a box given as (lo, hi) pairs."""
    axes = []
    for lo, hi in region:
        lo, hi = float(lo), float(hi)
        if count == 1 or lo == hi:
            axes.append((lo,))
        else:
            axes.append(
                tuple(lo + (hi - lo) * i / (count - 1) for i in range(count))
            )
    return tuple(product(*axes))


def _moser_sigma(algebroid, omega0, omega1, alpha):
    """The time-dependent Moser section, solved exactly over the
    time-extended chart.

    The isotopy traverses the affine path from omega_1 to omega_0, i.e.
    omega_t = (1-t) omega_1 + t omega_0, whose Moser primitive is -alpha
    when d alpha = -(omega_1 - omega_0); the section solves
    iota(sigma_t) omega_t = -alpha.  The time-one flow then carries
    omega_0 into omega_1: phi_1^* omega_0 = omega_1.  This orientation
    matters numerically: for forms that grow away from the fixed
    subspace, the flow contracts toward it instead of escaping, so the
    isotopy exists on the whole sample box rather than only near the
    subspace.  (Both orientations certify the same equivalence.)
    """
    chart = algebroid.chart
    te = chart.extended((_TIME,))
    t = te.coordinate(_TIME)
    one = te.one()
    r = algebroid.rank
    gram_t = [
        [
            (one - t) * te.embed(omega1.value_on((i, j)))
            + t * te.embed(omega0.value_on((i, j)))
            for j in range(r)
        ]
        for i in range(r)
    ]
    alpha_vec = [-te.embed(alpha.coefficient((j,))) for j in range(r)]
    coeffs = mat_solve(mat_transpose(gram_t), alpha_vec)
    return TimeSection(algebroid, coeffs), gram_t


def _check_path_nondegenerate(gram_t, points, t_samples):
    det = mat_det(gram_t).compile()
    sign = 0.0
    for x in points:
        for ts in t_samples:
            value = det((float(ts), *x))
            if not math.isfinite(value) or value == 0.0:
                raise ValueError(
                    f"the interpolation degenerates at t = {float(ts):.3g}, "
                    f"x = {tuple(x)}"
                )
            if sign == 0.0:
                sign = math.copysign(1.0, value)
            elif math.copysign(1.0, value) != sign:
                raise ValueError(
                    f"the interpolation changes orientation at "
                    f"t = {float(ts):.3g}, x = {tuple(x)}"
                )


def _pullback_defect(algebroid, flow, omega0_c, omega1_c, x):
    """|(phi_1^* omega_0 - omega_1)(e_i, e_j)| at the start point x, with
    phi_1 the time-one isotopy carrying omega_0 into omega_1."""
    r = algebroid.rank
    gamma = flow.final_point
    mmat = flow.final_transport
    pulled = [[omega0_c[i][j](gamma) for j in range(r)] for i in range(r)]
    target = [[omega1_c[i][j](x) for j in range(r)] for i in range(r)]
    worst = 0.0
    for i in range(r):
        for j in range(i + 1, r):
            value = 0.0
            for a in range(r):
                for b in range(r):
                    value += mmat[a][i] * pulled[a][b] * mmat[b][j]
            worst = max(worst, abs(value - target[i][j]))
    return worst


def moser_verify(
    algebroid,
    omega0,
    omega1,
    alpha,
    region,
    tol=1e-6,
    *,
    integrator_tol=1e-8,
    grid=5,
    guard=(),
    t_samples=(0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1),
    checkpoints=8,
):
    """Verify a Moser isotopy between two symplectic forms numerically.

    Preconditions are symbolic and exact: `alpha` must satisfy
    d alpha = -(omega_1 - omega_0), and the affine interpolation omega_t
    must stay nondegenerate (determinant of constant sign) at the sampled
    times over the grid.  The Moser section of the path (see
    `_moser_sigma` for the traversal direction) is solved exactly, its
    flow integrated from every grid point, and the report carries the
    worst pullback defect |(phi_1^* omega_0 - omega_1)(e_i, e_j)| of the
    time-one isotopy carrying the first form into the second; success
    means it stays within `tol`.
    """
    for name, form in (("omega_0", omega0), ("omega_1", omega1)):
        if not isinstance(form, FormField) or form.degree != 2:
            raise ValueError(f"{name} must be a 2-form")
        if form.algebroid is not algebroid:
            raise ValueError(f"{name} lives on a different presentation")
    if not isinstance(alpha, FormField) or alpha.degree != 1:
        raise ValueError("the primitive must be a 1-form")
    if alpha.algebroid is not algebroid:
        raise ValueError("the primitive lives on a different presentation")
    diff = omega1 - omega0
    if d(algebroid, alpha) != -diff:
        raise ValueError(
            "the primitive is not exact: d alpha != -(omega_1 - omega_0)"
        )
    if len(region) != len(algebroid.chart.coords):
        raise ValueError("one region interval per coordinate required")
    points = grid_points(region, grid)
    sigma, gram_t = _moser_sigma(algebroid, omega0, omega1, alpha)
    _check_path_nondegenerate(gram_t, points, t_samples)
    field = _FlowField(algebroid, sigma)
    r = algebroid.rank
    omega0_c = [
        [omega0.value_on((i, j)).compile() for j in range(r)] for i in range(r)
    ]
    omega1_c = [
        [omega1.value_on((i, j)).compile() for j in range(r)] for i in range(r)
    ]
    max_defect = 0.0
    anchor_defect = 0.0
    marks = _checkpoint_times(1.0, checkpoints)
    for x in points:
        flow = _integrate(
            field, algebroid, x, 1.0, integrator_tol, guard, None, marks
        )
        flow.anchor_defect = _anchor_checkpoints(flow, checkpoints)
        anchor_defect = max(anchor_defect, flow.anchor_defect)
        max_defect = max(
            max_defect, _pullback_defect(algebroid, flow, omega0_c, omega1_c, x)
        )
    return MoserReport(
        algebroid=algebroid,
        grid=points,
        tol=tol,
        integrator_tol=integrator_tol,
        max_defect=max_defect,
        anchor_defect=anchor_defect,
    )


def _subspace_samples(points, names, normal):
    index = {name: m for m, name in enumerate(names)}
    seen = []
    for x in points:
        probe = list(x)
        for name in normal:
            probe[index[name]] = 0.0
        probe = tuple(probe)
        if probe not in seen:
            seen.append(probe)
    return tuple(seen)


def dmw_verify(
    algebroid,
    omega0,
    omega1,
    retraction,
    region,
    tol=1e-6,
    *,
    alpha=None,
    integrator_tol=1e-8,
    grid=5,
    quad_tol=1e-8,
    guard=(),
    frame_columns=None,
    require_agreement=True,
    checkpoints=8,
):
    """Verify the normal-form statement: two symplectic forms agreeing on
    the subspace fixed by a scaling retraction are carried into each other
    by a flow fixing that subspace.

    Symbolic preconditions: both forms symplectic; the difference vanishes
    on the subspace (skipped for the transverse variant, where only the
    primitive's vanishing matters); the primitive alpha — supplied, or
    built as -kappa(omega_1 - omega_0) through the retraction's homotopy
    operator, symbolically when the scale dependence is polynomial and by
    quadrature otherwise — is exact for -(omega_1 - omega_0) and vanishes
    on the subspace.  On top of the Moser defect the report carries the
    fixed-point residuals |phi_1(x) - x| and max |M(1) - I| over the
    subspace samples (restricted to `frame_columns` when given, e.g. the
    embedded-frame columns of a coisotropic model).
    """
    if retraction.algebroid is not algebroid:
        raise ValueError("the retraction belongs to a different presentation")
    slices = retraction_check(retraction)
    if not slices.ok:
        raise ValueError(
            "the retraction's slice maps are not morphisms: "
            + "; ".join(slices.failures)
        )
    for name, form in (("omega_0", omega0), ("omega_1", omega1)):
        report = check_symplectic(algebroid, form)
        if not report.ok:
            raise ValueError(
                f"{name} is not symplectic: " + "; ".join(report.failures)
            )
    diff = omega1 - omega0
    zeros = retraction.fixed
    notes = []
    if require_agreement:
        for key, coeff in sorted(diff.table.items()):
            if not coeff.subs(zeros).is_zero():
                labels = ",".join(str(i + 1) for i in key)
                raise ValueError(
                    f"the forms disagree on the subspace: "
                    f"(omega_1 - omega_0)({labels}) does not vanish there"
                )
    numeric = None
    if alpha is None:
        try:
            alpha = -homotopy_kappa(retraction, diff)
            notes.append("primitive: symbolic homotopy operator")
        except KappaNotPolynomial:
            numeric = kappa_numeric(retraction, diff, quad_tol)
            notes.append("primitive: quadrature homotopy operator")
    else:
        if not isinstance(alpha, FormField) or alpha.degree != 1:
            raise ValueError("the primitive must be a 1-form")
        if alpha.algebroid is not algebroid:
            raise ValueError("the primitive lives on a different presentation")
        notes.append("primitive: supplied explicitly")

    if len(region) != len(algebroid.chart.coords):
        raise ValueError("one region interval per coordinate required")
    points = grid_points(region, grid)
    names = algebroid.chart.coords
    on_subspace = _subspace_samples(points, names, retraction.normal)
    r = algebroid.rank

    if numeric is None:
        if d(algebroid, alpha) != -diff:
            raise ValueError(
                "the primitive is not exact: d alpha != -(omega_1 - omega_0)"
            )
        bad = [
            key
            for key, coeff in sorted(alpha.table.items())
            if not coeff.subs(zeros).is_zero()
        ]
        if bad:
            raise ValueError(
                f"the primitive does not vanish on the subspace "
                f"(component {bad[0][0] + 1})"
            )
        sigma, gram_t = _moser_sigma(algebroid, omega0, omega1, alpha)
        t_samples = (0, Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), 1)
        _check_path_nondegenerate(gram_t, points, t_samples)
        field = _FlowField(algebroid, sigma)
    else:
        probes = on_subspace[:2] + points[:3]
        defect = numeric.homotopy_defect(probes)
        if defect > 10.0 * quad_tol:
            raise ValueError(
                f"the quadrature primitive violates the homotopy formula "
                f"(defect {defect:.3e})"
            )
        vanish = numeric.max_on(on_subspace)
        if vanish > 10.0 * quad_tol:
            raise ValueError(
                f"the quadrature primitive does not vanish on the subspace "
                f"(max {vanish:.3e})"
            )
        gram0 = [[omega0.value_on((i, j)) for j in range(r)] for i in range(r)]
        gram1 = [[omega1.value_on((i, j)) for j in range(r)] for i in range(r)]
        # kappa(omega_1 - omega_0) is the primitive of the reversed path
        # that the flow field traverses, so it feeds the solve directly
        field = _NumericFlowField(algebroid, gram0, gram1, numeric)
        notes.append(
            f"homotopy-formula defect {defect:.3e} at {len(probes)} probes"
        )

    omega0_c = [
        [omega0.value_on((i, j)).compile() for j in range(r)] for i in range(r)
    ]
    omega1_c = [
        [omega1.value_on((i, j)).compile() for j in range(r)] for i in range(r)
    ]
    max_defect = 0.0
    anchor_defect = 0.0
    marks = _checkpoint_times(1.0, checkpoints)
    for x in points:
        flow = _integrate(
            field, algebroid, x, 1.0, integrator_tol, guard, None, marks
        )
        flow.anchor_defect = _anchor_checkpoints(flow, checkpoints)
        anchor_defect = max(anchor_defect, flow.anchor_defect)
        max_defect = max(
            max_defect, _pullback_defect(algebroid, flow, omega0_c, omega1_c, x)
        )
    columns = tuple(frame_columns) if frame_columns is not None else tuple(range(r))
    base_res = 0.0
    frame_res = 0.0
    for x in on_subspace:
        flow = _integrate(
            field, algebroid, x, 1.0, integrator_tol, guard, None, marks
        )
        gamma = flow.final_point
        base_res = max(
            base_res, max((abs(g - v) for g, v in zip(gamma, x)), default=0.0)
        )
        mmat = flow.final_transport
        for j in columns:
            for i in range(r):
                target = 1.0 if i == j else 0.0
                frame_res = max(frame_res, abs(mmat[i][j] - target))
        anchor_defect = max(anchor_defect, _anchor_checkpoints(flow, checkpoints))
    return MoserReport(
        algebroid=algebroid,
        grid=points,
        tol=tol,
        integrator_tol=integrator_tol,
        max_defect=max_defect,
        anchor_defect=anchor_defect,
        subspace_samples=on_subspace,
        base_residual=base_res,
        frame_residual=frame_res,
        frame_columns=columns,
        notes=tuple(notes),
    )


def coisotropic_embedding_verify(
    model,
    splitting,
    region=None,
    tol=1e-6,
    *,
    integrator_tol=1e-8,
    grid=3,
    quad_tol=1e-8,
):
    """Two splittings of one symplectization model give equivalent forms.

    Builds the model form of the second splitting on the same presentation
    and runs the normal-form verification with the fibre scaling
    retraction onto the zero section.  The forms need not agree on the
    zero section — only the primitive vanishes there — and the frame
    residual is restricted to the embedded base-frame columns, which is
    exactly the uniqueness statement for the transverse coisotropic
    embedding.
    """
    algebroid = model.algebroid
    omega0 = model.form
    omega1 = model.form_for_splitting(splitting)
    chart = algebroid.chart
    r = model.base.rank
    euler = Section(
        algebroid,
        [chart.zero()] * r
        + [chart.coordinate(name) for name in model.momenta],
    )
    retraction = scaling_retraction(algebroid, model.momenta, euler)
    if region is None:
        region = tuple(
            (Fraction(-1, 2), Fraction(1, 2)) for _ in chart.coords
        )
    return dmw_verify(
        algebroid,
        omega0,
        omega1,
        retraction,
        region,
        tol,
        integrator_tol=integrator_tol,
        grid=grid,
        quad_tol=quad_tol,
        frame_columns=tuple(range(r)),
        require_agreement=False,
    )
