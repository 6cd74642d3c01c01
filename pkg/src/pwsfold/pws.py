"""Piecewise-smooth systems with a switching surface at x1 = 0.

A system is the triple (f+, f-, g) of expression vector fields. Off the
surface the dynamics is f(x; +1) or f(x; -1); on the surface the switching
parameter lambda ranges over [-1, 1] through the convex combination

    f(x; lambda) = (1+lambda)/2 f+(x) + (1-lambda)/2 f-(x) + (1-lambda^2) g(x; lambda)

whose hidden term g vanishes at lambda = +-1 and therefore never acts away
from the surface. Sliding motion pins x1 = 0 and follows (f2, f3) at a root
lambda* of f1(0, x2, x3; lambda) = 0.
"""

from __future__ import annotations

import bisect
import enum
import math
from dataclasses import dataclass, field
from functools import cached_property

from . import expr as ex
from .exceptions import (EvaluationError, EventLimitError, SlidingResidualError)
from ._rk import Dopri3, hermite
from .roots import polish_bracketed_root, real_quadratic_roots

__all__ = [
    "PiecewiseSystem", "SurfaceMode", "Trajectory", "PwsOptions",
    "combination", "classify_surface_point", "sliding_lambdas",
    "sliding_field", "integrate_pws",
]

SURFACE_TOL = 1e-10
RESIDUAL_TOL = 1e-9

_LAM = ex.Var("lambda")
_HALF_PLUS = ex.BinOp("*", ex.BinOp("+", ex.ONE, _LAM), ex.Const(0.5))
_HALF_MINUS = ex.BinOp("*", ex.BinOp("-", ex.ONE, _LAM), ex.Const(0.5))
_ONE_MINUS_SQ = ex.BinOp("-", ex.ONE, ex.Pow(_LAM, 2))


class SurfaceMode(enum.Enum):
    CROSSING = "crossing"
    ATTRACTING_SLIDING = "attracting_sliding"
    REPELLING_SLIDING = "repelling_sliding"
    TANGENCY = "tangency"


@dataclass(frozen=True)
class PiecewiseSystem:
    """Immutable triple of 3-component expression fields (f+, f-, g)."""

    fplus: tuple[ex.Expression, ex.Expression, ex.Expression]
    fminus: tuple[ex.Expression, ex.Expression, ex.Expression]
    hidden: tuple[ex.Expression, ex.Expression, ex.Expression]

    @classmethod
    def from_strings(cls, fplus, fminus, hidden=None) -> "PiecewiseSystem":
        def triple(traw):
            if len(traw) != 3:
                raise ValueError(f"expected 3 components, got {len(traw)}")
            return tuple(ex.parse_expression(s) for s in traw)

        if hidden is None:
            hid = (ex.ZERO, ex.ZERO, ex.ZERO)
        else:
            hid = triple(hidden)
        return cls(triple(fplus), triple(fminus), hid)

    @cached_property
    def combined_expressions(self) -> tuple[ex.Expression, ...]:
        """f_i(x; lambda) as expression trees, i = 1..3."""
        out = []
        for fp, fm, g in zip(self.fplus, self.fminus, self.hidden):
            node = ex.BinOp("+", ex.BinOp("+", ex.BinOp("*", _HALF_PLUS, fp),
                                          ex.BinOp("*", _HALF_MINUS, fm)),
                            ex.BinOp("*", _ONE_MINUS_SQ, g))
            out.append(node)
        return tuple(out)

    @cached_property
    def combined(self):
        """Compiled (x1, x2, x3, lam) -> (f1, f2, f3)."""
        return ex.compile_field(self.combined_expressions)

    @cached_property
    def f1_dlambda(self):
        """Compiled partial of the combined f1 with respect to lambda."""
        return ex.compile_expression(
            ex.differentiate(self.combined_expressions[0], "lambda"))

    @cached_property
    def lambda_degree(self) -> int | None:
        return ex.polynomial_degree(self.combined_expressions[0], "lambda")

    @cached_property
    def _branch_fields(self):
        plus = ex.compile_field(self.fplus)
        minus = ex.compile_field(self.fminus)
        return plus, minus

    def branch_field(self, side: int):
        """Time-independent integrator field for the open region sign(x1)=side."""
        fn = self._branch_fields[0] if side > 0 else self._branch_fields[1]
        lam = 1.0 if side > 0 else -1.0

        def fld(t, x, _fn=fn, _lam=lam):
            return _fn(x[0], x[1], x[2], _lam)

        return fld

    @cached_property
    def _branch_f1_gradients(self):
        grads = []
        for comps in (self.fplus, self.fminus):
            g = tuple(ex.compile_expression(ex.differentiate(comps[0], v))
                      for v in ("x1", "x2", "x3"))
            grads.append(g)
        return grads

    def surface_curvature(self, x, side: int) -> float:
        """d/dt of f1(x(t); side) along the side's own flow (fold visibility)."""
        lam = 1.0 if side > 0 else -1.0
        fn = self._branch_fields[0] if side > 0 else self._branch_fields[1]
        grad = self._branch_f1_gradients[0 if side > 0 else 1]
        f = fn(x[0], x[1], x[2], lam)
        return sum(grad[i](x[0], x[1], x[2], lam) * f[i] for i in range(3))


def combination(sys: PiecewiseSystem, x, lam: float):
    """The lambda-weighted field at x; equals f+- exactly at lambda = +-1."""
    if not -1.0 - 1e-12 <= lam <= 1.0 + 1e-12:
        raise ValueError(f"lambda must lie in [-1, 1], got {lam!r}")
    try:
        return sys.combined(x[0], x[1], x[2], lam)
    except (ZeroDivisionError, ValueError, OverflowError) as exc:
        raise EvaluationError(str(exc)) from exc


def classify_surface_point(sys: PiecewiseSystem, x, tol: float = RESIDUAL_TOL) -> SurfaceMode:
    """Classify a surface point by the normal components of the two fields."""
    if abs(x[0]) > SURFACE_TOL and abs(x[0]) > tol:
        raise ValueError(f"point is not on the surface: x1 = {x[0]!r}")
    vplus = sys.combined(0.0, x[1], x[2], 1.0)[0]
    vminus = sys.combined(0.0, x[1], x[2], -1.0)[0]
    if abs(vplus) <= tol or abs(vminus) <= tol:
        return SurfaceMode.TANGENCY
    if vplus < 0.0 < vminus:
        return SurfaceMode.ATTRACTING_SLIDING
    if vminus < 0.0 < vplus:
        return SurfaceMode.REPELLING_SLIDING
    return SurfaceMode.CROSSING


def _lambda_poly_coeffs(sys: PiecewiseSystem, x2: float, x3: float):
    """Quadratic-in-lambda coefficients of f1 at (0, x2, x3), if applicable."""
    f = sys.combined
    v0 = f(0.0, x2, x3, 0.0)[0]
    vp = f(0.0, x2, x3, 1.0)[0]
    vm = f(0.0, x2, x3, -1.0)[0]
    a = 0.5 * (vp + vm) - v0
    b = 0.5 * (vp - vm)
    return a, b, v0


def sliding_lambdas(sys: PiecewiseSystem, x2: float, x3: float,
                    n_scan: int = 64) -> list[float]:
    """All roots lambda in [-1, 1] of f1(0, x2, x3; lambda) = 0, ascending.

    When f1 is (at most) quadratic in lambda the roots come from the closed
    form; otherwise from a sign-change scan over n_scan subintervals followed
    by a secant/bisection polish to residual 1e-12.
    """
    deg = sys.lambda_degree
    if deg is not None and deg <= 2:
        a, b, c = _lambda_poly_coeffs(sys, x2, x3)
        roots = [r for r in real_quadratic_roots(a, b, c)
                 if -1.0 - 1e-12 <= r <= 1.0 + 1e-12]
        return sorted(min(1.0, max(-1.0, r)) for r in roots)

    f = sys.combined

    def g(lam: float) -> float:
        return f(0.0, x2, x3, lam)[0]

    nodes = [-1.0 + 2.0 * i / n_scan for i in range(n_scan + 1)]
    vals = [g(u) for u in nodes]
    roots: list[float] = []
    for i in range(n_scan):
        lo, hi, flo, fhi = nodes[i], nodes[i + 1], vals[i], vals[i + 1]
        if flo == 0.0:
            roots.append(lo)
            continue
        if flo * fhi < 0.0:
            roots.append(polish_bracketed_root(g, lo, hi, flo, fhi,
                                               residual_tol=1e-12))
    if vals[-1] == 0.0:
        roots.append(1.0)
    out: list[float] = []
    for r in sorted(roots):
        if not out or abs(r - out[-1]) > 1e-9:
            out.append(r)
    return out


def sliding_field(sys: PiecewiseSystem, x2: float, x3: float,
                  lambda_star: float) -> tuple[float, float]:
    """(dx2/dt, dx3/dt) on the surface at a sliding value of lambda."""
    f1v, f2v, f3v = sys.combined(0.0, x2, x3, lambda_star)
    if abs(f1v) > RESIDUAL_TOL:
        raise SlidingResidualError(
            f"|f1| = {abs(f1v):.3e} at lambda = {lambda_star!r}; not a sliding root")
    return f2v, f3v


# --- trajectories ------------------------------------------------------------


@dataclass
class Trajectory:
    """Time-ordered samples with per-sample mode and sliding lambda.

    Modes: 'free+', 'free-', 'sliding', 'crossing'. lambda entries are None
    away from the surface/layer.
    """

    times: list[float] = field(default_factory=list)
    states: list[tuple[float, float, float]] = field(default_factory=list)
    modes: list[str] = field(default_factory=list)
    lambdas: list[float | None] = field(default_factory=list)
    non_unique: bool = False
    events: int = 0

    def append(self, t: float, state, mode: str, lam: float | None) -> None:
        if self.times and t <= self.times[-1]:
            if t == self.times[-1]:
                # replace coincident sample; keeps times strictly increasing
                self.states[-1] = tuple(state)
                self.modes[-1] = mode
                self.lambdas[-1] = lam
            return
        self.times.append(t)
        self.states.append(tuple(state))
        self.modes.append(mode)
        self.lambdas.append(lam)

    @property
    def final_state(self) -> tuple[float, float, float]:
        return self.states[-1]

    def state_at(self, t: float) -> tuple[float, float, float]:
        """Linearly interpolated state; t must lie inside the time range."""
        if not self.times or t < self.times[0] or t > self.times[-1]:
            raise ValueError(f"t = {t!r} outside trajectory range")
        i = bisect.bisect_right(self.times, t)
        if i == len(self.times):
            return self.states[-1]
        if i == 0:
            return self.states[0]
        t0, t1 = self.times[i - 1], self.times[i]
        if t1 == t0:
            return self.states[i]
        w = (t - t0) / (t1 - t0)
        a, b = self.states[i - 1], self.states[i]
        return tuple(a[j] + w * (b[j] - a[j]) for j in range(3))

    def layer_entry_count(self, eps: float) -> int:
        """Number of sample transitions from |x1| > eps into |x1| <= eps."""
        count = 0
        inside = abs(self.states[0][0]) <= eps if self.states else False
        for s in self.states[1:]:
            now = abs(s[0]) <= eps
            if now and not inside:
                count += 1
            inside = now
        return count

    def sup_norm(self) -> float:
        return max(max(abs(v) for v in s) for s in self.states)


@dataclass
class PwsOptions:
    """Tolerances and budgets for event-driven integration."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 50_000_000
    dense_output_stride: float = 0.01
    max_events: int = 10_000
    surface_tol: float = SURFACE_TOL
    residual_tol: float = RESIDUAL_TOL

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


class _Recorder:
    def __init__(self, traj: Trajectory, t0: float, stride: float):
        self.traj = traj
        self.t0 = t0
        self.stride = stride
        self.k = 1  # next stride sample index

    def next_time(self) -> float:
        return self.t0 + self.k * self.stride

    def emit_through(self, t_hi: float, interp, mode: str, lam_of=None) -> None:
        while self.next_time() <= t_hi + 1e-12 * max(1.0, abs(t_hi)):
            t = self.next_time()
            s = interp(min(t, t_hi))
            lam = lam_of(s) if lam_of is not None else None
            self.traj.append(t, s, mode, lam)
            self.k += 1


def _continued_root(sys: PiecewiseSystem, x2: float, x3: float,
                    prev: float) -> float | None:
    roots = sliding_lambdas(sys, x2, x3)
    if not roots:
        return None
    return min(roots, key=lambda r: abs(r - prev))


def _entry_root(sys: PiecewiseSystem, x2: float, x3: float,
                incoming: int) -> float | None:
    """Layer equilibrium first reached from lambda = incoming side."""
    roots = sliding_lambdas(sys, x2, x3)
    if not roots:
        return None
    attracting = [r for r in roots
                  if sys.f1_dlambda(0.0, x2, x3, r) < 0.0]
    pool = attracting or roots
    return max(pool) if incoming > 0 else min(pool)


def integrate_pws(sys: PiecewiseSystem, x0, t_end: float,
                  opts: PwsOptions | None = None) -> Trajectory:
    """Event-driven integration of the piecewise-smooth flow from x0.

    Open-region flight uses an adaptive Runge-Kutta pair with the surface
    crossing located to |x1| < surface_tol. Surface arrivals are classified;
    crossings switch branch, sliding follows the surface flow with lambda*
    tracked continuously. Sliding exits when lambda* reaches +-1 (or the
    sliding root disappears at a fold) and hands over to the free flow.
    Repelling sliding continues but sets the trajectory's non_unique flag.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    opts = opts or PwsOptions()
    traj = Trajectory()
    rec = _Recorder(traj, 0.0, opts.dense_output_stride)

    t = 0.0
    x = (float(x0[0]), float(x0[1]), float(x0[2]))

    if abs(x[0]) <= opts.surface_tol:
        region = 0
    else:
        region = 1 if x[0] > 0 else -1
    traj.append(0.0, x, _free_mode(region) if region else "sliding", None)

    last_free_region = region
    while t < t_end:
        if traj.events > opts.max_events:
            raise EventLimitError(f"more than {opts.max_events} surface events")
        if region != 0:
            last_free_region = region
            t, x, region = _free_leg(sys, t, x, region, t_end, opts, traj, rec)
        else:
            t, x, region = _sliding_leg(sys, t, x, t_end, opts, traj, rec,
                                        incoming=last_free_region)
    return traj


def _free_mode(region: int) -> str:
    return "free+" if region > 0 else "free-"


def _free_leg(sys, t, x, region, t_end, opts, traj, rec):
    """Integrate one open-region segment; returns (t, x, next_region)."""
    fld = sys.branch_field(region)
    stepper = Dopri3(fld, t, x, rtol=opts.rel_tol, atol=opts.abs_tol,
                     max_step=opts.max_step, max_steps=opts.max_steps)
    mode = _free_mode(region)
    while stepper.t < t_end:
        snap = stepper.snapshot()
        stepper.step_to(t_end)
        x1_prev = stepper.x_prev[0]
        x1_new = stepper.x[0]
        crossed = (x1_prev * x1_new < 0.0 or
                   (abs(x1_new) <= opts.surface_tol and abs(x1_prev) > opts.surface_tol) or
                   (abs(x1_new) > opts.surface_tol and (x1_new > 0) != (region > 0)))
        if not crossed:
            rec.emit_through(stepper.t, stepper.interpolate, mode)
            continue
        step_interp = _hermite_closure(stepper)
        t_ev = _locate_crossing(stepper, snap, opts, region)
        rec.emit_through(t_ev, step_interp, mode)
        x_ev = (0.0, stepper.x[1], stepper.x[2])
        traj.events += 1
        sm = classify_surface_point(sys, x_ev, opts.residual_tol)
        if sm is SurfaceMode.CROSSING:
            traj.append(t_ev, x_ev, "crossing", None)
            return stepper.t, x_ev, -region
        if sm in (SurfaceMode.ATTRACTING_SLIDING, SurfaceMode.REPELLING_SLIDING):
            if sm is SurfaceMode.REPELLING_SLIDING:
                traj.non_unique = True
            traj.append(t_ev, x_ev, "sliding", None)
            return stepper.t, x_ev, 0
        # tangency: continue in the region the flow curves into
        side = _resolve_tangency(sys, x_ev, region, opts.residual_tol)
        if side == 0:
            traj.append(t_ev, x_ev, "sliding", None)
            return stepper.t, x_ev, 0
        traj.append(t_ev, x_ev, "crossing", None)
        return stepper.t, x_ev, side
    rec.emit_through(t_end, stepper.interpolate, mode)
    traj.append(t_end, stepper.x, mode, None)
    return stepper.t, stepper.x, region


def _hermite_closure(stepper: Dopri3):
    """Dense-output closure for the stepper's last accepted step."""
    t0, x0, f0 = stepper.t_prev, stepper.x_prev, stepper.f_prev
    t1, x1v, f1v = stepper.t, stepper.x, stepper.f
    return lambda tt: hermite(t0, x0, f0, t1, x1v, f1v, tt)


def _locate_crossing(stepper: Dopri3, snap, opts, region: int) -> float:
    """Move the stepper so its state sits on x1 = 0 to surface_tol."""
    t0, x0, f0 = stepper.t_prev, stepper.x_prev, stepper.f_prev
    t1, x1v, f1v = stepper.t, stepper.x, stepper.f
    lo, hi = t0, t1
    g_lo, g_hi = x0[0], x1v[0]
    if g_lo == 0.0:
        # leg started exactly on the surface; treat the start as region-side
        g_lo = region * opts.surface_tol

    # initial guess from the dense interpolant
    def gh(tt):
        return hermite(t0, x0, f0, t1, x1v, f1v, tt)[0]

    guess = polish_bracketed_root(gh, lo, hi, g_lo, g_hi, residual_tol=0.0) \
        if g_lo * g_hi < 0.0 else t1

    for _ in range(60):
        stepper.restore(snap)
        stepper.advance_to(guess)
        val = stepper.x[0]
        if abs(val) <= opts.surface_tol:
            return stepper.t
        if g_lo * val < 0.0:
            hi, g_hi = guess, val
        else:
            lo, g_lo = guess, val
        deriv = stepper.f[0]
        nxt = guess - val / deriv if deriv != 0.0 else 0.5 * (lo + hi)
        if not (lo < nxt < hi):
            nxt = 0.5 * (lo + hi)
        if hi - lo <= math.ulp(max(abs(lo), abs(hi), 1.0)):
            return stepper.t
        guess = nxt
    return stepper.t


def _resolve_tangency(sys, x, incoming, tol) -> int:
    """Region to continue in after a grazing arrival (0 means slide)."""
    vplus = sys.combined(0.0, x[1], x[2], 1.0)[0]
    vminus = sys.combined(0.0, x[1], x[2], -1.0)[0]
    if abs(vplus) <= tol and abs(vminus) <= tol:
        return 0  # two-fold point itself: hand to sliding machinery
    grazing = 1 if abs(vplus) <= tol else -1
    curv = sys.surface_curvature(x, grazing)
    if curv * grazing > 0.0:
        # visible fold: the grazing flow curves back into its own region
        return grazing
    other = -grazing
    v_other = vplus if other > 0 else vminus
    if v_other * other < 0.0:
        return 0  # other side pushes onto the surface: sliding
    return other


def _sliding_leg(sys, t, x, t_end, opts, traj, rec, incoming: int = -1):
    """Integrate one sliding segment on x1 = 0; returns (t, x, next_region)."""
    x2, x3 = x[1], x[2]
    prev = _entry_root(sys, x2, x3, incoming if incoming else -1)
    if prev is None:
        roots = sliding_lambdas(sys, x2, x3)
        if not roots:
            side = 1 if sys.combined(0.0, x2, x3, 0.0)[0] > 0 else -1
            return t, (0.0, x2, x3), side
        prev = roots[0]
    cell = [prev]
    combined = sys.combined

    def srhs(tt, xx):
        lam = _continued_root(sys, xx[1], xx[2], cell[0])
        if lam is None:
            lam = cell[0]
        _, f2v, f3v = combined(0.0, xx[1], xx[2], lam)
        return (0.0, f2v, f3v)

    def lam_at(state):
        return _continued_root(sys, state[1], state[2], cell[0])

    stepper = Dopri3(srhs, t, (0.0, x2, x3), rtol=opts.rel_tol,
                     atol=opts.abs_tol, max_step=opts.max_step,
                     max_steps=opts.max_steps)
    if sys.f1_dlambda(0.0, x2, x3, prev) > 0.0:
        traj.non_unique = True
    traj.append(t, (0.0, x2, x3), "sliding", prev)

    while stepper.t < t_end:
        snap = stepper.snapshot()
        stepper.step_to(t_end)
        lam_new = lam_at(stepper.x)
        if lam_new is not None and abs(lam_new) < 1.0 - 1e-12:
            if sys.f1_dlambda(0.0, stepper.x[1], stepper.x[2], lam_new) > 0.0:
                traj.non_unique = True
            cell[0] = lam_new
            rec.emit_through(stepper.t, stepper.interpolate, "sliding", lam_at)
            continue
        # exit event: lambda* reached +-1 or the root vanished (fold)
        step_interp = _hermite_closure(stepper)
        t_ev, lam_ev = _locate_sliding_exit(stepper, snap, lam_at, cell)
        rec.emit_through(t_ev, step_interp, "sliding", lam_at)
        x_ev = (0.0, stepper.x[1], stepper.x[2])
        traj.events += 1
        if lam_ev is None:
            lam_probe = cell[0]
            side = 1 if combined(0.0, x_ev[1], x_ev[2], lam_probe)[0] >= 0 else -1
        else:
            side = 1 if lam_ev > 0 else -1
        traj.append(t_ev, x_ev, "sliding", lam_ev if lam_ev is not None else cell[0])
        return stepper.t, x_ev, side
    rec.emit_through(t_end, stepper.interpolate, "sliding", lam_at)
    lam_fin = lam_at(stepper.x)
    traj.append(t_end, (0.0, stepper.x[1], stepper.x[2]), "sliding", lam_fin)
    return stepper.t, stepper.x, 0


def _locate_sliding_exit(stepper: Dopri3, snap, lam_at, cell):
    """Bisect the accepted step down to the sliding-exit time.

    Exit means 1 - |lambda*| changes sign (fold boundary of the layer
    equilibrium) or the root ceases to exist. Returns (t_exit, lambda_exit)
    with lambda_exit None when the root vanished.
    """
    t_lo = stepper.t_prev
    t_hi = stepper.t
    for _ in range(60):
        mid = 0.5 * (t_lo + t_hi)
        stepper.restore(snap)
        stepper.advance_to(mid)
        lam = lam_at(stepper.x)
        if lam is not None and abs(lam) < 1.0 - 1e-12:
            cell[0] = lam
            t_lo = mid
        else:
            t_hi = mid
        if t_hi - t_lo <= 1e-9 * max(1.0, abs(t_hi)) or \
                (lam is not None and abs(abs(lam) - 1.0) <= 1e-9):
            break
    stepper.restore(snap)
    stepper.advance_to(t_hi)
    lam = lam_at(stepper.x)
    if lam is not None and abs(lam) >= 1.0 - 1e-9:
        lam = math.copysign(1.0, lam)
    return stepper.t, lam
