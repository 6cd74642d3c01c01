"""Stiff-capable smooth integration, bundled demo systems, and comparisons.

The integrator is an explicit adaptive Runge-Kutta pair; stiffness from the
regularization layer is handled by capping the step near |x1| < 10 eps at
eps / |f|, which keeps the layer contraction inside the stability region
without an implicit method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterable, TextIO

from ._rk import Dopri3
from .exceptions import ValidationError
from .pws import PiecewiseSystem, Trajectory
from .regularize import Sigmoid, builtin_sigmoid, compile_regularized_field

__all__ = [
    "IntegratorOptions", "integrate_smooth", "regularized_trajectory",
    "run_example", "example_system", "compare_trajectories", "section6_system",
    "write_trajectory_csv", "trajectory_csv", "EXAMPLE_NAMES",
    "DEFAULT_EXAMPLE_X0",
]


@dataclass
class IntegratorOptions:
    """Adaptive-stepping controls shared by the smooth integrator."""

    rel_tol: float = 1e-8
    abs_tol: float = 1e-10
    max_step: float = math.inf
    max_steps: int = 50_000_000
    dense_output_stride: float = 0.01
    layer_eps: float | None = None  # enables the layer-aware step cap

    def __post_init__(self):
        if self.rel_tol <= 0 or self.abs_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")


def integrate_smooth(field: Callable, x0, t_end: float,
                     opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate dx/dt = field(t, x) from x0 to t_end with dense output.

    Sample modes are 'free+'/'free-' by the sign of x1. Configure
    opts.layer_eps to enable the stiffness cap near the layer; use
    regularized_trajectory to also record the layer value of lambda.
    """
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    opts = opts or IntegratorOptions()
    eps = opts.layer_eps
    cap = None
    if eps is not None:
        window = 10.0 * eps

        def cap(t, x, f, _eps=eps, _window=window):
            if abs(x[0]) >= _window:
                return None
            fn = math.sqrt(f[0] * f[0] + f[1] * f[1] + f[2] * f[2])
            return _eps / fn if fn > 0 else None

    stepper = Dopri3(field, 0.0, x0, rtol=opts.rel_tol, atol=opts.abs_tol,
                     max_step=opts.max_step, max_steps=opts.max_steps,
                     step_cap=cap)
    traj = Trajectory()
    traj.append(0.0, stepper.x, _mode_of(stepper.x), None)
    stride = opts.dense_output_stride
    k = 1
    while stepper.t < t_end:
        stepper.step_to(t_end)
        while k * stride <= stepper.t + 1e-12 * max(1.0, stepper.t):
            ts = k * stride
            state = stepper.interpolate(min(ts, stepper.t))
            traj.append(ts, state, _mode_of(state), None)
            k += 1
    traj.append(t_end, stepper.x, _mode_of(stepper.x), None)
    return traj


def _mode_of(state) -> str:
    return "free+" if state[0] >= 0 else "free-"


def regularized_trajectory(sys: PiecewiseSystem, s: Sigmoid, eps: float,
                           x0, t_end: float,
                           opts: IntegratorOptions | None = None) -> Trajectory:
    """Integrate the regularized system and record the layer value of lambda."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    opts = opts or IntegratorOptions()
    if opts.layer_eps is None:
        opts = IntegratorOptions(rel_tol=opts.rel_tol, abs_tol=opts.abs_tol,
                                 max_step=opts.max_step, max_steps=opts.max_steps,
                                 dense_output_stride=opts.dense_output_stride,
                                 layer_eps=eps)
    field = compile_regularized_field(sys, s, eps)
    traj = integrate_smooth(field, x0, t_end, opts)
    # fill the lambda column where the sample sits in the layer
    for i, state in enumerate(traj.states):
        if abs(state[0]) <= eps:
            traj.lambdas[i] = min(1.0, max(-1.0, s.value(state[0] / eps)))
    return traj


# --- bundled demo systems -------------------------------------------------------

# Two planar systems with the same discontinuous limit dx/dt = -sign(x1) but
# different transition-layer drift: the plain convex combination drifts with
# dy/dt = -1 on the layer, while adding the hidden term g = (0, 2, 0) flips
# the layer drift to dy/dt = +1 (the off-surface dynamics is identical).
_S6_FPLUS = ("-1", "-1", "0")
_S6_FMINUS = ("1", "-1", "0")


def section6_system(nonlinear: bool) -> PiecewiseSystem:
    hidden = ("0", "2", "0") if nonlinear else None
    return PiecewiseSystem.from_strings(_S6_FPLUS, _S6_FMINUS, hidden)


_EXAMPLES = {
    "i": (("-x2", "2/5*x1 + 1/10*x2 - 1", "3/10*x2 - 1/5*x2*x3 - 2/5"),
          ("x3", "1/5*x2*x3 - 3/5", "2/5*x3 - 1 - x1")),
    "ii": (("-x2", "1 + x1", "-7/5"),
           ("x3", "-9/10", "1 - 3/5*x1")),
    "iii": (("-x2 + 1/10*x1", "x1 - 6/5", "x1 - 2"),
            ("x3 + 1/10*x1", "x1 + 23/100", "1 - x1")),
}
EXAMPLE_NAMES = tuple(_EXAMPLES)
_EXAMPLE_ALPHA = 0.2  # hidden strength 1/5 for all bundled attractors

# Per-example starting points inside the attractor's basin. Example (i) also
# has unbounded orbits (x2 grows along repeated sliding phases from, e.g.,
# (0.1, 0.1, 0.1)), so its default starts on the bounded side.
DEFAULT_EXAMPLE_X0 = {
    "i": (0.1, -0.5, 0.5),
    "ii": (0.1, 0.1, 0.1),
    "iii": (0.1, 0.1, 0.1),
}


def example_system(which: str) -> PiecewiseSystem:
    """One of the bundled oscillatory two-fold attractors ('i', 'ii', 'iii')."""
    try:
        fplus, fminus = _EXAMPLES[which]
    except KeyError:
        raise ValidationError(
            f"unknown example {which!r}; choose from {EXAMPLE_NAMES}") from None
    hidden = (repr(_EXAMPLE_ALPHA), "0", "0")
    return PiecewiseSystem.from_strings(fplus, fminus, hidden)


def run_example(which: str, eps: float, t_end: float,
                s: Sigmoid | str = "tanh", x0=None,
                opts: IntegratorOptions | None = None) -> Trajectory:
    """Regularize and integrate a bundled attractor example."""
    if isinstance(s, str):
        s = builtin_sigmoid(s)
    sys = example_system(which)
    if x0 is None:
        x0 = DEFAULT_EXAMPLE_X0[which]
    return regularized_trajectory(sys, s, eps, x0, t_end, opts)


# --- comparison -------------------------------------------------------------------


def compare_trajectories(a: Trajectory, b: Trajectory,
                         t_grid: Iterable[float]) -> float:
    """Sup over t_grid of the Euclidean distance between interpolated states."""
    worst = 0.0
    for t in t_grid:
        xa = a.state_at(t)
        xb = b.state_at(t)
        d = math.sqrt(sum((xa[i] - xb[i]) ** 2 for i in range(3)))
        if d > worst:
            worst = d
    return worst


# --- CSV ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def trajectory_csv(traj: Trajectory) -> str:
    lines = ["t,x1,x2,x3,lambda,mode"]
    for t, x, mode, lam in zip(traj.times, traj.states, traj.modes, traj.lambdas):
        lam_s = "" if lam is None else _fmt(lam)
        lines.append(f"{_fmt(t)},{_fmt(x[0])},{_fmt(x[1])},{_fmt(x[2])},{lam_s},{mode}")
    return "\n".join(lines) + "\n"


def write_trajectory_csv(traj: Trajectory, out: TextIO) -> None:
    out.write(trajectory_csv(traj))
