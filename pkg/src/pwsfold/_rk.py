"""Adaptive Dormand-Prince 5(4) stepping for 3-component systems.

The stepper is specialized (unrolled) for state tuples of length 3; the
event-driven integrator reuses it for sliding flow by pinning the first
component to zero. FSAL: the last stage of an accepted step seeds the next.
"""

from __future__ import annotations

import math

from .exceptions import StepBudgetError, StepUnderflowError

# Dormand-Prince coefficients.
A21 = 1 / 5
A31, A32 = 3 / 40, 9 / 40
A41, A42, A43 = 44 / 45, -56 / 15, 32 / 9
A51, A52, A53, A54 = 19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729
A61, A62, A63, A64, A65 = 9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656
B1, B3, B4, B5, B6 = 35 / 384, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84
C2, C3, C4, C5 = 1 / 5, 3 / 10, 4 / 5, 8 / 9
# Error weights: 5th-order minus embedded 4th-order solution.
E1, E3, E4, E5, E6, E7 = (71 / 57600, -71 / 16695, 71 / 1920,
                          -17253 / 339200, 22 / 525, -1 / 40)

_MIN_FACTOR = 0.2
_MAX_FACTOR = 5.0
_SAFETY = 0.9


def hermite(t0, x0, f0, t1, x1, f1, t):
    """Cubic Hermite interpolant between two accepted step endpoints."""
    h = t1 - t0
    if h == 0.0:
        return x1
    th = (t - t0) / h
    out = []
    for i in range(3):
        d = x1[i] - x0[i]
        c2 = 3.0 * d - h * (2.0 * f0[i] + f1[i])
        c3 = -2.0 * d + h * (f0[i] + f1[i])
        out.append(x0[i] + th * (h * f0[i] + th * (c2 + th * c3)))
    return tuple(out)


class Dopri3:
    """One 3-component Dormand-Prince integrator with snapshot/rewind.

    field(t, x) must return a tuple of 3 floats. step_cap, when given, is
    called as step_cap(t, x, f) with the current field value and returns an
    additional upper bound on the step size (or None).
    """

    def __init__(self, field, t0: float, x0, *, rtol: float = 1e-8,
                 atol: float = 1e-10, max_step: float = math.inf,
                 max_steps: int = 50_000_000, step_cap=None,
                 first_step: float | None = None):
        self.field = field
        self.t = float(t0)
        self.x = (float(x0[0]), float(x0[1]), float(x0[2]))
        self.f = field(self.t, self.x)
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.max_steps = max_steps
        self.step_cap = step_cap
        self.nsteps = 0
        self.h = first_step if first_step is not None else self._initial_step()
        # previous accepted endpoint, for interpolation and event rewind
        self.t_prev = self.t
        self.x_prev = self.x
        self.f_prev = self.f

    # -- utilities ----------------------------------------------------------

    def _initial_step(self) -> float:
        fn = math.sqrt(sum(v * v for v in self.f))
        xn = math.sqrt(sum(v * v for v in self.x))
        scale = self.atol + self.rtol * max(xn, 1.0)
        h = 0.01 * scale / fn if fn > 0 else 1e-6
        return min(h, self.max_step)

    def snapshot(self):
        return (self.t, self.x, self.f, self.h, self.t_prev, self.x_prev,
                self.f_prev, self.nsteps)

    def restore(self, snap) -> None:
        (self.t, self.x, self.f, self.h, self.t_prev, self.x_prev,
         self.f_prev, self.nsteps) = snap

    def interpolate(self, t: float):
        """State within the last accepted step via cubic Hermite."""
        return hermite(self.t_prev, self.x_prev, self.f_prev,
                       self.t, self.x, self.f, t)

    # -- stepping -----------------------------------------------------------

    def _attempt(self, h: float):
        """Try one step of size h; returns (x_new, f_new, err_norm)."""
        f = self.field
        t, (y1, y2, y3) = self.t, self.x
        k11, k12, k13 = self.f

        a = h * A21
        k21, k22, k23 = f(t + C2 * h, (y1 + a * k11, y2 + a * k12, y3 + a * k13))
        k31, k32, k33 = f(t + C3 * h, (y1 + h * (A31 * k11 + A32 * k21),
                                       y2 + h * (A31 * k12 + A32 * k22),
                                       y3 + h * (A31 * k13 + A32 * k23)))
        k41, k42, k43 = f(t + C4 * h, (y1 + h * (A41 * k11 + A42 * k21 + A43 * k31),
                                       y2 + h * (A41 * k12 + A42 * k22 + A43 * k32),
                                       y3 + h * (A41 * k13 + A42 * k23 + A43 * k33)))
        k51, k52, k53 = f(t + C5 * h,
                          (y1 + h * (A51 * k11 + A52 * k21 + A53 * k31 + A54 * k41),
                           y2 + h * (A51 * k12 + A52 * k22 + A53 * k32 + A54 * k42),
                           y3 + h * (A51 * k13 + A52 * k23 + A53 * k33 + A54 * k43)))
        k61, k62, k63 = f(t + h,
                          (y1 + h * (A61 * k11 + A62 * k21 + A63 * k31 + A64 * k41 + A65 * k51),
                           y2 + h * (A61 * k12 + A62 * k22 + A63 * k32 + A64 * k42 + A65 * k52),
                           y3 + h * (A61 * k13 + A62 * k23 + A63 * k33 + A64 * k43 + A65 * k53)))
        z1 = y1 + h * (B1 * k11 + B3 * k31 + B4 * k41 + B5 * k51 + B6 * k61)
        z2 = y2 + h * (B1 * k12 + B3 * k32 + B4 * k42 + B5 * k52 + B6 * k62)
        z3 = y3 + h * (B1 * k13 + B3 * k33 + B4 * k43 + B5 * k53 + B6 * k63)
        k71, k72, k73 = f(t + h, (z1, z2, z3))

        e1 = h * (E1 * k11 + E3 * k31 + E4 * k41 + E5 * k51 + E6 * k61 + E7 * k71)
        e2 = h * (E1 * k12 + E3 * k32 + E4 * k42 + E5 * k52 + E6 * k62 + E7 * k72)
        e3 = h * (E1 * k13 + E3 * k33 + E4 * k43 + E5 * k53 + E6 * k63 + E7 * k73)

        s1 = self.atol + self.rtol * max(abs(y1), abs(z1))
        s2 = self.atol + self.rtol * max(abs(y2), abs(z2))
        s3 = self.atol + self.rtol * max(abs(y3), abs(z3))
        err = math.sqrt(((e1 / s1) ** 2 + (e2 / s2) ** 2 + (e3 / s3) ** 2) / 3.0)
        return (z1, z2, z3), (k71, k72, k73), err

    def step_to(self, t_bound: float) -> None:
        """Advance by one accepted step, not crossing t_bound."""
        tiny = 16.0 * math.ulp(max(abs(self.t), 1.0))
        if t_bound - self.t <= 2.0 * tiny:
            if t_bound > self.t:
                self.t = t_bound  # sub-resolution gap: declare arrival
            return
        h = min(self.h, self.max_step, t_bound - self.t)
        if self.step_cap is not None:
            cap = self.step_cap(self.t, self.x, self.f)
            if cap is not None and cap < h:
                h = cap
        while True:
            if self.nsteps >= self.max_steps:
                raise StepBudgetError(f"exceeded max_steps={self.max_steps}")
            if h < tiny:
                raise StepUnderflowError(f"step size underflow at t={self.t!r}")
            self.nsteps += 1
            x_new, f_new, err = self._attempt(h)
            if err <= 1.0 and all(math.isfinite(v) for v in x_new):
                factor = _MAX_FACTOR if err == 0.0 else min(
                    _MAX_FACTOR, max(_MIN_FACTOR, _SAFETY * err ** -0.2))
                self.t_prev, self.x_prev, self.f_prev = self.t, self.x, self.f
                self.t, self.x, self.f = self.t + h, x_new, f_new
                self.h = min(h * factor, self.max_step)
                return
            if not all(math.isfinite(v) for v in x_new):
                h *= 0.25
            else:
                h *= max(_MIN_FACTOR, _SAFETY * err ** -0.2)

    def advance_to(self, t_target: float) -> None:
        """Run accepted steps until t == t_target (error-controlled)."""
        while self.t < t_target:
            self.step_to(t_target)
