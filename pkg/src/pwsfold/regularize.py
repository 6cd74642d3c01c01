"""Regularization of the switching surface into a slow-fast layer.

Replacing lambda by a monotone sigmoid phi(x1/eps) turns the piecewise-smooth
system into a smooth one with a fast layer of width eps. The epsilon-free
critical objects all live at the lambda level: the sliding (critical)
manifold is the root set of the layer field f1(0, x2, x3; lambda), its
stability is the sign of d f1 / d lambda, and u-level quantities are obtained
through the sigmoid's inverse and derivative only where needed.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Callable, Iterable, Sequence

from .exceptions import NonHyperbolicPointError
from .pws import PiecewiseSystem, sliding_lambdas

if TYPE_CHECKING:  # pragma: no cover
    from .twofold import TwoFoldParams

__all__ = [
    "Sigmoid", "builtin_sigmoid", "SIGMOID_NAMES", "Stability", "CriticalPoint",
    "regularized_field", "compile_regularized_field", "layer_field",
    "critical_manifold", "nonhyperbolic_curve", "slow_u_dot", "dummy_field",
    "degeneracy_probe", "critical_manifold_csv", "nonhyperbolic_curve_csv",
]


@dataclass(frozen=True)
class Sigmoid:
    """A monotone transition profile phi with |phi| -> 1 as |u| grows.

    value/derivative/second_derivative are functions of the fast variable u;
    inverse maps lambda in (-1, 1) back to u. exactly_saturates marks
    profiles that reach +-1 at finite |u| (piecewise polynomial class);
    the asymptotic profiles approach +-1 only in the limit.
    """

    name: str
    value: Callable[[float], float]
    derivative: Callable[[float], float]
    second_derivative: Callable[[float], float]
    inverse: Callable[[float], float]
    exactly_saturates: bool
    inline: str  # python source template with {u} placeholder


def _cubic_value(u: float) -> float:
    if u <= -1.0:
        return -1.0
    if u >= 1.0:
        return 1.0
    return 0.5 * (3.0 * u - u ** 3)


def _cubic_derivative(u: float) -> float:
    if abs(u) >= 1.0:
        return 0.0
    return 1.5 * (1.0 - u * u)


def _cubic_second(u: float) -> float:
    if abs(u) >= 1.0:
        return 0.0
    return -3.0 * u


def _cubic_inverse(lam: float) -> float:
    if not -1.0 <= lam <= 1.0:
        raise ValueError(f"no preimage for lambda = {lam!r}")
    return 2.0 * math.sin(math.asin(lam) / 3.0)


def _algebraic_inverse(lam: float) -> float:
    if not -1.0 < lam < 1.0:
        raise ValueError(f"no preimage for lambda = {lam!r}")
    return lam / math.sqrt(1.0 - lam * lam)


_TANH = Sigmoid(
    name="tanh",
    value=math.tanh,
    derivative=lambda u: 1.0 - math.tanh(u) ** 2,
    second_derivative=lambda u: -2.0 * math.tanh(u) * (1.0 - math.tanh(u) ** 2),
    inverse=math.atanh,
    exactly_saturates=False,
    inline="math.tanh({u})",
)

_ALGEBRAIC = Sigmoid(
    name="algebraic",
    value=lambda u: u / math.sqrt(1.0 + u * u),
    derivative=lambda u: (1.0 + u * u) ** -1.5,
    second_derivative=lambda u: -3.0 * u * (1.0 + u * u) ** -2.5,
    inverse=_algebraic_inverse,
    exactly_saturates=False,
    inline="(({u}) / math.sqrt(1.0 + ({u}) * ({u})))",
)

_CUBIC = Sigmoid(
    name="cubic",
    value=_cubic_value,
    derivative=_cubic_derivative,
    second_derivative=_cubic_second,
    inverse=_cubic_inverse,
    exactly_saturates=True,
    inline="(-1.0 if ({u}) <= -1.0 else (1.0 if ({u}) >= 1.0 else "
           "0.5 * (3.0 * ({u}) - ({u}) ** 3)))",
)

_BUILTINS = {s.name: s for s in (_TANH, _ALGEBRAIC, _CUBIC)}
SIGMOID_NAMES = tuple(_BUILTINS)


def builtin_sigmoid(name: str) -> Sigmoid:
    try:
        return _BUILTINS[name]
    except KeyError:
        raise ValueError(f"unknown sigmoid {name!r}; choose from {SIGMOID_NAMES}") from None


# --- fields ------------------------------------------------------------------


def regularized_field(sys: PiecewiseSystem, s: Sigmoid, eps: float, x):
    """The smooth field with lambda replaced by phi(x1/eps)."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    lam = s.value(x[0] / eps)
    lam = min(1.0, max(-1.0, lam))
    return sys.combined(x[0], x[1], x[2], lam)


def compile_regularized_field(sys: PiecewiseSystem, s: Sigmoid, eps: float):
    """Fast (t, x) -> (f1, f2, f3) callable with the sigmoid inlined."""
    lam_src = s.inline.format(u=f"(x1 * {1.0 / eps!r})")
    from . import expr as ex
    comps = ", ".join(ex._py_source(c) for c in sys.combined_expressions)
    src = ("def _f(t, x, _m=math):\n"
           "    x1, x2, x3 = x\n"
           f"    lam = {lam_src}\n"
           f"    return ({comps})\n")
    ns: dict = {"math": math, "_sin": math.sin, "_cos": math.cos,
                "_tanh": math.tanh, "_sqrt": math.sqrt}
    exec(src, ns)
    return ns["_f"]


def layer_field(sys: PiecewiseSystem, lam: float, x2: float, x3: float) -> float:
    """Fast critical subsystem: f1 on the surface, lambda as the layer variable."""
    if not -1.0 - 1e-12 <= lam <= 1.0 + 1e-12:
        raise ValueError(f"lambda must lie in [-1, 1], got {lam!r}")
    return sys.combined(0.0, x2, x3, lam)[0]


def dummy_field(sys: PiecewiseSystem, x, lam: float):
    """(lambda', dx2/dt, dx3/dt): layer dynamics of lambda on the fast time,
    slow drift of (x2, x3) on the original time."""
    if not -1.0 - 1e-12 <= lam <= 1.0 + 1e-12:
        raise ValueError(f"lambda must lie in [-1, 1], got {lam!r}")
    return sys.combined(x[0], x[1], x[2], lam)


# --- critical objects ---------------------------------------------------------


class Stability(enum.Enum):
    ATTRACTING = "attracting"
    REPELLING = "repelling"
    NON_HYPERBOLIC = "non_hyperbolic"


@dataclass(frozen=True)
class CriticalPoint:
    """A layer equilibrium (lambda, x2, x3) with its normal stability."""

    lam: float
    x2: float
    x3: float
    stability: Stability


_HYPERBOLICITY_TOL = 1e-9


def _stability(sys: PiecewiseSystem, lam: float, x2: float, x3: float) -> Stability:
    slope = sys.f1_dlambda(0.0, x2, x3, lam)
    if abs(slope) < _HYPERBOLICITY_TOL:
        return Stability.NON_HYPERBOLIC
    return Stability.ATTRACTING if slope < 0.0 else Stability.REPELLING


def critical_manifold(sys: PiecewiseSystem, x2_values: Sequence[float],
                      x3_values: Sequence[float]) -> list[CriticalPoint]:
    """Sample the sliding manifold over a rectangular (x2, x3) grid."""
    points = []
    for x2 in x2_values:
        for x3 in x3_values:
            for lam in sliding_lambdas(sys, x2, x3):
                points.append(CriticalPoint(lam, x2, x3, _stability(sys, lam, x2, x3)))
    return points


def nonhyperbolic_curve(params: "TwoFoldParams", n: int) -> list[tuple[float, float, float]]:
    """Sample the curve where normal hyperbolicity fails, for the two-fold
    normal form with hidden strength alpha: (lambda, alpha (lambda-1)^2,
    -alpha (lambda+1)^2) for lambda in [-1, 1]."""
    if n < 2:
        raise ValueError("need at least 2 samples")
    al = params.alpha
    out = []
    for i in range(n):
        lam = -1.0 + 2.0 * i / (n - 1)
        # + 0.0 normalizes the -0.0 arising at the endpoints
        out.append((lam, al * (lam - 1.0) ** 2 + 0.0, -al * (lam + 1.0) ** 2 + 0.0))
    return out


def slow_u_dot(sys: PiecewiseSystem, s: Sigmoid, point: CriticalPoint) -> float:
    """Rate of travel of the layer variable u along the sliding flow.

    On the critical manifold, u' = -(f2, f3) . (df1/dx2, df1/dx3) / (df1/du)
    with df1/du = phi'(psi(lambda)) df1/dlambda. Non-hyperbolic points make
    this 0/0, which is the folded-singularity signature.
    """
    lam, x2, x3 = point.lam, point.x2, point.x3
    u = s.inverse(lam)
    df1_dlam = sys.f1_dlambda(0.0, x2, x3, lam)
    df1_du = s.derivative(u) * df1_dlam
    if abs(df1_du) <= _HYPERBOLICITY_TOL:
        raise NonHyperbolicPointError(
            f"df1/du = {df1_du:.3e} at lambda = {lam!r}; slow flow is "
            "indeterminate here (potential folded singularity)")
    _, f2v, f3v = sys.combined(0.0, x2, x3, lam)
    g2, g3 = _surface_gradient(sys, x2, x3, lam)
    return -(f2v * g2 + f3v * g3) / df1_du


def _surface_gradient(sys: PiecewiseSystem, x2: float, x3: float, lam: float):
    from . import expr as ex
    cache = getattr(sys, "_f1_xgrad", None)
    if cache is None:
        f1 = sys.combined_expressions[0]
        cache = (ex.compile_expression(ex.differentiate(f1, "x2")),
                 ex.compile_expression(ex.differentiate(f1, "x3")))
        object.__setattr__(sys, "_f1_xgrad", cache)
    return cache[0](0.0, x2, x3, lam), cache[1](0.0, x2, x3, lam)


# --- degeneracy of the unperturbed two-fold -----------------------------------


def degeneracy_probe(params: "TwoFoldParams", s: Sigmoid,
                     point: tuple[float, float, float], r: int) -> float:
    """r-th partial of the normal form's layer field with respect to u.

    For the two-fold normal form, f1(0, x2, x3; phi) is quadratic in phi with
    d f1/d phi = -(x2+x3)/2 - 2 alpha phi and d^2 f1/d phi^2 = -2 alpha, so
    orders 1 and 2 follow exactly from the chain rule through the sigmoid.
    Orders 3 and 4 use central differences of the exact order-2 values
    (step 1e-4). The point must lie on the non-hyperbolic curve.
    """
    if r not in (1, 2, 3, 4):
        raise ValueError("order must be between 1 and 4")
    lam, x2, x3 = point
    al = params.alpha
    u0 = s.inverse(lam)

    def d1_exact(u: float) -> float:
        phi = s.value(u)
        f1_phi = -(x2 + x3) / 2.0 - 2.0 * al * phi
        return f1_phi * s.derivative(u)

    def d2_exact(u: float) -> float:
        phi = s.value(u)
        f1_phi = -(x2 + x3) / 2.0 - 2.0 * al * phi
        return -2.0 * al * s.derivative(u) ** 2 + f1_phi * s.second_derivative(u)

    if r == 1:
        return d1_exact(u0)
    if r == 2:
        return d2_exact(u0)
    h = 1e-4
    if r == 3:
        return (d2_exact(u0 + h) - d2_exact(u0 - h)) / (2.0 * h)
    return (d2_exact(u0 + h) - 2.0 * d2_exact(u0) + d2_exact(u0 - h)) / (h * h)


# --- CSV emission -------------------------------------------------------------


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def critical_manifold_csv(points: Iterable[CriticalPoint]) -> str:
    lines = ["lambda,x2,x3,stability"]
    for p in points:
        lines.append(f"{_fmt(p.lam)},{_fmt(p.x2)},{_fmt(p.x3)},{p.stability.value}")
    return "\n".join(lines) + "\n"


def nonhyperbolic_curve_csv(samples: Iterable[tuple[float, float, float]]) -> str:
    lines = ["lambda,x2,x3,stability"]
    for lam, x2, x3 in samples:
        lines.append(f"{_fmt(lam)},{_fmt(x2)},{_fmt(x3)},non_hyperbolic")
    return "\n".join(lines) + "\n"
