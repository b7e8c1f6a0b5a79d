"""Problem data, reaction classification and the reduced first-order problem.

A traveling wave ``v(x + c t)`` of the quasilinear equation

    u_t + h(u)_x = eps^2 * (P(D(u)_x))_x + f(u),   P(s) = s / sqrt(1 + s^2)

is reduced, through ``w = D(v)`` and ``y = Q(w')``, to

    y'(w) = (c + h'(u)) / (eps^2 d(u)) * R(y) - f(u) / eps^2,   u = D^{-1}(w)

on ``[0, D(1)]`` with ``y = 0`` at both ends, where ``R`` is the functional
inverse of ``Q``.  Internally most code works with the flux variable
``S = P(w') = sqrt(y (2 - y))`` because the equation for ``S`` stays
regular where ``y`` reaches 1; see :mod:`frontspeed.integrate`.
"""
from __future__ import annotations

import math
import threading
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .expr import Const, DomainError, Expr, ExprLike, Binary, as_expr, derivative_at, differentiate, evaluate

__all__ = [
    "HypothesisError", "UnclassifiableReaction", "ReactionClass", "ProblemSpec",
    "OperatorPair", "CURVATURE", "R", "Q", "P", "ReducedProblem",
    "classify_reaction", "make_spec", "reduce", "invert_D",
]

ZERO_TOL = 1e-14
CLASSIFY_POINTS = 2001
HYP_POINTS = 1001


class HypothesisError(ValueError):
    """A structural hypothesis on (f, h, D) fails; ``hypothesis`` names it ("D", "H", "F", or "eps" for the scale)."""

    def __init__(self, hypothesis: str, message: str):
        super().__init__(f"hypothesis ({hypothesis}) violated: {message}")
        self.hypothesis = hypothesis


class UnclassifiableReaction(HypothesisError):
    def __init__(self, message: str):
        super().__init__("F", message)


# ---------------------------------------------------------------- operator pair

def R(y):
    """Inverse of Q: ``R(y) = sqrt(y(2-y)) / (1-y)`` on ``[0, 1)``."""
    y = np.asarray(y, dtype=float)
    out = np.sqrt(y * (2.0 - y)) / (1.0 - y)
    return float(out) if out.ndim == 0 else out


def Q(s):
    """``Q(s) = 1 - 1/sqrt(1+s^2)``, written to avoid cancellation for small ``s``."""
    s = np.asarray(s, dtype=float)
    s2 = s * s
    out = s2 / (np.sqrt(1.0 + s2) * (1.0 + np.sqrt(1.0 + s2)))
    return float(out) if out.ndim == 0 else out


def P(s):
    """The saturating flux ``s / sqrt(1 + s^2)``."""
    s = np.asarray(s, dtype=float)
    out = s / np.sqrt(1.0 + s * s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class OperatorPair:
    """The (Q, R) pair attached to a flux P; only the curvature pair ships."""

    name: str
    P: Callable
    Q: Callable
    R: Callable


CURVATURE = OperatorPair("curvature", P, Q, R)


# ---------------------------------------------------------------- problem data

@dataclass(frozen=True)
class ReactionClass:
    kind: str            # "A", "B", "C" or "Zero"
    u0: float = 0.0

    def __str__(self):
        return self.kind if self.kind in ("A", "Zero") else f"{self.kind}(u0={self.u0:.6g})"


def _bisect(pred, lo: float, hi: float, tol: float = 1e-13) -> float:
    """Smallest point where ``pred`` becomes true, assuming pred(lo) false and pred(hi) true."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def classify_reaction(f: ExprLike) -> ReactionClass:
    """Classify ``f`` on [0, 1] as A, B{u0}, C{u0} or Zero by a grid scan plus refinement."""
    f = as_expr(f)
    grid = np.linspace(0.0, 1.0, CLASSIFY_POINTS)
    vals = evaluate(f, grid)
    inner = vals[1:-1]
    pos = inner > ZERO_TOL
    neg = inner < -ZERO_TOL
    zero = ~(pos | neg)
    if zero.all():
        return ReactionClass("Zero")
    if pos.all():
        return ReactionClass("A")
    if neg.any():
        first_pos = np.argmax(pos)
        if not pos.any() or neg[first_pos:].any() or not neg[0] or zero[first_pos:].any():
            raise UnclassifiableReaction("f must be negative on (0,u0) and positive on (u0,1)")
        # grid indices are shifted by one relative to ``inner``
        lo, hi = grid[first_pos], grid[first_pos + 1]
        u0 = _bisect(lambda x: evaluate(f, x) > 0.0, lo, hi)
        return ReactionClass("C", u0)
    last_zero = len(zero) - 1 - np.argmax(zero[::-1])
    if not zero[: last_zero + 1].all():
        raise UnclassifiableReaction("f must vanish on [0,u0] and be positive on (u0,1)")
    lo, hi = grid[last_zero + 1], grid[last_zero + 2]
    u0 = _bisect(lambda x: evaluate(f, x) > ZERO_TOL, lo, hi)
    return ReactionClass("B", u0)


@dataclass(frozen=True)
class ProblemSpec:
    """Validated problem data ``(f, h, D, eps)`` with its reaction class."""

    f: Expr
    h: Expr
    D: Expr
    epsilon: float
    reaction: ReactionClass
    D1: float
    d: Expr = field(repr=False)
    dh: Expr = field(repr=False)
    df: Expr = field(repr=False)
    h_shift: float = 0.0

    @property
    def u0(self) -> float:
        return self.reaction.u0

    @property
    def kind(self) -> str:
        return self.reaction.kind

    def with_epsilon(self, epsilon: float) -> "ProblemSpec":
        return make_spec(self.f, self.h, self.D, epsilon, self.reaction)

    def with_h(self, h: ExprLike) -> "ProblemSpec":
        return make_spec(self.f, h, self.D, self.epsilon, self.reaction)

    def fprime(self, u: float) -> float:
        return derivative_at(self.f, u)[0]

    def fprime_u0(self) -> float:
        """f'(u0) for class B/C taken just right of u0, where f is smooth in the shipped examples."""
        if self.kind in ("A", "Zero"):
            return self.fprime(0.0)
        return derivative_at(self.f, min(self.u0 + 1e-8, 1.0))[0]


def make_spec(f: ExprLike, h: ExprLike = "0", D: ExprLike = "u", epsilon: float = 1.0,
              class_override: ReactionClass | str | None = None) -> ProblemSpec:
    """Build a :class:`ProblemSpec`, checking the hypotheses on D, h and f.

    ``h`` is shifted so that ``h(0) = 0``; only ``h'`` and differences of h
    enter the analysis.
    """
    f, h, D = as_expr(f), as_expr(h), as_expr(D)
    if not epsilon > 0:
        raise HypothesisError("eps", f"epsilon must be positive, got {epsilon}")
    grid = np.linspace(0.0, 1.0, HYP_POINTS)
    d = differentiate(D)
    try:
        D0 = evaluate(D, 0.0)
        dvals = evaluate(d, grid)
    except DomainError as exc:
        raise HypothesisError("D", str(exc)) from None
    if abs(D0) > 1e-12:
        raise HypothesisError("D", f"D(0) = {D0:.6g}, expected 0")
    if dvals.min() <= 0.0:
        raise HypothesisError("D", f"d = D' must stay positive, min on grid is {dvals.min():.6g}")
    try:
        h0 = evaluate(h, 0.0)
        evaluate(h, grid)
        dh = differentiate(h)
        evaluate(dh, grid)
    except DomainError as exc:
        raise HypothesisError("H", str(exc)) from None
    if abs(h0) > 1e-12:
        h = Binary("-", h, Const(h0))
    else:
        h0 = 0.0
    try:
        fvals = evaluate(f, grid)
        df = differentiate(f)
    except DomainError as exc:
        raise HypothesisError("F", str(exc)) from None
    if isinstance(class_override, str):
        class_override = _parse_class(class_override)
    reaction = class_override or classify_reaction(f)
    if reaction.kind != "Zero" and (abs(fvals[0]) > 1e-10 or abs(fvals[-1]) > 1e-10):
        raise HypothesisError("F", f"f(0) = {fvals[0]:.3g}, f(1) = {fvals[-1]:.3g}; both must vanish")
    return ProblemSpec(f=f, h=h, D=D, epsilon=float(epsilon), reaction=reaction,
                       D1=float(evaluate(D, 1.0)), d=d, dh=dh, df=df, h_shift=float(h0))


def _parse_class(text: str) -> ReactionClass:
    """Parse "A", "Zero", "B:0.5" or "C:0.4"."""
    kind, _, u0 = text.partition(":")
    kind = kind.strip()
    if kind not in ("A", "B", "C", "Zero"):
        raise ValueError(f"unknown reaction class {text!r}")
    if kind in ("B", "C") and not u0:
        raise ValueError(f"class {kind} override needs u0, e.g. '{kind}:0.5'")
    return ReactionClass(kind, float(u0) if u0 else 0.0)


# ---------------------------------------------------------------- reduced problem

def _invert_monotone(D: Expr, d: Expr, w: np.ndarray, D1: float) -> np.ndarray:
    """Vectorized safeguarded Newton for ``D(u) = w`` with ``D`` increasing on [0, 1]."""
    lo = np.zeros_like(w)
    hi = np.ones_like(w)
    u = np.clip(w / D1, 0.0, 1.0)
    for _ in range(100):
        r = evaluate(D, u) - w
        lo = np.where(r <= 0, u, lo)
        hi = np.where(r >= 0, u, hi)
        if np.max(np.abs(r)) <= 1e-14:
            break
        step = u - r / evaluate(d, u)
        bad = (step <= lo) | (step >= hi)
        u = np.where(bad, 0.5 * (lo + hi), step)
    return u


@dataclass
class ReducedProblem:
    """Coefficients of the reduced problem on ``[0, D1]``.

    With ``A = 1/(eps^2 d)``, ``H = h'`` and ``F = f/eps^2`` (all composed
    with ``D^{-1}``) the right-hand side is ``(c + H) A R(y) - F``.
    Coefficient arrays are cached per grid; the cache is lock protected so
    one instance can serve concurrent probes.
    """

    spec: ProblemSpec
    ops: OperatorPair = CURVATURE
    _cache: dict = field(default_factory=dict, repr=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    @property
    def D1(self) -> float:
        return self.spec.D1

    @property
    def w0(self) -> float:
        """Matching point: D(u0) for class B/C, D(1/2) for the zero reaction."""
        kind = self.spec.kind
        if kind in ("B", "C"):
            return float(evaluate(self.spec.D, self.spec.u0))
        if kind == "Zero":
            return float(evaluate(self.spec.D, 0.5))
        return 0.0

    @property
    def identity_D(self) -> bool:
        return str(self.spec.D) == "u"

    def u_of_w(self, w):
        """D^{-1}(w), vectorized."""
        arr = np.asarray(w, dtype=float)
        if np.any(arr < -1e-15) or np.any(arr > self.D1 * (1 + 1e-15) + 1e-15):
            raise ValueError(f"w outside [0, {self.D1:.6g}]")
        arr = np.clip(arr, 0.0, self.D1)
        if self.identity_D:
            out = arr.copy()
        else:
            out = _invert_monotone(self.spec.D, self.spec.d, np.atleast_1d(arr), self.D1).reshape(arr.shape)
        return float(out) if out.ndim == 0 else out

    def coefficients(self, w) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Arrays ``(A, H, F)`` at the points ``w`` (uncached)."""
        s = self.spec
        u = np.atleast_1d(self.u_of_w(w))
        eps2 = s.epsilon ** 2
        A = 1.0 / (eps2 * evaluate(s.d, u))
        H = evaluate(s.dh, u)
        F = evaluate(s.f, u) / eps2
        return np.broadcast_to(A, u.shape).copy(), np.broadcast_to(H, u.shape).copy(), np.broadcast_to(F, u.shape).copy()

    def cached_coefficients(self, key, points_fn) -> tuple[list, list, list]:
        """Coefficient lists on a grid identified by ``key``; ``points_fn()`` builds the grid."""
        with self._lock:
            hit = self._cache.get(key)
        if hit is not None:
            return hit
        A, H, F = self.coefficients(points_fn())
        value = (A.tolist(), H.tolist(), F.tolist())
        with self._lock:
            self._cache.setdefault(key, value)
        return value

    def f_hat(self, w):
        return evaluate(self.spec.f, self.u_of_w(w))

    def dh_hat(self, w):
        return evaluate(self.spec.dh, self.u_of_w(w))

    def d_hat(self, w):
        return evaluate(self.spec.d, self.u_of_w(w))

    def alpha(self, w, c: float):
        return (c + self.dh_hat(w)) / (self.spec.epsilon ** 2 * self.d_hat(w))

    def beta(self, w):
        return self.f_hat(w) / self.spec.epsilon ** 2

    def rhs(self, w, y, c: float):
        """Right-hand side of the reduced equation in the ``y`` variable."""
        return self.alpha(w, c) * self.ops.R(y) - self.beta(w)

    def h_diff(self, u, v=0.0):
        """h(u) - h(v)."""
        return evaluate(self.spec.h, u) - evaluate(self.spec.h, v)


def reduce(spec: ProblemSpec) -> ReducedProblem:
    return ReducedProblem(spec)


def invert_D(rp: ReducedProblem, w):
    return rp.u_of_w(w)


def math_y_from_S(S: float) -> float:
    """y from the flux variable, ``y = 1 - sqrt(1 - S^2)`` without cancellation."""
    return S * S / (1.0 + math.sqrt(max(0.0, 1.0 - S * S)))
