"""Zero reaction (pure convection with saturating diffusion): closed-form speeds and profiles.

With ``f = 0`` the reduced equation integrates exactly: the backward
solution through ``y(D1) = 0`` is

    y(w) = 1 - sqrt(1 - (c u - c + h(u) - h(1))^2 / eps^4),   u = D^{-1}(w),

and a connection between ``u-`` and ``u+`` travels with the chord speed
``c = (h(u-) - h(u+)) / (u+ - u-)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .bounds import Entry
from .expr import evaluate
from .model import ProblemSpec, reduce

__all__ = ["BurgersResult", "BurgersConditionError", "burgers_speed", "burgers_profile", "profile_conditions"]

GRID = 2001
MARGIN = 1e-10


class BurgersConditionError(ValueError):
    def __init__(self, message: str, u: float):
        super().__init__(f"{message} (first violation at u={u:.6g})")
        self.u = u


@dataclass
class BurgersResult:
    speed: float
    direction: str                      # "increasing", "decreasing" or "not-admissible"
    conditions: list[Entry] = field(default_factory=list)
    profile: Callable | None = None

    @property
    def admissible(self) -> bool:
        return self.direction != "not-admissible"


def _interior():
    return np.linspace(0.0, 1.0, GRID)[1:-1]


def _strict(lhs: np.ndarray, rhs: np.ndarray, u: np.ndarray):
    """(holds, worst lhs - rhs, first violating u) for ``lhs < rhs`` with the margin."""
    gap = lhs - rhs
    bad = np.nonzero(gap >= -MARGIN)[0]
    return bad.size == 0, float(gap.max()), (float(u[bad[0]]) if bad.size else math.nan)


def burgers_speed(spec: ProblemSpec, u_minus: float, u_plus: float) -> BurgersResult:
    """Chord speed for the pair ``(u-, u+)``; for ``{0, 1}`` also which connections are admissible."""
    if spec.kind != "Zero":
        raise ValueError("burgers_speed needs a zero reaction")
    if u_minus == u_plus:
        raise ValueError("u- and u+ must differ")
    h = lambda x: evaluate(spec.h, x)
    c = (h(u_minus) - h(u_plus)) / (u_plus - u_minus)
    if {u_minus, u_plus} != {0.0, 1.0}:
        return BurgersResult(c, "increasing" if u_minus < u_plus else "decreasing")
    u = _interior()
    hu, h1 = h(u), h(1.0)
    inc_lo, gap1, _ = _strict(hu - 1.0, h1 * u, u)
    inc_hi, gap2, _ = _strict(h1 * u, hu, u)
    dec_lo, gap3, _ = _strict(hu, h1 * u, u)
    dec_hi, gap4, _ = _strict(h1 * u, hu + 1.0, u)
    conditions = [
        Entry("increasing_chord", inc_lo and inc_hi, max(gap1, gap2), 0.0, "h(u) - 1 < h(1) u < h(u)"),
        Entry("decreasing_chord", dec_lo and dec_hi, max(gap3, gap4), 0.0, "h(u) < h(1) u < h(u) + 1"),
    ]
    increasing = u_minus < u_plus
    ok = conditions[0].satisfied if increasing else conditions[1].satisfied
    direction = ("increasing" if increasing else "decreasing") if ok else "not-admissible"
    result = BurgersResult(c, direction, conditions)
    if ok and increasing:
        result.profile = burgers_profile(spec, c)
    return result


def profile_conditions(spec: ProblemSpec, c: float) -> list[Entry]:
    """Positivity and sub-blow-up conditions for the closed-form backward solution."""
    u = _interior()
    g = (c * u - c + evaluate(spec.h, u) - evaluate(spec.h, 1.0)) / spec.epsilon ** 2
    pos, gap_p, _ = _strict(-g, np.zeros_like(g), u)
    below, gap_b, _ = _strict(g, np.ones_like(g), u)
    return [
        Entry("backward_positive", pos, gap_p, 0.0, "c - c u + h(1) - h(u) < 0"),
        Entry("backward_below_one", below, gap_b, 0.0, "c u - c + h(u) - h(1) < 1"),
    ]


def burgers_profile(spec: ProblemSpec, c: float) -> Callable:
    """Closed-form ``y(w)`` on ``[0, D1]``; raises if the solution is not positive or blows up."""
    u = _interior()
    g = (c * u - c + evaluate(spec.h, u) - evaluate(spec.h, 1.0)) / spec.epsilon ** 2
    bad = np.nonzero(g <= MARGIN)[0]
    if bad.size:
        raise BurgersConditionError("backward solution is not positive", float(u[bad[0]]))
    bad = np.nonzero(g >= 1.0 - MARGIN)[0]
    if bad.size:
        raise BurgersConditionError("backward solution reaches y = 1", float(u[bad[0]]))
    rp = reduce(spec)

    def y(w):
        uu = rp.u_of_w(w)
        s = (c * uu - c + evaluate(spec.h, uu) - evaluate(spec.h, 1.0)) / spec.epsilon ** 2
        s = np.clip(s, 0.0, 1.0)
        out = s * s / (1.0 + np.sqrt(1.0 - s * s))
        return float(out) if np.ndim(out) == 0 else out
    return y
