"""Admissible speeds: critical speed for class A, unique speed for classes B/C.

Class A
    ``c`` is admissible iff the backward solution reaches the left endpoint
    without blowing up and lands in the basin of the slow root, i.e. its
    terminal slope ``P = S/w`` does not exceed the fast root of
    ``P^2 - aP + k``.  Speeds below ``2 eps sqrt(d(0) f'(0)) - h'(0)`` or with
    ``c + h'(0) <= 0`` are rejected without integrating.  The predicate is
    monotone in ``c``; ``c*`` is found by bisection.

Classes B, C and the zero reaction
    The mismatch ``M(c) = y+(w0) - y-(w0)`` at the matching point is
    nondecreasing in ``c``; the unique admissible speed is its zero.  Blow-up
    is encoded with infinities, and a probe where both solutions blow up
    proves that no speed exists.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .bounds import fisher_interval, lower_bound_A, upper_bound_A
from .integrate import SolverOptions, Status, Trajectory, backward_solution, forward_solution
from .model import ProblemSpec, ReducedProblem, reduce

__all__ = [
    "Probe", "SpeedResult", "admissible_A", "probe_A", "critical_speed_A", "mismatch_BC",
    "unique_speed_BC", "find_speed",
]

FAST_ROOT_SLACK = 1e-4   # relative slack on the fast-root test
JUMP_TOL = 1e-2          # mismatch jump across the final bracket that signals a discontinuity
MAX_WIDEN = 10


@dataclass
class Probe:
    """One evaluation of the speed predicate or the mismatch at speed ``c``."""

    c: float
    value: float                 # mismatch (B/C) or terminal slope P (A); nan when undefined
    forward: str = ""
    backward: str = ""
    admissible: bool | None = None
    y_plus: float = math.nan
    y_minus: float = math.nan
    note: str = ""

    @property
    def defined(self) -> bool:
        return not math.isnan(self.value)

    @property
    def both_blow_up(self) -> bool:
        return self.forward == Status.HIT_ONE.value and self.backward == Status.HIT_ONE.value


@dataclass
class SpeedResult:
    kind: str                            # "HalfLine", "Unique" or "NotFound"
    c_star: float | None
    bracket_used: tuple[float, float]
    residual: float = math.nan
    iterations: int = 0
    reason: str = ""
    evidence: list[str] = field(default_factory=list)
    diagnostics: list[Probe] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.kind != "NotFound"

    def summary(self) -> str:
        lo, hi = self.bracket_used
        if self.found:
            return (f"{self.kind} c* = {self.c_star:.6g} (bracket [{lo:.6g}, {hi:.6g}], "
                    f"residual {self.residual:.3g}, {self.iterations} iterations)")
        return f"NotFound on [{lo:.6g}, {hi:.6g}]: {self.reason}" + "".join(f"\n  {e}" for e in self.evidence)

    def to_dict(self, digits: int = 6) -> dict:
        def r(x):
            if x is None:
                return None
            return float(f"{x:.{digits}g}") if math.isfinite(x) else str(x)
        return {
            "kind": self.kind,
            "c_star": r(self.c_star),
            "bracket_used": [r(x) for x in self.bracket_used],
            "residual": r(self.residual),
            "iterations": self.iterations,
            "reason": self.reason,
            "evidence": list(self.evidence),
            "probes": [
                {"c": r(p.c), "value": r(p.value), "forward": p.forward, "backward": p.backward,
                 "admissible": p.admissible}
                for p in sorted(self.diagnostics, key=lambda p: p.c)
            ],
        }


# ---------------------------------------------------------------- class A

def _linear_gate(rp: ReducedProblem, c: float) -> bool:
    spec = rp.spec
    dh0 = float(rp.dh_hat(0.0))
    d0 = float(rp.d_hat(0.0))
    disc = (c + dh0) ** 2 - 4.0 * spec.epsilon ** 2 * d0 * spec.fprime(0.0)
    return c + dh0 > 0 and disc >= -1e-12


def probe_A(rp: ReducedProblem, c: float, opts: SolverOptions = SolverOptions()) -> Probe:
    if not _linear_gate(rp, c):
        return Probe(c, math.nan, backward="skipped", admissible=False, note="below the linear bound")
    tr = backward_solution(rp, c, 0.0, opts)
    if tr.status is not Status.REACHED_END or tr.end_slope is None:
        return Probe(c, math.nan, backward=tr.status.value, admissible=False)
    roots = tr.end_roots
    fast = roots[1] if roots is not None else 0.5 * abs(tr.end_slope)
    ok = tr.end_slope <= fast * (1.0 + FAST_ROOT_SLACK) + 1e-12
    return Probe(c, tr.end_slope, backward=tr.status.value, admissible=ok,
                 note=f"fast root {fast:.6g}")


def admissible_A(rp: ReducedProblem, c: float, opts: SolverOptions = SolverOptions()) -> bool:
    """True iff a monotone connection exists at speed ``c`` (class A)."""
    return bool(probe_A(rp, c, opts).admissible)


def critical_speed_A(rp: ReducedProblem, opts: SolverOptions = SolverOptions(),
                     bracket: tuple[float, float] | None = None) -> SpeedResult:
    """Bisection for the least admissible speed between the analytic bounds."""
    spec = rp.spec
    if spec.kind != "A":
        raise ValueError("critical_speed_A needs a class A reaction")
    lo, hi = bracket if bracket is not None else (lower_bound_A(spec), upper_bound_A(spec))
    lo0 = lo
    probes: list[Probe] = []

    def test(c):
        p = probe_A(rp, c, opts)
        probes.append(p)
        return p.admissible

    widened = 0
    while not test(hi):
        if widened >= MAX_WIDEN:
            return SpeedResult("NotFound", None, (lo0, hi), reason="upper-bound-not-admissible",
                               evidence=[f"no admissible speed up to c={hi:.6g}"], diagnostics=probes)
        lo, hi = hi, hi + 1.0
        widened += 1
    iterations = 0
    if hi - lo <= opts.tol_c or test(lo):
        c_star, residual = lo if hi - lo > opts.tol_c else hi, 0.0
    else:
        while hi - lo > opts.tol_c:
            mid = 0.5 * (lo + hi)
            iterations += 1
            if test(mid):
                hi = mid
            else:
                lo = mid
        c_star, residual = 0.5 * (lo + hi), 0.5 * (hi - lo)
    # audit: speeds above c* must stay admissible
    for extra in (c_star + 0.25, c_star + 1.0):
        if not test(extra):
            return SpeedResult("NotFound", None, (lo0, hi), reason="non-monotone",
                               evidence=[f"c={extra:.6g} above the located c* is not admissible"],
                               diagnostics=probes)
    result = SpeedResult("HalfLine", c_star, (lo0, max(hi, c_star)), residual, iterations, diagnostics=probes)
    if widened:
        result.evidence.append(f"upper bound widened {widened} time(s)")
    return result


# ---------------------------------------------------------------- classes B, C, Zero

def mismatch_BC(rp: ReducedProblem, c: float, opts: SolverOptions = SolverOptions()) -> Probe:
    """``y+(w0) - y-(w0)`` with the blow-up and trivial-solution conventions.

    Forward trivial (or back to zero before w0) counts as ``y+ = 0``;
    forward blow-up as ``+inf``; backward blow-up as ``y- = +inf``.  When
    both blow up the value is undefined (nan) and the probe is flagged.
    """
    w0 = rp.w0
    fw = forward_solution(rp, c, w0, opts)
    bw = backward_solution(rp, c, w0, opts)
    if fw.status in (Status.TRIVIAL, Status.HIT_ZERO):
        y_plus = 0.0
    elif fw.status is Status.HIT_ONE:
        y_plus = math.inf
    else:
        y_plus = fw.final_y
    if bw.status is Status.HIT_ONE:
        y_minus = math.inf
    elif bw.status is Status.HIT_ZERO:
        y_minus = 0.0
    else:
        y_minus = bw.final_y
    if math.isinf(y_plus) and math.isinf(y_minus):
        value = math.nan
    elif bw.status is Status.HIT_ZERO and y_plus == 0.0:
        value = math.nan
    else:
        value = y_plus - y_minus
    return Probe(c, value, forward=fw.status.value, backward=bw.status.value,
                 y_plus=y_plus, y_minus=y_minus, note=fw.note)


def _sign(p: Probe) -> int:
    if not p.defined:
        return 0
    return (p.value > 0) - (p.value < 0)


def _jump(a: Probe, b: Probe) -> bool:
    if not (math.isfinite(a.value) and math.isfinite(b.value)):
        return True
    if (a.y_plus == 0.0) != (b.y_plus == 0.0):
        return True
    return abs(b.value - a.value) > JUMP_TOL


def _nonexistence_evidence(rp: ReducedProblem, probes: list[Probe], c: float, opts: SolverOptions) -> list[str]:
    ev = [f"both solutions blow up at c={p.c:.6g}" for p in probes if p.both_blow_up][:3]
    full = backward_solution(rp, c, 0.0, opts)
    if full.status is Status.HIT_ZERO:
        ev.append(f"backward solution at c={c:.6g} vanishes (HitZero) at w={full.final_w:.6g}")
    elif full.status is Status.HIT_ONE:
        ev.append(f"backward solution at c={c:.6g} blows up (HitOne) at w={full.final_w:.6g}")
    notes = {p.note for p in probes if p.note}
    ev.extend(sorted(notes)[:2])
    return ev


def unique_speed_BC(rp: ReducedProblem, opts: SolverOptions = SolverOptions(),
                    bracket: tuple[float, float] | None = None) -> SpeedResult:
    """Bisection on the mismatch over the analytic interval (widened by 0.5 once if needed)."""
    spec = rp.spec
    if spec.kind not in ("B", "C", "Zero"):
        raise ValueError("unique_speed_BC needs a class B, C or zero reaction")
    lo, hi = bracket if bracket is not None else fisher_interval(spec)
    if hi - lo < 2 * opts.tol_c:
        lo, hi = lo - 0.5, hi + 0.5
    probes: list[Probe] = []

    def probe(c):
        p = mismatch_BC(rp, c, opts)
        probes.append(p)
        return p

    def not_found(reason, c_ref, bracket_used):
        return SpeedResult("NotFound", None, bracket_used, reason=reason,
                           evidence=_nonexistence_evidence(rp, probes, c_ref, opts), diagnostics=probes)

    p_lo, p_hi = probe(lo), probe(hi)
    if (not p_lo.defined or not p_hi.defined) and not (p_lo.both_blow_up or p_hi.both_blow_up):
        lo, hi = lo - 0.5, hi + 0.5
        p_lo, p_hi = probe(lo), probe(hi)
    for p in (p_lo, p_hi):
        if p.both_blow_up:
            return not_found("no-sign-change", p.c, (lo, hi))
    if _sign(p_lo) > 0 or _sign(p_hi) < 0 or not (p_lo.defined and p_hi.defined):
        return not_found("no-sign-change", lo if _sign(p_lo) > 0 else hi, (lo, hi))
    bracket_used = (lo, hi)
    if p_lo.value == 0.0:
        return SpeedResult("Unique", lo, bracket_used, 0.0, 0, diagnostics=probes)
    if p_hi.value == 0.0:
        return SpeedResult("Unique", hi, bracket_used, 0.0, 0, diagnostics=probes)
    iterations = 0
    while hi - lo > opts.tol_c:
        mid = 0.5 * (lo + hi)
        iterations += 1
        p = probe(mid)
        if p.both_blow_up:
            return not_found("no-sign-change", mid, bracket_used)
        if not p.defined:
            # y+ = 0 and y- = 0: larger speeds can only raise y+
            p_lo, lo = p, mid
            continue
        if abs(p.value) <= opts.tol_match * 1e-3:
            p_lo = p_hi = p
            lo = hi = mid
            break
        if p.value < 0:
            p_lo, lo = p, mid
        else:
            p_hi, hi = p, mid
    ordered = sorted((p for p in probes if p.defined), key=lambda p: p.c)
    signs = [_sign(p) for p in ordered]
    if any(b < a for a, b in zip(signs, signs[1:])):
        return not_found("non-monotone", 0.5 * (lo + hi), bracket_used)
    if _jump(p_lo, p_hi):
        c_ref = p_lo.c if not math.isfinite(p_lo.value) or p_lo.y_plus == 0.0 else p_hi.c
        result = not_found("discontinuous-crossing", c_ref, bracket_used)
        result.evidence.insert(0, f"mismatch jumps from {p_lo.value:.6g} at c={p_lo.c:.6g} "
                                  f"to {p_hi.value:.6g} at c={p_hi.c:.6g}")
        return result
    return SpeedResult("Unique", 0.5 * (lo + hi), bracket_used, 0.5 * (hi - lo), iterations, diagnostics=probes)


def find_speed(spec_or_rp: ProblemSpec | ReducedProblem, opts: SolverOptions = SolverOptions(),
               bracket: tuple[float, float] | None = None) -> SpeedResult:
    """Dispatch on the reaction class."""
    rp = spec_or_rp if isinstance(spec_or_rp, ReducedProblem) else reduce(spec_or_rp)
    if rp.spec.kind == "A":
        return critical_speed_A(rp, opts, bracket)
    return unique_speed_BC(rp, opts, bracket)


def trajectories_at(rp: ReducedProblem, c: float, opts: SolverOptions = SolverOptions()) -> tuple[Trajectory, Trajectory]:
    """Forward and backward solutions over the whole interval, for reporting."""
    kind = rp.spec.kind
    fw_stop = None if kind == "A" else rp.w0
    return forward_solution(rp, c, fw_stop, opts), backward_solution(rp, c, 0.0, opts)
