"""Analytic speed bounds and the necessary/sufficient conditions for a positive speed.

Every check returns :class:`Entry` objects with the two sides of an
inequality ``lhs < rhs`` so the numbers can be audited, and a short
``formula`` string describing the inequality.  :func:`build_report`
collects whatever applies to a problem into a :class:`ConditionReport`.

The sufficient conditions for reaction classes B and C are stated for
``d = 1`` and ``eps = 1``; for other diffusions the entries carry a caveat
instead of a guessed modification.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.optimize import brentq, minimize_scalar

from .expr import DomainError, derivative_at, evaluate
from .model import ProblemSpec

__all__ = [
    "Entry", "ConditionReport", "ParameterRangeError", "lower_bound_A", "upper_bound_A",
    "check_plateau_convection", "check_reaction_balance", "check_type_b_sufficient",
    "check_type_c_sufficient", "speed_interval_estimate", "fisher_interval",
    "check_proper_wave", "reaction_integrals", "solve_xi0", "sweep_eta", "build_report",
    "grid_sup", "grid_inf",
]

GRID_POINTS = 4001
QUAD_TOL = 1e-10
CAVEAT_D = "stated for d = 1; diffusion here is density dependent"
CAVEAT_EPS = "stated for eps = 1"


class ParameterRangeError(ValueError):
    """eta, kappa or zeta outside the range where a condition is defined."""


@dataclass
class Entry:
    id: str
    satisfied: bool | None
    lhs: float
    rhs: float
    formula: str
    note: str = ""

    def status(self) -> str:
        return "n/a" if self.satisfied is None else ("pass" if self.satisfied else "FAIL")


@dataclass
class ConditionReport:
    entries: list[Entry] = field(default_factory=list)
    quantities: dict = field(default_factory=dict)

    def get(self, entry_id: str) -> Entry:
        for e in self.entries:
            if e.id == entry_id:
                return e
        raise KeyError(entry_id)

    def all_satisfied(self, prefix: str = "") -> bool:
        chosen = [e for e in self.entries if e.id.startswith(prefix) and e.satisfied is not None]
        return bool(chosen) and all(e.satisfied for e in chosen)

    def to_dict(self, digits: int = 6) -> dict:
        return {
            "entries": [_rounded(asdict(e), digits) for e in self.entries],
            "quantities": _rounded(self.quantities, digits),
        }

    def to_json(self, digits: int = 6) -> str:
        return json.dumps(self.to_dict(digits), indent=2, sort_keys=True)

    def table(self) -> str:
        lines = [f"{'condition':34s} {'status':6s} {'lhs':>12s} {'rhs':>12s}  formula"]
        for e in self.entries:
            lines.append(f"{e.id:34s} {e.status():6s} {e.lhs:12.6g} {e.rhs:12.6g}  {e.formula}"
                         + (f"  [{e.note}]" if e.note else ""))
        for k in sorted(self.quantities):
            v = self.quantities[k]
            if isinstance(v, (list, tuple)):
                v = "[" + ", ".join(f"{x:.6g}" for x in v) + "]"
            elif isinstance(v, float):
                v = f"{v:.6g}"
            lines.append(f"  {k} = {v}")
        return "\n".join(lines)


def _rounded(obj, digits):
    if isinstance(obj, float):
        if math.isfinite(obj):
            return float(f"{obj:.{digits}g}")
        return str(obj)
    if isinstance(obj, dict):
        return {k: _rounded(v, digits) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_rounded(v, digits) for v in obj]
    return obj


# ---------------------------------------------------------------- grid extrema

def _refine(fn, grid, vals, i, sign):
    lo = grid[max(i - 1, 0)]
    hi = grid[min(i + 1, len(grid) - 1)]
    if hi <= lo:
        return vals[i]
    res = minimize_scalar(lambda x: sign * fn(x), bounds=(lo, hi), method="bounded",
                          options={"xatol": 1e-12})
    best = sign * res.fun if res.success else -np.inf
    return max(vals[i], best) if sign < 0 else min(vals[i], best)


def grid_sup(fn, lo: float = 0.0, hi: float = 1.0, n: int = GRID_POINTS) -> float:
    """sup of a scalar function: grid scan plus bounded refinement at the best cell."""
    grid = np.linspace(lo, hi, n)
    vals = np.array([fn(x) for x in grid])
    i = int(np.argmax(vals))
    return float(_refine(fn, grid, vals, i, -1.0))


def grid_inf(fn, lo: float = 0.0, hi: float = 1.0, n: int = GRID_POINTS) -> float:
    grid = np.linspace(lo, hi, n)
    vals = np.array([fn(x) for x in grid])
    i = int(np.argmin(vals))
    return float(_refine(fn, grid, vals, i, 1.0))


def _d_is_constant(spec: ProblemSpec) -> bool:
    vals = evaluate(spec.d, np.linspace(0.0, 1.0, 101))
    return bool(np.ptp(vals) <= 1e-12)


def _caveat(spec: ProblemSpec) -> str:
    notes = []
    if not _d_is_constant(spec) or abs(float(evaluate(spec.d, 0.0)) - 1.0) > 1e-12:
        notes.append(CAVEAT_D)
    if spec.epsilon != 1.0:
        notes.append(CAVEAT_EPS)
    return "; ".join(notes)


def _h(spec, u):
    return float(evaluate(spec.h, u))


def _dh(spec, u):
    return float(evaluate(spec.dh, u))


def _min_dh(spec):
    return grid_inf(lambda x: _dh(spec, x))


def _max_dh(spec):
    return grid_sup(lambda x: _dh(spec, x))


def _require(spec: ProblemSpec, *kinds):
    if spec.kind not in kinds:
        raise ValueError(f"reaction class {spec.kind} not in {kinds}")


# ---------------------------------------------------------------- class A

def lower_bound_A(spec: ProblemSpec) -> float:
    """Necessary lower bound ``2 eps sqrt(d(0) f'(0)) - h'(0)``."""
    _require(spec, "A")
    fp0 = spec.fprime(0.0)
    d0 = float(evaluate(spec.d, 0.0))
    return 2.0 * spec.epsilon * math.sqrt(max(d0 * fp0, 0.0)) - _dh(spec, 0.0)


def _growth_ratio(spec: ProblemSpec):
    fp0 = spec.fprime(0.0)

    def g(u):
        if u <= 0.0:
            return float(evaluate(spec.d, 0.0)) * fp0
        return float(evaluate(spec.d, u)) * float(evaluate(spec.f, u)) / u
    return g


def upper_bound_A(spec: ProblemSpec) -> float:
    """Upper bound ``2 eps sqrt(sup d(u) f(u)/u) - min h'``."""
    _require(spec, "A")
    sup = grid_sup(_growth_ratio(spec))
    return 2.0 * spec.epsilon * math.sqrt(max(sup, 0.0)) - _min_dh(spec)


# ---------------------------------------------------------------- classes B and C

def reaction_integrals(spec: ProblemSpec) -> tuple[float, float]:
    """(F_plus, F_minus): integrals over [0, 1] of the positive and negative parts of f."""
    points = [spec.u0] if spec.kind in ("B", "C") else None
    fplus = quad(lambda x: max(float(evaluate(spec.f, x)), 0.0), 0.0, 1.0,
                 points=points, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    fminus = quad(lambda x: max(-float(evaluate(spec.f, x)), 0.0), 0.0, 1.0,
                  points=points, epsabs=QUAD_TOL, epsrel=QUAD_TOL, limit=200)[0]
    return fplus, fminus


def solve_xi0(spec: ProblemSpec, target: float) -> float:
    """xi0 in (u0, 1) with ``integral_{xi0}^1 f = target``."""
    def tail(x):
        return quad(lambda s: float(evaluate(spec.f, s)), x, 1.0, epsabs=QUAD_TOL, epsrel=QUAD_TOL)[0] - target
    lo, hi = spec.u0, 1.0
    if tail(lo) < 0 or target <= 0:
        raise ParameterRangeError(f"no xi0 with tail integral {target:.6g}")
    return brentq(tail, lo, hi, xtol=1e-12)


def check_plateau_convection(spec: ProblemSpec) -> Entry:
    """Necessary condition ``h(u0) - h(0) < 1``: the forward solution crosses the plateau."""
    _require(spec, "B", "C")
    return Entry("plateau_convection", _h(spec, spec.u0) < spec.epsilon ** 2 + _h(spec, 0.0),
                 _h(spec, spec.u0) - _h(spec, 0.0), spec.epsilon ** 2, "h(u0) - h(0) < 1",
                 CAVEAT_EPS if spec.epsilon != 1.0 else "")


def check_reaction_balance(spec: ProblemSpec) -> list[Entry]:
    """Necessary conditions for a positive speed in class C: net positive mass, deficit below 1."""
    if spec.kind != "C":
        return [Entry("reaction_balance_mass", None, math.nan, 0.0, "int f > 0"),
                Entry("reaction_balance_deficit", None, 0.0, 1.0, "F_minus < 1")]
    fplus, fminus = reaction_integrals(spec)
    total = fplus - fminus
    return [Entry("reaction_balance_mass", total > 0, total, 0.0, "int_0^1 f > 0"),
            Entry("reaction_balance_deficit", fminus < 1.0, fminus, 1.0, "F_minus < 1")]


def check_type_b_sufficient(spec: ProblemSpec, eta: float, kappa: float | None = None) -> list[Entry]:
    """Sufficient conditions for a positive speed, class B.

    ``F+ < 1``: two inequalities in ``eta``; ``F+ >= 1``: three inequalities
    in ``eta``, ``kappa`` and the point ``xi0`` with tail integral ``1 - kappa``.
    """
    _require(spec, "B")
    fplus, _ = reaction_integrals(spec)
    if not 0.0 < eta < min(fplus, 1.0):
        raise ParameterRangeError(f"eta must lie in (0, {min(fplus, 1.0):.6g}), got {eta}")
    note = _caveat(spec)
    u0 = spec.u0
    left = _h(spec, u0) - _h(spec, 0.0)
    if fplus < 1.0:
        right = _h(spec, 1.0) - _h(spec, u0)
        return [
            Entry("type_b_case1_left", left < math.sqrt(1.0 - (1.0 + eta - fplus) ** 2), left,
                  math.sqrt(1.0 - (1.0 + eta - fplus) ** 2), "h(u0)-h(0) < sqrt(1-(1+eta-F+)^2)", note),
            Entry("type_b_case1_right", right < (1.0 - fplus) / math.sqrt(fplus * (2.0 - fplus)) * eta, right,
                  (1.0 - fplus) / math.sqrt(fplus * (2.0 - fplus)) * eta,
                  "h(1)-h(u0) < (1-F+) eta / sqrt(F+(2-F+))", note),
        ]
    if kappa is None or not 0.0 < kappa < eta:
        raise ParameterRangeError(f"F+ >= 1 needs kappa in (0, eta), got {kappa}")
    xi0 = solve_xi0(spec, 1.0 - kappa)
    middle = _h(spec, xi0) - _h(spec, u0)
    right = _h(spec, 1.0) - _h(spec, xi0)
    r1 = math.sqrt(1.0 - eta ** 2)
    r2 = math.sqrt(1.0 - ((kappa + eta) / 2.0) ** 2) - r1
    r3 = (eta - kappa) / 2.0 * kappa / math.sqrt(1.0 - kappa ** 2)
    return [
        Entry("type_b_case2_left", left < r1, left, r1, "h(u0)-h(0) < sqrt(1-eta^2)", note),
        Entry("type_b_case2_middle", middle < r2, middle, r2,
              "h(xi0)-h(u0) < sqrt(1-((kappa+eta)/2)^2) - sqrt(1-eta^2)", note),
        Entry("type_b_case2_right", right < r3, right, r3,
              "h(1)-h(xi0) < (eta-kappa)/2 * kappa/sqrt(1-kappa^2)", note),
    ]


def check_type_c_sufficient(spec: ProblemSpec, eta: float, zeta: float | None = None) -> list[Entry]:
    """Sufficient conditions for a positive speed, class C (needs the reaction balance)."""
    _require(spec, "C")
    fplus, fminus = reaction_integrals(spec)
    upper = min(fplus, 1.0) - fminus
    if not 0.0 < eta < upper:
        raise ParameterRangeError(f"eta must lie in (0, {upper:.6g}), got {eta}")
    note = _caveat(spec)
    u0 = spec.u0
    left = _h(spec, u0) - _h(spec, 0.0)
    g = fminus + eta
    r_left = (1.0 - g) / math.sqrt(g * (2.0 - g)) * eta
    entries = [Entry("type_c_left", left < r_left, left, r_left,
                     "h(u0)-h(0) < (1-F- -eta) eta / sqrt((F-+eta)(2-F- -eta))", note)]
    if fplus < 1.0:
        right = _h(spec, 1.0) - _h(spec, u0)
        r = (1.0 - fplus) / math.sqrt(fplus * (2.0 - fplus)) * (fplus - fminus - eta)
        entries.append(Entry("type_c_case1_right", right < r, right, r,
                             "h(1)-h(u0) < (1-F+)(F+ -F- -eta) / sqrt(F+(2-F+))", note))
        return entries
    if zeta is None or not 0.0 < zeta < 1.0 - g:
        raise ParameterRangeError(f"F+ >= 1 needs zeta in (0, {1.0 - g:.6g}), got {zeta}")
    xi0 = solve_xi0(spec, 1.0 - zeta)
    middle = _h(spec, xi0) - _h(spec, u0)
    right = _h(spec, 1.0) - _h(spec, xi0)
    r2 = math.sqrt(1.0 - ((1.0 + zeta - g) / 2.0) ** 2) - math.sqrt(1.0 - (1.0 - g) ** 2)
    r3 = (1.0 - zeta - g) / 2.0 * zeta / math.sqrt(1.0 - zeta ** 2)
    entries += [
        Entry("type_c_case2_middle", middle < r2, middle, r2,
              "h(xi0)-h(u0) < sqrt(1-((1+zeta-F- -eta)/2)^2) - sqrt(1-(1-F- -eta)^2)", note),
        Entry("type_c_case2_right", right < r3, right, r3,
              "h(1)-h(xi0) < (1-zeta-F- -eta)/2 * zeta/sqrt(1-zeta^2)", note),
    ]
    return entries


def sweep_eta(spec: ProblemSpec, n: int = 20, kappa_frac: float = 0.5) -> list[tuple[float, float | None, bool]]:
    """Heuristic convenience: try ``n`` evenly spaced eta values (and a matching kappa/zeta).

    Returns ``(eta, second_parameter, all_pass)`` rows.  The conditions are
    only sufficient, so a sweep with no passing row proves nothing.
    """
    fplus, fminus = reaction_integrals(spec)
    upper = min(fplus, 1.0) - (fminus if spec.kind == "C" else 0.0)
    rows = []
    for i in range(1, n + 1):
        eta = upper * i / (n + 1)
        if spec.kind == "B":
            second = kappa_frac * eta if fplus >= 1.0 else None
            entries = check_type_b_sufficient(spec, eta, second)
        else:
            second = kappa_frac * (1.0 - fminus - eta) if fplus >= 1.0 else None
            entries = check_type_c_sufficient(spec, eta, second)
        rows.append((eta, second, all(e.satisfied for e in entries)))
    return rows


def fisher_interval(spec: ProblemSpec) -> tuple[float, float]:
    """``[-2 eps sqrt(d0 f'(u0)) - max h', 2 eps sqrt(d1 f'(u0)) - min h']`` with d0 = min d, d1 = max d."""
    _require(spec, "B", "C", "Zero")
    fp = max(spec.fprime_u0(), 0.0) if spec.kind != "Zero" else 0.0
    d0 = grid_inf(lambda x: float(evaluate(spec.d, x)))
    d1 = grid_sup(lambda x: float(evaluate(spec.d, x)))
    lo = -2.0 * spec.epsilon * math.sqrt(d0 * fp) - _max_dh(spec)
    hi = 2.0 * spec.epsilon * math.sqrt(d1 * fp) - _min_dh(spec)
    return lo, hi


def speed_interval_estimate(spec: ProblemSpec, opts=None) -> tuple[float, float]:
    """``[c_f - max h', c_f - min h']`` where ``c_f`` is the speed of the same problem without convection."""
    _require(spec, "B", "C")
    from .model import reduce
    from .speed import unique_speed_BC

    companion = spec.with_h("0")
    result = unique_speed_BC(reduce(companion), opts) if opts is not None else unique_speed_BC(reduce(companion))
    if result.c_star is None:
        raise RuntimeError(f"companion problem without convection: {result.reason}")
    c_f = result.c_star
    return c_f - _max_dh(spec), c_f - _min_dh(spec)


# ---------------------------------------------------------------- general

def check_proper_wave(spec: ProblemSpec) -> Entry:
    """Sublinear growth ``f(u) <= k u`` and ``f(u) <= l (1-u)`` with finite k, l (else a sharp wave may occur)."""
    def limit_slope(at):
        try:
            value, _ = derivative_at(spec.f, at)
        except DomainError:
            return math.inf
        return value if math.isfinite(value) else math.inf

    fp0 = limit_slope(0.0)
    fp1 = limit_slope(1.0)

    def ratio_k(u):
        return fp0 if u <= 0.0 else float(evaluate(spec.f, u)) / u

    def ratio_l(u):
        return -fp1 if u >= 1.0 else float(evaluate(spec.f, u)) / (1.0 - u)

    k = math.inf if math.isinf(fp0) else max(grid_sup(ratio_k), 0.0)
    l = math.inf if math.isinf(fp1) else max(grid_sup(ratio_l), 0.0)
    finite = math.isfinite(k) and math.isfinite(l)
    return Entry("sublinear_growth", finite, k, l, "f(u) <= k u and f(u) <= l (1-u), k and l finite",
                 "" if finite else "sharp traveling wave possible")


def build_report(spec: ProblemSpec, eta: float | None = None, kappa: float | None = None,
                 zeta: float | None = None, speed_estimate: bool = False, opts=None) -> ConditionReport:
    """All conditions applicable to ``spec``; B/C sufficiency entries need ``eta``."""
    report = ConditionReport()
    q = report.quantities
    q["reaction_class"] = spec.kind
    q["epsilon"] = spec.epsilon
    report.entries.append(check_proper_wave(spec))
    q["k"], q["l"] = report.entries[-1].lhs, report.entries[-1].rhs
    if spec.kind == "A":
        lo, hi = lower_bound_A(spec), upper_bound_A(spec)
        q["lower_bound"], q["upper_bound"] = lo, hi
        report.entries.append(Entry("speed_bounds_ordered", lo <= hi + 1e-12, lo, hi,
                                    "2 eps sqrt(d(0)f'(0)) - h'(0) <= 2 eps sqrt(sup d f/u) - min h'"))
        report.entries.append(Entry("plateau_convection", None, math.nan, math.nan, "h(u0) - h(0) < 1"))
        report.entries.extend(check_reaction_balance(spec))
        report.entries.append(Entry("type_b_sufficient", None, math.nan, math.nan, "class B only"))
        report.entries.append(Entry("type_c_sufficient", None, math.nan, math.nan, "class C only"))
        return report
    if spec.kind == "Zero":
        q["fisher_interval"] = list(fisher_interval(spec))
        return report
    q["u0"] = spec.u0
    q["fprime_u0"] = spec.fprime_u0()
    fplus, fminus = reaction_integrals(spec)
    q["F_plus"], q["F_minus"] = fplus, fminus
    q["fisher_interval"] = list(fisher_interval(spec))
    report.entries.append(check_plateau_convection(spec))
    report.entries.extend(check_reaction_balance(spec))
    if eta is not None:
        q["eta"] = eta
        if spec.kind == "B":
            if fplus >= 1.0:
                q["kappa"] = kappa
                q["xi0"] = solve_xi0(spec, 1.0 - kappa) if kappa else math.nan
            report.entries.extend(check_type_b_sufficient(spec, eta, kappa))
        else:
            if fplus >= 1.0:
                q["zeta"] = zeta
                q["xi0"] = solve_xi0(spec, 1.0 - zeta) if zeta else math.nan
            report.entries.extend(check_type_c_sufficient(spec, eta, zeta))
    if speed_estimate:
        q["speed_interval_estimate"] = list(speed_interval_estimate(spec, opts))
    return report
