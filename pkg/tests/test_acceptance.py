"""Acceptance criteria, one test per criterion.

Each test records one line per checked item through ``conftest.record``;
the terminal summary prints a pass/fail line per criterion.
"""
import json
import math
import time

import numpy as np
import pytest

from frontspeed.bounds import check_type_b_sufficient, check_type_c_sufficient, lower_bound_A, upper_bound_A
from frontspeed.burgers import burgers_profile, burgers_speed
from frontspeed.expr import DomainError, derivative_at, evaluate, kink_points, parse
from frontspeed.integrate import SolverOptions, Status, backward_solution, forward_solution
from frontspeed.model import Q, R, make_spec, reduce
from frontspeed.profile import reconstruct_wave, slope_field
from frontspeed.speed import find_speed

from conftest import CONFIG_DIR, record
from helpers import config, spec_of


def _close(label, crit, value, expected, tol):
    ok = value is not None and abs(value - expected) <= tol
    shown = "none" if value is None else f"{value:.6g}"
    record(crit, label, ok, f"got {shown}, expected {expected:g} +/- {tol:g}")
    return ok


def test_criterion_01_fisher_baseline():
    t = time.perf_counter()
    result = find_speed(make_spec("u*(1-u)", h="0", D="u"))
    elapsed = time.perf_counter() - t
    ok = result.kind == "HalfLine"
    record(1, "result kind is HalfLine", ok, result.kind)
    ok &= _close("c* = 2", 1, result.c_star, 2.0, 1e-3)
    record(1, "runtime < 5 s", elapsed < 5.0, f"{elapsed:.2f} s")
    assert ok and elapsed < 5.0


def test_criterion_02_fisher_burgers():
    result = find_speed(make_spec("u*(1-u)", h="u^2/2", D="u"))
    ok = result.kind == "HalfLine" and _close("c* = 2 with h = u^2/2", 2, result.c_star, 2.0, 1e-3)
    assert ok


REFERENCE_SPEEDS = [
    ("plateau_quadratic", 0.2663),
    ("plateau_sine", 1.4952),
    ("plateau_exp_half", -0.9157),
    ("plateau_exp_strong", -1.8708),
    ("plateau_log_third", -0.8399),
    ("plateau_log_half", -1.3866),
    ("bistable_quadratic", 0.151),
    ("bistable_sine", 0.1105),
    ("bistable_strong_quadratic", -0.2462),
    ("bistable_log_half", -1.3629),
]


def test_criterion_03_reference_speeds():
    t = time.perf_counter()
    results = []
    for name, expected in REFERENCE_SPEEDS:
        assert config(name).reference["speed"] == expected
        spec = spec_of(name)
        c = find_speed(spec).c_star
        c_euler = find_speed(spec, SolverOptions.euler()).c_star
        ok = c is not None and abs(c - expected) <= 5e-3
        record(3, f"{name} -> {expected}", ok,
               f"rk4 {c:.6g}, diff {c - expected:+.2e}; euler 5e-4 mode {c_euler:.6g}" if c is not None else "not found")
        results.append(ok)
    elapsed = time.perf_counter() - t
    record(3, "total runtime < 2 min (both modes)", elapsed < 120, f"{elapsed:.1f} s")
    assert all(results) and elapsed < 120


def test_criterion_04_nonexistence():
    r0 = find_speed(spec_of("plateau_strong_quadratic"))
    ok0 = r0.kind == "NotFound" and any("HitZero" in e for e in r0.evidence)
    record(4, "strong quadratic convection: NotFound with backward HitZero", ok0,
           f"{r0.kind}, {r0.reason}: {'; '.join(r0.evidence[:2])}")
    r8 = find_speed(spec_of("plateau_blowup"))
    ok8 = r8.kind == "NotFound" and any("both solutions blow up" in e for e in r8.evidence)
    record(4, "blow-up case: NotFound with both-blow-up evidence", ok8,
           f"{r8.kind}, {r8.reason}: {'; '.join(r8.evidence[:1])}")
    assert ok0 and ok8


def test_criterion_05_burgers_closed_form():
    r1 = burgers_speed(make_spec("0", h="u^2/2"), 1.0, 0.0)
    ok1 = r1.speed == -0.5 and r1.direction == "decreasing"
    record(5, "h = u^2/2, pair (1, 0) -> -0.5 exactly", ok1, f"{r1.speed!r} {r1.direction}")
    spec = make_spec("0", h="-u^2")
    r2 = burgers_speed(spec, 0.0, 1.0)
    ok2 = r2.speed == 1.0 and r2.direction == "increasing"
    record(5, "h = -u^2, pair (0, 1) -> +1 exactly", ok2, f"{r2.speed!r} {r2.direction}")
    tr = backward_solution(reduce(spec), 1.0, 0.0)
    y = burgers_profile(spec, 1.0)
    err = float(np.max(np.abs(tr.y - y(tr.w))))
    ok3 = tr.status is Status.REACHED_END and err <= 1e-6
    record(5, "numeric backward solution vs closed form, sup <= 1e-6", ok3, f"{err:.2e}")
    assert ok1 and ok2 and ok3


def _random_class_a(rng):
    a = rng.uniform(0.2, 2.0, size=3)
    f = f"u*(1-u)*({a[0]:.4f}+{a[1]:.4f}*u+{a[2]:.4f}*u^2)"
    b1, b2 = rng.uniform(-1.0, 1.0), rng.uniform(0.0, 1.0)
    h = f"({b1:.4f})*u+{b2:.4f}*u^2"
    d0, d1 = rng.uniform(0.5, 2.0, size=2)
    D = f"{d0:.4f}*u+({d1 - d0:.4f})*u^2/2"
    return make_spec(f, h=h, D=D)


def test_criterion_06_bound_sandwich():
    rng = np.random.default_rng(20240601)
    failures = 0
    for i in range(25):
        spec = _random_class_a(rng)
        lo, hi = lower_bound_A(spec), upper_bound_A(spec)
        result = find_speed(spec)
        c = result.c_star
        ok = c is not None and lo - 1e-3 <= c <= hi + 1e-3
        failures += not ok
        if not ok:
            record(6, f"spec {i}: f={spec.f} h={spec.h} D={spec.D}", False,
                   f"c*={c}, bounds [{lo:.6g}, {hi:.6g}]")
    record(6, "25 random class A specs: lower <= c* <= upper (slack 1e-3)", failures == 0,
           f"{25 - failures}/25 inside")
    assert failures == 0


def _random_bc(rng, kind):
    a = rng.uniform(1.0, 5.0)
    b = rng.uniform(0.0, 0.2)
    d0, d1 = rng.uniform(0.5, 2.0, size=2)
    D = f"{d0:.4f}*u+({d1 - d0:.4f})*u^2/2"
    if kind == "B":
        u0 = rng.uniform(0.3, 0.6)
        f = f"{a:.4f}*u*(1-u)*(max({u0:.4f},u)-{u0:.4f})"
    else:
        u0 = rng.uniform(0.2, 0.45)
        f = f"{a:.4f}*u*(1-u)*(u-{u0:.4f})"
    return make_spec(f, h=f"{b:.4f}*u^2", D=D)


def _ordered(tr1, tr2, sign):
    """sign * (y2 - y1) >= -1e-8 on the shared samples of two trajectories."""
    n = min(len(tr1.w), len(tr2.w))
    if n == 0:
        return True, 0.0
    assert np.allclose(tr1.w[:n], tr2.w[:n], rtol=0, atol=1e-14)
    gap = sign * (tr2.y[:n] - tr1.y[:n])
    return bool(np.all(gap >= -1e-8)), float(gap.min())


def test_criterion_07_monotonicity():
    rng = np.random.default_rng(4101)
    failures = 0
    for i in range(10):
        spec = _random_bc(rng, "B" if i % 2 == 0 else "C")
        rp = reduce(spec)
        c1, c2 = np.sort(rng.uniform(0.01, 1.0, size=2))
        f1, f2 = forward_solution(rp, c1), forward_solution(rp, c2)
        b1, b2 = backward_solution(rp, c1, rp.w0), backward_solution(rp, c2, rp.w0)
        ok_f, gap_f = _ordered(f1, f2, +1.0) if f1.status is not Status.TRIVIAL else (True, 0.0)
        ok_b, gap_b = _ordered(b1, b2, -1.0)
        ok = ok_f and ok_b
        failures += not ok
        record(7, f"spec {i} ({spec.kind}), c1={c1:.3f} < c2={c2:.3f}", ok,
               f"min forward gap {gap_f:.2e}, min backward gap {gap_b:.2e}")
    assert failures == 0


def test_criterion_08_inverse_pair():
    ok = True
    for s in (0.0, 1e-3, 1.0, 10.0, 1e3):
        back = R(Q(s))
        good = back == s if s == 0 else abs(back - s) <= 1e-10 * s
        record(8, f"R(Q({s:g})) = {s:g}", good, f"{back!r}")
        ok &= good
    assert ok


def test_criterion_09_epsilon_scaling():
    ok = True
    base = make_spec("u*(1-u)")
    for eps in (0.25, 0.5, 0.75, 1.0):
        c = find_speed(base.with_epsilon(eps)).c_star
        ok &= _close(f"Fisher eps={eps}: c*/eps = 2", 9, None if c is None else c / eps, 2.0, 1e-3)
    spec = config("fisher_viscous").spec()
    slopes = []
    for eps in (1.0, 0.75, 0.5, 0.25):
        s = spec.with_epsilon(eps)
        c = find_speed(s).c_star
        slopes.append(reconstruct_wave(reduce(s), c, dt=1e-3).max_slope)
    steep = all(b > a for a, b in zip(slopes, slopes[1:]))
    record(9, "viscous family: max|v'| strictly increasing as eps decreases", steep,
           ", ".join(f"{x:.4f}" for x in slopes))
    assert ok and steep


def test_criterion_10_profile_residual():
    rp = reduce(make_spec("u*(1-u)"))
    c = find_speed(rp).c_star
    g = slope_field(rp, c)
    steps = (4e-3, 2e-3, 1e-3)
    res = [reconstruct_wave(rp, c, dt=dt, field_fn=g).residual_sup for dt in steps]
    ok1 = res[-1] <= 1e-3
    record(10, "residual sup <= 1e-3 at step 1e-3", ok1, f"{res[-1]:.2e}")
    orders = [math.log2(a / b) for a, b in zip(res, res[1:])]
    ok2 = all(o >= 1.8 for o in orders)
    record(10, "observed order >= 1.8 under halving", ok2, ", ".join(f"{o:.2f}" for o in orders))
    assert ok1 and ok2


SUFFICIENCY = [
    ("plateau_quadratic", "B"),
    ("plateau_sine", "B"),
    ("bistable_quadratic", "C"),
    ("bistable_sine", "C"),
]


def test_criterion_11_sufficiency_link():
    ok_all = True
    for name, kind in SUFFICIENCY:
        cfg = config(name)
        spec = cfg.spec()
        if kind == "B":
            entries = check_type_b_sufficient(spec, cfg.eta, cfg.kappa)
        else:
            entries = check_type_c_sufficient(spec, cfg.eta, cfg.zeta)
        result = find_speed(spec)
        cond = all(e.satisfied for e in entries)
        positive = result.kind == "Unique" and result.c_star > 0
        failed = [f"{e.id} lhs {e.lhs:.4g} >= rhs {e.rhs:.4g}" for e in entries if not e.satisfied]
        detail = (f"conditions {'pass' if cond else 'fail: ' + '; '.join(failed)}; "
                  f"{result.kind} c*={result.c_star if result.c_star is None else f'{result.c_star:.6g}'}")
        record(11, f"{name}: sufficient conditions hold and c* > 0", cond and positive, detail)
        ok_all &= cond and positive
    assert ok_all


def _shipped_expressions():
    seen = {}
    for path in sorted(CONFIG_DIR.glob("*.json")):
        data = json.loads(path.read_text())
        for key in ("f", "h", "D"):
            if key in data:
                seen.setdefault(data[key], path.stem)
    return seen


def test_criterion_12_derivative_oracle():
    grid = np.linspace(0.0, 1.0, 201)
    delta = 1e-6
    failures = 0
    for text, source in _shipped_expressions().items():
        e = parse(text)
        kinks = kink_points(e)
        worst = 0.0
        checked = 0
        for u in grid:
            if any(abs(u - k) < 10 * delta for k in kinks):
                continue
            try:
                fd = (float(evaluate(e, u + delta)) - float(evaluate(e, u - delta))) / (2 * delta)
                d, _ = derivative_at(e, float(u))
            except DomainError:
                continue
            # absolute tolerance 1e-6, scaled by the expression's magnitude when that exceeds 1
            scale = max(1.0, abs(float(evaluate(e, u))))
            worst = max(worst, abs(d - fd) / scale)
            checked += 1
        ok = worst <= 1e-6 and checked > 0
        failures += not ok
        record(12, f"{text!r} ({source})", ok, f"{checked} points, worst scaled error {worst:.1e}")
    assert failures == 0
