import math
import time

import pytest

from frontspeed.integrate import SolverOptions
from frontspeed.model import make_spec, reduce
from frontspeed.speed import admissible_A, critical_speed_A, find_speed, mismatch_BC, unique_speed_BC

from helpers import spec_of


@pytest.fixture(scope="module")
def fisher():
    return reduce(make_spec("u*(1-u)"))


@pytest.mark.parametrize("c,expected", [(2.0, True), (1.9, False), (3.0, True), (-1.0, False)])
def test_admissible_fisher(fisher, c, expected):
    assert admissible_A(fisher, c) is expected


@pytest.mark.parametrize("f,h,D,expected,tol", [
    ("u*(1-u)", "0", "u", 2.0, 1e-3),
    ("u*(1-u)", "u^2/2", "u", 2.0, 1e-3),
    ("u*(1-u)", "0", "4*u", 4.0, 2e-3),
    ("u*(1-u)", "u", "u", 1.0, 1e-3),          # a linear flux only shifts the speed
])
def test_critical_speed(f, h, D, expected, tol):
    result = critical_speed_A(reduce(make_spec(f, h, D)))
    assert result.kind == "HalfLine"
    assert result.c_star == pytest.approx(expected, abs=tol)


def test_critical_speed_above_linear_bound():
    # a reaction that grows faster inside than at zero pushes c* above the linear bound
    spec = make_spec("u*(1-u)*(1+8*u)")
    result = find_speed(spec)
    assert result.found
    assert result.c_star > 2.0 + 1e-2
    assert result.c_star <= 2 * math.sqrt(max((1 - u) * (1 + 8 * u) for u in [i / 1000 for i in range(1001)])) + 1e-3


def test_critical_speed_is_fast(fisher):
    t = time.perf_counter()
    critical_speed_A(fisher)
    assert time.perf_counter() - t < 5.0


def test_wrong_class_rejected(fisher):
    with pytest.raises(ValueError):
        unique_speed_BC(fisher)
    with pytest.raises(ValueError):
        critical_speed_A(reduce(spec_of("plateau_quadratic")))


def test_mismatch_negative_at_zero_for_plateau():
    p = mismatch_BC(reduce(spec_of("plateau_quadratic")), 0.0)
    assert p.defined and p.value < 0


def test_mismatch_increasing_in_c():
    rp = reduce(spec_of("bistable_quadratic"))
    values = [mismatch_BC(rp, c).value for c in (0.0, 0.1, 0.15, 0.2, 0.3)]
    assert all(b > a for a, b in zip(values, values[1:]))


def test_mismatch_strong_convection_not_negative():
    p = mismatch_BC(reduce(spec_of("plateau_strong_quadratic")), 0.0)
    assert not p.defined or p.value >= 0


def test_zero_reaction_mismatch_vanishes_at_chord_speed():
    rp = reduce(make_spec("0", h="-u^2"))
    assert abs(mismatch_BC(rp, 1.0).value) <= 1e-6


@pytest.mark.parametrize("name,expected", [
    ("plateau_quadratic", 0.2663), ("bistable_quadratic", 0.151), ("plateau_exp_half", -0.9157),
])
def test_unique_speed(name, expected):
    result = find_speed(spec_of(name))
    assert result.kind == "Unique"
    assert result.c_star == pytest.approx(expected, abs=5e-3)
    assert result.residual <= SolverOptions().tol_c


def test_unique_speed_euler_parity_mode():
    result = find_speed(spec_of("plateau_quadratic"), SolverOptions.euler())
    assert result.c_star == pytest.approx(0.2663, abs=5e-3)


def test_nonexistence_strong_convection():
    result = find_speed(spec_of("plateau_strong_quadratic"))
    assert result.kind == "NotFound"
    assert any("HitZero" in e for e in result.evidence)


def test_nonexistence_blowup():
    result = find_speed(spec_of("plateau_blowup"))
    assert result.kind == "NotFound"
    assert result.reason == "no-sign-change"
    assert any("both solutions blow up" in e for e in result.evidence)


def test_bracket_override(fisher):
    result = find_speed(fisher.spec, bracket=(1.0, 3.0))
    assert result.bracket_used[0] == 1.0
    assert result.c_star == pytest.approx(2.0, abs=1e-3)


def test_result_serialization(fisher):
    d = critical_speed_A(fisher).to_dict()
    assert d["kind"] == "HalfLine" and d["c_star"] == pytest.approx(2.0, abs=1e-3)
    assert d["probes"] == sorted(d["probes"], key=lambda p: p["c"])
    assert "HalfLine c* = 2" in critical_speed_A(fisher).summary()
