import math

import numpy as np
import pytest

from frontspeed.burgers import BurgersConditionError, burgers_profile, burgers_speed, profile_conditions
from frontspeed.integrate import backward_solution
from frontspeed.model import make_spec, reduce


def test_decreasing_pair_quadratic_flux():
    r = burgers_speed(make_spec("0", h="u^2/2"), 1.0, 0.0)
    assert r.speed == -0.5
    assert r.direction == "decreasing"


def test_increasing_pair_concave_flux():
    r = burgers_speed(make_spec("0", h="-u^2"), 0.0, 1.0)
    assert r.speed == 1.0
    assert r.direction == "increasing"
    assert r.profile is not None


def test_no_flux_not_admissible():
    r = burgers_speed(make_spec("0"), 0.0, 1.0)
    assert r.speed == 0.0
    assert r.direction == "not-admissible"
    assert not any(e.satisfied for e in r.conditions)


def test_general_pair_chord():
    r = burgers_speed(make_spec("0", h="u^3"), 0.2, 0.6)
    assert r.speed == pytest.approx(-(0.6 ** 3 - 0.2 ** 3) / 0.4)


def test_requires_zero_reaction():
    with pytest.raises(ValueError):
        burgers_speed(make_spec("u*(1-u)"), 0.0, 1.0)


def test_closed_form_profile_values():
    y = burgers_profile(make_spec("0", h="-u^2"), 1.0)
    assert y(0.5) == pytest.approx(1 - math.sqrt(1 - (0.5 - 1 - 0.25 + 1) ** 2), abs=1e-12)
    assert y(0.5) == pytest.approx(0.0318, abs=1e-4)
    assert y(0.0) == 0.0 and y(1.0) == 0.0


def test_closed_form_matches_numeric_backward():
    spec = make_spec("0", h="-u^2")
    y = burgers_profile(spec, 1.0)
    tr = backward_solution(reduce(spec), 1.0, 0.0)
    assert np.max(np.abs(tr.y - y(tr.w))) <= 1e-6


def test_closed_form_with_variable_diffusion():
    spec = make_spec("0", h="-u^2", D="u+u^2/2")
    y = burgers_profile(spec, 1.0)
    tr = backward_solution(reduce(spec), 1.0, 0.0)
    assert np.max(np.abs(tr.y - y(tr.w))) <= 1e-6


def test_profile_conditions_and_errors():
    spec = make_spec("0", h="-u^2")
    assert all(e.satisfied for e in profile_conditions(spec, 1.0))
    with pytest.raises(BurgersConditionError):
        burgers_profile(spec, 2.0)
    with pytest.raises(BurgersConditionError):
        burgers_profile(make_spec("0", h="-4*u^2"), 4.0)
