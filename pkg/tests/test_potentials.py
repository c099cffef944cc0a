"""Clamp and damage potentials."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from phasefatigue.errors import InvalidArgument
from phasefatigue.potentials import G_SATURATION, clamp_phase, dF, dG, potential_F, potential_G

finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)


@pytest.mark.parametrize("phi, expected", [(0.5, 0.5), (-0.3, 0.0), (1.7, 1.0), (0.0, 0.0), (1.0, 1.0)])
def test_clamp_values(phi, expected):
    assert clamp_phase(phi) == expected


@pytest.mark.parametrize("phi, expected", [(0.0, 0.0), (0.5, -0.5), (2.0, -1.0), (-3.0, 0.0)])
def test_potential_F_values(phi, expected):
    assert potential_F(phi) == expected


def test_potential_G_values():
    assert potential_G(1.0) == pytest.approx(5.0 / 6.0, abs=1e-15)
    assert potential_G(0.5) == pytest.approx(0.25 - 0.125 / 6.0, abs=1e-15)
    assert potential_G(-1.0) == 0.0
    assert potential_G(4.0) == pytest.approx(G_SATURATION, abs=1e-15)


@pytest.mark.parametrize("phi, expected", [(0.5, -1.0), (1.5, 0.0), (-0.1, 0.0), (0.0, -1.0), (1.0, -1.0)])
def test_dF_values(phi, expected):
    assert dF(phi) == expected


@pytest.mark.parametrize("phi, expected", [(0.0, 0.0), (1.0, 1.5), (3.0, 0.0), (-2.0, 0.0), (0.5, 0.875)])
def test_dG_values(phi, expected):
    assert dG(phi) == expected


def test_dG_jumps_at_one_and_is_not_smoothed():
    # Closed-interval branch at phi = 1, flat branch just above it.
    assert dG(1.0) == 1.5
    assert dG(math.nextafter(1.0, 2.0)) == 0.0


@pytest.mark.parametrize("fn", [clamp_phase, potential_F, potential_G, dF, dG])
@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_non_finite_rejected(fn, bad):
    with pytest.raises(InvalidArgument):
        fn(bad)
    with pytest.raises(InvalidArgument):
        fn(np.array([0.1, bad]))


def test_array_in_array_out():
    phi = np.array([-1.0, 0.25, 2.0])
    out = potential_G(phi)
    assert isinstance(out, np.ndarray) and out.shape == phi.shape
    assert isinstance(potential_G(0.25), float)


@given(finite)
def test_clamp_idempotent(x):
    assert clamp_phase(clamp_phase(x)) == clamp_phase(x)
    assert 0.0 <= clamp_phase(x) <= 1.0


@given(finite)
def test_derivative_signs(x):
    assert dG(x) >= 0.0
    assert dF(x) <= 0.0


@pytest.mark.parametrize("fn", [potential_G, potential_F])
@pytest.mark.parametrize("point", [0.0, 1.0])
def test_continuity_at_breakpoints(fn, point):
    eps = 1e-8
    left, mid, right = fn(point - eps), fn(point), fn(point + eps)
    assert abs(left - mid) <= 2e-8
    assert abs(right - mid) <= 2e-8


@given(st.floats(min_value=1e-3, max_value=1 - 1e-3))
def test_dG_matches_central_difference(x):
    h = 1e-5
    fd = (potential_G(x + h) - potential_G(x - h)) / (2 * h)
    assert fd == pytest.approx(dG(x), abs=1e-8)


@given(st.floats(min_value=1e-3, max_value=1 - 1e-3))
def test_dF_matches_central_difference(x):
    h = 1e-5
    fd = (potential_F(x + h) - potential_F(x - h)) / (2 * h)
    assert fd == pytest.approx(dF(x), abs=1e-8)
