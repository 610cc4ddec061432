import math

import pytest

from ring import ONE, OMEGA, ZERO, ExactAmplitude


def test_normal_form_is_unique():
    assert ExactAmplitude((2, 0, 4, 0), 1) == ExactAmplitude((1, 0, 2, 0), 0)
    assert ExactAmplitude((0, 0, 0, 0), 5).k == 0


def test_omega_has_order_eight():
    assert OMEGA ** 8 == ONE
    assert OMEGA ** 4 == ExactAmplitude.from_int(-1)
    assert OMEGA ** 2 != ONE


def test_sqrt2_squares_to_two():
    root = ExactAmplitude.sqrt2_power(1)
    assert root * root == ExactAmplitude.from_int(2)
    assert ExactAmplitude.sqrt2_power(-2) * 2 == ONE


@pytest.mark.parametrize("s,m", [(0, 0), (-1, 3), (-5, 7), (2, 1)])
def test_clifford_form_round_trip(s, m):
    amp = ExactAmplitude.clifford(s, m)
    assert amp.clifford_form == (s, m)
    assert abs(amp.to_complex() - 2 ** (s / 2) * complex(math.cos(m * math.pi / 4), math.sin(m * math.pi / 4))) < 1e-12


def test_general_element_has_no_clifford_form():
    amp = ONE + OMEGA
    assert amp.clifford_form is None
    assert amp.render() == "[1, 1, 0, 0]/2^0"


def test_render():
    assert ZERO.render() == "zero"
    assert ExactAmplitude.clifford(-1, 0).render() == "(-1, 0)"


def test_conj_and_abs2():
    amp = ExactAmplitude.clifford(-3, 5)
    assert amp.abs2() == ExactAmplitude.sqrt2_power(-6)
    assert (amp * amp.conj()).coef == amp.abs2().coef


def test_arithmetic_with_ints():
    assert ONE + 1 == ExactAmplitude.from_int(2)
    assert 3 - ONE == ExactAmplitude.from_int(2)
    assert -(ONE) + ONE == ZERO
