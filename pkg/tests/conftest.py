"""Shared builders and comparison helpers."""

import math
from itertools import product

import pytest

from twoscale import CharExponent, ModelPair


def pg_pair(lam: float, r: float, mu: float) -> ModelPair:
    """Poisson(lam) outer process on a Gamma(r, mu) clock."""
    return ModelPair(CharExponent.poisson(lam), CharExponent.gamma(r, mu))


def gp_pair(r: float, mu: float, lam: float) -> ModelPair:
    """Gamma(r, mu) outer process on a Poisson(lam) clock."""
    return ModelPair(CharExponent.gamma(r, mu), CharExponent.poisson(lam))


def rare_grid():
    """24 parameter sets (lam, r, mu, u) with u/(a*b) spanning [1.1, 5]."""
    sets = []
    for lam, r, mu, ratio in product((0.6, 1.0, 1.7), (0.5, 1.3), (1.8, 3.2), (1.1, 5.0)):
        sets.append((lam, r, mu, ratio * lam * r / mu))
    return sets


RARE_GRID = rare_grid()


def matches_displayed(computed: float, displayed: float) -> bool:
    """Agreement with a 3-significant-digit reference value.

    Tolerates one unit in the third significant digit, which covers both
    round-half and truncate conventions in the reference display.
    """
    if displayed == 0:
        return computed == 0
    ulp = 10.0 ** (math.floor(math.log10(abs(displayed))) - 2)
    return abs(computed - displayed) <= 1.0000001 * ulp


def assert_displayed(computed: float, displayed: float, label: str = "") -> None:
    assert matches_displayed(computed, displayed), (
        f"{label}: computed {computed:.6e} does not display as {displayed:.3e}"
    )


@pytest.fixture
def pg113():
    return pg_pair(1.0, 1.0, 3.0)


@pytest.fixture
def pg112():
    return pg_pair(1.0, 1.0, 2.0)


@pytest.fixture
def gp121():
    return gp_pair(1.0, 2.0, 1.0)
