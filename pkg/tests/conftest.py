from fractions import Fraction
from pathlib import Path

import pytest

from gwcoal import Environment, FiniteSupportLaw, LinearFractionalLaw, load_environment

ENVS = Path(__file__).resolve().parent.parent / "envs"


def env_path(name: str) -> str:
    return str(ENVS / f"{name}.json")


@pytest.fixture
def binom_law():
    return FiniteSupportLaw((0.25, 0.5, 0.25))


@pytest.fixture
def binom_law_exact():
    return FiniteSupportLaw((Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)))


@pytest.fixture
def binom2(binom_law):
    # two generations of the same three-point law
    return Environment((binom_law, binom_law))


@pytest.fixture
def binom3():
    return load_environment(env_path("binom_n3"))


@pytest.fixture
def varying3():
    return load_environment(env_path("varying_n3"))


@pytest.fixture
def lf_half_n1():
    return load_environment(env_path("lf_half_n1"))


@pytest.fixture
def lf_half_n6():
    return load_environment(env_path("lf_half_n6"))


@pytest.fixture
def lf_varying3():
    return load_environment(env_path("lf_varying_n3"))


@pytest.fixture
def lf_law():
    return LinearFractionalLaw(0.5, 0.5)
