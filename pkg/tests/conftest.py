import random
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings

from fibrenorm.golden import GoldenRational, mod1
from fibrenorm.metric import KTail, PeriodicTail, Point, RhoTail

settings.register_profile(
    "repo", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("repo")

# acceptance lines, filled in by tests/test_acceptance.py
ACCEPTANCE: dict = {}


def random_tail(rng: random.Random):
    kind = rng.randrange(3)
    if kind == 0:
        a = Fraction(rng.randrange(-99, 99), rng.randrange(1, 20))
        return KTail(mod1(GoldenRational(a, rng.randrange(-9, 9))))
    if kind == 1:
        return PeriodicTail("".join(rng.choice("01") for _ in range(rng.randrange(1, 5))))
    return RhoTail()


def random_point(rng: random.Random, off_K: bool = True, max_prefix: int = 7) -> Point:
    while True:
        prefix = "".join(rng.choice("01") for _ in range(rng.randrange(1, max_prefix + 1)))
        x = Point(prefix, random_tail(rng))
        if not off_K or not x.in_K():
            return x


@pytest.fixture
def rng():
    return random.Random(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[k])
