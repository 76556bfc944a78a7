import os
import random

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from detfree.algebra import Polynomial, VariableOrder
from detfree.model import DEFAULT_SHAPE

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=1000, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

ORDER = DEFAULT_SHAPE.order
SMALL = VariableOrder(["a", "b", "c", "d"])


def random_poly(rng: random.Random, order=ORDER, terms=4, max_deg=3, coeff=5, homogeneous=None):
    acc = {}
    for _ in range(rng.randint(0, terms)):
        d = homogeneous if homogeneous is not None else rng.randint(0, max_deg)
        exps = [0] * order.nvars
        for _ in range(d):
            exps[rng.randrange(order.nvars)] += 1
        c = rng.randint(-coeff, coeff)
        k = order.pack(exps)
        acc[k] = acc.get(k, 0) + c
    return Polynomial(order, acc)


@st.composite
def polys(draw, order=SMALL, max_terms=5, max_deg=3):
    n = draw(st.integers(0, max_terms))
    items = []
    for _ in range(n):
        exps = draw(st.lists(st.integers(0, max_deg), min_size=order.nvars, max_size=order.nvars))
        c = draw(st.integers(-20, 20))
        items.append((exps, c))
    return Polynomial.from_terms(order, items)


@pytest.fixture(scope="session")
def order():
    return ORDER


# ---------------------------------------------------------------- acceptance lines

class AcceptanceLog:
    """Collects parts per criterion; one PASS/FAIL line per criterion at the end."""

    TOTAL = 10

    def __init__(self):
        self.parts = {}

    def record(self, criterion: int, name: str, ok: bool, detail: str) -> None:
        self.parts.setdefault(criterion, []).append((name, bool(ok), detail))
        print(f"[criterion {criterion}] {name}: {'PASS' if ok else 'FAIL'} - {detail}")

    def lines(self):
        out = []
        for n in range(1, self.TOTAL + 1):
            parts = self.parts.get(n)
            if not parts:
                continue
            ok = all(p[1] for p in parts)
            shown = [p for p in parts if not p[1]] or parts
            detail = "; ".join(f"{name}: {d}" for name, _, d in shown)
            out.append(f"criterion {n:>2} {'PASS' if ok else 'FAIL'}  {detail}")
        return out


ACCEPTANCE = AcceptanceLog()


@pytest.fixture(scope="session")
def accept():
    return ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    lines = ACCEPTANCE.lines()
    if lines:
        terminalreporter.section("acceptance criteria")
        for ln in lines:
            terminalreporter.write_line(ln)
