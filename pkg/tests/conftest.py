import math

import pytest
from hypothesis import HealthCheck, settings, strategies as st

from horoflow.core import HPoint, MoebiusMap

settings.register_profile(
    "default", max_examples=200, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


# --- shared strategies ---------------------------------------------------------------

coords = st.floats(-5, 5, allow_nan=False)
heights = st.floats(-2.5, 2.5, allow_nan=False).map(math.exp)
points = st.builds(HPoint, coords, heights)
boundary_points = st.one_of(st.just(math.inf), coords)


@st.composite
def moebius_maps(draw, scale=2.0):
    """Random element as rotation * diagonal * unipotent, entries of moderate size."""
    phi = draw(st.floats(0, math.pi))
    t = draw(st.floats(-scale, scale))
    s = draw(st.floats(-scale, scale))
    k = MoebiusMap(math.cos(phi), -math.sin(phi), math.sin(phi), math.cos(phi))
    a = MoebiusMap(math.exp(t / 2), 0.0, 0.0, math.exp(-t / 2))
    n = MoebiusMap(1.0, s, 0.0, 1.0)
    return k @ a @ n


@pytest.fixture(scope="session")
def genus2():
    from horoflow.fuchsian import genus2_octagon_group

    return genus2_octagon_group()


@pytest.fixture(scope="session")
def cylinder():
    from horoflow.fuchsian import cyclic_group

    return cyclic_group(2.0)
