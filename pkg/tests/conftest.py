import pathlib
import sys

import numpy as np
import pytest

from dualpol.raytrace.scene import Building, build_scene

DATA = pathlib.Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def yuma_text():
    return (DATA / "almanac.yuma").read_text()


@pytest.fixture(scope="session")
def almanac(yuma_text):
    from dualpol.satgeo import parse_yuma

    return parse_yuma(yuma_text)


def rectangle(cx, cy, wx, wy):
    """CCW rectangle footprint centered at (cx, cy)."""
    hx, hy = wx / 2.0, wy / 2.0
    return np.array(
        [
            [cx - hx, cy - hy],
            [cx + hx, cy - hy],
            [cx + hx, cy + hy],
            [cx - hx, cy + hy],
        ],
        dtype=float,
    )


@pytest.fixture
def single_wall_scene():
    # one building north of the receiver, wall face at y = 5
    return build_scene(37.0, 127.0, [Building(rectangle(0.0, 6.5, 30.0, 3.0), 25.0)])


@pytest.fixture
def canyon_scene():
    # asymmetric canyon: tall building west, low building east. A satellite to
    # the east can clear the low roof (LOS) while still reflecting off the
    # tall west wall.
    return build_scene(
        37.0,
        127.0,
        [
            Building(rectangle(-12.0, 0.0, 8.0, 60.0), 30.0),
            Building(rectangle(12.0, 0.0, 8.0, 60.0), 10.0),
        ],
    )


def random_scene(rng):
    """One or two separated boxes; generic positions keep geometry non-degenerate."""
    n_buildings = rng.integers(1, 3)
    buildings = []
    centers = [(-rng.uniform(8, 15), 0.0), (rng.uniform(8, 15), 0.0)]
    for b in range(n_buildings):
        cx = centers[b][0] + rng.uniform(-2, 2)
        cy = rng.uniform(-5, 5)
        buildings.append(
            Building(
                rectangle(cx, cy, rng.uniform(4, 9), rng.uniform(15, 40)),
                float(rng.uniform(8, 35)),
            )
        )
    return build_scene(37.0, 127.0, buildings)


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    mod = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for number, title, status in sorted(mod.RESULTS):
        terminalreporter.write_line(f"CRITERION {number} ({title}): {status}")
