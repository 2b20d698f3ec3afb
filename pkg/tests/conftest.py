import math
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

import tumorseg as ts

# the reference experiment: r=20 mm sphere, bright rim, 1 mm grid
PHANTOM_CENTER = (64.0, 64.0, 64.0)
PHANTOM_RADIUS = 20.0
PHANTOM_DIMS = (128, 128, 128)
PHANTOM_SPACING = (1.0, 1.0, 1.0)
RIM, CORE, BG = 255.0, 230.0, 0.0
MEAN_BALL_MM = 25.0  # spans the object plus margin; see estimate_object_mean tests


def _phantom(noise=0.0, gap=0.0, seed=7):
    spec = ts.PhantomSpec(
        shape="sphere",
        center=PHANTOM_CENTER,
        radii=(PHANTOM_RADIUS,) * 3,
        rim_intensity=RIM,
        core_intensity=CORE,
        background_intensity=BG,
        rim_thickness=3.0,
        rim_gap_solid_angle=gap,
        noise_sigma=noise,
    )
    return ts.make_phantom(spec, PHANTOM_DIMS, PHANTOM_SPACING, seed=seed)


def equatorial_outline(n_points=24) -> ts.OutlineInit:
    angles = np.linspace(0.0, 2.0 * math.pi, n_points, endpoint=False)
    poly = np.stack(
        [
            PHANTOM_CENTER[0] + PHANTOM_RADIUS * np.cos(angles),
            PHANTOM_CENTER[1] + PHANTOM_RADIUS * np.sin(angles),
        ],
        axis=1,
    )
    return ts.OutlineInit("z", 64, poly)


@pytest.fixture(scope="session")
def clean_phantom():
    return _phantom()


@pytest.fixture(scope="session")
def noisy_phantom():
    # noise at 10% of rim contrast
    return _phantom(noise=0.10 * (RIM - BG))


@pytest.fixture(scope="session")
def gap_phantom():
    return _phantom(gap=0.5)


@pytest.fixture(scope="session")
def graph_spec():
    return ts.RayGraphSpec(object_mean_radius_mm=MEAN_BALL_MM)


@pytest.fixture(scope="session")
def balloon_clean_result(clean_phantom):
    volume, _ = clean_phantom
    return ts.run_balloon(volume, equatorial_outline())


@pytest.fixture(scope="session")
def graph_clean_result(clean_phantom, graph_spec):
    volume, _ = clean_phantom
    return ts.run_graph(volume, PHANTOM_CENTER, graph_spec)
