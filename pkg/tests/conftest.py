import sys

import numpy as np
import pytest

from strata.potential import Potential
from strata.profile1d import Grid1D, build_atlas


@pytest.fixture(scope="session")
def gl():
    return Potential.ginzburg_landau()


@pytest.fixture(scope="session")
def channel():
    return Potential.channel(0.9, 0.05)


@pytest.fixture(scope="session")
def gl_atlas(gl):
    return build_atlas(gl, Grid1D(20.0, 2001), n_starts=10)


@pytest.fixture(scope="session")
def channel_atlas(channel):
    return build_atlas(channel, Grid1D(20.0, 2001), n_starts=10)


@pytest.fixture(scope="session")
def channel_atlas_401(channel_atlas):
    return channel_atlas.on_grid(Grid1D(20.0, 401))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def channel_atlas_201(channel_atlas):
    return channel_atlas.on_grid(Grid1D(20.0, 201))


def _solve(atlas, ly, ny, c_rel):
    from strata.strip2d import (
        Grid2D,
        classify_and_extend,
        detect_turning,
        field_metrics,
        initial_field,
        minimize_strip,
    )

    p = atlas.potential
    scale = atlas.m_star - atlas.m
    c = atlas.m + c_rel * scale
    grid = Grid2D(atlas.grid, ly, ny)
    init = initial_field(atlas.q_minus, atlas.q_plus, grid, p)
    result = minimize_strip(init, c, p, scale=scale)
    metrics = field_metrics(result.field, p, c, atlas.q_minus, atlas.q_plus)
    turning = detect_turning(metrics, c, atlas.d0, 1e-6 * scale, m=atlas.m)
    report, ext, met = classify_and_extend(result, turning, c, p, atlas.q_minus, atlas.q_plus,
                                           extras={"v_tol": 1e-6 * scale, "neumann_tol": 1e-3})
    return dict(c=c, init=init, result=result, metrics=metrics, turning=turning, report=report,
                ext=ext, core_metrics=met, atlas=atlas)


@pytest.fixture(scope="session")
def heteroclinic_small(channel_atlas_201):
    return _solve(channel_atlas_201, 6.4, 65, 0.0)


@pytest.fixture(scope="session")
def brake_small(channel_atlas_201):
    return _solve(channel_atlas_201, 15.0, 151, 0.5)


def pytest_terminal_summary(terminalreporter):

    mod = next((m for name, m in sys.modules.items() if name.endswith("test_acceptance")), None)
    verdicts = getattr(mod, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(verdicts):
        terminalreporter.write_line(verdicts[n])
