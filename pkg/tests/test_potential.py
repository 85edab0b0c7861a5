import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strata.errors import DomainError
from strata.potential import (
    A_MINUS,
    A_PLUS,
    HypothesisReport,
    Potential,
    audit_minima,
    estimate_constants,
    parse_potential,
)

BUILTINS = [Potential.ginzburg_landau(), Potential.channel(0.9, 0.05), Potential.channel(0.5, 0.2)]
coord = st.floats(-3.0, 3.0, allow_nan=False)


def test_channel_vanishes_at_wells():
    p = Potential.channel(0.9, 0.05)
    assert p.value(A_PLUS) == 0.0
    assert p.value(A_MINUS) == 0.0


def test_gl_origin():
    assert Potential.ginzburg_landau().value([0.0, 0.0]) == pytest.approx(0.25, abs=1e-15)


def test_channel_origin():
    assert Potential.channel(0.9, 0.05).value([0.0, 0.0]) == pytest.approx(1.81, abs=1e-14)


@pytest.mark.parametrize("p", BUILTINS, ids=lambda p: p.label)
def test_gradient_vanishes_at_wells(p):
    np.testing.assert_array_equal(p.gradient(np.array([A_MINUS, A_PLUS])), 0.0)


def test_channel_hessian_positive_at_wells():
    p = Potential.channel(0.9, 0.05)
    for a in (A_MINUS, A_PLUS):
        ev = np.linalg.eigvalsh(p.hessian(a))
        assert ev.min() > 0
    # closed form at the wells: diag(8 + 8 delta^2, 2 eps_w)
    np.testing.assert_allclose(p.hessian(A_PLUS), np.diag([8.0 + 8.0 * 0.81, 0.1]), atol=1e-13)


@pytest.mark.parametrize("p", BUILTINS, ids=lambda p: p.label)
def test_even_in_first_coordinate(p, rng):
    pts = rng.uniform(-3, 3, size=(1000, 2))
    flipped = pts * np.array([-1.0, 1.0])
    assert np.max(np.abs(p.value(pts) - p.value(flipped))) == 0.0


@pytest.mark.parametrize("p", BUILTINS, ids=lambda p: p.label)
def test_gradient_matches_central_differences(p, rng):
    pts = rng.uniform(-3, 3, size=(1000, 2))
    eps = 1e-6
    fd = np.stack([(p.value(pts + eps * e) - p.value(pts - eps * e)) / (2 * eps)
                   for e in np.eye(2)], axis=-1)
    g = p.gradient(pts)
    err = np.linalg.norm(g - fd, axis=-1) / (1.0 + np.linalg.norm(g, axis=-1))
    assert err.max() < 1e-6


@pytest.mark.parametrize("p", BUILTINS, ids=lambda p: p.label)
def test_hessian_matches_gradient_differences(p, rng):
    pts = rng.uniform(-3, 3, size=(100, 2))
    eps = 1e-6
    fd = np.stack([(p.gradient(pts + eps * e) - p.gradient(pts - eps * e)) / (2 * eps)
                   for e in np.eye(2)], axis=-1)
    H = p.hessian(pts)
    np.testing.assert_allclose(H, np.swapaxes(H, -1, -2), atol=0)
    err = np.linalg.norm(H - fd, axis=(-2, -1)) / (1.0 + np.linalg.norm(H, axis=(-2, -1)))
    assert err.max() < 1e-6


@given(x1=coord, x2=coord)
@settings(max_examples=200, deadline=None)
def test_builtins_nonnegative_and_even(x1, x2):
    for p in BUILTINS:
        w = p.value([x1, x2])
        assert w >= 0
        assert w == p.value([-x1, x2])


def test_non_finite_input_rejected():
    p = Potential.channel()
    with pytest.raises(DomainError):
        p.value([math.nan, 0.0])
    with pytest.raises(DomainError):
        p.gradient([0.0, math.inf])


def test_zero_hook_keeps_kind():
    p = Potential.channel().without_potential()
    assert p.value([0.3, 0.2]) == 0.0
    assert np.all(p.gradient([[0.3, 0.2]]) == 0.0)


def test_parse_potential():
    assert parse_potential("gl") == Potential.ginzburg_landau()
    assert parse_potential("channel", 0.5, 0.1).params == (0.5, 0.1)
    with pytest.raises(ValueError):
        parse_potential("mexican-hat")


def test_channel_parameter_validation():
    with pytest.raises(ValueError):
        Potential.channel(0.0, 0.05)
    with pytest.raises(ValueError):
        Potential.channel(0.9, -1.0)


def test_gl_mu0_floor():
    rep = estimate_constants(Potential.ginzburg_landau())
    assert rep.R == 2.0
    # |u| > 2 gives |z^2 - 1| >= 3, so W >= 9/4 outside the disc
    assert rep.mu0 >= 2.25


@pytest.mark.parametrize("p", BUILTINS[:2], ids=lambda p: p.label)
def test_report_invariants(p):
    rep = estimate_constants(p)
    assert rep.lambda0 > 0
    assert rep.mu0 > 0
    assert rep.w_lo <= rep.w_hi
    assert 0 < rep.delta0 < rep.delta_bar <= 0.125
    assert rep.ratio_condition()
    expected = (math.sqrt(2 * rep.w_lo) * rep.delta0 * (rep.delta_bar - rep.delta0)
                - 0.5 * rep.delta0 ** 2 * (1 + 2 * rep.w_hi))
    assert rep.lambda0 == pytest.approx(expected, rel=1e-12)


def test_report_json_keys():
    d = estimate_constants(Potential.ginzburg_landau(), grid_n=64).to_dict()
    for key in ("R", "mu0", "delta_bar", "w_lo", "w_hi", "delta0", "lambda0", "omega_r"):
        assert key in d
    assert all(len(pair) == 2 for pair in d["omega_r"])
    again = HypothesisReport.from_dict(d).to_dict()
    assert again == d


def test_estimate_constants_grid_floor():
    with pytest.raises(ValueError):
        estimate_constants(Potential.ginzburg_landau(), grid_n=32)


@pytest.mark.parametrize("p", BUILTINS[:2], ids=lambda p: p.label)
def test_minimum_certification(p):
    assert audit_minima(p)


def test_table_potential_reproduces_channel():
    ref = Potential.channel(0.9, 0.05)
    x1 = np.linspace(-2, 2, 81)
    x2 = np.linspace(-2, 2, 81)
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    table = Potential.from_table(x1, x2, ref.value(np.stack([X1, X2], axis=-1)))
    pts = np.array([[0.31, -0.42], [-0.77, 0.5], [1.2, 0.1]])
    np.testing.assert_allclose(table.value(pts), ref.value(pts), rtol=2e-3, atol=2e-3)
    np.testing.assert_allclose(table.value(pts * [-1, 1]), table.value(pts), atol=1e-12)
