import math

import numpy as np
import pytest
from numpy.polynomial.legendre import leggauss
from scipy.optimize import minimize as sp_minimize

from strata.errors import GeometryError, HypothesisError, NotAConnectionError
from strata.potential import A_MINUS, A_PLUS, Potential
from strata.profile1d import (
    MINUS,
    NEITHER,
    PLUS,
    Grid1D,
    Profile,
    action_gradient,
    build_atlas,
    classify_sublevel,
    full_action,
    l2_distance,
    minimize,
    mirror,
    reduced_gradient,
    symmetrize,
    truncate_tail,
)

EXACT_GL = 2.0 * math.sqrt(2.0) / 3.0


def tanh_profile(grid, scale=math.sqrt(2.0)):
    half = np.zeros((grid.nh, 2))
    half[:, 0] = np.tanh(grid.half_x / scale)
    half[-1] = A_PLUS
    return Profile(grid, half)


def test_grid_requires_odd_n():
    with pytest.raises(ValueError):
        Grid1D(20.0, 2000)
    with pytest.raises(ValueError):
        Grid1D(20.0, 127)
    g = Grid1D(20.0, 2001)
    assert g.h == pytest.approx(0.02)
    assert g.x[g.center] == 0.0
    assert g.weights.sum() == pytest.approx(2 * g.lx)


def test_profile_symmetry_is_exact(rng):
    g = Grid1D(5.0, 129)
    q = Profile(g, rng.normal(size=(g.nh, 2)))
    v = q.values
    np.testing.assert_array_equal(v[::-1, 0], -v[:, 0])
    np.testing.assert_array_equal(v[::-1, 1], v[:, 1])


def test_from_full_rejects_asymmetric():
    g = Grid1D(5.0, 129)
    v = tanh_profile(g).values
    v[3, 1] += 0.1
    with pytest.raises(ValueError):
        Profile.from_full(g, v)


def test_tanh_action_matches_exact_value(gl):
    g = Grid1D(20.0, 4001)
    assert tanh_profile(g).action(gl) == pytest.approx(EXACT_GL, abs=1e-4)


@pytest.mark.parametrize("n", [2001, 4001])
def test_ramp_action_against_gauss_legendre(gl, channel, n):
    g = Grid1D(20.0, n)
    q = Profile.ramp(g)
    nodes, weights = leggauss(40)
    for p in (gl, channel):
        pts = np.stack([nodes, np.zeros_like(nodes)], axis=-1)
        # kinetic part: slope 1 on [-1, 1]
        oracle = 1.0 + float(weights @ p.value(pts))
        tol = 1e-8 if (p is gl or n == 4001) else 1e-7
        assert q.action(p) == pytest.approx(oracle, abs=tol)


def test_action_without_potential_is_kinetic(rng, channel):
    g = Grid1D(5.0, 129)
    q = Profile(g, rng.normal(size=(g.nh, 2)))
    v = q.values
    kin = 0.5 * np.sum(np.diff(v, axis=0) ** 2) / g.h
    assert q.action(channel.without_potential()) == pytest.approx(kin, rel=1e-13)


def test_action_is_additive_over_windows(channel, rng):
    g = Grid1D(5.0, 129)
    q = Profile(g, rng.normal(size=(g.nh, 2)))
    split = 40
    total = q.action_on(channel, 0, g.n - 1)
    assert q.action_on(channel, 0, split) + q.action_on(channel, split, g.n - 1) == pytest.approx(total)
    assert total == pytest.approx(q.action(channel), rel=1e-13)


def test_action_gradient_directional_derivative(channel, rng):
    g = Grid1D(6.0, 129)
    q = Profile.ramp(g, bump=0.7)
    q.half[1:-1] += 0.05 * rng.normal(size=(g.nh - 2, 2))
    d = rng.normal(size=(g.nh, 2))
    d[0, 0] = 0.0
    d[-1] = 0.0
    eps = 1e-5
    fp = Profile(g, q.half + eps * d).action(channel)
    fm = Profile(g, q.half - eps * d).action(channel)
    fd = (fp - fm) / (2 * eps)
    from strata.profile1d import half_gradient

    exact = float(np.sum(half_gradient(q.half, g, channel) * d))
    assert abs(fd - exact) / abs(exact) < 1e-6


def test_full_gradient_of_mirrored_profile_is_mirrored(channel):
    g = Grid1D(6.0, 129)
    q = Profile.ramp(g, bump=0.5, bump_width=2.0)
    G = action_gradient(q, channel)
    np.testing.assert_allclose(G[::-1, 0], -G[:, 0], atol=1e-13)
    np.testing.assert_allclose(G[::-1, 1], G[:, 1], atol=1e-13)


def test_symmetrize_fixed_point(channel):
    g = Grid1D(8.0, 257)
    q = Profile.ramp(g, width=2.0, bump=0.6, bump_width=3.0)
    out = symmetrize(q.values, g, channel)
    np.testing.assert_allclose(out.half, q.half, rtol=0, atol=1e-15)


def test_symmetrize_shifted_profile(channel):
    g = Grid1D(10.0, 257)
    q = Profile.ramp(g, width=2.0, bump=0.6, bump_width=3.0)
    v = q.values
    shifted = np.concatenate([np.repeat(v[:1], 2, axis=0), v[:-2]])
    out = symmetrize(shifted, g, channel)
    np.testing.assert_allclose(out.values, mirror(out.half))
    assert out.action(channel) <= full_action(shifted, g, channel) + 1e-12


def test_symmetrize_is_reflection_equivariant(channel, rng):
    g = Grid1D(8.0, 257)
    base = Profile.ramp(g, width=2.0, bump=0.4).values
    base[5:-5] += 0.05 * rng.normal(size=(g.n - 10, 2))
    refl = base[::-1].copy()
    refl[:, 0] *= -1
    a = symmetrize(base, g, channel)
    b = symmetrize(refl, g, channel)
    np.testing.assert_allclose(a.half, b.half, atol=1e-14)


def test_symmetrize_rejects_non_connection(channel):
    g = Grid1D(5.0, 129)
    v = np.tile(A_PLUS, (g.n, 1))
    with pytest.raises(NotAConnectionError):
        symmetrize(v, g, channel)


def test_truncate_tail_idempotent_on_flat_tail(gl):
    g = Grid1D(20.0, 2001)
    q = Profile.ramp(g, width=3.0)
    t0 = g.center + int(round(5.0 / g.h))
    qt, lhs, rhs = truncate_tail(q, t0, gl, w_hi=1.0)
    np.testing.assert_allclose(qt.half, q.half, atol=1e-15)


def test_truncate_tail_inequality_for_tanh(gl):
    g = Grid1D(20.0, 2001)
    q = tanh_profile(g)
    rep_w_hi = 0.5  # GL Hessian at the wells is 2 I, i.e. 4 w = 2
    dist = np.linalg.norm(q.values - A_PLUS, axis=1)
    t0 = int(np.nonzero((g.x > 0) & (dist < 0.05))[0][0])
    qt, lhs, rhs = truncate_tail(q, t0, gl, w_hi=rep_w_hi)
    assert rhs - qt.action(gl) >= 0
    assert rhs - lhs >= 0


def test_truncate_tail_bridge_cost(gl):
    # the linear bridge costs at most delta^2/2 + w_hi delta^2
    g = Grid1D(20.0, 2001)
    q = tanh_profile(g)
    w_hi = 0.5 * (1 + 0.06)  # covers the Hessian growth inside the small ball
    for x0 in (3.0, 4.0, 6.0):
        t0 = g.center + int(round(x0 / g.h))
        delta = float(np.linalg.norm(q.values[t0] - A_PLUS))
        _, lhs, _ = truncate_tail(q, t0, gl, w_hi)
        bridge = lhs - q.action_on(gl, 0, t0)
        assert bridge <= 0.5 * delta ** 2 + w_hi * delta ** 2 + 1e-12


def test_truncate_tail_geometry_error(gl):
    g = Grid1D(5.0, 129)
    q = tanh_profile(g)
    with pytest.raises(GeometryError):
        truncate_tail(q, g.n - 3, gl, 1.0)
    with pytest.raises(GeometryError):
        truncate_tail(q, g.center - 2, gl, 1.0)


def test_minimize_gl_ramp(gl):
    g = Grid1D(20.0, 2001)
    res = minimize(Profile.ramp(g), gl)
    assert res.converged
    assert res.residual < 1e-8
    assert res.action == pytest.approx(EXACT_GL, abs=1e-3)
    hist = np.array(res.action_history)
    assert np.all(np.diff(hist) <= 1e-12 * hist[0])
    assert res.action <= Profile.ramp(g).action(gl)


def test_minimize_is_stationary_at_minimizer(gl):
    g = Grid1D(20.0, 1001)
    first = minimize(Profile.ramp(g), gl)
    again = minimize(first.profile, gl)
    assert again.n_iter == 0
    np.testing.assert_array_equal(again.profile.half, first.profile.half)


def test_minimize_matches_scalar_oracle(gl):
    # q2 = 0 is invariant for GL; minimize the scalar discrete action independently
    g = Grid1D(8.0, 257)
    res = minimize(Profile.ramp(g, bump=0.5), gl)
    free = slice(1, g.nh - 1)

    def f(z):
        q = np.zeros(g.nh)
        q[free] = z
        q[-1] = 1.0
        return float(np.sum(np.diff(q) ** 2) / g.h + np.sum(g.weights * (q ** 2 - 1) ** 2 / 4))

    z0 = np.tanh(g.half_x[free] / math.sqrt(2))
    oracle = sp_minimize(f, z0, method="BFGS", options={"gtol": 1e-12})
    assert res.action == pytest.approx(oracle.fun, abs=1e-10)
    assert np.max(np.abs(res.profile.half[:, 1])) < 1e-8


def test_gl_atlas_single_cluster(gl_atlas):
    assert gl_atlas.n_clusters == 1
    assert not gl_atlas.star_holds
    assert gl_atlas.m == pytest.approx(EXACT_GL, abs=1e-3)
    assert np.max(np.abs(gl_atlas.minimizers[0].half[:, 1])) < 1e-6
    assert gl_atlas.m_star > gl_atlas.m > 0


def test_channel_atlas_two_mirror_clusters(channel_atlas):
    a = channel_atlas
    assert a.n_clusters == 2 and a.star_holds
    qm, qp = a.q_minus, a.q_plus
    np.testing.assert_allclose(qm.half[:, 0], qp.half[:, 0], atol=1e-6)
    np.testing.assert_allclose(qm.half[:, 1], -qp.half[:, 1], atol=1e-6)
    assert a.distances[0, 1] == 5.0 * a.d0
    assert max(a.el_residuals()) < a.el_tol
    assert a.m < a.m_star
    assert a.nu_measured and all(v > 0 for v in a.nu_measured.values())


def test_atlas_needs_eight_starts(gl):
    with pytest.raises(ValueError):
        build_atlas(gl, Grid1D(10.0, 201), n_starts=4)


def test_classify_representatives(channel_atlas):
    a = channel_atlas
    assert classify_sublevel(a, a.q_plus, a.m) == PLUS
    assert classify_sublevel(a, a.q_minus, a.m_star) == MINUS


def test_classify_ramp_is_neither(channel_atlas):
    a = channel_atlas
    q = Profile.ramp(a.grid)
    assert q.action(a.potential) > a.m_star
    assert classify_sublevel(a, q, a.m_star) == NEITHER


def test_classify_midpoint_is_neither(channel_atlas):
    a = channel_atlas
    mid = symmetrize(0.5 * (a.q_minus.values + a.q_plus.values), a.grid, a.potential)
    assert mid.action(a.potential) > a.m_star
    assert classify_sublevel(a, mid, a.m) == NEITHER


def test_classify_requires_star(gl_atlas):
    with pytest.raises(HypothesisError):
        classify_sublevel(gl_atlas, gl_atlas.minimizers[0], gl_atlas.m)


def test_classify_level_window(channel_atlas):
    with pytest.raises(ValueError):
        classify_sublevel(channel_atlas, channel_atlas.q_plus, channel_atlas.m_star + 1.0)


def test_minimal_action_second_order_in_h(gl):
    ms = []
    for n in (201, 401, 801):
        ms.append(minimize(Profile.ramp(Grid1D(10.0, n)), gl).action)
    order = math.log2(abs(ms[0] - ms[1]) / abs(ms[1] - ms[2]))
    assert order >= 1.8


def test_reduced_gradient_small_at_minimizer(gl_atlas):
    q = gl_atlas.minimizers[0]
    w = np.broadcast_to(q.grid.weights[:, None], q.half.shape)
    from strata.profile1d import free_mask

    r = reduced_gradient(q, gl_atlas.potential) / w[free_mask(q.grid.nh)]
    assert np.max(np.abs(r)) < 1e-8
