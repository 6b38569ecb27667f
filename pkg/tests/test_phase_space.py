"""Grids, distributions, weighted norms, interpolation and checkpoints.

Closed-form references for the drifting Maxwellian (rho=1.3, u=(0.2,-0.1),
T=0.8, N=2) were evaluated with mpmath at 50 digits:

    ||M||_{L^2}^2            = rho^2/(4 pi T)        = 0.16810740864081444841
    int M <v>^2              = rho (1 + |u|^2 + 2 T) = 3.445
    int M log M              = rho (log rho - 1 - log(2 pi T))
                                                     = -3.0580800258159380785

Truncation and lattice-sum errors at L=8, n=64 sit far below the tolerances
used here (the Gaussian tail at |v|=8 is ~1e-17).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from boltzlab.phase_space import (
    Distribution,
    NormSpec,
    PhaseSpaceError,
    VelocityGrid,
    clip_negative,
    entropy,
    fd_derivative,
    interpolate,
    load_checkpoint,
    lp_norm,
    maxwellian,
    moments,
    norm,
    save_checkpoint,
    sobolev_norm,
)

RHO, MEAN, TEMP = 1.3, (0.2, -0.1), 0.8


@pytest.fixture(scope="module")
def grid():
    return VelocityGrid(dimension=2, half_width=8.0, points_per_axis=64)


@pytest.fixture(scope="module")
def maxw(grid):
    return maxwellian(grid, rho=RHO, mean=MEAN, temperature=TEMP)


class TestVelocityGrid:
    def test_axis_layout(self, grid):
        axis = grid.axis
        assert axis[0] == -8.0
        assert axis[-1] == pytest.approx(8.0 - grid.h)
        assert 0.0 in axis  # even n puts a node at the origin
        assert grid.h == pytest.approx(0.25)
        assert grid.cell_volume == pytest.approx(0.0625)
        assert grid.shape == (64, 64)
        assert grid.size == 4096

    def test_nodes_cover_grid(self, grid):
        nodes = grid.nodes()
        assert nodes.shape == (4096, 2)
        assert nodes[0] == pytest.approx([-8.0, -8.0])

    def test_validation(self):
        with pytest.raises(PhaseSpaceError):
            VelocityGrid(4, 8.0, 64)
        with pytest.raises(PhaseSpaceError):
            VelocityGrid(2, 0.0, 64)
        with pytest.raises(PhaseSpaceError):
            VelocityGrid(2, 8.0, 63)
        with pytest.raises(PhaseSpaceError):
            VelocityGrid(2, 8.0, 6)

    def test_distribution_shape_checked(self, grid):
        with pytest.raises(PhaseSpaceError):
            Distribution(grid, np.zeros((3, 3)))


class TestMaxwellian:
    def test_moments_match_parameters(self, maxw):
        mass, momentum, energy = moments(maxw)
        assert mass == pytest.approx(RHO, rel=1e-12)
        assert momentum == pytest.approx([RHO * MEAN[0], RHO * MEAN[1]], abs=1e-12)
        u2 = MEAN[0] ** 2 + MEAN[1] ** 2
        assert energy == pytest.approx(RHO * (u2 + 2.0 * TEMP), rel=1e-12)

    def test_l2_norm_frozen(self, maxw):
        assert lp_norm(maxw, p=2.0) ** 2 == pytest.approx(
            0.16810740864081444841, rel=1e-12
        )

    def test_weighted_l1_frozen(self, maxw):
        assert lp_norm(maxw, p=1.0, s=2.0) == pytest.approx(3.445, rel=1e-12)

    def test_entropy_frozen(self, maxw):
        assert entropy(maxw) == pytest.approx(-3.0580800258159380785, rel=1e-11)

    def test_3d_mass(self):
        g = VelocityGrid(3, 6.0, 24)
        m = maxwellian(g, rho=0.7, temperature=0.5)
        mass, momentum, energy = moments(m)
        assert mass == pytest.approx(0.7, rel=1e-10)
        assert momentum == pytest.approx([0.0, 0.0, 0.0], abs=1e-12)
        assert energy == pytest.approx(0.7 * 3.0 * 0.5, rel=1e-9)

    def test_parameter_validation(self, grid):
        with pytest.raises(PhaseSpaceError):
            maxwellian(grid, rho=-1.0)
        with pytest.raises(PhaseSpaceError):
            maxwellian(grid, temperature=0.0)
        with pytest.raises(PhaseSpaceError):
            maxwellian(grid, mean=(1.0, 2.0, 3.0))


class TestMomentsAndEntropy:
    def test_single_cell_moments(self):
        g = VelocityGrid(2, 8.0, 16)
        vals = np.zeros(g.shape)
        vals[3, 5] = 2.0
        node = [g.axis[3], g.axis[5]]
        mass, momentum, energy = moments(Distribution(g, vals))
        vol = g.cell_volume
        assert mass == pytest.approx(2.0 * vol)
        assert momentum == pytest.approx([2.0 * vol * node[0], 2.0 * vol * node[1]])
        assert energy == pytest.approx(2.0 * vol * (node[0] ** 2 + node[1] ** 2))

    def test_entropy_zero_cells_contribute_nothing(self):
        g = VelocityGrid(2, 8.0, 16)
        vals = np.zeros(g.shape)
        vals[0, 0] = 1.0
        f = Distribution(g, vals)
        assert entropy(f) == pytest.approx(0.0)  # 1 * log 1 = 0, rest 0 log 0

    def test_entropy_rejects_negative(self):
        g = VelocityGrid(2, 8.0, 16)
        vals = np.full(g.shape, -0.1)
        with pytest.raises(PhaseSpaceError):
            entropy(Distribution(g, vals))


class TestNorms:
    def test_sup_norm_weighted(self):
        g = VelocityGrid(2, 8.0, 16)
        vals = np.zeros(g.shape)
        vals[2, 7] = -3.0
        f = Distribution(g, vals)
        bracket = math.sqrt(1.0 + g.axis[2] ** 2 + g.axis[7] ** 2)
        assert lp_norm(f, p=math.inf, s=3.0) == pytest.approx(3.0 * bracket**3)

    def test_l1_is_plain_integral_for_nonnegative(self, maxw):
        mass, _, _ = moments(maxw)
        assert lp_norm(maxw, p=1.0) == pytest.approx(mass, rel=1e-14)

    def test_p_below_one_rejected(self, maxw):
        with pytest.raises(PhaseSpaceError):
            lp_norm(maxw, p=0.5)

    def test_sobolev_w11_closed_form(self):
        # ||M||_W11 = rho (1 + 2 sqrt(2/(pi T))) for a centered 2-d Maxwellian;
        # finite differences land within O(h^2) of it
        g = VelocityGrid(2, 8.0, 64)
        m = maxwellian(g, rho=1.3, temperature=0.8)
        closed = 1.3 * (1.0 + 2.0 * math.sqrt(2.0 / (math.pi * 0.8)))
        assert sobolev_norm(m, k=1) == pytest.approx(closed, rel=3e-2)

    def test_sobolev_orders_nest(self, maxw):
        n0 = sobolev_norm(maxw, k=0)
        n1 = sobolev_norm(maxw, k=1)
        n2 = sobolev_norm(maxw, k=2)
        assert n0 == pytest.approx(lp_norm(maxw, 1.0))
        assert n0 < n1 < n2

    def test_sobolev_counts_mixed_derivatives(self):
        # f = x*y has zero pure second derivatives but a unit mixed one
        g = VelocityGrid(2, 8.0, 16)
        x = g.axis[:, None]
        y = g.axis[None, :]
        f = Distribution(g, x * y * np.exp(-(x**2 + y**2)))
        only_pure = sum(
            lp_norm(Distribution(g, fd_derivative(f.values, g.h, a, 2)), 1.0)
            for a in (0, 1)
        )
        full = sobolev_norm(f, k=2)
        base = sobolev_norm(f, k=1)
        assert full > (base + only_pure) * (1.0 - 1e-12)

    def test_norm_dispatch(self, maxw):
        assert norm(maxw, NormSpec(p=2.0, s=1.0, k=0)) == pytest.approx(
            lp_norm(maxw, 2.0, 1.0)
        )
        assert norm(maxw, NormSpec(p=1.0, s=0.0, k=1)) == pytest.approx(
            sobolev_norm(maxw, 1, 0.0, 1.0)
        )
        with pytest.raises(PhaseSpaceError):
            NormSpec(p=1.0, k=3)

    @settings(max_examples=25, deadline=None)
    @given(
        scale=st.floats(-50.0, 50.0, allow_nan=False),
        p=st.sampled_from([1.0, 2.0, math.inf]),
        seed=st.integers(0, 2**31),
    )
    def test_homogeneity(self, scale, p, seed):
        g = VelocityGrid(2, 4.0, 8)
        vals = np.random.default_rng(seed).standard_normal(g.shape)
        f = Distribution(g, vals)
        fs = Distribution(g, scale * vals)
        assert lp_norm(fs, p, 1.0) == pytest.approx(
            abs(scale) * lp_norm(f, p, 1.0), rel=1e-12, abs=1e-13
        )

    @settings(max_examples=25, deadline=None)
    @given(p=st.sampled_from([1.0, 2.0, math.inf]), seed=st.integers(0, 2**31))
    def test_triangle_inequality(self, p, seed):
        g = VelocityGrid(2, 4.0, 8)
        rng = np.random.default_rng(seed)
        a = rng.standard_normal(g.shape)
        b = rng.standard_normal(g.shape)
        lhs = lp_norm(Distribution(g, a + b), p)
        rhs = lp_norm(Distribution(g, a), p) + lp_norm(Distribution(g, b), p)
        assert lhs <= rhs * (1.0 + 1e-12)


class TestInterpolation:
    def probe_points(self, lo, hi, count=200, seed=99):
        return np.random.default_rng(seed).uniform(lo, hi, (count, 2))

    def test_reproduces_node_values(self):
        g = VelocityGrid(2, 4.0, 16)
        vals = np.random.default_rng(1).standard_normal(g.shape)
        f = Distribution(g, vals)
        for order in (1, 3):
            got = interpolate(f, g.nodes(), order=order)
            assert np.allclose(got, vals.reshape(-1), atol=1e-12)

    def test_linear_functions_exact_at_order_one(self):
        g = VelocityGrid(2, 4.0, 16)
        nodes = g.nodes()
        vals = (0.3 + 2.0 * nodes[:, 0] - nodes[:, 1]).reshape(g.shape)
        f = Distribution(g, vals)
        pts = self.probe_points(-4.0 + g.h, 4.0 - g.h - 0.01)
        expect = 0.3 + 2.0 * pts[:, 0] - pts[:, 1]
        assert np.allclose(interpolate(f, pts, 1), expect, atol=1e-12)

    def test_cubics_exact_at_order_three(self):
        g = VelocityGrid(2, 4.0, 16)
        nodes = g.nodes()
        vals = ((nodes[:, 0] ** 3 - 2.0 * nodes[:, 0]) * (nodes[:, 1] ** 2 + 1.0))
        f = Distribution(g, vals.reshape(g.shape))
        pts = self.probe_points(-4.0 + g.h, 4.0 - 3.0 * g.h)
        expect = (pts[:, 0] ** 3 - 2.0 * pts[:, 0]) * (pts[:, 1] ** 2 + 1.0)
        assert np.allclose(interpolate(f, pts, 3), expect, rtol=1e-11, atol=1e-10)

    def test_zero_outside_box(self):
        g = VelocityGrid(2, 4.0, 16)
        f = maxwellian(g)
        pts = np.array([[4.1, 0.0], [0.0, -4.0001], [5.0, 5.0]])
        assert np.array_equal(interpolate(f, pts, 1), np.zeros(3))
        assert np.array_equal(interpolate(f, pts, 3), np.zeros(3))

    def test_error_levels_on_maxwellian(self):
        # measured on this exact configuration and frozen with margin:
        # h=0.25 gives 2.97e-3 (order 1) and 1.14e-4 (order 3); halving h
        # contracts them by factors 3.6 and 13.9
        pts = self.probe_points(-4.0 + 0.25, 4.0 - 2 * 0.25, 500)

        def exact(p):
            return (1.0 / (2.0 * math.pi * 0.8)) * np.exp(
                -np.sum(p**2, axis=-1) / 1.6
            )

        errs = {}
        for n in (32, 64):
            g = VelocityGrid(2, 4.0, n)
            m = maxwellian(g, temperature=0.8)
            for order in (1, 3):
                errs[order, n] = np.max(np.abs(interpolate(m, pts, order) - exact(pts)))
        assert errs[1, 32] < 6e-3
        assert errs[3, 32] < 3e-4
        assert errs[1, 32] / errs[1, 64] > 2.5
        assert errs[3, 32] / errs[3, 64] > 8.0

    def test_order_validation(self):
        g = VelocityGrid(2, 4.0, 16)
        with pytest.raises(PhaseSpaceError):
            interpolate(maxwellian(g), np.zeros((1, 2)), order=2)
        with pytest.raises(PhaseSpaceError):
            interpolate(maxwellian(g), np.zeros((1, 3)), order=1)

    @settings(max_examples=25, deadline=None)
    @given(seed=st.integers(0, 2**31))
    def test_order_one_stays_in_value_hull(self, seed):
        g = VelocityGrid(2, 4.0, 8)
        rng = np.random.default_rng(seed)
        vals = rng.uniform(-5.0, 7.0, g.shape)
        f = Distribution(g, vals)
        pts = rng.uniform(-4.0, 4.0 - g.h, (50, 2))
        got = interpolate(f, pts, 1)
        assert np.all(got >= vals.min() - 1e-12)
        assert np.all(got <= vals.max() + 1e-12)


class TestFiniteDifferences:
    def test_exact_for_quadratics(self):
        g = VelocityGrid(2, 4.0, 16)
        x = g.axis[:, None] * np.ones((1, 16))
        d = fd_derivative(3.0 * x**2 - x + 2.0, g.h, axis=0)
        assert np.allclose(d, 6.0 * x - 1.0, atol=1e-11)

    def test_second_order_constant_curvature(self):
        g = VelocityGrid(2, 4.0, 16)
        y = np.ones((16, 1)) * g.axis[None, :]
        d2 = fd_derivative(0.5 * y**2, g.h, axis=1, order=2)
        assert np.allclose(d2[:, 1:-1], 1.0, atol=1e-10)


class TestClipping:
    def test_removed_mass_reported(self):
        g = VelocityGrid(2, 8.0, 16)
        vals = np.zeros(g.shape)
        vals[0, 0] = -2.0
        vals[1, 1] = 5.0
        clipped, removed = clip_negative(Distribution(g, vals))
        assert removed == pytest.approx(2.0 * g.cell_volume)
        assert clipped.values.min() == 0.0
        assert clipped.values[1, 1] == 5.0

    def test_noop_when_nonnegative(self, maxw):
        clipped, removed = clip_negative(maxw)
        assert removed == 0.0
        assert clipped is maxw


class TestCheckpoints:
    def test_round_trip_is_exact(self, tmp_path):
        g = VelocityGrid(2, 7.5, 16)
        vals = np.random.default_rng(5).standard_normal(g.shape) * 1e-7
        f = Distribution(g, vals, time_stamp=0.7231)
        path = tmp_path / "state.ckpt"
        save_checkpoint(f, str(path))
        back = load_checkpoint(str(path))
        assert back.grid == g
        assert back.time_stamp == f.time_stamp
        assert np.array_equal(back.values, f.values)

    def test_rejects_foreign_files(self, tmp_path):
        path = tmp_path / "junk.txt"
        path.write_text("not a checkpoint\n")
        with pytest.raises(PhaseSpaceError):
            load_checkpoint(str(path))
