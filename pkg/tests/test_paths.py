import math

import numpy as np
import pytest
from scipy.integrate import quad

from curvespace import (
    CurvePath,
    DiscreteCurve,
    Grid,
    InsufficientRegularityError,
    MetricCoefficients,
    PathLeftSpaceError,
    TangentField,
    UnsupportedDimensionError,
    curve_length,
    example_path,
    exp_family,
    geometric_times,
    linear_interpolation_path,
    path_length,
    power_shrink_shorten,
    reparametrize_path,
    rotate_path,
    shorten_path,
    shrink_path,
    subpath,
    tangent_norm,
    translate_path,
    testcurves,
)
from curvespace.cauchy_lab import marker_aligned_geometric_times
from curvespace.paths import cumulative_segment_lengths, power_shrink_shorten_at

G2 = MetricCoefficients(2, (1.0, 1.0, 1.0))
GRID = Grid(256)


class TestPathLength:
    def test_constant_path_has_zero_length(self):
        c = testcurves.circle(Grid(64))
        path = linear_interpolation_path(c, c, 16)
        assert path_length(path, G2).length == 0.0

    def test_translation_cost_closed_form(self):
        G = MetricCoefficients(2, (1.0, 0.0, 1.0))
        c = testcurves.segment(GRID, [1.0, 0.0])
        path = translate_path(c, (0.0, 1.0), 64)
        assert path_length(path, G2).length == pytest.approx(1.0, abs=1e-6)
        assert path_length(path, G).length == pytest.approx(1.0, abs=1e-6)

    def test_zero_translation_vector(self):
        c = testcurves.circle_arc(GRID, 1.0, 1.0)
        assert path_length(translate_path(c, (0.0, 0.0), 32), G2).length == 0.0

    def test_translation_scaling(self):
        G = MetricCoefficients(2, (4.0, 1.0, 1.0))
        c = testcurves.segment(GRID, [0.0, 1.0])
        path = translate_path(c, (3.0, 0.0), 64)
        assert path_length(path, G).length == pytest.approx(6.0, abs=1e-9)

    def test_shrink_path_matches_quadrature_oracle(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        path = shrink_path(c, 1e-4, 600)
        oracle = quad(lambda t: math.sqrt(t / 3.0 + 1.0 / t), 1e-4, 1.0)[0]
        assert path_length(path, G2).length == pytest.approx(oracle, abs=1e-2)

    def test_finite_difference_velocity_agrees_with_analytic(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        with_vel = translate_path(c, (0.0, 1.0), 32)
        without = CurvePath(with_vel.times, with_vel.frames, None)
        a = path_length(with_vel, G2)
        b = path_length(without, G2)
        assert a.velocity_source == "analytic"
        assert b.velocity_source == "finite-difference"
        assert b.length == pytest.approx(a.length, rel=1e-9)

    def test_concatenation_additivity(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        path = shrink_path(c, 1e-3, 64)
        split = path.times[17]
        total = path_length(path, G2).length
        first = path_length(subpath(path, path.times[0], split), G2).length
        second = path_length(subpath(path, split, 1.0), G2).length
        assert first + second == pytest.approx(total, abs=1e-9)

    def test_time_reparametrization_invariance(self):
        # same image traversed under a smooth monotone clock warp
        c = testcurves.circle(Grid(64))
        v0 = np.array([0.3, -0.2])
        u = np.linspace(0.0, 1.0, 65)
        w = u**2 * (3.0 - 2.0 * u)
        dw = 6.0 * u - 6.0 * u**2
        frames = tuple(DiscreteCurve(c.grid, c.samples + t * v0) for t in w)
        vel = np.stack([dw_k * np.broadcast_to(v0, c.samples.shape) for dw_k in dw])
        warped = CurvePath(u, frames, vel)
        reference = path_length(translate_path(c, v0, 64), G2).length
        assert path_length(warped, G2).length == pytest.approx(reference, rel=1e-3)

    def test_theta_reparametrization_invariance(self):
        c = testcurves.circle_arc(GRID, radius=1.0, span=1.0)
        path = translate_path(c, (0.1, 0.4), 32)
        phi = exp_family(1.0, GRID)
        same = path_length(reparametrize_path(path, phi), G2).length
        assert same == pytest.approx(path_length(path, G2).length, rel=5e-3)


class TestShrinkPath:
    def test_bound_sandwich_random_lines(self):
        from curvespace import shrink_upper

        rng = np.random.default_rng(5)
        for _ in range(5):
            ell = float(rng.uniform(0.2, 2.0))
            direction = rng.normal(size=3)
            c = testcurves.line_through(GRID, (0, 0, 0), direction, ell)
            measured = path_length(shrink_path(c, 1e-4, 400), G2).length
            oracle = quad(
                lambda t: math.sqrt(t * ell**3 / 3.0 + ell / t), 1e-4, 1.0
            )[0]
            cert = shrink_upper(G2, c.length).value
            assert oracle - 1e-2 <= measured <= cert + 1e-6

    def test_circle_shrink_diverges(self):
        circ = testcurves.circle(GRID)
        eps_list = [1e-2, 1e-3, 1e-4, 1e-5]
        times = marker_aligned_geometric_times(eps_list, 128)
        frames = tuple(DiscreteCurve(GRID, t * circ.samples) for t in times)
        vel = np.broadcast_to(circ.samples, (len(times),) + circ.samples.shape).copy()
        path = CurvePath(times, frames, vel)
        tails = cumulative_segment_lengths(path, G2, eps_list)
        lengths = [tails[e] for e in eps_list]
        incs = np.diff(lengths)
        assert np.all(incs > 0.0)
        assert np.all(incs >= 0.1 * incs[0])

    def test_degenerate_time_window_rejected(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        with pytest.raises(ValueError):
            shrink_path(c, 1.0, 64)
        with pytest.raises(ValueError):
            shrink_path(c, 0.0, 64)


class TestRotatePath:
    def test_zero_angle(self):
        c = testcurves.circle(Grid(64))
        assert path_length(rotate_path(c, 0.0, 32), G2).length == 0.0

    def test_exactness_d2(self):
        rng = np.random.default_rng(9)
        for _ in range(5):
            c = testcurves.trig_curve(Grid(128), rng, dim=2)
            theta = float(rng.uniform(-np.pi, np.pi))
            measured = path_length(rotate_path(c, theta, 32), G2).length
            expected = abs(theta) * tangent_norm(G2, c, TangentField(c.grid, c.samples))
            assert measured == pytest.approx(expected, rel=1e-6)

    def test_half_turn_unit_segment(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        measured = path_length(rotate_path(c, np.pi, 64), G2).length
        assert measured == pytest.approx(np.pi * np.sqrt(4.0 / 3.0), abs=1e-3)

    def test_d3_in_plane_rotation_exact(self):
        # curve orthogonal to the axis: |K A c| = |A c|, so the bound is met
        g = Grid(128)
        samples = np.stack([g.nodes + 0.2, np.sin(g.nodes), np.zeros_like(g.nodes)], axis=1)
        c = DiscreteCurve(g, samples)
        theta = 1.1
        measured = path_length(rotate_path(c, theta, 32, axis=(0, 0, 1.0)), G2).length
        expected = theta * tangent_norm(G2, c, TangentField(g, samples))
        assert measured == pytest.approx(expected, rel=1e-6)

    def test_unsupported_dimension(self):
        g = Grid(64)
        c = DiscreteCurve(g, g.nodes.reshape(-1, 1))
        with pytest.raises(UnsupportedDimensionError):
            rotate_path(c, 1.0, 32)


class TestShortenPath:
    def test_straight_line_equals_shrink(self):
        c = testcurves.segment(GRID, [0.6, 0.8])
        a = path_length(shorten_path(c, 1e-3, 128), G2).length
        b = path_length(shrink_path(c, 1e-3, 128), G2).length
        assert a == pytest.approx(b, abs=1e-9)

    def test_circle_arc_bounded(self):
        c = testcurves.circle_arc(GRID, radius=1.0, span=1.0)
        eps_list = [1e-2, 1e-3, 1e-4]
        times = marker_aligned_geometric_times(eps_list, 96)
        path = power_shrink_shorten_at(c, 0.0, times)
        tails = cumulative_segment_lengths(path, G2, eps_list)
        lengths = [tails[e] for e in eps_list]
        assert (lengths[-1] - lengths[-2]) / lengths[-1] < 0.05

    def test_endpoint_frame_length_first_order(self):
        c = testcurves.circle(GRID)
        t_min = 1e-3
        path = shorten_path(c, t_min, 64)
        speed0 = float(np.linalg.norm(testcurves.circle(GRID).derivative(np.array([0.0]))))
        assert curve_length(path.frames[0]) == pytest.approx(t_min * speed0, rel=1e-3)

    def test_requires_smooth_flag(self):
        g = Grid(64)
        c = DiscreteCurve(g, np.stack([g.nodes, np.sin(g.nodes)], axis=1))
        with pytest.raises(InsufficientRegularityError):
            shorten_path(c, 1e-2, 32)


class TestPowerShrinkShorten:
    def test_alpha_zero_reduces_to_shorten(self):
        c = testcurves.circle(GRID)
        a = path_length(power_shrink_shorten(c, 0.0, 1e-3, 96), G2).length
        b = path_length(shorten_path(c, 1e-3, 96), G2).length
        assert a == pytest.approx(b, abs=1e-9)

    def test_below_threshold_bounded(self):
        c = testcurves.circle(GRID)
        eps_list = [1e-2, 1e-3, 1e-4, 1e-5]
        times = marker_aligned_geometric_times(eps_list, 96)
        path = power_shrink_shorten_at(c, 0.5, times)
        tails = cumulative_segment_lengths(path, G2, eps_list)
        lengths = [tails[e] for e in eps_list]
        incs = np.diff(lengths)
        ratios = incs[1:] / incs[:-1]
        assert np.all(ratios < 0.6)  # clean geometric decay: finite total

    def test_at_threshold_log_divergence(self):
        c = testcurves.circle(GRID)
        eps_list = list(np.logspace(-2, -4, 5))
        times = marker_aligned_geometric_times(eps_list, 96)
        path = power_shrink_shorten_at(c, 1.0, times)
        tails = cumulative_segment_lengths(path, G2, eps_list)
        x = np.log(1.0 / np.array(eps_list))
        y = np.array([tails[e] for e in sorted(eps_list, reverse=True)])
        x = np.sort(x)
        slope, intercept = np.polyfit(x, y, 1)
        resid = y - (slope * x + intercept)
        r2 = 1.0 - resid @ resid / np.sum((y - y.mean()) ** 2)
        assert slope > 0 and r2 > 0.99


class TestLinearInterpolation:
    def test_same_endpoints(self):
        c = testcurves.circle(Grid(64))
        assert path_length(linear_interpolation_path(c, c, 16), G2).length == 0.0

    def test_opposite_orientations_leave_space(self):
        g = Grid(64)
        c0 = DiscreteCurve(g, g.nodes.reshape(-1, 1))
        c1 = DiscreteCurve(g, (1.0 - g.nodes).reshape(-1, 1))
        with pytest.raises(PathLeftSpaceError):
            linear_interpolation_path(c0, c1, 16)

    def test_reproduces_translation(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        shifted = DiscreteCurve(GRID, c.samples + np.array([0.0, 1.0]))
        a = path_length(linear_interpolation_path(c, shifted, 64), G2).length
        b = path_length(translate_path(c, (0.0, 1.0), 64), G2).length
        assert a == pytest.approx(b, abs=1e-12)


class TestExamplePath:
    def test_zero_translations_reduce_to_segment_shrink(self):
        g = GRID
        zero = lambda t: np.zeros_like(t)
        path = example_path(zero, zero, 1e-3, 128, g, f_prime=zero, g_prime=zero)
        seg = testcurves.segment(g, [1.0, 0.0])
        base = shrink_path(seg, 1e-3, 128)
        got = path_length(path, G2).length
        want = path_length(base, G2).length
        assert got == pytest.approx(want, abs=1e-12)

    def test_linear_translation_finite(self):
        # f(t) = t satisfies the finiteness condition: int |f'| sqrt(t) = 2/3
        g = GRID
        ident = lambda t: np.asarray(t, dtype=float)
        one = lambda t: np.ones_like(t)
        zero = lambda t: np.zeros_like(t)
        lengths = []
        for t_min in (1e-2, 1e-3, 1e-4, 1e-5):
            path = example_path(ident, zero, t_min, 256, g, f_prime=one, g_prime=zero)
            lengths.append(path_length(path, G2).length)
        incs = np.diff(lengths)
        assert np.all(incs[1:] / incs[:-1] < 0.7)

    def test_oscillatory_translation_diverges(self):
        g = Grid(64)
        f = lambda t: np.sin(1.0 / t) * t**0.1
        fp = lambda t: 0.1 * t**-0.9 * np.sin(1.0 / t) - t**-1.9 * np.cos(1.0 / t)
        zero = lambda t: np.zeros_like(t)
        lengths = []
        for t_min in (1e-2, 1e-3, 1e-4):
            path = example_path(f, zero, t_min, 512, g, f_prime=fp, g_prime=zero)
            lengths.append(path_length(path, G2).length)
        assert lengths[2] > 2.0 * lengths[0]


class TestConstructorValidation:
    def test_min_frames(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        with pytest.raises(ValueError):
            shrink_path(c, 1e-2, 4)

    def test_fd_needs_17_nodes(self):
        c = testcurves.segment(GRID, [1.0, 0.0])
        path = translate_path(c, (0.0, 1.0), 10)
        stripped = CurvePath(path.times, path.frames, None)
        with pytest.raises(ValueError):
            path_length(stripped, G2)

    def test_geometric_times_endpoints(self):
        times = geometric_times(1e-4, 64)
        assert times[0] == pytest.approx(1e-4) and times[-1] == 1.0
        assert np.all(np.diff(times) > 0)
