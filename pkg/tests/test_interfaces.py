import json

import numpy as np
import pytest

from curvespace import (
    CurvePath,
    DiscreteCurve,
    Grid,
    MetricCoefficients,
    OptimizerOptions,
    TangentField,
    derivative,
    export_path,
    path_length,
    sobolev_sup_check,
    testcurves,
    translate_path,
)
from curvespace.grid_curves import SCHEME, read_curve_csv
from curvespace.paths import constant_path, subpath, write_length_report_csv

G2 = MetricCoefficients(2, (1.0, 1.0, 1.0))


class TestCurveCsvValidation:
    def test_bad_header_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("x,y\n0,1\n")
        with pytest.raises(ValueError):
            read_curve_csv(bad)

    def test_non_uniform_grid_rejected(self, tmp_path):
        bad = tmp_path / "bad.csv"
        rows = ["theta,x0"] + [f"{t},{t}" for t in [0, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0]]
        bad.write_text("\n".join(rows) + "\n")
        with pytest.raises(ValueError):
            read_curve_csv(bad)


class TestPathValidation:
    def test_too_few_time_nodes(self):
        c = testcurves.circle(Grid(64))
        with pytest.raises(ValueError):
            CurvePath(np.linspace(0, 1, 5), tuple([c] * 5), None)

    def test_non_increasing_times(self):
        c = testcurves.circle(Grid(64))
        times = np.array([0.0, 0.1, 0.1, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 1.0])
        with pytest.raises(ValueError):
            CurvePath(times, tuple([c] * 10), None)

    def test_velocity_shape_checked(self):
        c = testcurves.circle(Grid(64))
        times = np.linspace(0, 1, 10)
        with pytest.raises(ValueError):
            CurvePath(times, tuple([c] * 10), np.zeros((10, 3, 2)))

    def test_subpath_requires_node_bounds(self):
        path = translate_path(testcurves.circle(Grid(64)), (0.1, 0.0), 16)
        with pytest.raises(ValueError):
            subpath(path, 0.0, 0.123456)


class TestExports:
    def test_export_path_manifest(self, tmp_path):
        path = translate_path(testcurves.circle(Grid(64)), (0.2, 0.1), 16)
        export_path(path, tmp_path / "path")
        manifest = json.loads((tmp_path / "path" / "manifest.json").read_text())
        assert manifest["velocity"] == "analytic"
        assert manifest["constructor"] == "translate"
        assert manifest["scheme"] == SCHEME.tag
        assert len(manifest["frames"]) == 17
        back = read_curve_csv(tmp_path / "path" / manifest["frames"][0])
        assert np.array_equal(back.samples, path.frames[0].samples)

    def test_length_report_csv(self, tmp_path):
        path = translate_path(testcurves.circle(Grid(64)), (0.2, 0.1), 16)
        report = path_length(path, G2)
        out = tmp_path / "report.csv"
        write_length_report_csv(out, report)
        lines = out.read_text().splitlines()
        assert lines[0] == "t,integrand"
        assert len(lines) == 18
        t0, i0 = lines[1].split(",")
        assert float(t0) == report.times[0]
        assert float(i0) == report.integrand[0]

    def test_report_records_scheme_and_sizes(self):
        path = translate_path(testcurves.circle(Grid(64)), (0.2, 0.1), 16)
        report = path_length(path, G2)
        assert report.scheme == SCHEME.tag
        assert report.grid_n == 64 and report.time_m == 16
        assert report.quadrature == "trapezoid"


class TestSmallSurfaces:
    def test_derivative_of_curve_returns_field(self):
        c = testcurves.circle(Grid(64))
        out = derivative(c)
        assert isinstance(out, TangentField)
        assert out.samples.shape == c.samples.shape

    def test_sobolev_report_fields(self):
        g = Grid(64)
        c = DiscreteCurve(g, g.nodes.reshape(-1, 1))
        d = DiscreteCurve(g, (g.nodes + 0.01 * np.sin(2 * np.pi * g.nodes)).reshape(-1, 1))
        rep = sobolev_sup_check(c, d)
        assert rep.rhs == pytest.approx(rep.first_l2 + rep.second_l2)
        assert rep.holds == (rep.lhs <= rep.rhs)

    def test_optimizer_options_from_dict(self):
        opts = OptimizerOptions.from_dict({"max_iters": 42, "seeds": [16]})
        assert opts.max_iters == 42 and opts.seeds == (16,) and opts.tol == 1e-8

    def test_constant_path_zero_length(self):
        c = testcurves.circle(Grid(64))
        assert path_length(constant_path(c, 16), G2).length == 0.0

    def test_grid_nodes_read_only(self):
        g = Grid(16)
        with pytest.raises(ValueError):
            g.nodes[0] = 0.5

    def test_curve_samples_read_only(self):
        c = testcurves.circle(Grid(64))
        with pytest.raises(ValueError):
            c.samples[0, 0] = 99.0

    def test_tangent_field_1d_reshape(self):
        g = Grid(16)
        h = TangentField(g, np.ones(17))
        assert h.samples.shape == (17, 1) and h.dim == 1
