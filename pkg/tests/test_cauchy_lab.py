import json

import numpy as np
import pytest

from curvespace import (
    DisconnectedComponentsError,
    Grid,
    InapplicableCertificateError,
    MetricCoefficients,
    OptimizerOptions,
    exp_family,
    identity,
    testcurves,
)
from curvespace.cauchy_lab import (
    SequenceSpec,
    classify_trend,
    default_schedule,
    linear_fit,
    marker_aligned_geometric_times,
    run_cauchy_diagnostic,
    run_limit_identification,
    run_separation_experiment,
    run_threshold_scan,
)

G2 = MetricCoefficients(2, (1.0, 1.0, 1.0))
FAST = OptimizerOptions(max_iters=150, seeds=(16, 32))


class TestSequenceSpec:
    def test_requires_five_points(self):
        with pytest.raises(ValueError):
            SequenceSpec(family="straight-line", schedule=[1.0, 0.5, 0.25])

    def test_requires_decreasing(self):
        with pytest.raises(ValueError):
            SequenceSpec(family="straight-line", schedule=[1, 2, 3, 4, 5])

    def test_unknown_family(self):
        with pytest.raises(ValueError):
            SequenceSpec(family="zigzag", schedule=default_schedule())


class TestFits:
    def test_linear_fit_exact_line(self):
        slope, intercept, r2 = linear_fit([0, 1, 2, 3], [1, 3, 5, 7])
        assert slope == pytest.approx(2.0) and intercept == pytest.approx(1.0)
        assert r2 == pytest.approx(1.0)

    def test_marker_alignment(self):
        markers = [1e-2, 1e-3, 1e-4]
        times = marker_aligned_geometric_times(markers, 32)
        for m in markers:
            assert np.min(np.abs(times - m)) < 1e-15
        assert times[-1] == 1.0 and np.all(np.diff(times) > 0)

    def test_classify_log_divergence(self):
        eps = np.logspace(-2, -5, 7)
        lengths = {float(e): 3.0 + 2.0 * np.log(1.0 / e) for e in eps}
        assert classify_trend(lengths)["verdict"] == "divergent-trend"

    def test_classify_power_convergence(self):
        eps = np.logspace(-2, -5, 7)
        lengths = {float(e): 5.0 - 4.0 * e**0.25 for e in eps}
        assert classify_trend(lengths)["verdict"] == "finite-trend"


class TestCauchyDiagnostic:
    def test_straight_line_certificate_decay(self):
        spec = SequenceSpec(
            family="straight-line",
            schedule=[2.0**-m for m in range(6)],
            grid_n=128,
        )
        report = run_cauchy_diagnostic(spec, G2)
        assert report.verdicts["cauchy"] == "cauchy-consistent"
        for m, row in enumerate(report.rows):
            expected = 4.0 * np.sqrt(2.0**-m)
            assert row["consecutive_bound"] <= expected * (1.0 + 1e-6)

    def test_translations_and_rotations_do_not_change_verdict(self):
        dirs = tuple(
            (1.0, 0.0) if m % 2 == 0 else (0.0, 1.0) for m in range(6)
        )
        offs = tuple((1.0 / (m + 1) ** 2, 0.0) for m in range(6))
        spec = SequenceSpec(
            family="straight-line",
            schedule=[2.0**-m for m in range(6)],
            grid_n=128,
            directions=dirs,
            offsets=offs,
        )
        report = run_cauchy_diagnostic(spec, G2)
        assert report.verdicts["cauchy"] == "cauchy-consistent"

    def test_mixed_orientation_d1_rejected(self):
        dirs = tuple((1.0,) if m % 2 == 0 else (-1.0,) for m in range(6))
        spec = SequenceSpec(
            family="straight-line",
            schedule=[2.0**-m for m in range(6)],
            grid_n=128,
            directions=dirs,
        )
        with pytest.raises(DisconnectedComponentsError):
            run_cauchy_diagnostic(spec, G2)

    def test_vanishing_circles_report_unknown(self):
        spec = SequenceSpec(
            family="vanishing-circles",
            schedule=[1.0 / m for m in range(1, 7)],
            grid_n=128,
        )
        report = run_cauchy_diagnostic(spec, G2, time_m=64)
        assert report.verdicts["cauchy"] == "unknown"
        assert all(np.isfinite(r["consecutive_bound"]) for r in report.rows)

    def test_shortened_curve_family(self):
        g = Grid(128)
        spec = SequenceSpec(
            family="shortened-curve",
            schedule=default_schedule(),
            grid_n=128,
            curve=testcurves.circle(g),
        )
        report = run_cauchy_diagnostic(spec, G2, time_m=64)
        assert report.verdicts["cauchy"] == "cauchy-consistent"
        assert report.verdicts["lengths_vanish"]


class TestSeparationExperiment:
    def test_distinct_pair_separates(self):
        g = Grid(128)
        report = run_separation_experiment(
            identity(g), exp_family(1.0, g), G2, [0.1 * 2.0**-k for k in range(3)], FAST
        )
        assert report.verdicts["separation"] == "separated"
        sep = report.rows[0]["separation_delta"]
        for row in report.rows:
            assert row["delta_lower"] >= sep - 1e-9
            assert row["delta_lower"] <= row["upper"]
            assert row["separation_delta"] == sep  # row-independent

    def test_identical_pair_not_separated(self):
        g = Grid(128)
        phi = identity(g)
        report = run_separation_experiment(
            phi, phi, G2, [0.1 * 2.0**-k for k in range(3)], OptimizerOptions(max_iters=30, seeds=(16,))
        )
        assert report.verdicts["separation"] == "not-separated"
        assert all(row["delta_lower"] == 0.0 for row in report.rows)

    def test_small_delta_scales_linearly(self):
        g = Grid(128)
        report = run_separation_experiment(
            identity(g),
            exp_family(0.05, g),
            G2,
            [0.1 * 2.0**-k for k in range(3)],
            FAST,
        )
        assert report.verdicts["separation"] == "separated"
        L_hat = report.details["L_hat"]
        expected = 0.05 * np.sqrt(G2.a2) / (2.0 * np.sqrt(L_hat))
        assert report.rows[0]["separation_delta"] == pytest.approx(expected, rel=1e-4)

    def test_requires_a2(self):
        g = Grid(128)
        G = MetricCoefficients(3, (1.0, 1.0, 0.0, 1.0))
        with pytest.raises(InapplicableCertificateError):
            run_separation_experiment(identity(g), exp_family(1.0, g), G, [0.1, 0.05, 0.025])


class TestThresholdScan:
    def test_circle_boundary_straddles_threshold(self):
        c = testcurves.circle(Grid(128))
        report = run_threshold_scan(c, G2, [0.0, 0.5, 1.0], per_segment=48)
        assert report.verdicts["alpha=0"] == "finite-trend"
        assert report.verdicts["alpha=0.5"] == "finite-trend"
        assert report.verdicts["alpha=1"] == "divergent-trend"
        assert report.verdicts["boundary_straddles_threshold"]
        assert report.details["fits"]["alpha=1"]["log_r2"] > 0.99

    def test_straight_line_always_finite(self):
        seg = testcurves.segment(Grid(128), [1.0, 0.0], length=2.0)
        report = run_threshold_scan(
            seg, G2, [0.0, 0.5, 1.0], eps_list=[1e-2, 3e-3, 1e-3, 3e-4], per_segment=48
        )
        for alpha in (0.0, 0.5, 1.0):
            assert report.verdicts[f"alpha={alpha:g}"] == "finite-trend"
        assert report.verdicts["boundary_straddles_threshold"] is False

    def test_monotone_in_alpha_at_fixed_eps(self):
        c = testcurves.circle(Grid(128))
        report = run_threshold_scan(c, G2, [0.0, 0.5, 0.9], per_segment=48)
        by_alpha = {}
        for row in report.rows:
            by_alpha.setdefault(row["alpha"], {})[row["eps"]] = row["length"]
        eps0 = min(by_alpha[0.0])
        lengths = [by_alpha[a][eps0] for a in (0.0, 0.5, 0.9)]
        assert lengths[0] <= lengths[1] <= lengths[2]


class TestLimitIdentification:
    def test_circle_alpha_half(self):
        c = testcurves.circle(Grid(128))
        report = run_limit_identification(
            c, G2, 0.5, [0.1 * 2.0**-k for k in range(4)], time_m=48
        )
        assert report.verdicts["limit"] == "same-limit-trend"
        seg = [r["to_tangent_segment"] for r in report.rows]
        pow_ = [r["to_power_scaled"] for r in report.rows]
        assert all(a > b for a, b in zip(seg, seg[1:]))
        assert all(a > b for a, b in zip(pow_, pow_[1:]))
        assert all(r["frames_immersed"] for r in report.rows)

    def test_straight_line_connectors_vanish(self):
        seg = testcurves.segment(Grid(128), [0.0, 1.0])
        report = run_limit_identification(
            seg, G2, 0.0, [0.1 * 2.0**-k for k in range(4)], time_m=48
        )
        # shortened straight line is its own tangent segment
        assert all(r["to_tangent_segment"] < 1e-9 for r in report.rows)
        assert all(r["to_power_scaled"] < 1e-12 for r in report.rows)

    def test_alpha_above_threshold_rejected(self):
        c = testcurves.circle(Grid(128))
        with pytest.raises(ValueError):
            run_limit_identification(c, G2, 1.0, [0.1 * 2.0**-k for k in range(4)])


class TestReportSerialization:
    def test_csv_json_svg(self, tmp_path):
        g = Grid(128)
        report = run_separation_experiment(
            identity(g), exp_family(1.0, g), G2, [0.1, 0.05, 0.025],
            OptimizerOptions(max_iters=40, seeds=(16,)),
        )
        csv_path = tmp_path / "rep.csv"
        json_path = tmp_path / "rep.json"
        svg_path = tmp_path / "rep.svg"
        report.to_csv(csv_path)
        report.to_json(json_path)
        report.plot_svg(svg_path, "ell_m", ["upper", "delta_lower"], logx=True)
        header = csv_path.read_text().splitlines()[0]
        assert header.split(",") == report.columns
        payload = json.loads(json_path.read_text())
        assert payload["verdicts"] == report.verdicts
        assert svg_path.read_text().lstrip().startswith("<?xml")

    def test_verdicts_recomputable_from_rows(self):
        # the stored rows alone determine the verdict
        spec = SequenceSpec(
            family="straight-line", schedule=[2.0**-m for m in range(6)], grid_n=128
        )
        report = run_cauchy_diagnostic(spec, G2)
        bounds = [row["consecutive_bound"] for row in report.rows]
        slope, _, r2 = linear_fit(np.arange(len(bounds)), np.log(bounds))
        assert (slope < 0 and r2 >= 0.95 and bounds[-1] < bounds[0]) == (
            report.verdicts["cauchy"] == "cauchy-consistent"
        )
