import numpy as np
import pytest

from pairpol.coincidence import FilterSpec
from pairpol.errors import ConvergenceError, InputError
from pairpol.spectroscopy import (
    GAUSSIAN_FWHM,
    CalibrationCurve,
    Spectrum,
    TimeHistogram,
    fit_calibration,
    invert_histogram,
    resolution_estimate,
    simulate_delay_histogram,
)

from test_source import make_spec

# slope magnitude for a 3 km dispersive spool: 17 ps/(nm km) -> 51 ps/nm
SLOPE_NM_PER_NS = 1000.0 / 51.0


def linear_curve(intercept_nm=1450.0, slope=SLOPE_NM_PER_NS, domain=(-2.0, 14.0)):
    return CalibrationCurve(coefficients=(intercept_nm, slope), domain=domain)


class TestCalibrationCurve:
    def test_rejects_non_monotone(self):
        with pytest.raises(InputError, match="monotone"):
            CalibrationCurve(coefficients=(1500.0, 0.0, 1.0), domain=(-5.0, 5.0))

    def test_rejects_degenerate_domain(self):
        with pytest.raises(InputError, match="interval"):
            CalibrationCurve(coefficients=(1500.0, 20.0), domain=(3.0, 3.0))

    def test_inverse_roundtrip(self):
        curve = CalibrationCurve(coefficients=(1500.0, 18.0, 0.4, -0.01), domain=(0.0, 10.0))
        for t in np.linspace(0.05, 9.95, 17):
            wl = float(curve.wavelength_at(t))
            assert curve.delay_at(wl) == pytest.approx(t, abs=1e-6)

    def test_decreasing_curve_supported(self):
        curve = CalibrationCurve(coefficients=(1700.0, -20.0), domain=(0.0, 10.0))
        assert not curve.increasing
        assert curve.delay_at(1600.0) == pytest.approx(5.0, abs=1e-6)

    def test_out_of_range_wavelength_rejected(self):
        with pytest.raises(InputError, match="outside"):
            linear_curve().delay_at(100.0)

    def test_dict_roundtrip(self):
        curve = fit_calibration([(0, 1500), (1, 1520), (2, 1541), (3, 1563)], degree=2)
        again = CalibrationCurve.from_dict(curve.to_dict())
        assert again.coefficients == curve.coefficients
        assert again.residual_rms == curve.residual_rms


class TestFitCalibration:
    def test_exact_line(self):
        pts = [(t, 1500.0 + 20.0 * t) for t in np.linspace(0, 5, 7)]
        curve = fit_calibration(pts, degree=1)
        assert curve.coefficients[0] == pytest.approx(1500.0, abs=1e-9)
        assert curve.coefficients[1] == pytest.approx(20.0, abs=1e-9)
        assert curve.residual_rms <= 1e-9

    def test_exact_cubic(self):
        coeffs = (1480.0, 15.0, 0.8, -0.05)
        pts = [(t, float(np.polynomial.polynomial.polyval(t, coeffs))) for t in np.linspace(0, 6, 9)]
        curve = fit_calibration(pts, degree=3)
        assert curve.residual_rms <= 1e-9
        assert np.allclose(curve.coefficients, coeffs, atol=1e-8)

    def test_noisy_cubic_rms(self):
        rng = np.random.default_rng(8)
        coeffs = (1480.0, 15.0, 0.8, -0.05)
        ts = np.linspace(0, 6, 40)
        pts = [
            (t, float(np.polynomial.polynomial.polyval(t, coeffs)) + rng.normal(0, 0.5))
            for t in ts
        ]
        curve = fit_calibration(pts, degree=3)
        assert curve.residual_rms <= 1.0

    def test_too_few_points(self):
        with pytest.raises(InputError, match="at least"):
            fit_calibration([(0, 1500), (1, 1520)], degree=3)

    def test_duplicate_delays(self):
        with pytest.raises(InputError, match="distinct"):
            fit_calibration([(0, 1500), (0, 1501), (1, 1520), (2, 1540)], degree=1)

    def test_non_monotone_fit_rejected_with_diagnostic(self):
        pts = [(-2, 1520), (-1, 1505), (0, 1500), (1, 1505), (2, 1520)]
        with pytest.raises(ConvergenceError, match="not monotone"):
            fit_calibration(pts, degree=2)


class TestSimulateDelayHistogram:
    def test_delta_input_lands_in_one_bin(self):
        spec = make_spec(
            signal_peak=type(make_spec().signal_peak)(1527.7, 0.0),
            idler_peak=type(make_spec().idler_peak)(1629.2, 0.0),
        )
        curve = linear_curve()
        # route only the idler into the dispersive arm
        hist = simulate_delay_histogram(
            spec, curve, jitter_ps=0.0, n_events=1000, bin_ps=50.0, seed=4,
            filters=[FilterSpec.longpass(1550.0, "arm1")],
        )
        assert hist.total == 1000
        assert sum(1 for c in hist.counts if c > 0) == 1
        peak_bin = int(np.argmax(hist.counts))
        t_expected = curve.delay_at(1629.2)
        assert hist.bin_edges_ns[peak_bin] <= t_expected <= hist.bin_edges_ns[peak_bin + 1]

    def test_two_clusters_at_expected_separation(self):
        spec = make_spec()
        curve = linear_curve()
        hist = simulate_delay_histogram(spec, curve, jitter_ps=50.0, n_events=200_000,
                                        bin_ps=50.0, seed=9)
        edges = np.asarray(hist.bin_edges_ns)
        centers = (edges[:-1] + edges[1:]) / 2
        counts = np.asarray(hist.counts, dtype=float)
        t_split = (curve.delay_at(1527.7) + curve.delay_at(1629.2)) / 2
        lo, hi = centers < t_split, centers >= t_split
        t_signal = np.average(centers[lo], weights=counts[lo])
        t_idler = np.average(centers[hi], weights=counts[hi])
        # separation 101.5 nm x 51 ps/nm = 5.1765 ns
        assert t_idler - t_signal == pytest.approx(5.1765, abs=0.05)

    def test_jitter_sets_cluster_width(self):
        spec = make_spec(
            signal_peak=type(make_spec().signal_peak)(1527.7, 0.0),
            idler_peak=type(make_spec().idler_peak)(1629.2, 0.0),
        )
        curve = linear_curve()
        hist = simulate_delay_histogram(
            spec, curve, jitter_ps=50.0, n_events=400_000, bin_ps=10.0, seed=12,
            filters=[FilterSpec.longpass(1550.0, "arm1")],
        )
        edges = np.asarray(hist.bin_edges_ns)
        centers = (edges[:-1] + edges[1:]) / 2
        counts = np.asarray(hist.counts, dtype=float)
        mean = np.average(centers, weights=counts)
        sigma_ns = np.sqrt(np.average((centers - mean) ** 2, weights=counts))
        fwhm_ps = GAUSSIAN_FWHM * sigma_ns * 1e3
        assert fwhm_ps == pytest.approx(117.7, abs=3.0)

    def test_determinism(self):
        spec = make_spec()
        curve = linear_curve()
        a = simulate_delay_histogram(spec, curve, 50.0, 70_000, 50.0, seed=3)
        b = simulate_delay_histogram(spec, curve, 50.0, 70_000, 50.0, seed=3)
        assert a == b

    def test_out_of_domain_events_dropped_and_counted(self):
        spec = make_spec()
        curve = linear_curve(domain=(-2.0, 5.0))  # idler at ~9.1 ns falls outside
        hist = simulate_delay_histogram(spec, curve, 0.0, 10_000, 50.0, seed=5)
        assert hist.n_dropped > 0
        assert hist.total + hist.n_dropped == 10_000

    def test_rejects_bad_args(self):
        spec = make_spec()
        with pytest.raises(InputError, match="n_events"):
            simulate_delay_histogram(spec, linear_curve(), 50.0, 0, 50.0)
        with pytest.raises(InputError, match="jitter"):
            simulate_delay_histogram(spec, linear_curve(), -1.0, 10, 50.0)


class TestInvertHistogram:
    def test_counts_conserved_exactly(self):
        spec = make_spec()
        curve = linear_curve()
        hist = simulate_delay_histogram(spec, curve, 50.0, 50_000, 50.0, seed=2)
        spectrum = invert_histogram(hist, curve)
        assert spectrum.total == hist.total
        assert len(spectrum.counts) == len(hist.counts)

    def test_axis_relabeling_with_linear_curve(self):
        curve = linear_curve()
        hist = TimeHistogram(bin_edges_ns=(0.0, 1.0, 2.0), counts=(5, 7))
        spectrum = invert_histogram(hist, curve)
        assert spectrum.counts == (5, 7)
        assert spectrum.bin_edges_nm == pytest.approx(
            (1450.0, 1450.0 + SLOPE_NM_PER_NS, 1450.0 + 2 * SLOPE_NM_PER_NS)
        )

    def test_decreasing_curve_reverses_bins(self):
        curve = CalibrationCurve(coefficients=(1700.0, -20.0), domain=(0.0, 10.0))
        hist = TimeHistogram(bin_edges_ns=(0.0, 1.0, 2.0), counts=(5, 7))
        spectrum = invert_histogram(hist, curve)
        assert spectrum.counts == (7, 5)
        assert spectrum.bin_edges_nm == pytest.approx((1660.0, 1680.0, 1700.0))

    def test_empty_histogram_gives_empty_spectrum(self):
        spectrum = invert_histogram(TimeHistogram((), ()), linear_curve())
        assert spectrum.bin_edges_nm == () and spectrum.counts == ()

    def test_roundtrip_recovers_peaks(self):
        spec = make_spec()
        curve = linear_curve()
        hist = simulate_delay_histogram(spec, curve, 50.0, 300_000, 50.0, seed=7)
        spectrum = invert_histogram(hist, curve)
        edges = np.asarray(spectrum.bin_edges_nm)
        centers = (edges[:-1] + edges[1:]) / 2
        counts = np.asarray(spectrum.counts, dtype=float)
        split = (1527.7 + 1629.2) / 2
        recovered = {}
        for target in (1527.7, 1629.2):
            side = centers < split if target < split else centers >= split
            peak = centers[side][np.argmax(counts[side])]
            bin_nm = edges[1] - edges[0]
            assert abs(peak - target) <= max(
                bin_nm, resolution_estimate(curve, 50.0, target)
            )
            recovered[target] = float(peak)
        # recovered peaks stay energy-conserving partners of each other
        from pairpol.source import conjugate_wavelength

        partner = conjugate_wavelength(spec.pump_nm, recovered[1527.7])
        assert abs(partner - recovered[1629.2]) <= 2 * resolution_estimate(curve, 50.0, 1629.2)

    def test_out_of_domain_bins_rejected(self):
        curve = linear_curve(domain=(0.0, 1.5))
        hist = TimeHistogram(bin_edges_ns=(0.0, 1.0, 2.0), counts=(5, 7))
        with pytest.raises(InputError, match="outside"):
            invert_histogram(hist, curve)


class TestResolutionEstimate:
    def test_published_scale(self):
        # 51 ps/nm slope with 50 ps jitter resolves below 3 nm
        est = resolution_estimate(linear_curve(), 50.0, 1527.7)
        assert est == pytest.approx(2.31, abs=0.02)
        assert est < 3.0

    def test_zero_jitter(self):
        assert resolution_estimate(linear_curve(), 0.0, 1527.7) == 0.0

    def test_linearity_in_jitter(self):
        one = resolution_estimate(linear_curve(), 50.0, 1527.7)
        two = resolution_estimate(linear_curve(), 100.0, 1527.7)
        assert two == pytest.approx(2 * one, rel=1e-12)


class TestHistogramType:
    def test_rejects_single_edge(self):
        with pytest.raises(InputError, match="at least two"):
            TimeHistogram(bin_edges_ns=(1.0,), counts=())

    def test_rejects_count_mismatch(self):
        with pytest.raises(InputError, match="mismatch"):
            TimeHistogram(bin_edges_ns=(0.0, 1.0), counts=(1, 2))

    def test_rejects_unsorted_edges(self):
        with pytest.raises(InputError, match="increasing"):
            TimeHistogram(bin_edges_ns=(1.0, 0.0, 2.0), counts=(1, 2))

    def test_rejects_negative_counts(self):
        with pytest.raises(InputError, match="non-negative"):
            TimeHistogram(bin_edges_ns=(0.0, 1.0), counts=(-1,))
