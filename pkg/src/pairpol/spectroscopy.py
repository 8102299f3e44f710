"""Fiber-assisted pair spectroscopy: dispersive delays in one detection arm
map photon wavelength onto the coincidence arrival-time difference.

A monotone polynomial calibration curve converts delay to wavelength;
simulation draws wavelengths from the source's spectral peaks, inverts the
curve by bisection, and adds detector timing jitter. Inverting a measured
delay histogram back through the curve yields the spectrum with counts
conserved exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.polynomial import polynomial as P

from .coincidence import FilterSpec, routing_probabilities
from .errors import ConvergenceError, InputError
from .source import SourceSpec

GAUSSIAN_FWHM = 2.0 * math.sqrt(2.0 * math.log(2.0))

MIN_SLOPE_NM_PER_NS = 1e-6

_CHUNK = 1 << 16
_MONOTONE_GRID = 512


@dataclass(frozen=True)
class CalibrationCurve:
    """Polynomial mapping delay (ns) to wavelength (nm), strictly monotone.

    Coefficients are in ascending degree. residual_rms records the fit
    quality when the curve came from fit_calibration.
    """

    coefficients: tuple[float, ...]
    domain: tuple[float, float]
    residual_rms: Optional[float] = None

    def __post_init__(self):
        coeffs = tuple(float(c) for c in self.coefficients)
        if len(coeffs) < 2:
            raise InputError("calibration polynomial needs degree >= 1")
        if not all(math.isfinite(c) for c in coeffs):
            raise InputError("calibration coefficients must be finite")
        t0, t1 = (float(x) for x in self.domain)
        if not (math.isfinite(t0) and math.isfinite(t1) and t0 < t1):
            raise InputError(f"domain must be an increasing interval, got {self.domain!r}")
        object.__setattr__(self, "coefficients", coeffs)
        object.__setattr__(self, "domain", (t0, t1))
        grid = np.linspace(t0, t1, _MONOTONE_GRID)
        slope = P.polyval(grid, P.polyder(coeffs))
        if np.abs(slope).min() < MIN_SLOPE_NM_PER_NS or ((slope > 0).any() and (slope < 0).any()):
            raise InputError(
                "calibration curve is not strictly monotone over its domain "
                f"(min |slope| {np.abs(slope).min():.3e} nm/ns)"
            )

    @property
    def increasing(self) -> bool:
        return P.polyval(self.domain[0], P.polyder(self.coefficients)) > 0

    def wavelength_at(self, delay_ns):
        """Evaluate the curve; delays must lie inside the domain."""
        t = np.asarray(delay_ns, dtype=float)
        t0, t1 = self.domain
        if (t < t0 - 1e-9).any() or (t > t1 + 1e-9).any():
            raise InputError("delay outside the calibration domain")
        return P.polyval(t, self.coefficients)

    def slope_at(self, delay_ns) -> float:
        """d(wavelength)/d(delay) in nm/ns."""
        return float(P.polyval(float(delay_ns), P.polyder(self.coefficients)))

    def wavelength_range(self) -> tuple[float, float]:
        lo, hi = P.polyval(np.array(self.domain), self.coefficients)
        return (lo, hi) if lo <= hi else (hi, lo)

    def delays_for(self, wavelength_nm) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized inverse by bisection; returns (delays, in_range_mask)."""
        wl = np.atleast_1d(np.asarray(wavelength_nm, dtype=float))
        lo_wl, hi_wl = self.wavelength_range()
        ok = (wl >= lo_wl) & (wl <= hi_wl)
        lo = np.full(wl.shape, self.domain[0])
        hi = np.full(wl.shape, self.domain[1])
        sign = 1.0 if self.increasing else -1.0
        target = sign * wl
        # halving to 1e-6 ns needs log2(span/1e-6) steps; 80 covers any sane span
        steps = max(int(math.ceil(math.log2(max((self.domain[1] - self.domain[0]) / 1e-6, 2)))) + 2, 8)
        for _ in range(min(steps, 80)):
            mid = 0.5 * (lo + hi)
            below = sign * P.polyval(mid, self.coefficients) < target
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi), ok

    def delay_at(self, wavelength_nm: float) -> float:
        d, ok = self.delays_for(float(wavelength_nm))
        if not ok[0]:
            raise InputError(
                f"wavelength {wavelength_nm} nm is outside the calibrated range"
            )
        return float(d[0])

    def to_dict(self) -> dict:
        out = {"coefficients": list(self.coefficients), "domain": list(self.domain)}
        if self.residual_rms is not None:
            out["residual_rms"] = self.residual_rms
        return out

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationCurve":
        try:
            return cls(
                coefficients=tuple(d["coefficients"]),
                domain=tuple(d["domain"]),
                residual_rms=d.get("residual_rms"),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed calibration curve: {exc}") from exc


@dataclass(frozen=True)
class TimeHistogram:
    """Arrival-time-difference histogram; may be empty (no edges, no counts)."""

    bin_edges_ns: tuple[float, ...]
    counts: tuple[int, ...]
    n_dropped: int = 0

    def __post_init__(self):
        edges = tuple(float(e) for e in self.bin_edges_ns)
        counts = tuple(int(c) for c in self.counts)
        if len(edges) == 1:
            raise InputError("histogram needs zero or at least two bin edges")
        if edges and (np.diff(edges) <= 0).any():
            raise InputError("bin edges must be strictly increasing")
        if len(counts) != max(len(edges) - 1, 0):
            raise InputError(
                f"count/edge mismatch: {len(counts)} counts for {len(edges)} edges"
            )
        if any(c < 0 for c in counts):
            raise InputError("counts must be non-negative")
        if self.n_dropped < 0:
            raise InputError("dropped-event count must be non-negative")
        object.__setattr__(self, "bin_edges_ns", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


@dataclass(frozen=True)
class Spectrum:
    """Counts per wavelength bin, edges ascending in nm."""

    bin_edges_nm: tuple[float, ...]
    counts: tuple[int, ...]

    def __post_init__(self):
        edges = tuple(float(e) for e in self.bin_edges_nm)
        counts = tuple(int(c) for c in self.counts)
        if len(edges) == 1 or (edges and (np.diff(edges) <= 0).any()):
            raise InputError("spectrum bin edges must be strictly increasing")
        if len(counts) != max(len(edges) - 1, 0):
            raise InputError("count/edge mismatch in spectrum")
        object.__setattr__(self, "bin_edges_nm", edges)
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)


def fit_calibration(
    points: Sequence[tuple[float, float]], degree: int = 3
) -> CalibrationCurve:
    """Least-squares polynomial through (delay_ns, wavelength_nm) points.

    The fit is rejected if it is not strictly monotone over the point hull.
    """
    if int(degree) != degree or degree < 1:
        raise InputError(f"degree must be a positive integer, got {degree!r}")
    pts = [(float(t), float(w)) for t, w in points]
    if len(pts) < degree + 1:
        raise InputError(f"need at least {degree + 1} points for degree {degree}")
    delays = np.array([t for t, _ in pts])
    wavelengths = np.array([w for _, w in pts])
    if np.unique(delays).size != delays.size:
        raise InputError("calibration delays must be distinct")
    coeffs = P.polyfit(delays, wavelengths, degree)
    residuals = wavelengths - P.polyval(delays, coeffs)
    rms = float(np.sqrt(np.mean(residuals**2)))
    try:
        return CalibrationCurve(
            coefficients=tuple(coeffs),
            domain=(float(delays.min()), float(delays.max())),
            residual_rms=rms,
        )
    except InputError as exc:
        raise ConvergenceError(
            f"calibration fit of degree {degree} is not monotone over the data "
            f"(residual rms {rms:.3g} nm): {exc}"
        ) from exc


def _dispersed_peak_weights(
    spec: SourceSpec, filters: Sequence[FilterSpec]
) -> tuple[float, float]:
    """Probability that the arm-1 (fiber) photon of a coincidence is signal/idler."""
    routes = routing_probabilities(spec, filters)
    w_signal = routes["signal_arm1_idler_arm2"]
    w_idler = routes["idler_arm1_signal_arm2"]
    total = w_signal + w_idler
    if total <= 0:
        raise InputError("filters block every coincidence routing")
    return w_signal / total, w_idler / total


def simulate_delay_histogram(
    spec: SourceSpec,
    curve: CalibrationCurve,
    jitter_ps: float,
    n_events: int,
    bin_ps: float,
    seed: int = 0,
    filters: Sequence[FilterSpec] = (),
) -> TimeHistogram:
    """Sample coincidence delays for a dispersed-arm measurement.

    Each event draws the fiber-arm photon (signal or idler, per filter
    routing), a wavelength from that photon's Gaussian line, maps it through
    the inverse calibration curve and adds Gaussian timing jitter. Events
    whose wavelength falls outside the calibrated range are dropped and
    counted. Fixed-size per-chunk substreams make the result independent of
    how chunks are scheduled.
    """
    if int(n_events) != n_events or n_events <= 0:
        raise InputError("n_events must be a positive integer")
    if jitter_ps < 0 or not math.isfinite(jitter_ps):
        raise InputError("jitter must be non-negative")
    if bin_ps <= 0 or not math.isfinite(bin_ps):
        raise InputError("bin width must be positive")
    w_signal, _ = _dispersed_peak_weights(spec, filters)
    centers = np.array([spec.signal_peak.center_nm, spec.idler_peak.center_nm])
    sigmas = np.array([spec.signal_peak.sigma_nm, spec.idler_peak.sigma_nm])
    jitter_ns = jitter_ps * 1e-3
    bin_ns = bin_ps * 1e-3

    delays = []
    n_dropped = 0
    for chunk_index, start in enumerate(range(0, int(n_events), _CHUNK)):
        m = min(_CHUNK, int(n_events) - start)
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=int(seed), spawn_key=(chunk_index,))
        )
        which = (rng.random(m) >= w_signal).astype(int)  # 0 = signal, 1 = idler
        wl = centers[which] + sigmas[which] * rng.standard_normal(m)
        jit = jitter_ns * rng.standard_normal(m)
        t, ok = curve.delays_for(wl)
        n_dropped += int(m - ok.sum())
        delays.append(t[ok] + jit[ok])
    kept = np.concatenate(delays) if delays else np.array([])
    if kept.size == 0:
        return TimeHistogram(bin_edges_ns=(), counts=(), n_dropped=n_dropped)
    k0 = math.floor(kept.min() / bin_ns)
    k1 = math.floor(kept.max() / bin_ns) + 1
    edges = np.arange(k0, k1 + 1) * bin_ns
    counts, _ = np.histogram(kept, bins=edges)
    return TimeHistogram(
        bin_edges_ns=tuple(edges), counts=tuple(int(c) for c in counts), n_dropped=n_dropped
    )


def invert_histogram(hist: TimeHistogram, curve: CalibrationCurve) -> Spectrum:
    """Map histogram bin edges through the calibration curve.

    Counts are carried over bin-for-bin, so totals are conserved exactly.
    Rejects histograms extending outside the calibrated delay domain.
    """
    if not hist.bin_edges_ns:
        return Spectrum(bin_edges_nm=(), counts=())
    edges = np.asarray(hist.bin_edges_ns)
    t0, t1 = curve.domain
    if edges.min() < t0 - 1e-9 or edges.max() > t1 + 1e-9:
        raise InputError("histogram bins extend outside the calibration domain")
    wl_edges = np.asarray(curve.wavelength_at(np.clip(edges, t0, t1)), dtype=float)
    counts = list(hist.counts)
    if not curve.increasing:
        wl_edges = wl_edges[::-1]
        counts = counts[::-1]
    return Spectrum(bin_edges_nm=tuple(wl_edges), counts=tuple(counts))


def resolution_estimate(
    curve: CalibrationCurve, jitter_ps: float, lambda_nm: float
) -> float:
    """Spectral FWHM (nm) set by timing jitter at a given wavelength."""
    if jitter_ps < 0:
        raise InputError("jitter must be non-negative")
    delay = curve.delay_at(lambda_nm)
    slope = curve.slope_at(delay)
    if abs(slope) < MIN_SLOPE_NM_PER_NS:
        raise InputError("calibration slope vanishes at the requested wavelength")
    return GAUSSIAN_FWHM * jitter_ps * 1e-3 * abs(slope)
