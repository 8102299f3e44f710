"""Built-in example source specifications.

Two quasi-BIC metasurface pair sources, one driven by a magnetic-dipole
resonance (qom-a) and one by an electric-dipole resonance (qom-b). Mode
polarizations, mixture weights, rates and efficiencies are calibration
inputs chosen to hit the target purity scales, not measured values.
"""

from __future__ import annotations

from .errors import InputError
from .jones import canonical_state
from .source import SourceSpec, SpectralPeak

# idler weights solving w^2 + (1-w)^2 = target reduced-state purity
QOM_A_IDLER_WEIGHT = 0.887    # purity 0.80
QOM_B_IDLER_WEIGHT = 0.832    # purity 0.72


def qom_a() -> SourceSpec:
    """Magnetic-dipole resonance source: H-polarized signal at 1527.7 nm."""
    return SourceSpec(
        pump_nm=788.4,
        pair_rate_hz=5e4,
        signal_peak=SpectralPeak(center_nm=1527.7, fwhm_nm=2.0),
        signal_pol=canonical_state("H"),
        idler_peak=SpectralPeak(center_nm=1629.2, fwhm_nm=8.0),
        idler_mode1=canonical_state("H"),
        idler_mode2=canonical_state("V"),
        idler_weight1=QOM_A_IDLER_WEIGHT,
        arm_efficiency=(0.3, 0.3),
        background_rate_hz=0.5,
    )


def qom_b() -> SourceSpec:
    """Electric-dipole resonance source: D-polarized signal at 1484.0 nm."""
    return SourceSpec(
        pump_nm=788.4,
        pair_rate_hz=3e4,
        signal_peak=SpectralPeak(center_nm=1484.0, fwhm_nm=2.5),
        signal_pol=canonical_state("D"),
        idler_peak=SpectralPeak(center_nm=1682.0, fwhm_nm=9.0),
        idler_mode1=canonical_state("H"),
        idler_mode2=canonical_state("V"),
        idler_weight1=QOM_B_IDLER_WEIGHT,
        arm_efficiency=(0.3, 0.3),
        background_rate_hz=0.5,
    )


PRESETS = {"qom-a": qom_a, "qom-b": qom_b}


def get_preset(name: str) -> SourceSpec:
    key = name.lower()
    if key not in PRESETS:
        raise InputError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return PRESETS[key]()
