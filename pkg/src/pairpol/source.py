"""Photon-pair source model: two-photon polarization state and spectral lines.

The signal photon carries the resonant mode's pure polarization; the idler
populates two orthogonal low-Q modes and has decohered into a (by default
fully incoherent) mixture by the time the signal photon leaves the resonator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .jones import JonesVector
from .linalg import DensityMatrix, tensor_product

WAVELENGTH_MATCH_TOL_NM = 0.5
MODE_ORTHOGONALITY_TOL = 1e-8


def conjugate_wavelength(pump_nm: float, signal_nm: float) -> float:
    """Idler wavelength paired with a signal photon by energy conservation."""
    if not (pump_nm > 0 and math.isfinite(pump_nm) and math.isfinite(signal_nm)):
        raise InputError("wavelengths must be positive and finite")
    if signal_nm <= pump_nm:
        raise InputError(
            f"signal wavelength {signal_nm} nm must exceed the pump {pump_nm} nm"
        )
    return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm)


@dataclass(frozen=True)
class SpectralPeak:
    """Gaussian emission line: center wavelength and FWHM, both in nm."""

    center_nm: float
    fwhm_nm: float = 0.0

    def __post_init__(self):
        if not (self.center_nm > 0 and math.isfinite(self.center_nm)):
            raise InputError(f"peak center must be positive, got {self.center_nm!r}")
        if not (self.fwhm_nm >= 0 and math.isfinite(self.fwhm_nm)):
            raise InputError(f"peak FWHM must be non-negative, got {self.fwhm_nm!r}")

    @property
    def sigma_nm(self) -> float:
        return self.fwhm_nm / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class SourceSpec:
    """Full description of one SPDC pair source.

    idler_weight1 is the population |alpha|^2 of the first idler mode;
    idler_coherence scales the residual cross term between the two modes
    (0 = fully decohered mixture, the default).
    """

    pump_nm: float
    pair_rate_hz: float
    signal_peak: SpectralPeak
    signal_pol: JonesVector
    idler_peak: SpectralPeak
    idler_mode1: JonesVector
    idler_mode2: JonesVector
    idler_weight1: float
    arm_efficiency: tuple[float, float] = (1.0, 1.0)
    background_rate_hz: float = 0.0
    idler_coherence: float = 0.0

    def __post_init__(self):
        if not (self.pump_nm > 0 and math.isfinite(self.pump_nm)):
            raise InputError("pump wavelength must be positive")
        if not (self.pair_rate_hz >= 0 and math.isfinite(self.pair_rate_hz)):
            raise InputError("pair rate must be non-negative")
        expected = conjugate_wavelength(self.pump_nm, self.signal_peak.center_nm)
        if abs(expected - self.idler_peak.center_nm) > WAVELENGTH_MATCH_TOL_NM:
            raise InputError(
                f"idler center {self.idler_peak.center_nm} nm violates energy "
                f"conservation (expected {expected:.1f} nm)"
            )
        if abs(self.idler_mode1.overlap(self.idler_mode2)) > MODE_ORTHOGONALITY_TOL:
            raise InputError("idler modes must be orthogonal")
        if not 0.0 <= self.idler_weight1 <= 1.0:
            raise InputError(f"idler_weight1 must lie in [0, 1], got {self.idler_weight1!r}")
        eta1, eta2 = self.arm_efficiency
        if not (0.0 <= eta1 <= 1.0 and 0.0 <= eta2 <= 1.0):
            raise InputError("arm efficiencies must lie in [0, 1]")
        if not (self.background_rate_hz >= 0 and math.isfinite(self.background_rate_hz)):
            raise InputError("background rate must be non-negative")
        if not 0.0 <= self.idler_coherence <= 1.0:
            raise InputError("idler_coherence must lie in [0, 1]")
        object.__setattr__(self, "arm_efficiency", (float(eta1), float(eta2)))

    @property
    def idler_weight2(self) -> float:
        return 1.0 - self.idler_weight1

    def to_dict(self) -> dict:
        def jones(v: JonesVector) -> list:
            return [[v.alpha.real, v.alpha.imag], [v.beta.real, v.beta.imag]]

        return {
            "pump_nm": self.pump_nm,
            "pair_rate_hz": self.pair_rate_hz,
            "signal_peak": {"center_nm": self.signal_peak.center_nm, "fwhm_nm": self.signal_peak.fwhm_nm},
            "signal_pol": jones(self.signal_pol),
            "idler_peak": {"center_nm": self.idler_peak.center_nm, "fwhm_nm": self.idler_peak.fwhm_nm},
            "idler_mode1": jones(self.idler_mode1),
            "idler_mode2": jones(self.idler_mode2),
            "idler_weight1": self.idler_weight1,
            "arm_efficiency": list(self.arm_efficiency),
            "background_rate_hz": self.background_rate_hz,
            "idler_coherence": self.idler_coherence,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SourceSpec":
        def jones(entry) -> JonesVector:
            (ar, ai), (br, bi) = entry
            return JonesVector(complex(ar, ai), complex(br, bi))

        try:
            return cls(
                pump_nm=float(d["pump_nm"]),
                pair_rate_hz=float(d["pair_rate_hz"]),
                signal_peak=SpectralPeak(**d["signal_peak"]),
                signal_pol=jones(d["signal_pol"]),
                idler_peak=SpectralPeak(**d["idler_peak"]),
                idler_mode1=jones(d["idler_mode1"]),
                idler_mode2=jones(d["idler_mode2"]),
                idler_weight1=float(d["idler_weight1"]),
                arm_efficiency=tuple(d.get("arm_efficiency", (1.0, 1.0))),
                background_rate_hz=float(d.get("background_rate_hz", 0.0)),
                idler_coherence=float(d.get("idler_coherence", 0.0)),
            )
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed source spec: {exc}") from exc


def idler_state(spec: SourceSpec) -> DensityMatrix:
    """Idler polarization state: weighted mixture of the two low-Q modes."""
    p1 = spec.idler_mode1.projector()
    p2 = spec.idler_mode2.projector()
    rho = spec.idler_weight1 * p1 + spec.idler_weight2 * p2
    if spec.idler_coherence > 0.0:
        cross = spec.idler_coherence * math.sqrt(spec.idler_weight1 * spec.idler_weight2)
        v1, v2 = spec.idler_mode1.ket, spec.idler_mode2.ket
        off = np.outer(v1, v2.conj())
        rho = rho + cross * (off + off.conj().T)
    return DensityMatrix(rho)


def build_two_photon_state(spec: SourceSpec) -> DensityMatrix:
    """Separable two-photon state: pure signal polarization x idler mixture.

    Ordering is (signal, idler); detection-arm assignment happens later in
    the coincidence model, driven by the spectral filters.
    """
    signal = DensityMatrix(spec.signal_pol.projector())
    return tensor_product(signal, idler_state(spec))
