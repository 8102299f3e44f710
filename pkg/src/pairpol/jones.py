"""Jones calculus for the projection optics.

Sign conventions are fixed here once and inherited by every other module:
right-circular is R = (1, -i)/sqrt(2) in the H/V basis, the quarter-wave
plate retards the slow axis by +90 degrees (diag(1, i) at zero rotation),
and the analyzer chain is QWP -> HWP -> PBS with the detector on the
transmitted H port. Under these choices the published waveplate-angle
tables map onto their labels exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError

CANONICAL_LABELS = ("H", "V", "D", "A", "R", "L")

_SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class JonesVector:
    """Normalized two-component polarization state (amplitudes of |H>, |V>)."""

    alpha: complex
    beta: complex

    def __post_init__(self):
        a, b = complex(self.alpha), complex(self.beta)
        if not (np.isfinite(a) and np.isfinite(b)):
            raise InputError("Jones vector amplitudes must be finite")
        norm2 = abs(a) ** 2 + abs(b) ** 2
        if abs(norm2 - 1.0) > 1e-10:
            raise InputError(f"Jones vector must be normalized, |alpha|^2+|beta|^2 = {norm2!r}")
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "beta", b)

    @classmethod
    def from_components(cls, alpha: complex, beta: complex) -> "JonesVector":
        """Build from unnormalized amplitudes."""
        norm = math.sqrt(abs(alpha) ** 2 + abs(beta) ** 2)
        if norm == 0:
            raise InputError("cannot normalize the zero vector")
        return cls(alpha / norm, beta / norm)

    @property
    def ket(self) -> np.ndarray:
        return np.array([self.alpha, self.beta], dtype=complex)

    def projector(self) -> np.ndarray:
        v = self.ket
        return np.outer(v, v.conj())

    def overlap(self, other: "JonesVector") -> complex:
        """Inner product <self|other>."""
        return complex(np.vdot(self.ket, other.ket))


def canonical_state(label: str) -> JonesVector:
    """One of the six analysis states H, V, D, A, R, L."""
    table = {
        "H": (1.0, 0.0),
        "V": (0.0, 1.0),
        "D": (1.0 / _SQRT2, 1.0 / _SQRT2),
        "A": (1.0 / _SQRT2, -1.0 / _SQRT2),
        "R": (1.0 / _SQRT2, -1j / _SQRT2),
        "L": (1.0 / _SQRT2, 1j / _SQRT2),
    }
    try:
        a, b = table[label]
    except KeyError:
        raise InputError(f"unknown polarization label {label!r}") from None
    return JonesVector(a, b)


def _canonical_angle(theta_deg: float) -> float:
    """Fold a fast-axis angle into (-90, 90]; waveplates are 180-degree periodic."""
    if not math.isfinite(theta_deg):
        raise InputError(f"waveplate angle must be finite, got {theta_deg!r}")
    t = math.fmod(theta_deg, 180.0)
    if t > 90.0:
        t -= 180.0
    elif t <= -90.0:
        t += 180.0
    return t


@dataclass(frozen=True)
class WaveplateSetting:
    """Fast-axis angles (degrees) of the half- and quarter-wave plates."""

    hwp_deg: float
    qwp_deg: float

    def __post_init__(self):
        object.__setattr__(self, "hwp_deg", _canonical_angle(float(self.hwp_deg)))
        object.__setattr__(self, "qwp_deg", _canonical_angle(float(self.qwp_deg)))


@dataclass(frozen=True)
class ProjectionSetting:
    """Waveplate settings per detection arm; an unset arm detects without projecting."""

    label: str
    arm1: Optional[WaveplateSetting] = None
    arm2: Optional[WaveplateSetting] = None

    def __post_init__(self):
        if self.arm1 is None and self.arm2 is None:
            raise InputError("projection setting must configure at least one arm")


def _rotation(theta_rad: float) -> np.ndarray:
    c, s = math.cos(theta_rad), math.sin(theta_rad)
    return np.array([[c, -s], [s, c]], dtype=complex)


def hwp_jones(theta_deg: float) -> np.ndarray:
    """Jones matrix of a half-wave plate with fast axis at theta_deg."""
    if not math.isfinite(theta_deg):
        raise InputError("waveplate angle must be finite")
    t = math.radians(theta_deg)
    r = _rotation(t)
    return r @ np.diag([1.0 + 0j, -1.0 + 0j]) @ r.conj().T


def qwp_jones(theta_deg: float) -> np.ndarray:
    """Jones matrix of a quarter-wave plate with fast axis at theta_deg."""
    if not math.isfinite(theta_deg):
        raise InputError("waveplate angle must be finite")
    t = math.radians(theta_deg)
    r = _rotation(t)
    return r @ np.diag([1.0 + 0j, 1j]) @ r.conj().T


def projector_from_setting(s: WaveplateSetting) -> JonesVector:
    """Polarization state transmitted to the detector for a waveplate setting.

    Back-propagates the PBS H port through the HWP and then the QWP, i.e.
    the state |pi> with <H| U_hwp U_qwp |pi> of unit modulus.
    """
    h = np.array([1.0, 0.0], dtype=complex)
    ket = qwp_jones(s.qwp_deg).conj().T @ hwp_jones(s.hwp_deg).conj().T @ h
    return JonesVector.from_components(ket[0], ket[1])


# published single-photon settings: label -> (hwp_deg, qwp_deg)
_SINGLE_ROWS = (
    ("H", 0.0, 0.0),
    ("V", 45.0, 0.0),
    ("D", 22.5, 45.0),
    ("A", -22.5, 45.0),
    ("R", 0.0, -45.0),
    ("L", 0.0, 45.0),
)

# published two-photon settings: label -> per-arm single-photon rows
_TWO_ROWS = (
    "H-H", "H-V", "V-H", "V-V",
    "H-D", "H-R", "V-A", "V-L",
    "D-H", "R-H", "A-V", "L-V",
    "D-D", "R-R", "D-R", "R-D",
)


def _single_setting(label: str) -> WaveplateSetting:
    for lab, hwp, qwp in _SINGLE_ROWS:
        if lab == label:
            return WaveplateSetting(hwp, qwp)
    raise InputError(f"no waveplate setting for label {label!r}")


def protocol_single() -> list[tuple[str, WaveplateSetting]]:
    """The six heralded single-photon projections (analysis optics in arm 2)."""
    return [(lab, WaveplateSetting(hwp, qwp)) for lab, hwp, qwp in _SINGLE_ROWS]


def protocol_two() -> list[tuple[str, ProjectionSetting]]:
    """The sixteen two-photon projections, arm 1 and arm 2 both configured."""
    out = []
    for label in _TWO_ROWS:
        a, b = label.split("-")
        out.append(
            (label, ProjectionSetting(label=label, arm1=_single_setting(a), arm2=_single_setting(b)))
        )
    return out


def single_protocol_settings() -> list[ProjectionSetting]:
    """protocol_single() as arm-2 ProjectionSettings, ready for the simulator."""
    return [ProjectionSetting(label=lab, arm2=wp) for lab, wp in protocol_single()]


def two_protocol_settings() -> list[ProjectionSetting]:
    return [setting for _, setting in protocol_two()]


def protocol_table(settings: list[ProjectionSetting]) -> str:
    """Render settings as a delimited table; unconfigured arm columns stay empty.

    Columns: label, hwp1_deg, qwp1_deg, hwp2_deg, qwp2_deg.
    """
    lines = ["label\thwp1_deg\tqwp1_deg\thwp2_deg\tqwp2_deg"]
    for s in settings:
        a1 = ("", "") if s.arm1 is None else (repr(s.arm1.hwp_deg), repr(s.arm1.qwp_deg))
        a2 = ("", "") if s.arm2 is None else (repr(s.arm2.hwp_deg), repr(s.arm2.qwp_deg))
        lines.append("\t".join([s.label, a1[0], a1[1], a2[0], a2[1]]))
    return "\n".join(lines) + "\n"
