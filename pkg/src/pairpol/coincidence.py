"""Coincidence counting through the Hanbury Brown-Twiss apparatus.

The pair hits a 50:50 non-polarizing splitter; each photon independently
picks an arm, so of the four routings only the two that put one photon in
each arm can produce a coincidence (1/4 probability each before filtering).
Spectral filters gate the routings by photon wavelength, which is how the
frequency-nondegenerate pair is deterministically separated in the
heralded configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import InputError
from .jones import ProjectionSetting, projector_from_setting
from .linalg import DensityMatrix
from .source import SourceSpec, build_two_photon_state

PLACEMENTS = ("before_splitter", "arm1", "arm2")

_SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)


@dataclass(frozen=True)
class FilterSpec:
    """Ideal-edged spectral filter at one of three positions in the setup."""

    kind: str  # "longpass" | "bandpass"
    placement: str
    cut_on_nm: Optional[float] = None
    center_nm: Optional[float] = None
    fwhm_nm: Optional[float] = None

    def __post_init__(self):
        if self.placement not in PLACEMENTS:
            raise InputError(f"placement must be one of {PLACEMENTS}, got {self.placement!r}")
        if self.kind == "longpass":
            if self.cut_on_nm is None or self.cut_on_nm <= 0:
                raise InputError("longpass filter needs a positive cut_on_nm")
        elif self.kind == "bandpass":
            if self.center_nm is None or self.center_nm <= 0:
                raise InputError("bandpass filter needs a positive center_nm")
            if self.fwhm_nm is None or self.fwhm_nm <= 0:
                raise InputError("bandpass filter needs a positive fwhm_nm")
        else:
            raise InputError(f"unknown filter kind {self.kind!r}")

    @classmethod
    def longpass(cls, cut_on_nm: float, placement: str = "before_splitter") -> "FilterSpec":
        return cls(kind="longpass", placement=placement, cut_on_nm=cut_on_nm)

    @classmethod
    def bandpass(
        cls, center_nm: float, fwhm_nm: float, placement: str = "before_splitter"
    ) -> "FilterSpec":
        return cls(kind="bandpass", placement=placement, center_nm=center_nm, fwhm_nm=fwhm_nm)


def filter_transmission(lambda_nm: float, f: FilterSpec) -> float:
    """Ideal step-edge transmission: 1 inside the passband, 0 outside."""
    if not (lambda_nm > 0 and math.isfinite(lambda_nm)):
        raise InputError("wavelength must be positive")
    if f.kind == "longpass":
        return 1.0 if lambda_nm >= f.cut_on_nm else 0.0
    return 1.0 if abs(lambda_nm - f.center_nm) <= f.fwhm_nm / 2.0 else 0.0


@dataclass(frozen=True)
class CountRecord:
    """One projection setting with its integration time and counts."""

    label: str
    setting: ProjectionSetting
    integration_s: float
    coincidences: int
    singles_arm1: Optional[int] = None
    singles_arm2: Optional[int] = None

    def __post_init__(self):
        if not (self.integration_s > 0 and math.isfinite(self.integration_s)):
            raise InputError("integration time must be positive")
        for name in ("coincidences", "singles_arm1", "singles_arm2"):
            v = getattr(self, name)
            if v is None:
                continue
            if int(v) != v or v < 0:
                raise InputError(f"{name} must be a non-negative integer, got {v!r}")
            object.__setattr__(self, name, int(v))


def _path_transmission(lambda_nm: float, arm: str, filters: Sequence[FilterSpec]) -> float:
    t = 1.0
    for f in filters:
        if f.placement == "before_splitter" or f.placement == arm:
            t *= filter_transmission(lambda_nm, f)
    return t


def routing_probabilities(
    spec: SourceSpec, filters: Sequence[FilterSpec]
) -> dict[str, float]:
    """Survival probability of each splitter routing, filters included.

    Keys name the routing by arm content, e.g. "signal_arm1_idler_arm2".
    Each photon takes either arm with probability 1/2; the same-arm
    routings never yield a coincidence but are reported for bookkeeping.
    """
    ls = spec.signal_peak.center_nm
    li = spec.idler_peak.center_nm
    t = {
        ("signal", "arm1"): _path_transmission(ls, "arm1", filters),
        ("signal", "arm2"): _path_transmission(ls, "arm2", filters),
        ("idler", "arm1"): _path_transmission(li, "arm1", filters),
        ("idler", "arm2"): _path_transmission(li, "arm2", filters),
    }
    return {
        "signal_arm1_idler_arm2": 0.25 * t[("signal", "arm1")] * t[("idler", "arm2")],
        "idler_arm1_signal_arm2": 0.25 * t[("idler", "arm1")] * t[("signal", "arm2")],
        "both_arm1": 0.25 * t[("signal", "arm1")] * t[("idler", "arm1")],
        "both_arm2": 0.25 * t[("signal", "arm2")] * t[("idler", "arm2")],
    }


def arm_ordered_state(
    spec: SourceSpec,
    filters: Sequence[FilterSpec],
    state: Optional[DensityMatrix] = None,
) -> tuple[DensityMatrix, float]:
    """Effective (arm1, arm2)-ordered state and the coincidence routing weight.

    The source state is (signal, idler)-ordered; which photon lands in which
    arm is decided by the splitter and the filters, so the state seen by the
    analyzers is the routing-weighted mixture of the two orderings.
    """
    rho = (state if state is not None else build_two_photon_state(spec)).matrix
    routes = routing_probabilities(spec, filters)
    p_si = routes["signal_arm1_idler_arm2"]
    p_is = routes["idler_arm1_signal_arm2"]
    p_route = p_si + p_is
    if p_route <= 0.0:
        raise InputError("filters block every coincidence routing")
    mixed = (p_si * rho + p_is * (_SWAP @ rho @ _SWAP)) / p_route
    return DensityMatrix(mixed), p_route


def _arm_projectors(setting: ProjectionSetting) -> tuple[np.ndarray, np.ndarray]:
    eye = np.eye(2, dtype=complex)
    p1 = eye if setting.arm1 is None else projector_from_setting(setting.arm1).projector()
    p2 = eye if setting.arm2 is None else projector_from_setting(setting.arm2).projector()
    return p1, p2


def projection_probability(rho: DensityMatrix, setting: ProjectionSetting) -> float:
    """Tr[(Pi_1 x Pi_2) rho] with the identity on any unconfigured arm."""
    if rho.dim != 4:
        raise InputError("projection_probability expects the two-photon state")
    p1, p2 = _arm_projectors(setting)
    val = np.trace(np.kron(p1, p2) @ rho.matrix).real
    return float(min(max(val, 0.0), 1.0))


def expected_coincidence_rate(
    spec: SourceSpec,
    setting: ProjectionSetting,
    filters: Sequence[FilterSpec] = (),
    state: Optional[DensityMatrix] = None,
) -> float:
    """Coincidence rate in 1/s for one projection setting.

    rate = pair_rate * P_route * eta1 * eta2 * P_proj + background_rate.
    Pass `state` to override the polarization state built from the spec
    (wavelength routing still follows the spec).
    """
    rho_arms, p_route = arm_ordered_state(spec, filters, state)
    eta1, eta2 = spec.arm_efficiency
    p_proj = projection_probability(rho_arms, setting)
    return spec.pair_rate_hz * p_route * eta1 * eta2 * p_proj + spec.background_rate_hz


def _reduced_states(spec: SourceSpec, state: Optional[DensityMatrix]):
    from .linalg import partial_trace
    from .source import idler_state

    if state is not None:
        return partial_trace(state, 1), partial_trace(state, 2)
    return DensityMatrix(spec.signal_pol.projector()), idler_state(spec)


def expected_singles_rates(
    spec: SourceSpec,
    setting: ProjectionSetting,
    filters: Sequence[FilterSpec] = (),
    state: Optional[DensityMatrix] = None,
) -> tuple[float, float]:
    """Pair-derived singles rate per arm (no background; it is a coincidence-level quantity)."""
    sig_red, idl_red = _reduced_states(spec, state)
    reduced = {"signal": sig_red.matrix, "idler": idl_red.matrix}
    wl = {"signal": spec.signal_peak.center_nm, "idler": spec.idler_peak.center_nm}
    p1, p2 = _arm_projectors(setting)
    proj = {"arm1": p1, "arm2": p2}
    rates = []
    for arm, eta in zip(("arm1", "arm2"), spec.arm_efficiency):
        r = 0.0
        for photon in ("signal", "idler"):
            t = 0.5 * _path_transmission(wl[photon], arm, filters)
            pass_prob = np.trace(proj[arm] @ reduced[photon]).real
            r += spec.pair_rate_hz * eta * t * pass_prob
        rates.append(float(r))
    return rates[0], rates[1]


def accidental_rate(
    singles_arm1_hz: float, singles_arm2_hz: float, window_ns: float
) -> float:
    """Uncorrelated-coincidence rate R1*R2*tau for a timing window tau."""
    if window_ns < 0:
        raise InputError("coincidence window must be non-negative")
    return singles_arm1_hz * singles_arm2_hz * window_ns * 1e-9


def _record_rng(seed: int, index: int) -> np.random.Generator:
    # per-record stream: records can be evaluated in any order or in parallel
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(index,)))


def simulate_counts(
    spec: SourceSpec,
    protocol: Sequence[ProjectionSetting],
    filters: Sequence[FilterSpec] = (),
    integration_s: float = 1.0,
    seed: int = 0,
    state: Optional[DensityMatrix] = None,
    coincidence_window_ns: Optional[float] = None,
) -> list[CountRecord]:
    """Poisson-sample a coincidence run over a projection protocol.

    Identical inputs reproduce identical records bit for bit. By default the
    accidental contribution is the flat spec.background_rate_hz; passing
    coincidence_window_ns switches to the derived R1*R2*tau model instead.
    """
    if not (integration_s > 0 and math.isfinite(integration_s)):
        raise InputError("integration time must be positive")
    records = []
    for index, setting in enumerate(protocol):
        rate = expected_coincidence_rate(spec, setting, filters, state)
        s1, s2 = expected_singles_rates(spec, setting, filters, state)
        if coincidence_window_ns is not None:
            rate = rate - spec.background_rate_hz + accidental_rate(s1, s2, coincidence_window_ns)
        rng = _record_rng(seed, index)
        coinc = int(rng.poisson(rate * integration_s))
        n1 = int(rng.poisson(s1 * integration_s))
        n2 = int(rng.poisson(s2 * integration_s))
        records.append(
            CountRecord(
                label=setting.label,
                setting=setting,
                integration_s=float(integration_s),
                coincidences=coinc,
                singles_arm1=n1,
                singles_arm2=n2,
            )
        )
    return records


def simulate_state_counts(
    rho: DensityMatrix,
    protocol: Sequence[ProjectionSetting],
    scale: float,
    seed: int = 0,
    background: float = 0.0,
) -> list[CountRecord]:
    """Sample counts directly from an (arm1, arm2)-ordered state.

    Bypasses the source/routing model: the expected count for setting nu is
    scale * Tr[(Pi_1 x Pi_2) rho] + background. Useful for tomography
    round trips on arbitrary states.
    """
    if rho.dim != 4:
        raise InputError("simulate_state_counts expects a two-photon state")
    if not (scale >= 0 and math.isfinite(scale)):
        raise InputError("scale must be non-negative")
    records = []
    for index, setting in enumerate(protocol):
        lam = scale * projection_probability(rho, setting) + background
        rng = _record_rng(seed, index)
        records.append(
            CountRecord(
                label=setting.label,
                setting=setting,
                integration_s=1.0,
                coincidences=int(rng.poisson(lam)),
            )
        )
    return records
