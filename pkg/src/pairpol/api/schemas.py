"""Pydantic request/response models mirroring the core dataclasses."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field, model_validator

from ..coincidence import CountRecord, FilterSpec
from ..jones import JonesVector, ProjectionSetting, WaveplateSetting
from ..linalg import DensityMatrix
from ..source import SourceSpec, SpectralPeak
from ..spectroscopy import CalibrationCurve, Spectrum, TimeHistogram

ComplexPair = tuple[float, float]


class DensityMatrixModel(BaseModel):
    dim: Literal[2, 4]
    entries: list[ComplexPair]

    @classmethod
    def from_core(cls, rho: DensityMatrix) -> "DensityMatrixModel":
        d = rho.to_dict()
        return cls(dim=d["dim"], entries=[tuple(e) for e in d["entries"]])

    def to_core(self) -> DensityMatrix:
        return DensityMatrix.from_dict({"dim": self.dim, "entries": list(self.entries)})


class SpectralPeakModel(BaseModel):
    center_nm: float
    fwhm_nm: float = 0.0


class SourceSpecModel(BaseModel):
    pump_nm: float
    pair_rate_hz: float
    signal_peak: SpectralPeakModel
    signal_pol: tuple[ComplexPair, ComplexPair]
    idler_peak: SpectralPeakModel
    idler_mode1: tuple[ComplexPair, ComplexPair]
    idler_mode2: tuple[ComplexPair, ComplexPair]
    idler_weight1: float
    arm_efficiency: tuple[float, float] = (1.0, 1.0)
    background_rate_hz: float = 0.0
    idler_coherence: float = 0.0

    @classmethod
    def from_core(cls, spec: SourceSpec) -> "SourceSpecModel":
        return cls.model_validate(spec.to_dict())

    def to_core(self) -> SourceSpec:
        def jones(pair) -> JonesVector:
            (ar, ai), (br, bi) = pair
            return JonesVector(complex(ar, ai), complex(br, bi))

        return SourceSpec(
            pump_nm=self.pump_nm,
            pair_rate_hz=self.pair_rate_hz,
            signal_peak=SpectralPeak(**self.signal_peak.model_dump()),
            signal_pol=jones(self.signal_pol),
            idler_peak=SpectralPeak(**self.idler_peak.model_dump()),
            idler_mode1=jones(self.idler_mode1),
            idler_mode2=jones(self.idler_mode2),
            idler_weight1=self.idler_weight1,
            arm_efficiency=self.arm_efficiency,
            background_rate_hz=self.background_rate_hz,
            idler_coherence=self.idler_coherence,
        )


class FilterModel(BaseModel):
    kind: Literal["longpass", "bandpass"]
    placement: Literal["before_splitter", "arm1", "arm2"] = "before_splitter"
    cut_on_nm: Optional[float] = None
    center_nm: Optional[float] = None
    fwhm_nm: Optional[float] = None

    def to_core(self) -> FilterSpec:
        return FilterSpec(
            kind=self.kind,
            placement=self.placement,
            cut_on_nm=self.cut_on_nm,
            center_nm=self.center_nm,
            fwhm_nm=self.fwhm_nm,
        )


class WaveplateModel(BaseModel):
    hwp_deg: float
    qwp_deg: float

    def to_core(self) -> WaveplateSetting:
        return WaveplateSetting(self.hwp_deg, self.qwp_deg)


class RecordModel(BaseModel):
    label: str
    arm1: Optional[WaveplateModel] = None
    arm2: Optional[WaveplateModel] = None
    integration_s: float = 1.0
    coincidences: int = Field(ge=0)
    singles_arm1: Optional[int] = Field(default=None, ge=0)
    singles_arm2: Optional[int] = Field(default=None, ge=0)

    @classmethod
    def from_core(cls, r: CountRecord) -> "RecordModel":
        def wp(w: Optional[WaveplateSetting]) -> Optional[WaveplateModel]:
            return None if w is None else WaveplateModel(hwp_deg=w.hwp_deg, qwp_deg=w.qwp_deg)

        return cls(
            label=r.label,
            arm1=wp(r.setting.arm1),
            arm2=wp(r.setting.arm2),
            integration_s=r.integration_s,
            coincidences=r.coincidences,
            singles_arm1=r.singles_arm1,
            singles_arm2=r.singles_arm2,
        )

    def to_core(self) -> CountRecord:
        return CountRecord(
            label=self.label,
            setting=ProjectionSetting(
                label=self.label,
                arm1=self.arm1.to_core() if self.arm1 else None,
                arm2=self.arm2.to_core() if self.arm2 else None,
            ),
            integration_s=self.integration_s,
            coincidences=self.coincidences,
            singles_arm1=self.singles_arm1,
            singles_arm2=self.singles_arm2,
        )


class SimulateRequest(BaseModel):
    spec: Optional[SourceSpecModel] = None
    preset: Optional[str] = None
    protocol: Literal["single", "two"] = "two"
    filters: list[FilterModel] = Field(default_factory=list)
    integration_s: float = 1.0
    seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.spec is None) == (self.preset is None):
            raise ValueError("provide exactly one of 'spec' or 'preset'")
        return self


class SimulateResponse(BaseModel):
    records: list[RecordModel]


class ProtocolRow(BaseModel):
    label: str
    arm1: Optional[WaveplateModel] = None
    arm2: Optional[WaveplateModel] = None


class ProtocolResponse(BaseModel):
    rows: list[ProtocolRow]


class MetricsModel(BaseModel):
    purity: float
    stokes: Optional[list[float]] = None
    dop: Optional[float] = None
    concurrence: Optional[float] = None
    eof: Optional[float] = None
    stds: dict[str, float] = Field(default_factory=dict)


class DiagnosticsModel(BaseModel):
    log_likelihood: float
    iterations: int
    converged: bool
    n_starts: int
    scale: float
    background_rate_hz: float


class ReconstructRequest(BaseModel):
    records: list[RecordModel]
    mode: Literal["auto", "heralded_single", "two_photon"] = "auto"
    background_rate_hz: float = 0.0
    fit_background: bool = False
    bootstrap: int = Field(default=0, ge=0)
    seed: int = Field(default=0, ge=0, lt=2**64)


class BootstrapModel(BaseModel):
    stds: dict[str, float]
    n_resamples: int
    n_failed: int


class ReconstructResponse(BaseModel):
    rho: DensityMatrixModel
    mode: str
    diagnostics: DiagnosticsModel
    metrics: MetricsModel
    bootstrap: Optional[BootstrapModel] = None


class MetricsRequest(BaseModel):
    rho: DensityMatrixModel


class CalibrationCurveModel(BaseModel):
    coefficients: list[float]
    domain: tuple[float, float]
    residual_rms: Optional[float] = None

    @classmethod
    def from_core(cls, curve: CalibrationCurve) -> "CalibrationCurveModel":
        return cls.model_validate(curve.to_dict())

    def to_core(self) -> CalibrationCurve:
        return CalibrationCurve(
            coefficients=tuple(self.coefficients),
            domain=self.domain,
            residual_rms=self.residual_rms,
        )


class CalibrateRequest(BaseModel):
    points: list[tuple[float, float]]
    degree: int = 3


class HistogramModel(BaseModel):
    bin_edges_ns: list[float]
    counts: list[int]
    n_dropped: int = 0

    @classmethod
    def from_core(cls, hist: TimeHistogram) -> "HistogramModel":
        return cls(
            bin_edges_ns=list(hist.bin_edges_ns),
            counts=list(hist.counts),
            n_dropped=hist.n_dropped,
        )

    def to_core(self) -> TimeHistogram:
        return TimeHistogram(
            bin_edges_ns=tuple(self.bin_edges_ns),
            counts=tuple(self.counts),
            n_dropped=self.n_dropped,
        )


class SpectroSimulateRequest(BaseModel):
    spec: Optional[SourceSpecModel] = None
    preset: Optional[str] = None
    curve: CalibrationCurveModel
    jitter_ps: float = 50.0
    n_events: int = Field(default=100_000, gt=0)
    bin_ps: float = 50.0
    seed: int = Field(default=0, ge=0, lt=2**64)
    filters: list[FilterModel] = Field(default_factory=list)

    @model_validator(mode="after")
    def _one_source(self):
        if (self.spec is None) == (self.preset is None):
            raise ValueError("provide exactly one of 'spec' or 'preset'")
        return self


class InvertRequest(BaseModel):
    histogram: HistogramModel
    curve: CalibrationCurveModel


class SpectrumModel(BaseModel):
    bin_edges_nm: list[float]
    counts: list[int]

    @classmethod
    def from_core(cls, s: Spectrum) -> "SpectrumModel":
        return cls(bin_edges_nm=list(s.bin_edges_nm), counts=list(s.counts))


class ResolutionRequest(BaseModel):
    curve: CalibrationCurveModel
    jitter_ps: float
    lambda_nm: float
