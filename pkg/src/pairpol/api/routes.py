"""HTTP endpoints wrapping the core pipeline."""

from __future__ import annotations

from fastapi import APIRouter

from ..coincidence import simulate_counts
from ..errors import InputError
from ..jones import single_protocol_settings, two_protocol_settings
from ..metrics import report_for
from ..presets import PRESETS, get_preset
from ..spectroscopy import fit_calibration, invert_histogram, resolution_estimate, simulate_delay_histogram
from ..tomography import (
    MleOptions,
    bootstrap_uncertainty,
    infer_mode,
    mle_reconstruct,
    problem_from_records,
)
from . import schemas

router = APIRouter()


@router.get("/health")
def health() -> dict:
    return {"status": "ok"}


@router.get("/presets")
def list_presets() -> list[str]:
    return sorted(PRESETS)


@router.get("/presets/{name}", response_model=schemas.SourceSpecModel)
def preset(name: str):
    return schemas.SourceSpecModel.from_core(get_preset(name))


@router.get("/protocols/{kind}", response_model=schemas.ProtocolResponse)
def protocol(kind: str):
    if kind not in ("single", "two"):
        raise InputError(f"protocol must be 'single' or 'two', got {kind!r}")
    settings = single_protocol_settings() if kind == "single" else two_protocol_settings()
    rows = [
        schemas.ProtocolRow(
            label=s.label,
            arm1=None if s.arm1 is None else schemas.WaveplateModel(hwp_deg=s.arm1.hwp_deg, qwp_deg=s.arm1.qwp_deg),
            arm2=None if s.arm2 is None else schemas.WaveplateModel(hwp_deg=s.arm2.hwp_deg, qwp_deg=s.arm2.qwp_deg),
        )
        for s in settings
    ]
    return schemas.ProtocolResponse(rows=rows)


def _resolve_spec(req) -> object:
    return get_preset(req.preset) if req.preset is not None else req.spec.to_core()


@router.post("/simulate", response_model=schemas.SimulateResponse)
def simulate(req: schemas.SimulateRequest):
    protocol = single_protocol_settings() if req.protocol == "single" else two_protocol_settings()
    records = simulate_counts(
        _resolve_spec(req),
        protocol,
        [f.to_core() for f in req.filters],
        integration_s=req.integration_s,
        seed=req.seed,
    )
    return schemas.SimulateResponse(records=[schemas.RecordModel.from_core(r) for r in records])


@router.post("/reconstruct", response_model=schemas.ReconstructResponse)
def reconstruct(req: schemas.ReconstructRequest):
    records = [r.to_core() for r in req.records]
    mode = req.mode if req.mode != "auto" else infer_mode(records)
    problem = problem_from_records(records, mode, background_rate_hz=req.background_rate_hz)
    options = MleOptions(fit_background=req.fit_background)
    rho, diagnostics = mle_reconstruct(problem, options)
    boot_model = None
    stds: dict = {}
    if req.bootstrap > 0:
        boot = bootstrap_uncertainty(problem, req.bootstrap, seed=req.seed, options=options)
        stds = boot.stds
        boot_model = schemas.BootstrapModel(**boot.to_dict())
    report = report_for(rho, stds=stds)
    return schemas.ReconstructResponse(
        rho=schemas.DensityMatrixModel.from_core(rho),
        mode=mode,
        diagnostics=schemas.DiagnosticsModel(**diagnostics.to_dict()),
        metrics=schemas.MetricsModel(**report.to_dict()),
        bootstrap=boot_model,
    )


@router.post("/metrics", response_model=schemas.MetricsModel)
def metrics(req: schemas.MetricsRequest):
    return schemas.MetricsModel(**report_for(req.rho.to_core()).to_dict())


@router.post("/spectroscopy/calibrate", response_model=schemas.CalibrationCurveModel)
def calibrate(req: schemas.CalibrateRequest):
    return schemas.CalibrationCurveModel.from_core(fit_calibration(req.points, degree=req.degree))


@router.post("/spectroscopy/simulate", response_model=schemas.HistogramModel)
def spectro_simulate(req: schemas.SpectroSimulateRequest):
    hist = simulate_delay_histogram(
        _resolve_spec(req),
        req.curve.to_core(),
        jitter_ps=req.jitter_ps,
        n_events=req.n_events,
        bin_ps=req.bin_ps,
        seed=req.seed,
        filters=[f.to_core() for f in req.filters],
    )
    return schemas.HistogramModel.from_core(hist)


@router.post("/spectroscopy/invert", response_model=schemas.SpectrumModel)
def spectro_invert(req: schemas.InvertRequest):
    return schemas.SpectrumModel.from_core(
        invert_histogram(req.histogram.to_core(), req.curve.to_core())
    )


@router.post("/spectroscopy/resolution")
def spectro_resolution(req: schemas.ResolutionRequest) -> dict:
    value = resolution_estimate(req.curve.to_core(), req.jitter_ps, req.lambda_nm)
    return {"resolution_nm": value}
