"""Density-matrix reconstruction from projection counts.

Two estimators share one problem description: a direct Stokes/least-squares
inversion (fast, possibly unphysical under noise) and a maximum-likelihood
fit over a Cholesky-parameterized state (always physical). The likelihood
is Poisson in the counts with the overall flux profiled out analytically,
matching the count simulator's noise model exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .coincidence import CountRecord
from .errors import InputError
from .jones import canonical_state, projector_from_setting, CANONICAL_LABELS
from .linalg import DensityMatrix, hermitian_eigen
from .metrics import (
    STOKES_PAULI,
    concurrence,
    degree_of_polarization,
    entanglement_of_formation,
    purity,
    stokes_from_rho,
)

MODES = ("heralded_single", "two_photon")

_MIN_RECORDS = {"heralded_single": 6, "two_photon": 16}


@dataclass(frozen=True)
class TomographyProblem:
    """Records with resolved projectors, ready for either estimator."""

    dim: int
    mode: str
    records: tuple[CountRecord, ...]
    projectors: tuple[np.ndarray, ...]
    background_rate_hz: float = 0.0

    @property
    def counts(self) -> np.ndarray:
        return np.array([r.coincidences for r in self.records], dtype=float)

    @property
    def exposures(self) -> np.ndarray:
        return np.array([r.integration_s for r in self.records], dtype=float)


def _record_projector(record: CountRecord, mode: str) -> np.ndarray:
    s = record.setting
    if mode == "heralded_single":
        configured = [a for a in (s.arm1, s.arm2) if a is not None]
        if len(configured) != 1:
            raise InputError(
                f"record {record.label!r}: heralded tomography needs exactly one "
                "configured arm"
            )
        return projector_from_setting(configured[0]).projector()
    eye = np.eye(2, dtype=complex)
    p1 = eye if s.arm1 is None else projector_from_setting(s.arm1).projector()
    p2 = eye if s.arm2 is None else projector_from_setting(s.arm2).projector()
    return np.kron(p1, p2)


def _hermitian_basis(dim: int) -> list[np.ndarray]:
    # orthonormal under Tr(Bi Bj): Pauli / sqrt(2), or their pairwise products / 2
    if dim == 2:
        return [p / math.sqrt(2.0) for p in STOKES_PAULI]
    return [np.kron(a, b) / 2.0 for a in STOKES_PAULI for b in STOKES_PAULI]


def _design_matrix(projectors: Sequence[np.ndarray], dim: int) -> np.ndarray:
    basis = _hermitian_basis(dim)
    return np.array([[np.trace(p @ b).real for b in basis] for p in projectors])


def problem_from_records(
    records: Sequence[CountRecord],
    mode: str,
    background_rate_hz: float = 0.0,
) -> TomographyProblem:
    """Resolve projectors and check the record set is informationally complete."""
    if mode not in MODES:
        raise InputError(f"mode must be one of {MODES}, got {mode!r}")
    dim = 2 if mode == "heralded_single" else 4
    if len(records) < _MIN_RECORDS[mode]:
        raise InputError(
            f"{mode} tomography needs at least {_MIN_RECORDS[mode]} records, "
            f"got {len(records)}"
        )
    if background_rate_hz < 0:
        raise InputError("background rate must be non-negative")
    projectors = tuple(_record_projector(r, mode) for r in records)
    a = _design_matrix(projectors, dim)
    if np.linalg.matrix_rank(a, tol=1e-10) < dim * dim:
        raise InputError("record set is not informationally complete")
    return TomographyProblem(
        dim=dim,
        mode=mode,
        records=tuple(records),
        projectors=projectors,
        background_rate_hz=float(background_rate_hz),
    )


def infer_mode(records: Sequence[CountRecord]) -> str:
    """two_photon when any record configures both arms, else heralded_single."""
    if any(r.setting.arm1 is not None and r.setting.arm2 is not None for r in records):
        return "two_photon"
    return "heralded_single"


# ---------------------------------------------------------------------------
# linear inversion


def _match_canonical_label(projector: np.ndarray) -> Optional[str]:
    for label in CANONICAL_LABELS:
        if np.abs(projector - canonical_state(label).projector()).max() < 1e-8:
            return label
    return None


def _stokes_inversion_2x2(problem: TomographyProblem) -> Optional[np.ndarray]:
    """The textbook six-projection Stokes formula, when the labels apply."""
    rates: dict[str, float] = {}
    exposure: dict[str, float] = {}
    for record, projector in zip(problem.records, problem.projectors):
        label = _match_canonical_label(projector)
        if label is None:
            return None
        rates[label] = rates.get(label, 0.0) + record.coincidences
        exposure[label] = exposure.get(label, 0.0) + record.integration_s
    if set(rates) != set(CANONICAL_LABELS):
        return None
    r = {
        k: max(rates[k] / exposure[k] - problem.background_rate_hz, 0.0)
        for k in CANONICAL_LABELS
    }
    flux = r["H"] + r["V"]
    if flux <= 0:
        raise InputError("degenerate counts: no flux in the H/V basis")
    s = (
        1.0,
        (r["H"] - r["V"]) / flux,
        (r["D"] - r["A"]) / flux,
        (r["L"] - r["R"]) / flux,
    )
    rho = 0.5 * sum(sk * pk for sk, pk in zip(s, STOKES_PAULI))
    return rho


def linear_reconstruct(problem: TomographyProblem) -> np.ndarray:
    """Direct inversion of the projection data.

    Returns a Hermitian unit-trace matrix that may have negative eigenvalues
    under noise. The single-photon path uses the Stokes formula when the six
    canonical projections are present; otherwise (and always for two-photon
    data) a least-squares inversion in the Pauli product basis is used.
    """
    counts = problem.counts
    if counts.sum() <= 0:
        raise InputError("degenerate counts: all records are zero")
    if problem.dim == 2:
        rho = _stokes_inversion_2x2(problem)
        if rho is not None:
            return rho
    rates = np.maximum(counts / problem.exposures - problem.background_rate_hz, 0.0)
    a = _design_matrix(problem.projectors, problem.dim)
    y, *_ = np.linalg.lstsq(a, rates, rcond=None)
    basis = _hermitian_basis(problem.dim)
    x = sum(yk * bk for yk, bk in zip(y, basis))
    tr = np.trace(x).real
    if tr <= 1e-12 * max(1.0, float(np.abs(x).max())):
        raise InputError("degenerate counts: inverted state has no weight")
    return x / tr


def project_to_physical(m: np.ndarray) -> DensityMatrix:
    """Clamp negative eigenvalues and renormalize; used to seed the MLE."""
    w, v = hermitian_eigen(m, hermiticity_tol=1e-8)
    w = np.clip(w, 0.0, None)
    if w.sum() <= 0:
        dim = m.shape[0]
        return DensityMatrix(np.eye(dim, dtype=complex) / dim)
    w = w / w.sum()
    return DensityMatrix((v * w) @ v.conj().T)


# ---------------------------------------------------------------------------
# Cholesky parameterization


def _t_matrix(t: np.ndarray, dim: int) -> np.ndarray:
    m = np.zeros((dim, dim), dtype=complex)
    m[np.diag_indices(dim)] = t[:dim]
    k = dim
    for i in range(dim):
        for j in range(i):
            m[i, j] = t[k] + 1j * t[k + 1]
            k += 2
    return m


def _rho_array_from_params(t: np.ndarray, dim: int) -> np.ndarray:
    m = _t_matrix(t, dim)
    rho = m.conj().T @ m
    tr = np.trace(rho).real
    return rho / tr


def rho_from_params(t: Sequence[float], dim: int) -> DensityMatrix:
    """Physical state T'T / Tr(T'T) from the real parameter vector of T."""
    t = np.asarray(t, dtype=float)
    if dim not in (2, 4):
        raise InputError(f"dim must be 2 or 4, got {dim!r}")
    if t.shape != (dim * dim,):
        raise InputError(f"expected {dim * dim} parameters, got {t.shape}")
    if not np.isfinite(t).all():
        raise InputError("parameters must be finite")
    if not t.any():
        raise InputError("parameter vector must not be all zero")
    return DensityMatrix(_rho_array_from_params(t, dim))


def params_from_rho(rho: DensityMatrix) -> np.ndarray:
    """Inverse of rho_from_params up to scale (lower-triangular T with T'T = rho)."""
    dim = rho.dim
    flip = np.eye(dim)[::-1]
    shifted = flip @ rho.matrix @ flip + 1e-12 * np.eye(dim)
    lower = np.linalg.cholesky(shifted)
    t_mat = (flip @ lower @ flip).conj().T
    t = np.empty(dim * dim)
    t[:dim] = np.diag(t_mat).real
    k = dim
    for i in range(dim):
        for j in range(i):
            t[k] = t_mat[i, j].real
            t[k + 1] = t_mat[i, j].imag
            k += 2
    return t


# ---------------------------------------------------------------------------
# maximum likelihood


@dataclass(frozen=True)
class MleOptions:
    """Deterministic optimizer settings; defaults suit 6-16 record problems.

    fit_background adds a free flat rate b to the model. For projective
    protocols a flat offset is statistically degenerate with an isotropic
    mixture component, so the split between b and state mixedness is set by
    noise; when the background level is known, declare it on the problem
    instead, which keeps the state identifiable.
    """

    max_iterations: int = 50_000
    restarts: int = 4
    restart_scale: float = 0.05
    restart_seed: int = 7
    ftol: float = 1e-10
    xtol: float = 1e-7
    fit_background: bool = False


@dataclass
class MleDiagnostics:
    log_likelihood: float
    iterations: int
    converged: bool
    n_starts: int
    scale: float
    background_rate_hz: float
    ll_trace: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "log_likelihood": self.log_likelihood,
            "iterations": self.iterations,
            "converged": self.converged,
            "n_starts": self.n_starts,
            "scale": self.scale,
            "background_rate_hz": self.background_rate_hz,
        }


def _profiled_scale(a: np.ndarray, b: np.ndarray, counts: np.ndarray) -> float:
    """argmax_N of sum(n log(N a + b) - (N a + b)); exact when b = 0."""
    a_sum = a.sum()
    if a_sum <= 0:
        return 0.0
    if not b.any():
        return counts.sum() / a_sum
    def slope(n_val: float) -> float:
        return float((counts * a / (n_val * a + b)).sum() - a_sum)
    hi = max(counts.sum() / a_sum, 1.0)
    if slope(0.0) <= 0:
        return 0.0
    for _ in range(200):
        if slope(hi) < 0:
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if slope(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


class _Likelihood:
    """Poisson negative log-likelihood over Cholesky parameters.

    Hot path for the simplex search: projector traces are precomputed as a
    flat stack so each evaluation is a single matrix-vector product.
    """

    def __init__(self, problem: TomographyProblem, fit_background: bool):
        dim = problem.dim
        self.dim = dim
        # Tr(P rho) = sum_ij P_ij rho_ji = (P^T).ravel() . rho.ravel()
        self.proj_flat = np.stack([p.T.reshape(-1) for p in problem.projectors])
        self.counts = problem.counts
        self.exposures = problem.exposures
        self.background_rate = problem.background_rate_hz
        self.fit_background = fit_background
        self.n_params = dim * dim + (1 if fit_background else 0)
        rows, cols = np.tril_indices(dim, k=-1)
        order = np.lexsort((cols, rows))  # row-major lower triangle
        self._rows, self._cols = rows[order], cols[order]
        self._diag = np.arange(dim)
        # objective is NLL per count so the ftol criterion is resolvable in
        # double precision regardless of the total count scale
        self.norm = max(float(self.counts.sum()), 1.0)
        self.best_nll = math.inf
        self.trace: list[float] = []

    def _rho(self, t: np.ndarray) -> np.ndarray:
        dim = self.dim
        m = np.zeros((dim, dim), dtype=complex)
        m[self._diag, self._diag] = t[:dim]
        m[self._rows, self._cols] = t[dim::2] + 1j * t[dim + 1 :: 2]
        rho = m.conj().T @ m
        return rho / np.trace(rho).real

    def probabilities(self, t: np.ndarray) -> np.ndarray:
        p = (self.proj_flat @ self._rho(t).reshape(-1)).real
        return np.clip(p, 0.0, 1.0)

    def split(self, x: np.ndarray) -> tuple[np.ndarray, float]:
        if self.fit_background:
            return x[:-1], math.exp(x[-1])
        return x, self.background_rate

    def __call__(self, x: np.ndarray) -> float:
        t, bg_rate = self.split(x)
        if not t.any():
            return math.inf
        p = self.probabilities(t)
        a = self.exposures * p
        if bg_rate == 0.0:
            a_sum = a.sum()
            if a_sum <= 0.0:
                return math.inf
            lam = np.maximum((self.counts.sum() / a_sum) * a, 1e-300)
        else:
            b = self.exposures * bg_rate
            scale = _profiled_scale(a, b, self.counts)
            lam = np.maximum(scale * a + b, 1e-300)
        nll = float(lam.sum() - (self.counts * np.log(lam)).sum()) / self.norm
        if nll < self.best_nll:
            self.best_nll = nll
            self.trace.append(-nll * self.norm)
        return nll

    def fitted_scale(self, x: np.ndarray) -> tuple[float, float]:
        t, bg_rate = self.split(x)
        p = self.probabilities(t)
        a = self.exposures * p
        b = self.exposures * bg_rate
        return _profiled_scale(a, b, self.counts), bg_rate


def mle_reconstruct(
    problem: TomographyProblem, options: Optional[MleOptions] = None
) -> tuple[DensityMatrix, MleDiagnostics]:
    """Maximum-likelihood state estimate via simplex descent with restarts.

    The first start is the positivity-projected linear inversion; the
    remaining starts jitter it with a fixed-seed stream, so the result is
    deterministic for fixed options. Non-convergence within the iteration
    budget is flagged in the diagnostics and the best iterate returned.
    """
    opts = options or MleOptions()
    dim = problem.dim
    try:
        rho0 = project_to_physical(linear_reconstruct(problem))
    except InputError:
        rho0 = DensityMatrix(np.eye(dim, dtype=complex) / dim)
    # vanishing identity blend keeps the clamped log-likelihood finite at the
    # start without displacing it from the linear-inversion optimum
    blended = (1.0 - 1e-9) * rho0.matrix + 1e-9 * np.eye(dim) / dim
    t0 = params_from_rho(DensityMatrix(blended))

    nll = _Likelihood(problem, opts.fit_background)
    starts = [t0]
    rng = np.random.default_rng(opts.restart_seed)
    for _ in range(opts.restarts):
        jitter = opts.restart_scale * np.linalg.norm(t0) * rng.standard_normal(t0.size)
        starts.append(t0 + jitter)
    if opts.fit_background:
        # start from "the darkest setting is mostly background"
        positive = problem.counts[problem.counts > 0] / problem.exposures[problem.counts > 0]
        bg0 = math.log(max(0.5 * float(positive.min(initial=1.0)), 1e-6))
        starts = [np.append(s, bg0) for s in starts]

    def run(x0: np.ndarray, budget: int, fatol: float, xatol: float):
        return minimize(
            nll,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": budget,
                "maxfev": 4 * budget,
                "fatol": fatol,
                "xatol": xatol,
                "adaptive": dim == 4,
            },
        )

    # short coarse pass ranks the starts, then only the best is polished to
    # ftol; the combined iteration count stays within max_iterations
    total_iterations = 0
    if len(starts) > 1:
        coarse_budget = min(1500, max(opts.max_iterations // (2 * len(starts)), 1))
        coarse = []
        for x0 in starts:
            res = run(x0, coarse_budget, max(opts.ftol, 1e-6), max(opts.xtol, 1e-4))
            total_iterations += int(res.nit)
            coarse.append(res)
        seed_res = min(coarse, key=lambda r: r.fun)
        polish_budget = max(opts.max_iterations - total_iterations, 1)
    else:
        seed_res = None
        polish_budget = opts.max_iterations
    best = run(
        seed_res.x if seed_res is not None else starts[0], polish_budget, opts.ftol, opts.xtol
    )
    total_iterations += int(best.nit)
    if seed_res is not None and seed_res.fun < best.fun:
        best = seed_res
    t_best, _ = nll.split(best.x)
    rho = rho_from_params(t_best, dim)
    scale, bg_rate = nll.fitted_scale(best.x)
    diagnostics = MleDiagnostics(
        log_likelihood=-float(best.fun) * nll.norm,
        iterations=total_iterations,
        converged=bool(best.success),
        n_starts=len(starts),
        scale=float(scale),
        background_rate_hz=float(bg_rate),
        ll_trace=list(nll.trace),
    )
    return rho, diagnostics


# ---------------------------------------------------------------------------
# bootstrap


_METRIC_FUNCS = {
    "purity": purity,
    "dop": lambda rho: degree_of_polarization(stokes_from_rho(rho)),
    "concurrence": concurrence,
    "eof": entanglement_of_formation,
}


def default_metrics(dim: int) -> tuple[str, ...]:
    return ("purity", "dop") if dim == 2 else ("purity", "concurrence", "eof")


@dataclass
class BootstrapResult:
    stds: dict
    n_resamples: int
    n_failed: int

    def to_dict(self) -> dict:
        return {
            "stds": dict(sorted(self.stds.items())),
            "n_resamples": self.n_resamples,
            "n_failed": self.n_failed,
        }


def bootstrap_uncertainty(
    problem: TomographyProblem,
    n_resamples: int,
    seed: int = 0,
    metrics: Optional[Sequence[str]] = None,
    options: Optional[MleOptions] = None,
) -> BootstrapResult:
    """Metric standard deviations from Poisson-resampled reconstructions.

    Each resample redraws every record's counts around the observed values
    and re-runs the likelihood fit (without jittered restarts, for speed).
    Non-converged resamples are excluded and counted.
    """
    if n_resamples < 2:
        raise InputError("bootstrap needs at least 2 resamples")
    names = tuple(metrics) if metrics is not None else default_metrics(problem.dim)
    for name in names:
        if name not in _METRIC_FUNCS:
            raise InputError(f"unknown metric {name!r}")
        if problem.dim == 2 and name in ("concurrence", "eof"):
            raise InputError(f"metric {name!r} needs two-photon data")
        if problem.dim == 4 and name == "dop":
            raise InputError("degree of polarization needs single-photon data")
    base = options or MleOptions()
    fast = replace(base, restarts=0, max_iterations=base.max_iterations // 2)
    observed = problem.counts
    samples: dict[str, list[float]] = {n: [] for n in names}
    n_failed = 0
    for i in range(n_resamples):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(i,)))
        redrawn = rng.poisson(observed)
        records = tuple(
            replace(r, coincidences=int(c)) for r, c in zip(problem.records, redrawn)
        )
        resampled = replace(problem, records=records)
        rho, diag = mle_reconstruct(resampled, fast)
        if not diag.converged:
            n_failed += 1
            continue
        for name in names:
            samples[name].append(_METRIC_FUNCS[name](rho))
    stds = {}
    for name in names:
        vals = samples[name]
        stds[name] = float(np.std(vals, ddof=1)) if len(vals) >= 2 else math.nan
    return BootstrapResult(stds=stds, n_resamples=n_resamples, n_failed=n_failed)
