"""Polarization-state metrics: purity, Stokes, DoP, concurrence, EoF.

STOKES_PAULI is the single place the Pauli ordering and circular-handedness
convention live; it matches the R = (1, -i)/sqrt(2) choice in the Jones
module, so S3 = P_L - P_R and the spin-flip used by the concurrence all
agree with the projection optics.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import InputError
from .linalg import DensityMatrix, hermitian_eigen, psd_sqrt

STOKES_PAULI = (
    np.eye(2, dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),    # H/V balance
    np.array([[0, 1], [1, 0]], dtype=complex),     # D/A balance
    np.array([[0, -1j], [1j, 0]], dtype=complex),  # L/R balance
)


@dataclass(frozen=True)
class StokesVector:
    """Classical polarization descriptor (s0, s1, s2, s3)."""

    s0: float
    s1: float
    s2: float
    s3: float

    def __post_init__(self):
        vals = (self.s0, self.s1, self.s2, self.s3)
        if not all(math.isfinite(v) for v in vals):
            raise InputError("Stokes components must be finite")
        if self.s0 <= 0:
            raise InputError(f"s0 must be positive, got {self.s0!r}")
        length = math.sqrt(self.s1**2 + self.s2**2 + self.s3**2)
        if length > self.s0 + 1e-9:
            raise InputError(
                f"Bloch length {length!r} exceeds s0 {self.s0!r}: not a physical state"
            )


def purity(rho: DensityMatrix) -> float:
    """Tr(rho^2); 1 for pure states, 1/dim for maximally mixed ones."""
    m = rho.matrix
    return float(np.trace(m @ m).real)


def stokes_from_probs(
    p_h: float, p_v: float, p_d: float, p_a: float, p_r: float, p_l: float
) -> StokesVector:
    """Stokes parameters from the six projection probabilities.

    s0 = P_H + P_V, s1 = P_H - P_V, s2 = P_D - P_A, s3 = P_L - P_R.
    """
    probs = (p_h, p_v, p_d, p_a, p_r, p_l)
    for p in probs:
        if not (0.0 <= p <= 1.0):
            raise InputError(f"probabilities must lie in [0, 1], got {p!r}")
    return StokesVector(p_h + p_v, p_h - p_v, p_d - p_a, p_l - p_r)


def stokes_from_rho(rho: DensityMatrix) -> StokesVector:
    """Stokes parameters s_k = Tr(rho sigma_k) of a single-qubit state."""
    if rho.dim != 2:
        raise InputError("stokes_from_rho expects a single-photon state")
    s = [float(np.trace(rho.matrix @ p).real) for p in STOKES_PAULI]
    return StokesVector(*s)


def degree_of_polarization(s: StokesVector) -> float:
    """Bloch-vector length sqrt(s1^2 + s2^2 + s3^2) / s0 in [0, 1]."""
    if s.s0 == 0:
        raise InputError("degree of polarization undefined for s0 = 0")
    dop = math.sqrt(s.s1**2 + s.s2**2 + s.s3**2) / s.s0
    return min(dop, 1.0)


def concurrence(rho: DensityMatrix) -> float:
    """Wootters concurrence of a two-qubit state.

    Eigenvalues of rho * rho_tilde are taken from the equivalent Hermitian
    form sqrt(rho) rho_tilde sqrt(rho) so a single Hermitian solver suffices.
    """
    if rho.dim != 4:
        raise InputError("concurrence expects a two-photon state")
    yy = np.kron(STOKES_PAULI[3], STOKES_PAULI[3])
    rho_tilde = yy @ rho.matrix.conj() @ yy
    root = psd_sqrt(rho.matrix)
    w, _ = hermitian_eigen(root @ rho_tilde @ root)
    w = np.clip(w, 0.0, None)
    # the square root amplifies eigenvalue noise at zero, so floor it first
    w[w < 1e-14 * max(w[0], np.finfo(float).tiny)] = 0.0
    lam = np.sqrt(w)  # already descending
    c = float(lam[0] - lam[1] - lam[2] - lam[3])
    return min(max(c, 0.0), 1.0)


def _binary_entropy(x: float) -> float:
    if x <= 0.0 or x >= 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def entanglement_of_formation(rho: DensityMatrix) -> float:
    """Entropy-based entanglement measure derived from the concurrence."""
    c = concurrence(rho)
    radicand = 1.0 - c * c
    if radicand < 0.0:
        radicand = 0.0  # roundoff at C ~ 1
    x = (1.0 + math.sqrt(radicand)) / 2.0
    return _binary_entropy(x)


@dataclass
class MetricsReport:
    """Metric bundle for one reconstructed state; stds come from bootstraps."""

    purity: float
    stokes: Optional[tuple[float, float, float, float]] = None
    dop: Optional[float] = None
    concurrence: Optional[float] = None
    eof: Optional[float] = None
    stds: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out: dict = {"purity": self.purity}
        if self.stokes is not None:
            out["stokes"] = list(self.stokes)
        if self.dop is not None:
            out["dop"] = self.dop
        if self.concurrence is not None:
            out["concurrence"] = self.concurrence
        if self.eof is not None:
            out["eof"] = self.eof
        if self.stds:
            out["stds"] = dict(sorted(self.stds.items()))
        return out


def report_for(rho: DensityMatrix, stds: Optional[dict] = None) -> MetricsReport:
    """Purity plus the dimension-appropriate metrics for a state."""
    if rho.dim == 2:
        s = stokes_from_rho(rho)
        return MetricsReport(
            purity=purity(rho),
            stokes=(s.s0, s.s1, s.s2, s.s3),
            dop=degree_of_polarization(s),
            stds=dict(stds or {}),
        )
    return MetricsReport(
        purity=purity(rho),
        concurrence=concurrence(rho),
        eof=entanglement_of_formation(rho),
        stds=dict(stds or {}),
    )
