"""Dense complex linear algebra on small Hermitian matrices.

Everything here is sized for polarization states: matrices are 2x2 or 4x4,
eigenproblems are solved by a direct cyclic-Jacobi iteration, and density
matrices are validated against Hermiticity / trace / positivity tolerances
at construction time.
"""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import InputError

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10

ALLOWED_DIMS = (2, 4)


def as_complex_matrix(m: object) -> np.ndarray:
    """Coerce to a square complex ndarray with finite entries."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InputError(f"expected a square matrix, got shape {a.shape}")
    if not np.isfinite(a).all():
        raise InputError("matrix entries must be finite")
    return a


def hermiticity_defect(m: np.ndarray) -> float:
    return float(np.abs(m - m.conj().T).max())


class DensityMatrix:
    """Hermitian, positive semidefinite, unit-trace matrix of dimension 2 or 4.

    Construction validates all three invariants. Eigenvalues in
    (-PSD_TOL, 0) are clamped to zero and the matrix is renormalized, so
    states sitting numerically at the positivity boundary (typical for
    likelihood fits) round-trip cleanly.
    """

    __slots__ = ("_matrix",)

    def __init__(self, matrix: object):
        a = as_complex_matrix(matrix)
        if a.shape[0] not in ALLOWED_DIMS:
            raise InputError(f"density matrix dimension must be 2 or 4, got {a.shape[0]}")
        if hermiticity_defect(a) > HERMITICITY_TOL:
            raise InputError(
                f"matrix is not Hermitian (defect {hermiticity_defect(a):.3e} > {HERMITICITY_TOL})"
            )
        a = (a + a.conj().T) / 2.0
        tr = np.trace(a).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise InputError(f"trace must be 1 within {TRACE_TOL}, got {tr!r}")
        w, v = hermitian_eigen(a)
        if w[-1] < -PSD_TOL:
            raise InputError(
                f"matrix is not positive semidefinite (min eigenvalue {w[-1]:.3e})"
            )
        if w[-1] < 0.0:
            w = np.clip(w, 0.0, None)
            a = (v * w) @ v.conj().T
            a = (a + a.conj().T) / 2.0
            a = a / np.trace(a).real
        a.setflags(write=False)
        self._matrix = a

    @property
    def matrix(self) -> np.ndarray:
        """Read-only view of the underlying array."""
        return self._matrix

    @property
    def dim(self) -> int:
        return self._matrix.shape[0]

    @classmethod
    def from_state(cls, ket: Iterable[complex]) -> "DensityMatrix":
        """Outer product |psi><psi| of a (not necessarily normalized) ket."""
        v = np.asarray(list(ket), dtype=complex).reshape(-1)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise InputError("cannot build a state from the zero vector")
        v = v / norm
        return cls(np.outer(v, v.conj()))

    def to_dict(self) -> dict:
        entries = [[float(z.real), float(z.imag)] for z in self._matrix.reshape(-1)]
        return {"dim": self.dim, "entries": entries}

    @classmethod
    def from_dict(cls, d: dict) -> "DensityMatrix":
        try:
            dim = int(d["dim"])
            entries = d["entries"]
        except (KeyError, TypeError) as exc:
            raise InputError(f"malformed density-matrix object: {exc}") from exc
        if len(entries) != dim * dim:
            raise InputError(f"expected {dim * dim} entries, got {len(entries)}")
        flat = np.array([complex(re, im) for re, im in entries])
        return cls(flat.reshape(dim, dim))

    def __repr__(self) -> str:
        return f"DensityMatrix(dim={self.dim})"


def tensor_product(a, b):
    """Kronecker product of two matrices of the same kind.

    Two DensityMatrix operands yield a DensityMatrix (capped at dimension 4);
    two plain arrays yield a plain array. Mixing kinds is rejected.
    """
    a_dm, b_dm = isinstance(a, DensityMatrix), isinstance(b, DensityMatrix)
    if a_dm != b_dm:
        raise InputError("tensor_product operands must be of the same kind")
    if a_dm:
        if a.dim * b.dim > 4:
            raise InputError(
                f"tensor product of dims {a.dim} x {b.dim} exceeds the supported 4x4"
            )
        return DensityMatrix(np.kron(a.matrix, b.matrix))
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def partial_trace(rho: DensityMatrix, keep: int) -> DensityMatrix:
    """Reduced state of one arm of a two-photon density matrix.

    keep=1 traces out the second tensor factor, keep=2 the first.
    """
    if not isinstance(rho, DensityMatrix) or rho.dim != 4:
        raise InputError("partial_trace requires a 4x4 density matrix")
    if keep not in (1, 2):
        raise InputError(f"keep must be arm index 1 or 2, got {keep!r}")
    r = rho.matrix.reshape(2, 2, 2, 2)
    if keep == 1:
        red = np.einsum("ikjk->ij", r)
    else:
        red = np.einsum("kikj->ij", r)
    return DensityMatrix(red)


def _max_offdiag(a: np.ndarray) -> float:
    mask = ~np.eye(a.shape[0], dtype=bool)
    return float(np.abs(a[mask]).max())


def hermitian_eigen(m: object, hermiticity_tol: float = 1e-10):
    """Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvalues real and sorted
    descending (stable tie-break) and eigenvectors as orthonormal columns.
    """
    a = as_complex_matrix(m)
    if hermiticity_defect(a) > hermiticity_tol:
        raise InputError(
            f"matrix is not Hermitian within {hermiticity_tol} "
            f"(defect {hermiticity_defect(a):.3e})"
        )
    a = (a + a.conj().T) / 2.0
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(float(np.abs(a).max()), np.finfo(float).tiny)
    for _ in range(100):
        if n == 1 or _max_offdiag(a) <= 1e-15 * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                r = abs(a[p, q])
                if r <= 1e-18 * scale:
                    continue
                # one rotation annihilates a[p,q] exactly; the off-diagonal
                # Frobenius norm decreases by 2|a[p,q]|^2 per step
                phi = np.angle(a[p, q])
                theta = 0.5 * np.arctan2(2.0 * r, (a[q, q] - a[p, p]).real)
                c, s = np.cos(theta), np.sin(theta)
                e = np.exp(1j * phi)
                u = np.eye(n, dtype=complex)
                u[p, p] = c
                u[p, q] = s * e
                u[q, p] = -s * np.conj(e)
                u[q, q] = c
                a = u.conj().T @ a @ u
                a = (a + a.conj().T) / 2.0
                v = v @ u
    w = np.diag(a).real.copy()
    order = np.argsort(-w, kind="stable")
    return w[order], v[:, order]


def psd_sqrt(m: np.ndarray) -> np.ndarray:
    """Matrix square root of a Hermitian PSD matrix (tiny negatives clamped)."""
    w, v = hermitian_eigen(m)
    w = np.sqrt(np.clip(w, 0.0, None))
    return (v * w) @ v.conj().T


def fidelity(rho: DensityMatrix, sigma: DensityMatrix) -> float:
    """Uhlmann fidelity (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 in [0, 1]."""
    if not isinstance(rho, DensityMatrix) or not isinstance(sigma, DensityMatrix):
        raise InputError("fidelity requires two density matrices")
    if rho.dim != sigma.dim:
        raise InputError(f"dimension mismatch: {rho.dim} vs {sigma.dim}")
    root = psd_sqrt(rho.matrix)
    inner = root @ sigma.matrix @ root
    w, _ = hermitian_eigen(inner)
    f = float(np.sum(np.sqrt(np.clip(w, 0.0, None))) ** 2)
    return min(max(f, 0.0), 1.0)
