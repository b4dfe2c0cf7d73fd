"""Dense Hermitian linear algebra on small complex matrices.

Matrices are plain ``numpy`` arrays of dtype ``complex128``.  The helpers
:func:`as_hermitian` and :func:`as_psd` validate and symmetrize inputs; all
other functions are pure and never modify their arguments.

Eigendecompositions go through a cyclic Jacobi solver so that results are
reproducible bit-for-bit for identical input.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import (
    BadOrder,
    ConvergenceFailure,
    DimensionMismatch,
    DomainError,
    InputError,
    NonHermitianInput,
    NotPositiveSemidefinite,
)

TOL_HERM = 1e-12
TOL_PROJ = 1e-9
TOL_RANK = 1e-9
TOL_ABS = 1e-300
TOL_GROUP = 1e-8
TOL_ZERO = 1e-12
TOL_RECON = 1e-10
TOL_PSD = 1e-9

MAX_SWEEPS = 60
_EPS = np.finfo(float).eps


# ---------------------------------------------------------------------------
# validation
# ---------------------------------------------------------------------------

def as_matrix(X, name: str = "matrix") -> np.ndarray:
    """Return ``X`` as a finite 2-d complex array (general, possibly rectangular)."""
    M = np.array(X, dtype=complex)
    if M.ndim == 1 and M.size == 1:
        M = M.reshape(1, 1)
    if M.ndim != 2:
        raise InputError(f"{name} must be 2-dimensional, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InputError(f"{name} has non-finite entries")
    return M


def as_hermitian(H, tol: float = TOL_HERM, name: str = "matrix") -> np.ndarray:
    """Validate Hermitian symmetry (relative to ``max(1, max|H_ij|)``) and symmetrize."""
    M = as_matrix(H, name)
    if M.shape[0] != M.shape[1]:
        raise DimensionMismatch(f"{name} must be square, got shape {M.shape}")
    scale = max(1.0, float(np.max(np.abs(M)))) if M.size else 1.0
    asym = float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0
    if asym > tol * scale:
        raise NonHermitianInput(f"{name} is not Hermitian (max asymmetry {asym:.3e})")
    return (M + M.conj().T) / 2


def as_psd(H, tol: float = TOL_PSD, name: str = "matrix") -> np.ndarray:
    """Validate positive semidefiniteness: ``lambda_min >= -tol * max(|lambda|_max, 1)``."""
    M = as_hermitian(H, name=name)
    w, _ = eig_hermitian(M)
    if w.size and w[-1] < -tol * max(abs(w[0]), abs(w[-1]), 1.0):
        raise NotPositiveSemidefinite(
            f"{name} is not positive semidefinite (min eigenvalue {w[-1]:.3e})"
        )
    return M


def is_projection(P, tol: float = TOL_PROJ) -> bool:
    M = np.asarray(P, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    return (
        np.linalg.norm(M @ M - M, 2) <= tol
        and np.linalg.norm(M - M.conj().T, 2) <= max(TOL_HERM, tol)
    )


def projection_rank(P) -> int:
    return int(round(float(np.trace(P).real)))


def opnorm(X) -> float:
    """Spectral norm (largest singular value)."""
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X, 2))


# ---------------------------------------------------------------------------
# eigensolver
# ---------------------------------------------------------------------------

def _jacobi(M: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    A = M.copy()
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    fro = float(np.linalg.norm(A))
    if n < 2 or fro == 0.0:
        return A.diagonal().real.copy(), V
    floor = 1e-18 * fro
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                mag = abs(apq)
                app = A[p, p].real
                aqq = A[q, q].real
                if mag <= floor or mag <= _EPS * math.sqrt(abs(app * aqq)):
                    A[p, q] = A[q, p] = 0.0
                    continue
                rotated = True
                phase = apq / mag
                theta = (aqq - app) / (2.0 * mag)
                t = 1.0 / (abs(theta) + math.sqrt(theta * theta + 1.0))
                if theta < 0:
                    t = -t
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                # U = diag(1, conj(phase)) @ [[c, s], [-s, c]] acting on (p, q)
                u00, u01 = c, s
                u10, u11 = -s * phase.conjugate(), c * phase.conjugate()
                cp = A[:, p].copy()
                cq = A[:, q]
                A[:, p] = cp * u00 + cq * u10
                A[:, q] = cp * u01 + cq * u11
                rp = A[p, :].copy()
                rq = A[q, :]
                A[p, :] = rp * u00 + rq * np.conj(u10)
                A[q, :] = rp * u01 + rq * np.conj(u11)
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
                vp = V[:, p].copy()
                vq = V[:, q]
                V[:, p] = vp * u00 + vq * u10
                V[:, q] = vp * u01 + vq * u11
        if not rotated:
            return A.diagonal().real.copy(), V
    raise ConvergenceFailure(f"Jacobi eigensolver did not converge in {MAX_SWEEPS} sweeps")


def eig_hermitian(H) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decompose a Hermitian matrix.

    Returns
    -------
    values : ndarray
        Real eigenvalues in descending order, repeated by multiplicity.
    vectors : ndarray
        Unitary matrix whose columns are the matching eigenvectors.  Each
        column's first largest-magnitude entry is made real and positive,
        which pins the phase (ties inside degenerate eigenspaces are not
        canonicalized).
    """
    M = as_hermitian(H)
    w, V = _jacobi(M)
    order = np.argsort(-w, kind="stable")
    w = w[order]
    V = V[:, order]
    for j in range(V.shape[1]):
        k = int(np.argmax(np.abs(V[:, j]) > np.max(np.abs(V[:, j])) * (1 - 1e-12)))
        ph = V[k, j] / abs(V[k, j])
        V[:, j] = V[:, j] / ph
    return w, V


def lambda_min(H) -> float:
    w, _ = eig_hermitian(H)
    return float(w[-1]) if w.size else 0.0


# ---------------------------------------------------------------------------
# spectral decompositions and projections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct positive eigenvalues with their spectral projections.

    ``bases[k]`` holds orthonormal eigenvectors spanning ``projections[k]``;
    ``kernel_basis`` spans the numerically-zero eigenspace.
    """

    values: np.ndarray
    projections: tuple
    bases: tuple
    kernel_projection: np.ndarray
    kernel_basis: np.ndarray

    @property
    def dim(self) -> int:
        return self.kernel_projection.shape[0]

    def __len__(self) -> int:
        return len(self.values)

    def cumulative(self, k: int) -> np.ndarray:
        """``P_1 + ... + P_k`` (zero matrix for ``k = 0``)."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for P in self.projections[:k]:
            out = out + P
        return out

    def support(self) -> np.ndarray:
        return self.cumulative(len(self))

    def reconstruct(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for a, P in zip(self.values, self.projections):
            out = out + a * P
        return out

    def eigen_sequence(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigenvalues (cluster values, kernel as 0) and eigenvectors in descending order."""
        vals, cols = [], []
        for a, B in zip(self.values, self.bases):
            vals.extend([a] * B.shape[1])
            cols.append(B)
        vals.extend([0.0] * self.kernel_basis.shape[1])
        cols.append(self.kernel_basis)
        return np.array(vals, dtype=float), np.hstack(cols)


def _outer(B: np.ndarray) -> np.ndarray:
    return B @ B.conj().T


def group_spectrum(H, tol_group: float = TOL_GROUP, tol_zero: float = TOL_ZERO) -> SpectralDecomposition:
    """Cluster the spectrum of a PSD matrix into distinct values and projections.

    Consecutive eigenvalues closer than ``tol_group * max(a_1, 1)`` share a
    cluster (represented by their mean); eigenvalues at most ``tol_zero * a_1``
    go to the kernel.
    """
    M = as_psd(H)
    w, V = eig_hermitian(M)
    n = M.shape[0]
    top = float(w[0]) if n else 0.0
    zero_cut = tol_zero * top if top > 0 else 0.0
    pos = [i for i in range(n) if w[i] > zero_cut and w[i] > 0]
    gap = tol_group * max(abs(top), 1.0)
    clusters: list[list[int]] = []
    for i in pos:
        if clusters and w[clusters[-1][-1]] - w[i] <= gap:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    values = np.array([float(np.mean(w[c])) for c in clusters])
    bases = tuple(V[:, c] for c in clusters)
    kernel = V[:, len(pos):]
    return SpectralDecomposition(
        values=values,
        projections=tuple(_outer(B) for B in bases),
        bases=bases,
        kernel_projection=_outer(kernel),
        kernel_basis=kernel,
    )


def range_basis(M, tol_rank: float = TOL_RANK, floor: float = 0.0) -> np.ndarray:
    """Orthonormal basis of the range of a PSD matrix.

    Eigenvalues above ``max(tol_rank * lambda_max, floor)`` count.  The
    absolute ``floor`` matters when ``M`` may be pure rounding noise, e.g. a
    compression ``E (I - P) E`` of projections with ``P = I``.
    """
    w, V = eig_hermitian(M)
    if not w.size or w[0] <= 0:
        return V[:, :0]
    keep = w > max(tol_rank * w[0], floor)
    return V[:, keep]


def range_projection(M, tol_rank: float = TOL_RANK, floor: float = 0.0) -> np.ndarray:
    """Orthogonal projection onto the range of a PSD matrix ``M``.

    For ``M = B_1 + ... + B_k`` this is the join of the ranges of the ``B_j``.
    """
    return _outer(range_basis(M, tol_rank, floor))


def idempotize(X) -> np.ndarray:
    """Nearest projection to an almost-projection: keep eigenvalues above 1/2."""
    w, V = eig_hermitian(X)
    return _outer(V[:, w > 0.5])


def projection_join(P, E) -> np.ndarray:
    P = as_hermitian(P)
    E = as_hermitian(E)
    if P.shape != E.shape:
        raise DimensionMismatch(f"projection shapes differ: {P.shape} vs {E.shape}")
    return range_projection(P + E)


def projection_meet(P, E) -> np.ndarray:
    """Projection onto ``ran P ∩ ran E``, computed as ``E - supp(E (I - P) E)``."""
    P = as_hermitian(P)
    E = as_hermitian(E)
    if P.shape != E.shape:
        raise DimensionMismatch(f"projection shapes differ: {P.shape} vs {E.shape}")
    n = P.shape[0]
    complement = E @ (np.eye(n) - P) @ E
    # entries are O(1), so an absolute floor separates rounding noise from range
    return idempotize(E - range_projection(complement, TOL_RANK, TOL_RANK))


def gram_schmidt_select(
    vectors: Sequence, tol_rank: float = TOL_RANK, tol_abs: float = TOL_ABS
) -> tuple[list[int], np.ndarray]:
    """Pick the vectors that are not in the span of their predecessors.

    A vector is kept when its residual after projecting out the span of the
    previously kept ones exceeds ``tol_rank * max(max_norm, tol_abs)``.

    Returns the kept (0-based) indices and the Gram-Schmidt orthonormal frame
    as the columns of a matrix; ``m = 0`` when every input is numerically zero.
    """
    vecs = [np.asarray(v, dtype=complex).ravel() for v in vectors]
    if not vecs:
        return [], np.zeros((0, 0), dtype=complex)
    dim = vecs[0].size
    if any(v.size != dim for v in vecs):
        raise DimensionMismatch("vectors must share one dimension")
    max_norm = max(float(np.linalg.norm(v)) for v in vecs)
    threshold = tol_rank * max(max_norm, tol_abs)
    indices: list[int] = []
    frame: list[np.ndarray] = []
    if max_norm == 0.0:
        return indices, np.zeros((dim, 0), dtype=complex)
    for i, v in enumerate(vecs):
        r = v.copy()
        for _ in range(2):  # second pass restores orthogonality lost to cancellation
            for u in frame:
                r = r - np.vdot(u, r) * u
        nr = float(np.linalg.norm(r))
        if nr > threshold:
            indices.append(i)
            frame.append(r / nr)
    U = np.column_stack(frame) if frame else np.zeros((dim, 0), dtype=complex)
    return indices, U


# ---------------------------------------------------------------------------
# functional calculus
# ---------------------------------------------------------------------------

class ScaledPower(NamedTuple):
    """``A^p = exp(log_scale) * matrix`` with ``matrix`` of unit spectral radius."""

    matrix: np.ndarray
    log_scale: float


def scaled_power(A, p: float, tol_zero: float = TOL_ZERO) -> ScaledPower:
    """Power of a PSD matrix in the log domain, restricted to the support.

    Negative ``p`` gives the generalized (Moore-Penrose) inverse power; ``p = 0``
    gives the support projection.
    """
    M = as_psd(A)
    w, V = eig_hermitian(M)
    n = M.shape[0]
    top = float(w[0]) if n else 0.0
    on = (w > tol_zero * top) & (w > 0) if top > 0 else np.zeros(n, dtype=bool)
    if not on.any():
        return ScaledPower(np.zeros((n, n), dtype=complex), 0.0)
    logs = p * np.log(w[on])
    shift = float(np.max(logs))
    Vs = V[:, on]
    return ScaledPower((Vs * np.exp(logs - shift)) @ Vs.conj().T, shift)


def matrix_power(A, p: float, tol_zero: float = TOL_ZERO) -> np.ndarray:
    """``A^p`` for PSD ``A``; negative powers act on the support only."""
    sp = scaled_power(A, p, tol_zero)
    return sp.matrix * math.exp(sp.log_scale)


def support_projection(A, tol_zero: float = TOL_ZERO) -> np.ndarray:
    return scaled_power(A, 0.0, tol_zero).matrix


def apply_function(
    H,
    f: Callable,
    domain: tuple[float, float] | None = None,
    zero_tol: float | None = None,
    zero_value: float | None = None,
) -> np.ndarray:
    """``V diag(f(lambda_i)) V*`` for Hermitian ``H``.

    ``domain`` is a closed interval checked against the spectrum.  When
    ``zero_tol`` is given, eigenvalues with ``|lambda| <= zero_tol * max|lambda|``
    are snapped to exactly 0 first, and mapped to ``zero_value`` if one is given.
    """
    w, V = eig_hermitian(H)
    w = w.copy()
    snapped = np.zeros(w.shape, dtype=bool)
    if zero_tol is not None and w.size:
        scale = float(np.max(np.abs(w)))
        snapped = np.abs(w) <= zero_tol * scale
        w[snapped] = 0.0
    if domain is not None:
        lo, hi = domain
        bad = (w < lo) | (w > hi)
        if bad.any():
            raise DomainError(f"eigenvalue {w[bad][0]:.6g} outside domain [{lo}, {hi}]")
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        fw = np.array([f(x) for x in w], dtype=complex)
    if zero_value is not None:
        fw[snapped] = zero_value
    if not np.all(np.isfinite(fw)):
        raise DomainError("function is not finite on the spectrum")
    return (V * fw) @ V.conj().T


# ---------------------------------------------------------------------------
# compound matrices
# ---------------------------------------------------------------------------

def compound(M, k: int) -> np.ndarray:
    """k-th compound (antisymmetric tensor power) of a square matrix.

    Rows and columns are indexed by k-subsets in lexicographic order; each
    entry is the corresponding k×k minor.
    """
    X = as_matrix(M)
    n = X.shape[0]
    if X.shape[0] != X.shape[1]:
        raise DimensionMismatch("compound needs a square matrix")
    if not 1 <= k <= n:
        raise BadOrder(f"order k={k} outside 1..{n}")
    subsets = list(itertools.combinations(range(n), k))
    out = np.empty((len(subsets), len(subsets)), dtype=complex)
    for a, I in enumerate(subsets):
        rows = X[list(I), :]
        for b, J in enumerate(subsets):
            out[a, b] = np.linalg.det(rows[:, list(J)])
    return out


def direct_sum(*blocks) -> np.ndarray:
    mats = [as_matrix(B) for B in blocks]
    rows = sum(m.shape[0] for m in mats)
    cols = sum(m.shape[1] for m in mats)
    out = np.zeros((rows, cols), dtype=complex)
    r = c = 0
    for m in mats:
        out[r:r + m.shape[0], c:c + m.shape[1]] = m
        r += m.shape[0]
        c += m.shape[1]
    return out
