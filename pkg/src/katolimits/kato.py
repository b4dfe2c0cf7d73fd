"""Closed-form limits of ``Phi(A^p)^{1/p}`` and ``Phi(A^{-p})^{-1/p}`` as p -> infinity.

All constructions consume the spectrum of ``A`` through
:class:`~katolimits.linalg.SpectralDecomposition`, so the results do not
depend on the choice of eigenvectors inside degenerate eigenspaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import mpmath
import numpy as np

from . import linalg
from .errors import DimensionMismatch, NoConvergence
from .maps import PositiveMapSpec, apply_map, kraus_operators, support_compress, support_isometry

EPS_SCHEDULE = tuple(10.0 ** -k for k in range(1, 13))
EPS_CAUCHY = 1e-9


@dataclass(frozen=True)
class CongruenceLimitResult:
    limit: np.ndarray
    selected_indices: tuple
    selected_values: np.ndarray
    orthonormal_frame: np.ndarray
    predicted_spectrum: np.ndarray

    @property
    def m(self) -> int:
        return len(self.selected_indices)


@dataclass(frozen=True)
class MapLimitResult:
    limit: np.ndarray
    coefficients: np.ndarray
    projections: tuple


@dataclass(frozen=True)
class EpsilonLimitResult:
    limit: np.ndarray
    delta: float
    epsilons: tuple
    monotone: bool


def _check_pair(K: np.ndarray, A: np.ndarray) -> None:
    if K.shape[1] != A.shape[0]:
        raise DimensionMismatch(f"K has {K.shape[1]} columns but A is {A.shape[0]}x{A.shape[0]}")


def congruence_limit(K, A, tol_rank: float = linalg.TOL_RANK) -> CongruenceLimitResult:
    """``lim (K A^p K^*)^{1/p}`` for a (possibly rectangular) K and PSD A.

    The eigenvectors ``v_i`` of ``A`` are taken in descending eigenvalue order,
    cluster by cluster, and the images ``K v_i`` are passed through
    :func:`~katolimits.linalg.gram_schmidt_select`.  The limit is
    ``sum_k a_{l_k} |u_k><u_k|``.  Every selected index inside one cluster
    gets the cluster's value, so the span attached to each eigenvalue and the
    limit itself do not depend on the eigenbasis.
    """
    K = linalg.as_matrix(K, "K")
    A = linalg.as_psd(A, name="A")
    _check_pair(K, A)
    out = K.shape[0]
    sd = linalg.group_spectrum(A)
    values, V = sd.eigen_sequence()
    indices, U = linalg.gram_schmidt_select([K @ V[:, i] for i in range(V.shape[1])], tol_rank)
    sel = np.array([values[i] for i in indices], dtype=float)
    limit = (U * sel) @ U.conj().T if indices else np.zeros((out, out), dtype=complex)
    spectrum = np.zeros(out)
    spectrum[: len(sel)] = sel
    return CongruenceLimitResult(limit, tuple(indices), sel, U, spectrum)


def predicted_eigenvalues(K, A, tol_rank: float = linalg.TOL_RANK) -> tuple[np.ndarray, bool]:
    """Limiting eigenvalues of ``(K A^p K^*)^{1/p}`` and the independence flag.

    The flag is true iff ``K v_i`` is selected for every eigenvector with a
    positive eigenvalue.  For positive definite ``A`` this says that
    ``{K v_i}`` is linearly independent; for singular ``A`` only the positive
    part is tested, and the flag then means the limit has A's nonzero spectrum.
    """
    res = congruence_limit(K, A, tol_rank)
    positive = int(sum(B.shape[1] for B in linalg.group_spectrum(A).bases))
    return res.predicted_spectrum, set(range(positive)) <= set(res.selected_indices)


def _assemble(values, projections, dim) -> np.ndarray:
    out = np.zeros((dim, dim), dtype=complex)
    for a, P in zip(values, projections):
        out = out + a * P
    return out


def _noise_floor(spec: PositiveMapSpec, tol_rank: float) -> float:
    # Phi(P) <= Phi(I) for every projection P, so this scale separates range from rounding noise
    return tol_rank * linalg.opnorm(apply_map(spec, np.eye(spec.in_dim)))


def map_limit(spec: PositiveMapSpec, A, tol_rank: float = linalg.TOL_RANK) -> MapLimitResult:
    """``lim Phi(A^p)^{1/p} = sum_k a_k (F_k - F_{k-1})`` with ``F_k = supp Phi(P_1 + ... + P_k)``."""
    A = linalg.as_psd(A, name="A")
    if A.shape[0] != spec.in_dim:
        raise DimensionMismatch(f"map input dimension {spec.in_dim} but A is {A.shape[0]}x{A.shape[0]}")
    sd = linalg.group_spectrum(A)
    dim = spec.out_dim
    floor = _noise_floor(spec, tol_rank)
    prev = np.zeros((dim, dim), dtype=complex)
    pieces = []
    for k in range(1, len(sd) + 1):
        F = linalg.range_projection(apply_map(spec, sd.cumulative(k)), tol_rank, floor)
        pieces.append(linalg.idempotize(F - prev))
        prev = F
    return MapLimitResult(_assemble(sd.values, pieces, dim), sd.values.copy(), tuple(pieces))


def neg_map_limit(spec: PositiveMapSpec, A, tol_rank: float = linalg.TOL_RANK) -> MapLimitResult:
    """``lim Phi(A^{-p})^{-1/p}`` with generalized-inverse powers.

    ``F~_k = supp Phi(P_k + ... + P_m)`` and the limit is
    ``sum_k a_k (F~_k - F~_{k+1})``.
    """
    A = linalg.as_psd(A, name="A")
    if A.shape[0] != spec.in_dim:
        raise DimensionMismatch(f"map input dimension {spec.in_dim} but A is {A.shape[0]}x{A.shape[0]}")
    sd = linalg.group_spectrum(A)
    dim = spec.out_dim
    m = len(sd)
    nxt = np.zeros((dim, dim), dtype=complex)
    pieces: list = [None] * m
    floor = _noise_floor(spec, tol_rank)
    tail = np.zeros((spec.in_dim, spec.in_dim), dtype=complex)
    for k in range(m - 1, -1, -1):
        tail = tail + sd.projections[k]
        F = linalg.range_projection(apply_map(spec, tail), tol_rank, floor)
        pieces[k] = linalg.idempotize(F - nxt)
        nxt = F
    return MapLimitResult(_assemble(sd.values, pieces, dim), sd.values.copy(), tuple(pieces))


def _mp_eigh(M: mpmath.matrix) -> tuple[list, mpmath.matrix]:
    if M.rows == 1:
        return [mpmath.re(M[0, 0])], mpmath.eye(1)
    E, Q = mpmath.eighe((M + M.transpose_conj()) / 2)
    return [mpmath.re(E[i]) for i in range(M.rows)], Q


def _mp_function(vals, Q: mpmath.matrix, g) -> mpmath.matrix:
    out = mpmath.matrix(Q.rows, Q.rows)
    for k, v in enumerate(vals):
        col = Q[:, k]
        out += g(v) * (col * col.transpose_conj())
    return out


def _regularized_iterate(kraus: list, A: mpmath.matrix, eps: float, p: float) -> np.ndarray:
    """``Phi((A + eps I)^{-p})^{-1/p}`` in the working precision of the caller."""
    vals, Q = _mp_eigh(A)
    shifted = _mp_function(vals, Q, lambda a: (max(a, 0) + eps) ** (-p))
    out = kraus[0].rows
    M = mpmath.matrix(out, out)
    for K in kraus:
        M += K * shifted * K.transpose_conj()
    mv, mq = _mp_eigh(M)
    if min(mv) <= 0:
        raise NoConvergence("regularized iterate lost positive definiteness")
    root = _mp_function(mv, mq, lambda x: x ** (-1 / mpmath.mpf(p)))
    return np.array([[complex(root[i, j]) for j in range(out)] for i in range(out)])


def epsilon_neg_limit(
    spec: PositiveMapSpec,
    A,
    p: float,
    schedule=EPS_SCHEDULE,
    cauchy: float = EPS_CAUCHY,
) -> EpsilonLimitResult:
    """``lim_{eps -> 0} Phi((A + eps I)^{-p})^{-1/p}`` along a decreasing eps schedule.

    The output is first compressed to the support of ``Phi(I)``, where every
    regularized iterate is positive definite.  The condition number of
    ``(A + eps I)^{-p}`` is about ``eps^{-p}``, so each iterate is evaluated
    in arbitrary precision with enough digits to resolve it.  Iteration stops
    once two successive iterates agree to ``cauchy`` (relative to
    ``max(1, |X|)``).
    """
    if p < 1:
        raise linalg.InputError("p must be at least 1")
    A = linalg.as_psd(A, name="A")
    if A.shape[0] != spec.in_dim:
        raise DimensionMismatch(f"map input dimension {spec.in_dim} but A is {A.shape[0]}x{A.shape[0]}")
    phi = support_compress(spec)
    W = None if phi is spec else support_isometry(spec)
    image = linalg.eig_hermitian(apply_map(phi, np.eye(spec.in_dim)))[0]
    kraus_digits = math.log10(image[0] / image[-1]) if image[-1] > 0 else 0.0
    norm = max(linalg.opnorm(A), 1.0)
    iterates = []
    used = []
    monotone = True
    delta = math.inf
    for eps in schedule:
        digits = p * math.log10((norm + eps) / eps) + kraus_digits + 30
        with mpmath.workdps(int(math.ceil(digits))):
            kraus = [mpmath.matrix(K.tolist()) for K in kraus_operators(phi)]
            X = _regularized_iterate(kraus, mpmath.matrix(A.tolist()), mpmath.mpf(eps), p)
        if W is not None:
            X = W @ X @ W.conj().T
        if iterates:
            prev = iterates[-1]
            slack = linalg.TOL_PSD * max(1.0, linalg.opnorm(prev))
            if linalg.lambda_min(prev - X) < -slack:
                monotone = False
            delta = linalg.opnorm(X - prev)
        iterates.append(X)
        used.append(eps)
        if delta <= cauchy * max(1.0, linalg.opnorm(X)):
            break
    if delta > cauchy * max(1.0, linalg.opnorm(iterates[-1])):
        raise NoConvergence(f"epsilon limit did not settle (last step {delta:.3e})")
    return EpsilonLimitResult(iterates[-1], float(delta), tuple(used), monotone)


def _check_same(A: np.ndarray, B: np.ndarray) -> None:
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")


def spectral_sup(A, B) -> np.ndarray:
    """Supremum ``A ∨ B`` in the spectral order.

    Evaluated as the limit of the block-average map on ``A ⊕ B``, whose
    partial supports are the joins ``E_[c,inf)(A) ∨ E_[c,inf)(B)``.
    """
    A = linalg.as_psd(A, name="A")
    B = linalg.as_psd(B, name="B")
    _check_same(A, B)
    n = A.shape[0]
    return map_limit(PositiveMapSpec.block_average(n), linalg.direct_sum(A, B)).limit


def spectral_inf(A, B, tol_group: float = linalg.TOL_GROUP) -> np.ndarray:
    """Infimum ``A ∧ B`` in the spectral order.

    With the merged distinct positive eigenvalues ``c_1 > ... > c_l`` of A and
    B, ``G_k = E_[c_k,inf)(A) ∧ E_[c_k,inf)(B)`` and
    ``A ∧ B = sum_k c_k (G_k - G_{k-1})``.
    """
    A = linalg.as_psd(A, name="A")
    B = linalg.as_psd(B, name="B")
    _check_same(A, B)
    n = A.shape[0]
    sa = linalg.group_spectrum(A, tol_group)
    sb = linalg.group_spectrum(B, tol_group)
    gap = tol_group * max(1.0, *sa.values, *sb.values)
    merged: list[float] = []
    for c in sorted([*sa.values, *sb.values], reverse=True):
        if not merged or merged[-1] - c > gap:
            merged.append(float(c))

    def upper(sd, c):
        out = np.zeros((n, n), dtype=complex)
        for a, P in zip(sd.values, sd.projections):
            if a >= c - gap:
                out = out + P
        return out

    result = np.zeros((n, n), dtype=complex)
    prev = np.zeros((n, n), dtype=complex)
    for c in merged:
        G = linalg.projection_meet(upper(sa, c), upper(sb, c))
        result = result + c * linalg.idempotize(G - prev)
        prev = G
    return result
