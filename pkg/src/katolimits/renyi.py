"""Rényi relative entropies of density matrices and their alpha -> 0 limits.

Divergences that are infinite are returned as ``math.inf``; the JSON layer
tags them as ``"+inf"``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import BadAlpha, DimensionMismatch, InputError, TooLarge
from .kato import congruence_limit
from .maps import PositiveMapSpec
from .sweep import P_CAP, map_iterate

TRACE_TOL = 1e-10
ZERO_TOL = 1e-9
BRUTE_MAX_DIM = 6


@dataclass(frozen=True)
class ZeroLimitReport:
    d0: float
    d0_tilde: float
    q0_tilde: float
    witness_projection: np.ndarray
    commutes: bool
    equality: bool


def as_density(rho, name: str = "rho") -> np.ndarray:
    M = linalg.as_psd(rho, name=name)
    tr = float(np.trace(M).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InputError(f"{name} must have unit trace, got {tr!r}")
    return M


def _neg_log(x: float) -> float:
    # x is a trace against a unit-trace sigma, so TOL_ZERO is an absolute floor
    return math.inf if x <= linalg.TOL_ZERO else -math.log(x)


def _support_contained(rho: np.ndarray, sigma: np.ndarray, tol_rank: float) -> bool:
    R = linalg.range_projection(rho, tol_rank)
    S = linalg.range_projection(sigma, tol_rank)
    return linalg.opnorm(R - S @ R) <= math.sqrt(tol_rank)


def renyi_divergences(rho, sigma, alpha: float, tol_rank: float = linalg.TOL_RANK) -> tuple[float, float]:
    """Traditional and sandwiched Rényi divergences ``(D_alpha, D~_alpha)``.

    Negative powers are generalized inverses on the support.  For
    ``alpha > 1`` both are ``inf`` unless ``supp rho ⊆ supp sigma``.
    """
    rho = as_density(rho, "rho")
    sigma = as_density(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"shapes differ: {rho.shape} vs {sigma.shape}")
    if not (alpha > 0 and alpha != 1 and math.isfinite(alpha)):
        raise BadAlpha(f"alpha must be positive and different from 1, got {alpha!r}")
    if alpha > 1 and not _support_contained(rho, sigma, tol_rank):
        return math.inf, math.inf
    Q = float(np.trace(linalg.matrix_power(rho, alpha) @ linalg.matrix_power(sigma, 1 - alpha)).real)
    s = linalg.matrix_power(sigma, (1 - alpha) / (2 * alpha))
    inner = s @ rho @ s
    Qt = float(np.trace(linalg.matrix_power(inner, alpha)).real)

    def div(q):
        if q <= 0:
            return math.inf
        return math.log(q) / (alpha - 1)

    return div(Q), div(Qt)


def zero_limits(rho, sigma, tol_rank: float = linalg.TOL_RANK) -> ZeroLimitReport:
    """``D_0``, ``D~_0`` and the maximizing projection for ``Q~_0``.

    ``P_0`` spans the eigenvectors of sigma selected by the congruence-limit
    rule with ``K = rho^0`` and ``A = sigma``; ``Q~_0 = Tr(P_0 sigma)``.
    """
    rho = as_density(rho, "rho")
    sigma = as_density(sigma, "sigma")
    if rho.shape != sigma.shape:
        raise DimensionMismatch(f"shapes differ: {rho.shape} vs {sigma.shape}")
    R = linalg.range_projection(rho, tol_rank)
    d0 = _neg_log(float(np.trace(R @ sigma).real))
    sd = linalg.group_spectrum(sigma)
    _, V = sd.eigen_sequence()
    res = congruence_limit(R, sigma, tol_rank)
    Vs = V[:, list(res.selected_indices)]
    P0 = Vs @ Vs.conj().T
    q0 = float(np.trace(P0 @ sigma).real)
    d0t = _neg_log(q0)
    commutes = linalg.opnorm(R @ sigma - sigma @ R) <= ZERO_TOL
    if math.isinf(d0) or math.isinf(d0t):
        equality = math.isinf(d0) and math.isinf(d0t)
    else:
        equality = abs(d0 - d0t) <= ZERO_TOL
    return ZeroLimitReport(d0, d0t, q0, P0, bool(commutes), bool(equality))


def q0_brute(rho, sigma, tol_rank: float = linalg.TOL_RANK, seed: int = 0) -> float:
    """``max Tr(P sigma)`` over projections with ``[P, sigma] = 0`` and ``(P rho^0 P)^0 = P``.

    Every admissible P is a sum of subspaces of sigma's eigenspaces, and only
    the dimension taken from each eigenspace affects ``Tr(P sigma)``.  Each
    dimension vector is tested with generic (seeded random) subspaces, which
    are admissible whenever any choice of that dimension is.
    """
    rho = as_density(rho, "rho")
    sigma = as_density(sigma, "sigma")
    n = rho.shape[0]
    if n > BRUTE_MAX_DIM:
        raise TooLarge(f"exhaustive search limited to n <= {BRUTE_MAX_DIM}, got {n}")
    R = linalg.range_projection(rho, tol_rank)
    sd = linalg.group_spectrum(sigma)
    blocks = list(zip(sd.values, sd.bases))
    if sd.kernel_basis.shape[1]:
        blocks.append((0.0, sd.kernel_basis))
    rng = np.random.default_rng(seed)
    generic = []
    for _, B in blocks:
        d = B.shape[1]
        G = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        Qg, _ = np.linalg.qr(G)
        generic.append(B @ Qg)
    best = 0.0
    for dims in itertools.product(*[range(B.shape[1] + 1) for _, B in blocks]):
        cols = [G[:, :d] for G, d in zip(generic, dims) if d]
        if not cols:
            continue
        S = np.hstack(cols)
        s = np.linalg.svd(R @ S, compute_uv=False)
        if s[-1] <= 1e-8:
            continue
        best = max(best, sum(float(v) * d for (v, _), d in zip(blocks, dims)))
    return best


def alt_trace_monotone(rho0, sigma, p_grid) -> list[float]:
    """``Tr (rho^0 sigma^p rho^0)^{1/p}`` along an increasing grid in ``(0, 2^14]``."""
    grid = [float(p) for p in p_grid]
    if len(grid) < 2:
        raise InputError("p-grid needs at least two points")
    if any(b <= a for a, b in zip(grid, grid[1:])) or grid[0] <= 0 or grid[-1] > P_CAP:
        raise InputError(f"p-grid must be strictly increasing inside (0, {P_CAP:g}]")
    R = linalg.as_hermitian(rho0, name="rho0")
    if not linalg.is_projection(R):
        raise InputError("rho0 must be an orthogonal projection")
    sigma = as_density(sigma, "sigma")
    phi = PositiveMapSpec.congruence(R)
    return [float(np.sum(map_iterate(phi, sigma, p)[1])) for p in grid]
