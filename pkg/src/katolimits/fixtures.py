"""Reference fixtures and seeded random generators for tests and ``selftest``.

Random spectra are drawn from fixed grids so that distinct eigenvalues are
separated by at least the grid step.  This keeps the convergence of p-indexed
sequences fast enough for the oracle at ``p = 2^12``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kato, linalg, means, sweep
from .maps import PositiveMapSpec, apply_map, rank_one_pair_map

GAPPED_GRID = np.round(np.arange(1.0, 3.0001, 0.2), 10)
FINE_GRID = np.round(np.arange(1.0, 3.0001, 0.1), 10)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def random_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    Z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    Q, R = np.linalg.qr(Z)
    d = np.diag(R)
    return Q * (d / np.abs(d))


def with_spectrum(rng: np.random.Generator, values, U: np.ndarray | None = None) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if U is None:
        U = random_unitary(rng, len(values))
    M = (U * values) @ U.conj().T
    return (M + M.conj().T) / 2


def gapped_values(rng: np.random.Generator, n: int, grid=GAPPED_GRID) -> np.ndarray:
    return np.sort(rng.choice(grid, size=n, replace=False))[::-1]


def gapped_pd(rng: np.random.Generator, n: int) -> np.ndarray:
    """Positive definite matrix with distinct eigenvalues in [1, 3] at least 0.2 apart."""
    return with_spectrum(rng, gapped_values(rng, n))


def gapped_psd(rng: np.random.Generator, n: int, rank: int) -> np.ndarray:
    vals = np.concatenate([gapped_values(rng, rank), np.zeros(n - rank)])
    return with_spectrum(rng, vals)


def random_projection(rng: np.random.Generator, n: int, rank: int) -> np.ndarray:
    U = random_unitary(rng, n)[:, :rank]
    return U @ U.conj().T


def random_matrix(rng: np.random.Generator, rows: int, cols: int, rank: int | None = None) -> np.ndarray:
    """Complex Gaussian matrix, of the given rank when ``rank`` is set."""
    if rank is None:
        return rng.normal(size=(rows, cols)) + 1j * rng.normal(size=(rows, cols))
    X = rng.normal(size=(rows, rank)) + 1j * rng.normal(size=(rows, rank))
    Y = rng.normal(size=(rank, cols)) + 1j * rng.normal(size=(rank, cols))
    return X @ Y


def random_unital_kraus(rng: np.random.Generator, n: int, count: int = 2) -> PositiveMapSpec:
    """Unital completely positive map ``X -> sum S^{-1/2} K_i X K_i^* S^{-1/2}``."""
    ops = [random_matrix(rng, n, n) for _ in range(count)]
    S = sum(K @ K.conj().T for K in ops)
    w, V = np.linalg.eigh(S)
    isqrt = (V / np.sqrt(w)) @ V.conj().T
    return PositiveMapSpec.kraus([isqrt @ K for K in ops])


def spectral_sup_pair(rng: np.random.Generator, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Noncommuting PD pair whose merged spectra are distinct on a 0.1 grid."""
    vals = rng.choice(FINE_GRID, size=2 * n, replace=False)
    return with_spectrum(rng, np.sort(vals[:n])[::-1]), with_spectrum(rng, np.sort(vals[n:])[::-1])


def density_pair(rng: np.random.Generator, n: int, commuting: bool) -> tuple[np.ndarray, np.ndarray]:
    """``(rho, sigma)`` with rho of random rank and sigma of gapped spectrum.

    Commuting pairs share an eigenbasis; noncommuting pairs are redrawn until
    ``|[rho^0, sigma]| > 1e-3``.
    """
    while True:
        rank_rho = int(rng.integers(1, n + 1))
        rank_sigma = int(rng.integers(max(1, n - 1), n + 1))
        U = random_unitary(rng, n)
        sv = np.concatenate([gapped_values(rng, rank_sigma), np.zeros(n - rank_sigma)])
        sigma = with_spectrum(rng, sv / sv.sum(), U)
        rv = rng.uniform(0.5, 1.5, size=rank_rho)
        rv = np.concatenate([rv / rv.sum(), np.zeros(n - rank_rho)])
        if commuting:
            rho = with_spectrum(rng, rv, U[:, rng.permutation(n)])
            return rho, sigma
        rho = with_spectrum(rng, rv)
        R = linalg.range_projection(rho)
        if linalg.opnorm(R @ sigma - sigma @ R) > 1e-3:
            return rho, sigma


# ---------------------------------------------------------------------------
# reference fixtures
# ---------------------------------------------------------------------------

HALF = np.full((2, 2), 0.5)


@dataclass(frozen=True)
class Check:
    name: str
    run: Callable[[], tuple[bool, str]]


def _close(X, Y, tol) -> tuple[bool, float]:
    err = linalg.opnorm(np.asarray(X) - np.asarray(Y))
    return err <= tol, err


def check_rank_one_pair() -> tuple[bool, str]:
    phi = rank_one_pair_map()
    A = np.diag([2.0, 1.0])
    ok1, e1 = _close(kato.map_limit(phi, A).limit, np.diag([2.0, 1.0]), 1e-10)
    ok2, e2 = _close(kato.neg_map_limit(phi, A).limit, [[1.5, -0.5], [-0.5, 1.5]], 1e-10)
    return ok1 and ok2, f"limit err {e1:.1e}, negative-power limit err {e2:.1e}"


def check_trace_state() -> tuple[bool, str]:
    phi = PositiveMapSpec.trace_state(HALF)
    A = np.diag([1.0, 0.0])
    ok1, e1 = _close(kato.neg_map_limit(phi, A).limit, [[1.0]], 1e-10)
    eps = kato.epsilon_neg_limit(phi, A, 4.0).limit
    ok2 = abs(eps[0, 0]) <= 1e-8
    pos = [apply_map(phi, linalg.matrix_power(A, p))[0, 0].real ** (1 / p) for p in (1, 2, 4)]
    ok3 = all(abs(v - 2 ** (-1 / p)) <= 1e-12 for v, p in zip(pos, (1, 2, 4)))
    return ok1 and ok2 and ok3, f"generalized limit err {e1:.1e}, regularized value {abs(eps[0, 0]):.1e}"


def check_commuting_sup() -> tuple[bool, str]:
    A = np.diag([3.0, 1.0, 2.0])
    B = np.diag([1.0, 2.0, 2.5])
    ok, err = _close(kato.spectral_sup(A, B), np.diag([3.0, 2.0, 2.5]), 1e-12)
    return ok, f"err {err:.1e}"


def check_projection_mean_limit() -> tuple[bool, str]:
    P = np.diag([1.0, 1.0, 0.0]).astype(complex)
    v = np.array([1.0, 0.0, 1.0]) / np.sqrt(2)
    E = np.outer(v, v) + np.diag([0.0, 1.0, 0.0])
    expected = np.diag([0.0, 1.0, 0.0])
    ok1, e1 = _close(means.geometric_limit(P, E, 0.5), expected, 1e-10)
    rep = sweep.sweep_mean(means.MeanSpec.geometric(0.5), P, E, p_grid=(1.0, 4.0, 64.0))
    spread = max(linalg.opnorm(X - rep.iterates[0]) for X in rep.iterates)
    ok2 = spread <= 1e-9
    return ok1 and ok2, f"closed form err {e1:.1e}, sweep spread {spread:.1e}"


SELFTEST = (
    Check("rank-one pair map limits", check_rank_one_pair),
    Check("trace state negative-power limits", check_trace_state),
    Check("block-average supremum, commuting case", check_commuting_sup),
    Check("geometric mean limit, projection case", check_projection_mean_limit),
)
