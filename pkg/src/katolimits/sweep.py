"""Numerical oracle: evaluate p-indexed families on a grid of exponents.

Three families are supported::

    sweep_map       Phi(A^p)^{1/p}       (or Phi(A^{-p})^{-1/p})
    sweep_mean      (A^p sigma B)^{1/p}
    sweep_sandwich  (A^p B A^p)^{1/p}

Large exponents make the relevant eigenvalues differ by hundreds or thousands
of decimal orders, far beyond double precision.  Every iterate is therefore
computed in ``mpmath`` at a working precision chosen from the spectral range
of the inputs, and only the final ``1/p``-th root is rounded back to double.

Ranks are made exact before entering high precision.  PSD inputs have
eigenvalues below ``TOL_ZERO`` (relative) clipped to zero, and each Kraus
operator is replaced by its rank-truncated SVD factors ``L R^*``.  After the
power step, eigenvalues below the precision floor are treated as exact zeros.

The oracle never calls the closed-form routines of :mod:`katolimits.kato` or
:mod:`katolimits.means`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import mpmath
import numpy as np

from . import linalg
from .errors import DimensionMismatch, InputError, NonPositiveIterate
from .maps import PositiveMapSpec, kraus_operators
from .means import MeanSpec, transpose

DEFAULT_GRID = tuple(float(2 ** k) for k in range(13))
P_CAP = float(2 ** 14)
GUARD_DIGITS = 60
MONOTONE_TOL = 1e-8
EPS_FALLBACK = 1e-12


@dataclass(frozen=True)
class ConvergenceReport:
    """Iterates on a p-grid together with convergence diagnostics.

    ``monotone_flag`` is ``"constant"`` when successive iterates agree within
    the monotonicity tolerance, ``"decreasing"`` / ``"increasing"`` for a
    Loewner-monotone sequence and ``"none"`` otherwise.  ``violations`` holds
    the largest Loewner violation of each direction.
    """

    p_grid: tuple
    iterates: tuple
    target: np.ndarray | None
    errors: tuple | None
    eigenvalue_tracks: tuple
    monotone_flag: str
    violations: dict
    cauchy_delta: float

    @property
    def violation(self) -> float:
        """Violation of the reported direction (the smaller one for ``none``)."""
        if self.monotone_flag in ("decreasing", "increasing"):
            return self.violations[self.monotone_flag]
        if self.monotone_flag == "constant":
            return 0.0
        return min(self.violations.values())

    @property
    def last(self) -> np.ndarray:
        return self.iterates[-1]


# ---------------------------------------------------------------------------
# high-precision primitives
# ---------------------------------------------------------------------------

def _mp(X: np.ndarray) -> mpmath.matrix:
    return mpmath.matrix([[mpmath.mpc(complex(z)) for z in row] for row in np.asarray(X)])


def _np(M: mpmath.matrix) -> np.ndarray:
    return np.array([[complex(M[i, j]) for j in range(M.cols)] for i in range(M.rows)])


def _adj(M: mpmath.matrix) -> mpmath.matrix:
    return M.transpose_conj()


def _herm(M: mpmath.matrix) -> mpmath.matrix:
    return (M + _adj(M)) / 2


def _eigh(M: mpmath.matrix) -> tuple[list, mpmath.matrix]:
    """Descending real eigenvalues and eigenvectors of a Hermitian mp matrix."""
    if M.rows == 1:
        return [mpmath.re(M[0, 0])], mpmath.eye(1)
    E, Q = mpmath.eighe(_herm(M))
    vals = [mpmath.re(E[i]) for i in range(M.rows)]
    order = sorted(range(M.rows), key=lambda i: -vals[i])
    Qs = mpmath.matrix(M.rows, M.rows)
    for c, i in enumerate(order):
        for r in range(M.rows):
            Qs[r, c] = Q[r, i]
    return [vals[i] for i in order], Qs


def _assemble(vals: Sequence, Q: mpmath.matrix) -> mpmath.matrix:
    n = Q.rows
    out = mpmath.matrix(n, n)
    for k, v in enumerate(vals):
        if v == 0:
            continue
        col = Q[:, k]
        out += v * (col * _adj(col))
    return out


class _CleanPSD:
    """PSD matrix with exact zero eigenvalues, held as an mp eigendecomposition."""

    def __init__(self, A: np.ndarray, name: str):
        A = linalg.as_psd(A, name=name)
        vals, Q = _eigh(_mp(A))
        top = max(vals[0], 0) if vals else 0
        self.values = [v if (v > 0 and v > linalg.TOL_ZERO * top) else mpmath.mpf(0) for v in vals]
        self.Q = Q
        self.n = A.shape[0]
        pos = [float(v) for v in self.values if v > 0]
        self.top = max(pos) if pos else 0.0
        self.bottom = min(pos) if pos else 0.0

    @property
    def singular(self) -> bool:
        return any(v == 0 for v in self.values)

    def log10_range(self, include_one: bool = False) -> float:
        if self.top == 0:
            return 0.0
        hi, lo = self.top, self.bottom
        if include_one:
            hi, lo = max(hi, 1.0), min(lo, 1.0)
        return math.log10(hi / lo)

    def power(self, p) -> mpmath.matrix:
        """``A^p`` with generalized inverse powers for ``p < 0``."""
        p = mpmath.mpf(p)
        return _assemble([v ** p if v > 0 else 0 for v in self.values], self.Q)

    def support(self) -> mpmath.matrix:
        return _assemble([1 if v > 0 else 0 for v in self.values], self.Q)


def _clean_kraus(spec: PositiveMapSpec, tol_rank: float) -> list[tuple[mpmath.matrix, mpmath.matrix]]:
    """Kraus operators as exact-rank factor pairs ``(L, R)`` with ``K = L R^*``."""
    pairs = []
    for K in kraus_operators(spec):
        U, s, Vh = np.linalg.svd(np.asarray(K, dtype=complex), full_matrices=False)
        if not s.size or s[0] == 0:
            continue
        r = int(np.sum(s > tol_rank * s[0]))
        pairs.append((_mp(U[:, :r] * s[:r]), _mp(Vh[:r, :].conj().T)))
    return pairs


def _apply_pairs(pairs, X: mpmath.matrix, out_dim: int) -> mpmath.matrix:
    out = mpmath.matrix(out_dim, out_dim)
    for L, R in pairs:
        out += L * (_adj(R) * X * R) * _adj(L)
    return out


def _root(M: mpmath.matrix, p: float, floor_digits: float, negative: bool = False):
    """``M^{1/p}`` (or ``M^{-1/p}`` on the support) rounded to double.

    Eigenvalues below ``10^-floor_digits`` relative to the largest are exact
    zeros; clearly negative eigenvalues raise :class:`NonPositiveIterate`.
    """
    vals, Q = _eigh(M)
    top = max(abs(vals[0]), abs(vals[-1])) if vals else 0
    if top == 0:
        n = M.rows
        return np.zeros((n, n), dtype=complex), np.zeros(n)
    if vals[-1] < -linalg.TOL_PSD * top:
        raise NonPositiveIterate(f"iterate has eigenvalue {float(vals[-1] / top):.3e} relative to its norm")
    cut = top * mpmath.mpf(10) ** (-floor_digits)
    e = mpmath.mpf(-1 if negative else 1) / p
    roots = [v ** e if v > cut else mpmath.mpf(0) for v in vals]
    out = _np(_assemble(roots, Q))
    out = (out + out.conj().T) / 2
    return out, np.array([float(r) for r in roots])


def _digits(range_digits: float, amplification: float = 0.0) -> tuple[int, float]:
    """Working precision and zero floor, in decimal digits.

    ``range_digits`` bounds the spread between the largest and the smallest
    nonzero eigenvalue of the result; ``amplification`` bounds how much
    rounding noise grows relative to the result along the way.
    """
    return int(math.ceil(range_digits + amplification)) + GUARD_DIGITS, range_digits + GUARD_DIGITS / 2


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

def _check_grid(p_grid) -> tuple:
    grid = tuple(float(p) for p in p_grid)
    if not grid:
        raise InputError("p-grid is empty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise InputError("p-grid must be strictly increasing")
    if grid[0] < 1 or grid[-1] > P_CAP:
        raise InputError(f"p-grid must lie in [1, {P_CAP:g}]")
    return grid


def _report(grid, iterates, tracks, target) -> ConvergenceReport:
    errors = None
    if target is not None:
        target = np.asarray(target, dtype=complex)
        if target.shape != iterates[0].shape:
            raise DimensionMismatch(f"target shape {target.shape} vs iterate shape {iterates[0].shape}")
        errors = tuple(linalg.opnorm(X - target) for X in iterates)
    dec = inc = 0.0
    steps = 0.0
    for X, Y in zip(iterates, iterates[1:]):
        dec = max(dec, max(0.0, -linalg.lambda_min(X - Y)))
        inc = max(inc, max(0.0, -linalg.lambda_min(Y - X)))
        steps = max(steps, linalg.opnorm(Y - X))
    scale = max(1.0, max(linalg.opnorm(X) for X in iterates))
    tol = MONOTONE_TOL * scale
    if steps <= tol:
        flag = "constant"
    elif dec <= tol:
        flag = "decreasing"
    elif inc <= tol:
        flag = "increasing"
    else:
        flag = "none"
    cauchy = linalg.opnorm(iterates[-1] - iterates[-2]) if len(iterates) > 1 else math.inf
    return ConvergenceReport(
        p_grid=tuple(grid),
        iterates=tuple(iterates),
        target=target,
        errors=errors,
        eigenvalue_tracks=tuple(tracks),
        monotone_flag=flag,
        violations={"decreasing": dec, "increasing": inc},
        cauchy_delta=float(cauchy),
    )


# ---------------------------------------------------------------------------
# families
# ---------------------------------------------------------------------------

def sweep_map(
    spec: PositiveMapSpec,
    A,
    p_grid=DEFAULT_GRID,
    target=None,
    negative: bool = False,
    tol_rank: float = linalg.TOL_RANK,
) -> ConvergenceReport:
    """Iterates ``Phi(A^p)^{1/p}``, or ``Phi(A^{-p})^{-1/p}`` when ``negative``.

    Negative powers are generalized inverses on the respective supports.
    """
    grid = _check_grid(p_grid)
    A = linalg.as_psd(A, name="A")
    if A.shape[0] != spec.in_dim:
        raise DimensionMismatch(f"map input dimension {spec.in_dim} but A is {A.shape[0]}x{A.shape[0]}")
    iterates, tracks = [], []
    for p in grid:
        X, spectrum = map_iterate(spec, A, p, negative, tol_rank)
        iterates.append(X)
        tracks.append(spectrum)
    return _report(grid, iterates, tracks, target)


def map_iterate(
    spec: PositiveMapSpec, A, p: float, negative: bool = False, tol_rank: float = linalg.TOL_RANK
) -> tuple[np.ndarray, np.ndarray]:
    """One iterate ``Phi(A^p)^{1/p}`` (any ``p > 0``) and its descending spectrum."""
    A = linalg.as_psd(A, name="A")
    dps, floor = _digits(p * _CleanPSD(A, "A").log10_range())
    with mpmath.workdps(dps):
        cA = _CleanPSD(A, "A")
        pairs = _clean_kraus(spec, tol_rank)
        Y = _apply_pairs(pairs, cA.power(-p if negative else p), spec.out_dim)
        X, spectrum = _root(Y, p, floor, negative)
    return X, np.sort(spectrum)[::-1]


def _meet_with_support(E: _CleanPSD, A: _CleanPSD) -> mpmath.matrix:
    """Projection onto ``ran E ∩ supp A``: the kernel of ``(I - E^0) + (I - A^0)``."""
    n = A.n
    eye = mpmath.eye(n)
    vals, Q = _eigh((eye - E.support()) + (eye - A.support()))
    return _assemble([1 if abs(v) < mpmath.mpf("1e-8") else 0 for v in vals], Q)


def _f_mp(spec: MeanSpec, x):
    if x == 0:
        return mpmath.mpf(spec.f_at_zero)
    try:
        return spec.f(x)
    except TypeError:
        return mpmath.mpf(spec.f(float(x)))


def _apply_f(spec: MeanSpec, M: mpmath.matrix, floor_digits: float, hat: bool = False) -> mpmath.matrix:
    vals, Q = _eigh(M)
    top = max(abs(v) for v in vals)
    cut = top * mpmath.mpf(10) ** (-floor_digits)
    out = []
    for v in vals:
        if v <= cut:
            out.append(mpmath.mpf(0) if hat else mpmath.mpf(spec.f_at_zero))
        else:
            out.append(_f_mp(spec, v) / v if hat else _f_mp(spec, v))
    return _assemble(out, Q)


def _direct_mp(spec: MeanSpec, half: mpmath.matrix, ihalf: mpmath.matrix, B: mpmath.matrix, floor):
    """``A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`` from precomputed square roots."""
    return half * _apply_f(spec, ihalf * B * ihalf, floor) * half


def _mean_power(spec: MeanSpec, cA: _CleanPSD, cB: _CleanPSD, B: np.ndarray, p: float, floor: float):
    """``A^p sigma B`` in the current mp context."""
    if not cA.singular:
        return _direct_mp(spec, cA.power(p / 2), cA.power(-p / 2), _assemble(cB.values, cB.Q), floor)
    if (
        spec.vanishes_at_zero
        and spec.kind in ("geometric", "harmonic", "logarithmic")
        and (spec.kind != "geometric" or spec.param < 1)
        and linalg.is_projection(B)
    ):
        # A^p sigma E = f_hat(W A^{-p} W) with W = ran E ∩ supp A when f(0) = 0 and f(x)/x -> 0.
        W = _meet_with_support(cB, cA)
        return _apply_f(spec, W * cA.power(-p) * W, floor, hat=True)
    if not cB.singular:
        # A sigma B = B sigma~ A with the transposed mean
        return _direct_mp(transpose(spec), cB.power(0.5), cB.power(-0.5), cA.power(p), floor)
    # both singular: regularize A^p, approximate only
    shift = EPS_FALLBACK * max(v ** p for v in cA.values)
    shifted = [v ** p + shift for v in cA.values]
    half = _assemble([mpmath.sqrt(v) for v in shifted], cA.Q)
    ihalf = _assemble([1 / mpmath.sqrt(v) for v in shifted], cA.Q)
    return _direct_mp(spec, half, ihalf, _assemble(cB.values, cB.Q), floor)


def sweep_mean(spec: MeanSpec, A, B, p_grid=DEFAULT_GRID, target=None) -> ConvergenceReport:
    """Iterates ``(A^p sigma B)^{1/p}``.

    Positive definite A uses the defining formula; singular A with a
    projection B and a mean with ``f(0) = 0`` and ``f(x)/x -> 0`` uses the
    exact reduction to the range of B intersected with the support of A;
    positive definite B uses the transposed mean.  Two singular arguments
    outside those cases fall back to regularizing ``A^p`` by ``1e-12 |A^p|``,
    which is only approximate.
    """
    grid = _check_grid(p_grid)
    A = linalg.as_psd(A, name="A")
    B = linalg.as_psd(B, name="B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    ra = _CleanPSD(A, "A").log10_range(include_one=True)
    rb = _CleanPSD(B, "B").log10_range(include_one=True)
    iterates, tracks = [], []
    for p in grid:
        # conjugating by A^{p/2} amplifies noise in f(T) by up to the spread of A^p
        dps, floor = _digits(2 * p * ra + 2 * rb, p * ra)
        with mpmath.workdps(dps):
            cA, cB = _CleanPSD(A, "A"), _CleanPSD(B, "B")
            Y = _mean_power(spec, cA, cB, B, p, floor)
            X, spectrum = _root(Y, p, floor)
        iterates.append(X)
        tracks.append(np.sort(spectrum)[::-1])
    return _report(grid, iterates, tracks, target)


def sweep_sandwich(A, B, p_grid=DEFAULT_GRID, target=None) -> ConvergenceReport:
    """Iterates ``(A^p B A^p)^{1/p}``."""
    grid = _check_grid(p_grid)
    A = linalg.as_psd(A, name="A")
    B = linalg.as_psd(B, name="B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    ra = _CleanPSD(A, "A").log10_range(include_one=True)
    rb = _CleanPSD(B, "B").log10_range(include_one=True)
    iterates, tracks = [], []
    for p in grid:
        dps, floor = _digits(2 * p * ra + rb)
        with mpmath.workdps(dps):
            cA, cB = _CleanPSD(A, "A"), _CleanPSD(B, "B")
            Ap = cA.power(p)
            X, spectrum = _root(Ap * _assemble(cB.values, cB.Q) * Ap, p, floor)
        iterates.append(X)
        tracks.append(np.sort(spectrum)[::-1])
    return _report(grid, iterates, tracks, target)


# ---------------------------------------------------------------------------
# order checks
# ---------------------------------------------------------------------------

def loewner_compare(X, Y, tol: float = linalg.TOL_PSD) -> str:
    """Classify ``X`` against ``Y``: ``"equal"``, ``"le"`` (X ⪯ Y), ``"ge"`` or ``"incomparable"``.

    The slack is ``tol * max(1, |X|, |Y|)``.
    """
    X = linalg.as_hermitian(X, name="X")
    Y = linalg.as_hermitian(Y, name="Y")
    if X.shape != Y.shape:
        raise DimensionMismatch(f"shapes differ: {X.shape} vs {Y.shape}")
    slack = tol * max(1.0, linalg.opnorm(X), linalg.opnorm(Y))
    if linalg.opnorm(X - Y) <= slack:
        return "equal"
    if linalg.lambda_min(Y - X) >= -slack:
        return "le"
    if linalg.lambda_min(X - Y) >= -slack:
        return "ge"
    return "incomparable"
