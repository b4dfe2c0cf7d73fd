"""Kubo-Ando operator means and their large-p behaviour.

A mean is described by its representing function ``f`` (operator monotone
on ``[0, inf)`` with ``f(1) = 1``).  The builtin families are

=============  ==============================  ============
kind           f(x)                            f(0)
=============  ==============================  ============
arithmetic     1 - a + a x                     1 - a
geometric      x**a                            0
harmonic       x / ((1 - a) x + a)             0
logarithmic    (x - 1) / log x                 0
=============  ==============================  ============

Every builtin ``f`` accepts numpy arrays as well as ``mpmath`` numbers, which
lets the high-precision sweep reuse the same definitions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import mpmath
import numpy as np

from . import linalg
from .errors import (
    BadAlpha,
    DimensionMismatch,
    DomainError,
    InputError,
    NoConvergence,
    RequiresPositiveDefinite,
    RequiresVanishingAtZero,
)
from .kato import EPS_CAUCHY, EPS_SCHEDULE

BUILTIN_KINDS = ("arithmetic", "geometric", "harmonic", "logarithmic")
CUSTOM = "custom"

_CHECK_GRID = np.logspace(-6, 6, 121)
_PM_GRID = np.logspace(-3, 3, 60)
_PM_POWERS = (1.5, 2.0, 4.0)


def _is_mp(x) -> bool:
    return isinstance(x, (mpmath.mpf, mpmath.mpc))


def _log_mean(x):
    if _is_mp(x):
        if x == 0:
            return mpmath.mpf(0)
        if x == 1:
            return mpmath.mpf(1)
        return (x - 1) / mpmath.log(x)
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = (x - 1.0) / np.log(x)
    out = np.where(x == 0, 0.0, out)
    # log x ~ (x-1) - (x-1)^2/2 near 1
    near = np.abs(x - 1.0) < 1e-6
    out = np.where(near, 1.0 + (x - 1.0) / 2, out)
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class MeanSpec:
    """A Kubo-Ando operator mean.

    ``alpha`` is ``f'(1)``; ``param`` is the family weight for builtins (for
    the logarithmic mean both are 1/2).
    """

    name: str
    kind: str
    f: Callable = field(repr=False, compare=False)
    f_at_zero: float
    alpha: float
    param: float | None = None

    # builtins -------------------------------------------------------------

    @classmethod
    def arithmetic(cls, a: float = 0.5) -> "MeanSpec":
        _check_weight(a, open_interval=True)
        return cls(f"arithmetic:{a:g}", "arithmetic", lambda x: 1 - a + a * x, 1 - a, a, a)

    @classmethod
    def geometric(cls, a: float = 0.5) -> "MeanSpec":
        _check_weight(a, open_interval=False)
        return cls(f"geometric:{a:g}", "geometric", lambda x: x ** a, 0.0 if a > 0 else 1.0, a, a)

    @classmethod
    def harmonic(cls, a: float = 0.5) -> "MeanSpec":
        _check_weight(a, open_interval=True)
        return cls(f"harmonic:{a:g}", "harmonic", lambda x: x / ((1 - a) * x + a), 0.0, a, a)

    @classmethod
    def logarithmic(cls) -> "MeanSpec":
        return cls("logarithmic", "logarithmic", _log_mean, 0.0, 0.5, None)

    @classmethod
    def custom(cls, name: str, f: Callable, f_at_zero: float | None = None) -> "MeanSpec":
        """Wrap a user function; only necessary conditions are checked.

        ``f`` must be scalar and must return 1 at 1.  Operator monotonicity is
        the caller's responsibility: here ``f`` is only checked to be
        nondecreasing and concave on a log-spaced grid over [1e-6, 1e6].
        """
        if abs(f(1.0) - 1.0) > 1e-12:
            raise InputError(f"custom mean {name!r}: f(1) = {f(1.0)!r}, expected 1")
        ys = np.array([f(float(x)) for x in _CHECK_GRID])
        if not np.all(np.isfinite(ys)) or np.any(ys < 0):
            raise DomainError(f"custom mean {name!r}: f must be finite and non-negative")
        scale = np.maximum(1.0, np.abs(ys))
        if np.any(np.diff(ys) < -1e-12 * scale[1:]):
            raise InputError(f"custom mean {name!r}: f is not nondecreasing")
        slopes = np.diff(ys) / np.diff(_CHECK_GRID)
        if np.any(np.diff(slopes) > 1e-9 * np.maximum(1.0, np.abs(slopes[1:]))):
            raise InputError(f"custom mean {name!r}: f is not concave")
        if f_at_zero is None:
            f_at_zero = float(f(1e-300))
        h = 1e-6
        alpha = (f(1 + h) - f(1 - h)) / (2 * h)
        return cls(name, CUSTOM, f, float(f_at_zero), float(alpha), None)

    # helpers --------------------------------------------------------------

    def __call__(self, x):
        return self.f(x)

    @property
    def vanishes_at_zero(self) -> bool:
        return self.f_at_zero == 0.0

    def at(self, xs) -> np.ndarray:
        """Vectorized evaluation with ``f(0)`` taken from ``f_at_zero``."""
        xs = np.asarray(xs, dtype=float)
        out = np.empty(xs.shape)
        for i, x in np.ndenumerate(xs):
            out[i] = self.f_at_zero if x == 0 else float(self.f(float(x)))
        return out


def _check_weight(a: float, open_interval: bool) -> None:
    ok = 0 < a < 1 if open_interval else 0 <= a <= 1
    if not ok:
        raise BadAlpha(f"weight {a!r} outside {'(0, 1)' if open_interval else '[0, 1]'}")


def parse_mean(text: str) -> MeanSpec:
    """Parse ``name[:alpha]``, e.g. ``geometric:0.3`` or ``logarithmic``."""
    name, _, arg = text.partition(":")
    name = name.strip().lower()
    if name == "logarithmic":
        if arg:
            raise InputError("the logarithmic mean takes no weight")
        return MeanSpec.logarithmic()
    if name not in BUILTIN_KINDS:
        raise InputError(f"unknown mean {name!r}; expected one of {', '.join(BUILTIN_KINDS)}")
    try:
        a = float(arg) if arg else 0.5
    except ValueError:
        raise InputError(f"bad weight {arg!r} in mean spec {text!r}") from None
    return getattr(MeanSpec, name)(a)


def transpose(spec: MeanSpec) -> MeanSpec:
    """Mean with representing function ``x f(1/x)``, i.e. arguments swapped."""
    if spec.kind in ("arithmetic", "geometric", "harmonic"):
        return getattr(MeanSpec, spec.kind)(1 - spec.param)
    if spec.kind == "logarithmic":
        return spec
    f = spec.f
    ft = f_tilde(spec)
    return MeanSpec(f"{spec.name}~", CUSTOM, ft, float(ft(1e-300)), 1 - spec.alpha, None)


def f_tilde(spec: MeanSpec) -> Callable:
    f = spec.f

    def ft(x):
        return x * f(1 / x) if x != 0 else _tilde_at_zero(spec)

    return ft


def _tilde_at_zero(spec: MeanSpec) -> float:
    # x f(1/x) -> f'(inf)
    if spec.kind == CUSTOM:
        big = 1e300
        return float(spec.f(big) / big)
    return {"arithmetic": spec.param, "geometric": 0.0 if spec.param < 1 else 1.0,
            "harmonic": 0.0, "logarithmic": 0.0}[spec.kind]


def f_hat(spec: MeanSpec) -> Callable:
    """``f(x)/x`` for ``x > 0`` and exactly 0 at ``x = 0``."""
    f = spec.f

    def fh(x):
        return f(x) / x if x != 0 else 0.0

    return fh


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

def _is_pd(A: np.ndarray) -> bool:
    w, _ = linalg.eig_hermitian(A)
    return bool(w[-1] > linalg.TOL_ZERO * max(w[0], 0.0)) and w[-1] > 0


def _direct(spec: MeanSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """``A^{1/2} f(A^{-1/2} B A^{-1/2}) A^{1/2}`` for positive definite A."""
    w, V = linalg.eig_hermitian(A)
    half = (V * np.sqrt(w)) @ V.conj().T
    ihalf = (V / np.sqrt(w)) @ V.conj().T
    T = ihalf @ B @ ihalf
    T = (T + T.conj().T) / 2
    wt, U = linalg.eig_hermitian(T)
    scale = max(abs(wt[0]), abs(wt[-1]), 1e-300)
    wt = np.where(wt < linalg.TOL_ZERO * scale, 0.0, wt)
    fT = (U * spec.at(wt)) @ U.conj().T
    out = half @ fT @ half
    return (out + out.conj().T) / 2


def mean_eval(
    spec: MeanSpec,
    A,
    B,
    schedule=EPS_SCHEDULE,
    cauchy: float = EPS_CAUCHY,
) -> np.ndarray:
    """``A σ_f B`` for PSD A and B.

    Positive definite A uses the defining formula directly; if only B is
    positive definite the transposed mean is used; otherwise the value is the
    limit of ``(A + eps I) σ (B + eps I)`` along ``eps = 10^-k``.
    """
    A = linalg.as_psd(A, name="A")
    B = linalg.as_psd(B, name="B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    if _is_pd(A):
        return _direct(spec, A, B)
    if _is_pd(B):
        return _direct(transpose(spec), B, A)
    n = A.shape[0]
    prev = None
    for eps in schedule:
        X = _direct(spec, A + eps * np.eye(n), B + eps * np.eye(n))
        if prev is not None and linalg.opnorm(X - prev) <= cauchy * max(1.0, linalg.opnorm(X)):
            return X
        prev = X
    raise NoConvergence(
        "epsilon-regularized mean did not settle; both arguments are singular"
    )


def mean_projection_eval(spec: MeanSpec, A, E) -> np.ndarray:
    """``A σ_f E = f_hat(E A^{-1} E)`` for positive definite A and a projection E.

    Requires ``f(0) = 0``.  Eigenvalues of ``E A^{-1} E`` at the numerical zero
    level are mapped to exactly 0.
    """
    if not spec.vanishes_at_zero:
        raise RequiresVanishingAtZero(f"{spec.name} has f(0) = {spec.f_at_zero:g} != 0")
    A = linalg.as_psd(A, name="A")
    E = linalg.as_hermitian(E, name="E")
    if A.shape != E.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {E.shape}")
    if not linalg.is_projection(E):
        raise InputError("E must be an orthogonal projection")
    if not _is_pd(A):
        raise RequiresPositiveDefinite("A must be positive definite")
    Ainv = linalg.matrix_power(A, -1.0)
    X = E @ Ainv @ E
    return linalg.apply_function(X, f_hat(spec), zero_tol=linalg.TOL_ZERO, zero_value=0.0)


def geometric_limit(A, B, alpha: float) -> np.ndarray:
    """``lim (A^p #_alpha B)^{1/p} = sum_k a_k^{1-alpha} Q_k``.

    ``Q_k = (P_1+...+P_k) ∧ E - (P_1+...+P_{k-1}) ∧ E`` with ``E`` the support
    of B and ``P_k`` the spectral projections of A for its positive
    eigenvalues.  ``alpha = 0`` returns A and ``alpha = 1`` returns E.
    """
    A = linalg.as_psd(A, name="A")
    B = linalg.as_psd(B, name="B")
    if A.shape != B.shape:
        raise DimensionMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    if not 0 <= alpha <= 1:
        raise BadAlpha(f"alpha {alpha!r} outside [0, 1]")
    E = linalg.range_projection(B)
    if alpha == 0:
        return A
    if alpha == 1:
        return E
    result, _ = geometric_limit_parts(A, E, alpha)
    return result


def geometric_limit_parts(A, E, alpha: float) -> tuple[np.ndarray, list[np.ndarray]]:
    """Limit plus the projection family ``Q_k`` (one per distinct positive eigenvalue)."""
    sd = linalg.group_spectrum(A)
    n = sd.dim
    prev = np.zeros((n, n), dtype=complex)
    result = np.zeros((n, n), dtype=complex)
    family = []
    for k in range(1, len(sd) + 1):
        meet = linalg.projection_meet(sd.cumulative(k), E)
        Q = linalg.idempotize(meet - prev)
        family.append(Q)
        result = result + sd.values[k - 1] ** (1 - alpha) * Q
        prev = meet
    return result, family


# ---------------------------------------------------------------------------
# scalar diagnostics
# ---------------------------------------------------------------------------

def classify_power_monotonicity(spec: MeanSpec) -> str:
    """Return ``"pmi"``, ``"pmd"``, ``"both"`` or ``"neither"``.

    Compares ``f(x^r)`` with ``f(x)^r`` for ``x`` on a log grid over
    [1e-3, 1e3] and ``r`` in {1.5, 2, 4}.
    """
    inc = dec = True
    for r in _PM_POWERS:
        lhs = spec.at(_PM_GRID ** r)
        rhs = spec.at(_PM_GRID) ** r
        tol = 1e-12 * np.maximum(np.abs(lhs), np.abs(rhs))
        d = lhs - rhs
        inc &= bool(np.all(d >= -tol))
        dec &= bool(np.all(d <= tol))
    if inc and dec:
        return "both"
    if inc:
        return "pmi"
    if dec:
        return "pmd"
    return "neither"


def _tilde_power_root(spec: MeanSpec, x: float, p: float) -> float:
    """``f~(x^p)^{1/p}``; builtins run in mpmath, custom ``f`` in floats."""
    if spec.kind != CUSTOM:
        xp = mpmath.mpf(x) ** p
        val = mpmath.mpf(_tilde_at_zero(spec)) if xp == 0 else xp * spec.f(1 / xp)
        return float(mpmath.exp(mpmath.log(val) / p)) if val > 0 else 0.0
    val = f_tilde(spec)(x ** p if x > 0 else 0.0)
    return float(val ** (1 / p)) if val > 0 else 0.0


def _custom_power(x: float) -> float:
    """Largest ``p <= 2^12`` (a power of 2) keeping ``x^p`` well inside float range."""
    if x in (0.0, 1.0):
        return float(2 ** 12)
    p = 250.0 / abs(math.log10(x))
    return float(2 ** max(0, min(12, math.floor(math.log2(p)))))


def f_tilde_infinity(spec: MeanSpec, x: float, tol: float = 5e-2, return_error: bool = False):
    """``lim_p f~(x^p)^{1/p}`` where ``f~(x) = x f(1/x)``.

    Closed forms for arithmetic (``max(x, 1)``), geometric (``x^{1-a}``) and
    harmonic (``min(x, 1)``) means.  Other means get a numerical estimate at
    ``p = 2^12`` whose error bound is the change from ``p = 2^10``; note that
    the limit is not known to exist for every operator monotone ``f``.  Custom
    functions are evaluated in floats, so ``p`` is lowered until ``x^p``
    stays representable.
    """
    if x < 0:
        raise DomainError("x must be non-negative")
    if spec.kind == "arithmetic":
        val, err = max(x, 1.0), 0.0
    elif spec.kind == "geometric":
        val, err = x ** (1 - spec.param), 0.0
    elif spec.kind == "harmonic":
        val, err = min(x, 1.0), 0.0
    else:
        p = _custom_power(x) if spec.kind == CUSTOM else float(2 ** 12)
        with mpmath.workdps(30):
            try:
                val = _tilde_power_root(spec, x, p)
                err = abs(val - _tilde_power_root(spec, x, p / 4))
            except (OverflowError, ValueError) as exc:
                raise NoConvergence(f"cannot evaluate f~(x^p) for {spec.name}: {exc}") from None
        if err > tol * max(1.0, abs(val)):
            raise NoConvergence(f"f~ limit estimate not settled (delta {err:.3e})")
    return (val, err) if return_error else val
