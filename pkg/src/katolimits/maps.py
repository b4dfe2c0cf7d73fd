"""Positive linear maps given in closed, serializable form.

Four kinds are supported:

``kraus``         X -> sum_i K_i X K_i^*
``congruence``    X -> K X K^*
``block_average`` [[X11, X12], [X21, X22]] -> (X11 + X22) / 2
``trace_state``   X -> [Tr(rho X)]   (1x1 output)

Each kind also has a Kraus representation (:func:`kraus_operators`), which is
what the high-precision sweep evaluates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from . import linalg
from .errors import DimensionMismatch, InputError, ZeroMap

KINDS = ("kraus", "congruence", "block_average", "trace_state")

UNITAL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class PositiveMapSpec:
    kind: str
    in_dim: int
    out_dim: int
    operators: tuple = field(default=(), repr=False)
    rho: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown map kind {self.kind!r}")
        for K in self.operators:
            K.setflags(write=False)
        if self.rho is not None:
            self.rho.setflags(write=False)
        _spot_check_positive(self)

    # constructors -------------------------------------------------------

    @classmethod
    def kraus(cls, operators) -> "PositiveMapSpec":
        ops = tuple(linalg.as_matrix(K, "Kraus operator") for K in operators)
        if not ops:
            raise InputError("Kraus list must be non-empty")
        shape = ops[0].shape
        if any(K.shape != shape for K in ops):
            raise DimensionMismatch("Kraus operators must share one shape")
        return cls("kraus", shape[1], shape[0], ops)

    @classmethod
    def congruence(cls, K) -> "PositiveMapSpec":
        K = linalg.as_matrix(K, "K")
        return cls("congruence", K.shape[1], K.shape[0], (K,))

    @classmethod
    def block_average(cls, n: int) -> "PositiveMapSpec":
        if n < 1:
            raise InputError("block dimension must be positive")
        return cls("block_average", 2 * n, n)

    @classmethod
    def trace_state(cls, rho) -> "PositiveMapSpec":
        rho = linalg.as_psd(rho, name="rho")
        if abs(np.trace(rho).real - 1.0) > 1e-10:
            raise InputError(f"rho must have unit trace, got {np.trace(rho).real!r}")
        return cls("trace_state", rho.shape[0], 1, rho=rho)


def _spot_check_positive(spec: PositiveMapSpec, trials: int = 3) -> None:
    rng = np.random.default_rng(0)
    n = spec.in_dim
    for _ in range(trials):
        G = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
        Y = apply_map(spec, G @ G.conj().T)
        lo = linalg.lambda_min(Y)
        if lo < -linalg.TOL_PSD * max(1.0, linalg.opnorm(Y)):
            raise InputError(f"map is not positive (eigenvalue {lo:.3e} on a PSD input)")


def apply_map(spec: PositiveMapSpec, X) -> np.ndarray:
    X = linalg.as_matrix(X)
    if X.shape != (spec.in_dim, spec.in_dim):
        raise DimensionMismatch(
            f"map expects {spec.in_dim}x{spec.in_dim} input, got {X.shape[0]}x{X.shape[1]}"
        )
    if spec.kind in ("kraus", "congruence"):
        out = sum(K @ X @ K.conj().T for K in spec.operators)
    elif spec.kind == "block_average":
        n = spec.out_dim
        out = (X[:n, :n] + X[n:, n:]) / 2
    else:
        out = np.array([[np.trace(spec.rho @ X)]])
    return (out + out.conj().T) / 2


def kraus_operators(spec: PositiveMapSpec) -> list[np.ndarray]:
    """Kraus operators ``K_i`` (shape ``out_dim x in_dim``) realizing ``spec``."""
    if spec.kind in ("kraus", "congruence"):
        return [np.array(K) for K in spec.operators]
    if spec.kind == "block_average":
        n = spec.out_dim
        eye, zero = np.eye(n), np.zeros((n, n))
        return [np.hstack([eye, zero]) / np.sqrt(2), np.hstack([zero, eye]) / np.sqrt(2)]
    w, V = linalg.eig_hermitian(spec.rho)
    return [np.sqrt(max(lam, 0.0)) * V[:, [i]].conj().T for i, lam in enumerate(w) if lam > 0]


class UnitalCheck(NamedTuple):
    unital: bool
    witness: np.ndarray


def is_unital(spec: PositiveMapSpec, tol: float = UNITAL_TOL) -> UnitalCheck:
    """Whether ``Phi(I) = I``; the witness is ``Phi(I)`` itself."""
    image = apply_map(spec, np.eye(spec.in_dim))
    if spec.in_dim == 0 or image.shape[0] == 0:
        return UnitalCheck(False, image)
    ok = linalg.opnorm(image - np.eye(spec.out_dim)) <= tol
    return UnitalCheck(bool(ok), image)


def support_isometry(spec: PositiveMapSpec, tol_rank: float = linalg.TOL_RANK) -> np.ndarray:
    """Isometry (``out_dim x r``) onto the range of ``Phi(I)``."""
    return linalg.range_basis(apply_map(spec, np.eye(spec.in_dim)), tol_rank)


def support_compress(spec: PositiveMapSpec, tol_rank: float = linalg.TOL_RANK) -> PositiveMapSpec:
    """Restrict the output of ``spec`` to the support of ``Phi(I)``.

    The result is strictly positive.  A map that already is strictly positive
    is returned unchanged.
    """
    W = support_isometry(spec, tol_rank)
    r = W.shape[1]
    if r == 0:
        raise ZeroMap("Phi(I) = 0; the map has no support")
    if r == spec.out_dim:
        return spec
    return PositiveMapSpec.kraus([W.conj().T @ K for K in kraus_operators(spec)])


def rank_one_pair_map() -> PositiveMapSpec:
    """``[[a11, a12], [a21, a22]] -> a11 P1 + a22 Q1`` with ``P1 = e1 e1^*``, ``Q1 = w w^*``, ``w = (1, 1)/sqrt 2``."""
    w = np.array([[1.0], [1.0]]) / np.sqrt(2)
    K1 = np.array([[1.0, 0.0], [0.0, 0.0]])
    K2 = w @ np.array([[0.0, 1.0]])
    return PositiveMapSpec.kraus([K1, K2])
