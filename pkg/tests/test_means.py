import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles as orc
from katolimits import fixtures as fx
from katolimits import linalg, sweep
from katolimits.errors import (
    BadAlpha,
    DimensionMismatch,
    DomainError,
    InputError,
    NoConvergence,
    RequiresPositiveDefinite,
    RequiresVanishingAtZero,
)
from katolimits.means import (
    MeanSpec,
    classify_power_monotonicity,
    f_hat,
    f_tilde,
    f_tilde_infinity,
    geometric_limit,
    geometric_limit_parts,
    mean_eval,
    mean_projection_eval,
    parse_mean,
    transpose,
)

seeds = st.integers(min_value=0, max_value=2**32 - 1)
GRID = np.logspace(-3, 3, 25)


def builtins():
    return [
        MeanSpec.arithmetic(0.3),
        MeanSpec.geometric(0.5),
        MeanSpec.geometric(0.2),
        MeanSpec.harmonic(0.7),
        MeanSpec.logarithmic(),
    ]


def vanishing():
    return [s for s in builtins() if s.vanishes_at_zero]


def ids(specs):
    return [s.name for s in specs]


# representing functions

@pytest.mark.parametrize("spec", builtins(), ids=ids(builtins()))
def test_normalized_and_derived_functions(spec):
    assert abs(spec(1.0) - 1.0) <= 1e-12
    assert abs(f_tilde(spec)(1.0) - 1.0) <= 1e-12
    fh = f_hat(spec)
    assert fh(0.0) == 0.0
    for x in GRID:
        assert abs(fh(x) * x - spec(x)) <= 1e-12 * max(1.0, spec(x))


def test_alpha_is_derivative_at_one():
    for spec in builtins():
        h = 1e-6
        assert abs((spec(1 + h) - spec(1 - h)) / (2 * h) - spec.alpha) <= 1e-6


def test_logarithmic_mean_values():
    spec = MeanSpec.logarithmic()
    assert abs(spec(math.e) - (math.e - 1)) <= 1e-12
    assert abs(spec(1 + 1e-9) - 1.0) <= 1e-9
    assert spec.at([0.0])[0] == 0.0


def test_transpose_of_builtins():
    assert transpose(MeanSpec.geometric(0.3)).param == pytest.approx(0.7)
    assert transpose(MeanSpec.logarithmic()).kind == "logarithmic"
    t = transpose(MeanSpec.custom("root", math.sqrt))
    assert abs(t(4.0) - 2.0) <= 1e-12


def test_parse_mean():
    assert parse_mean("geometric:0.3").param == pytest.approx(0.3)
    assert parse_mean("Harmonic").param == 0.5
    assert parse_mean("logarithmic").kind == "logarithmic"
    for bad in ("median", "geometric:x", "logarithmic:0.5"):
        with pytest.raises(InputError):
            parse_mean(bad)
    for bad in ("arithmetic:0", "harmonic:1", "geometric:1.5"):
        with pytest.raises(BadAlpha):
            parse_mean(bad)


def test_custom_checks():
    spec = MeanSpec.custom("root", math.sqrt)
    assert spec.f_at_zero == pytest.approx(0.0, abs=1e-100)
    assert spec.alpha == pytest.approx(0.5, abs=1e-6)
    with pytest.raises(InputError):
        MeanSpec.custom("unnormalized", lambda x: 2 * x)
    with pytest.raises(InputError):
        MeanSpec.custom("convex", lambda x: x * x)
    with pytest.raises(InputError):
        MeanSpec.custom("decreasing", lambda x: 1 / x)
    with pytest.raises(DomainError):
        MeanSpec.custom("negative", lambda x: math.log(x) + 1)


# evaluation

@pytest.mark.parametrize("spec", builtins(), ids=ids(builtins()))
def test_mean_of_equal_arguments(spec):
    A = fx.gapped_pd(np.random.default_rng(0), 3)
    assert orc.opnorm(mean_eval(spec, A, A) - A) <= 1e-10


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.8])
def test_geometric_commuting(alpha):
    out = mean_eval(MeanSpec.geometric(alpha), np.diag([4.0, 1.0]), np.diag([1.0, 4.0]))
    assert orc.opnorm(out - np.diag([4 ** (1 - alpha), 4 ** alpha])) <= 1e-12


def test_harmonic_scalar():
    out = mean_eval(MeanSpec.harmonic(), 2 * np.eye(2), np.eye(2))
    assert orc.opnorm(out - 4 / 3 * np.eye(2)) <= 1e-12


def test_geometric_against_riccati_characterization():
    # A # B is the unique positive solution X of X A^{-1} X = B
    rng = np.random.default_rng(1)
    A, B = fx.gapped_pd(rng, 3), fx.gapped_pd(rng, 3)
    X = mean_eval(MeanSpec.geometric(), A, B)
    assert orc.opnorm(X @ np.linalg.inv(A) @ X - B) <= 1e-10


def test_singular_first_argument_uses_transpose():
    rng = np.random.default_rng(2)
    A = fx.gapped_psd(rng, 3, 2)
    B = fx.gapped_pd(rng, 3)
    out = mean_eval(MeanSpec.harmonic(0.3), A, B)
    # ((1-a) A^-1 + a B^-1)^-1 = B ((1-a) B + a A)^-1 A extends continuously to singular A
    ref = B @ np.linalg.inv(0.7 * B + 0.3 * A) @ A
    assert orc.opnorm(out - ref) <= 1e-10


def test_both_singular_commuting_limit():
    out = mean_eval(MeanSpec.geometric(), np.diag([4.0, 0.0]), np.diag([1.0, 0.0]))
    assert orc.opnorm(out - np.diag([2.0, 0.0])) <= 1e-8


def test_mean_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        mean_eval(MeanSpec.geometric(), np.eye(2), np.eye(3))


def test_eps_limit_failure_is_reported():
    # the geometric mean of two singular arguments converges like sqrt(eps)
    P = np.diag([1.0, 0.0])
    with pytest.raises(NoConvergence):
        mean_eval(MeanSpec.geometric(), P, fx.HALF)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_transpose_symmetry(seed):
    rng = np.random.default_rng(seed)
    A, B = fx.gapped_pd(rng, 3), fx.gapped_pd(rng, 3)
    for spec in builtins():
        lhs = mean_eval(spec, A, B)
        rhs = mean_eval(transpose(spec), B, A)
        assert orc.opnorm(lhs - rhs) <= 1e-10 * max(1.0, orc.opnorm(lhs))


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_congruence_invariance(seed):
    rng = np.random.default_rng(seed)
    A, B = fx.gapped_pd(rng, 3), fx.gapped_pd(rng, 3)
    U = fx.random_unitary(rng, 3)
    spec = MeanSpec.geometric(float(rng.uniform(0.1, 0.9)))
    lhs = mean_eval(spec, U @ A @ U.conj().T, U @ B @ U.conj().T)
    rhs = U @ mean_eval(spec, A, B) @ U.conj().T
    assert orc.opnorm(lhs - rhs) <= 1e-10


@settings(max_examples=10, deadline=None)
@given(seed=seeds)
def test_power_monotonicity_for_pmd_means(seed):
    rng = np.random.default_rng(seed)
    A = fx.gapped_pd(rng, 3)
    E = fx.random_projection(rng, 3, int(rng.integers(1, 3)))
    grid = (1.0, 2.0, 4.0, 8.0, 16.0)
    # the 1/p root of a singular mean amplifies double rounding, so iterate in high precision
    for spec in (MeanSpec.geometric(0.4), MeanSpec.harmonic(0.5)):
        its = sweep.sweep_mean(spec, A, E, grid).iterates
        for lo, hi in zip(its, its[1:]):
            assert orc.lam_min(lo - hi) >= -1e-8


# projection formula

def test_projection_formula_example():
    out = mean_projection_eval(MeanSpec.geometric(), np.diag([4.0, 1.0]), fx.HALF)
    assert orc.opnorm(out - (5 / 8) ** -0.5 * fx.HALF) <= 1e-12
    assert (5 / 8) ** -0.5 == pytest.approx(1.26491, abs=1e-5)


def test_projection_formula_identity_harmonic():
    A = fx.gapped_pd(np.random.default_rng(3), 3)
    w, V = np.linalg.eigh(A)
    expected = (V * (w / (0.3 + 0.7 * w))) @ V.conj().T
    out = mean_projection_eval(MeanSpec.harmonic(0.7), A, np.eye(3))
    assert orc.opnorm(out - expected) <= 1e-12


def test_logarithmic_projection_closed_form():
    rng = np.random.default_rng(4)
    A = fx.gapped_pd(rng, 3)
    E = fx.random_projection(rng, 3, 2)
    X = E @ np.linalg.inv(A) @ E
    w, V = np.linalg.eigh(X)
    keep = w > 1e-9
    # (E - X^{-1}) (log X)^{-1} on ran E
    vals = (1 - 1 / w[keep]) / np.log(w[keep])
    expected = (V[:, keep] * vals) @ V[:, keep].conj().T
    out = mean_projection_eval(MeanSpec.logarithmic(), A, E)
    assert orc.opnorm(out - expected) <= 1e-10
    assert orc.opnorm(out - mean_eval(MeanSpec.logarithmic(), A, E)) <= 1e-10


@pytest.mark.parametrize("spec", vanishing(), ids=ids(vanishing()))
def test_projection_formula_agrees_with_direct(spec):
    rng = np.random.default_rng(5)
    for _ in range(50):
        n = int(rng.integers(2, 5))
        A = fx.gapped_pd(rng, n)
        E = fx.random_projection(rng, n, int(rng.integers(0, n + 1)))
        lhs = mean_projection_eval(spec, A, E)
        rhs = mean_eval(spec, A, E)
        assert orc.opnorm(lhs - rhs) <= 1e-10


def test_projection_formula_errors():
    A = fx.gapped_pd(np.random.default_rng(6), 2)
    with pytest.raises(RequiresVanishingAtZero):
        mean_projection_eval(MeanSpec.arithmetic(), A, fx.HALF)
    with pytest.raises(RequiresPositiveDefinite):
        mean_projection_eval(MeanSpec.geometric(), np.diag([1.0, 0.0]), fx.HALF)
    with pytest.raises(InputError):
        mean_projection_eval(MeanSpec.geometric(), A, np.diag([1.0, 0.5]))


# geometric limit

def test_geometric_limit_of_projection_is_meet():
    rng = np.random.default_rng(7)
    P = fx.random_projection(rng, 4, 3)
    E = fx.random_projection(rng, 4, 2)
    for alpha in (0.2, 0.5, 0.9):
        assert orc.opnorm(geometric_limit(P, E, alpha) - orc.meet(P, E)) <= 1e-9


def test_geometric_limit_pd_b():
    A = fx.gapped_psd(np.random.default_rng(8), 3, 2)
    B = fx.gapped_pd(np.random.default_rng(9), 3)
    assert orc.opnorm(geometric_limit(A, B, 0.3) - orc.psd_power(A, 0.7)) <= 1e-9


def test_geometric_limit_example():
    out = geometric_limit(np.diag([4.0, 2.0]), fx.HALF, 0.5)
    _, family = geometric_limit_parts(np.diag([4.0, 2.0]), fx.HALF, 0.5)
    assert orc.opnorm(family[0]) <= 1e-12
    assert orc.opnorm(family[1] - fx.HALF) <= 1e-12
    assert orc.opnorm(out - math.sqrt(2) * fx.HALF) <= 1e-12
    # frozen from the sweep at p = 2^12
    rep = sweep.sweep_mean(MeanSpec.geometric(), np.diag([4.0, 2.0]), fx.HALF, (4096.0,))
    assert orc.opnorm(rep.last - out) <= 1e-3


def test_geometric_limit_trivial_weights():
    A = fx.gapped_pd(np.random.default_rng(10), 2)
    B = np.diag([3.0, 0.0])
    assert orc.opnorm(geometric_limit(A, B, 0.0) - A) <= 1e-12
    assert orc.opnorm(geometric_limit(A, B, 1.0) - np.diag([1.0, 0.0])) <= 1e-12
    with pytest.raises(BadAlpha):
        geometric_limit(A, B, 1.5)


@settings(max_examples=20, deadline=None)
@given(seed=seeds)
def test_geometric_limit_family(seed):
    rng = np.random.default_rng(seed)
    n = 4
    A = fx.gapped_psd(rng, n, int(rng.integers(1, n + 1)))
    E = fx.random_projection(rng, n, int(rng.integers(1, n + 1)))
    _, family = geometric_limit_parts(A, E, 0.5)
    for i, Q in enumerate(family):
        assert orc.opnorm(Q @ Q - Q) <= 1e-9
        for R in family[i + 1:]:
            assert orc.opnorm(Q @ R) <= 1e-9
    assert orc.opnorm(sum(family) - orc.meet(orc.range_proj(A), E)) <= 1e-9


@pytest.mark.parametrize("p", [2.0, 8.0])
def test_sandwich_reduction(p):
    rng = np.random.default_rng(11)
    n = 3
    A = fx.gapped_pd(rng, n)
    E = fx.random_projection(rng, n, 2)
    w, V = np.linalg.eigh(E)
    basis = V[:, w > 0.5]
    lam, mu = 0.5, 2.0
    B = basis @ np.diag([lam, mu]) @ basis.conj().T
    for spec in (MeanSpec.geometric(0.5), MeanSpec.harmonic(0.5)):
        base = sweep.sweep_mean(spec, A, E, (p,)).last
        mid = sweep.sweep_mean(spec, A, B, (p,)).last
        assert orc.loewner_le(lam ** (1 / p) * base, mid, linalg.TOL_PSD)
        assert orc.loewner_le(mid, mu ** (1 / p) * base, linalg.TOL_PSD)


# scalar diagnostics

def test_power_monotonicity_classes():
    assert classify_power_monotonicity(MeanSpec.geometric(0.3)) == "both"
    assert classify_power_monotonicity(MeanSpec.harmonic(0.5)) == "pmd"
    assert classify_power_monotonicity(MeanSpec.logarithmic()) == "pmi"
    assert classify_power_monotonicity(MeanSpec.arithmetic(0.5)) == "pmi"


def test_f_tilde_infinity_closed_forms():
    assert f_tilde_infinity(MeanSpec.arithmetic(0.3), 2.0) == 2.0
    assert f_tilde_infinity(MeanSpec.geometric(0.25), 16.0) == pytest.approx(8.0, rel=1e-14)
    assert f_tilde_infinity(MeanSpec.harmonic(0.5), 0.5) == 0.5
    with pytest.raises(DomainError):
        f_tilde_infinity(MeanSpec.harmonic(0.5), -1.0)


@pytest.mark.parametrize("x", [0.25, 1.0, 3.0])
def test_f_tilde_infinity_numeric(x):
    val, err = f_tilde_infinity(MeanSpec.custom("root", math.sqrt), x, return_error=True)
    assert val == pytest.approx(math.sqrt(x), rel=1e-12)
    # the logarithmic mean behaves like max(x, 1) in this limit
    val, err = f_tilde_infinity(MeanSpec.logarithmic(), x, return_error=True)
    assert abs(val - max(x, 1.0)) <= err + 1e-2
    assert err <= 5e-2 * max(1.0, val)
