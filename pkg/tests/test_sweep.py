import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import _oracles as orc
from katolimits import fixtures as fx
from katolimits import kato, linalg, sweep
from katolimits.errors import DimensionMismatch, InputError
from katolimits.maps import PositiveMapSpec, rank_one_pair_map
from katolimits.means import MeanSpec, geometric_limit

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def test_identity_congruence_is_constant():
    A = fx.gapped_pd(np.random.default_rng(0), 3)
    rep = sweep.sweep_map(PositiveMapSpec.congruence(np.eye(3)), A, (1.0, 16.0, 4096.0), target=A)
    assert max(rep.errors) <= 1e-12
    assert rep.monotone_flag == "constant"
    assert rep.violation == 0.0


def test_block_average_commuting_converges_to_entrywise_max():
    A = linalg.direct_sum(np.diag([2.0, 1.0]), np.diag([1.0, 3.0]))
    rep = sweep.sweep_map(PositiveMapSpec.block_average(2), A, target=np.diag([2.0, 3.0]))
    assert rep.errors[-1] <= 1e-3
    assert all(b <= a + 1e-12 for a, b in zip(rep.errors, rep.errors[1:]))


def test_pair_map_fixture_against_closed_form():
    phi = rank_one_pair_map()
    A = np.diag([2.0, 1.0])
    rep = sweep.sweep_map(phi, A, target=kato.map_limit(phi, A).limit)
    assert rep.errors[-1] <= 1e-3
    tail = rep.errors[-3:]
    assert all(b <= a + 1e-3 for a, b in zip(tail, tail[1:]))
    neg = sweep.sweep_map(phi, A, negative=True, target=kato.neg_map_limit(phi, A).limit)
    assert neg.errors[-1] <= 1e-3


def test_report_fields():
    A = np.diag([2.0, 1.0])
    rep = sweep.sweep_map(rank_one_pair_map(), A, (1.0, 2.0, 4.0))
    assert rep.p_grid == (1.0, 2.0, 4.0)
    assert len(rep.iterates) == len(rep.eigenvalue_tracks) == 3
    assert rep.errors is None
    assert rep.cauchy_delta == pytest.approx(orc.opnorm(rep.iterates[-1] - rep.iterates[-2]))
    for track in rep.eigenvalue_tracks:
        assert list(track) == sorted(track, reverse=True)
    assert set(rep.violations) == {"decreasing", "increasing"}


def test_grid_validation():
    A = np.eye(2)
    phi = PositiveMapSpec.congruence(np.eye(2))
    for grid in ((), (2.0, 1.0), (0.5, 1.0), (1.0, 2.0 ** 15), (1.0, 1.0)):
        with pytest.raises(InputError):
            sweep.sweep_map(phi, A, grid)


def test_target_shape_checked():
    with pytest.raises(DimensionMismatch):
        sweep.sweep_map(PositiveMapSpec.congruence(np.eye(2)), np.eye(2), (1.0,), target=np.eye(3))


def test_map_iterate_accepts_fractional_p():
    A = np.diag([4.0, 1.0])
    X, spectrum = sweep.map_iterate(PositiveMapSpec.congruence(np.eye(2)), A, 0.5)
    assert orc.opnorm(X - A) <= 1e-12
    assert np.allclose(spectrum, [4.0, 1.0])


def test_large_p_does_not_overflow():
    # 10^(2^14) is far outside double range; the sweep must still return A
    A = np.diag([10.0, 0.1])
    rep = sweep.sweep_map(PositiveMapSpec.congruence(np.eye(2)), A, (16384.0,))
    assert orc.opnorm(rep.last - A) <= 1e-10


# means

def test_geometric_projection_case_is_constant():
    rng = np.random.default_rng(1)
    P = fx.random_projection(rng, 3, 2)
    E = fx.random_projection(rng, 3, 2)
    rep = sweep.sweep_mean(MeanSpec.geometric(0.3), P, E, (1.0, 8.0, 512.0), target=orc.meet(P, E))
    assert max(rep.errors) <= 1e-9
    assert rep.monotone_flag == "constant"


def test_geometric_limit_fixture():
    target = math.sqrt(2) * fx.HALF
    rep = sweep.sweep_mean(MeanSpec.geometric(), np.diag([4.0, 2.0]), fx.HALF, target=target)
    assert rep.errors[-1] <= 1e-3
    assert rep.monotone_flag in ("decreasing", "constant")


def test_arithmetic_with_projection_increases():
    rng = np.random.default_rng(2)
    A = fx.gapped_pd(rng, 3)
    E = fx.random_projection(rng, 3, 2)
    rep = sweep.sweep_mean(MeanSpec.arithmetic(), A, E, (1.0, 2.0, 4.0, 8.0, 16.0))
    assert rep.monotone_flag == "increasing"
    assert rep.violation <= 1e-8


@settings(max_examples=10, deadline=None)
@given(seed=seeds)
def test_pmd_means_decrease(seed):
    rng = np.random.default_rng(seed)
    A = fx.gapped_psd(rng, 3, int(rng.integers(2, 4)))
    E = fx.random_projection(rng, 3, int(rng.integers(1, 3)))
    for spec in (MeanSpec.geometric(0.6), MeanSpec.harmonic(0.4)):
        rep = sweep.sweep_mean(spec, A, E, (1.0, 2.0, 4.0, 8.0, 32.0))
        assert rep.violations["decreasing"] <= 1e-8


@pytest.mark.parametrize("seed", range(3))
def test_geometric_limit_matches_sweep(seed):
    rng = np.random.default_rng(50 + seed)
    A = fx.gapped_pd(rng, 3)
    B = fx.gapped_psd(rng, 3, 2)
    rep = sweep.sweep_mean(MeanSpec.geometric(0.5), A, B, (1024.0, 2048.0, 4096.0), target=geometric_limit(A, B, 0.5))
    assert rep.errors[-1] <= 5e-2
    assert all(b <= a + 1e-3 for a, b in zip(rep.errors, rep.errors[1:]))


# sandwich

def test_sandwich_with_identity():
    A = fx.gapped_pd(np.random.default_rng(3), 3)
    rep = sweep.sweep_sandwich(A, np.eye(3), (1.0, 64.0, 4096.0), target=A @ A)
    assert max(rep.errors) <= 1e-10


def test_sandwich_commuting():
    A = np.diag([2.0, 1.5, 1.0])
    B = np.diag([0.5, 0.0, 2.0])
    rep = sweep.sweep_sandwich(A, B, target=np.diag([4.0, 0.0, 1.0]))
    for p, X in zip(rep.p_grid, rep.iterates):
        expected = np.diag([4.0 * 0.5 ** (1 / p), 0.0, 2.0 ** (1 / p)])
        assert orc.opnorm(X - expected) <= 1e-10
    assert rep.errors[-1] <= 1e-3


def test_sandwich_noncommuting_settles():
    rng = np.random.default_rng(4)
    A, B = fx.gapped_pd(rng, 3), fx.gapped_pd(rng, 3)
    A = A / orc.opnorm(A)
    rep = sweep.sweep_sandwich(A, B, (1024.0, 2048.0, 4096.0))
    assert rep.cauchy_delta <= 1e-3
    # the B-dependence enters through factors like b^{1/p}, so steps shrink like 1/p
    first = orc.opnorm(rep.iterates[1] - rep.iterates[0])
    assert rep.cauchy_delta <= 0.6 * first


def test_indefinite_input_rejected():
    with pytest.raises(InputError):
        sweep.sweep_sandwich(np.diag([1.0, -1.0]), np.eye(2), (1.0,))


# order checks

def test_loewner_compare_examples():
    assert sweep.loewner_compare(np.eye(2), np.eye(2)) == "equal"
    assert sweep.loewner_compare(np.eye(2), np.diag([2.0, 3.0])) == "le"
    assert sweep.loewner_compare(np.diag([2.0, 3.0]), np.eye(2)) == "ge"
    phi = rank_one_pair_map()
    A = np.diag([2.0, 1.0])
    D = kato.map_limit(phi, A).limit - kato.neg_map_limit(phi, A).limit
    assert sweep.loewner_compare(D, np.zeros((2, 2))) == "incomparable"
    with pytest.raises(DimensionMismatch):
        sweep.loewner_compare(np.eye(2), np.eye(3))


@settings(max_examples=10, deadline=None)
@given(seed=seeds)
def test_unital_negative_below_positive_iterates(seed):
    rng = np.random.default_rng(seed)
    phi = fx.random_unital_kraus(rng, 3)
    A = fx.gapped_pd(rng, 3)
    grid = (1.0, 2.0, 4.0, 8.0)
    neg = sweep.sweep_map(phi, A, grid, negative=True).iterates
    pos = sweep.sweep_map(phi, A, grid).iterates
    for X in neg:
        for Y in pos:
            assert sweep.loewner_compare(X, Y) in ("le", "equal")
