import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tensorcp.mosum import (
    SequenceTooShort,
    mosum_field,
    mosum_naive,
    piecewise_mean,
    population_mosum,
)
from tensorcp.tensor import TensorSeq

STEP = TensorSeq(np.array([0, 0, 0, 0, 0, 1, 1, 1, 1, 1], dtype=float))


def test_noiseless_step_examples():
    field = mosum_field(STEP, 2)
    assert field.start == 1 and field.end == 10 - 4 + 1
    assert field.row(4)[0] == -1.0
    assert field.row(1)[0] == 0.0
    assert mosum_naive(STEP, 2, 4)[0] == -1.0
    assert mosum_naive(STEP, 2, 1)[0] == 0.0


def test_row_out_of_range():
    field = mosum_field(STEP, 2)
    with pytest.raises(IndexError):
        field.row(0)
    with pytest.raises(IndexError):
        field.row(8)


def test_too_short_names_minimum():
    with pytest.raises(SequenceTooShort) as err:
        mosum_field(STEP, 4)
    assert err.value.minimum == 12
    assert "n >= 3*alpha = 12" in str(err.value)


def test_random_alpha12_sliding_vs_naive(rng):
    seq = TensorSeq(rng.normal(size=(80, 3, 2)))
    field = mosum_field(seq, 12)
    worst = max(np.abs(field.row(i) - mosum_naive(seq, 12, i)).max() for i in range(1, field.end + 1))
    assert worst <= 1e-12


@pytest.mark.parametrize("compensated", [False, True])
def test_compensated_path_agrees(rng, compensated):
    seq = TensorSeq(rng.normal(size=(300, 4)) * 1e3)
    a = mosum_field(seq, 17, compensated=compensated).values
    b = np.array([mosum_naive(seq, 17, i) for i in range(1, 300 - 34 + 2)])
    assert np.abs(a - b).max() <= 1e-9


def test_population_single_step_profile():
    n, z, alpha = 40, 20, 4
    field = population_mosum([np.zeros(1), np.ones(1)], [z], n, alpha)
    d = field.values[:, 0]
    assert np.all(d[: z - 2 * alpha + 1] == 0)  # i <= z - 2 alpha + 1
    assert d[z - alpha] == -1.0  # i = z - alpha + 1, full jump
    ramp_in = d[z - 2 * alpha + 1 : z - alpha + 1]
    assert np.allclose(np.diff(ramp_in), -1 / alpha)
    ramp_out = d[z - alpha : z + 1]
    assert np.allclose(np.diff(ramp_out), 1 / alpha)
    assert np.all(d[z:] == 0)  # i >= z + 1


def test_population_no_change_is_zero():
    field = population_mosum([np.full(3, 2.5)], [], 30, 5)
    assert np.all(field.values == 0)


def test_population_two_changes_matches_naive():
    n, alpha = 60, 5
    means = [np.array([0.0, 1.0]), np.array([2.0, -1.0]), np.array([0.5, 0.5])]
    cps = [20, 30]
    pop = population_mosum(means, cps, n, alpha)
    seq = TensorSeq(piecewise_mean(means, cps, n))
    naive = np.array([mosum_naive(seq, alpha, i) for i in range(1, pop.end + 1)])
    assert np.abs(pop.values - naive).max() <= 1e-12


@pytest.mark.parametrize("cps", [[10, 10], [20, 10], [1], [60]])
def test_population_rejects_bad_changepoints(cps):
    means = [np.zeros(1)] * (len(cps) + 1)
    with pytest.raises(ValueError):
        population_mosum(means, cps, 60, 5)


@given(
    st.integers(1, 6),
    st.integers(1, 5),
    st.integers(0, 40),
    st.integers(0, 2**32 - 1),
    st.floats(-3, 3),
    st.floats(-3, 3),
)
def test_linearity(alpha, p, extra, seed, a, b):
    n = 3 * alpha + extra
    gen = np.random.default_rng(seed)
    x, y = gen.normal(size=(n, p)), gen.normal(size=(n, p))
    lhs = mosum_field(TensorSeq(a * x + b * y), alpha).values
    rhs = a * mosum_field(TensorSeq(x), alpha).values + b * mosum_field(TensorSeq(y), alpha).values
    assert np.abs(lhs - rhs).max() <= 1e-12


def test_noise_maximum_shrinks_with_window():
    medians = []
    for alpha in (25, 100, 400):
        maxima = [
            np.abs(mosum_field(TensorSeq(np.random.default_rng(s).normal(size=(1800, 5))), alpha).values).max()
            for s in range(50)
        ]
        medians.append(np.median(maxima))
    assert medians[0] > medians[1] > medians[2]
