import importlib
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channel_thermo.core import mutual_information
from channel_thermo.errors import (
    InvalidPerturbation,
    NoConvergence,
    NotApplicable,
    SingularChannel,
    StepOutOfRange,
    ZeroEntry,
)
from channel_thermo.landscape import family_constrained

# the package re-exports a function under the same name as this module
cap = importlib.import_module("channel_thermo.capacity")


def binary_entropy(x):
    return -x * math.log(x) - (1 - x) * math.log(1 - x)


def z_channel_capacity(e):
    # closed form for [[1, 0], [e, 1 - e]] in nats
    return math.log(1 + (1 - e) * e ** (e / (1 - e)))


def random_channel(rng, n):
    return rng.dirichlet(np.ones(n), size=n)


def dominant_channel(rng, n):
    # every input is used, so Blahut-Arimoto converges linearly
    return 0.5 * np.eye(n) + 0.5 * random_channel(rng, n)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.3])
def test_bsc_ba_matches_closed_form(eps):
    r = cap.blahut_arimoto(cap.bsc(eps), tol=1e-12)
    assert r.C == pytest.approx(math.log(2) - binary_entropy(eps), abs=1e-9)
    np.testing.assert_allclose(r.p_star.weights, 0.5, atol=1e-12)


@pytest.mark.parametrize("eps", [0.05, 0.1, 0.2, 0.3])
def test_bsc_muroga_matches_ba(eps):
    m = cap.muroga_capacity(cap.bsc(eps))
    assert m.d_positive
    assert m.C == pytest.approx(cap.blahut_arimoto(cap.bsc(eps), tol=1e-12).C, abs=1e-8)


def test_bsc_capacity_helper():
    assert cap.bsc_capacity(0.5) == pytest.approx(0.0, abs=1e-15)
    assert cap.bsc_capacity(0.0) == pytest.approx(math.log(2))
    assert cap.bsc_capacity(0.1) / math.log(2) == pytest.approx(0.531004, abs=1e-6)


@pytest.mark.parametrize("e", [0.1, 0.3, 0.5])
def test_z_channel(e):
    W = np.array([[1.0, 0.0], [e, 1 - e]])
    r = cap.capacity(W, tol=1e-12)
    assert r.C == pytest.approx(z_channel_capacity(e), abs=1e-10)
    assert r.C == pytest.approx(mutual_information(W, r.p_star.weights), abs=1e-12)


def test_identity_and_useless_channels():
    for n in (2, 3, 5):
        assert cap.capacity(np.eye(n)).C == pytest.approx(math.log(n), abs=1e-12)
        row = np.arange(1, n + 1) / (n * (n + 1) / 2)
        r = cap.capacity(np.tile(row, (n, 1)))
        assert r.C == pytest.approx(0.0, abs=1e-12)


def test_muroga_singular_on_equal_rows():
    with pytest.raises(SingularChannel):
        cap.muroga_capacity(np.full((2, 2), 0.5))


def test_muroga_not_applicable_when_input_unused():
    # the middle input is a mixture of the outer two, so it gets no mass
    W = np.array([[0.9, 0.05, 0.05], [0.45, 0.1, 0.45], [0.05, 0.05, 0.9]])
    with pytest.raises(NotApplicable) as info:
        cap.muroga_capacity(W)
    assert info.value.d.min() < 0
    r = cap.capacity(W, tol=1e-12)
    assert r.p_star.weights[1] < 1e-10
    assert r.C == pytest.approx(cap.blahut_arimoto(W, tol=1e-12).C, abs=1e-10)


def test_auto_prefers_muroga():
    assert cap.capacity(cap.bsc(0.2)).method == "muroga"
    assert cap.capacity(np.full((2, 2), 0.5)).method != "muroga"


def test_ba_raises_with_partial_result():
    W = random_channel(np.random.default_rng(1), 4)
    with pytest.raises(NoConvergence) as info:
        cap.blahut_arimoto(W, tol=1e-15, max_iter=3)
    assert info.value.result.iterations == 3
    assert not info.value.result.converged
    r = cap.blahut_arimoto(W, tol=1e-15, max_iter=3, strict=False)
    assert not r.converged


def test_ba_lower_bound_nondecreasing(rng):
    for _ in range(20):
        W = dominant_channel(rng, int(rng.integers(2, 6)))
        r = cap.blahut_arimoto(W, tol=1e-12, record_history=True)
        assert np.all(np.diff(r.history) >= -1e-12)
        assert r.gap < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(0, 2**32 - 1))
def test_capacity_bounds(n, seed):
    W = random_channel(np.random.default_rng(seed), n)
    r = cap.capacity(W)
    assert -1e-15 <= r.C <= math.log(n) + 1e-12
    q = np.random.default_rng(seed + 1).dirichlet(np.ones(n))
    assert mutual_information(W, q) <= r.C + 1e-9


def test_muroga_agrees_with_ba(rng):
    checked = 0
    while checked < 30:
        W = dominant_channel(rng, int(rng.integers(2, 5)))
        try:
            m = cap.muroga_capacity(W)
        except (SingularChannel, NotApplicable):
            continue
        b = cap.blahut_arimoto(W, tol=1e-12)
        assert m.C == pytest.approx(b.C, abs=1e-10)
        checked += 1


def test_gradient_bsc_closed_form():
    eps = 0.1
    g = cap.capacity_gradient(cap.bsc(eps))
    expected = 0.5 * math.log(eps / (1 - eps))
    assert g.grad[0, 1] == pytest.approx(expected, rel=1e-10)
    # swapping both symbols maps one entry onto the other
    assert g.grad[1, 0] == pytest.approx(g.grad[0, 1], rel=1e-10)
    assert np.isnan(g.grad[0, 0])


def test_gradient_matches_fd_on_constrained_family():
    W = family_constrained(0.5, 0.5)
    g = cap.capacity_gradient(W)
    for j in range(3):
        for k in range(3):
            if j != k:
                fd = cap.fd_capacity_gradient(W, j, k)
                assert g.grad[j, k] == pytest.approx(fd, rel=1e-4, abs=1e-7)


def test_gradient_vanishes_at_product_channel():
    W = np.tile([0.3, 0.7], (2, 1))
    assert abs(cap.fd_capacity_gradient(W, 0, 1)) < 1e-5
    assert abs(cap.fd_capacity_gradient(cap.bsc(0.5), 1, 0)) < 1e-5


def test_gradient_zero_on_unused_row():
    W = np.array([[0.9, 0.05, 0.05], [0.45, 0.1, 0.45], [0.05, 0.05, 0.9]])
    g = cap.capacity_gradient(W)
    assert np.all(np.abs(g.grad[1, [0, 2]]) < 1e-10)
    for k in (0, 2):
        assert abs(cap.fd_capacity_gradient(W, 1, k, h=1e-4)) < 1e-6


def test_gradient_rejects_zero_entries():
    with pytest.raises(ZeroEntry):
        cap.capacity_gradient(np.eye(2))


def test_fd_step_out_of_range():
    with pytest.raises(StepOutOfRange):
        cap.fd_capacity_gradient(cap.bsc(1e-6), 0, 1, h=1e-5)
    with pytest.raises(StepOutOfRange):
        cap.fd_capacity_gradient(cap.bsc(0.1), 0, 0)


def test_perturb_keeps_rows_stochastic():
    W = cap.perturb(cap.bsc(0.2), 0, 1, 0.05)
    np.testing.assert_allclose(W, [[0.75, 0.25], [0.2, 0.8]])


def test_good_channel_validation():
    with pytest.raises(InvalidPerturbation):
        cap.good_channel(np.array([[1.0, -1.0], [1.0, -1.0]]), 0.1)
    with pytest.raises(InvalidPerturbation):
        cap.good_channel(np.array([[-1.0, 1.0], [1.0, -1.0]]), 2.0)


def test_good_channel_second_order():
    Q = np.array([[-1.0, 0.5, 0.5], [0.3, -0.8, 0.5], [0.2, 0.2, -0.4]])
    r1 = cap.good_channel_expansion_check(Q, 1e-3)
    r2 = cap.good_channel_expansion_check(Q, 5e-4)
    # eps^2 log eps halves to ratio 4 * log(1e-3) / log(5e-4)
    assert 3.5 <= r1 / r2 <= 4.5


def test_good_channel_first_order_terms():
    Q = np.array([[-1.0, 0.5, 0.5], [0.5, -1.0, 0.5], [0.5, 0.5, -1.0]])
    eps = 1e-4
    W = np.asarray(cap.good_channel(Q, eps))
    H = -np.sum(W * np.log(W), axis=1)
    lead = cap.good_channel_first_order(Q, eps)
    np.testing.assert_allclose(H, lead, rtol=1e-3)
    np.testing.assert_allclose(np.linalg.solve(W, H), lead, rtol=1e-3)
