import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from channel_thermo import thermo
from channel_thermo.capacity import bsc
from channel_thermo.core import mutual_information
from channel_thermo.errors import (
    DegenerateDistribution,
    InfiniteTimescale,
    NonPositiveBeta,
)


def test_two_state_closed_form():
    s = thermo.effective_state([0.1, 0.9], 1.0)
    ln3 = math.log(3)
    np.testing.assert_allclose(s.gamma, [ln3, -ln3], atol=1e-14)
    beta = math.sqrt(0.82) * math.sqrt(1 + 2 * ln3**2)
    assert s.beta == pytest.approx(beta, rel=1e-14)
    logZ = -(math.log(0.1) + math.log(0.9)) / 2
    assert s.logZ == pytest.approx(logZ, rel=1e-14)
    assert s.F == pytest.approx(-logZ / beta, rel=1e-14)


@pytest.mark.parametrize("n, t", [(2, 1.0), (3, 2.5), (5, 0.3)])
def test_uniform_state(n, t):
    s = thermo.effective_state(np.full(n, 1 / n), t)
    np.testing.assert_allclose(s.gamma, 0.0, atol=1e-15)
    np.testing.assert_allclose(s.E, 0.0, atol=1e-15)
    assert s.beta == pytest.approx(t / math.sqrt(n), rel=1e-14)
    assert s.F == pytest.approx(-math.log(n) * math.sqrt(n) / t, rel=1e-14)


def test_uniform_binary_example():
    s = thermo.effective_state([0.5, 0.5], 1.0)
    assert s.beta == pytest.approx(0.70711, abs=1e-5)
    assert s.F == pytest.approx(-0.98026, abs=1e-5)


def test_state_errors():
    with pytest.raises(DegenerateDistribution):
        thermo.effective_state([1.0, 0.0], 1.0)
    with pytest.raises(DegenerateDistribution):
        thermo.effective_state([0.5, 0.5], 0.0)
    with pytest.raises(InfiniteTimescale):
        thermo.effective_state([0.5, 0.5], math.inf)
    with pytest.raises(NonPositiveBeta):
        thermo.inverse_state([0.0, 1.0], -1.0)


@st.composite
def state_inputs(draw):
    n = draw(st.integers(2, 6))
    logits = draw(st.lists(st.floats(-8, 8), min_size=n, max_size=n))
    p = np.exp(np.array(logits))
    return p / p.sum(), draw(st.floats(0.05, 50.0))


@settings(max_examples=300, deadline=None)
@given(state_inputs())
def test_state_identities(case):
    p, t = case
    s = thermo.effective_state(p, t)
    np.testing.assert_allclose(s.gibbs(), p, rtol=1e-10, atol=1e-15)
    assert abs(s.F - (s.U_internal - s.H / s.beta)) <= 1e-10 * max(1.0, abs(s.F))
    assert abs(s.gamma.sum()) <= 1e-10 * max(1.0, np.abs(s.gamma).max())
    norm = math.sqrt(s.E @ s.E + s.beta**-2) * t * np.linalg.norm(p)
    assert norm == pytest.approx(1.0, abs=1e-10)
    q, t_back = thermo.inverse_state(s.E, s.beta)
    np.testing.assert_allclose(q.weights, p, rtol=1e-9, atol=1e-15)
    assert t_back == pytest.approx(t, rel=1e-9)


def test_inverse_state_ignores_energy_shift():
    s = thermo.effective_state([0.2, 0.3, 0.5], 2.0)
    q, t = thermo.inverse_state(s.E + 7.0, s.beta)
    np.testing.assert_allclose(q.weights, [0.2, 0.3, 0.5], atol=1e-14)
    assert t == pytest.approx(2.0, rel=1e-12)


def test_free_energy_limit_as_symbol_vanishes():
    # F tends to -1 / (t ||p|| sqrt(n (n - 1))) and not to zero; only 1/beta vanishes
    t = 3.0
    for eps in (1e-30, 1e-100, 1e-300):
        s = thermo.effective_state([eps, 1 - eps], t)
        assert 1 / s.beta < 0.01
    assert s.F == pytest.approx(-1 / (t * math.sqrt(2)), rel=1e-2)


def test_dmc_thermo_bsc():
    r = thermo.dmc_thermo(bsc(0.1))
    t = 1 / 0.36
    assert not r.degenerate
    assert r.t_mix == pytest.approx(t, rel=1e-12)
    assert r.beta_mix == pytest.approx(t / math.sqrt(2), rel=1e-10)
    assert r.F_mix == pytest.approx(-math.log(2) * math.sqrt(2) / t, rel=1e-10)
    assert r.H == pytest.approx(math.log(2), abs=1e-12)


def test_dmc_thermo_degenerate():
    W = np.array([[0.9, 0.05, 0.05], [0.45, 0.1, 0.45], [0.05, 0.05, 0.9]])
    r = thermo.dmc_thermo(W)
    assert r.degenerate
    assert r.F_mix == 0.0
    assert math.isinf(r.beta_mix)
    assert r.beta_inv_mix == 0.0


def test_factoring_work_product_form(rng):
    for _ in range(100):
        n = int(rng.integers(2, 5))
        W = rng.dirichlet(np.ones(n), size=n)
        p = rng.dirichlet(np.ones(n))
        assert thermo.factoring_work(W, p) == pytest.approx(-mutual_information(W, p), abs=1e-12)


def test_factoring_work_identity(rng):
    for _ in range(200):
        n = int(rng.integers(2, 5))
        W = rng.dirichlet(np.ones(n), size=n)
        p = rng.dirichlet(np.ones(n))
        beta = float(rng.uniform(0.1, 10))
        F = float(rng.uniform(-5, 0))
        dW = thermo.factoring_work(W, p, beta, F)
        assert mutual_information(W, p) == pytest.approx(-beta * (F + dW), abs=1e-10)


def test_factoring_work_rejects_bad_beta():
    with pytest.raises(NonPositiveBeta):
        thermo.factoring_work(bsc(0.1), [0.5, 0.5], beta=0.0)
