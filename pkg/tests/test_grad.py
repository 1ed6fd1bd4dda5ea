import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from mfrnn.data import SequenceBatch
from mfrnn.errors import ConfigError, GuardError, PreconditionError
from mfrnn.grad import (adjoint_batch, backward, chain_oracle, gradient, to_scaling,
                        value_and_gradient)
from mfrnn.model import NetConfig, WeightSet, forward, forward_batch, permute

from conftest import random_net
from oracles import central_differences, rel_err, risk


def make_batch(rng, m, L, d):
    return SequenceBatch(rng.uniform(0, 2 * np.pi, size=(m, L + 1, d)), rng.normal(size=m), 0)


def test_loss_matches_loop_oracle(rng):
    w = random_net(rng, 5, d=2, L=3)
    b = make_batch(rng, 6, 3, 2)
    value, _ = value_and_gradient(w, b, "plain")
    assert value == pytest.approx(risk(w.W_xh, w.W_hh, w.W_hy, b.sequences, b.targets), rel=1e-13)


@pytest.mark.parametrize("n,L,d", [(1, 0, 1), (3, 2, 1), (6, 4, 2), (10, 5, 3)])
def test_plain_gradient_finite_differences(rng, n, L, d):
    w = random_net(rng, n, d=d, L=L, scale_hh=2.0)
    b = make_batch(rng, 8, L, d)
    g = gradient(w, b, "plain")
    fd = central_differences(w.W_xh, w.W_hh, w.W_hy, b.sequences, b.targets)
    for got, want in zip((g.g_xh, g.g_hh, g.g_hy), fd):
        if np.linalg.norm(want) > 1e-9:
            assert rel_err(got, want) < 1e-6
        else:
            assert np.max(np.abs(got)) < 1e-9


def test_meanfield_is_scaled_plain(rng):
    w = random_net(rng, 7, d=2, L=3)
    b = make_batch(rng, 5, 3, 2)
    p, mf = gradient(w, b, "plain"), gradient(w, b, "meanfield")
    assert np.array_equal(mf.g_hy, p.g_hy * 7)
    assert np.array_equal(mf.g_xh, p.g_xh * 7)
    assert np.array_equal(mf.g_hh, p.g_hh * 49)
    conv = to_scaling(p, "meanfield", 7)
    assert np.array_equal(conv.g_hh, mf.g_hh)
    back = to_scaling(mf, "plain", 7)
    assert np.allclose(back.g_hh, p.g_hh, rtol=1e-15)


def test_depth_zero_has_no_hidden_gradient(rng):
    w = random_net(rng, 4, L=0)
    b = make_batch(rng, 3, 0, 1)
    g = gradient(w, b, "meanfield")
    assert not g.g_hh.any()
    # single-layer closed form
    s = np.tanh(b.sequences[:, 0, 0][:, None] * w.W_xh[:, 0])
    dF = s @ w.W_hy / 4 - b.targets
    assert np.allclose(g.g_hy, (dF[:, None] * s).mean(axis=0), rtol=1e-13)
    assert np.allclose(g.g_xh[:, 0], (dF[:, None] * w.W_hy * (1 - s * s)
                                      * b.sequences[:, 0, 0][:, None]).mean(axis=0), rtol=1e-13)


def test_zero_readout_kills_gradient(rng):
    w = random_net(rng, 5, L=3).replace(W_hy=np.zeros(5))
    b = make_batch(rng, 4, 3, 1)
    g = gradient(w, b, "meanfield")
    assert not g.g_xh.any() and not g.g_hh.any()


def test_perfect_fit_zero_gradient(rng):
    w = random_net(rng, 5, L=2)
    X = make_batch(rng, 4, 2, 1).sequences
    A, S = forward_batch(w, X)
    b = SequenceBatch(X, S[0] @ w.W_hy / 5, 0)
    g = gradient(w, b, "plain")
    assert max(np.abs(g.g_hh).max(), np.abs(g.g_xh).max(), np.abs(g.g_hy).max()) == 0.0


def test_adjoint_bound(rng):
    n, L = 6, 4
    w = random_net(rng, n, L=L)
    tr = forward(w, rng.normal(size=L + 1))
    G = backward(w, tr, 0.0).G
    # each link contributes at most max|W_hh| (mean over n), derivative <= 1
    bound = np.max(np.abs(w.W_hy)) * np.max(np.abs(w.W_hh)) ** np.arange(L + 1)
    assert np.all(np.max(np.abs(G), axis=1) <= bound + 1e-12)


def test_adjoint_bound_batch(rng):
    n, L = 9, 5
    w = random_net(rng, n, L=L, scale_hh=3.0)
    A, S = forward_batch(w, make_batch(rng, 20, L, 1).sequences)
    G = adjoint_batch(w, A, S)
    bound = np.max(np.abs(w.W_hy)) * np.max(np.abs(w.W_hh)) ** np.arange(L + 1)
    assert np.all(np.max(np.abs(G), axis=(1, 2)) <= bound * (1 + 1e-12))


def test_single_and_batch_adjoint_agree(rng):
    w = random_net(rng, 5, d=2, L=3)
    X = make_batch(rng, 4, 3, 2).sequences
    A, S = forward_batch(w, X)
    Gb = adjoint_batch(w, A, S)
    for i in range(4):
        Gs = backward(w, forward(w, X[i]), 0.0).G
        assert np.allclose(Gb[:, i, :], Gs, atol=1e-14)


@pytest.mark.parametrize("n,L", [(1, 2), (3, 3), (5, 2)])
def test_chain_oracle_matches_adjoint(rng, n, L):
    w = random_net(rng, n, L=L, scale_hh=2.0)
    x = rng.normal(size=L + 1)
    G = backward(w, forward(w, x), 0.0).G
    for i in range(L + 1):
        assert np.max(np.abs(chain_oracle(w, x, i) - G[i])) < 1e-12


def test_chain_oracle_guards(rng):
    with pytest.raises(GuardError):
        chain_oracle(random_net(rng, 65, L=1), np.zeros(2), 1)
    with pytest.raises(ConfigError):
        chain_oracle(random_net(rng, 3, L=1), np.zeros(2), 2)


def test_unlabeled_batch_rejected(rng):
    w = random_net(rng, 3, L=1)
    with pytest.raises(PreconditionError):
        gradient(w, SequenceBatch(np.zeros((2, 2, 1)), None, 0))


def test_mismatched_batch_rejected(rng):
    w = random_net(rng, 3, L=1)
    with pytest.raises(ConfigError):
        gradient(w, make_batch(rng, 2, 2, 1))
    with pytest.raises(ConfigError):
        gradient(w, make_batch(rng, 2, 1, 1), "bogus")


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_gradient_equivariance(seed):
    rng = np.random.default_rng(seed)
    w = random_net(rng, 8, d=2, L=3)
    b = make_batch(rng, 5, 3, 2)
    pi = rng.permutation(8)
    g, gp = gradient(w, b), gradient(permute(w, pi), b)
    assert np.allclose(gp.g_hy, g.g_hy[pi], rtol=1e-12, atol=1e-15)
    assert np.allclose(gp.g_xh, g.g_xh[pi], rtol=1e-12, atol=1e-15)
    assert np.allclose(gp.g_hh, g.g_hh[np.ix_(pi, pi)], rtol=1e-12, atol=1e-15)
