import numpy as np
import pytest

from codonflow import autodiff as ad
from codonflow.exceptions import GraphConsumedError, InvariantViolationError


def finite_diff(f, x, h=1e-6):
    """Central differences of a scalar function over a flat parameter vector."""
    g = np.zeros_like(x)
    for i in range(x.size):
        xp = x.copy()
        xp[i] += h
        xm = x.copy()
        xm[i] -= h
        g[i] = (f(xp) - f(xm)) / (2 * h)
    return g


def check_gradient(build, x0, tol=1e-6):
    """build(vec) -> (loss_tensor, param_tensor); compares autodiff vs FD."""
    loss, param = build(x0)
    loss.backward()
    analytic = param.grad.reshape(-1)
    numeric = finite_diff(lambda v: build(v)[0].data.item(), x0.copy())
    assert np.allclose(analytic, numeric, rtol=tol, atol=tol), (analytic, numeric)


def test_add_mul_broadcast():
    x0 = np.random.default_rng(0).normal(size=6)
    c_fixed = np.random.default_rng(1).normal(size=(1, 3))

    def build(v):
        p = ad.parameter(v.reshape(2, 3))
        c = ad.constant(c_fixed)
        out = (p * 2.0 + c - 0.5) * p
        return out.sum(), p

    check_gradient(build, x0)


def test_matmul_tanh_chain():
    rng = np.random.default_rng(2)
    w0 = rng.normal(size=12)
    x = rng.normal(size=(5, 4))

    def build(v):
        w = ad.parameter(v.reshape(4, 3))
        h = (ad.constant(x) @ w).tanh()
        return (h * h).sum(), w

    check_gradient(build, w0)


def test_log_softmax_values():
    t = ad.Tensor(np.array([[1.0, 0.0]]))
    lp = ad.log_softmax(t)
    p = np.exp(lp.data)
    assert p[0, 0] == pytest.approx(0.7311, abs=1e-4)
    assert p[0, 1] == pytest.approx(0.2689, abs=1e-4)
    assert np.exp(lp.data).sum() == pytest.approx(1.0, abs=1e-12)


def test_log_softmax_gradient():
    rng = np.random.default_rng(3)
    x0 = rng.normal(size=8)
    sel = np.array([1, 3])

    def build(v):
        p = ad.parameter(v.reshape(2, 4))
        lp = ad.log_softmax(p)
        picked = ad.gather_rows(lp, sel)
        return picked.sum(), p

    check_gradient(build, x0)


def test_gather_rows_and_take_with_repeats():
    rng = np.random.default_rng(4)
    x0 = rng.normal(size=5)
    idx = np.array([0, 2, 2, 4, 0, 0])

    def build(v):
        p = ad.parameter(v)
        picked = ad.take(p, idx)
        return (picked * picked).sum(), p

    check_gradient(build, x0)


def test_cumsum_gradient():
    rng = np.random.default_rng(5)
    x0 = rng.normal(size=7)
    coef = rng.normal(size=7)

    def build(v):
        p = ad.parameter(v)
        c = ad.cumsum(p)
        return (c * ad.constant(coef)).sum(), p

    check_gradient(build, x0)


def test_concat_and_slice_gradient():
    rng = np.random.default_rng(6)
    x0 = rng.normal(size=6)

    def build(v):
        p = ad.parameter(v)
        joined = ad.concat([p[0:2], p[3:6], p[2:3]])
        weighted = joined * ad.constant(np.arange(1.0, 7.0))
        return weighted.sum(), p

    check_gradient(build, x0)


def test_mean_and_square():
    rng = np.random.default_rng(7)
    x0 = rng.normal(size=4)

    def build(v):
        p = ad.parameter(v)
        return (p.square() - p * 0.3).mean(), p

    check_gradient(build, x0)


def test_mlp_like_composite():
    rng = np.random.default_rng(8)
    sizes = (6, 5, 4)
    n_params = 6 * 5 + 5 + 5 * 4 + 4
    x0 = rng.normal(size=n_params, scale=0.5)
    feats = rng.normal(size=(3, 6))
    actions = np.array([0, 2, 3])

    def build(v):
        o = 0
        w1 = ad.parameter(v[o : o + 30].reshape(6, 5)); o += 30
        b1 = ad.parameter(v[o : o + 5]); o += 5
        w2 = ad.parameter(v[o : o + 20].reshape(5, 4)); o += 20
        b2 = ad.parameter(v[o : o + 4]); o += 4
        h = (ad.constant(feats) @ w1 + b1).tanh()
        logits = h @ w2 + b2
        lp = ad.log_softmax(logits)
        picked = ad.gather_rows(lp, actions)
        loss = (picked.sum() - (-2.0)).square()
        return loss, (w1, b1, w2, b2)

    loss, params = build(x0)
    loss.backward()
    analytic = np.concatenate([p.grad.reshape(-1) for p in params])

    def scalar(v):
        return build(v)[0].data.item()

    numeric = finite_diff(scalar, x0.copy())
    rel = np.abs(analytic - numeric) / (np.abs(numeric) + 1e-8)
    assert rel.max() < 1e-4


def test_grad_accumulates_across_shared_leaf():
    p = ad.parameter(np.array([1.0, 2.0]))
    loss = (p * 3.0).sum() + (p * p).sum()
    loss.backward()
    assert np.allclose(p.grad, 3.0 + 2.0 * p.data)


def test_backward_twice_raises():
    p = ad.parameter(np.array([1.0]))
    loss = (p * p).sum()
    loss.backward()
    with pytest.raises(GraphConsumedError):
        loss.backward()


def test_backward_needs_scalar():
    p = ad.parameter(np.array([1.0, 2.0]))
    with pytest.raises(InvariantViolationError):
        (p * 2.0).backward()
