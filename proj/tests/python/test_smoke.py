import json

import numpy as np
import pytest

import shortpanel as sp


def factor_panel(n0=200, t0=4, seed=0):
    rng = np.random.default_rng(seed)
    z = np.concatenate([[1.0], rng.standard_normal(n0)])
    f = rng.standard_normal((2, t0 + 1))
    load = np.stack([np.log1p(z**4), z**3 - 0.5 * z**2])
    y = 0.5 + np.outer(z, np.linspace(1.0, 1.2, t0 + 1)) + load.T @ f
    cov = np.column_stack([np.ones_like(z), z])
    treated = [True] + [False] * n0
    return sp.Panel(y, treated, cov, t0), y[0, t0]


def test_pinv_recovers_noiseless_counterfactual():
    panel, truth = factor_panel()
    res = sp.estimate_att(panel)
    assert panel.n_controls == 200
    assert res.att.shape == (1,)
    assert abs(res.counterfactual[0] - truth) < 1e-8
    assert res.f_star.shape == (4, 1)
    assert res.delta == []


def test_ridge_and_json_report():
    panel, truth = factor_panel(seed=1)
    for rule in ("cv", "gcv", 0.01):
        res = sp.estimate_att(panel, variant="ridge", delta=rule)
        assert len(res.delta) == 1 and res.delta[0] > 0
        assert np.isfinite(res.att[0])
    report = json.loads(sp.estimate_json(panel))
    assert report["schema"] == 1
    assert report["att"][0] == sp.estimate_att(panel).att[0]


def test_error_types():
    panel, _ = factor_panel()
    with pytest.raises(sp.ValidationError):
        sp.estimate_att(panel, variant="ridge")
    with pytest.raises(ValueError):
        sp.estimate_att(panel, variant="pinv", delta=0.1)
    y = np.zeros((4, 2))
    with pytest.raises(sp.ValidationError):
        sp.estimate_att(sp.Panel(y, [True, True, False, False], np.ones((4, 1)), 1))
    z = np.arange(8.0).reshape(4, 2)
    z[:, 1] = z[:, 0]
    with pytest.raises(sp.NumericalError):
        sp.estimate_att(sp.Panel(np.random.default_rng(2).standard_normal((4, 2)), [True, False, False, False], z, 1))


def test_baselines():
    rng = np.random.default_rng(3)
    a = rng.standard_normal(6)
    g = rng.standard_normal(4)
    y = a[:, None] + g[None, :]
    y[0, 3] += 1.0
    panel = sp.Panel(y, [True] + [False] * 5, rng.standard_normal((6, 1)), 3)
    assert sp.did_att(panel)[0] == pytest.approx(1.0, abs=1e-12)
    w = sp.sc_weights(panel)
    assert w.converged
    assert w.weights.sum() == pytest.approx(1.0)
    assert w.weights.min() >= 0.0
    assert sp.sc_att(panel, predictors="II").shape == (1,)


def test_linalg_and_summary():
    b = np.array([[2.0]])
    assert sp.tikhonov_inverse(b, 1.0)[0, 0] == pytest.approx(0.4)
    m = np.random.default_rng(4).standard_normal((4, 3))
    assert np.allclose(sp.svd_pinv(m), np.linalg.pinv(m))
    s = sp.summarize([0.0, 2.0], 1.0)
    assert (s.bias, s.rmse) == (0.0, 1.0)
    assert s.sd == pytest.approx(2.0**0.5)


def test_small_study_is_deterministic():
    kw = dict(t0=3, n=30, reps=6, seed=9, methods=["R=2 (no tuning)", "DID"])
    a = sp.run_study(jobs=1, **kw)
    b = sp.run_study(jobs=2, **kw)
    assert [m.label for m in a.methods] == ["R=2 (no tuning)", "DID"]
    assert a.methods[0].estimates == b.methods[0].estimates
    assert json.loads(a.to_json())["config"]["seed"] == 9
    assert "SCM-II" in sp.METHODS
