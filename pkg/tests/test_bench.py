import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from adjsurrogate import bench, lorenz, mlp, training
from adjsurrogate.bench import ExperimentConfig
from adjsurrogate.errors import ZeroVariance
from adjsurrogate.fourdvar import B0
from adjsurrogate.smallmat import RngStream, cholesky

P = lorenz.LorenzParams()
SPEC = lorenz.IntegratorSpec()


def test_t_test_examples():
    a = np.array([1.0, 2.0, 3.0])
    r = bench.paired_t_test(a, a)
    assert r.zero_variance and r.p == 1.0 and r.t == 0.0
    with pytest.raises(ZeroVariance):
        bench.paired_t_test(a, a, strict=True)
    r = bench.paired_t_test([1.0, -1.0], [0.0, 0.0])
    assert r.t == 0.0 and r.p == pytest.approx(1.0)
    r = bench.paired_t_test([1, 1.1, 0.9, 1.05, 0.95], np.zeros(5))
    assert r.p < 0.001
    r = bench.paired_t_test(a + 1.0, a)
    assert r.zero_variance and r.p == 0.0
    with pytest.raises(ValueError):
        bench.paired_t_test([1.0], [2.0])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=3, max_size=20), st.integers(0, 2**31))
def test_t_test_matches_scipy(a, seed):
    a = np.array(a)
    b = a + RngStream(seed).standard_normal(a.size)
    ours = bench.paired_t_test(a, b)
    ref = stats.ttest_rel(a, b)
    assert ours.t == pytest.approx(ref.statistic, rel=1e-9, abs=1e-12)
    assert ours.p == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-14)


@pytest.fixture(scope="module")
def gen():
    return bench.make_generalization_set(P, SPEC, cholesky(B0), RngStream(0, 5), nsteps=120, reperturb_every=50)


def test_generalization_set_structure(gen):
    assert len(gen) == 120
    for k in (0, 49, 50, 119):
        y, M = lorenz.tangent_linear(P, SPEC, gen.X[k])
        assert np.array_equal(gen.Y[k], y) and np.array_equal(gen.MT[k], M.T)
    assert np.array_equal(gen.X[1:50], gen.Y[:49])
    assert not np.array_equal(gen.X[50], gen.Y[49])  # kicked by N(0, B)


class _Oracle:
    def __init__(self, MT):
        self.MT = MT

    def adjoint_matrix(self, x):
        return self.MT


def test_generalization_oracles(gen):
    zero = mlp.MlpParams.zeros()
    assert bench.forward_generalization_rmse(zero, gen) == pytest.approx(np.sqrt(np.mean(gen.Y ** 2)), rel=1e-12)
    const = mlp.MlpParams.zeros()
    sub = bench.GeneralizationSet(gen.X[:1], gen.Y[:1], gen.MT[:1])
    const.b2 = sub.Y[0].copy()
    assert bench.forward_generalization_rmse(const, sub) == 0.0
    assert bench.adjoint_generalization_rmse(_Oracle(gen.MT), gen) == 0.0
    z = training.TrainedSurrogate("Standard", mlp.MlpParams.zeros())
    assert bench.adjoint_generalization_rmse(z, gen) == pytest.approx(np.sqrt(np.mean(gen.MT ** 2)), rel=1e-12)


def test_config_validation(tmp_path):
    cfg = ExperimentConfig.from_dict({"trials": 3, "train": {"epochs": 4}, "alpha": {"Random": 0.01}})
    assert cfg.train.epochs == 4 and cfg.alpha_for("AdjVec") == 0.01 and cfg.alpha_for("Adj") is None
    assert ExperimentConfig.from_dict(cfg.to_dict()) == cfg
    for bad in ({"trails": 3}, {"train": {"epoch": 3}}, {"bfgs": {"c1": 0.95}}, {"methods": ["Foo"]},
                {"alpha": {"Foo": 1.0}}, {"alpha": {"Adj": -1.0}}, {"trials": 0}, {"sequential": 3}):
        with pytest.raises((ValueError, TypeError)):
            ExperimentConfig.from_dict(bad)
    path = tmp_path / "c.json"
    path.write_text(json.dumps({"seed": 9}))
    assert ExperimentConfig.from_json(path).seed == 9


def test_streams_independent_of_method_set():
    cfg_a = ExperimentConfig(methods=("Standard", "Adj"))
    cfg_b = ExperimentConfig(methods=("Adj",))
    a = bench.training_data(cfg_a, 0, "Adj", P)
    b = bench.training_data(cfg_b, 0, "Adj", P)
    assert np.array_equal(a.X, b.X)
    r = bench.training_data(cfg_a, 0, "Random", P)
    v = bench.training_data(cfg_a, 0, "AdjVec", P)
    assert np.array_equal(r.V, v.V)
    assert not np.array_equal(bench.training_data(cfg_a, 1, "Adj", P).X, a.X)


def _tiny(tmp_path, name, **kw):
    d = {"trials": 1, "seed": 3, "out_dir": str(tmp_path / name), "n_data": 50, "gen_steps": 100,
         "gen_reperturb_every": 50, "trace_window": 5,
         "train": {"epochs": 2, "batches_per_epoch": 5},
         "sequential": {"n_time": 40, "spinup_discard": 10}}
    d.update(kw)
    return ExperimentConfig.from_dict(d)


def test_smoke_forecast_exact(tmp_path):
    cfg = _tiny(tmp_path, "fe", methods=["Forecast", "Exact"])
    report = bench.run_experiment(cfg)
    rows = (tmp_path / "fe" / "table4_rmse.csv").read_text().strip().splitlines()
    assert len(rows) == 3
    assert report.summary("rmse", "Forecast")[0] > 3 * report.summary("rmse", "Exact")[0]


def test_full_report_roundtrip(tmp_path):
    cfg = _tiny(tmp_path, "all")
    report = bench.run_experiment(cfg, keep_analyses=True)
    out = tmp_path / "all"
    for f in ("table4_rmse.csv", "table5_fwd_gen.csv", "table6_adj_gen.csv", "table7_walltime.csv",
              "table8_adjvec_rmse.csv", "raw_trials.csv", "run_meta.json", "losscurves_Adj.csv",
              "opttrace_Exact.csv", "analyses/analysis_Exact_trial0.csv"):
        assert (out / f).exists(), f
    t = report.trials[0]
    assert set(t.rmse) == set(bench.ALL_METHODS)
    assert t.rmse["Random"] == t.rmse["AdjVec"]
    back = bench.read_raw(out)
    for metric in ("rmse", "fwd_gen", "adj_gen"):
        for m in t.rmse:
            if m in getattr(t, metric):
                assert back.trials[0].__dict__[metric][m] == pytest.approx(getattr(t, metric)[m], rel=1e-9)
    trace = np.loadtxt(out / "opttrace_Exact.csv", delimiter=",", skiprows=1)
    assert trace[0, 1] == 1.0


def test_surrogate_save_load(tmp_path):
    rng = RngStream(1)
    models = {"Indep": training.TrainedSurrogate("Indep", mlp.MlpParams.init(rng), mlp.AdjNetParams.init(rng)),
              "Adj": training.TrainedSurrogate("Adj", mlp.MlpParams.init(rng), alpha=2.0)}
    bench.save_surrogates(tmp_path, 4, models, seed=7)
    back = bench.load_surrogates(tmp_path, 4, ["Indep", "Adj", "Standard"])
    assert set(back) == {"Indep", "Adj"}
    assert np.array_equal(back["Indep"].phi.flatten(), models["Indep"].phi.flatten())
    assert back["Adj"].alpha == 2.0
