"""Experiment runner: training, sequential 4D-Var, generalization and reports.

Every random quantity comes from an :class:`RngStream` keyed by
``(trial, purpose[, method slot])``, so a method's numbers do not depend on
which other methods are in the run, and all methods of one trial share the
same observations, background and generalization set (paired design).
"""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numba
import numpy as np
import scipy
from scipy import special

from . import fourdvar, lorenz, mlp, training
from .dataset import TrainingSet
from .errors import ZeroVariance
from .lorenz import IntegratorSpec, LorenzParams, ObsOperator
from .smallmat import RngStream, SpdFactor, cholesky, sample_gaussian

log = logging.getLogger(__name__)

ALL_METHODS = ("Forecast", "Exact", "Standard", "Adj", "AdjVec", "Indep", "IndepVec",
               "Lagrange", "Random", "RandCol")
BASELINES = ("Forecast", "Exact")
TABLE4 = ("Forecast", "Exact", "Adj", "AdjVec", "Standard", "Indep", "IndepVec")
TABLE8 = ("Standard", "Lagrange", "Random", "RandCol")

# stream purposes
_OBS, _BACKGROUND, _DATA, _TRAIN, _GEN = 1, 2, 3, 4, 5


def _slot(method: str) -> int:
    # aliases share the slot, hence the data and network, of their target
    return ALL_METHODS.index(training.METHOD_ALIASES.get(method, method))


# ---------------------------------------------------------------------------
# generalization data

@dataclass
class GeneralizationSet:
    X: np.ndarray    # (N, 3) states
    Y: np.ndarray    # (N, 3) one-interval images
    MT: np.ndarray   # (N, 3, 3) adjoint matrices

    def __len__(self) -> int:
        return self.X.shape[0]


def make_generalization_set(p: LorenzParams, spec: IntegratorSpec, B_factor: SpdFactor, rng: RngStream,
                            nsteps: int = 10_000, reperturb_every: int = 500) -> GeneralizationSet:
    """One long run from the perturbed training base point, kicked by N(0, B) every ``reperturb_every`` steps."""
    if nsteps < 1 or reperturb_every < 1:
        raise ValueError("nsteps and reperturb_every must be >= 1")
    X, Y, MT = [], [], []
    x = sample_gaussian(training.TRAIN_X0, B_factor, rng)
    done = 0
    while done < nsteps:
        k = min(reperturb_every, nsteps - done)
        states, tlms = lorenz.trajectory_with_tlm(p, spec, x, k)
        X.append(states[:-1])
        Y.append(states[1:])
        MT.append(np.swapaxes(tlms, 1, 2))
        x = sample_gaussian(states[-1], B_factor, rng)
        done += k
    return GeneralizationSet(np.concatenate(X), np.concatenate(Y), np.concatenate(MT))


def forward_generalization_rmse(theta: mlp.MlpParams, gen: GeneralizationSet) -> float:
    if len(gen) == 0:
        raise ValueError("empty generalization set")
    r = mlp.forward(theta, gen.X) - gen.Y
    return float(np.sqrt(np.sum(r * r) / (3 * len(gen))))


def adjoint_generalization_rmse(model: training.TrainedSurrogate, gen: GeneralizationSet) -> float:
    """Frobenius mismatch of the surrogate's M^T estimate, normalised by 9 N."""
    if len(gen) == 0:
        raise ValueError("empty generalization set")
    E = model.adjoint_matrix(gen.X) - gen.MT
    return float(np.sqrt(np.sum(E * E) / (9 * len(gen))))


# ---------------------------------------------------------------------------
# statistics

@dataclass(frozen=True)
class TTest:
    t: float
    p: float
    n: int
    zero_variance: bool = False


def paired_t_test(a, b, strict: bool = False) -> TTest:
    """Two-sided paired Student t-test on ``a - b``.

    When every difference is identical the statistic is undefined; the result
    then carries ``zero_variance=True`` and p = 1 (common difference 0) or
    p = 0 (otherwise), unless ``strict`` asks for :class:`ZeroVariance`.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("paired samples must be 1-d and of equal length")
    n = a.shape[0]
    if n < 2:
        raise ValueError("need at least 2 pairs")
    d = a - b
    sd = float(np.std(d, ddof=1))
    mean = float(np.mean(d))
    if sd == 0.0 or sd <= 1e-15 * abs(mean):
        if strict:
            raise ZeroVariance(f"all {n} differences equal {mean}")
        if mean == 0.0:
            return TTest(0.0, 1.0, n, True)
        return TTest(float(np.copysign(np.inf, mean)), 0.0, n, True)
    t = mean / (sd / np.sqrt(n))
    df = n - 1
    p = float(special.betainc(0.5 * df, 0.5, df / (df + t * t)))
    return TTest(float(t), min(p, 1.0), n)


# ---------------------------------------------------------------------------
# configuration

@dataclass
class ExperimentConfig:
    trials: int = 15
    seed: int = 0
    methods: tuple = ALL_METHODS
    alpha: dict = field(default_factory=dict)
    out_dir: str | None = None
    n_data: int = 500
    gen_steps: int = 10_000
    gen_reperturb_every: int = 500
    trace_window: int = 50
    workers: int = 1
    train: training.TrainConfig = field(default_factory=training.TrainConfig)
    sequential: fourdvar.SequentialConfig = field(default_factory=fourdvar.SequentialConfig)
    bfgs: fourdvar.BfgsOptions = field(default_factory=fourdvar.BfgsOptions)

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self.methods = tuple(self.methods)
        bad = [m for m in self.methods if m not in ALL_METHODS]
        if bad:
            raise ValueError(f"unknown methods {bad}; choose from {list(ALL_METHODS)}")
        for m, a in self.alpha.items():
            if m not in training.METHODS and m not in training.METHOD_ALIASES:
                raise ValueError(f"alpha override for unknown method {m!r}")
            if not float(a) >= 0.0:
                raise ValueError(f"alpha for {m} must be nonnegative")
        if not 0 <= self.trace_window < self.sequential.n_time:
            raise ValueError("trace_window must index a window of the sequential run")

    @property
    def surrogates(self) -> list[str]:
        return [m for m in self.methods if m not in BASELINES]

    def alpha_for(self, method: str) -> float | None:
        if method in self.alpha:
            return float(self.alpha[method])
        target = training.METHOD_ALIASES.get(method)
        if target in self.alpha:
            return float(self.alpha[target])
        for alias, tgt in training.METHOD_ALIASES.items():
            if tgt == method and alias in self.alpha:
                return float(self.alpha[alias])
        return None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["methods"] = list(self.methods)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        nested = {"train": training.TrainConfig, "sequential": fourdvar.SequentialConfig,
                  "bfgs": fourdvar.BfgsOptions}
        _reject_unknown(d, cls, "config")
        for key, sub in nested.items():
            if key in d:
                if not isinstance(d[key], dict):
                    raise ValueError(f"config.{key} must be an object")
                _reject_unknown(d[key], sub, f"config.{key}")
                d[key] = sub(**d[key])
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def _reject_unknown(d: dict, cls, where: str) -> None:
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(d) - known)
    if unknown:
        raise ValueError(f"unknown keys in {where}: {unknown}")


# ---------------------------------------------------------------------------
# per-trial stages

@dataclass
class TrialInputs:
    truth: lorenz.Trajectory
    observations: np.ndarray
    xb0: np.ndarray


def trial_inputs(cfg: ExperimentConfig, trial: int, p: LorenzParams, B_factor: SpdFactor) -> TrialInputs:
    seq = cfg.sequential
    truth = lorenz.generate_truth(p, seq.integrator, lorenz.TRUTH_X0, seq.n_time + seq.window)
    obs = lorenz.observe(ObsOperator(), truth, RngStream(cfg.seed, (trial, _OBS)))
    xb0 = fourdvar.initial_background(truth[0], B_factor, RngStream(cfg.seed, (trial, _BACKGROUND)))
    return TrialInputs(truth, obs, xb0)


def training_data(cfg: ExperimentConfig, trial: int, method: str, p: LorenzParams) -> TrainingSet:
    mdef = training.METHODS[training.canonical_method(method)]
    rng = RngStream(cfg.seed, (trial, _DATA, _slot(method)))
    return training.generate_training_set(p, cfg.sequential.integrator, rng, cfg.n_data, scheme=mdef.scheme)


def train_method(cfg: ExperimentConfig, trial: int, method: str, data: TrainingSet) -> training.TrainedSurrogate:
    rng = RngStream(cfg.seed, (trial, _TRAIN, _slot(method)))
    return training.train(method, data, cfg.train, rng, alpha=cfg.alpha_for(method))


def generalization_set(cfg: ExperimentConfig, trial: int, p: LorenzParams, B_factor: SpdFactor) -> GeneralizationSet:
    return make_generalization_set(p, cfg.sequential.integrator, B_factor, RngStream(cfg.seed, (trial, _GEN)),
                                   cfg.gen_steps, cfg.gen_reperturb_every)


def model_for(method: str, sur: training.TrainedSurrogate | None, p: LorenzParams, spec: IntegratorSpec):
    if method == "Exact":
        return fourdvar.exact_model(p, spec)
    return fourdvar.surrogate_model(method, sur.theta, sur.phi)


def opt_trace(cfg: ExperimentConfig, model: fourdvar.ModelPair, exact_model: fourdvar.ModelPair,
              inputs: TrialInputs, xb: np.ndarray, B_factor: SpdFactor) -> list[tuple]:
    """(iteration, high-fidelity cost / its initial value, wall seconds) for one window."""
    k = cfg.trace_window
    y = inputs.observations[k + 1:k + 1 + cfg.sequential.window]
    prob = fourdvar.FourDVarProblem(xb, B_factor, y, model)
    hifi = fourdvar.FourDVarProblem(xb, B_factor, y, exact_model)
    fourdvar.solve_window(prob, xb, fourdvar.BfgsOptions(maxiter=1))  # compile outside the trace
    res = fourdvar.solve_window(prob, xb, cfg.bfgs)
    f0 = fourdvar.cost(hifi, res.trace[0][3])
    return [(it, fourdvar.cost(hifi, x) / f0, wall) for it, wall, _, x in res.trace]


@dataclass
class TrialResult:
    trial: int
    rmse: dict = field(default_factory=dict)
    fwd_gen: dict = field(default_factory=dict)
    adj_gen: dict = field(default_factory=dict)
    wall: dict = field(default_factory=dict)          # method -> (mean, std, count) per window
    iterations: dict = field(default_factory=dict)
    terminations: dict = field(default_factory=dict)
    curves: dict = field(default_factory=dict)        # method -> (forward, adjoint) arrays
    traces: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    analyses: dict = field(default_factory=dict)      # method -> SequentialResult


def train_stage(cfg: ExperimentConfig, trial: int, out: TrialResult) -> dict:
    """Train every requested surrogate of one trial; failures land in ``out.errors``."""
    p = LorenzParams()
    models: dict[str, training.TrainedSurrogate] = {}
    for m in cfg.surrogates:
        canon = training.canonical_method(m)
        try:
            if canon not in models:
                models[canon] = train_method(cfg, trial, m, training_data(cfg, trial, m, p))
            models[m] = models[canon]
        except Exception as exc:  # recorded per method; the trial goes on
            log.warning("trial %d: training %s failed: %s", trial, m, exc)
            out.errors[m] = f"training: {exc}"
    for m in cfg.surrogates:
        if m in models:
            out.curves[m] = (models[m].forward_loss, models[m].adjoint_loss)
    return {m: models[m] for m in cfg.surrogates if m in models}


def generalize_stage(cfg: ExperimentConfig, trial: int, models: dict, out: TrialResult) -> None:
    if not models:
        return
    gen = generalization_set(cfg, trial, LorenzParams(), cholesky(fourdvar.B0))
    for m, sur in models.items():
        out.fwd_gen[m] = forward_generalization_rmse(sur.theta, gen)
        out.adj_gen[m] = adjoint_generalization_rmse(sur, gen)


def assimilate_stage(cfg: ExperimentConfig, trial: int, models: dict, out: TrialResult,
                     keep_analyses: bool = False) -> None:
    """Forecast, Exact and surrogate sequential runs on the trial's shared inputs."""
    p = LorenzParams()
    spec = cfg.sequential.integrator
    B_factor = cholesky(fourdvar.B0)
    inputs = trial_inputs(cfg, trial, p, B_factor)
    truth_n = inputs.truth.states[:cfg.sequential.n_time]
    skip = cfg.sequential.spinup_discard

    if "Forecast" in cfg.methods:
        fc = fourdvar.forecast_run(cfg.sequential, inputs.xb0, p)
        out.rmse["Forecast"] = fourdvar.spatiotemporal_rmse(fc, truth_n, skip)

    runs = {}
    for m in cfg.methods:
        if m == "Forecast" or (m != "Exact" and m not in models):
            continue
        model = model_for(m, models.get(m), p, spec)
        res = fourdvar.sequential_run(cfg.sequential, model, inputs.truth, inputs.observations, B_factor,
                                      xb0=inputs.xb0, p=p, opts=cfg.bfgs)
        runs[m] = res
        if res.error:
            out.errors[m] = f"assimilation: {res.error}"
            continue
        out.rmse[m] = fourdvar.spatiotemporal_rmse(res.analyses, truth_n, skip)
        out.wall[m] = (float(res.wall_times.mean()), float(res.wall_times.std()), len(res.wall_times))
        out.iterations[m] = float(res.iterations.mean())
        out.terminations[m] = {t: res.terminations.count(t) for t in fourdvar.TERMINATIONS}
    if keep_analyses:
        out.analyses = runs

    # optimizer traces: trial 0, one window, common start at the Exact run's background
    if trial == 0 and "Exact" in runs and not runs["Exact"].error:
        exact = fourdvar.exact_model(p, spec)
        k = cfg.trace_window
        xb = inputs.xb0 if k == 0 else lorenz.propagate(p, spec, runs["Exact"].analyses[k - 1])
        for m in runs:
            if not runs[m].error:
                out.traces[m] = opt_trace(cfg, model_for(m, models.get(m), p, spec), exact, inputs, xb, B_factor)


def run_trial(cfg: ExperimentConfig, trial: int, keep_analyses: bool = False) -> TrialResult:
    out = TrialResult(trial)
    models = train_stage(cfg, trial, out)
    generalize_stage(cfg, trial, models, out)
    assimilate_stage(cfg, trial, models, out, keep_analyses)
    return out


def save_surrogates(out_dir, trial: int, models: dict, seed: int | None = None) -> None:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for m, sur in models.items():
        (out_dir / f"params_{m}_trial{trial}.json").write_text(
            mlp.params_to_json(sur.theta, seed, {"method": sur.method, "alpha": sur.alpha, "trial": trial}) + "\n")
        if sur.phi is not None:
            (out_dir / f"adjnet_{m}_trial{trial}.json").write_text(
                mlp.params_to_json(sur.phi, seed, {"method": sur.method, "trial": trial}) + "\n")


def load_surrogates(out_dir, trial: int, methods) -> dict:
    out_dir = Path(out_dir)
    models = {}
    for m in methods:
        path = out_dir / f"params_{m}_trial{trial}.json"
        if not path.exists():
            continue
        env = json.loads(path.read_text())
        theta = mlp.params_from_json(path.read_text())
        adj = out_dir / f"adjnet_{m}_trial{trial}.json"
        phi = mlp.params_from_json(adj.read_text()) if adj.exists() else None
        models[m] = training.TrainedSurrogate(env.get("method", m), theta, phi, alpha=env.get("alpha", 0.0))
    return models


# ---------------------------------------------------------------------------
# report

@dataclass
class RunReport:
    config: ExperimentConfig
    trials: list[TrialResult]

    def trial(self, k: int) -> TrialResult:
        for t in self.trials:
            if t.trial == k:
                return t
        self.trials.append(TrialResult(k))
        self.trials.sort(key=lambda t: t.trial)
        return self.trial(k)

    def values(self, metric: str, method: str) -> list[float]:
        """Per-trial raw values, NaN where the cell is missing."""
        return [getattr(t, metric).get(method, np.nan) for t in self.trials]

    def summary(self, metric: str, method: str) -> tuple[float, float, int]:
        v = np.array(self.values(metric, method), dtype=np.float64)
        v = v[np.isfinite(v)]
        if v.size == 0:
            return np.nan, np.nan, 0
        return float(v.mean()), float(v.std(ddof=1)) if v.size > 1 else 0.0, int(v.size)

    def ttest(self, metric: str, a: str, b: str) -> TTest | None:
        va = np.array(self.values(metric, a), dtype=np.float64)
        vb = np.array(self.values(metric, b), dtype=np.float64)
        ok = np.isfinite(va) & np.isfinite(vb)
        if ok.sum() < 2:
            return None
        return paired_t_test(va[ok], vb[ok])

    def wall_summary(self, method: str) -> tuple[float, float, int]:
        """Mean and std over every window optimization of every trial."""
        cells = [t.wall[method] for t in self.trials if method in t.wall]
        if not cells:
            return np.nan, np.nan, 0
        n = sum(c[2] for c in cells)
        mean = sum(c[0] * c[2] for c in cells) / n
        second = sum((c[1] ** 2 + c[0] ** 2) * c[2] for c in cells) / n
        return mean, float(np.sqrt(max(second - mean * mean, 0.0))), n


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if v is None or (isinstance(v, float) and not np.isfinite(v)):
        return "nan" if v is not None else ""
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([_fmt(v) for v in r])


def _stat_rows(report: RunReport, metric: str, methods, reference: str | None):
    rows = []
    for m in methods:
        mean, std, n = report.summary(metric, m)
        row = [m, mean, std, n]
        if reference is not None:
            tt = None if m == reference else report.ttest(metric, m, reference)
            row += [None, None, ""] if tt is None else [tt.t, tt.p, "zero_variance" if tt.zero_variance else ""]
        rows.append(row)
    return rows


def write_report(report: RunReport, out: str | os.PathLike) -> None:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    cfg = report.config
    present = [m for m in cfg.methods]
    surr = cfg.surrogates
    ref = "Standard" if "Standard" in present else None
    stat_hdr = ["method", "mean", "std", "n"] + ([f"t_vs_{ref}", f"p_vs_{ref}", "flag"] if ref else [])

    _write_csv(out / "table4_rmse.csv", stat_hdr, _stat_rows(report, "rmse", [m for m in TABLE4 if m in present], ref))
    _write_csv(out / "table8_adjvec_rmse.csv", stat_hdr,
               _stat_rows(report, "rmse", [m for m in TABLE8 if m in present], ref))
    _write_csv(out / "table5_fwd_gen.csv", stat_hdr, _stat_rows(report, "fwd_gen", surr, ref))
    _write_csv(out / "table6_adj_gen.csv", stat_hdr, _stat_rows(report, "adj_gen", surr, ref))

    exact_mean = report.wall_summary("Exact")[0]
    rows = []
    for m in [m for m in present if m != "Forecast"]:
        mean, std, n = report.wall_summary(m)
        flag = "" if m == "Exact" or not np.isfinite(exact_mean) or not np.isfinite(mean) else \
            ("faster_than_exact" if mean < exact_mean else "NOT_faster_than_exact")
        iters = [t.iterations[m] for t in report.trials if m in t.iterations]
        rows.append([m, mean, std, n, float(np.mean(iters)) if iters else np.nan, flag])
    _write_csv(out / "table7_walltime.csv",
               ["method", "mean_wall_time_s", "std_wall_time_s", "windows", "mean_iterations", "flag"], rows)

    # raw per-trial values behind every table cell
    rows = []
    for t in report.trials:
        for metric in ("rmse", "fwd_gen", "adj_gen", "iterations"):
            for m in present:
                if m in getattr(t, metric):
                    rows.append([t.trial, m, metric, getattr(t, metric)[m]])
    _write_csv(out / "raw_trials.csv", ["trial", "method", "metric", "value"], rows)
    rows = [[t.trial, m, *t.wall[m]] for t in report.trials for m in present if m in t.wall]
    _write_csv(out / "raw_walltime.csv", ["trial", "method", "mean_wall_time_s", "std_wall_time_s", "windows"], rows)
    rows = [[t.trial, m, term, c] for t in report.trials for m in present if m in t.terminations
            for term, c in t.terminations[m].items()]
    _write_csv(out / "raw_terminations.csv", ["trial", "method", "termination", "count"], rows)

    for m in surr:
        rows = []
        for t in report.trials:
            if m in t.curves:
                fwd, adj = t.curves[m]
                rows += [[t.trial, e + 1, f, a] for e, (f, a) in enumerate(zip(fwd, adj))]
        _write_csv(out / f"losscurves_{m}.csv", ["trial", "epoch", "forward_loss", "adjoint_loss"], rows)
    for t in report.trials:
        for m, tr in t.traces.items():
            _write_csv(out / f"opttrace_{m}.csv", ["iter", "f_normalized", "wall_time_s"], tr)
        for m, res in t.analyses.items():
            (out / "analyses").mkdir(exist_ok=True)
            res.to_csv(out / "analyses" / f"analysis_{m}_trial{t.trial}.csv")

    meta = {
        "config": cfg.to_dict(),
        "versions": {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__,
                     "numba": numba.__version__},
        "streams": {"observations": _OBS, "background": _BACKGROUND, "training_data": _DATA,
                    "training": _TRAIN, "generalization": _GEN,
                    "method_slots": {m: _slot(m) for m in ALL_METHODS}},
        "errors": {str(t.trial): t.errors for t in report.trials if t.errors},
        "notes": [
            "Generalization RMSEs use one fresh test set per trial, so realizations = trials.",
            "Random denotes the AdjVec network (random vectors); both rows share one network per trial.",
            "Wall-time ordering is flagged in table7_walltime.csv, not asserted; absolute times are hardware dependent.",
            "Files whose columns mention wall time are measurements and are not reproducible byte for byte.",
        ],
    }
    with open(out / "run_meta.json", "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def run_experiment(cfg: ExperimentConfig, keep_analyses: bool = False) -> RunReport:
    """Run every trial (optionally in worker processes) and write the report if ``cfg.out_dir`` is set."""
    if cfg.workers > 1 and cfg.trials > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as ex:
            trials = list(ex.map(run_trial, [cfg] * cfg.trials, range(cfg.trials), [keep_analyses] * cfg.trials))
    else:
        trials = []
        for t in range(cfg.trials):
            log.info("trial %d/%d", t + 1, cfg.trials)
            trials.append(run_trial(cfg, t, keep_analyses))
    report = RunReport(cfg, trials)
    if cfg.out_dir:
        write_report(report, cfg.out_dir)
    return report


def read_raw(out: str | os.PathLike, cfg: ExperimentConfig | None = None) -> RunReport:
    """Rebuild a report from the raw files of an output directory."""
    out = Path(out)
    if cfg is None:
        with open(out / "run_meta.json") as fh:
            cfg = ExperimentConfig.from_dict(json.load(fh)["config"])
    trials: dict[int, TrialResult] = {}

    def trial(k):
        return trials.setdefault(k, TrialResult(k))

    if (out / "raw_trials.csv").exists():
        with open(out / "raw_trials.csv") as fh:
            for r in csv.DictReader(fh):
                getattr(trial(int(r["trial"])), r["metric"])[r["method"]] = float(r["value"])
    if (out / "raw_walltime.csv").exists():
        with open(out / "raw_walltime.csv") as fh:
            for r in csv.DictReader(fh):
                trial(int(r["trial"])).wall[r["method"]] = (
                    float(r["mean_wall_time_s"]), float(r["std_wall_time_s"]), int(r["windows"]))
    if (out / "raw_terminations.csv").exists():
        with open(out / "raw_terminations.csv") as fh:
            for r in csv.DictReader(fh):
                trial(int(r["trial"])).terminations.setdefault(r["method"], {})[r["termination"]] = int(r["count"])
    for m in cfg.surrogates:
        path = out / f"losscurves_{m}.csv"
        if path.exists():
            rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            for k in np.unique(rows[:, 0]).astype(int):
                sel = rows[rows[:, 0] == k]
                trial(k).curves[m] = (sel[:, 2], sel[:, 3])
    for m in cfg.methods:
        path = out / f"opttrace_{m}.csv"
        if path.exists():
            rows = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
            trial(0).traces[m] = [(int(r[0]), r[1], r[2]) for r in rows]
    return RunReport(cfg, [trials[k] for k in sorted(trials)])
