"""Command line entry point: ``adjsurrogate <subcommand> [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import bench, fourdvar, lorenz, training
from .smallmat import cholesky

log = logging.getLogger("adjsurrogate")


def _alpha_list(text: str) -> dict:
    out = {}
    for item in filter(None, text.split(",")):
        name, sep, value = item.partition("=")
        if not sep:
            raise argparse.ArgumentTypeError(f"expected method=value, got {item!r}")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            raise argparse.ArgumentTypeError(f"bad alpha value in {item!r}") from None
    return out


def _seed(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON experiment config (unknown keys are rejected)")
    common.add_argument("--seed", type=_seed)
    common.add_argument("--out", type=Path, help="output directory (default: results)")
    common.add_argument("--trials", type=int)
    common.add_argument("--methods", type=lambda s: [m.strip() for m in s.split(",") if m.strip()],
                        help="comma list, e.g. Exact,Standard,Adj")
    common.add_argument("--alpha", type=_alpha_list, help="per-method loss weights, e.g. Adj=30,AdjVec=1e-3")
    common.add_argument("--workers", type=int, help="worker processes for independent trials (full only)")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="adjsurrogate", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in [
        ("gen-data", "write truth, observations and training/generalization data"),
        ("train", "train the surrogate networks"),
        ("assimilate", "run sequential 4D-Var with Forecast, Exact and trained surrogates"),
        ("generalize", "forward and adjoint generalization RMSE of trained surrogates"),
        ("report", "rebuild the tables from the raw files of --out"),
        ("full", "everything, end to end"),
    ]:
        sub.add_parser(name, parents=[common], help=help_)
    return ap


def load_config(args) -> bench.ExperimentConfig:
    d = {}
    if args.config is not None:
        with open(args.config) as fh:
            d = json.load(fh)
        if not isinstance(d, dict):
            raise ValueError("config must be a JSON object")
    cfg = bench.ExperimentConfig.from_dict(d)
    over = {"seed": args.seed, "trials": args.trials, "methods": args.methods, "workers": args.workers}
    kw = {k: v for k, v in over.items() if v is not None}
    if args.alpha:
        kw["alpha"] = {**cfg.alpha, **args.alpha}
    kw["out_dir"] = str(args.out) if args.out is not None else (cfg.out_dir or "results")
    d = cfg.to_dict()
    d.update(kw)
    return bench.ExperimentConfig.from_dict(d)


def _existing(out: Path, cfg: bench.ExperimentConfig) -> bench.RunReport:
    if (out / "run_meta.json").exists():
        return bench.read_raw(out, cfg)
    return bench.RunReport(cfg, [])


def cmd_gen_data(cfg, out: Path) -> None:
    p = lorenz.LorenzParams()
    B_factor = cholesky(fourdvar.B0)
    data_dir = out / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    for t in range(cfg.trials):
        inputs = bench.trial_inputs(cfg, t, p, B_factor)
        if t == 0:
            inputs.truth.to_csv(data_dir / "truth.csv")
        np.savetxt(data_dir / f"observations_trial{t}.csv", inputs.observations, delimiter=",",
                   header="y_x,y_z", comments="", fmt="%.17g")
        np.savetxt(data_dir / f"background_trial{t}.csv", inputs.xb0[None], delimiter=",",
                   header="x,y,z", comments="", fmt="%.17g")
        done = set()
        for m in cfg.surrogates:
            canon = training.canonical_method(m)
            if canon not in done:
                bench.training_data(cfg, t, m, p).to_npz(data_dir / f"training_{canon}_trial{t}.npz")
                done.add(canon)
        gen = bench.generalization_set(cfg, t, p, B_factor)
        np.savez(data_dir / f"generalization_trial{t}.npz", X=gen.X, Y=gen.Y, MT=gen.MT)


def cmd_train(cfg, out: Path) -> None:
    report = _existing(out, cfg)
    for t in range(cfg.trials):
        res = report.trial(t)
        models = bench.train_stage(cfg, t, res)
        bench.save_surrogates(out, t, models, cfg.seed)
    bench.write_report(report, out)


def _models(cfg, out: Path, t: int) -> dict:
    models = bench.load_surrogates(out, t, cfg.surrogates)
    missing = [m for m in cfg.surrogates if m not in models]
    if missing:
        raise SystemExit(f"no trained parameters for {missing} (trial {t}) in {out}; run `train` first")
    return models


def cmd_assimilate(cfg, out: Path) -> None:
    report = _existing(out, cfg)
    for t in range(cfg.trials):
        bench.assimilate_stage(cfg, t, _models(cfg, out, t), report.trial(t), keep_analyses=True)
    bench.write_report(report, out)


def cmd_generalize(cfg, out: Path) -> None:
    report = _existing(out, cfg)
    for t in range(cfg.trials):
        bench.generalize_stage(cfg, t, _models(cfg, out, t), report.trial(t))
    bench.write_report(report, out)


def cmd_report(cfg, out: Path) -> None:
    if not (out / "run_meta.json").exists():
        raise SystemExit(f"{out} holds no run (run_meta.json missing)")
    # aggregate under the configuration the raw files were produced with
    bench.write_report(bench.read_raw(out), out)


def cmd_full(cfg, out: Path) -> None:
    bench.run_experiment(cfg)


COMMANDS = {"gen-data": cmd_gen_data, "train": cmd_train, "assimilate": cmd_assimilate,
            "generalize": cmd_generalize, "report": cmd_report, "full": cmd_full}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        cfg = load_config(args)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"adjsurrogate: bad configuration: {exc}", file=sys.stderr)
        return 2
    out = Path(cfg.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    COMMANDS[args.command](cfg, out)
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
