"""Command-line harness: ``hpcli <command> [options]``.

Commands
    gen          draw Rayleigh channels and write a dataset file
    train        learn a PGA / PCMP schedule or ADMM parameters
    convergence  mean rate per iteration, learned-K vs fixed-step runs
    sweep-snr    mean final rate over an SNR grid (plus a fully-digital bound)
    eval-robust  mean worst-case rate over sampled error sets, per epsilon
    admm-run     rate trajectory of one ADMM run

Every option may also come from a JSON file passed with ``--config`` (keys
are the long option names with dashes or underscores). Command-line values
win over the file, which wins over built-in defaults. ``HPCLI_SEED`` replaces
the seed from the file or defaults (an explicit ``--seed`` still wins).

SNR convention: unit total transmit power, ``sigma^2 = 10**(-SNR_dB/10)``.

Exit codes: 0 success, 2 configuration error, 3 I/O or file-format error,
4 numerical failure.
"""

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .admm import AdmmParams, admm_run
from .channel import (SystemDims, gen_rayleigh, load_dataset, normalize, renormalize,
                      sample_error_set, save_dataset, snr_db_to_noise_var)
from .exceptions import FormatError, NumericalError
from .learn import (TrainConfig, load_schedule,
                    save_schedule, train_admm, train_pcmp, train_pga)
from .objective import AnalogConstraint, rate_kernel
from .optim import (ErrorRadius, PcmpSchedule, PgaSchedule, fully_digital_rates,
                    pcmp_run_batch, pga_run_batch)

EXIT_CONFIG, EXIT_IO, EXIT_NUMERIC = 2, 3, 4

DEFAULTS = {
    "seed": 0,
    "snr_db": None,
    "constraint": "unconstrained",
    "start": 0,
    "count": None,
    "threads": 1,
    # gen
    "b": 8, "n": 6, "l": None, "m": 12, "out": None,
    # train
    "kind": "pga", "k": 5, "i_max": 2, "epochs": 10, "batch_size": 10,
    "learning_rate": 1e-3, "optimizer": "adam", "grad_mode": "central_fd", "fd_step": 1e-5,
    "init_step": 0.05, "init_error_step": 0.01, "train_count": None, "loss_csv": None,
    "epsilon": 0.0, "n_e": 5, "radius_mode": "frobenius",
    "lam": 0.5, "mu": 1.0, "mu_a": 0.05, "mu_d": 0.05, "mu_y": 1e-4, "iterations": 100,
    # evaluation
    "schedule": None, "fixed_step": 0.05, "fixed_error_step": 0.01, "fixed_iters": 100,
    "snr_grid": [-10.0, -5.0, 0.0, 5.0, 10.0], "epsilons": [0.005, 0.05, 0.5],
    "digital_iters": 300, "digital_step": 0.5, "params": None, "index": 0,
}


class ConfigError(Exception):
    pass


# --------------------------------------------------------------------------- argument handling

def _floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _common(p):
    p.add_argument("--config", help="JSON file with option values")
    p.add_argument("--seed", type=int, help="master seed (env HPCLI_SEED overrides the file)")
    p.add_argument("--threads", type=int, help="worker threads for evaluation")


def _eval_common(p):
    p.add_argument("--data", help="dataset file")
    p.add_argument("--l", type=int, help="RF chains (not stored in the dataset file)")
    p.add_argument("--snr-db", type=float, help="re-normalize channels at this SNR")
    p.add_argument("--constraint", choices=[c.value for c in AnalogConstraint])
    p.add_argument("--start", type=int, help="first realization to use")
    p.add_argument("--count", type=int, help="number of realizations (default: rest)")
    p.add_argument("--out", help="output file")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="hpcli", description="Hybrid precoding optimizers and learned step schedules.",
        epilog="SNR convention: sigma^2 = 10**(-SNR_dB/10) at unit transmit power.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a Rayleigh dataset")
    _common(p)
    for name in ("b", "n", "l", "m", "count"):
        p.add_argument(f"--{name}", type=int)
    p.add_argument("--snr-db", type=float, help="noise variance stored with the data")
    p.add_argument("--out")

    p = sub.add_parser("train", help="learn a step schedule")
    _common(p)
    _eval_common(p)
    p.add_argument("--kind", choices=["pga", "pcmp", "admm"])
    p.add_argument("--k", type=int, help="unrolled iterations (I_max for admm)")
    p.add_argument("--i-max", type=int, help="PCMP inner iterations")
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", type=int)
    p.add_argument("--learning-rate", type=float)
    p.add_argument("--optimizer", choices=["adam", "sgd"])
    p.add_argument("--grad-mode", choices=["central_fd", "unrolled"])
    p.add_argument("--fd-step", type=float)
    p.add_argument("--init-step", type=float, help="constant initial step")
    p.add_argument("--init-error-step", type=float, help="constant initial PCMP error step")
    p.add_argument("--train-count", type=int, help="use only the first realizations")
    p.add_argument("--loss-csv", help="epoch,mean_loss output")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-e", type=int)
    p.add_argument("--radius-mode", choices=[r.value for r in ErrorRadius])
    for name in ("lam", "mu", "mu-a", "mu-d", "mu-y"):
        p.add_argument(f"--{name}", type=float, help="initial ADMM parameter")

    p = sub.add_parser("convergence", help="mean rate versus iteration")
    _common(p)
    _eval_common(p)
    p.add_argument("--schedule", help="learned schedule JSON")
    p.add_argument("--fixed-step", type=float)
    p.add_argument("--fixed-error-step", type=float)
    p.add_argument("--fixed-iters", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--n-e", type=int)
    p.add_argument("--radius-mode", choices=[r.value for r in ErrorRadius])

    p = sub.add_parser("sweep-snr", help="mean final rate over an SNR grid")
    _common(p)
    _eval_common(p)
    p.add_argument("--schedule")
    p.add_argument("--snr-grid", type=_floats, help="comma-separated dB values (use --snr-grid=-10,0 for negatives)")
    p.add_argument("--fixed-step", type=float)
    p.add_argument("--fixed-iters", type=int)
    p.add_argument("--digital-iters", type=int, help="iterations of the fully-digital bound")
    p.add_argument("--digital-step", type=float, help="step of the fully-digital bound")

    p = sub.add_parser("eval-robust", help="mean worst-case rate per epsilon")
    _common(p)
    _eval_common(p)
    p.add_argument("--schedule", help="learned PCMP schedule JSON")
    p.add_argument("--epsilons", type=_floats, help="comma-separated error bounds")
    p.add_argument("--n-e", type=int)
    p.add_argument("--fixed-step", type=float)
    p.add_argument("--fixed-error-step", type=float)
    p.add_argument("--fixed-iters", type=int)
    p.add_argument("--radius-mode", choices=[r.value for r in ErrorRadius])

    p = sub.add_parser("admm-run", help="rate trajectory of one ADMM run")
    _common(p)
    _eval_common(p)
    p.add_argument("--params", help="ADMM parameter JSON (from train --kind admm)")
    p.add_argument("--index", type=int, help="realization index")
    p.add_argument("--iterations", type=int, help="I_max for constant parameters")
    for name in ("lam", "mu", "mu-a", "mu-d", "mu-y"):
        p.add_argument(f"--{name}", type=float)
    return parser


def resolve(args, environ=None):
    """Merge defaults, the JSON config file, HPCLI_SEED and explicit flags."""
    environ = os.environ if environ is None else environ
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            with open(args.config) as fh:
                data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
        for key, value in data.items():
            key = key.replace("-", "_")
            if key not in cfg:
                raise ConfigError(f"{args.config}: unknown option {key!r}")
            cfg[key] = value
    if "HPCLI_SEED" in environ:
        try:
            cfg["seed"] = int(environ["HPCLI_SEED"])
        except ValueError:
            raise ConfigError(f"HPCLI_SEED must be an integer, got {environ['HPCLI_SEED']!r}")
    for key, value in vars(args).items():
        if value is not None and key not in ("command", "config"):
            cfg[key] = value
    for key in ("snr_grid", "epsilons"):
        if isinstance(cfg[key], str):
            cfg[key] = _floats(cfg[key])
    if cfg["threads"] < 1:
        raise ConfigError("threads must be at least 1")
    return cfg


# --------------------------------------------------------------------------- helpers

def _require(cfg, *keys):
    for key in keys:
        if cfg.get(key) is None:
            raise ConfigError(f"missing required option --{key.replace('_', '-')}")


def _load(cfg, snr_db=None):
    """Load the dataset, pick the requested realizations and normalize."""
    _require(cfg, "data", "l")
    ds = load_dataset(cfg["data"], L=cfg["l"])
    stop = None if cfg["count"] is None else cfg["start"] + cfg["count"]
    ds = ds[cfg["start"]:stop]
    if len(ds) == 0:
        raise ConfigError("selected realization range is empty")
    snr_db = cfg["snr_db"] if snr_db is None else snr_db
    if snr_db is not None:
        return renormalize(ds, snr_db_to_noise_var(snr_db))
    return ds if ds.normalized else normalize(ds)


def _write_csv(path, header, rows):
    if path is None:
        raise ConfigError("missing required option --out")
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(x) for x in row])


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return x


def _fan_out(fn, h, threads):
    """Apply ``fn`` to chunks of the channel stack; results keep channel order."""
    if threads <= 1 or len(h) < 2:
        return fn(h)
    chunks = np.array_split(h, min(threads, len(h)))
    with ThreadPoolExecutor(max_workers=threads) as pool:
        parts = list(pool.map(fn, chunks))
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate(p) for p in zip(*parts))
    return np.concatenate(parts)


def _fixed_pga(cfg, B):
    return PgaSchedule.constant(cfg["fixed_iters"], B, cfg["fixed_step"])


def _fixed_pcmp(cfg, B, i_max):
    return PcmpSchedule.constant(cfg["fixed_iters"], B, cfg["fixed_step"], i_max,
                                 cfg["fixed_error_step"])


def _load_schedule(cfg, kinds):
    _require(cfg, "schedule")
    sched = load_schedule(cfg["schedule"])
    allowed = {"pga": PgaSchedule, "pcmp": PcmpSchedule}
    if not isinstance(sched, tuple(allowed[k] for k in kinds)):
        raise ConfigError(f"{cfg['schedule']}: expected a {' or '.join(kinds)} schedule")
    return sched


def _pga_rates(h, sched, cfg, L):
    fn = lambda part: pga_run_batch(part, sched, cfg["constraint"], cfg["seed"], L)[0]
    return _fan_out(fn, h, cfg["threads"])


def _pcmp_final(h, sched, cfg, L, epsilon):
    def fn(part):
        rates, wa, wd, _ = pcmp_run_batch(part, sched, epsilon, cfg["constraint"], cfg["seed"],
                                          L, cfg["radius_mode"])
        return rates, wa, wd
    return _fan_out(fn, h, cfg["threads"])


def _min_rates(h, wa, wd, patterns):
    return np.min(rate_kernel(h[:, None] + patterns[None], wa[:, None], wd[:, None]), axis=1)


def _eval_error_set(dims, epsilon, n_e, seed):
    if epsilon <= 0:
        return np.zeros((1, dims.B, dims.N, dims.M), complex)
    es_seed = int(np.random.default_rng([int(seed), 11]).integers(2 ** 31))
    return sample_error_set(dims, epsilon, n_e, es_seed).patterns


# --------------------------------------------------------------------------- commands

def cmd_gen(cfg):
    _require(cfg, "count", "out")
    noise_var = 1.0 if cfg["snr_db"] is None else snr_db_to_noise_var(cfg["snr_db"])
    L = cfg["m"] if cfg["l"] is None else cfg["l"]
    dims = SystemDims(cfg["b"], cfg["n"], L, cfg["m"], noise_var)
    ds = gen_rayleigh(dims, cfg["count"], cfg["seed"])
    save_dataset(ds, cfg["out"])
    print(f"R={len(ds)} B={dims.B} N={dims.N} M={dims.M} seed={ds.seed}")


def _train_config(cfg):
    return TrainConfig(epochs=cfg["epochs"], batch_size=cfg["batch_size"],
                       learning_rate=cfg["learning_rate"], K=cfg["k"], seed=cfg["seed"],
                       optimizer=cfg["optimizer"], grad_mode=cfg["grad_mode"],
                       fd_step=cfg["fd_step"])


def cmd_train(cfg):
    _require(cfg, "out")
    ds = _load(cfg)
    if cfg["train_count"] is not None:
        ds = ds[:cfg["train_count"]]
    tcfg = _train_config(cfg)
    B, kind = ds.dims.B, cfg["kind"]
    if kind == "pga":
        init = PgaSchedule.constant(cfg["k"], B, cfg["init_step"])
        res = train_pga(ds, tcfg, cfg["constraint"], init)
    elif kind == "pcmp":
        init = PcmpSchedule.constant(cfg["k"], B, cfg["init_step"], cfg["i_max"],
                                     cfg["init_error_step"])
        res = train_pcmp(ds, tcfg, cfg["epsilon"], cfg["n_e"], cfg["constraint"], init,
                         cfg["radius_mode"])
    else:
        init = AdmmParams.constant(cfg["k"], cfg["lam"], cfg["mu"], cfg["mu_a"],
                                   cfg["mu_d"], cfg["mu_y"])
        res = train_admm(ds, tcfg, init)
    save_schedule(cfg["out"], res.schedule, tcfg, cfg["seed"])
    if cfg["loss_csv"]:
        _write_csv(cfg["loss_csv"], ["epoch", "mean_loss"],
                   [(e + 1, loss) for e, loss in enumerate(res.epoch_losses)])
    if res.epoch_losses:
        print(f"trained {kind}: first epoch {res.epoch_losses[0]:.6f}, "
              f"last epoch {res.epoch_losses[-1]:.6f}")


def cmd_convergence(cfg):
    ds = _load(cfg)
    sched = _load_schedule(cfg, ("pga", "pcmp"))
    h, L, B = ds.channels, ds.dims.L, ds.dims.B
    rows = []
    if isinstance(sched, PgaSchedule):
        header = ["iteration", "method", "mean_rate"]
        for name, s in ((f"learned-{sched.K}", sched),
                        (f"fixed-step-{cfg['fixed_iters']}", _fixed_pga(cfg, B))):
            rates = _pga_rates(h, s, cfg, L).mean(axis=0)
            rows += [(k, name, r) for k, r in enumerate(rates)]
    else:
        header = ["iteration", "method", "mean_rate", "min_rate"]
        pats = _eval_error_set(ds.dims, cfg["epsilon"], cfg["n_e"], cfg["seed"])
        for name, s in ((f"learned-{sched.K}", sched),
                        (f"fixed-step-{cfg['fixed_iters']}", _fixed_pcmp(cfg, B, sched.i_max))):
            rates, wa, wd, _ = pcmp_run_batch(h, s, cfg["epsilon"], cfg["constraint"],
                                              cfg["seed"], L, cfg["radius_mode"], keep=True)
            for k in range(rates.shape[1]):
                worst = _min_rates(h, wa[:, k], wd[:, k], pats)
                rows.append((k, name, rates[:, k].mean(), worst.mean()))
    _write_csv(cfg["out"], header, rows)


def cmd_sweep_snr(cfg):
    sched = _load_schedule(cfg, ("pga",))
    rows = []
    for snr in cfg["snr_grid"]:
        if not np.isfinite(snr):
            raise ConfigError(f"SNR values must be finite, got {snr}")
        ds = _load(cfg, snr_db=snr)
        h, L, B = ds.channels, ds.dims.L, ds.dims.B
        rows.append((snr, f"learned-{sched.K}", _pga_rates(h, sched, cfg, L)[:, -1].mean()))
        fixed = _fixed_pga(cfg, B)
        rows.append((snr, f"fixed-step-{fixed.K}", _pga_rates(h, fixed, cfg, L)[:, -1].mean()))
        digital = _fan_out(lambda part: fully_digital_rates(part, cfg["digital_iters"],
                                                            cfg["digital_step"], cfg["seed"]),
                           h, cfg["threads"])
        rows.append((snr, "fully-digital", digital.mean()))
    _write_csv(cfg["out"], ["snr_db", "method", "mean_rate"], rows)


def cmd_eval_robust(cfg):
    ds = _load(cfg)
    sched = _load_schedule(cfg, ("pcmp",))
    h, L, B = ds.channels, ds.dims.L, ds.dims.B
    fixed = _fixed_pcmp(cfg, B, sched.i_max)
    rows = []
    for eps in cfg["epsilons"]:
        if eps < 0:
            raise ConfigError(f"epsilon must be non-negative, got {eps}")
        pats = _eval_error_set(ds.dims, eps, cfg["n_e"], cfg["seed"])
        for name, s in ((f"learned-{sched.K}", sched), (f"fixed-step-{fixed.K}", fixed)):
            _, wa, wd = _pcmp_final(h, s, cfg, L, eps)
            rows.append((eps, name, _min_rates(h, wa, wd, pats).mean()))
    _write_csv(cfg["out"], ["epsilon", "method", "mean_min_rate"], rows)


def cmd_admm_run(cfg):
    ds = _load(cfg)
    if cfg["params"]:
        params = load_schedule(cfg["params"])
        if not isinstance(params, AdmmParams):
            raise ConfigError(f"{cfg['params']}: expected admm parameters")
    else:
        params = AdmmParams.constant(cfg["iterations"], cfg["lam"], cfg["mu"], cfg["mu_a"],
                                     cfg["mu_d"], cfg["mu_y"])
    if not 0 <= cfg["index"] < len(ds):
        raise ConfigError(f"index {cfg['index']} outside 0..{len(ds) - 1}")
    _, rates = admm_run(ds[cfg["index"]], params, cfg["seed"])
    _write_csv(cfg["out"], ["iteration", "rate"], enumerate(rates))


COMMANDS = {
    "gen": cmd_gen,
    "train": cmd_train,
    "convergence": cmd_convergence,
    "sweep-snr": cmd_sweep_snr,
    "eval-robust": cmd_eval_robust,
    "admm-run": cmd_admm_run,
}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        COMMANDS[args.command](cfg)
    except (FormatError, OSError) as exc:
        print(f"hpcli: {exc}", file=sys.stderr)
        return EXIT_IO
    except NumericalError as exc:
        print(f"hpcli: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, TypeError, KeyError) as exc:
        print(f"hpcli: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


if __name__ == "__main__":
    sys.exit(main())
