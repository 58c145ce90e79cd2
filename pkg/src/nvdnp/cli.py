"""Command-line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from nvdnp import __version__
from nvdnp import engine, theory
from nvdnp.config import Config, ConfigError, load_config
from nvdnp.presets import DESK_COARSEN, DESK_REALIZATIONS, FIGURES, SCALES, buildup_presets, sweep_presets
from nvdnp.units import TWO_PI

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

RUN_COLUMNS = ("t_us", "sz_mean", "iz_mean", "sz_sem", "iz_sem")
SWEEP_COLUMNS = ("axis1_value", "axis2_value", "sz_mean", "iz_mean", "sz_sem", "iz_sem")
PREDICT_COLUMNS = ("k", "kind", "omega_sl_mhz", "omega_n_mhz", "decoupling_margin")


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.9g}"


def render_csv(cfg: Config, command: str, columns, rows) -> str:
    buf = io.StringIO()
    buf.write(f"# generated_by: nvdnp {__version__}\n")
    buf.write(f"# command: {command}\n")
    for line in cfg.to_yaml().splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _write(path: Path, text: str) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    return path


# -- commands -----------------------------------------------------------------


def run_rows(cfg: Config):
    traj = engine.run_monte_carlo(cfg.run_config())
    return zip(traj.times, traj.sz_mean, traj.iz_mean, traj.sz_sem, traj.iz_sem)


def sweep_rows(cfg: Config, threads: int = 1):
    axis1, axis2 = cfg.axes()
    res = engine.sweep_2d(cfg.run_config("final_only"), axis1, axis2, threads=threads)
    rows = []
    for i, v1 in enumerate(cfg.sweep.axis1.values):
        for j, v2 in enumerate(cfg.sweep.axis2.values):
            rows.append((v1, v2, res.sz_mean[i, j], res.iz_mean[i, j], res.sz_sem[i, j], res.iz_sem[i, j]))
    return rows


def buildup_rows(cfg: Config):
    rc = cfg.run_config("per_pulse_unit")
    traj = engine.buildup_curve(rc, cfg.sequence.n_cycles)
    return zip(traj.times, traj.sz_mean, traj.iz_mean, traj.sz_sem, traj.iz_sem)


def predict_rows(cfg: Config):
    params = cfg.spin_params()
    omega_f = math.pi / cfg.sequence.tau_us
    noise_std = math.sqrt(sum(s.delta_noise**2 for s in cfg.noise_specs()))
    rows = []
    for r in theory.predict_resonances(omega_f, params, cfg.predict.k_max):
        margin = theory.decoupling_margin(params, r.k, r.omega_sl, omega_f, noise_std)
        rows.append((r.k, r.kind, r.omega_sl / TWO_PI, theory.nuclear_freq(params) / TWO_PI, margin))
    return rows


def _apply_overrides(cfg: Config, args) -> Config:
    if getattr(args, "seed", None) is not None:
        cfg.seed = args.seed
    if getattr(args, "realizations", None) is not None and cfg.noise is not None:
        cfg.noise.realizations = args.realizations
    return cfg


def _out_dir(cfg: Config, args) -> Path:
    return Path(args.out) if args.out is not None else Path(cfg.output.path)


def cmd_run(args) -> list[Path]:
    cfg = _apply_overrides(load_config(args.config), args)
    return [_write(_out_dir(cfg, args) / "run.csv", render_csv(cfg, "run", RUN_COLUMNS, run_rows(cfg)))]


def cmd_sweep(args) -> list[Path]:
    cfg = _apply_overrides(load_config(args.config), args)
    if cfg.sweep is None:
        raise ConfigError("sweep command needs a sweep section")
    rows = sweep_rows(cfg, args.threads)
    return [_write(_out_dir(cfg, args) / "sweep.csv", render_csv(cfg, "sweep", SWEEP_COLUMNS, rows))]


def cmd_buildup(args) -> list[Path]:
    cfg = _apply_overrides(load_config(args.config), args)
    return [_write(_out_dir(cfg, args) / "buildup.csv", render_csv(cfg, "buildup", RUN_COLUMNS, buildup_rows(cfg)))]


def cmd_predict(args) -> list[Path]:
    cfg = load_config(args.config)
    return [_write(_out_dir(cfg, args) / "resonances.csv", render_csv(cfg, "predict", PREDICT_COLUMNS, predict_rows(cfg)))]


def cmd_reproduce(args) -> list[Path]:
    out = Path(args.out) if args.out is not None else Path(".")
    written = []
    if args.figure == "fig5":
        for name, cfg in buildup_presets(args.scale).items():
            cfg = _apply_overrides(cfg, args)
            written.append(_write(out / f"{name}.csv", render_csv(cfg, "buildup", RUN_COLUMNS, buildup_rows(cfg))))
        return written
    for name, cfg in sweep_presets(args.figure, args.scale).items():
        cfg = _apply_overrides(cfg, args)
        rows = sweep_rows(cfg, args.threads)
        written.append(_write(out / f"{name}.csv", render_csv(cfg, "sweep", SWEEP_COLUMNS, rows)))
    return written


# -- entry point --------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="nvdnp",
        description="Simulate NOVEL / refocused-NOVEL nuclear polarization with an NV center.",
        epilog="Exit codes: 0 success, 2 configuration error, 3 numerical failure.",
    )
    p.add_argument("--version", action="version", version=f"nvdnp {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config=True):
        if config:
            sp.add_argument("--config", required=True, help="YAML config, or a CSV previously written by nvdnp")
        sp.add_argument("--out", default=None, help="output directory (default: output.path of the config)")
        sp.add_argument("--seed", type=int, default=None, help="override the master seed (unsigned 64-bit)")
        sp.add_argument("--realizations", type=int, default=None, help="override the number of noise realizations")
        sp.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")

    for name, fn, help_ in (
        ("run", cmd_run, "time series of <S_z>, <I_z> for one sequence -> run.csv"),
        ("sweep", cmd_sweep, "2-D parameter sweep -> sweep.csv"),
        ("buildup", cmd_buildup, "nuclear polarization after each repeated cycle -> buildup.csv"),
        ("predict", cmd_predict, "resonance conditions and decoupling margins -> resonances.csv"),
    ):
        sp = sub.add_parser(name, help=help_)
        common(sp)
        sp.set_defaults(func=fn)

    sp = sub.add_parser(
        "reproduce",
        help="run a built-in figure preset",
        description=(
            f"Desk scale keeps every {DESK_COARSEN}th grid value per axis and uses "
            f"{DESK_REALIZATIONS} noise realizations."
        ),
    )
    sp.add_argument("figure", choices=FIGURES)
    sp.add_argument("--scale", choices=SCALES, default="full")
    common(sp, config=False)
    sp.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.seed is not None and not 0 <= args.seed < 2**64:
        print("config error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.realizations is not None and args.realizations < 1:
        print("config error: --realizations must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        for path in args.func(args):
            print(path)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except engine.NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
