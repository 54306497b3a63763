"""Command-line entry point: ``bdris {gen,group,eval,fig1,fig2,fig3}``.

Exit codes: 0 success, 1 at least one sweep point failed, 2 invalid config.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiment as ex
from .channel import CorrelationSpec, sample_realizations, save_training_set, save_training_set_csv
from .errors import InvalidConfigError

log = logging.getLogger("bdris")


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="key = value configuration file")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", type=Path, help="output file (CSV) or directory (fig2)")
    common.add_argument("--realizations", type=int, help="evaluation realizations")
    common.add_argument("--training-size", type=int)
    common.add_argument("--jobs", type=int, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="bdris", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("gen", parents=[common], help="draw a training set and dump it")
    sub.add_parser("group", parents=[common], help="offline grouping search only")
    sub.add_parser("eval", parents=[common], help="full Monte-Carlo pipeline")
    sub.add_parser("fig1", parents=[common], help="single-user power-gain sweep")
    sub.add_parser("fig2", parents=[common], help="optimized grouping maps")
    sub.add_parser("fig3", parents=[common], help="multi-user sum-rate sweep")
    return p


def _config(args, base: ex.ExperimentConfig) -> ex.ExperimentConfig:
    cfg = ex.load_config(args.config, base) if args.config else base
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.realizations is not None:
        overrides["eval_realizations"] = args.realizations
    if args.training_size is not None:
        overrides["training_size"] = args.training_size
    if args.jobs is not None:
        overrides["jobs"] = args.jobs
    if args.out is not None:
        overrides["output"] = str(args.out)
    return replace(cfg, **overrides)


def _emit(text: str, out: Path | None):
    if out is None:
        sys.stdout.write(text)
    else:
        out.write_text(text, encoding="utf-8")


def cmd_gen(args) -> int:
    cfg = _config(args, ex.ExperimentConfig())
    N, rho = cfg.N[0], cfg.rho[0]
    system = cfg.system(N, rho)
    ts = sample_realizations(system, CorrelationSpec.from_config(system), cfg.training_size,
                             ex.derive_seed(cfg.seed, N, rho, ex.TRAIN))
    out = args.out or Path("channels.bin")
    if out.suffix == ".csv":
        save_training_set_csv(ts, out)
    else:
        save_training_set(ts, out)
    print(f"wrote {len(ts)} realizations (N={N}, M={cfg.M}, K={cfg.K}) to {out}")
    return 0


def cmd_group(args) -> int:
    cfg = _config(args, ex.ExperimentConfig())
    lines = []
    for N in cfg.N:
        for rho in cfg.rho:
            for ng, (s, trace) in ex.offline_grouping(cfg, N, rho).items():
                lines.append(f"# N={N} rho={rho} N_G={ng} iterations={trace.iterations} "
                             f"objective={trace.objectives[-1]!r} "
                             f"initial={trace.objectives[0]!r}\n")
                lines.append(f"# partition {s.to_string()}\n")
                lines.append(trace.to_csv())
    _emit("".join(lines), args.out)
    return 0


def _run(cfg: ex.ExperimentConfig) -> int:
    result = ex.run_experiment(cfg)
    if not cfg.output:
        sys.stdout.write(result.to_csv())
    for N, rho, msg in result.failures:
        print(f"error: N={N} rho={rho}: {msg}", file=sys.stderr)
    return result.exit_code


def cmd_eval(args) -> int:
    return _run(_config(args, ex.ExperimentConfig()))


def cmd_fig1(args) -> int:
    return _run(_config(args, ex.fig1_config()))


def cmd_fig3(args) -> int:
    return _run(_config(args, ex.fig3_config()))


def cmd_fig2(args) -> int:
    cfg = _config(args, ex.ExperimentConfig(mode="single-user"))
    maps = ex.fig2_maps(seed=cfg.seed, training_size=cfg.training_size, rho=cfg.rho[0],
                        N_G=cfg.N_G[0])
    out = args.out
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
    summary = ["N_H,N_V,N_G,rho,distance_OG,distance_NG"]
    for m in maps:
        summary.append(f"{m.N_H},{m.N_V},{m.strategy.group_size},{cfg.rho[0]!r},"
                       f"{m.distance_og!r},{m.distance_ng!r}")
        if out is not None:
            (out / f"grouping_{m.N_H}x{m.N_V}.csv").write_text(m.to_csv(), encoding="utf-8")
        else:
            print(f"# {m.N_H}x{m.N_V}")
            print(m.to_csv(), end="")
    text = "\n".join(summary) + "\n"
    if out is not None:
        (out / "distances.csv").write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


COMMANDS = {"gen": cmd_gen, "group": cmd_group, "eval": cmd_eval,
            "fig1": cmd_fig1, "fig2": cmd_fig2, "fig3": cmd_fig3}


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except InvalidConfigError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
