"""Command-line front end: config files, scenario presets, CSV output.

Config file format::

    [users]
    # fraction loss_prob
    0.5 0.25
    0.5 0.5
    [slots]
    1.0
    [access]
    3.05
    0.0
    [run]
    epsilon = -0.3
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .degree import expected_slot_degree
from .density_evolution import DEFAULT_MAX_ITER, DEFAULT_TOL, evolve
from .model import AccessMatrix, ConfigError, SystemConfig, validate
from .optimizer import AlphaGrid, InfeasibleTargetError, SearchError, optimize_alpha_at_eps, \
    optimize_with_resolution_floor, sweep_eps
from .simulator import num_slots_for, run_trials

# Class parameters of the three example scenarios; the operating points are the
# throughput optima found by `sweep` with the default grid.
PRESETS: dict[str, SystemConfig] = {
    "scenario1": SystemConfig.build([1.0], [0.0], [[3.053]], 0.05, name="scenario1"),
    "scenario2": SystemConfig.build([1.0], [0.375], [[3.104]], 0.7, name="scenario2"),
    "scenario3": SystemConfig.build([0.5, 0.5], [0.25, 0.5], [[3.053], [0.0]], -0.3, name="scenario3"),
}

MODES = ("evolve", "sweep", "simulate", "optimize", "dump")


class ConfigParseError(ConfigError):
    pass


def _num(token: str, where: str) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ConfigParseError(f"{where}: expected a number, got {token!r}") from None
    if math.isnan(v):
        raise ConfigParseError(f"{where}: NaN not allowed")
    return v


def parse_config(text: str, source: str = "<config>") -> SystemConfig:
    sections: dict[str, list[tuple[int, str]]] = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigParseError(f"{source}:{lineno}: unterminated section header {line!r}")
            current = line[1:-1].strip().lower()
            if current not in ("users", "slots", "access", "run"):
                raise ConfigParseError(f"{source}:{lineno}: unknown section [{current}]")
            if current in sections:
                raise ConfigParseError(f"{source}:{lineno}: duplicate section [{current}]")
            sections[current] = []
            continue
        if current is None:
            raise ConfigParseError(f"{source}:{lineno}: content before first section")
        sections[current].append((lineno, line))

    for name in ("users", "slots", "access"):
        if not sections.get(name):
            raise ConfigParseError(f"{source}: missing or empty section [{name}]")

    users = []
    for lineno, line in sections["users"]:
        parts = line.split()
        if len(parts) != 2:
            raise ConfigParseError(f"{source}:{lineno}: [users] row needs 'fraction loss_prob'")
        users.append((_num(parts[0], f"{source}:{lineno}: users.fraction"),
                      _num(parts[1], f"{source}:{lineno}: users.loss_prob")))
    slots = []
    for lineno, line in sections["slots"]:
        parts = line.split()
        if len(parts) != 1:
            raise ConfigParseError(f"{source}:{lineno}: [slots] row needs a single fraction")
        slots.append(_num(parts[0], f"{source}:{lineno}: slots.fraction"))
    access = []
    for lineno, line in sections["access"]:
        row = [_num(t, f"{source}:{lineno}: access") for t in line.split()]
        if len(row) != len(slots):
            raise ConfigParseError(f"{source}:{lineno}: access row has {len(row)} entries, expected {len(slots)}")
        access.append(row)
    if len(access) != len(users):
        raise ConfigParseError(f"{source}: access has {len(access)} rows, expected {len(users)}")

    epsilon = None
    for lineno, line in sections.get("run", []):
        key, sep, value = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigParseError(f"{source}:{lineno}: [run] entries are 'key = value'")
        if key != "epsilon":
            raise ConfigParseError(f"{source}:{lineno}: unknown key {key!r} in [run]")
        epsilon = _num(value.strip(), f"{source}:{lineno}: run.epsilon")
    if epsilon is None:
        raise ConfigParseError(f"{source}: missing key 'epsilon' in [run]")

    cfg = SystemConfig.build([u[0] for u in users], [u[1] for u in users], access, epsilon,
                             slot_fractions=slots)
    validate(cfg)
    return cfg


def dump_config(config: SystemConfig) -> str:
    out = ["[users]", "# fraction loss_prob"]
    out += [f"{u.fraction!r} {u.loss_prob!r}" for u in config.user_classes]
    out += ["[slots]"] + [f"{s.fraction!r}" for s in config.slot_classes]
    out += ["[access]"] + [" ".join(repr(v) for v in row) for row in config.access.alpha]
    out += ["[run]", f"epsilon = {config.epsilon!r}", ""]
    return "\n".join(out)


def load_config(source: str) -> SystemConfig:
    """Preset name or path to a config file."""
    if source in PRESETS:
        return PRESETS[source]
    path = Path(source)
    if not path.is_file():
        raise ConfigError(f"{source!r} is neither a preset ({', '.join(PRESETS)}) nor a file")
    return parse_config(path.read_text(), str(path))


def fmt(x: float) -> str:
    return f"{x:.6g}"


def _alpha_headers(config: SystemConfig) -> list[str]:
    return [f"alpha_{l + 1}_{j + 1}" for l in range(config.num_user_classes) for j in range(config.num_slot_classes)]


def _beta_headers(config: SystemConfig) -> list[str]:
    return [f"beta_{j + 1}" for j in range(config.num_slot_classes)]


def _row(m_over_n, t, pr, beta, alpha: AccessMatrix) -> list[str]:
    return [fmt(m_over_n), fmt(t), fmt(pr)] + [fmt(b) for b in beta] + [fmt(a) for row in alpha.alpha for a in row]


def _summary(out, config, t, pr, per_class, extra=()):
    out.write(f"{'M/N':>22} {fmt(config.slots_per_user)}\n")
    out.write(f"{'throughput T':>22} {fmt(t)}\n")
    out.write(f"{'resolution P_R':>22} {fmt(pr)}\n")
    for l, p in enumerate(per_class):
        out.write(f"{f'P_R{l + 1}':>22} {fmt(p)}\n")
    for j in range(config.num_slot_classes):
        out.write(f"{f'beta_{j + 1}':>22} {fmt(expected_slot_degree(config, j))}\n")
    for k, v in extra:
        out.write(f"{k:>22} {v}\n")


@dataclass
class RunSpec:
    mode: str
    config: SystemConfig
    out: Path | None = None
    n: int = 10_000
    trials: int = 100
    seed: int = 1
    eps_range: tuple[float, float] = (-0.5, 1.5)
    eps_steps: int = 41
    grid: AlphaGrid = AlphaGrid()
    target_pr: float | None = None


def _write_csv(path: Path | None, header: list[str], rows: list[list[str]]) -> None:
    if path is None:
        return
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    path.write_text(buf.getvalue())


def run(spec: RunSpec, stdout=None) -> int:
    out = stdout or sys.stdout
    cfg = spec.config
    validate(cfg)

    if spec.mode == "dump":
        text = dump_config(cfg)
        if spec.out:
            spec.out.write_text(text)
        else:
            out.write(text)
        return 0

    if spec.mode == "evolve":
        res = evolve(cfg, spec.grid.max_iter, spec.grid.tol)
        header = ["iteration"] + [f"y_{l + 1}" for l in range(cfg.num_user_classes)]
        rows = [[str(i)] + [fmt(t[i]) for t in res.trajectories] for i in range(len(res.trajectories[0]))]
        _write_csv(spec.out, header, rows)
        _summary(out, cfg, res.throughput, res.aggregate_resolution, res.resolution_probs,
                 [("iterations", res.iterations_used), ("converged", res.converged)])
        return 0

    if spec.mode == "simulate":
        stats = run_trials(cfg, spec.n, spec.trials, spec.seed)
        L = cfg.num_user_classes
        header = ["trial", "seed", "resolved_fraction", "throughput", "peel_rounds"] + [f"resolved_{l + 1}" for l in range(L)]
        rows = [[str(t), str(s), fmt(o.resolved_fraction), fmt(o.throughput), str(o.peel_rounds)]
                + [fmt(v) for v in o.per_class_resolved_fraction]
                for t, (s, o) in enumerate(zip(stats.seeds, stats.outcomes))]
        _write_csv(spec.out, header, rows)
        _summary(out, cfg, stats.mean_throughput, stats.mean_resolved, stats.mean_per_class, [
            ("N / M", f"{spec.n} / {num_slots_for(cfg, spec.n)}"),
            ("trials", stats.trials),
            ("stderr P_R", fmt(stats.se_resolved)),
            ("stderr T", fmt(stats.se_throughput)),
        ])
        return 0

    header = ["m_over_n", "throughput", "resolution_prob"] + _beta_headers(cfg) + _alpha_headers(cfg)

    if spec.mode == "optimize":
        if spec.target_pr is None:
            c = optimize_alpha_at_eps(cfg, cfg.epsilon, spec.grid)
        else:
            c = optimize_with_resolution_floor(cfg, cfg.epsilon, spec.target_pr, spec.grid)
        _write_csv(spec.out, header, [_row(1 + c.epsilon, c.throughput, c.resolution, c.beta, c.alpha)])
        _summary(out, cfg.with_access(c.alpha), c.throughput, c.resolution, c.per_class_resolution,
                 [(f"alpha_{l + 1}_{j + 1}", fmt(c.alpha[l, j]))
                  for l in range(cfg.num_user_classes) for j in range(cfg.num_slot_classes)])
        return 0

    if spec.mode == "sweep":
        rep = sweep_eps(cfg, spec.eps_range, spec.eps_steps, spec.grid)
        rows = [_row(s.m_over_n, s.throughput, s.resolution, s.beta, s.alpha) for s in rep.sweep_samples]
        _write_csv(spec.out, header, rows)
        best = cfg.with_access(rep.best_alpha).with_epsilon(rep.best_epsilon)
        _summary(out, best, rep.best_throughput, rep.best_resolution, rep.per_class_resolution,
                 [(f"alpha_{l + 1}_{j + 1}", fmt(rep.best_alpha[l, j]))
                  for l in range(cfg.num_user_classes) for j in range(cfg.num_slot_classes)])
        return 0

    raise ValueError(f"unknown mode {spec.mode!r}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="csaloha",
        description="Asymptotic analysis, optimization and simulation of coded slotted ALOHA "
                    "with per-class packet loss.",
    )
    p.add_argument("--mode", choices=MODES, default="evolve")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="path to a config file")
    src.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--n", type=int, default=10_000, help="number of users (simulate)")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--eps-min", type=float, default=-0.5)
    p.add_argument("--eps-max", type=float, default=1.5)
    p.add_argument("--eps-steps", type=int, default=41)
    p.add_argument("--alpha-max", type=float, default=8.0)
    p.add_argument("--alpha-step", type=float, default=0.1)
    p.add_argument("--target-pr", type=float, default=None)
    p.add_argument("--out", type=Path, default=None, help="CSV output path")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.preset or args.config)
        spec = RunSpec(
            mode=args.mode,
            config=cfg,
            out=args.out,
            n=args.n,
            trials=args.trials,
            seed=args.seed,
            eps_range=(args.eps_min, args.eps_max),
            eps_steps=args.eps_steps,
            grid=AlphaGrid(alpha_max=args.alpha_max, step=args.alpha_step, max_iter=args.max_iter, tol=args.tol),
            target_pr=args.target_pr,
        )
        return run(spec)
    except InfeasibleTargetError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, SearchError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
