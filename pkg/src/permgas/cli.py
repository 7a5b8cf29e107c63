"""Batch front door.

Subcommands: regime, gen-env, sample, exact-dist, stats, verify. Options
resolve with precedence CLI > environment variables (PERMGAS_*) > config
file (flat ``key = value`` lines) > defaults. Every artifact embeds the
resolved config digest and seed, and re-running a command with identical
inputs reproduces its output byte for byte.

Exit codes: 0 ok, 2 parameter error, 3 cap exceeded, 4 nontermination,
5 internal invariant breach. The regime subcommand exits 1 when the
uniqueness condition fails, so it can gate scripts.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import hashlib
import json
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import acceptance
from .boxes import parse_box
from .cyclegas import GasConfig
from .diagnostics import cycle_stats
from .environment import Environment, sample_environment
from .errors import ParameterError, PermgasError
from .exactgibbs import BoundarySpec, specification
from .lossnet import LossNetworkSampler
from .potential import potential_from_name
from .regime import evaluate_regime

ENV_PREFIX = "PERMGAS_"


@dataclass
class RunConfig:
    dim: int = 1
    box: str = "0:1"
    rho: float = 0.25
    alpha: float = 1.0
    potential: str = "quadratic"
    boundary: str = "identity"
    seed: int = 1
    n_samples: int = 100
    max_points: int = 9
    max_doublings: int = 10
    jobs: int = 1

    def digest(self) -> str:
        body = ";".join(
            f"{f.name}={getattr(self, f.name)}" for f in dataclasses.fields(self)
        )
        return hashlib.sha256(body.encode()).hexdigest()[:16]

    def resolved_box(self):
        return parse_box(self.box)

    def resolved_potential(self):
        return potential_from_name(self.potential, self.dim)

    def resolved_boundary(self) -> BoundarySpec:
        if self.boundary == "identity":
            return BoundarySpec.identity()
        data = json.loads(Path(self.boundary).read_text())
        return BoundarySpec(gas=GasConfig.from_jsonable(data))


def _read_config_file(path: str) -> dict[str, str]:
    values = {}
    for raw in Path(path).read_text().splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ParameterError(f"bad config line {raw!r}, expected key = value")
        values[key.strip()] = value.strip()
    return values


def _coerce(name: str, value: str):
    field_types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    if name not in field_types:
        raise ParameterError(f"unknown config key {name!r}")
    kind = field_types[name]
    if kind in ("int", int):
        return int(value)
    if kind in ("float", float):
        return float(value)
    return value


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then config file, then PERMGAS_* variables, then flags."""
    values: dict = {}
    if getattr(args, "config", None):
        for k, v in _read_config_file(args.config).items():
            values[k] = _coerce(k, v)
    for f in dataclasses.fields(RunConfig):
        env_key = ENV_PREFIX + f.name.upper()
        if env_key in os.environ:
            values[f.name] = _coerce(f.name, os.environ[env_key])
    for f in dataclasses.fields(RunConfig):
        flag = getattr(args, f.name, None)
        if flag is not None:
            values[f.name] = flag
    return RunConfig(**values)


def _load_env(args, cfg: RunConfig) -> Environment:
    if getattr(args, "env", None):
        return Environment.from_json(Path(args.env).read_text())
    return sample_environment(cfg.dim, cfg.resolved_box(), cfg.rho, cfg.seed)


def _emit(args, text: str) -> None:
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


# -- subcommands ---------------------------------------------------------


def cmd_regime(args) -> int:
    cfg = resolve_config(args)
    report = evaluate_regime(cfg.rho, cfg.alpha, cfg.resolved_potential())
    doc = json.loads(report.to_json())
    doc["config_digest"] = cfg.digest()
    _emit(args, json.dumps(doc))
    return 0 if report.uniqueness_ok else 1


def cmd_gen_env(args) -> int:
    cfg = resolve_config(args)
    env = sample_environment(cfg.dim, cfg.resolved_box(), cfg.rho, cfg.seed)
    doc = json.loads(env.to_json())
    doc["config_digest"] = cfg.digest()
    _emit(args, json.dumps(doc))
    return 0


def _sample_chunk(payload) -> list:
    (env_json, lam, xi_data, alpha, potential, max_points, max_doublings,
     base_seed, indices) = payload
    env = Environment.from_json(env_json)
    xi = BoundarySpec(gas=GasConfig.from_jsonable(xi_data)) if xi_data is not None else None
    sampler = LossNetworkSampler(
        env, lam, xi, alpha, potential_from_name(potential, env.dim),
        max_points=max_points, max_doublings=max_doublings,
    )
    rows = []
    for i in indices:
        rep = sampler.replica_seed(base_seed, i)
        info = sampler.sample_detailed(rep)
        rows.append(
            (
                i,
                {
                    "seed": rep,
                    "T_final": info.t_final,
                    "n_marks": info.n_marks,
                    "sample": info.gas.to_jsonable(),
                },
            )
        )
    return rows


def cmd_sample(args) -> int:
    cfg = resolve_config(args)
    env = _load_env(args, cfg)
    xi = cfg.resolved_boundary()
    lam = cfg.resolved_box()
    xi_data = None if xi.is_identity else xi.gas.to_jsonable()
    payload_base = (
        env.to_json(), lam, xi_data, cfg.alpha, cfg.potential,
        cfg.max_points, cfg.max_doublings, cfg.seed,
    )
    indices = list(range(cfg.n_samples))
    if cfg.jobs > 1 and indices:
        chunks = [indices[k :: cfg.jobs] for k in range(cfg.jobs)]
        rows = []
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for part in pool.map(_sample_chunk, [(*payload_base, c) for c in chunks]):
                rows.extend(part)
        rows.sort(key=lambda r: r[0])
    else:
        rows = _sample_chunk((*payload_base, indices))
    header = json.dumps(
        {"config_digest": cfg.digest(), "seed": cfg.seed, "n_samples": cfg.n_samples}
    )
    lines = [header] + [json.dumps(doc) for _, doc in rows]
    _emit(args, "\n".join(lines) + "\n")
    if getattr(args, "dump_marks", None):
        _dump_marks(args.dump_marks, env, lam, xi, cfg)
    return 0


def _dump_marks(path: str, env, lam, xi, cfg: RunConfig) -> None:
    """Failure-triage dump: the raw marks behind each replica."""
    sampler = LossNetworkSampler(
        env, lam, xi, cfg.alpha, potential_from_name(cfg.potential, env.dim),
        max_points=cfg.max_points, max_doublings=cfg.max_doublings,
    )
    lines = []
    for i in range(cfg.n_samples):
        rep = sampler.replica_seed(cfg.seed, i)
        if sampler.total_rate == 0.0:
            lines.append(json.dumps({"seed": rep, "marks": []}))
            continue
        births, which, lifetimes, t_final, _ = sampler._run((rep & 0xFFFFFFFFFFFFFFFF,))
        marks = [
            {
                "cycle": sampler.gammas[which[j]].to_jsonable(),
                "birth": float(births[j]),
                "lifetime": float(lifetimes[j]),
            }
            for j in range(len(births))
        ]
        lines.append(json.dumps({"seed": rep, "T_final": t_final, "marks": marks}))
    Path(path).write_text("\n".join(lines) + "\n")


def cmd_exact_dist(args) -> int:
    cfg = resolve_config(args)
    env = _load_env(args, cfg)
    table = specification(
        env,
        cfg.resolved_box(),
        cfg.resolved_boundary(),
        cfg.alpha,
        cfg.resolved_potential(),
        max_points=cfg.max_points,
    )
    doc = json.loads(table.to_json())
    doc["config_digest"] = cfg.digest()
    doc["seed"] = cfg.seed
    _emit(args, json.dumps(doc))
    return 0


def cmd_stats(args) -> int:
    cfg = resolve_config(args)
    text = Path(args.input).read_text() if args.input else sys.stdin.read()
    gases = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        doc = json.loads(line)
        if "sample" in doc:
            gases.append(GasConfig.from_jsonable(doc["sample"]))
    stats = cycle_stats(gases)
    doc = json.loads(stats.to_json())
    doc["config_digest"] = cfg.digest()
    _emit(args, json.dumps(doc))
    if getattr(args, "csv", None):
        Path(args.csv).write_text(stats.histogram_csv())
    return 0


def cmd_verify(args) -> int:
    cfg = resolve_config(args)
    results = acceptance.run_all(scale=args.scale, fault=args.inject_fault)
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.criterion} ({r.runtime_s:.1f}s)")
    report = {
        "config_digest": cfg.digest(),
        "scale": args.scale,
        "fault": args.inject_fault,
        "all_passed": all(r.passed for r in results),
        "criteria": [r.to_jsonable() for r in results],
    }
    out = getattr(args, "out", None)
    if out:
        Path(out).write_text(json.dumps(report))
    else:
        print(json.dumps(report))
    return 0


# -- wiring ----------------------------------------------------------------


def _add_config_flags(p: argparse.ArgumentParser, *names: str) -> None:
    p.add_argument("--config", help="flat key = value config file")
    for name in names:
        flag = "--" + name.replace("_", "-")
        kind = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
        typ = int if kind in ("int", int) else float if kind in ("float", float) else str
        p.add_argument(flag, type=typ, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="permgas",
        description="Finite-volume Gibbs distributions over spatial random permutations",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("regime", help="evaluate regime constants and conditions")
    _add_config_flags(p, "dim", "rho", "alpha", "potential")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_regime)

    p = sub.add_parser("gen-env", help="sample a Poisson environment")
    _add_config_flags(p, "dim", "box", "rho", "seed")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_gen_env)

    p = sub.add_parser("sample", help="draw perfect samples as JSON lines")
    _add_config_flags(
        p, "dim", "box", "rho", "alpha", "potential", "boundary",
        "seed", "n_samples", "max_points", "max_doublings", "jobs",
    )
    p.add_argument("--env", help="environment JSON file (otherwise generated)")
    p.add_argument("--out")
    p.add_argument("--dump-marks", help="write the raw mark realizations here")
    p.set_defaults(fn=cmd_sample)

    p = sub.add_parser("exact-dist", help="enumerate the exact distribution")
    _add_config_flags(
        p, "dim", "box", "rho", "alpha", "potential", "boundary", "seed", "max_points"
    )
    p.add_argument("--env", help="environment JSON file (otherwise generated)")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_exact_dist)

    p = sub.add_parser("stats", help="aggregate sample JSON lines")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--input", help="sample JSON-lines file (default stdin)")
    p.add_argument("--csv", help="also write the length histogram as CSV")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_stats)

    p = sub.add_parser("verify", help="run the full verification suite")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--scale", type=float, default=1.0, help="Monte Carlo scale factor")
    p.add_argument("--inject-fault", choices=[acceptance.WEIGHT_FAULT], default=None)
    p.add_argument("--out")
    p.set_defaults(fn=cmd_verify)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except PermgasError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
