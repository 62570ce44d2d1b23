"""Command line front end.

    starjam power-sweep --config cfg.yaml --trials 20 --out fig2.dat
    starjam k-sweep --set Pmax_dBm=20 --k-values 10 20 30 --out fig3.dat
    starjam modes --powers 0 10 20 30 40 --out fig5.dat
    starjam convergence --power 40 --seed 3 --out fig6.dat
    starjam single --scheme star --set K=8 --set Pmax_dBm=20
    starjam replay fig2.dat.manifest.yaml --out again.dat

Every table command writes ``<out>.manifest.yaml`` next to its output;
``replay`` reruns the recorded command and configuration.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Any, Optional

import yaml

from . import harness
from .channels import generate_channels
from .config import ConfigError, SystemConfig, apply_overrides, config_from_dict
from .optimize import optimize
from .schemes import SCHEME_NAMES

TABLE_COMMANDS = ("power-sweep", "k-sweep", "modes", "convergence")


def load_config(path: Optional[str], overrides: list[str]) -> SystemConfig:
    doc: dict[str, Any] = {}
    if path:
        text = Path(path).read_text()
        try:
            doc = yaml.safe_load(text) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return config_from_dict(apply_overrides(doc, overrides))


def _powered(cfg: SystemConfig, power: Optional[float]) -> SystemConfig:
    return cfg.with_power_dbm(power) if power is not None else cfg


def execute(command: str, cfg: SystemConfig, args: dict[str, Any], out: Optional[Path]) -> str:
    """Run one command; table commands write ``out`` plus a manifest and return a summary line."""
    seed = int(args["seed"])
    workers = int(args.get("workers", 1))
    if command == "single":
        rec = optimize(generate_channels(cfg, seed), _powered(cfg, args.get("power")), args["scheme"])
        text = rec.to_text()
        if out is not None:
            with open(out, "w", newline="\n") as fh:
                fh.write(text)
        return text

    if command == "power-sweep":
        res = harness.run_power_sweep(cfg, args["powers"], args["schemes"], args["trials"], seed, workers)
        seeds = range(seed, seed + args["trials"])
    elif command == "k-sweep":
        res = harness.run_k_sweep(_powered(cfg, args.get("power")), args["k_values"], args["trials"], seed, workers)
        seeds = range(seed, seed + args["trials"])
    elif command == "modes":
        res = harness.mode_histogram(cfg, args["powers"], args["trials"], seed, workers, args["scheme"])
        seeds = range(seed, seed + args["trials"])
    elif command == "convergence":
        res = harness.convergence_trace(cfg, args["power"], seed, args["scheme"])
        seeds = [seed]
    else:
        raise ValueError(f"unknown command {command!r}")
    files = harness.emit_table(res, out)
    manifest = out.with_name(out.name + ".manifest.yaml")
    harness.write_manifest(manifest, command, cfg, args, seeds, files)
    return "wrote " + " ".join(str(f) for f in files + [manifest])


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="starjam", description=__doc__.split("\n\n")[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, scheme=True, trials=True):
        sp.add_argument("--config", help="YAML config file")
        sp.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="config override, dotted keys for sections (repeatable)")
        sp.add_argument("--seed", type=int, help="seed base (default: config seed)")
        sp.add_argument("--out", type=Path, help="output file")
        sp.add_argument("--workers", type=int, default=1, help="parallel trial processes")
        if trials:
            sp.add_argument("--trials", type=int, default=10)
        if scheme:
            sp.add_argument("--scheme", default="star-jam", choices=SCHEME_NAMES)

    sp = sub.add_parser("power-sweep", help="sum rate versus transmit power per scheme")
    common(sp, scheme=False)
    sp.add_argument("--powers", type=float, nargs="+", default=[0, 10, 20, 30, 40], help="dBm")
    sp.add_argument("--schemes", nargs="+", default=list(SCHEME_NAMES), choices=SCHEME_NAMES)

    sp = sub.add_parser("k-sweep", help="star-jam sum rate versus element count")
    common(sp, scheme=False)
    sp.add_argument("--k-values", type=int, nargs="+", default=[20, 30, 40, 50, 60])
    sp.add_argument("--power", type=float, help="dBm (default: config Pmax)")

    sp = sub.add_parser("modes", help="mean reflect/transmit/jam counts versus power")
    common(sp)
    sp.add_argument("--powers", type=float, nargs="+", default=[0, 10, 20, 30, 40], help="dBm")

    sp = sub.add_parser("convergence", help="per-iteration active/passive/overall rates")
    common(sp, trials=False)
    sp.add_argument("--power", type=float, default=40.0, help="dBm")

    sp = sub.add_parser("single", help="optimize one channel draw and print the solution record")
    common(sp, trials=False)
    sp.add_argument("--power", type=float, help="dBm (default: config Pmax)")

    sp = sub.add_parser("replay", help="rerun the command recorded in a manifest")
    sp.add_argument("manifest", type=Path)
    sp.add_argument("--out", type=Path, required=True)
    return p


def main(argv: Optional[list[str]] = None) -> int:
    ns = _parser().parse_args(argv)
    try:
        if ns.command == "replay":
            doc = yaml.safe_load(ns.manifest.read_text())
            cfg = config_from_dict(doc["config"])
            print(execute(doc["command"], cfg, doc["arguments"], ns.out))
            return 0
        cfg = load_config(ns.config, ns.set)
        args = {k: v for k, v in vars(ns).items() if k not in ("command", "config", "set", "out")}
        args["seed"] = cfg.seed if ns.seed is None else ns.seed
        if ns.command in TABLE_COMMANDS and ns.out is None:
            raise SystemExit(f"{ns.command}: --out is required")
        print(execute(ns.command, cfg, args, ns.out), end="" if ns.command == "single" else "\n")
    except (ConfigError, OSError, ValueError) as exc:
        print(f"starjam: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
