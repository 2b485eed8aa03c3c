"""``fogplace`` command-line interface.

Every subcommand writes its data files plus ``config.resolved.json`` and a
``manifest.json`` into ``--out``. Data files depend only on the config and
seed; wall-clock figures live in the manifest (and ``timing.json`` for the
scalability study) so repeated runs produce byte-identical data.

Exit codes: 0 success, 1 config error, 2 infeasible or oversized problem,
3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .baselines import NoFeasiblePlacement, NoIspGateway, edge_ward_place, fspp_place
from .config import ConfigError, infra_config, load_config, resolve, sweep_config
from .domain import Placement, validate_placement
from .optimizer import EmptyFront, nsga2_run, select_placement
from .pareto import NORMALIZED_REF, TooLarge, brute_force_pareto, compare_hypervolumes, dominates
from .scenarios import PROFILE_REPETITIONS, random_instance, run_sweep, scalability_study

log = logging.getLogger("fogplace")

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE, EXIT_INTERNAL = 0, 1, 2, 3
NORMALIZATION = f"min-max over the union of compared fronts; reference point {list(NORMALIZED_REF)}"


class Infeasible(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def fmt(v: float) -> str:
    """Round-trippable 17-significant-digit float text."""
    return format(float(v), ".17g")


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def objectives_json(placement: Placement, v) -> dict:
    return {
        "placement": placement.label(),
        "assign": list(placement.assign),
        "time_s": v.time,
        "energy_j": v.energy,
        "cost_cents": v.cost,
        "feasible": v.feasible,
    }


# -- subcommands -------------------------------------------------------------


def cmd_optimize(args, cfg, out: Path) -> list[str]:
    opt = cfg["optimizer"]
    if args.pop is not None:
        opt["population"] = args.pop
    if args.evals is not None:
        opt["max_evaluations"] = args.evals
    if args.strategy is not None:
        cfg["selection"]["strategy"] = args.strategy.replace("-", "_")
    sc = resolve(cfg, args.seed)
    front, stats = nsga2_run(sc.app, sc.infra, sc.params, trace=True)
    if not front.entries or not front.entries[0][1].feasible:
        p = front.entries[0][0] if front.entries else Placement(tuple([0] * sc.app.size))
        report = validate_placement(sc.app, sc.infra, p, sc.params.capacity_mode)
        raise Infeasible(f"no feasible placement found; closest violates {report.first_violation()}")
    write_csv(
        out / "front.csv",
        ["placement", "time_s", "energy_j", "cost_cents"],
        ((p.label(), v.time, v.energy, v.cost) for p, v in front),
    )
    placement, v = select_placement(front, sc.strategy)
    write_json(out / "selected.json", {**objectives_json(placement, v), "strategy": cfg["selection"]["strategy"]})
    write_csv(out / "hv_trace.csv", ["evaluations", "hypervolume"], ((e, float(h)) for e, h in stats.hv_trace))
    print(f"front: {len(front)} placements; selected {placement.label()} "
          f"T={v.time:.6g} s E={v.energy:.6g} J C={v.cost:.6g} c")
    return ["front.csv", "selected.json", "hv_trace.csv"]


def cmd_baseline(args, cfg, out: Path) -> list[str]:
    sc = resolve(cfg, args.seed)
    lit, mode = sc.params.latency_in_transfer, sc.params.capacity_mode
    if args.method == "fspp":
        res = fspp_place(sc.app, sc.infra, latency_in_transfer=lit, capacity_mode=mode)
    else:
        res = edge_ward_place(sc.app, sc.infra, latency_in_transfer=lit, capacity_mode=mode)
    write_json(out / "baseline.json", {**objectives_json(res.placement, res.objectives), "method": res.method, "optimal": res.optimal})
    print(f"{res.method}: {res.placement.label()} T={res.objectives.time:.6g} s "
          f"E={res.objectives.energy:.6g} J C={res.objectives.cost:.6g} c")
    return ["baseline.json"]


def cmd_sweep(args, cfg, out: Path) -> list[str]:
    if args.variable is not None:
        cfg["sweep"]["variable"] = args.variable.replace("-", "_")
    if args.repetitions is not None:
        cfg["sweep"]["repetitions"] = args.repetitions
    app = cfg["application"]
    if "case_study" not in app:
        raise ConfigError("sweeps need a case_study application")
    sw = sweep_config(cfg, args.seed, PROFILE_REPETITIONS[args.profile])
    infra_section = cfg["infrastructure"]
    if not infra_section.get("generated"):
        raise ConfigError("sweeps need a generated infrastructure")
    table = run_sweep(app["case_study"], infra_config(infra_section, args.seed), sw, workers=args.threads)
    write_csv(
        out / "sweep.csv",
        ["method", "level", "mean_time_s", "mean_energy_j", "mean_cost_cents",
         "std_time_s", "std_energy_j", "std_cost_cents", "repetitions", "failures"],
        ((r.method, float(r.level), r.mean_time, r.mean_energy, r.mean_cost,
          r.std_time, r.std_energy, r.std_cost, r.repetitions, r.failures) for r in table.rows),
    )
    files = ["sweep.csv"]
    if args.raw or cfg["sweep"].get("raw"):
        write_csv(
            out / "raw.csv",
            ["method", "level", "repetition", "placement", "time_s", "energy_j", "cost_cents", "error"],
            ((r["method"], float(r["level"]), r["repetition"], r["placement"], r["time"], r["energy"], r["cost"], r["error"])
             for r in table.raw),
        )
        files.append("raw.csv")
    for r in table.rows:
        print(f"{r.method:5s} level={r.level:g} T={r.mean_time:.6g} E={r.mean_energy:.6g} C={r.mean_cost:.6g} "
              f"(n={r.repetitions}, failed={r.failures})")
    return files


def cmd_scalability(args, cfg, out: Path) -> list[str]:
    s, app = cfg["scalability"], cfg["application"]
    if "case_study" not in app or not cfg["infrastructure"].get("generated"):
        raise ConfigError("the scalability study needs a case_study application and a generated infrastructure")
    kw = {k: tuple(s[k]) for k in ("components", "evaluations") if k in s}
    res = scalability_study(
        kind=app["case_study"],
        infra_cfg=infra_config(cfg["infrastructure"], args.seed),
        population=cfg["optimizer"].get("population", 100),
        seed=args.seed,
        instr=app.get("instr", 2000.0),
        data=app.get("data", 4.0),
        base_components=app.get("components"),
        **kw,
    )
    header = ["components", "evaluations", "hypervolume", "front_size"]
    write_csv(out / "evaluations.csv", header,
              ((p.components, p.evaluations, p.hypervolume, p.front_size) for p in res.evaluations_curve))
    write_csv(out / "components.csv", header,
              ((p.components, p.evaluations, p.hypervolume, p.front_size) for p in res.components_curve))
    write_json(out / "timing.json", {
        "evaluations": [[p.evaluations, p.wall_time] for p in res.evaluations_curve],
        "components": [[p.components, p.wall_time] for p in res.components_curve],
    })
    for p in res.evaluations_curve + res.components_curve:
        print(f"x={p.components} evals={p.evaluations} hv={p.hypervolume:.4f} time={p.wall_time:.3f}s")
    return ["evaluations.csv", "components.csv"]


def cmd_oracle(args, cfg, out: Path) -> list[str]:
    if args.random is not None:
        app, infra = random_instance(args.seed, *args.random)
        sc = resolve(cfg, args.seed)
        params = sc.params
    else:
        sc = resolve(cfg, args.seed)
        app, infra, params = sc.app, sc.infra, sc.params
    cap = cfg["oracle"].get("cap", 10**6)
    if infra.size ** app.size > cap:
        raise TooLarge(f"{infra.size}^{app.size} placements exceed the cap of {cap}")
    exact = brute_force_pareto(app, infra, cap, params.latency_in_transfer, params.capacity_mode)
    front, _ = nsga2_run(app, infra, params, trace=False)
    if not exact.entries:
        raise Infeasible("no feasible placement exists")
    hv_exact, hv_found = compare_hypervolumes([exact.points, front.points])
    ratio = hv_found / hv_exact if hv_exact > 0 else float(hv_found == hv_exact)
    dominated = sum(any(dominates(e, v) for _, e in exact) for _, v in front)
    write_json(out / "oracle.json", {
        "x": app.size, "y": infra.size,
        "exact_front_size": len(exact), "found_front_size": len(front),
        "hv_exact": hv_exact, "hv_found": hv_found, "hv_ratio": ratio,
        "dominated_entries": dominated,
        "infeasible_entries": sum(not v.feasible for _, v in front),
    })
    print(f"hv ratio {ratio:.6f} (found {len(front)} of {len(exact)} exact points; {dominated} dominated)")
    return ["oracle.json"]


COMMANDS = {
    "optimize": cmd_optimize,
    "baseline": cmd_baseline,
    "sweep": cmd_sweep,
    "scalability": cmd_scalability,
    "oracle": cmd_oracle,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config file (defaults apply when omitted)")
    common.add_argument("--seed", type=int, default=0, help="master seed (unsigned 64-bit)")
    common.add_argument("--out", type=Path, default=Path("fogplace-out"), help="output directory")
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1, help="worker processes for sweeps")
    common.add_argument("--profile", choices=sorted(PROFILE_REPETITIONS),
                        default=os.environ.get("FOGPLACE_PROFILE", "ci"),
                        help="repetition profile (env FOGPLACE_PROFILE)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="fogplace", description="Multi-objective fog placement of chained applications.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("optimize", parents=[common], help="NSGA-II front and selected placement")
    p.add_argument("--pop", type=int)
    p.add_argument("--evals", type=int)
    p.add_argument("--strategy", choices=["low-latency", "weighted-ideal", "low_latency", "weighted_ideal"])

    p = sub.add_parser("baseline", parents=[common], help="FSPP or Edge-ward placement")
    p.add_argument("--method", choices=["fspp", "edge-ward"], required=True)

    p = sub.add_parser("sweep", parents=[common], help="averaged method comparison over a parameter sweep")
    p.add_argument("--variable", choices=["data-size", "cpu-workload", "components", "evaluations",
                                          "data_size", "cpu_workload"])
    p.add_argument("--repetitions", type=int)
    p.add_argument("--raw", action="store_true", help="also write per-repetition results")

    sub.add_parser("scalability", parents=[common], help="hypervolume and runtime vs budget and chain length")

    p = sub.add_parser("oracle", parents=[common], help="compare NSGA-II with exhaustive enumeration")
    p.add_argument("--random", nargs=2, type=int, metavar=("X", "Y"),
                   help="use a random instance with X components and Y devices")
    return parser


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if args.profile not in PROFILE_REPETITIONS:
        print(f"fogplace: error: unknown profile {args.profile!r}", file=sys.stderr)
        return EXIT_CONFIG
    if not 0 <= args.seed < 2**64 or args.threads < 1:
        print("fogplace: error: --seed must be an unsigned 64-bit integer and --threads >= 1", file=sys.stderr)
        return EXIT_CONFIG

    start = time.perf_counter()
    try:
        cfg = load_config(args.config)
        args.out.mkdir(parents=True, exist_ok=True)
        files = COMMANDS[args.command](args, cfg, args.out)
    except ConfigError as exc:
        print(f"fogplace: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (Infeasible, NoFeasiblePlacement, NoIspGateway, EmptyFront, TooLarge) as exc:
        print(f"fogplace: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except Exception as exc:  # noqa: BLE001 - last-resort reporting
        log.debug("internal error", exc_info=True)
        print(f"fogplace: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL

    write_json(args.out / "config.resolved.json", cfg)
    files.append("config.resolved.json")
    write_json(args.out / "manifest.json", {
        "command": args.command,
        "argv": argv,
        "config_path": str(args.config) if args.config else None,
        "seed": args.seed,
        "profile": args.profile,
        "engine_version": __version__,
        "normalization": NORMALIZATION,
        "wall_time_s": time.perf_counter() - start,
        "outputs": files,
        "rerun": ["fogplace", args.command, "--config", str(args.out / "config.resolved.json"), "--seed", str(args.seed),
                  "--profile", args.profile] + _extra_flags(args),
    })
    return EXIT_OK


def _extra_flags(args) -> list[str]:
    flags: list[str] = []
    for name in ("method", "variable", "repetitions", "pop", "evals", "strategy"):
        value = getattr(args, name, None)
        if value is not None:
            flags += [f"--{name}", str(value)]
    if getattr(args, "raw", False):
        flags.append("--raw")
    if getattr(args, "random", None):
        flags += ["--random", *map(str, args.random)]
    return flags


if __name__ == "__main__":
    sys.exit(main())
