"""ldlsim 命令行入口：strong / sample / reduce / ldl / treedec / lc / learn-demo / selftest / bench。"""
import argparse
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np
import yaml

from config import Config
from errors import LdlSimError, UnsupportedGateError
from gf2core import BitVector
from settings_manager import SettingsManager

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    subcommand: str
    inputs: List[Path] = field(default_factory=list)
    seed: int = Config.DEFAULT_SEED
    count: int = 1
    strategy: str = "auto"
    render: str = "exact"
    t_cap: int = Config.T_CAP
    heuristic: str = "min-fill"
    dense_cutoff: int = Config.DENSE_CUTOFF
    xs_path: Optional[Path] = None
    output: Optional[Path] = None
    td_path: Optional[Path] = None
    allow_t: bool = True
    calibrate: bool = False
    alpha_rule: str = "exact"
    quick: bool = False
    diameter: bool = False
    delta: float = 0.01
    trials: int = 1
    random_n: Optional[int] = None
    suites: List[str] = field(default_factory=list)


# ===================== 输出 =====================
def format_record(x: BitVector, amp, render: str) -> str:
    line = f"{x.to_str()} {amp.render()}"
    if render == "float":
        z = amp.to_complex()
        line += f" {z.real:.12g} {z.imag:.12g}"
    return line


def _emit(lines: List[str], output: Optional[Path]) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if output is None:
        sys.stdout.write(text)
    else:
        output.parent.mkdir(parents=True, exist_ok=True)
        with open(output, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote {len(lines)} records to {output}")


def read_bitstrings(path: Path) -> List[BitVector]:
    with open(path, "r", encoding="utf-8") as f:
        return [BitVector.from_str(line.strip()) for line in f if line.strip() and not line.startswith("#")]


# ===================== 子命令 =====================
def cmd_strong(config: RunConfig) -> int:
    from sim import prepare, strong_eval
    from treedec import read_td
    from zxfront import all_outputs, clifford_t_strong, read_circuit, reduce_to_pgs

    c = read_circuit(config.inputs[0])
    xs = read_bitstrings(config.xs_path) if config.xs_path else all_outputs(c.n)
    if not c.is_clifford():
        if not config.allow_t:
            raise UnsupportedGateError(f"circuit has {c.t_count} T gates and --no-t was given")
        amps = clifford_t_strong(c, xs, t_cap=config.t_cap)
    else:
        td = read_td(config.td_path) if config.td_path else None
        inst = reduce_to_pgs(c, td, calibrate=config.calibrate)
        ctx = prepare(inst.A, inst.td, config.alpha_rule, config.dense_cutoff)
        amps = [inst.scalar * amp for amp in strong_eval(ctx, [inst.assemble(x) for x in xs])]
    _emit([format_record(x, amp, config.render) for x, amp in zip(xs, amps)], config.output)
    return 0


def cmd_sample(config: RunConfig) -> int:
    from zxfront import read_circuit, sample_circuit

    c = read_circuit(config.inputs[0])
    samples = sample_circuit(c, config.count, config.seed, config.strategy)
    _emit([x.to_str() for x in samples], config.output)
    return 0


def cmd_reduce(config: RunConfig) -> int:
    from pgs import format_pgs
    from zxfront import read_circuit, reduce_to_pgs

    c = read_circuit(config.inputs[0])
    inst = reduce_to_pgs(c, calibrate=config.calibrate)
    if config.output is None:
        sys.stdout.write(format_pgs(inst.A))
        sys.stdout.write(yaml.safe_dump(inst.sidecar(), sort_keys=False))
        return 0
    config.output.parent.mkdir(parents=True, exist_ok=True)
    with open(config.output, "w", encoding="utf-8") as f:
        f.write(format_pgs(inst.A))
    sidecar = config.output.with_suffix(".yaml")
    with open(sidecar, "w", encoding="utf-8") as f:
        yaml.safe_dump(inst.sidecar(), f, sort_keys=False)
    logger.info(f"Wrote PGS instance to {config.output} and sidecar to {sidecar}")
    return 0


def cmd_ldl(config: RunConfig) -> int:
    from pgs import read_pgs
    from sim import prepare
    from treedec import read_td

    a = read_pgs(config.inputs[0])
    td = read_td(config.td_path) if config.td_path else None
    ctx = prepare(a, td, dense_cutoff=config.dense_cutoff)
    f = ctx.factorization
    report = {
        "n": a.n,
        "rank": ctx.k,
        "perm": [int(v) for v in ctx.perm],
        "blocks": [[kind, int(pos)] for kind, pos in f.blocks],
        "v": ctx.v.astype(int).tolist(),
        "w": ctx.w.astype(int).tolist(),
        "alpha": ctx.alpha.render(),
        "path": "dense" if f.td is None else "tree",
    }
    _emit([yaml.safe_dump(report, sort_keys=False).rstrip()], config.output)
    return 0


def cmd_treedec(config: RunConfig) -> int:
    from treedec import heuristic_decompose, read_graph, validate, write_td

    g = read_graph(config.inputs[0])
    td = heuristic_decompose(g, config.heuristic)
    width = validate(td, g)
    if config.output is not None:
        write_td(td, config.output, g.number_of_nodes())
    print(f"width {width} bags {len(td.bags)}")
    return 0


def cmd_lc(config: RunConfig) -> int:
    from analysis import lc_equivalent, orbit_diameter
    from treedec import read_graph

    g1 = read_graph(config.inputs[0])
    lines = []
    if len(config.inputs) > 1:
        g2 = read_graph(config.inputs[1])
        equivalent, wit = lc_equivalent(g1, g2)
        lines.append(f"equivalent {str(equivalent).lower()}")
        if wit is not None:
            lines.append(yaml.safe_dump({"perm_a": wit.perm_a, "perm_b": wit.perm_b, "u": wit.u, "v": wit.v,
                                         "k": wit.k}, sort_keys=False, default_flow_style=True).rstrip())
    if len(config.inputs) == 1 or config.diameter:
        lines.append(f"diameter {orbit_diameter(g1)}")
    _emit(lines, config.output)
    return 0


def cmd_learn_demo(config: RunConfig) -> int:
    from analysis import learn_graph_state
    from selftest import random_graph
    from treedec import read_graph

    lines = []
    failures = 0
    for trial in range(config.trials):
        if config.inputs:
            g = read_graph(config.inputs[0])
        else:
            g = random_graph(config.random_n or 6, np.random.default_rng([config.seed, trial]))
        out = learn_graph_state(g, config.delta, seed=config.seed + trial)
        failures += not out.success
        lines.append(f"trial {trial} n {g.number_of_nodes()} rank {out.rank} true_rank {out.true_rank} "
                     f"measurements {out.measurements} gates {len(out.circuit)} success {str(out.success).lower()}")
    lines.append(f"failures {failures}/{config.trials}")
    _emit(lines, config.output)
    return 0


def cmd_selftest(config: RunConfig) -> int:
    from selftest import run_selftest

    results = run_selftest(config.quick, config.seed, config.alpha_rule, config.suites or None)
    for res in results:
        print(f"{res.name}: {res.passed}/{res.total} {'ok' if res.ok else 'FAILED'}")
    return 0 if all(res.ok for res in results) else 1


def cmd_bench(config: RunConfig) -> int:
    from selftest import run_bench

    rows = run_bench(config.seed, config.quick)
    if not rows:
        return 0
    keys = list(rows[0])
    lines = ["\t".join(keys)]
    for row in rows:
        lines.append("\t".join(f"{row[k]:.6f}" if isinstance(row[k], float) else str(row[k]) for k in keys))
    _emit(lines, config.output)
    return 0


COMMANDS = {
    "strong": cmd_strong, "sample": cmd_sample, "reduce": cmd_reduce, "ldl": cmd_ldl, "treedec": cmd_treedec,
    "lc": cmd_lc, "learn-demo": cmd_learn_demo, "selftest": cmd_selftest, "bench": cmd_bench,
}


# ===================== 参数解析 =====================
def build_parser(defaults: dict) -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ldlsim", description="Exact Clifford and Clifford+T simulation "
                                                                 "via GF(2) LDL of phased graph states")
    parser.add_argument("--verbose", action="store_true", help="log INFO and DEBUG messages to the console")
    parser.add_argument("--seed", type=int, default=defaults["seed"], help="seed for every random stream")
    parser.add_argument("--output", type=Path, help="write records here instead of stdout")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("strong", help="exact amplitudes <x|U|0^n>")
    p.add_argument("circuit", type=Path)
    p.add_argument("--xs", type=Path, help="file of output bitstrings, one per line (default: all 2^n)")
    p.add_argument("--td", type=Path, help="PACE .td decomposition of the reduced instance")
    p.add_argument("--float", action="store_true", help="append float real and imaginary parts")
    p.add_argument("--no-t", action="store_true", help="refuse circuits with T gates")
    p.add_argument("--t-cap", type=int, default=defaults["t_cap"])
    p.add_argument("--calibrate", action="store_true", help="rescale the diagram scalar from a dense reference")
    p.add_argument("--alpha-rule", choices=("exact", "literal"), default="exact")

    p = sub.add_parser("sample", help="seeded measurement samples of U|0^n>")
    p.add_argument("circuit", type=Path)
    p.add_argument("--count", type=int, default=1)
    p.add_argument("--strategy", choices=("auto", "direct", "basis"), default=defaults["strategy"])

    p = sub.add_parser("reduce", help="write the phased graph state instance of a Clifford circuit")
    p.add_argument("circuit", type=Path)
    p.add_argument("--calibrate", action="store_true")

    p = sub.add_parser("ldl", help="LDL factorization summary of a pgs file")
    p.add_argument("pgs", type=Path)
    p.add_argument("--td", type=Path)

    p = sub.add_parser("treedec", help="heuristic tree decomposition of an edge-list graph")
    p.add_argument("graph", type=Path)
    p.add_argument("--heuristic", choices=("min-degree", "min-fill"), default=defaults["heuristic"])

    p = sub.add_parser("lc", help="LC equivalence of two graphs, or the orbit diameter of one")
    p.add_argument("graphs", type=Path, nargs="+")
    p.add_argument("--diameter", action="store_true", help="also report the orbit diameter of the first graph")

    p = sub.add_parser("learn-demo", help="simulate the low-rank graph state learning protocol")
    p.add_argument("graph", type=Path, nargs="?")
    p.add_argument("--random", type=int, metavar="N", help="random graphs on N vertices")
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--trials", type=int, default=1)

    p = sub.add_parser("selftest", help="cross-oracle acceptance suites")
    p.add_argument("--quick", action="store_true")
    p.add_argument("--alpha-rule", choices=("exact", "literal"), default="exact",
                   help="'literal' injects the wrong scalar rule; the amplitude suites must then fail")
    p.add_argument("--suite", action="append", default=[], help="run only the named suite (repeatable)")

    p = sub.add_parser("bench", help="timing grid for prepare / strong / sample with a tableau column")
    p.add_argument("--quick", action="store_true")
    return parser


def to_run_config(args: argparse.Namespace, defaults: dict) -> RunConfig:
    inputs = []
    for name in ("circuit", "pgs", "graph"):
        if getattr(args, name, None) is not None:
            inputs.append(getattr(args, name))
    inputs.extend(getattr(args, "graphs", None) or [])
    float_flag = getattr(args, "float", False)
    return RunConfig(
        subcommand=args.subcommand,
        inputs=inputs,
        seed=args.seed,
        count=getattr(args, "count", 1),
        strategy=getattr(args, "strategy", defaults["strategy"]),
        render="float" if float_flag else defaults["render"],
        t_cap=getattr(args, "t_cap", defaults["t_cap"]),
        heuristic=getattr(args, "heuristic", defaults["heuristic"]),
        dense_cutoff=int(defaults["dense_cutoff"]),
        xs_path=getattr(args, "xs", None),
        output=args.output,
        td_path=getattr(args, "td", None),
        allow_t=not getattr(args, "no_t", False),
        calibrate=getattr(args, "calibrate", False),
        alpha_rule=getattr(args, "alpha_rule", "exact"),
        quick=getattr(args, "quick", False),
        diameter=getattr(args, "diameter", False),
        delta=getattr(args, "delta", 0.01),
        trials=getattr(args, "trials", 1),
        random_n=getattr(args, "random", None),
        suites=getattr(args, "suite", []),
    )


def _console_level(verbose: bool) -> None:
    for handler in logging.getLogger().handlers:
        if isinstance(handler, logging.StreamHandler) and not isinstance(handler, logging.FileHandler):
            handler.setLevel(logging.DEBUG if verbose else logging.WARNING)


def main(argv: Optional[List[str]] = None) -> int:
    defaults = SettingsManager().as_run_defaults()
    args = build_parser(defaults).parse_args(argv)
    _console_level(args.verbose)
    config = to_run_config(args, defaults)
    try:
        return COMMANDS[config.subcommand](config)
    except LdlSimError as e:
        logger.error(f"{config.subcommand} failed: {e}", exc_info=True)
        return 1


if __name__ == "__main__":
    sys.exit(main())
