"""Command-line entry point: enumeration, flows, geodesics, simulation, validation, figures."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from . import io as cio

DEFAULT_SEED = 20240601
MANIFEST = "run.meta"


class UsageError(ValueError):
    pass


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


class Run:
    """Collects inputs and outputs of one invocation and writes ``run.meta``."""

    def __init__(self, args: argparse.Namespace, argv: list[str]):
        self.args = args
        self.argv = argv
        self.inputs: dict[str, str] = {}
        self.outputs: list[Path] = []
        self.out_dir = Path(args.out) if getattr(args, "out", None) else None
        if self.out_dir is not None:
            self.out_dir.mkdir(parents=True, exist_ok=True)

    def machine(self, spec: str):
        path = Path(spec) if Path(spec).exists() else cio.shipped_machine_dir() / f"{spec}.machine"
        m = cio.resolve_machine(spec)
        self.inputs[spec] = cio.file_digest(path)
        return m

    def path(self, name: str) -> Path | None:
        return None if self.out_dir is None else self.out_dir / name

    def track(self, *paths):
        self.outputs.extend(Path(p) for p in paths if p is not None)

    def write_manifest(self):
        if self.out_dir is None:
            return None
        params = {k: v for k, v in sorted(vars(self.args).items()) if k not in ("func", "out")}
        items = {
            "tool": "causalgeom",
            "version": __version__,
            "subcommand": self.args.command,
            "argv": json.dumps(_strip_out(self.argv)),
            "seed": getattr(self.args, "seed", DEFAULT_SEED),
        }
        items.update({f"param.{k}": json.dumps(v) for k, v in params.items()})
        items.update({f"input.{k}": v for k, v in sorted(self.inputs.items())})
        for p in sorted(set(self.outputs)):
            items[f"output.{p.relative_to(self.out_dir).as_posix()}"] = cio.file_digest(p)
        return cio.write_meta(self.out_dir / MANIFEST, items)


def _strip_out(argv: list[str]) -> list[str]:
    out, skip = [], False
    for a in argv:
        if skip:
            skip = False
            continue
        if a == "--out":
            skip = True
            continue
        if a.startswith("--out="):
            continue
        out.append(a)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_enumerate(args, run: Run) -> int:
    from .machine import count_dfa_types, enumerate_dfa_types, is_strongly_connected

    total = count_dfa_types(args.states, args.alphabet)
    types = enumerate_dfa_types(args.states, args.alphabet, cap=args.cap)
    top = [d for d in types if d.is_top_dimensional]
    sc = [d for d in types if is_strongly_connected(d)]
    print(f"total = {total}")
    print(f"top_dimensional = {len(top)}")
    print(f"strongly_connected = {len(sc)}")
    if run.out_dir is not None:
        rows = [[d.code(), d.dimension, int(d.is_top_dimensional), int(is_strongly_connected(d))] for d in types]
        run.track(cio.write_csv(run.path("types.csv"),
                                ["code", "dimension", "top_dimensional", "strongly_connected"], rows))
    return 0


def cmd_figure(args, run: Run) -> int:
    from .figures import run_figure, write_figure

    if run.out_dir is None:
        raise UsageError("figure needs --out")
    res = run_figure(args.name, args.grid)
    run.track(*write_figure(res, run.out_dir))
    print(f"{args.name}: {len(res.rows)} starts, {res.failures} geodesic failures, "
          f"min excess {res.min_excess:.3e}, Lyapunov decrease {'yes' if res.lyapunov_ok else 'no'}")
    return 0


SUITE_DEFAULTS = {
    "geometry": {"machine": "one-state-ternary"},
    "ldp": {"machine": "ldp-2121", "target": "ldp-2121-target", "L": [50, 100, 200]},
    "clt": {"machine": "type-2121", "L": [10**4], "samples": 10**5, "L_ref": 10**3},
    "trajectory": {"machine": "fig2-start", "target": "one-state-ternary", "L": [10**4], "mc_runs": 10**4,
                   "L_ref": 10**3},
}


def cmd_validate(args, run: Run) -> int:
    from . import validate as v

    d = SUITE_DEFAULTS[args.suite]
    machine = run.machine(args.machine or d["machine"])
    L = args.L or d.get("L")
    L_ref = d.get("L_ref") if args.L_ref is None else (args.L_ref or None)
    if args.suite == "geometry":
        rep = v.geometry_suite(machine, seed=args.seed)
    elif args.suite == "ldp":
        target = run.machine(args.target or d["target"])
        rep = v.ldp_suite(machine, target, L, cap=args.cap)
    elif args.suite == "clt":
        rep = v.clt_suite(machine, L[-1], args.samples or d["samples"], args.seed, L_ref)
    else:
        target = run.machine(args.target or d["target"])
        rep = v.trajectory_suite(machine, target, L[-1], args.mc_runs or d["mc_runs"], args.N, args.beta,
                                 args.seed, L_ref)
    for line in rep.lines():
        print(line)
    print(f"{args.suite}: {'PASS' if rep.passed else 'FAIL'}")
    if run.out_dir is not None:
        for name, (header, rows) in rep.tables.items():
            run.track(cio.write_csv(run.path(name), header, rows))
        run.track(cio.write_meta(run.path("report.meta"),
                                 {"suite": args.suite, "passed": int(rep.passed),
                                  **{f"check.{i}": c.line() for i, c in enumerate(rep.checks)}}))
    return 0 if rep.passed else 1


def cmd_flow(args, run: Run) -> int:
    from .dynamics import integrate_flow, make_field, relent_potential

    q0 = run.machine(args.machine)
    q_inf = run.machine(args.target)
    phi = relent_potential(q_inf)
    fld = make_field(args.field, q0.dfa, phi, q_inf=q_inf, N=args.N, beta=args.beta)
    flow = integrate_flow(fld, q0, args.t_end, args.dt)
    print(f"termination = {flow.termination}, t = {flow.times[-1]:.6g}, samples = {len(flow.times)}")
    if run.out_dir is not None:
        run.track(*cio.write_flow_curve(run.path("flow.csv"), flow))
    return 0


def cmd_geodesic(args, run: Run) -> int:
    from .geometry import geodesic_bvp

    q0 = run.machine(args.machine)
    q1 = run.machine(args.target)
    res = geodesic_bvp(q0, q1, steps=args.steps)
    print(f"energy = {res.energy:.12g}, length = {(2 * res.energy) ** 0.5:.12g}, residual = {res.residual:.3e}")
    if run.out_dir is not None:
        p = cio.write_curve_csv(run.path("geodesic.csv"), res.curve)
        m = cio.write_meta(run.path("geodesic.meta"), {"energy": res.energy, "residual": res.residual,
                                                       "iterations": res.iterations, "seed": res.seed,
                                                       "steps": args.steps})
        run.track(p, m)
    return 0


def cmd_simulate(args, run: Run) -> int:
    from .dynamics import relent_potential
    from .evolution import GwfConfig, expectation_trajectory, run_gwf_chain

    q0 = run.machine(args.machine)
    q_inf = run.machine(args.target)
    L = (args.L or [1000])[-1]
    cfg = GwfConfig(L=L, N=args.N, phi=relent_potential(q_inf), generations=args.generations, beta=args.beta,
                    seed=args.seed, mc_runs=args.mc_runs or 1000, degenerate_policy=args.policy)
    if args.mode == "chain":
        rec = run_gwf_chain(q0, cfg)
        print(f"generations = {len(rec) - 1}, final fitness = {rec.fitness[-1]:.6g}")
        if run.out_dir is not None:
            run.track(cio.write_chain_record(run.path("chain.csv"), rec))
    else:
        flow = expectation_trajectory(q0, cfg)
        print(f"generations = {flow.stats['generations']}, termination = {flow.termination}")
        if run.out_dir is not None:
            run.track(*cio.write_flow_curve(run.path("expectation.csv"), flow))
    return 0


def cmd_replay(args, run: Run) -> int:
    meta = cio.read_meta(args.manifest)
    argv = json.loads(meta["argv"])
    if argv and argv[0] == "replay":
        raise UsageError("cannot replay a replay")
    out = Path(args.out) if args.out else Path(args.manifest).resolve().parent
    code = main(argv + ["--out", str(out)])
    fresh = cio.read_meta(out / MANIFEST)
    old = {k: v for k, v in meta.items() if k.startswith("output.")}
    new = {k: v for k, v in fresh.items() if k.startswith("output.")}
    same = old == new and meta.get("version") == fresh.get("version")
    print(f"replay outputs {'identical' if same else 'DIFFER'}")
    return code if same else 1


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(float(t)) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("lengths must be positive")
    return vals


def _common(p: argparse.ArgumentParser, out: bool = True):
    p.add_argument("--seed", type=int, default=DEFAULT_SEED, help=f"RNG seed (default {DEFAULT_SEED})")
    if out:
        p.add_argument("--out", help="output directory (a run.meta manifest is written there)")


def build_parser() -> argparse.ArgumentParser:
    from .machine import DEFAULT_CAP

    p = argparse.ArgumentParser(prog="causalgeom", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("enumerate", help="count DFA-types")
    s.add_argument("--states", type=int, default=2)
    s.add_argument("--alphabet", type=int, default=2)
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    _common(s)
    s.set_defaults(func=cmd_enumerate)

    s = sub.add_parser("figure", help="figure datasets: trajectories, geodesics, excess field")
    s.add_argument("name", help="fig2, fig4:<type> (2121, 2221, 1221, 2211) or fig5")
    s.add_argument("--grid", type=int, default=9)
    _common(s)
    s.set_defaults(func=cmd_figure)

    s = sub.add_parser("validate", help="run a validation suite")
    s.add_argument("suite", choices=("geometry", "ldp", "clt", "trajectory"))
    s.add_argument("--machine", help="machine file or shipped machine name")
    s.add_argument("--target", help="target machine (ldp, trajectory)")
    s.add_argument("--L", type=_int_list, help="sequence length; comma list for ldp")
    s.add_argument("--L-ref", dest="L_ref", type=int, help="smaller L for the convergence trend (0 disables)")
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--beta", type=float)
    s.add_argument("--mc-runs", dest="mc_runs", type=int)
    s.add_argument("--samples", type=int, help="CLT sample count")
    s.add_argument("--cap", type=int, default=DEFAULT_CAP)
    _common(s)
    s.set_defaults(func=cmd_validate)

    s = sub.add_parser("flow", help="integrate a flow toward a target")
    s.add_argument("--machine", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--field", choices=("gwf", "relent", "replicator"), default="gwf")
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--beta", type=float)
    s.add_argument("--t-end", dest="t_end", type=float, default=10.0)
    s.add_argument("--dt", type=float, default=0.01)
    _common(s)
    s.set_defaults(func=cmd_flow)

    s = sub.add_parser("geodesic", help="shortest geodesic between two machines")
    s.add_argument("--machine", required=True)
    s.add_argument("--target", required=True)
    s.add_argument("--steps", type=int, default=64)
    _common(s)
    s.set_defaults(func=cmd_geodesic)

    s = sub.add_parser("simulate", help="gWF chain or expectation trajectory")
    s.add_argument("--machine", required=True)
    s.add_argument("--target", required=True, help="q_inf of the fitness -h(q_inf || .)")
    s.add_argument("--mode", choices=("chain", "expectation"), default="chain")
    s.add_argument("--L", type=_int_list)
    s.add_argument("--N", type=int, default=2)
    s.add_argument("--beta", type=float)
    s.add_argument("--generations", type=int, default=10)
    s.add_argument("--mc-runs", dest="mc_runs", type=int)
    s.add_argument("--policy", choices=("inherit-parent-row", "reject-resample"), default="inherit-parent-row")
    _common(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("replay", help="re-run a manifest and compare output digests")
    s.add_argument("manifest")
    _common(s)
    s.set_defaults(func=cmd_replay)
    return p


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    run = Run(args, argv) if args.command != "replay" else None
    try:
        code = args.func(args, run)
    except (UsageError, cio.MachineFileError, FileNotFoundError, ValueError) as exc:
        print(f"causalgeom {args.command}: error: {exc}", file=sys.stderr)
        return 2
    if run is not None:
        run.write_manifest()
    return code


if __name__ == "__main__":
    sys.exit(main())
