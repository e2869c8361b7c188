"""Command-line entry point: ``lapcert {generate,solve,analyze,mc-check,experiment}``."""

from __future__ import annotations

import argparse
import csv
import logging
from pathlib import Path
import sys

import numpy as np

from .conditioning import ConditionReport, verify_two_sided
from .experiment import (
    DEFAULT_ALPHAS,
    DEFAULT_MAXIT,
    ExperimentConfig,
    ExperimentRow,
    SummaryRow,
    aggregate_max_ratios,
    emit_csv,
    run_ratio_experiment,
    write_gnuplot,
)
from .generators import FAMILY_KINDS, BterConfig, FamilySpec, generate_bter, generate_family, largest_component
from .graph import Graph, edgelist_text, read_edgelist, read_vector, write_edgelist, write_vector
from .potentials import Partition, PotentialSpec, assemble_potential_system, monte_carlo_potential
from .solvers import DENSE_LIMIT, SolveOptions, cg_solve, dense_solve, richardson_solve

log = logging.getLogger("lapcert")

EXIT_CONFIG, EXIT_PARTIAL = 2, 3


class ConfigError(Exception):
    pass


def _ids(text: str) -> list[int]:
    return [int(t) for t in text.replace(",", " ").split()] if text else []


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def parse_rhs(spec: str, g: Graph) -> tuple[np.ndarray, list[int] | None]:
    """Right-hand side from ``ones``, ``mht:IDS``, ``ppr:IDS``, ``indicator:IDS``
    or a vector file.  Also returns the zeroed set ``S`` when ``b = 1 - 1_S``."""
    kind, _, arg = spec.partition(":")
    if kind == "ones":
        return np.ones(g.n), []
    if kind in ("mht", "ppr", "indicator"):
        ids = _ids(arg)
        if not ids:
            raise ConfigError(f"{kind} right-hand side needs vertex ids, e.g. {kind}:0,3")
        e = np.zeros(g.n)
        e[ids] = 1.0
        if kind == "mht":
            return 1.0 - e, ids
        return e, [i for i in range(g.n) if i not in set(ids)]
    path = Path(spec)
    if not path.exists():
        raise ConfigError(f"right-hand side {spec!r} is neither a known kind nor a file")
    b = read_vector(path)
    if b.size != g.n:
        raise ConfigError(f"vector file has {b.size} entries, graph has {g.n} vertices")
    return b, None


def _load_graph(path) -> Graph:
    try:
        return read_edgelist(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read graph {path}: {exc}") from exc


def cmd_generate(args) -> int:
    if args.family:
        g = generate_family(FamilySpec(args.family, args.n))
    else:
        cfg = BterConfig(n=args.n, degree_exponent=args.gamma, max_degree=args.max_degree,
                         target_ccf=args.ccf, seed=args.seed, min_degree=args.min_degree)
        g = generate_bter(cfg)
        if args.lcc:
            g, _ = largest_component(g)
    if args.out == "-":
        sys.stdout.write(edgelist_text(g))
    else:
        write_edgelist(g, args.out)
        log.info("wrote %s", g)
    return 0


def cmd_solve(args) -> int:
    g = _load_graph(args.graph)
    b, _ = parse_rhs(args.rhs, g)
    opts = SolveOptions(args.tol, args.maxit, norm_kind=args.norm)
    if args.solver == "dense":
        x = dense_solve(g, args.alpha, b, transpose=args.transpose)
        print(f"solver=dense n={g.n}")
    else:
        if args.solver == "cg":
            if args.transpose:
                raise ConfigError("cg solves the plain system; use richardson or dense with --transpose")
            rep = cg_solve(g, args.alpha, b, opts)
        else:
            rep = richardson_solve(g, args.alpha, b, transpose=args.transpose, opts=opts)
        x = rep.solution
        print(f"solver={args.solver} n={g.n} iterations={rep.iterations} converged={rep.converged} "
              f"rel_residual_{rep.norm_kind}={rep.final_rel_residual!r}")
    if args.out:
        write_vector(x, args.out)
    return 0


def cmd_analyze(args) -> int:
    g = _load_graph(args.graph)
    b, zero_set = parse_rhs(args.rhs, g)
    x_ref, x_hat = read_vector(args.ref), read_vector(args.approx)
    if x_ref.size != g.n or x_hat.size != g.n:
        raise ConfigError("reference and approximation must have one entry per vertex")
    rep = verify_two_sided(g, args.alpha, b, x_ref, x_hat, args.norm,
                           omega_tilde=zero_set or None, transpose=args.transpose)
    out = open(args.out, "w", newline="") if args.out else sys.stdout
    writer = csv.writer(out, lineterminator="\n")
    names = ConditionReport.field_names()
    row = rep.as_row()
    writer.writerow(names)
    writer.writerow([repr(row[k]) if isinstance(row[k], float) else str(row[k]) for k in names])
    if args.out:
        out.close()
    return 0 if rep.all_ok else 1


def cmd_mc_check(args) -> int:
    g = _load_graph(args.graph)
    part = Partition.from_boundary(g.n, _ids(args.boundary))
    if args.cost == "ones":
        cost = np.ones(part.interior.size)
    else:
        cost = read_vector(args.cost)
    fvals = np.full(part.boundary.size, args.boundary_value)
    spec = PotentialSpec(part, cost, fvals, args.alpha)
    est, err = monte_carlo_potential(g, spec, args.start, args.samples, args.seed, weighting=args.weighting)
    print(f"estimate={est!r}")
    print(f"stderr={err!r}")
    if g.n <= DENSE_LIMIT:
        system = assemble_potential_system(g, spec)
        phi = system.extend(system.solve("dense").solution)
        exact = float(phi[args.start])
        z = abs(est - exact) / err if err > 0 else float("inf") if est != exact else 0.0
        print(f"dense={exact!r}")
        print(f"z_score={z:.3f}")
    return 0


def cmd_experiment(args) -> int:
    alphas = tuple(_floats(args.alphas)) if args.alphas else DEFAULT_ALPHAS
    if args.maxit:
        caps = _floats(args.maxit)
        if len(caps) != len(alphas):
            raise ConfigError("--maxit needs one cap per alpha")
        maxit = {a: int(c) for a, c in zip(alphas, caps)}
    else:
        missing = [a for a in alphas if a not in DEFAULT_MAXIT]
        if missing:
            raise ConfigError(f"no default CG cap for alphas {missing}; pass --maxit")
        maxit = dict(DEFAULT_MAXIT)
    try:
        cfg = ExperimentConfig(
            graph_sizes=tuple(int(s) for s in _floats(args.sizes)),
            alphas=alphas,
            trials_per_size=args.trials,
            rhs_kinds=tuple(k.strip().upper() for k in args.kinds.split(",")),
            cg_tol=args.cg_tol,
            cg_maxit_per_alpha=maxit,
            ref_tol=args.ref_tol,
            bter=BterConfig(n=max(int(s) for s in _floats(args.sizes)), degree_exponent=args.gamma,
                            max_degree=args.max_degree, target_ccf=args.ccf, min_degree=args.min_degree),
            seed=args.seed,
            largest_component=args.lcc,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = run_ratio_experiment(cfg, workers=args.workers)
    summary = aggregate_max_ratios(rows)
    if args.out_rows:
        emit_csv(rows, args.out_rows, ExperimentRow)
    if args.out_summary:
        emit_csv(summary, args.out_summary, SummaryRow)
        if args.gnuplot and args.gnuplot != "none":
            write_gnuplot(args.gnuplot, args.out_summary)
    for key in sorted(summary):
        s = summary[key]
        print(f"n={s.n:<7d} alpha={s.alpha:<5g} {s.rhs_kind}  max_ratio={s.max_observed_ratio:.4g}  "
              f"max_kappa_db={s.max_kappa_db:.4g}  classical={s.classical_upper:.4g}  errors={s.errors}")
    failed = sum(1 for r in rows if r.error)
    if failed:
        log.warning("%d of %d rows failed", failed, len(rows))
        return EXIT_PARTIAL
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lapcert", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    gp = sub.add_parser("generate", help="write a family or BTER-style graph as an edge list")
    gp.add_argument("--family", choices=FAMILY_KINDS)
    gp.add_argument("--n", type=int, required=True)
    gp.add_argument("--gamma", type=float, default=2.5)
    gp.add_argument("--max-degree", type=int, default=None)
    gp.add_argument("--min-degree", type=int, default=2)
    gp.add_argument("--ccf", type=float, default=0.4)
    gp.add_argument("--seed", type=int, default=0)
    gp.add_argument("--lcc", action="store_true", help="keep only the largest connected component")
    gp.add_argument("--out", default="-")
    gp.set_defaults(func=cmd_generate)

    sp = sub.add_parser("solve", help="solve L x = b (or L^T x = b)")
    sp.add_argument("--graph", required=True)
    sp.add_argument("--alpha", type=float, required=True)
    sp.add_argument("--rhs", default="ones")
    sp.add_argument("--tol", type=float, default=1e-12)
    sp.add_argument("--maxit", type=int, default=10_000)
    sp.add_argument("--solver", choices=("cg", "richardson", "dense"), default="cg")
    sp.add_argument("--norm", choices=("D", "two", "inf", "one"), default=None)
    sp.add_argument("--transpose", action="store_true")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_solve)

    ap = sub.add_parser("analyze", help="error/residual ratio and bounds as one CSV row")
    ap.add_argument("--graph", required=True)
    ap.add_argument("--alpha", type=float, required=True)
    ap.add_argument("--rhs", required=True)
    ap.add_argument("--ref", required=True)
    ap.add_argument("--approx", required=True)
    ap.add_argument("--norm", choices=("D", "inf", "one"), default="D")
    ap.add_argument("--transpose", action="store_true")
    ap.add_argument("--out")
    ap.set_defaults(func=cmd_analyze)

    mp = sub.add_parser("mc-check", help="Monte-Carlo estimate of a potential against the dense solve")
    mp.add_argument("--graph", required=True)
    mp.add_argument("--alpha", type=float, required=True)
    mp.add_argument("--boundary", default="")
    mp.add_argument("--boundary-value", type=float, default=0.0)
    mp.add_argument("--cost", default="ones")
    mp.add_argument("--start", type=int, required=True)
    mp.add_argument("--samples", type=int, default=100_000)
    mp.add_argument("--seed", type=int, default=0)
    mp.add_argument("--weighting", choices=("killing", "discount"), default="killing")
    mp.set_defaults(func=cmd_mc_check)

    ep = sub.add_parser("experiment", help="max error/residual ratio study for MHT and PPR")
    ep.add_argument("--sizes", default="1000,10000,100000")
    ep.add_argument("--alphas", default=None)
    ep.add_argument("--trials", type=int, default=10)
    ep.add_argument("--kinds", default="MHT,PPR")
    ep.add_argument("--cg-tol", type=float, default=1e-3)
    ep.add_argument("--ref-tol", type=float, default=1e-12)
    ep.add_argument("--maxit", default=None, help="CG caps, one per alpha")
    ep.add_argument("--seed", type=int, default=0)
    ep.add_argument("--gamma", type=float, default=2.5)
    ep.add_argument("--max-degree", type=int, default=None)
    ep.add_argument("--min-degree", type=int, default=2)
    ep.add_argument("--ccf", type=float, default=0.4)
    ep.add_argument("--lcc", action=argparse.BooleanOptionalAction, default=True)
    ep.add_argument("--workers", type=int, default=1)
    ep.add_argument("--out-rows")
    ep.add_argument("--out-summary")
    ep.add_argument("--gnuplot", default="none")
    ep.set_defaults(func=cmd_experiment)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"lapcert: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
