"""Error/residual ratio study on BTER-style graphs.

For every (size, trial) a graph is generated and one vertex ``v`` drawn at
random.  Two right-hand sides are solved for each discount:

* ``MHT``: ``b = 1 - 1_{v}``
* ``PPR``: ``b = 1_{v}``

A tight CG solve gives the reference, a loose capped CG solve gives the
approximation, and :func:`verify_two_sided` measures the ratio of relative
error to relative residual in the D-norm.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
import io
import math
from pathlib import Path

import numpy as np

from .conditioning import verify_two_sided
from .generators import BterConfig, generate_bter, largest_component, phase_rng
from .solvers import SolveOptions, cg_solve

RHS_KINDS = ("MHT", "PPR")
DEFAULT_ALPHAS = (0.5, 0.85, 0.99)
DEFAULT_MAXIT = {0.5: 40, 0.85: 120, 0.99: 480}
REF_MAXIT = 100_000


@dataclass(frozen=True)
class ExperimentConfig:
    graph_sizes: tuple[int, ...] = (1_000, 10_000, 100_000)
    alphas: tuple[float, ...] = DEFAULT_ALPHAS
    trials_per_size: int = 10
    rhs_kinds: tuple[str, ...] = RHS_KINDS
    cg_tol: float = 1e-3
    cg_maxit_per_alpha: dict = field(default_factory=lambda: dict(DEFAULT_MAXIT))
    ref_tol: float = 1e-12
    bter: BterConfig = field(default_factory=lambda: BterConfig(n=1_000))
    seed: int = 0
    largest_component: bool = True

    def __post_init__(self):
        if not (self.graph_sizes and self.alphas and self.rhs_kinds):
            raise ValueError("sizes, alphas and rhs kinds must be nonempty")
        if self.trials_per_size < 1:
            raise ValueError("trials_per_size must be at least 1")
        bad = set(self.rhs_kinds) - set(RHS_KINDS)
        if bad:
            raise ValueError(f"unknown rhs kinds {sorted(bad)}")
        if not self.cg_tol > self.ref_tol > 0:
            raise ValueError("need cg_tol > ref_tol > 0")
        missing = [a for a in self.alphas if a not in self.cg_maxit_per_alpha]
        if missing:
            raise ValueError(f"no CG iteration cap for alphas {missing}")
        for a in self.alphas:
            if not 0 < a < 1:
                raise ValueError(f"alpha {a} outside (0, 1)")
        for n in self.graph_sizes:
            if n < 2:
                raise ValueError("graph sizes must be at least 2")


@dataclass
class ExperimentRow:
    n: int
    alpha: float
    trial: int
    rhs_kind: str
    relerr_D: float
    relres_D: float
    observed_ratio: float
    kappa_db: float
    prop2_bound: float
    classical_upper: float
    rho: float
    cg_iters: int
    converged: bool
    graph_n: int = 0
    vertex: int = -1
    degenerate: bool = False
    error: str = ""

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def trial_seed(master: int, size_index: int, trial: int) -> int:
    ss = np.random.SeedSequence([master, size_index, trial])
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _vertex_rng(seed: int) -> np.random.Generator:
    # phase 3: a stream disjoint from the generator's three phases
    return phase_rng(seed, 3)


def run_trial(cfg: ExperimentConfig, size_index: int, trial: int) -> list[ExperimentRow]:
    n = cfg.graph_sizes[size_index]
    seed = trial_seed(cfg.seed, size_index, trial)
    rows: list[ExperimentRow] = []

    def failed(alpha, kind, msg, graph_n=0, vertex=-1):
        nan = math.nan
        return ExperimentRow(n, alpha, trial, kind, nan, nan, nan, nan, nan,
                             (1 + alpha) / (1 - alpha), nan, 0, False, graph_n, vertex, False, msg)

    try:
        bter = replace(cfg.bter, n=n, seed=seed,
                       max_degree=None if cfg.bter.max_degree is None else min(cfg.bter.max_degree, n - 1))
        g = generate_bter(bter)
        if cfg.largest_component:
            g, _ = largest_component(g)
        if g.n < 2:
            raise ValueError("sampled graph has fewer than two vertices")
        v = int(_vertex_rng(seed).integers(g.n))
    except Exception as exc:  # recorded per row; the run continues
        return [failed(a, k, f"{type(exc).__name__}: {exc}") for a in cfg.alphas for k in cfg.rhs_kinds]

    e_v = np.zeros(g.n)
    e_v[v] = 1.0
    others = np.setdiff1d(np.arange(g.n), [v])
    rhs = {"MHT": (1.0 - e_v, [v]), "PPR": (e_v, others)}
    for alpha in cfg.alphas:
        for kind in cfg.rhs_kinds:
            b, zero_set = rhs[kind]
            try:
                ref = cg_solve(g, alpha, b, SolveOptions(cfg.ref_tol, REF_MAXIT, record_history=False))
                if not ref.converged:
                    raise RuntimeError(f"reference solve stalled at {ref.final_rel_residual:.3e}")
                hat = cg_solve(g, alpha, b, SolveOptions(cfg.cg_tol, cfg.cg_maxit_per_alpha[alpha],
                                                         record_history=False))
                rep = verify_two_sided(g, alpha, b, ref.solution, hat.solution, "D",
                                       omega_tilde=zero_set, ref_tol=cfg.ref_tol)
            except Exception as exc:
                rows.append(failed(alpha, kind, f"{type(exc).__name__}: {exc}", g.n, v))
                continue
            rows.append(ExperimentRow(
                n=n, alpha=alpha, trial=trial, rhs_kind=kind,
                relerr_D=rep.relerr, relres_D=rep.relres, observed_ratio=rep.observed_ratio,
                kappa_db=rep.kappa_db, prop2_bound=rep.prop2_bound,
                classical_upper=rep.classical_upper, rho=rep.rho, cg_iters=hat.iterations,
                converged=hat.converged, graph_n=g.n, vertex=v, degenerate=rep.degenerate,
            ))
    return rows


def _sort_key(row: ExperimentRow):
    return (row.n, row.alpha, row.trial, RHS_KINDS.index(row.rhs_kind))


def run_ratio_experiment(cfg: ExperimentConfig, workers: int = 1) -> list[ExperimentRow]:
    """All rows for every (size, alpha, trial, kind), sorted in that order.

    Trials are independent; with ``workers > 1`` they run in a process
    pool, and sorting afterwards keeps the output independent of scheduling.
    """
    jobs = [(si, t) for si in range(len(cfg.graph_sizes)) for t in range(cfg.trials_per_size)]
    rows: list[ExperimentRow] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for chunk in pool.map(run_trial, [cfg] * len(jobs), *zip(*jobs)):
                rows.extend(chunk)
    else:
        for si, t in jobs:
            rows.extend(run_trial(cfg, si, t))
    rows.sort(key=_sort_key)
    return rows


@dataclass
class SummaryRow:
    n: int
    alpha: float
    rhs_kind: str
    trials: int
    errors: int
    max_observed_ratio: float
    max_kappa_db: float
    max_prop2_bound: float
    classical_upper: float
    min_rho: float
    max_rho: float

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


def aggregate_max_ratios(rows: list[ExperimentRow]) -> dict[tuple[int, float, str], SummaryRow]:
    """Maximum over trials of each plotted quantity, keyed by (n, alpha, kind)."""
    if not rows:
        raise ValueError("no rows to aggregate")
    groups: dict[tuple[int, float, str], list[ExperimentRow]] = {}
    for r in sorted(rows, key=_sort_key):
        groups.setdefault((r.n, r.alpha, r.rhs_kind), []).append(r)
    out = {}
    for key, grp in groups.items():
        ok = [r for r in grp if not r.error]

        def mx(attr):
            vals = [getattr(r, attr) for r in ok]
            return max(vals) if vals else math.nan

        out[key] = SummaryRow(
            n=key[0], alpha=key[1], rhs_kind=key[2], trials=len(grp), errors=len(grp) - len(ok),
            max_observed_ratio=mx("observed_ratio"), max_kappa_db=mx("kappa_db"),
            max_prop2_bound=mx("prop2_bound"), classical_upper=(1 + key[1]) / (1 - key[1]),
            min_rho=min((r.rho for r in ok), default=math.nan), max_rho=mx("rho"),
        )
    return out


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def csv_text(records, row_type) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    names = row_type.field_names()
    writer.writerow(names)
    for rec in records:
        d = asdict(rec)
        writer.writerow([_fmt(d[k]) for k in names])
    return buf.getvalue()


def emit_csv(records, path, row_type=None) -> None:
    """Write rows (or a summary mapping) as CSV with a header line.

    Floats use ``repr`` so they round-trip exactly; the caller's ordering is
    kept for rows, summaries are written in key order.
    """
    if isinstance(records, dict):
        records = [records[k] for k in sorted(records)]
        row_type = row_type or SummaryRow
    records = list(records)
    if row_type is None:
        row_type = type(records[0]) if records else ExperimentRow
    with open(path, "w", newline="") as fh:
        fh.write(csv_text(records, row_type))


def gnuplot_script(summary_csv: str) -> str:
    """A plain gnuplot script plotting max ratio against alpha per size."""
    return "\n".join([
        "set datafile separator ','",
        "set logscale y",
        "set xlabel 'alpha'",
        "set ylabel 'max relative error / relative residual'",
        "set key left top",
        f"file = '{summary_csv}'",
        "plot file every ::1 using (strcol(3) eq 'MHT' ? $2 : NaN):6 with points pt 9 title 'MHT', \\",
        "     file every ::1 using (strcol(3) eq 'PPR' ? $2 : NaN):6 with points pt 7 title 'PPR', \\",
        "     file every ::1 using 2:9 with lines lc rgb 'black' title '(1+a)/(1-a)', \\",
        "     sqrt(5) with lines dt 2 title 'sqrt(5)'",
        "",
    ])


def write_gnuplot(path, summary_csv) -> None:
    Path(path).write_text(gnuplot_script(str(summary_csv)))
