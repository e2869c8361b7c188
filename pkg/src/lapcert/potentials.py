"""Assembly of the discounted systems: restricted potentials, hitting-time
and personal PageRank right-hand sides, PageRank itself, plus a Monte-Carlo
random-walk estimator used as an independent oracle.

A restriction to the interior set is realized by index selection; the
selection matrix is never formed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .graph import (
    Graph,
    _check_alpha,
    _check_vec,
    dense_laplacian,
    laplacian_apply,
    norm,
    transition_apply,
)
from .solvers import (
    SolveOptions,
    SolveReport,
    cg_solve,
    dense_solve,
    richardson_solve,
    solve_dense_matrix,
)


def _vertex_set(vertices, n: int) -> np.ndarray:
    ids = np.unique(np.asarray(list(vertices) if not isinstance(vertices, np.ndarray) else vertices,
                               dtype=np.int64))
    if ids.size and (ids[0] < 0 or ids[-1] >= n):
        raise ValueError(f"vertex ids must lie in [0, {n})")
    return ids


def indicator(n: int, vertices) -> np.ndarray:
    v = np.zeros(n)
    v[_vertex_set(vertices, n)] = 1.0
    return v


@dataclass(frozen=True)
class Partition:
    """Interior set and absorbing boundary; together they cover every vertex."""

    n: int
    interior: np.ndarray
    boundary: np.ndarray

    def __post_init__(self):
        interior = _vertex_set(self.interior, self.n)
        boundary = _vertex_set(self.boundary, self.n)
        if interior.size == 0:
            raise ValueError("interior set must be nonempty")
        if np.intersect1d(interior, boundary).size:
            raise ValueError("interior and boundary must be disjoint")
        if interior.size + boundary.size != self.n:
            raise ValueError("interior and boundary must cover all vertices")
        object.__setattr__(self, "interior", interior)
        object.__setattr__(self, "boundary", boundary)

    @classmethod
    def from_boundary(cls, n: int, boundary=()) -> "Partition":
        boundary = _vertex_set(boundary, n)
        return cls(n, np.setdiff1d(np.arange(n), boundary), boundary)


@dataclass(frozen=True)
class PotentialSpec:
    """Cost ``c`` on the interior and values ``f`` on the boundary, both in
    increasing vertex-id order.  ``alpha = 1`` needs a nonempty boundary."""

    partition: Partition
    cost: np.ndarray
    boundary_values: np.ndarray
    alpha: float

    def __post_init__(self):
        c = np.asarray(self.cost, dtype=np.float64)
        if np.ndim(self.cost) == 0:
            c = np.full(self.partition.interior.size, float(self.cost))
        f = np.asarray(self.boundary_values, dtype=np.float64)
        if np.ndim(self.boundary_values) == 0:
            f = np.full(self.partition.boundary.size, float(self.boundary_values))
        if c.shape != self.partition.interior.shape:
            raise ValueError("cost must have one entry per interior vertex")
        if f.shape != self.partition.boundary.shape:
            raise ValueError("boundary_values must have one entry per boundary vertex")
        if (c < 0).any():
            raise ValueError("cost must be nonnegative")
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.alpha == 1.0 and self.partition.boundary.size == 0:
            raise ValueError("alpha = 1 needs a nonempty absorbing boundary")
        object.__setattr__(self, "cost", c)
        object.__setattr__(self, "boundary_values", f)

    @classmethod
    def hitting_time(cls, n: int, boundary, alpha: float = 1.0) -> "PotentialSpec":
        """Unit cost on the interior and zero boundary values: with ``alpha = 1``
        the potential is the mean hitting time of the boundary."""
        part = Partition.from_boundary(n, boundary)
        return cls(part, np.ones(part.interior.size), np.zeros(part.boundary.size), alpha)


@dataclass(frozen=True)
class PageRankSpec:
    w: np.ndarray
    alpha: float
    degree_normalized: bool = False

    def __post_init__(self):
        w = np.asarray(self.w, dtype=np.float64)
        if (w < 0).any() or not w.any():
            raise ValueError("PageRank weight vector must be nonnegative and nonzero")
        _check_alpha(self.alpha)
        object.__setattr__(self, "w", w)


def _apply_unchecked(g: Graph, alpha: float, v: np.ndarray) -> np.ndarray:
    # alpha = 1 is legal here: only reached through restricted operators
    return v - alpha * transition_apply(g, v)


@dataclass(frozen=True)
class DiscountedSystem:
    """A linear system over a graph with one of three operators.

    * plain: ``L`` (``transpose`` False) or ``L^T`` (``transpose`` True);
    * ``degree_normalized``: ``D^{-1} L^T D``;
    * restricted: rows and columns of ``L`` on ``interior``, with the known
      ``boundary_values`` on ``boundary`` already moved into ``rhs``.
    """

    graph: Graph
    alpha: float
    rhs: np.ndarray
    transpose: bool = False
    degree_normalized: bool = False
    interior: np.ndarray | None = None
    boundary: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    boundary_values: np.ndarray = field(default_factory=lambda: np.zeros(0))
    label: str = ""

    @property
    def restricted(self) -> bool:
        return self.interior is not None

    @property
    def size(self) -> int:
        return self.rhs.size

    def apply(self, v) -> np.ndarray:
        g = self.graph
        v = np.asarray(v, dtype=np.float64)
        if self.restricted:
            full = np.zeros(g.n)
            full[self.interior] = v
            return _apply_unchecked(g, self.alpha, full)[self.interior]
        if self.degree_normalized:
            return laplacian_apply(g, self.alpha, g.degrees * v, transpose=True) / g.degrees
        return laplacian_apply(g, self.alpha, v, transpose=self.transpose)

    def matrix(self) -> np.ndarray:
        """Dense operator (oracle use only)."""
        g = self.graph
        if self.restricted:
            L = dense_laplacian(g, self.alpha)
            return L[np.ix_(self.interior, self.interior)]
        if self.degree_normalized:
            return dense_laplacian(g, self.alpha, transpose=True) * g.degrees[None, :] / g.degrees[:, None]
        return dense_laplacian(g, self.alpha, transpose=self.transpose)

    def extend(self, x) -> np.ndarray:
        """Full-length vector: the solution on the interior and the boundary
        values elsewhere.  Unrestricted systems pass through unchanged."""
        x = np.asarray(x, dtype=np.float64)
        if not self.restricted:
            return x
        full = np.zeros(self.graph.n)
        full[self.interior] = x
        full[self.boundary] = self.boundary_values
        return full

    def solve(self, method: str = "dense", opts: SolveOptions | None = None) -> SolveReport:
        """Solve with ``dense``, ``cg`` (undirected, unrestricted) or ``richardson``.

        The returned solution is in the system's own coordinates; use
        :meth:`extend` for restricted systems.
        """
        g, a, b = self.graph, self.alpha, self.rhs
        if method not in ("dense", "cg", "richardson"):
            raise ValueError(f"unknown method {method!r}")
        if self.restricted:
            if method == "cg":
                raise ValueError("cg is not offered for restricted systems")
            if method == "dense":
                x = solve_dense_matrix(self.matrix(), b)
                return _dense_report(x, self.apply(x), b)
            return _restricted_richardson(self, opts or SolveOptions())
        # D^{-1} L^T D equals L on undirected graphs
        as_plain = self.degree_normalized and g.is_symmetric
        if self.degree_normalized and not as_plain:
            # D^{-1} L^T D u = c  <=>  L^T (D u) = D c
            inner = DiscountedSystem(g, a, g.degrees * b, transpose=True)
            rep = inner.solve(method, opts)
            rep.solution = rep.solution / g.degrees
            rep.iterates = [it / g.degrees for it in rep.iterates]
            return rep
        transpose = self.transpose and not as_plain
        if method == "dense":
            x = dense_solve(g, a, b, transpose=transpose)
            return _dense_report(x, laplacian_apply(g, a, x, transpose=transpose), b)
        if method == "cg":
            return cg_solve(g, a, b, opts)
        return richardson_solve(g, a, b, transpose=transpose, opts=opts)


def _dense_report(x, lx, b) -> SolveReport:
    rel = float(np.linalg.norm(b - lx) / np.linalg.norm(b)) if np.any(b) else 0.0
    return SolveReport(solution=x, iterations=1, converged=True, residual_history=[rel],
                       final_rel_residual=rel, norm_kind="two")


def _restricted_richardson(system: DiscountedSystem, opts: SolveOptions) -> SolveReport:
    b = system.rhs
    kind = opts.norm_kind or "inf"
    bnorm = norm(b, kind, system.graph.degrees[system.interior]) if np.any(b) else 1.0
    x = np.zeros(b.size)
    r = b.copy()
    rel = norm(r, kind, system.graph.degrees[system.interior]) / bnorm
    history = [rel]
    k = 0
    while rel > opts.rel_residual_tol and k < opts.max_iterations:
        x = x + r
        k += 1
        r = b - system.apply(x)
        rel = norm(r, kind, system.graph.degrees[system.interior]) / bnorm
        history.append(rel)
    return SolveReport(solution=x, iterations=k, converged=rel <= opts.rel_residual_tol,
                       residual_history=history if opts.record_history else [],
                       final_rel_residual=rel, norm_kind=kind)


def _reaches(g: Graph, targets: np.ndarray) -> np.ndarray:
    """Mask of vertices with a directed path into ``targets``."""
    seen = np.zeros(g.n, dtype=bool)
    seen[targets] = True
    frontier = targets
    adj_t = g._adj_t  # row j of A^T lists the predecessors of j
    while frontier.size:
        preds = np.concatenate([adj_t.indices[adj_t.indptr[j]:adj_t.indptr[j + 1]] for j in frontier])
        preds = np.unique(preds)
        frontier = preds[~seen[preds]]
        seen[frontier] = True
    return seen


def assemble_potential_system(g: Graph, spec: PotentialSpec) -> DiscountedSystem:
    """Restricted system ``L_{OO} phi = c + alpha P_{OB} f`` on the interior.

    Moving the known boundary values to the right-hand side keeps the first
    passage term of the random-walk interpretation intact for ``f != 0``.
    """
    part = spec.partition
    if part.n != g.n:
        raise ValueError("partition size does not match the graph")
    omega, boundary = part.interior, part.boundary
    if spec.alpha == 1.0:
        stuck = omega[~_reaches(g, boundary)[omega]]
        if stuck.size:
            raise ValueError(f"{stuck.size} interior vertices cannot reach the boundary "
                             f"(first: {stuck[0]}); undiscounted potential is unbounded")
    rhs = spec.cost.copy()
    if boundary.size and np.any(spec.boundary_values):
        fb = np.zeros(g.n)
        fb[boundary] = spec.boundary_values
        rhs += spec.alpha * transition_apply(g, fb)[omega]
    return DiscountedSystem(
        graph=g, alpha=spec.alpha, rhs=rhs, interior=omega, boundary=boundary,
        boundary_values=spec.boundary_values.copy(), label="potential",
    )


def _proper_subset(g: Graph, vertices, what: str) -> np.ndarray:
    ids = _vertex_set(vertices, g.n)
    if ids.size == 0 or ids.size == g.n:
        raise ValueError(f"{what} must be a nonempty proper subset of the vertices")
    return ids


def mht_rhs(g: Graph, omega_tilde, alpha: float) -> DiscountedSystem:
    """Full system ``L x = 1 - 1_{omega_tilde}`` (hitting-time right-hand side)."""
    alpha = _check_alpha(alpha)
    ids = _proper_subset(g, omega_tilde, "omega_tilde")
    b = np.ones(g.n)
    b[ids] = 0.0
    return DiscountedSystem(g, alpha, b, label="MHT")


def pagerank_system(g: Graph, spec: PageRankSpec) -> DiscountedSystem:
    """``L^T z = (1 - alpha) w``, or its degree-normalized form for ``D^{-1} z``.

    On an undirected graph ``D^{-1} L^T D`` and ``L`` are the same operator;
    this is checked on a probe vector.
    """
    w = _check_vec(g, spec.w)
    a = spec.alpha
    if not spec.degree_normalized:
        return DiscountedSystem(g, a, (1.0 - a) * w, transpose=True, label="pagerank")
    system = DiscountedSystem(g, a, (1.0 - a) * w / g.degrees, degree_normalized=True,
                              label="pagerank-degree-normalized")
    if g.is_symmetric:
        probe = np.random.default_rng(0).standard_normal(g.n)
        lhs, rhs = system.apply(probe), laplacian_apply(g, a, probe)
        if norm(lhs - rhs, "inf") > 1e-13 * max(norm(rhs, "inf"), 1.0):
            raise AssertionError("degree-normalized PageRank operator differs from L")
    return system


def ppr_indicator_rhs(g: Graph, omega, alpha: float) -> DiscountedSystem:
    """Degree-normalized personal PageRank with ``w = D 1_omega / (1 - alpha)``.

    The ``(1 - alpha)`` factors cancel, leaving ``D^{-1} L^T D u = 1_omega``
    (``L u = 1_omega`` on undirected graphs); the right-hand side is the
    exact indicator rather than the rounded product.
    """
    alpha = _check_alpha(alpha)
    ids = _proper_subset(g, omega, "omega")
    b = np.zeros(g.n)
    b[ids] = 1.0
    return DiscountedSystem(g, alpha, b, degree_normalized=True, label="PPR")


def ordering(v, direction: str = "ascending", tie_tol: float = 0.0) -> np.ndarray:
    """Vertex ids sorted by value; ties go to the smaller id.

    With ``tie_tol > 0``, sorted neighbours closer than
    ``tie_tol * max|v|`` are chained into one tie group, which keeps two
    mathematically equal entries from being split by rounding.
    """
    v = np.asarray(v, dtype=np.float64)
    if direction not in ("ascending", "descending"):
        raise ValueError("direction must be 'ascending' or 'descending'")
    key = v if direction == "ascending" else -v
    ids = np.arange(v.size)
    order = np.lexsort((ids, key))
    if tie_tol <= 0.0 or v.size < 2:
        return order
    scale = tie_tol * max(float(np.max(np.abs(v))), np.finfo(float).tiny)
    groups = np.concatenate([[0], np.cumsum(np.diff(key[order]) > scale)])
    return order[np.lexsort((order, groups))]


# -- Monte-Carlo oracle ------------------------------------------------------

MC_CHUNK = 8192


def _walker_rng(seed: int, chunk: int) -> np.random.Generator:
    counter = np.array([0, 0, 0, chunk], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=counter))


def _step(g: Graph, cum: np.ndarray, pos: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Move each walker to a neighbour chosen proportionally to edge weight."""
    lo = g.row_offsets[pos]
    hi = g.row_offsets[pos + 1]
    base = np.where(lo > 0, cum[lo - 1], 0.0)
    target = base + u * (cum[hi - 1] - base)
    k = np.searchsorted(cum, target, side="right")
    return g.col_indices[np.clip(k, lo, hi - 1)]


def monte_carlo_potential(
    g: Graph,
    spec: PotentialSpec,
    start: int,
    samples: int,
    seed: int = 0,
    weighting: str = "killing",
    max_steps: int = 10_000_000,
) -> tuple[float, float]:
    """Estimate ``phi[start]`` by simulating random walks.

    ``weighting="killing"`` ends each walk with probability ``1 - alpha`` per
    step; ``"discount"`` never kills and multiplies the n-th cost by
    ``alpha**n`` instead (truncated once the weight is below 1e-17).  Both
    add the boundary value on absorption, so they share the expectation of
    the linear system.  Walkers are simulated in chunks of 8192, chunk ``k``
    drawing from Philox stream ``(seed, k)``.  Returns (mean, standard error).
    """
    if samples < 1:
        raise ValueError("samples must be at least 1")
    if weighting not in ("killing", "discount"):
        raise ValueError("weighting must be 'killing' or 'discount'")
    part = spec.partition
    if not 0 <= start < g.n:
        raise ValueError("start vertex out of range")
    alpha = spec.alpha
    cost = np.zeros(g.n)
    cost[part.interior] = spec.cost
    fval = np.zeros(g.n)
    fval[part.boundary] = spec.boundary_values
    on_boundary = np.zeros(g.n, dtype=bool)
    on_boundary[part.boundary] = True
    if on_boundary[start]:
        return float(fval[start]), 0.0
    if alpha == 1.0:
        stuck = part.interior[~_reaches(g, part.boundary)[part.interior]]
        if start in stuck:
            raise ValueError("start vertex cannot reach the boundary")
    cum = np.cumsum(g.edge_weights)
    cutoff = 1e-17 * max(float(cost.max()), float(np.abs(fval).max()), 1.0)

    totals = np.empty(samples)
    for chunk, lo in enumerate(range(0, samples, MC_CHUNK)):
        m = min(MC_CHUNK, samples - lo)
        rng = _walker_rng(seed, chunk)
        acc = np.zeros(m)
        pos = np.full(m, start, dtype=np.int64)
        live = np.arange(m)
        weight = 1.0
        steps = 0
        while live.size:
            acc[live] += weight * cost[pos[live]]
            if weighting == "killing" and alpha < 1.0:
                live = live[rng.random(live.size) < alpha]
            else:
                weight *= alpha
            if live.size == 0:
                break
            pos[live] = _step(g, cum, pos[live], rng.random(live.size))
            hit = on_boundary[pos[live]]
            if hit.any():
                absorbed = live[hit]
                acc[absorbed] += weight * fval[pos[absorbed]]
                live = live[~hit]
            steps += 1
            if weighting == "discount" and weight < cutoff:
                break
            if steps > max_steps:
                raise RuntimeError("random walks exceeded max_steps without absorption")
        totals[lo:lo + m] = acc
    mean = float(totals.mean())
    stderr = float(totals.std(ddof=1) / np.sqrt(samples)) if samples > 1 else 0.0
    return mean, stderr
