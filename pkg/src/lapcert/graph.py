"""Sparse graph storage plus the matrix-free operators built on it.

Everything downstream works with the random-walk matrix ``P = D^{-1} A`` and
the discounted Laplacian ``L = I - alpha * P`` without ever forming ``D^{-1}``
or ``L``.  Dense materializations live here too, but only as test oracles.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

NORM_KINDS = ("one", "two", "inf", "D")


@dataclass(frozen=True, eq=False)
class Graph:
    """Weighted adjacency in CSR form with its row-degree vector.

    Construct through :func:`build_graph`, which enforces the invariants
    (positive degrees, nonnegative weights, exact symmetry detection).
    """

    n: int
    row_offsets: np.ndarray
    col_indices: np.ndarray
    edge_weights: np.ndarray
    degrees: np.ndarray
    is_symmetric: bool
    _adj: sp.csr_matrix = field(repr=False)
    _adj_t: sp.csr_matrix = field(repr=False)

    @property
    def adjacency(self) -> sp.csr_matrix:
        return self._adj

    @property
    def num_stored(self) -> int:
        return int(self.col_indices.size)

    @property
    def volume(self) -> float:
        return float(self.degrees.sum())

    def edges(self):
        """Yield stored entries as ``(i, j, w)``."""
        for i in range(self.n):
            lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
            for k in range(lo, hi):
                yield i, int(self.col_indices[k]), float(self.edge_weights[k])

    def neighbors(self, i: int) -> np.ndarray:
        lo, hi = self.row_offsets[i], self.row_offsets[i + 1]
        return self.col_indices[lo:hi]

    def __repr__(self) -> str:
        return f"Graph(n={self.n}, stored={self.num_stored}, symmetric={self.is_symmetric})"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def graph_from_csr(adj: sp.spmatrix, add_self_loops_on_isolated: bool = True) -> Graph:
    """Wrap a sparse adjacency matrix, applying the self-loop rule."""
    adj = sp.csr_matrix(adj, dtype=np.float64)
    n = adj.shape[0]
    if adj.shape != (n, n):
        raise ValueError(f"adjacency must be square, got {adj.shape}")
    adj.sum_duplicates()
    adj.eliminate_zeros()
    adj.sort_indices()
    if adj.data.size and adj.data.min() < 0:
        raise ValueError("edge weights must be nonnegative")

    degrees = np.asarray(adj.sum(axis=1)).ravel()
    isolated = np.flatnonzero(degrees <= 0)
    if isolated.size:
        if not add_self_loops_on_isolated:
            raise ValueError(
                f"{isolated.size} vertices have zero degree (first: {isolated[0]}); "
                "enable add_self_loops_on_isolated to give them a unit self-loop"
            )
        adj = (adj + sp.csr_matrix((np.ones(isolated.size), (isolated, isolated)), shape=(n, n))).tocsr()
        adj.sort_indices()
        degrees = np.asarray(adj.sum(axis=1)).ravel()

    adj_t = adj.T.tocsr()
    adj_t.sort_indices()
    is_symmetric = bool(
        np.array_equal(adj.indptr, adj_t.indptr)
        and np.array_equal(adj.indices, adj_t.indices)
        and np.array_equal(adj.data, adj_t.data)
    )
    for a in (adj.indptr, adj.indices, adj.data, adj_t.indptr, adj_t.indices, adj_t.data):
        a.setflags(write=False)
    return Graph(
        n=n,
        row_offsets=adj.indptr,
        col_indices=adj.indices,
        edge_weights=adj.data,
        degrees=_readonly(degrees),
        is_symmetric=is_symmetric,
        _adj=adj,
        _adj_t=adj_t,
    )


def build_graph(
    edge_list: Iterable[Sequence[float]],
    n: int,
    symmetrize: bool = False,
    add_self_loops_on_isolated: bool = True,
) -> Graph:
    """Build a :class:`Graph` from ``(i, j[, w])`` tuples.

    Duplicate entries are summed.  With ``symmetrize`` the adjacency becomes
    the element-wise maximum of ``A`` and ``A.T``, so listing an undirected
    edge once or in both directions gives the same graph.  Vertices left with
    zero degree receive a unit self-loop unless ``add_self_loops_on_isolated``
    is off, in which case they are an error.
    """
    if n < 1:
        raise ValueError("n must be positive")
    rows, cols, vals = [], [], []
    for e in edge_list:
        i, j = int(e[0]), int(e[1])
        w = float(e[2]) if len(e) > 2 else 1.0
        rows.append(i)
        cols.append(j)
        vals.append(w)
    rows_a = np.asarray(rows, dtype=np.int64)
    cols_a = np.asarray(cols, dtype=np.int64)
    vals_a = np.asarray(vals, dtype=np.float64)
    return build_graph_arrays(rows_a, cols_a, vals_a, n, symmetrize, add_self_loops_on_isolated)


def build_graph_arrays(
    rows: np.ndarray,
    cols: np.ndarray,
    weights: np.ndarray | None,
    n: int,
    symmetrize: bool = False,
    add_self_loops_on_isolated: bool = True,
) -> Graph:
    """Array form of :func:`build_graph`, for generators."""
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    weights = np.ones(rows.size) if weights is None else np.asarray(weights, dtype=np.float64)
    if not (rows.size == cols.size == weights.size):
        raise ValueError("rows, cols and weights must have equal length")
    if rows.size:
        bad = (rows < 0) | (rows >= n) | (cols < 0) | (cols >= n)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise ValueError(f"edge ({rows[k]}, {cols[k]}) out of range for n={n}")
        if (weights < 0).any():
            raise ValueError("edge weights must be nonnegative")
    adj = sp.coo_matrix((weights, (rows, cols)), shape=(n, n)).tocsr()
    adj.sum_duplicates()
    if symmetrize:
        adj = adj.maximum(adj.T).tocsr()
    return graph_from_csr(adj, add_self_loops_on_isolated)


def _check_vec(g: Graph, v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (g.n,):
        raise ValueError(f"vector of shape {v.shape} does not match n={g.n}")
    return v


def _check_alpha(alpha: float) -> float:
    alpha = float(alpha)
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"discount alpha must lie in (0, 1), got {alpha}")
    return alpha


def transition_apply(g: Graph, v) -> np.ndarray:
    """Return ``D^{-1} A v``."""
    v = _check_vec(g, v)
    return (g.adjacency @ v) / g.degrees


def transition_transpose_apply(g: Graph, v) -> np.ndarray:
    """Return ``A^T D^{-1} v`` (the column-stochastic action)."""
    v = _check_vec(g, v)
    return g._adj_t @ (v / g.degrees)


def laplacian_apply(g: Graph, alpha: float, v, transpose: bool = False) -> np.ndarray:
    """Return ``L v`` with ``L = I - alpha D^{-1} A``, or ``L^T v``."""
    alpha = _check_alpha(alpha)
    v = _check_vec(g, v)
    if transpose:
        return v - alpha * transition_transpose_apply(g, v)
    return v - alpha * transition_apply(g, v)


def symmetrized_apply(g: Graph, alpha: float, v) -> np.ndarray:
    """Return ``H v`` with ``H = D^{1/2} L D^{-1/2}``; undirected graphs only."""
    if not g.is_symmetric:
        raise ValueError("symmetrized operator requires a symmetric adjacency")
    alpha = _check_alpha(alpha)
    v = _check_vec(g, v)
    s = np.sqrt(g.degrees)
    # D^{1/2} D^{-1} A D^{-1/2} = D^{-1/2} A D^{-1/2}
    return v - alpha * (g.adjacency @ (v / s)) / s


def _scaled_two(v: np.ndarray, weights: np.ndarray | None) -> float:
    # scaling by max|v| keeps tiny and huge entries from under/overflowing
    scale = float(np.max(np.abs(v))) if v.size else 0.0
    if scale == 0.0 or not np.isfinite(scale):
        return scale
    u = v / scale
    return scale * float(np.sqrt(np.dot(u * weights, u) if weights is not None else np.dot(u, u)))


def norm(v, kind: str = "two", degrees=None) -> float:
    """Vector norm of the given kind; ``"D"`` needs the degree vector."""
    v = np.asarray(v, dtype=np.float64)
    if kind == "two":
        return _scaled_two(v, None)
    if kind == "inf":
        return float(np.max(np.abs(v))) if v.size else 0.0
    if kind == "one":
        return float(np.sum(np.abs(v)))
    if kind == "D":
        if degrees is None:
            raise ValueError("D-norm requires the degree vector")
        d = degrees.degrees if isinstance(degrees, Graph) else np.asarray(degrees, dtype=np.float64)
        if d.shape != v.shape:
            raise ValueError(f"degree vector of shape {d.shape} does not match {v.shape}")
        return _scaled_two(v, d)
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def d_inner(g: Graph, u, v) -> float:
    return float(np.dot(g.degrees * np.asarray(u, dtype=np.float64), v))


# -- dense oracles -----------------------------------------------------------

def dense_transition(g: Graph) -> np.ndarray:
    return g.adjacency.toarray() / g.degrees[:, None]


def dense_laplacian(g: Graph, alpha: float, transpose: bool = False) -> np.ndarray:
    """Materialize ``L`` (or ``L^T``) densely; for oracles on small graphs.

    Accepts ``alpha = 1`` so undiscounted restricted operators can be
    assembled from it.
    """
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must lie in (0, 1], got {alpha}")
    L = np.eye(g.n) - alpha * dense_transition(g)
    return L.T.copy() if transpose else L


# -- edge-list text format ---------------------------------------------------

def read_edgelist(path, symmetrize: bool | None = None, n: int | None = None) -> Graph:
    """Read ``i j [w]`` lines; ``#`` lines are comments.

    Two comments written by :func:`write_edgelist` are understood: ``# n=<count>``
    fixes the vertex count so trailing isolated vertices survive a round trip,
    and ``# undirected`` turns on symmetrization when ``symmetrize`` is None.
    """
    rows, cols, vals = [], [], []
    declared_n = None
    undirected = False
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("n="):
                declared_n = int(body[2:])
            elif body == "undirected":
                undirected = True
            continue
        parts = line.split()
        if len(parts) not in (2, 3):
            raise ValueError(f"{path}:{lineno}: expected 'i j [w]', got {raw!r}")
        rows.append(int(parts[0]))
        cols.append(int(parts[1]))
        vals.append(float(parts[2]) if len(parts) == 3 else 1.0)
    if symmetrize is None:
        symmetrize = undirected
    if n is None:
        n = declared_n
    if n is None:
        n = max(max(rows, default=-1), max(cols, default=-1)) + 1
    return build_graph_arrays(np.array(rows, dtype=np.int64), np.array(cols, dtype=np.int64),
                              np.array(vals), n, symmetrize=symmetrize)


def edgelist_text(g: Graph, undirected: bool | None = None) -> str:
    """Serialize the graph; symmetric graphs store each edge once (``i <= j``)."""
    if undirected is None:
        undirected = g.is_symmetric
    coo = g.adjacency.tocoo()
    keep = coo.row <= coo.col if undirected else np.ones(coo.nnz, dtype=bool)
    lines = [f"# n={g.n}"] + (["# undirected"] if undirected else [])
    lines.extend(f"{i} {j} {w!r}" for i, j, w in zip(coo.row[keep], coo.col[keep], coo.data[keep].tolist()))
    return "\n".join(lines) + "\n"


def write_edgelist(g: Graph, path, undirected: bool | None = None) -> None:
    Path(path).write_text(edgelist_text(g, undirected))


def read_vector(path) -> np.ndarray:
    vals = [float(s) for s in Path(path).read_text().split()]
    return np.array(vals, dtype=np.float64)


def write_vector(v, path) -> None:
    Path(path).write_text("".join(f"{x!r}\n" for x in np.asarray(v, dtype=np.float64).tolist()))
