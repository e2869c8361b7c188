"""Deterministic family graphs and a seeded BTER-style random generator.

Random graphs use numpy's Philox4x64 counter-based bit generator.  The RNG
key is ``cfg.seed`` and the three phases (degree sampling, affinity blocks,
Chung-Lu wiring) read from disjoint streams obtained by setting the top
word of the 256-bit counter to the phase index 0, 1, 2.  Given the same
numpy version, the edge set is a pure function of the config.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.sparse.csgraph import connected_components

from .graph import Graph, build_graph_arrays, graph_from_csr

FAMILY_KINDS = ("path", "cycle", "star", "complete", "grid", "single_edge")

PHASE_DEGREES, PHASE_BLOCKS, PHASE_CHUNG_LU = 0, 1, 2


@dataclass(frozen=True)
class FamilySpec:
    kind: str
    n: int
    dims: tuple[int, int] | None = None

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family {self.kind!r}; expected one of {FAMILY_KINDS}")
        minimum = {"path": 2, "cycle": 3, "star": 2, "complete": 2, "grid": 1, "single_edge": 2}
        if self.n < minimum[self.kind]:
            raise ValueError(f"{self.kind} needs n >= {minimum[self.kind]}, got {self.n}")
        if self.kind == "single_edge" and self.n != 2:
            raise ValueError("single_edge has exactly 2 vertices")
        if self.kind == "grid":
            if self.dims is not None:
                if self.dims[0] * self.dims[1] != self.n:
                    raise ValueError(f"grid dims {self.dims} do not multiply to n={self.n}")
            elif math.isqrt(self.n) ** 2 != self.n:
                raise ValueError(f"grid needs a perfect square n or explicit dims, got n={self.n}")


def generate_family(spec: FamilySpec) -> Graph:
    """Build one of the named undirected test graphs with unit weights.

    Star graphs use vertex 0 as the hub; grids number vertices row-major.
    """
    n = spec.n
    if spec.kind in ("path", "single_edge"):
        i = np.arange(n - 1)
        rows, cols = i, i + 1
    elif spec.kind == "cycle":
        i = np.arange(n)
        rows, cols = i, (i + 1) % n
    elif spec.kind == "star":
        rows, cols = np.zeros(n - 1, dtype=np.int64), np.arange(1, n)
    elif spec.kind == "complete":
        rows, cols = np.triu_indices(n, k=1)
    else:
        r, c = spec.dims if spec.dims is not None else (math.isqrt(n),) * 2
        ids = np.arange(n).reshape(r, c)
        pairs = [(ids[:, :-1].ravel(), ids[:, 1:].ravel()), (ids[:-1, :].ravel(), ids[1:, :].ravel())]
        rows = np.concatenate([p[0] for p in pairs])
        cols = np.concatenate([p[1] for p in pairs])
    return build_graph_arrays(rows, cols, None, n, symmetrize=True)


@dataclass(frozen=True)
class BterConfig:
    """Parameters of the two-phase BTER-style generator.

    Blocks are Erdos-Renyi with edge probability ``target_ccf ** (1/3)``:
    about that fraction squared of a block vertex's wedges lie inside its
    block and each closes with the same probability, giving clustering near
    ``target_ccf``.  ``min_degree`` is the lower end of the degree support and
    ``max_degree=None`` selects :func:`natural_cutoff`.
    """

    n: int
    degree_exponent: float = 2.5
    max_degree: int | None = None
    target_ccf: float = 0.4
    seed: int = 0
    min_degree: int = 2

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("n must be at least 2")
        if not self.degree_exponent > 2:
            raise ValueError("degree_exponent must exceed 2")
        if not 1 <= self.degree_cap < self.n:
            raise ValueError(f"max_degree must lie in [1, n), got {self.max_degree} for n={self.n}")
        if not 0 < self.target_ccf < 1:
            raise ValueError("target_ccf must lie in (0, 1)")
        if not 1 <= self.min_degree:
            raise ValueError("min_degree must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @property
    def degree_cap(self) -> int:
        if self.max_degree is None:
            return natural_cutoff(self.n, self.degree_exponent)
        return self.max_degree


def natural_cutoff(n: int, gamma: float) -> int:
    """``ceil(n ** (1/(gamma-1)))`` clipped to ``[1, n-1]``: the largest degree
    an n-sample of the uncapped power law is expected to reach."""
    return int(min(max(math.ceil(n ** (1.0 / (gamma - 1.0))), 1), n - 1))


def phase_rng(seed: int, phase: int) -> np.random.Generator:
    counter = np.array([0, 0, 0, phase], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=np.uint64(seed), counter=counter))


def sample_degrees(cfg: BterConfig, rng: np.random.Generator) -> np.ndarray:
    """Draw ``n`` iid degrees with ``P(d) ~ d^-gamma`` on ``[min_degree, max_degree]``."""
    support = np.arange(cfg.min_degree, cfg.degree_cap + 1)
    pmf = support.astype(np.float64) ** (-cfg.degree_exponent)
    pmf /= pmf.sum()
    return rng.choice(support, size=cfg.n, p=pmf)


def generate_bter(cfg: BterConfig) -> Graph:
    """Sample an undirected simple graph from the BTER-style model.

    Phase 1 sorts vertices by target degree and groups runs of like degree
    into affinity blocks of size ``d + 1`` (``d`` the smallest degree in the
    block), each wired as a dense Erdos-Renyi graph.  Phase 2 spends the
    remaining expected degree on a Chung-Lu pass: endpoints are drawn with
    probability proportional to excess degree.  Self-loops from phase 2 are
    dropped, duplicates collapse to weight 1, and vertices that end up
    isolated get the usual unit self-loop.
    """
    if cfg.min_degree > cfg.degree_cap:
        raise ValueError(
            f"infeasible degree range: min_degree={cfg.min_degree} > max_degree={cfg.degree_cap}"
        )
    degrees = sample_degrees(cfg, phase_rng(cfg.seed, PHASE_DEGREES))
    p_block = cfg.target_ccf ** (1.0 / 3.0)

    order = np.argsort(degrees, kind="stable")
    block_size = np.ones(cfg.n, dtype=np.int64)
    blocks: list[np.ndarray] = []
    k = int(np.searchsorted(degrees[order], 2))  # degree-1 vertices stay out of blocks
    while k < cfg.n:
        size = int(degrees[order[k]]) + 1
        members = order[k:k + size]
        if members.size < 2:
            break
        blocks.append(members)
        block_size[members] = members.size
        k += size

    rng = phase_rng(cfg.seed, PHASE_BLOCKS)
    rows, cols = [], []
    by_size: dict[int, list[np.ndarray]] = {}
    for members in blocks:
        by_size.setdefault(members.size, []).append(members)
    for size in sorted(by_size):
        group = np.stack(by_size[size])
        iu, ju = np.triu_indices(size, k=1)
        keep = rng.random((group.shape[0], iu.size)) < p_block
        b, e = np.nonzero(keep)
        rows.append(group[b, iu[e]])
        cols.append(group[b, ju[e]])

    excess = np.maximum(degrees - p_block * (block_size - 1), 0.0)
    excess[block_size == 1] = degrees[block_size == 1]
    total = excess.sum()
    m = int(round(total / 2.0))
    if m > 0:
        rng = phase_rng(cfg.seed, PHASE_CHUNG_LU)
        prob = excess / total
        ends = rng.choice(cfg.n, size=(m, 2), p=prob)
        ends = ends[ends[:, 0] != ends[:, 1]]
        rows.append(ends[:, 0])
        cols.append(ends[:, 1])

    r = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    c = np.concatenate(cols) if cols else np.zeros(0, dtype=np.int64)
    lo, hi = np.minimum(r, c), np.maximum(r, c)
    pairs = np.unique(np.stack([lo, hi], axis=1), axis=0) if lo.size else np.zeros((0, 2), dtype=np.int64)
    return build_graph_arrays(pairs[:, 0], pairs[:, 1], None, cfg.n, symmetrize=True)


def largest_component(g: Graph) -> tuple[Graph, np.ndarray]:
    """Return the induced subgraph on the largest (weakly) connected component
    together with the original ids of its vertices, in increasing order."""
    _, labels = connected_components(g.adjacency, directed=True, connection="weak")
    counts = np.bincount(labels)
    keep = np.flatnonzero(labels == np.argmax(counts))
    sub = g.adjacency[keep][:, keep]
    return graph_from_csr(sub), keep


def local_clustering(g: Graph) -> np.ndarray:
    """Local clustering coefficients of a simple undirected graph (self-loops
    ignored); vertices with fewer than two neighbours get 0."""
    adj = g.adjacency.copy()
    adj.setdiag(0)
    adj.eliminate_zeros()
    adj.data[:] = 1.0
    deg = np.asarray(adj.sum(axis=1)).ravel()
    triangles = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel() / 2.0
    possible = deg * (deg - 1) / 2.0
    out = np.zeros(g.n)
    mask = possible > 0
    out[mask] = triangles[mask] / possible[mask]
    return out
