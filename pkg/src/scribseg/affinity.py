"""Patch affinity graphs and set-association energies.

Nodes are patch-grid cells in row-major order; edge weights are cosine
similarities between patch feature vectors. Self-pairs count: for a node
with nonzero features the self-similarity is 1, and a zero-norm vector is
similar to nothing, itself included. Negative similarities are kept raw
unless a graph is built with clamp_negative, the escape hatch for inputs
whose association sums would otherwise sit near zero.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateFeaturesError,
    DimensionMismatchError,
    InvalidArgumentError,
    IsolatedNodeError,
)
from .grids import FeatureField

EPS_NORM = 1e-12
EPS_DEN = 1e-8


def guarded_ratio(num, den, eps=EPS_DEN):
    """num / den with a sign-preserving clamp on tiny denominators.

    Healthy denominators are untouched so ratios of equal sums stay exact;
    0/0 evaluates to 0.
    """
    if abs(den) >= eps:
        return num / den
    if abs(num) < eps:
        return 0.0
    return num / (eps if den >= 0.0 else -eps)


def cosine_similarity(p, q):
    """Cosine of the angle between two vectors; 0 if either norm < 1e-12."""
    p = np.asarray(p, dtype=np.float64)
    q = np.asarray(q, dtype=np.float64)
    if p.shape != q.shape or p.ndim != 1:
        raise DimensionMismatchError(
            f"vectors must share one dim, got {p.shape} vs {q.shape}")
    np_, nq = np.linalg.norm(p), np.linalg.norm(q)
    if np_ < EPS_NORM or nq < EPS_NORM:
        return 0.0
    return float(np.dot(p, q) / (np_ * nq))


@dataclass(frozen=True)
class SimilarityGraph:
    """Cosine-affinity graph over a patch grid.

    normalized holds unit-norm feature rows (zero rows for zero-norm
    vectors), enough for the factored energy routes. materialized is the
    full n x n matrix, built on demand; it is exactly symmetric, clipped
    to [-1, 1], with unit diagonal at nonzero nodes.
    """

    n: int
    grid_h: int
    grid_w: int
    normalized: np.ndarray
    materialized: np.ndarray | None = None
    clamp_negative: bool = False

    def require_matrix(self):
        if self.materialized is None:
            raise InvalidArgumentError(
                "operation needs a materialized graph; "
                "build with materialize=True")
        return self.materialized


def build_graph(features: FeatureField, materialize=False,
                clamp_negative=False) -> SimilarityGraph:
    """Build the cosine-similarity graph of a patch-feature field."""
    flat = features.flat()
    norms = np.linalg.norm(flat, axis=1)
    if (norms < EPS_NORM).all():
        raise DegenerateFeaturesError(
            "every feature vector has norm below 1e-12")
    normalized = np.zeros_like(flat)
    ok = norms >= EPS_NORM
    normalized[ok] = flat[ok] / norms[ok, None]
    normalized.setflags(write=False)

    matrix = None
    if materialize or clamp_negative:
        m = normalized @ normalized.T
        m = 0.5 * (m + m.T)  # dgemm output is not exactly symmetric
        np.clip(m, -1.0, 1.0, out=m)
        m[np.diag_indices_from(m)] = np.where(ok, 1.0, 0.0)
        if clamp_negative:
            np.clip(m, 0.0, 1.0, out=m)
        m.setflags(write=False)
        matrix = m
    return SimilarityGraph(
        n=flat.shape[0], grid_h=features.grid_h, grid_w=features.grid_w,
        normalized=normalized, materialized=matrix,
        clamp_negative=clamp_negative)


@dataclass(frozen=True)
class Bipartition:
    """Two-way node split; in_a[i] is True for side A."""

    in_a: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.in_a, dtype=bool)
        if a.ndim != 1:
            raise InvalidArgumentError("partition must be a flat bool array")
        a.setflags(write=False)
        object.__setattr__(self, "in_a", a)

    @property
    def n(self):
        return self.in_a.shape[0]


def _check_indices(graph, idx):
    idx = np.asarray(idx)
    if idx.dtype == bool:
        # membership mask over all nodes
        if idx.shape != (graph.n,):
            raise DimensionMismatchError(
                f"boolean node mask of shape {idx.shape}, graph has "
                f"{graph.n} nodes")
        return np.flatnonzero(idx)
    idx = idx.astype(np.intp, casting="safe").reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= graph.n):
        raise InvalidArgumentError(
            f"node index out of range [0, {graph.n}): "
            f"min {idx.min()}, max {idx.max()}")
    return idx


def set_association(graph: SimilarityGraph, xs, ys):
    """C(X, Y): double sum of similarities over X x Y, self-pairs included."""
    m = graph.require_matrix()
    xs = _check_indices(graph, xs)
    ys = _check_indices(graph, ys)
    return float(m[np.ix_(xs, ys)].sum())


def set_association_factored(graph: SimilarityGraph, xs, ys):
    """C(X, Y) via summed normalized features, O(|X| + |Y|) dot products.

    Only valid for raw (unclamped) graphs, where the double sum factors.
    """
    if graph.clamp_negative:
        raise InvalidArgumentError(
            "factored association is not defined for clamped graphs")
    xs = _check_indices(graph, xs)
    ys = _check_indices(graph, ys)
    u = graph.normalized[xs].sum(axis=0)
    v = graph.normalized[ys].sum(axis=0)
    return float(u @ v)


def _partition_sides(graph, part: Bipartition):
    if part.n != graph.n:
        raise DimensionMismatchError(
            f"partition over {part.n} nodes, graph has {graph.n}")
    nodes = np.arange(graph.n)
    return nodes[part.in_a], nodes[~part.in_a]


def ncut_energy(graph: SimilarityGraph, part: Bipartition):
    """Normalized-cut value C(A,B)/C(A,V) + C(A,B)/C(B,V)."""
    a, b = _partition_sides(graph, part)
    v = np.arange(graph.n)
    cab = set_association(graph, a, b)
    return guarded_ratio(cab, set_association(graph, a, v)) + \
        guarded_ratio(cab, set_association(graph, b, v))


def gsa_set_energy(graph: SimilarityGraph, part: Bipartition):
    """Within-set association share C(A,A)/C(A,V) + C(B,B)/C(B,V).

    Complementary to ncut_energy: for healthy denominators the two sum
    to 2 because C(A,V) = C(A,A) + C(A,B).
    """
    a, b = _partition_sides(graph, part)
    v = np.arange(graph.n)
    return guarded_ratio(set_association(graph, a, a),
                         set_association(graph, a, v)) + \
        guarded_ratio(set_association(graph, b, b),
                      set_association(graph, b, v))


def spectral_bipartition(graph: SimilarityGraph, tol=1e-8,
                         max_iter=10000) -> Bipartition:
    """Fiedler-vector split of the similarity graph.

    Negative similarities are clamped to 0 for the Laplacian; the second-
    smallest eigenvector of the symmetric normalized Laplacian is found by
    power iteration with deflation of the known null vector, thresholded
    at 0, and the side containing node 0 is labeled A.
    """
    w = graph.require_matrix().copy()
    np.clip(w, 0.0, None, out=w)

    deg = w.sum(axis=1)
    if (deg <= 0.0).any():
        bad = int(np.argmax(deg <= 0.0))
        raise IsolatedNodeError(
            f"node {bad} has zero total affinity; graph is disconnected "
            "at an isolated node")

    d_inv_sqrt = 1.0 / np.sqrt(deg)
    # M = 2I - L_sym = I + D^-1/2 W D^-1/2; top eigenvector of M is the
    # known null vector of L_sym, the second one is the Fiedler vector.
    m = w * d_inv_sqrt[:, None] * d_inv_sqrt[None, :]
    m[np.diag_indices_from(m)] += 1.0

    v1 = np.sqrt(deg)
    v1 /= np.linalg.norm(v1)

    rng = np.random.default_rng(0)
    x = rng.standard_normal(graph.n)
    x -= (x @ v1) * v1
    nx = np.linalg.norm(x)
    if nx < EPS_NORM:  # n == 1 has no orthogonal complement
        return Bipartition(np.ones(graph.n, dtype=bool))
    x /= nx
    for _ in range(max_iter):
        y = m @ x
        y -= (y @ v1) * v1
        ny = np.linalg.norm(y)
        if ny < EPS_NORM:
            break
        y /= ny
        # eigenvectors are sign-ambiguous; compare up to sign
        if min(np.abs(y - x).max(), np.abs(y + x).max()) < tol:
            x = y
            break
        x = y

    side = x >= 0.0 if x[0] >= 0.0 else x < 0.0
    return Bipartition(side)
