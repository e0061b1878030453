"""Graph topologies, combination matrices and Perron eigenvectors.

Conventions: ``edges[l, k]`` is True when agent ``l`` may send to agent ``k``
(``l`` is in the neighbourhood of ``k``), and a combination matrix ``A`` is
left-stochastic, i.e. every *column* sums to one and ``A[l, k]`` is the weight
agent ``k`` puts on agent ``l``.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    EigenvectorIncompatible,
    NonConvergence,
    NotPrimitive,
    TopologyInvalid,
    ValidationError,
)

STOCHASTIC_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Adjacency:
    """Directed incidence matrix with self-loops on the diagonal."""

    edges: np.ndarray

    def __post_init__(self):
        e = np.array(self.edges, dtype=bool)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] < 1:
            raise ValidationError(f"adjacency must be a non-empty square matrix, got shape {e.shape}")
        e.setflags(write=False)
        object.__setattr__(self, "edges", e)

    @property
    def n(self) -> int:
        return self.edges.shape[0]

    @property
    def self_loops(self) -> np.ndarray:
        return np.diag(self.edges).copy()

    @property
    def is_symmetric(self) -> bool:
        return bool(np.array_equal(self.edges, self.edges.T))

    def neighbors(self, k: int) -> np.ndarray:
        """Indices l with l in N_k (including k itself when it has a self-loop)."""
        return np.flatnonzero(self.edges[:, k])

    def __eq__(self, other):
        return isinstance(other, Adjacency) and np.array_equal(self.edges, other.edges)

    __hash__ = None

    @classmethod
    def from_edge_list(cls, n, pairs, *, undirected=True, self_loops=True):
        e = np.zeros((n, n), dtype=bool)
        for l, k in pairs:
            e[l, k] = True
            if undirected:
                e[k, l] = True
        if self_loops:
            np.fill_diagonal(e, True)
        return cls(e)

    @classmethod
    def complete(cls, n):
        return cls(np.ones((n, n), dtype=bool))

    @classmethod
    def ring(cls, n):
        return cls.from_edge_list(n, [(k, (k + 1) % n) for k in range(n)])

    @classmethod
    def star(cls, n, hub=0):
        return cls.from_edge_list(n, [(hub, k) for k in range(n) if k != hub])

    @classmethod
    def from_matrix(cls, A, atol=0.0):
        return cls(np.abs(np.asarray(A, dtype=float)) > atol)


def _reachable(edges, source, reverse=False):
    n = edges.shape[0]
    seen = np.zeros(n, dtype=bool)
    seen[source] = True
    queue = deque([source])
    while queue:
        u = queue.popleft()
        nxt = edges[:, u] if reverse else edges[u]
        for v in np.flatnonzero(nxt & ~seen):
            seen[v] = True
            queue.append(v)
    return seen


def check_strong_connectivity(adj: Adjacency) -> bool:
    """True iff the graph is strongly connected and has at least one self-loop."""
    e = adj.edges
    if not e.diagonal().any():
        return False
    return bool(_reachable(e, 0).all() and _reachable(e, 0, reverse=True).all())


def validate_left_stochastic(A, adj: Adjacency | None = None, tol=STOCHASTIC_TOL) -> np.ndarray:
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError(f"combination matrix must be square, got shape {A.shape}")
    if (A < 0).any() or not np.isfinite(A).all():
        raise ValidationError("combination matrix has negative or non-finite entries")
    dev = np.abs(A.sum(axis=0) - 1.0).max()
    if dev > tol:
        raise ValidationError(f"columns of the combination matrix must sum to 1 (max deviation {dev:.3g})")
    if adj is not None:
        if adj.n != A.shape[0]:
            raise ValidationError("matrix and adjacency sizes differ")
        if (A[~adj.edges] != 0).any():
            raise ValidationError("combination matrix has weight on a forbidden edge")
        if (A[adj.edges] <= 0).any():
            raise ValidationError("combination matrix has zero weight on an allowed edge")
    return A


def perron_eigenvector(A, tol=1e-12, max_iter=100_000) -> np.ndarray:
    """Power iteration for the positive fixed point ``A pi = pi``, ``sum(pi) = 1``."""
    A = validate_left_stochastic(A)
    if not check_strong_connectivity(Adjacency.from_matrix(A)):
        raise NotPrimitive("combination matrix is not primitive (graph not strongly connected or no self-loop)")
    n = A.shape[0]
    pi = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        nxt = A @ pi
        nxt /= nxt.sum()
        if np.abs(A @ nxt - nxt).max() <= tol:
            if (nxt <= 0).any():
                raise NotPrimitive("Perron vector has non-positive entries")
            return nxt
        pi = nxt
    raise NonConvergence(f"power iteration did not reach tol={tol} in {max_iter} iterations")


def _initial_weights(adj, rng, low=0.1, high=1.0):
    A0 = np.zeros((adj.n, adj.n))
    A0[adj.edges] = rng.uniform(low, high, size=int(adj.edges.sum()))
    return A0


def gen_left_stochastic(adj: Adjacency, rng: np.random.Generator) -> np.ndarray:
    """Random weights on the allowed entries, then column normalisation."""
    if not check_strong_connectivity(adj):
        raise TopologyInvalid("adjacency is not strongly connected with a self-loop")
    A0 = _initial_weights(adj, rng)
    return A0 / A0.sum(axis=0, keepdims=True)


def gen_doubly_stochastic(adj: Adjacency, rng: np.random.Generator, tol=1e-10, max_iter=10_000) -> np.ndarray:
    """Sinkhorn alternation of row and column normalisation.

    Columns are normalised last, so they sum to one to rounding; rows are within ``tol``.
    """
    if not check_strong_connectivity(adj):
        raise TopologyInvalid("adjacency is not strongly connected with a self-loop")
    A = _initial_weights(adj, rng)
    for _ in range(max_iter):
        A /= A.sum(axis=1, keepdims=True)
        A /= A.sum(axis=0, keepdims=True)
        if np.abs(A.sum(axis=1) - 1.0).max() < tol:
            return A
    raise NonConvergence(f"Sinkhorn normalisation did not converge in {max_iter} iterations")


def uniform_averaging(adj: Adjacency) -> np.ndarray:
    """a_lk = 1/|N_k| for every l in N_k."""
    A = adj.edges.astype(float)
    return A / A.sum(axis=0, keepdims=True)


def matrix_from_eigenvector(adj: Adjacency, pi) -> np.ndarray:
    """Left-stochastic matrix on an undirected topology with prescribed Perron vector.

    Off-diagonal neighbours receive ``a_lk = pi_l`` and the self-weight takes the rest.
    """
    if not adj.is_symmetric or not adj.self_loops.all():
        raise TopologyInvalid("construction requires an undirected adjacency with all self-loops")
    pi = np.asarray(pi, dtype=float)
    if pi.shape != (adj.n,) or (pi <= 0).any() or abs(pi.sum() - 1.0) > 1e-10:
        raise EigenvectorIncompatible("pi must be strictly positive and sum to 1", agents=np.flatnonzero(pi <= 0))
    off = adj.edges & ~np.eye(adj.n, dtype=bool)
    A = np.where(off, pi[:, None], 0.0)
    diag = 1.0 - A.sum(axis=0)
    bad = np.flatnonzero(diag <= 0)
    if bad.size:
        raise EigenvectorIncompatible(f"self-weights would be non-positive at agents {bad.tolist()}", agents=bad)
    A[np.diag_indices(adj.n)] = diag
    return A


def gen_erdos_renyi(n: int, p: float, rng: np.random.Generator, max_attempts=100) -> Adjacency:
    """Undirected G(n, p) with all self-loops, redrawn until connected."""
    if not 0 < p <= 1:
        raise ValidationError(f"edge probability must lie in (0, 1], got {p}")
    for _ in range(max_attempts):
        upper = np.triu(rng.random((n, n)) < p, k=1)
        adj = Adjacency(upper | upper.T | np.eye(n, dtype=bool))
        if check_strong_connectivity(adj):
            return adj
    raise TopologyInvalid(f"no connected G({n}, {p}) draw in {max_attempts} attempts")


# plain-text dense matrix format: first line n, then n whitespace-separated rows

def format_matrix(M) -> str:
    M = np.asarray(M)
    lines = [str(M.shape[0])]
    if M.dtype == bool or np.issubdtype(M.dtype, np.integer):
        lines += [" ".join(str(int(v)) for v in row) for row in M]
    else:
        lines += [" ".join(repr(float(v)) for v in row) for row in M]
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> np.ndarray:
    rows = [line.split() for line in text.strip().splitlines() if line.strip()]
    if not rows:
        raise ValidationError("empty matrix file")
    try:
        n = int(rows[0][0])
        M = np.array([[float(v) for v in r] for r in rows[1:]])
    except ValueError as exc:
        raise ValidationError(f"malformed matrix file: {exc}") from None
    if len(rows[0]) != 1 or M.shape != (n, n):
        raise ValidationError(f"matrix file header says n={rows[0]}, body has shape {M.shape}")
    return M


def write_matrix(path, M):
    Path(path).write_text(format_matrix(M))


def read_matrix(path) -> np.ndarray:
    return parse_matrix(Path(path).read_text())
