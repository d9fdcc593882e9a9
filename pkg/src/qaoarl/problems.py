"""MAXCUT problem instances: construction, generation, exact solving, file I/O.

A problem is an unweighted simple graph; the objective counts edges crossing
a vertex bipartition. Basis-state conventions used throughout the package:
an assignment is a length-N bitstring where bit i is the side of vertex i,
and for integer-encoded assignments bit i of the integer is vertex i.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, GraphGenerationError, ProblemFileError

EXACT_SOLVE_MAX_VERTICES = 28
_ENUM_CHUNK = 1 << 20
_PAIRING_RETRIES = 1000


@dataclass(frozen=True)
class MaxCutProblem:
    """Simple undirected graph; edges are canonicalized to sorted (i, j) pairs."""

    n_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if self.n_vertices < 1:
            raise ValueError(f"n_vertices must be positive, got {self.n_vertices}")
        canon = tuple(sorted((min(i, j), max(i, j)) for i, j in self.edges))
        object.__setattr__(self, "edges", canon)
        seen = set()
        for i, j in canon:
            if i == j:
                raise ValueError(f"self-loop at vertex {i}")
            if not (0 <= i < self.n_vertices and 0 <= j < self.n_vertices):
                raise ValueError(f"edge ({i}, {j}) out of range for {self.n_vertices} vertices")
            if (i, j) in seen:
                raise ValueError(f"duplicate edge ({i}, {j})")
            seen.add((i, j))

    @property
    def m(self) -> int:
        return len(self.edges)


def _assignment_bits(problem: MaxCutProblem, assignment) -> np.ndarray:
    if isinstance(assignment, str):
        if not all(c in "01" for c in assignment):
            raise ValueError(f"assignment must contain only '0'/'1': {assignment!r}")
        bits = np.fromiter((int(c) for c in assignment), dtype=np.int64)
    else:
        bits = np.asarray(assignment, dtype=np.int64)
        if bits.ndim != 1 or not np.isin(bits, (0, 1)).all():
            raise ValueError("assignment must be a flat 0/1 sequence")
    if bits.size != problem.n_vertices:
        raise ValueError(
            f"assignment length {bits.size} != {problem.n_vertices} vertices"
        )
    return bits


def cut_value(problem: MaxCutProblem, assignment) -> int:
    """Number of edges whose endpoints fall on different sides of the bipartition."""
    bits = _assignment_bits(problem, assignment)
    return int(sum(bits[i] != bits[j] for i, j in problem.edges))


@lru_cache(maxsize=16)
def _cut_spectrum_cached(problem: MaxCutProblem) -> np.ndarray:
    n = problem.n_vertices
    idx = np.arange(1 << n, dtype=np.int64)
    spec = np.zeros(1 << n, dtype=np.int16)
    for i, j in problem.edges:
        spec += (((idx >> i) ^ (idx >> j)) & 1).astype(np.int16)
    spec.setflags(write=False)
    return spec


def cut_spectrum(problem: MaxCutProblem) -> np.ndarray:
    """Cut value of every computational basis state, indexed by integer assignment.

    The result is cached per problem and returned read-only; callers needing a
    mutable copy must copy explicitly.
    """
    if problem.n_vertices > 24:
        raise BudgetError(
            f"cut_spectrum materializes 2^{problem.n_vertices} entries; limit is N <= 24"
        )
    return _cut_spectrum_cached(problem)


def _chunk_cuts(z: np.ndarray, edges) -> np.ndarray:
    acc = np.zeros(z.shape, dtype=np.int64)
    for i, j in edges:
        acc += ((z >> i) ^ (z >> j)) & 1
    return acc


def exact_maxcut(problem: MaxCutProblem) -> int:
    """Maximum cut value, by enumeration over bipartitions with vertex 0 pinned."""
    return best_cut_assignment(problem)[0]


def best_cut_assignment(problem: MaxCutProblem) -> tuple[int, str]:
    """Exact optimum and one witness assignment (vertex 0 on side 0).

    Enumerates the 2^(N-1) distinct bipartitions in chunks; refuses N beyond
    the enumeration budget.
    """
    n = problem.n_vertices
    if n > EXACT_SOLVE_MAX_VERTICES:
        raise BudgetError(
            f"exact enumeration supports N <= {EXACT_SOLVE_MAX_VERTICES}, got N = {n}"
        )
    if n == 1:
        return 0, "0"
    best_val = -1
    best_idx = 0
    total = 1 << (n - 1)
    for start in range(0, total, _ENUM_CHUNK):
        stop = min(start + _ENUM_CHUNK, total)
        # vertex 0 fixed to side 0: shift the counter into bits 1..n-1
        z = np.arange(start, stop, dtype=np.int64) << 1
        cuts = _chunk_cuts(z, problem.edges)
        k = int(np.argmax(cuts))
        if int(cuts[k]) > best_val:
            best_val = int(cuts[k])
            best_idx = int(z[k])
    witness = "".join(str((best_idx >> i) & 1) for i in range(n))
    return best_val, witness


def random_regular_graph(n: int, k: int, seed: int) -> MaxCutProblem:
    """k-regular graph on n vertices via the pairing model with rejection.

    Loops and multi-edges reject the whole pairing; bounded retries.
    """
    if n * k % 2 != 0:
        raise ValueError(f"no {k}-regular graph on {n} vertices: n*k must be even")
    if not 0 < k < n:
        raise ValueError(f"degree must satisfy 0 < k < n, got k={k}, n={n}")
    rng = np.random.default_rng(seed)
    stubs = np.repeat(np.arange(n), k)
    for _ in range(_PAIRING_RETRIES):
        perm = rng.permutation(stubs)
        pairs = perm.reshape(-1, 2)
        lo = np.minimum(pairs[:, 0], pairs[:, 1])
        hi = np.maximum(pairs[:, 0], pairs[:, 1])
        if (lo == hi).any():
            continue
        edges = {(int(a), int(b)) for a, b in zip(lo, hi)}
        if len(edges) != len(pairs):
            continue
        return MaxCutProblem(n, tuple(edges))
    raise GraphGenerationError(
        f"pairing model failed after {_PAIRING_RETRIES} retries for n={n}, k={k}"
    )


def random_average_degree_graph(n: int, avg_degree: float, seed: int) -> MaxCutProblem:
    """Uniform random graph with a fixed edge count m = round(n * avg_degree / 2).

    Fallback generator for sizes where exact regularity is parity-infeasible.
    """
    if n < 2:
        raise ValueError(f"need at least 2 vertices, got {n}")
    m = int(round(n * avg_degree / 2.0))
    all_pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    if not 0 < m <= len(all_pairs):
        raise ValueError(f"target edge count {m} out of range (max {len(all_pairs)})")
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(all_pairs), size=m, replace=False)
    return MaxCutProblem(n, tuple(all_pairs[int(c)] for c in chosen))


def save_problem(problem: MaxCutProblem, path) -> None:
    """Write the edge-list text format: first line N, then one 'i j' per line."""
    lines = [str(problem.n_vertices)]
    lines += [f"{i} {j}" for i, j in problem.edges]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_problem(path) -> MaxCutProblem:
    """Parse the edge-list text format; '#' starts a comment, blank lines ignored."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ProblemFileError(f"cannot read problem file {path}: {exc}") from None
    n = None
    edges = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if n is None:
            if len(fields) != 1:
                raise ProblemFileError(f"{path}:{lineno}: expected vertex count, got {raw!r}")
            try:
                n = int(fields[0])
            except ValueError:
                raise ProblemFileError(f"{path}:{lineno}: vertex count is not an integer") from None
            if n < 1:
                raise ProblemFileError(f"{path}:{lineno}: vertex count must be positive")
            continue
        if len(fields) != 2:
            raise ProblemFileError(f"{path}:{lineno}: expected 'i j', got {raw!r}")
        try:
            i, j = int(fields[0]), int(fields[1])
        except ValueError:
            raise ProblemFileError(f"{path}:{lineno}: edge endpoints must be integers") from None
        if not (0 <= i < n and 0 <= j < n):
            raise ProblemFileError(f"{path}:{lineno}: edge ({i}, {j}) out of range for n={n}")
        if i == j:
            raise ProblemFileError(f"{path}:{lineno}: self-loop at vertex {i}")
        edges.append((i, j))
    if n is None:
        raise ProblemFileError(f"{path}: empty file")
    try:
        return MaxCutProblem(n, tuple(edges))
    except ValueError as exc:
        raise ProblemFileError(f"{path}: {exc}") from None


def triangle() -> MaxCutProblem:
    return MaxCutProblem(3, ((0, 1), (1, 2), (0, 2)))


def cycle(n: int) -> MaxCutProblem:
    return MaxCutProblem(n, tuple((i, (i + 1) % n) for i in range(n)))
