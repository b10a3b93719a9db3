"""Systems of diagonal neighborhoods: which point tuples a cochain may see.

Admissible tuples at degree p have p+1 distinct entries; we store only the
strictly increasing representative of each orbit (the antisymmetric basis),
so repeated-index tuples are excluded by construction.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .space import MetricMeasureSpace


class AdmissibilityError(ValueError):
    """Raised for malformed systems or tuple sets."""


@dataclass(frozen=True, eq=False)
class NeighborhoodSystem:
    """Admissibility rule for point tuples.

    kind:
      full        -- every tuple of distinct points
      rips        -- max pairwise distance < eps (<= eps with strict=False)
      hausdorff   -- some sample point is within eps of every entry
      cover       -- all entries lie in a single cover set
    """

    kind: str
    eps: float | None = None
    cover_sets: tuple[frozenset, ...] | None = None
    strict: bool = True

    def __post_init__(self):
        if self.kind not in ("full", "rips", "hausdorff", "cover"):
            raise AdmissibilityError(f"unknown system kind {self.kind!r}")
        if self.kind in ("rips", "hausdorff"):
            if self.eps is None or not (self.eps > 0):
                raise AdmissibilityError(f"{self.kind} system needs eps > 0")
        if self.kind == "cover" and not self.cover_sets:
            raise AdmissibilityError("cover system needs at least one set")

    def is_admissible(self, space: MetricMeasureSpace, idx) -> bool:
        """Whether the distinct-index tuple idx is admissible (any order)."""
        idx = np.asarray(idx, dtype=int)
        if len(set(idx.tolist())) != idx.size:
            return False
        if self.kind == "full":
            return True
        if self.kind == "rips":
            if idx.size == 1:
                return True
            sub = space.dist[np.ix_(idx, idx)]
            m = float(sub.max())
            return m < self.eps if self.strict else m <= self.eps
        if self.kind == "hausdorff":
            # Discrete stand-in for distance to the diagonal: centers are
            # restricted to sample points, which under-approximates but keeps
            # face closure and symmetry exact.
            radii = space.dist[:, idx].max(axis=1)
            return bool(radii.min() <= self.eps)
        members = set(idx.tolist())
        return any(members <= s for s in self.cover_sets)


def full_system() -> NeighborhoodSystem:
    return NeighborhoodSystem("full")


def rips_system(eps: float, strict: bool = True) -> NeighborhoodSystem:
    return NeighborhoodSystem("rips", eps=eps, strict=strict)


def hausdorff_system(eps: float) -> NeighborhoodSystem:
    return NeighborhoodSystem("hausdorff", eps=eps)


def cover_system(sets) -> NeighborhoodSystem:
    return NeighborhoodSystem("cover", cover_sets=tuple(frozenset(s) for s in sets))


@dataclass(frozen=True, eq=False)
class TupleSet:
    """Strictly increasing (p+1)-tuples of point indices in lexicographic order."""

    degree: int
    tuples: np.ndarray  # shape (m, degree+1), int64

    def __post_init__(self):
        t = np.ascontiguousarray(np.asarray(self.tuples, dtype=np.int64))
        if t.ndim != 2 or t.shape[1] != self.degree + 1:
            raise AdmissibilityError(
                f"tuple array shape {t.shape} does not match degree {self.degree}"
            )
        if t.shape[0] > 0:
            if not (np.diff(t, axis=1) > 0).all():
                raise AdmissibilityError("tuples must be strictly increasing")
            order = np.lexsort(t.T[::-1])
            if not np.array_equal(order, np.arange(t.shape[0])):
                raise AdmissibilityError("tuples must be lexicographically sorted")
            flat = t.view([("", t.dtype)] * t.shape[1]).ravel()
            if np.unique(flat).size != t.shape[0]:
                raise AdmissibilityError("duplicate tuples")
        t.setflags(write=False)
        object.__setattr__(self, "tuples", t)

    @property
    def size(self) -> int:
        return self.tuples.shape[0]

    @cached_property
    def _index(self) -> dict:
        return {tuple(row): i for i, row in enumerate(self.tuples.tolist())}

    def index_of(self, sorted_tuple) -> int:
        """Row index of a strictly increasing tuple; KeyError if absent."""
        return self._index[tuple(int(v) for v in sorted_tuple)]

    def contains(self, sorted_tuple) -> bool:
        return tuple(int(v) for v in sorted_tuple) in self._index

    def to_json(self) -> dict:
        return {"schema": 1, "degree": self.degree, "tuples": self.tuples.tolist()}

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")


def _sorted_unique_rows(rows: list[tuple]) -> np.ndarray:
    if not rows:
        return np.empty((0, 0), dtype=np.int64)
    return np.array(sorted(set(rows)), dtype=np.int64)


def _cliques(adj: np.ndarray, size: int) -> list[tuple]:
    """All strictly increasing cliques of the given size in an adjacency matrix."""
    n = adj.shape[0]
    if size == 1:
        return [(i,) for i in range(n)]
    out: list[tuple] = []
    neighbors = [np.nonzero(adj[i])[0] for i in range(n)]

    def grow(prefix: tuple, candidates: np.ndarray):
        if len(prefix) == size:
            out.append(prefix)
            return
        for v in candidates:
            nxt = candidates[(candidates > v)]
            nxt = nxt[adj[v, nxt]]
            if len(prefix) + 1 + nxt.size >= size or len(prefix) + 1 == size:
                grow(prefix + (int(v),), nxt)

    for i in range(n):
        cand = neighbors[i][neighbors[i] > i]
        grow((i,), cand)
    return out


def enumerate_tuples(space: MetricMeasureSpace, system: NeighborhoodSystem, p: int) -> TupleSet:
    """All admissible degree-p tuples, as sorted strictly increasing rows."""
    if p < 0:
        raise AdmissibilityError("degree must be nonnegative")
    n = space.n
    k = p + 1
    if k > n:
        return TupleSet(p, np.empty((0, k), dtype=np.int64))
    if system.kind == "full":
        rows = np.array(list(itertools.combinations(range(n), k)), dtype=np.int64)
        return TupleSet(p, rows.reshape(-1, k))
    if system.kind == "rips":
        if k == 1:
            return TupleSet(0, np.arange(n, dtype=np.int64)[:, None])
        within = space.dist < system.eps if system.strict else space.dist <= system.eps
        np.fill_diagonal(within, False)
        rows = _cliques(within, k)
        arr = _sorted_unique_rows(rows)
        return TupleSet(p, arr.reshape(-1, k) if arr.size else np.empty((0, k), dtype=np.int64))
    if system.kind == "hausdorff":
        rows: set[tuple] = set()
        for c in range(n):
            ball = np.nonzero(space.dist[c] <= system.eps)[0]
            if ball.size >= k:
                rows.update(itertools.combinations(ball.tolist(), k))
        arr = _sorted_unique_rows(sorted(rows))
        return TupleSet(p, arr.reshape(-1, k) if arr.size else np.empty((0, k), dtype=np.int64))
    rows = set()
    for s in system.cover_sets:
        members = sorted(s)
        if len(members) >= k:
            rows.update(itertools.combinations(members, k))
    arr = _sorted_unique_rows(sorted(rows))
    return TupleSet(p, arr.reshape(-1, k) if arr.size else np.empty((0, k), dtype=np.int64))


def check_face_closure(lower: TupleSet, upper: TupleSet) -> tuple[bool, tuple | None]:
    """Every face of an upper tuple must be present in the lower set.

    Returns (ok, witness): witness is (tuple, missing_face) on failure.
    """
    if upper.degree != lower.degree + 1:
        raise AdmissibilityError("face closure needs consecutive degrees")
    for row in upper.tuples.tolist():
        for k in range(len(row)):
            face = tuple(row[:k] + row[k + 1 :])
            if not lower.contains(face):
                return False, (tuple(row), face)
    return True, None


def system_dominates(
    finer: NeighborhoodSystem,
    coarser: NeighborhoodSystem,
    space: MetricMeasureSpace,
    p_max: int,
) -> tuple[bool, tuple | None]:
    """Whether every finer-admissible tuple (degree <= p_max) is coarser-admissible.

    Returns (ok, witness tuple on failure).
    """
    for p in range(p_max + 1):
        ts = enumerate_tuples(space, finer, p)
        for row in ts.tuples.tolist():
            if not coarser.is_admissible(space, row):
                return False, tuple(row)
    return True, None
