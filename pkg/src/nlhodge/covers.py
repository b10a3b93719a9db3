"""Ball covers, partitions of unity, Mayer-Vietoris rows, and slice homotopies.

A cover is built from sample-point centers: shrunken balls of radius eps+eta
and big balls of radius eps+2*eta, with linear bump hats between the two
radii. Telescoped tensor powers of the hats give a partition of unity on
every admissible tuple, which drives both the Mayer-Vietoris reconstruction
and the local Poincare homotopy.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from math import comb

import numpy as np
import scipy.sparse as sp

from .space import MetricMeasureSpace
from .neighborhoods import NeighborhoodSystem, TupleSet
from .cochains import build_coboundary
from .cohomology import rank_exact, BettiReport, PRIME_MAIN
from .hodge import WeightedComplex


class CoverError(ValueError):
    """Raised for covers that fail their structural preconditions."""


class SliceEmptyError(RuntimeError):
    """Raised when no admissible slice point exists for an intersection."""


@dataclass(eq=False)
class CoverSystem:
    """Ball cover around sample-point centers.

    big ball alpha  = { x : dist(x, center_alpha) < eps + 2*eta }
    small ball alpha = { x : dist(x, center_alpha) < eps + eta }
    bump_alpha(x) = clip((eps + 2*eta - dist(x, center_alpha)) / eta, 0, 1),
    so each hat is 1 on its small ball and 0 outside its big ball.
    """

    space: MetricMeasureSpace
    system: NeighborhoodSystem
    eps: float
    eta: float
    centers: np.ndarray
    big_masks: np.ndarray = field(init=False)
    small_masks: np.ndarray = field(init=False)
    bumps: np.ndarray = field(init=False)

    def __post_init__(self):
        centers = np.asarray(self.centers, dtype=int)
        if centers.size == 0:
            raise CoverError("cover needs at least one center")
        if self.eta <= 0 or self.eps <= 0:
            raise CoverError("eps and eta must be positive")
        d = self.space.dist[centers]  # (n_balls, n)
        covered = (d < self.eta).any(axis=0)
        if not covered.all():
            missing = np.nonzero(~covered)[0]
            raise CoverError(
                f"eta-balls around centers do not cover points {missing.tolist()[:8]}"
            )
        self.centers = centers
        self.big_masks = d < self.eps + 2.0 * self.eta
        self.small_masks = d < self.eps + self.eta
        self.bumps = np.clip((self.eps + 2.0 * self.eta - d) / self.eta, 0.0, 1.0)

    @property
    def n_balls(self) -> int:
        return self.centers.size

    def intersection_mask(self, alphas) -> np.ndarray:
        mask = np.ones(self.space.n, dtype=bool)
        for a in alphas:
            mask &= self.big_masks[a]
        return mask


def default_cover(space: MetricMeasureSpace, system: NeighborhoodSystem, every: int = 1,
                  eta: float | None = None, eps: float | None = None) -> CoverSystem:
    """Cover centered on every `every`-th sample point.

    eta defaults to just above the centers' covering radius, keeping balls as
    small as the sample allows (tight balls keep the slice sets nonempty).
    eps defaults to the system's scale; systems without one (full) need it
    passed explicitly.
    """
    centers = np.arange(0, space.n, every)
    if eta is None:
        cov_radius = float(space.dist[centers].min(axis=0).max())
        base = cov_radius if cov_radius > 0 else space.mesh_width() / 2.0
        eta = 1.02 * base if base > 0 else 1e-3
    eps = system.eps if eps is None else eps
    if eps is None:
        raise CoverError("system carries no scale; pass eps explicitly")
    return CoverSystem(space, system, eps, eta, centers)


@dataclass(eq=False)
class LocalComplex:
    """Tuple sets of a weighted complex restricted to an intersection."""

    alphas: tuple
    mask: np.ndarray
    tuple_sets: list[TupleSet]
    global_rows: list[np.ndarray]
    _cobs: dict = field(default_factory=dict)

    def dim(self, p: int) -> int:
        return self.tuple_sets[p].size if p < len(self.tuple_sets) else 0

    def coboundary(self, p: int) -> sp.csr_matrix:
        if p not in self._cobs:
            self._cobs[p] = build_coboundary(self.tuple_sets[p], self.tuple_sets[p + 1]).matrix
        return self._cobs[p]


def restrict_complex(cover: CoverSystem, complex_: WeightedComplex, alphas,
                     max_degree: int) -> LocalComplex:
    """Restrict global tuple sets to tuples supported inside an intersection."""
    alphas = tuple(sorted(int(a) for a in alphas))
    mask = cover.intersection_mask(alphas)
    tuple_sets, global_rows = [], []
    for p in range(max_degree + 1):
        ts = complex_.tuple_sets[p]
        if ts.size == 0:
            sel = np.empty(0, dtype=int)
        else:
            sel = np.nonzero(mask[ts.tuples].all(axis=1))[0]
        tuple_sets.append(TupleSet(p, ts.tuples[sel].reshape(-1, p + 1)))
        global_rows.append(sel)
    return LocalComplex(alphas, mask, tuple_sets, global_rows)


@dataclass(eq=False)
class PartitionOfUnity:
    """Telescoped tensor-power hats: chi_alpha = t_alpha * prod_{beta<alpha} (1 - t_beta)."""

    cover: CoverSystem

    def chi(self, tuples: np.ndarray) -> np.ndarray:
        """(n_balls, m) matrix of chi values on the given tuple rows."""
        if tuples.size == 0:
            return np.zeros((self.cover.n_balls, 0))
        t = self.cover.bumps[:, tuples].prod(axis=2)  # (n_balls, m)
        chi = np.empty_like(t)
        carry = np.ones(t.shape[1])
        for a in range(t.shape[0]):
            chi[a] = t[a] * carry
            carry = carry * (1.0 - t[a])
        return chi

    def sums(self, tuples: np.ndarray) -> np.ndarray:
        return self.chi(tuples).sum(axis=0)


def partition_supported(cover: CoverSystem, tuples: np.ndarray) -> bool:
    """Whether every tuple lies wholly inside some small ball (sum-to-1 condition)."""
    if tuples.size == 0:
        return True
    inside = cover.small_masks[:, tuples].all(axis=2)  # (n_balls, m)
    return bool(inside.any(axis=0).all())


def _nonempty_combos(cover: CoverSystem, depth: int) -> list[tuple]:
    """Sorted center-index combos (size depth+1) with nonempty big-ball intersection."""
    n = cover.n_balls
    out = []

    def grow(prefix: tuple, mask: np.ndarray, start: int):
        if len(prefix) == depth + 1:
            out.append(prefix)
            return
        for b in range(start, n):
            sub = mask & cover.big_masks[b]
            if sub.any():
                grow(prefix + (b,), sub, b + 1)

    grow((), np.ones(cover.space.n, dtype=bool), 0)
    return out


# ---------------------------------------------------------------------------
# Mayer-Vietoris rank certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MVCertificate:
    degree: int
    q_max: int
    injective: bool
    rows: tuple  # per-q dicts: dim, rank_in, dim_kernel, exact
    reconstruction_ok: bool
    exact: bool
    crosscheck: str = "skipped"  # global-assembly rank comparison: pass/skipped/fail
    multiplicity_histogram: tuple = ()  # (#covering balls, #tuples) pairs

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "degree": self.degree,
            "q_max": self.q_max,
            "injective": self.injective,
            "rows": list(self.rows),
            "reconstruction_ok": self.reconstruction_ok,
            "exact": self.exact,
            "crosscheck": self.crosscheck,
            "multiplicity_histogram": [list(pair) for pair in self.multiplicity_histogram],
        }


def _cech_sign(alpha: int, rest: tuple) -> tuple[tuple, int]:
    """Sorted index set and sign for the component F_{alpha, rest...}; 0 on repeats."""
    if alpha in rest:
        return (), 0
    pos = sum(1 for r in rest if r < alpha)
    merged = tuple(sorted((alpha,) + rest))
    return merged, (-1) ** pos


def _simplex_coface_matrix(s: int, q: int) -> np.ndarray:
    """Coface matrix of the full simplex on s vertices, level q to q+1.

    Rows are (q+2)-subsets, columns (q+1)-subsets, both in lexicographic
    order; dropping the i-th vertex of a row subset hits its face column
    with sign (-1)^i.
    """
    los = list(combinations(range(s), q + 1))
    his = list(combinations(range(s), q + 2))
    lo_index = {c: k for k, c in enumerate(los)}
    M = np.zeros((len(his), len(los)), dtype=np.int64)
    for r, hi in enumerate(his):
        for i in range(len(hi)):
            M[r, lo_index[hi[:i] + hi[i + 1 :]]] += (-1) ** i
    return M


def _tuple_ball_membership(complex_: WeightedComplex, cover: CoverSystem, p: int) -> np.ndarray:
    """(n_balls, m) bool: tuple row fully inside the big ball."""
    ts = complex_.tuple_sets[p]
    if ts.size == 0:
        return np.zeros((cover.n_balls, 0), dtype=bool)
    return cover.big_masks[:, ts.tuples].all(axis=2)


def _blockwise_ranks(s_counts: dict[int, int], q_max: int) -> tuple[list[int], list[int]]:
    """Dims and exact ranks of the Cech differentials, summed over tuple blocks.

    The restriction row splits as a direct sum over global tuples: the block
    of a tuple covered by s balls is the coface complex of the full simplex
    on those s balls (restriction maps are coordinate projections, so the
    splitting is a permutation of the assembled matrices). Each distinct s is
    eliminated once over the prime field and the ranks are summed.
    """
    dims = [0] * (q_max + 2)
    ranks = [0] * (q_max + 1)
    rank_cache: dict[tuple[int, int], int] = {}
    for s, count in s_counts.items():
        for q in range(q_max + 2):
            dims[q] += comb(s, q + 1) * count
        for q in range(q_max + 1):
            if comb(s, q + 1) == 0 or comb(s, q + 2) == 0:
                continue
            key = (s, q)
            if key not in rank_cache:
                rank_cache[key] = rank_exact(sp.csr_matrix(_simplex_coface_matrix(s, q)))
            ranks[q] += rank_cache[key] * count
    return dims, ranks


def _enumerate_blocks(complex_: WeightedComplex, cover: CoverSystem, p: int,
                      q_max: int) -> list[list[tuple]]:
    """Per level q <= q_max: (combo, LocalComplex) pairs with nonzero dim."""
    levels = []
    for q in range(q_max + 1):
        blocks = []
        for combo in _nonempty_combos(cover, q):
            loc = restrict_complex(cover, complex_, combo, p)
            if loc.dim(p) > 0:
                blocks.append((combo, loc))
        levels.append(blocks)
    return levels


def _assembled_matrices(levels, m_global, p):
    """Global sparse restriction and Cech-difference matrices (crosscheck path)."""
    offsets = []
    for blocks in levels:
        off, total = {}, 0
        for combo, loc in blocks:
            off[combo] = total
            total += loc.dim(p)
        offsets.append((off, total))

    rows, cols = [], []
    off0, dim0 = offsets[0]
    for combo, loc in levels[0]:
        base = off0[combo]
        for i, g in enumerate(loc.global_rows[p]):
            rows.append(base + i)
            cols.append(int(g))
    R = sp.csr_matrix(
        (np.ones(len(rows), dtype=np.int64), (rows, cols)), shape=(dim0, m_global)
    )

    deltas = []
    for q in range(len(levels) - 1):
        off_lo, dim_lo = offsets[q]
        off_hi, dim_hi = offsets[q + 1]
        lo_lookup = {combo: loc for combo, loc in levels[q]}
        rws, cls, dat = [], [], []
        for combo, loc in levels[q + 1]:
            base_hi = off_hi[combo]
            t_hi = loc.tuple_sets[p].tuples
            for i in range(len(combo)):
                face = combo[:i] + combo[i + 1 :]
                # a tuple inside the full intersection is inside every face
                floc = lo_lookup[face]
                base_lo = off_lo[face]
                sign = (-1) ** i
                for r in range(t_hi.shape[0]):
                    c = floc.tuple_sets[p].index_of(t_hi[r])
                    rws.append(base_hi + r)
                    cls.append(base_lo + c)
                    dat.append(sign)
        deltas.append(
            sp.csr_matrix((np.array(dat, dtype=np.int64), (rws, cls)), shape=(dim_hi, dim_lo))
        )
    return offsets, R, deltas


def mayer_vietoris_check(
    complex_: WeightedComplex,
    cover: CoverSystem,
    p: int,
    q_max: int = 1,
    rng=None,
    crosscheck_cutoff: int = 2000,
) -> MVCertificate:
    """Exactness certificate for the degree-p Mayer-Vietoris restriction row.

    0 -> C^p(global) -> prod_a C^p(U_a) -> prod_{a<b} C^p(U_ab) -> ...

    Ranks are exact (prime-field elimination on the 0/+-1 matrices) and are
    computed per tuple block; when the assembled matrices stay below
    crosscheck_cutoff rows they are also built explicitly and re-eliminated
    as a whole, and the two routes must agree. Preimages are reconstructed
    through the partition of unity and checked numerically.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    pou = PartitionOfUnity(cover)
    m_global = complex_.tuple_sets[p].size

    membership = _tuple_ball_membership(complex_, cover, p)
    s_per_tuple = membership.sum(axis=0)
    injective = bool((s_per_tuple > 0).all()) if m_global else True
    # each row of R is a standard basis vector, so its rank is the number of
    # distinct covered tuples
    rank_R = int((s_per_tuple > 0).sum())
    uniq, counts = np.unique(s_per_tuple[s_per_tuple > 0], return_counts=True)
    s_counts = {int(s): int(c) for s, c in zip(uniq, counts)}
    dims, ranks_delta = _blockwise_ranks(s_counts, q_max)

    rows_out = []
    exact_all = injective
    for q in range(q_max + 1):
        rank_in = rank_R if q == 0 else ranks_delta[q - 1]
        dim_ker = dims[q] - ranks_delta[q]
        ok = dim_ker == rank_in
        exact_all = exact_all and ok
        rows_out.append(
            {"q": q, "dim": dims[q], "rank_in": rank_in, "dim_kernel": dim_ker, "exact": ok}
        )

    levels = _enumerate_blocks(complex_, cover, p, q_max)
    recon_ok = _check_reconstructions(complex_, cover, pou, p, levels, rng)

    crosscheck = "skipped"
    if sum(dims) + m_global <= crosscheck_cutoff:
        full_levels = levels + [
            [
                (combo, loc)
                for combo in _nonempty_combos(cover, q_max + 1)
                if (loc := restrict_complex(cover, complex_, combo, p)).dim(p) > 0
            ]
        ]
        offsets, R, deltas = _assembled_matrices(full_levels, m_global, p)
        whole_rank_R = rank_exact(R) if min(R.shape) else 0
        whole_ranks = [rank_exact(D) if min(D.shape) else 0 for D in deltas]
        whole_dims = [total for _, total in offsets[: q_max + 2]]
        agree = (
            whole_rank_R == rank_R
            and whole_ranks == ranks_delta
            and whole_dims == dims
        )
        crosscheck = "pass" if agree else "fail"
        exact_all = exact_all and agree

    hist = tuple((int(s), int(c)) for s, c in sorted(s_counts.items()))
    return MVCertificate(
        p, q_max, injective, tuple(rows_out), recon_ok, bool(exact_all and recon_ok),
        crosscheck, hist,
    )


def _check_reconstructions(complex_, cover, pou, p, levels, rng,
                           use_partition: bool = True) -> bool:
    """Partition-of-unity preimage formula on random kernel elements.

    levels holds the (combo, LocalComplex) blocks for q = 0 .. q_max; the
    Cech values of a block are read off by restriction, so no assembled
    matrices are needed.
    """
    global_ts = complex_.tuple_sets[p]
    q_max = len(levels) - 1
    block_of = [dict(blocks) for blocks in levels]
    chi_global = pou.chi(global_ts.tuples) if global_ts.size else np.zeros((cover.n_balls, 0))

    ok = True
    # q = 0: F = (x restricted per ball), reconstruct G = sum_a chi_a F_a and
    # compare its restrictions back against F.
    if global_ts.size and levels[0]:
        x = rng.standard_normal(global_ts.size)
        G = np.zeros(global_ts.size)
        covered = np.zeros(global_ts.size, dtype=bool)
        for combo, loc in levels[0]:
            sel = loc.global_rows[p]
            covered[sel] = True
            w = chi_global[combo[0], sel] if use_partition else 1.0
            G[sel] += w * x[sel]
        resid = np.abs(G[covered] - x[covered]).max(initial=0.0)
        scale = max(np.abs(x).max(initial=0.0), 1.0)
        ok = ok and resid <= 1e-12 * scale

    # q >= 1: x random on level q-1 blocks, F = Cech difference of x on level
    # q blocks, then G_B = sum_a sign * chi_a * F_{a u B} must recover x up to
    # a Cech coboundary; here exactness gives delta G = F, checked blockwise.
    for q in range(1, q_max + 1):
        if not block_of[q - 1] or not block_of[q]:
            continue
        xvals = {
            combo: rng.standard_normal(loc.dim(p)) for combo, loc in levels[q - 1]
        }

        def cech_delta(combo, loc, lower, lower_blocks):
            out = np.zeros(loc.dim(p))
            t_rows = loc.tuple_sets[p].tuples
            for i in range(len(combo)):
                face = combo[:i] + combo[i + 1 :]
                floc = lower_blocks[face]
                vals = lower[face]
                sign = (-1) ** i
                for r in range(t_rows.shape[0]):
                    out[r] += sign * vals[floc.tuple_sets[p].index_of(t_rows[r])]
            return out

        Fvals = {
            combo: cech_delta(combo, loc, xvals, block_of[q - 1])
            for combo, loc in levels[q]
        }
        Gvals = {}
        for combo, loc in levels[q - 1]:
            tuples_loc = loc.tuple_sets[p].tuples
            chi_all = pou.chi(tuples_loc)
            acc = np.zeros(loc.dim(p))
            for a in range(cover.n_balls):
                merged, sign = _cech_sign(a, combo)
                if sign == 0 or merged not in block_of[q]:
                    continue
                src = block_of[q][merged]
                src_vals = Fvals[merged]
                chi_vals = chi_all[a] if use_partition else np.ones(len(tuples_loc))
                for r in range(tuples_loc.shape[0]):
                    if chi_vals[r] == 0.0:
                        continue
                    try:
                        c = src.tuple_sets[p].index_of(tuples_loc[r])
                    except KeyError:
                        # chi vanishes outside the big ball, so this cannot
                        # happen with the partition on; without it just skip.
                        continue
                    acc[r] += sign * chi_vals[r] * src_vals[c]
            Gvals[combo] = acc
        resid, scale = 0.0, 1.0
        for combo, loc in levels[q]:
            dG = cech_delta(combo, loc, Gvals, block_of[q - 1])
            resid = max(resid, np.abs(dG - Fvals[combo]).max(initial=0.0))
            scale = max(scale, np.abs(Fvals[combo]).max(initial=0.0))
        ok = ok and resid <= 1e-12 * scale
    return bool(ok)


# ---------------------------------------------------------------------------
# Cech cohomology of the cover on locally constant cochains
# ---------------------------------------------------------------------------


def _components(space: MetricMeasureSpace, points: np.ndarray, eps: float) -> list[np.ndarray]:
    """Connected components of a point set under the eps-connectivity graph."""
    if points.size == 0:
        return []
    sub = space.dist[np.ix_(points, points)] < eps
    k = points.size
    seen = np.zeros(k, dtype=bool)
    comps = []
    for s in range(k):
        if seen[s]:
            continue
        stack = [s]
        seen[s] = True
        comp = []
        while stack:
            v = stack.pop()
            comp.append(v)
            for u in np.nonzero(sub[v] & ~seen)[0]:
                seen[u] = True
                stack.append(int(u))
        comps.append(points[np.sort(np.array(comp))])
    comps.sort(key=lambda c: int(c[0]))
    return comps


def cech_nerve_betti(cover: CoverSystem, q_max: int = 2) -> BettiReport:
    """Cech cohomology of the cover with real coefficients.

    Cochains are locally constant on each intersection: one coordinate per
    connected component (eps-connectivity), so disconnected overlaps are
    handled correctly. Ranks of the Cech differentials are exact.
    """
    eps = cover.eps
    levels = []
    for q in range(q_max + 2):
        blocks = []
        for combo in _nonempty_combos(cover, q):
            pts = np.nonzero(cover.intersection_mask(combo))[0]
            comps = _components(cover.space, pts, eps)
            if comps:
                blocks.append((combo, comps))
        levels.append(blocks)

    offsets = []
    for blocks in levels:
        off, total = {}, 0
        for combo, comps in blocks:
            off[combo] = total
            total += len(comps)
        offsets.append((off, total))

    deltas = []
    for q in range(q_max + 1):
        off_lo, dim_lo = offsets[q]
        off_hi, dim_hi = offsets[q + 1]
        lo_lookup = dict(levels[q])
        rws, cls, dat = [], [], []
        for combo, comps in levels[q + 1]:
            base_hi = off_hi[combo]
            for ci, comp in enumerate(comps):
                rep = int(comp[0])
                for i in range(len(combo)):
                    face = combo[:i] + combo[i + 1 :]
                    if face not in lo_lookup:
                        continue
                    fcomps = lo_lookup[face]
                    target = next(
                        k for k, fc in enumerate(fcomps) if rep in set(fc.tolist())
                    )
                    rws.append(base_hi + ci)
                    cls.append(off_lo[face] + target)
                    dat.append((-1) ** i)
        deltas.append(
            sp.csr_matrix((np.array(dat, dtype=np.int64), (rws, cls)), shape=(dim_hi, dim_lo))
        )

    ranks = [rank_exact(D) if min(D.shape) else 0 for D in deltas]
    betti = []
    for q in range(q_max + 1):
        dim_q = offsets[q][1]
        below = ranks[q - 1] if q >= 1 else 0
        betti.append(dim_q - ranks[q] - below)
    dims = tuple(offsets[q][1] for q in range(q_max + 1))
    return BettiReport(
        tuple(betti),
        dims,
        tuple(ranks),
        PRIME_MAIN,
        {"route": "cech-nerve", "eps": cover.eps, "eta": cover.eta, "n_balls": cover.n_balls},
    )


# ---------------------------------------------------------------------------
# Slices and the averaged homotopy operator
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class HomotopyOperator:
    """Averaging homotopy over a slice set W of an intersection.

    (Psi F)(x_0..x_{p-1}) = (1/mass(W)) * sum_{t in W} w_t F(t, x_0..x_{p-1});
    valid whenever prepending any t in W to an admissible tuple with at most
    `level` points stays admissible (checked constructively at build time).
    """

    alphas: tuple
    level: int
    W: np.ndarray
    weights: np.ndarray
    mass: float
    local: LocalComplex

    def psi_matrix(self, p: int) -> np.ndarray:
        """Matrix of Psi: local degree p -> degree p-1 (1 <= p <= level)."""
        if not (1 <= p <= self.level):
            raise CoverError(f"Psi valid for degrees 1..{self.level}")
        src = self.local.tuple_sets[p]
        dst = self.local.tuple_sets[p - 1]
        out = np.zeros((dst.size, src.size))
        for r, row in enumerate(dst.tuples.tolist()):
            members = set(row)
            for t, wt in zip(self.W.tolist(), self.weights.tolist()):
                if t in members:
                    continue
                pos = sum(1 for v in row if v < t)
                key = tuple(sorted(row + [t]))
                c = src.index_of(key)
                out[r, c] += ((-1) ** pos) * wt / self.mass
        return out

    def psi_apply(self, values: np.ndarray, p: int) -> np.ndarray:
        return self.psi_matrix(p) @ values


def build_slice_and_psi(
    cover: CoverSystem, complex_: WeightedComplex, alphas, level: int
) -> HomotopyOperator:
    """Brute-force slice: keep t if every admissible local tuple of at most
    `level` points stays admissible when t is prepended.

    Raises SliceEmptyError when no such t exists (the contractibility
    assumption fails at this scale for this intersection).
    """
    if level + 1 > len(complex_.tuple_sets):
        raise CoverError(
            f"slice level {level} needs tuple sets to degree {level}; "
            f"rebuild the complex with p_max >= {level - 1}"
        )
    loc = restrict_complex(cover, complex_, alphas, level)
    pts = np.nonzero(loc.mask)[0]
    if pts.size == 0:
        raise CoverError(f"intersection {tuple(alphas)} is empty")
    keep = []
    for t in pts.tolist():
        ok = True
        for ell in range(1, level + 1):
            ts = loc.tuple_sets[ell - 1]
            upper = complex_.tuple_sets[ell]
            for row in ts.tuples.tolist():
                if t in row:
                    continue
                if not upper.contains(tuple(sorted(row + [t]))):
                    ok = False
                    break
            if not ok:
                break
        if ok:
            keep.append(t)
    if not keep:
        raise SliceEmptyError(
            f"slice set empty for intersection {tuple(alphas)} at level {level}"
        )
    W = np.array(keep, dtype=int)
    weights = cover.space.weights[W]
    return HomotopyOperator(
        tuple(sorted(int(a) for a in alphas)), level, W, weights, float(weights.sum()), loc
    )


def homotopy_identity_residual(op: HomotopyOperator, p: int) -> float:
    """Max-abs residual of Psi delta + delta Psi = identity on local degree p."""
    if not (1 <= p <= op.level - 1):
        raise CoverError(f"identity checkable for degrees 1..{op.level - 1}")
    m = op.local.dim(p)
    if m == 0:
        return 0.0
    up = op.local.coboundary(p).astype(float)
    down = op.local.coboundary(p - 1).astype(float)
    lhs = op.psi_matrix(p + 1) @ up.toarray() + down.toarray() @ op.psi_matrix(p)
    return float(np.abs(lhs - np.eye(m)).max())


@dataclass(frozen=True)
class PoincareCheck:
    alphas: tuple
    level: int
    w_size: int
    residuals: tuple  # per degree 1..level-1

    @property
    def max_residual(self) -> float:
        return max(self.residuals) if self.residuals else 0.0


def poincare_suite(
    cover: CoverSystem, complex_: WeightedComplex, p_check: int, max_depth: int = 2
) -> list[PoincareCheck]:
    """Homotopy identity on every nonempty intersection up to max_depth balls."""
    out = []
    level = p_check + 1
    for depth in range(max_depth):
        for combo in _nonempty_combos(cover, depth):
            op = build_slice_and_psi(cover, complex_, combo, level)
            residuals = tuple(
                homotopy_identity_residual(op, p) for p in range(1, level)
            )
            out.append(PoincareCheck(tuple(combo), level, int(op.W.size), residuals))
    return out


# ---------------------------------------------------------------------------
# Recovery report: three Betti routes against the generator's reference
# ---------------------------------------------------------------------------

REFERENCE_BETTI = {
    "circle": (1, 1, 0, 0),
    "interval": (1, 0, 0, 0),
    "sphere": (1, 0, 1, 0),
}


def reference_betti(space: MetricMeasureSpace, p_max: int) -> tuple:
    gen = space.metadata.get("generator")
    if gen not in REFERENCE_BETTI:
        raise CoverError(f"no reference Betti numbers for generator {gen!r}")
    ref = REFERENCE_BETTI[gen]
    return tuple(ref[p] if p < len(ref) else 0 for p in range(p_max + 1))


def derham_recovery_report(
    complex_: WeightedComplex, cover: CoverSystem | None = None, q_max: int = 2
) -> dict:
    """Compare spectral, exact-field, and (optionally) Cech-nerve Betti numbers."""
    from .cohomology import exact_betti, compare_numeric_exact
    from .hodge import hodge_report

    betti = exact_betti(complex_)
    reports = [
        hodge_report(complex_, p, oracle=betti.betti[p]) for p in range(complex_.p_max + 1)
    ]
    agreement = compare_numeric_exact(reports, betti)
    ref = reference_betti(complex_.space, complex_.p_max)
    out = {
        "schema": 1,
        "reference": list(ref),
        "exact": list(betti.betti),
        "spectral": list(agreement.spectral),
        "spectral_flagged": [r.flagged for r in reports],
        "exact_matches_reference": tuple(betti.betti) == ref,
        "spectral_matches_exact": agreement.all_agree,
    }
    if cover is not None:
        nerve = cech_nerve_betti(cover, q_max=min(q_max, complex_.p_max))
        nerve_trunc = tuple(nerve.betti[: complex_.p_max + 1])
        out["cech"] = list(nerve.betti)
        out["cech_matches_reference"] = nerve_trunc == ref[: len(nerve_trunc)]
    out["all_agree"] = out["exact_matches_reference"] and out["spectral_matches_exact"] and (
        cover is None or out["cech_matches_reference"]
    )
    return out
