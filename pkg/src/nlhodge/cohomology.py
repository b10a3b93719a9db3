"""Exact Betti numbers from coboundary ranks over a large prime field.

betti_p = dim C^p - rank(B_p) - rank(B_{p-1}), with all ranks computed by
exact modular Gaussian elimination. Weights never enter, so this is the
weight-independent oracle the spectral counts are checked against.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
import scipy.sparse as sp

PRIME_MAIN = 2**31 - 1
PRIME_FALLBACK = 2**31 - 19
_CHUNK_ROWS = 1024


class OracleError(RuntimeError):
    """Raised when even the rational fallback cannot certify a rank."""


def _to_int_array(matrix) -> np.ndarray:
    if sp.issparse(matrix):
        arr = np.asarray(matrix.todense(), dtype=np.int64)
    else:
        arr = np.array(matrix, dtype=np.int64, copy=True)
    if arr.ndim != 2:
        raise ValueError("rank needs a 2-d matrix")
    return arr


def rank_mod_p(matrix, prime: int = PRIME_MAIN) -> int:
    """Exact rank over GF(prime) by in-place row elimination.

    Entries are reduced mod prime; int64 intermediates stay below 2^63 because
    prime < 2^31.5. Row updates run in chunks to bound temporary memory.
    """
    A = _to_int_array(matrix)
    if A.size == 0:
        return 0
    A %= prime
    m, n = A.shape
    if n > m:
        A = np.ascontiguousarray(A.T)
        m, n = n, m
    rank = 0
    for col in range(n):
        colvals = A[rank:, col]
        nz = np.nonzero(colvals)[0]
        if nz.size == 0:
            continue
        piv = rank + int(nz[0])
        if piv != rank:
            A[[rank, piv], col:] = A[[piv, rank], col:]
        inv = pow(int(A[rank, col]), prime - 2, prime)
        if inv != 1:
            A[rank, col:] = (A[rank, col:] * inv) % prime
        tail = A[rank + 1 :, col]
        nzr = np.nonzero(tail)[0] + rank + 1
        if nzr.size:
            prow = A[rank, col:]
            for start in range(0, nzr.size, _CHUNK_ROWS):
                rows_idx = nzr[start : start + _CHUNK_ROWS]
                block = A[rows_idx, col:]
                block -= block[:, 0][:, None] * prow
                block %= prime
                A[rows_idx, col:] = block
        rank += 1
        if rank == m:
            break
    return rank


def rank_exact_rational(matrix) -> int:
    """Fraction-based elimination; exact over the rationals, small inputs only."""
    A = _to_int_array(matrix)
    if A.size == 0:
        return 0
    rows = [[Fraction(int(v)) for v in row] for row in A]
    m, n = len(rows), len(rows[0])
    rank = 0
    for col in range(n):
        piv = next((r for r in range(rank, m) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        inv = 1 / rows[rank][col]
        rows[rank] = [v * inv for v in rows[rank]]
        for r in range(m):
            if r != rank and rows[r][col] != 0:
                c = rows[r][col]
                rows[r] = [a - c * b for a, b in zip(rows[r], rows[rank])]
        rank += 1
        if rank == m:
            break
    return rank


def rank_exact(matrix, escalate: bool = False) -> int:
    """Rank over the main prime; optionally confirm with the fallback prime.

    Disagreement between primes escalates to rational arithmetic.
    """
    r1 = rank_mod_p(matrix, PRIME_MAIN)
    if not escalate:
        return r1
    r2 = rank_mod_p(matrix, PRIME_FALLBACK)
    if r1 == r2:
        return r1
    return rank_exact_rational(matrix)


@dataclass(frozen=True)
class BettiReport:
    betti: tuple
    dims: tuple
    ranks: tuple  # rank of B_p for p = 0..p_max
    prime: int
    parameters: dict

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "betti": list(self.betti),
            "dims": list(self.dims),
            "coboundary_ranks": list(self.ranks),
            "prime": self.prime,
            "parameters": self.parameters,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")


def exact_betti(complex_, escalate: bool = False, parameters: dict | None = None) -> BettiReport:
    """Betti numbers for degrees 0..p_max of a weighted complex."""
    p_max = complex_.p_max
    dims = [complex_.dim(p) for p in range(p_max + 1)]
    ranks = []
    for p in range(p_max + 1):
        B = complex_.coboundary(p).matrix
        ranks.append(rank_exact(B, escalate=escalate) if min(B.shape) else 0)
    betti = []
    for p in range(p_max + 1):
        below = ranks[p - 1] if p >= 1 else 0
        betti.append(dims[p] - ranks[p] - below)
    return BettiReport(
        tuple(betti), tuple(dims), tuple(ranks), PRIME_MAIN, dict(parameters or {})
    )


@dataclass(frozen=True)
class AgreementReport:
    degrees: tuple
    spectral: tuple
    exact: tuple
    agree: tuple
    all_agree: bool

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "degrees": list(self.degrees),
            "spectral": list(self.spectral),
            "exact": list(self.exact),
            "agree": list(self.agree),
            "all_agree": self.all_agree,
        }


def compare_numeric_exact(hodge_reports, betti_report: BettiReport) -> AgreementReport:
    """Per-degree agreement between spectral harmonic counts and exact Betti."""
    degrees = tuple(r.degree for r in hodge_reports)
    spectral = tuple(r.harmonic_dim for r in hodge_reports)
    exact = tuple(betti_report.betti[p] for p in degrees)
    agree = tuple(s == e for s, e in zip(spectral, exact))
    return AgreementReport(degrees, spectral, exact, agree, all(agree))
