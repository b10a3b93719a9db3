"""Weighted complexes, Hodge Laplacians, harmonic counts, and decompositions.

The inner product at degree p is diagonal in the sorted-tuple basis with the
assembled tuple masses W_p, so the adjoint of the coboundary B_p is
W_p^{-1} B_p^T W_{p+1} and the degree-p Laplacian is

    L_p = B_{p-1} W_{p-1}^{-1} B_{p-1}^T W_p  +  W_p^{-1} B_p^T W_{p+1} B_p.

All spectra are computed on the symmetrized conjugate W_p^{1/2} L_p W_p^{-1/2}.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .space import MetricMeasureSpace
from .neighborhoods import NeighborhoodSystem, TupleSet, enumerate_tuples, check_face_closure
from .kernels import KernelModel, WeightAssignment, assemble_weights
from .cochains import Cochain, CoboundaryOperator, build_coboundary

DENSE_EIG_CUTOFF = 5000
HARMONIC_TOL_FACTOR = 2.0**-45
GAP_AMBIGUITY_FACTOR = 1e3
CG_RTOL = 1e-12
CG_MAXITER_FACTOR = 10


class HodgeError(ValueError):
    """Raised on structural misuse of a weighted complex."""


class NumericalError(RuntimeError):
    """Raised when an iterative solve fails to reach its residual target."""


@dataclass(eq=False)
class WeightedComplex:
    """Tuple sets, masses, and coboundaries for degrees 0..p_max.

    Tuple sets and weights extend one degree above p_max so that top-degree
    up-Laplacians and Betti numbers see the correct codomain.
    """

    space: MetricMeasureSpace
    system: NeighborhoodSystem
    kernel: KernelModel
    p_max: int
    tuple_sets: list[TupleSet]
    weights: list[WeightAssignment]
    coboundaries: list[CoboundaryOperator]  # B_p: degree p -> p+1, p = 0..p_max

    def dim(self, p: int) -> int:
        return self.tuple_sets[p].size if 0 <= p <= self.p_max + 1 else 0

    def mass_vector(self, p: int) -> np.ndarray:
        return self.weights[p].masses

    def coboundary(self, p: int) -> CoboundaryOperator:
        if not (0 <= p <= self.p_max):
            raise HodgeError(f"no coboundary stored for degree {p}")
        return self.coboundaries[p]

    def inner(self, p: int, F: np.ndarray, G: np.ndarray) -> float:
        return float(np.sum(self.mass_vector(p) * F * G))


def build_weighted_complex(
    space: MetricMeasureSpace,
    system: NeighborhoodSystem,
    kernel: KernelModel,
    p_max: int,
) -> WeightedComplex:
    """Enumerate tuples to degree p_max+1, assemble masses and coboundaries.

    Face closure is verified during matrix assembly (a missing face raises),
    and B_{p+1} B_p = 0 is asserted in exact integer arithmetic.
    """
    if p_max < 0:
        raise HodgeError("p_max must be nonnegative")
    tuple_sets = [enumerate_tuples(space, system, p) for p in range(p_max + 2)]
    weights = [assemble_weights(kernel, space, ts) for ts in tuple_sets]
    coboundaries = [build_coboundary(tuple_sets[p], tuple_sets[p + 1]) for p in range(p_max + 1)]
    for p in range(p_max):
        prod = coboundaries[p + 1].matrix @ coboundaries[p].matrix
        if prod.nnz and np.any(prod.data != 0):
            raise HodgeError(f"coboundary composition at degree {p} is nonzero")
    return WeightedComplex(space, system, kernel, p_max, tuple_sets, weights, coboundaries)


def adjoint_matrix(complex_: WeightedComplex, p: int) -> sp.csr_matrix:
    """Adjoint of B_p in the weighted inner products: W_p^{-1} B_p^T W_{p+1}."""
    B = complex_.coboundary(p).matrix
    wp = complex_.mass_vector(p)
    wq = complex_.mass_vector(p + 1)
    return sp.diags(1.0 / wp) @ B.T.astype(float) @ sp.diags(wq)


def hodge_laplacian(complex_: WeightedComplex, p: int, symmetrized: bool = True) -> np.ndarray:
    """Degree-p Laplacian, dense; symmetrized conjugate by default."""
    m = complex_.dim(p)
    out = np.zeros((m, m))
    wp = complex_.mass_vector(p)
    if m == 0:
        return out
    if p >= 1 and complex_.dim(p - 1) > 0:
        Bdn = complex_.coboundary(p - 1).matrix.astype(float)
        wdn = complex_.mass_vector(p - 1)
        if symmetrized:
            A = sp.diags(np.sqrt(wp)) @ Bdn @ sp.diags(1.0 / wdn) @ Bdn.T @ sp.diags(np.sqrt(wp))
        else:
            A = Bdn @ sp.diags(1.0 / wdn) @ Bdn.T @ sp.diags(wp)
        out += A.toarray()
    if p <= complex_.p_max and complex_.dim(p + 1) > 0:
        Bup = complex_.coboundary(p).matrix.astype(float)
        wup = complex_.mass_vector(p + 1)
        if symmetrized:
            A = sp.diags(1.0 / np.sqrt(wp)) @ Bup.T @ sp.diags(wup) @ Bup @ sp.diags(1.0 / np.sqrt(wp))
        else:
            A = sp.diags(1.0 / wp) @ Bup.T @ sp.diags(wup) @ Bup
        out += A.toarray()
    if symmetrized:
        skew = np.abs(out - out.T).max(initial=0.0)
        scale = max(np.abs(out).max(initial=0.0), 1.0)
        if skew > 1e-12 * scale:
            raise HodgeError(f"symmetrized Laplacian has asymmetry {skew:.3e}")
        out = 0.5 * (out + out.T)
    return out


def _low_spectrum(S: np.ndarray, k_hint: int = 16) -> tuple[np.ndarray, float]:
    """Eigenvalues from the low end plus an upper bound on the largest one."""
    m = S.shape[0]
    if m == 0:
        return np.empty(0), 0.0
    gersh = float(np.abs(S).sum(axis=1).max())
    if m <= DENSE_EIG_CUTOFF:
        eigs = np.linalg.eigvalsh(S)
        return eigs, max(gersh, float(eigs[-1]))
    k = min(m - 1, k_hint)
    sparse = sp.csr_matrix(S)
    while True:
        vals = spla.eigsh(sparse, k=k, sigma=-1e-12, which="LM", return_eigenvectors=False)
        vals = np.sort(vals)
        tau = m * gersh * HARMONIC_TOL_FACTOR
        if vals[-1] > tau * GAP_AMBIGUITY_FACTOR or k == m - 1:
            return vals, gersh
        k = min(m - 1, 2 * k)


@dataclass(frozen=True)
class HarmonicCount:
    dimension: int
    eigenvalues: np.ndarray
    threshold: float
    max_eig_bound: float
    flagged: bool
    oracle_used: bool = False


def harmonic_dimension(
    complex_: WeightedComplex, p: int, oracle: int | None = None
) -> HarmonicCount:
    """Count eigenvalues of the symmetrized Laplacian below the tiny-eigenvalue cut.

    The threshold is dim * max_eig * 2^-45. A spectral gap of less than 10^3
    around the threshold flags the count; a provided exact oracle then wins.
    """
    S = hodge_laplacian(complex_, p, symmetrized=True)
    eigs, max_eig = _low_spectrum(S)
    m = complex_.dim(p)
    if m == 0:
        return HarmonicCount(0, eigs, 0.0, 0.0, False)
    tau = m * max_eig * HARMONIC_TOL_FACTOR
    if max_eig == 0.0:
        # identically zero operator: everything is harmonic
        return HarmonicCount(m, eigs, 0.0, 0.0, False)
    count = int(np.sum(eigs < tau))
    below = eigs[eigs < tau]
    above = eigs[eigs >= tau]
    flagged = False
    if below.size and above.size:
        lo = float(below.max())
        hi = float(above.min())
        if lo > 0 and hi / lo < GAP_AMBIGUITY_FACTOR:
            flagged = True
    if flagged and oracle is not None and oracle != count:
        return HarmonicCount(oracle, eigs, tau, max_eig, True, True)
    return HarmonicCount(count, eigs, tau, max_eig, flagged)


@dataclass(frozen=True)
class HodgeReport:
    degree: int
    dimension: int
    harmonic_dim: int
    eigenvalues: tuple
    threshold: float
    flagged: bool
    oracle_betti: int | None
    agree: bool | None

    def to_json(self) -> dict:
        return {
            "schema": 1,
            "degree": self.degree,
            "dimension": self.dimension,
            "harmonic_dim": self.harmonic_dim,
            "eigenvalues_low": list(self.eigenvalues[:32]),
            "threshold": self.threshold,
            "flagged": self.flagged,
            "oracle_betti": self.oracle_betti,
            "agree": self.agree,
        }


def hodge_report(complex_: WeightedComplex, p: int, oracle: int | None = None) -> HodgeReport:
    hc = harmonic_dimension(complex_, p, oracle=oracle)
    agree = None if oracle is None else (hc.dimension == oracle)
    return HodgeReport(
        p,
        complex_.dim(p),
        hc.dimension,
        tuple(float(v) for v in hc.eigenvalues[: min(64, hc.eigenvalues.size)]),
        hc.threshold,
        hc.flagged,
        oracle,
        agree,
    )


def _cgnr(A: sp.spmatrix, b: np.ndarray, rtol: float, maxiter: int) -> tuple[np.ndarray, float]:
    """Conjugate gradient on the normal equations A^T A x = A^T b.

    Returns (x, relative residual of the normal equations). Handles rank
    deficiency: CG on a consistent singular SPD system stays in range(A^T).
    Residuals are measured against max(||A^T b||, eps * ||A||_F ||b||) so that
    an input with no component in range(A) returns x = 0 instead of iterating
    on rounding noise.
    """
    At_b = A.T @ b
    fro = float(np.sqrt((A.multiply(A)).sum())) if sp.issparse(A) else float(np.linalg.norm(A))
    floor = 64.0 * np.finfo(float).eps * fro * float(np.linalg.norm(b))
    x = np.zeros(A.shape[1])
    r = At_b.copy()
    d = r.copy()
    rs = float(r @ r)
    norm0 = max(np.sqrt(rs), floor, np.finfo(float).tiny)
    if np.sqrt(rs) <= floor:
        return x, 0.0
    for _ in range(maxiter):
        Ad = A @ d
        denom = float(Ad @ Ad)
        if denom <= 0.0:
            break
        alpha = rs / denom
        x += alpha * d
        r -= alpha * (A.T @ Ad)
        rs_new = float(r @ r)
        if np.sqrt(rs_new) <= max(rtol * norm0, floor):
            return x, np.sqrt(rs_new) / norm0
        d = r + (rs_new / rs) * d
        rs = rs_new
    return x, np.sqrt(rs) / norm0


@dataclass(frozen=True)
class HodgeDecomposition:
    harmonic: Cochain
    exact: Cochain
    coexact: Cochain
    residuals: dict


def hodge_decompose(complex_: WeightedComplex, p: int, F: Cochain) -> HodgeDecomposition:
    """Split F into harmonic + coboundary + adjoint-coboundary parts.

    Both potentials come from least-squares solves in the weighted metric via
    conjugate gradients on the normal equations; the harmonic part is the
    remainder. Orthogonality and reconstruction residuals are reported and a
    failed solve raises NumericalError.
    """
    if F.degree != p:
        raise HodgeError("cochain degree mismatch")
    m = complex_.dim(p)
    wp = complex_.mass_vector(p)
    sq = np.sqrt(wp)
    f = F.values
    norm_f = float(np.sqrt(np.sum(wp * f * f)))
    exact = np.zeros(m)
    coexact = np.zeros(m)
    maxiter = CG_MAXITER_FACTOR * max(m, 1)
    if p >= 1 and complex_.dim(p - 1) > 0:
        Bdn = complex_.coboundary(p - 1).matrix.astype(float)
        wdn = complex_.mass_vector(p - 1)
        A = sp.diags(sq) @ Bdn @ sp.diags(1.0 / np.sqrt(wdn))
        z, res = _cgnr(A, sq * f, CG_RTOL, maxiter)
        if res > 1e-8:
            raise NumericalError(f"exact-part CG stalled at relative residual {res:.3e}")
        exact = (A @ z) / sq
    if p <= complex_.p_max and complex_.dim(p + 1) > 0:
        Bup = complex_.coboundary(p).matrix.astype(float)
        wup = complex_.mass_vector(p + 1)
        A = sp.diags(1.0 / sq) @ Bup.T @ sp.diags(np.sqrt(wup))
        z, res = _cgnr(A, sq * f, CG_RTOL, maxiter)
        if res > 1e-8:
            raise NumericalError(f"coexact-part CG stalled at relative residual {res:.3e}")
        coexact = (A @ z) / sq
    harmonic = f - exact - coexact
    denom = max(norm_f * norm_f, np.finfo(float).tiny)
    residuals = {
        "orth_exact_coexact": abs(float(np.sum(wp * exact * coexact))) / denom,
        "orth_harmonic_exact": abs(float(np.sum(wp * harmonic * exact))) / denom,
        "orth_harmonic_coexact": abs(float(np.sum(wp * harmonic * coexact))) / denom,
        "reconstruction": float(
            np.sqrt(np.sum(wp * (f - harmonic - exact - coexact) ** 2))
        )
        / max(norm_f, np.finfo(float).tiny),
    }
    ts = F.tuple_set
    return HodgeDecomposition(
        Cochain(p, ts, harmonic), Cochain(p, ts, exact), Cochain(p, ts, coexact), residuals
    )


def energy_norms(complex_: WeightedComplex, p: int, F: Cochain) -> tuple[float, float, float]:
    """(||F||^2, ||delta F||^2, their sum) in the weighted inner products."""
    wp = complex_.mass_vector(p)
    l2 = float(np.sum(wp * F.values**2))
    if p <= complex_.p_max and complex_.dim(p + 1) > 0:
        B = complex_.coboundary(p).matrix
        dF = B @ F.values
        q = float(np.sum(complex_.mass_vector(p + 1) * dF**2))
    else:
        q = 0.0
    return l2, q, l2 + q


@dataclass(frozen=True)
class MultiplierCheck:
    passed: bool
    lhs: float
    rhs: float
    constant: float


def multiplier_constant(complex_: WeightedComplex, p: int, chi: np.ndarray) -> float:
    """Graph-norm bound constant for the action of chi^x(p+1) on degree p.

    ||chi||_sup^p * (1 + ||chi||_sup + (p+1) * sup_x sqrt(sum over admissible
    pairs (x, y) of (chi(y) - chi(x))^2 j(x, y) w_y)).
    """
    chi = np.asarray(chi, dtype=float)
    sup = float(np.abs(chi).max())
    pairs = complex_.tuple_sets[1].tuples
    n = complex_.space.n
    acc = np.zeros(n)
    if pairs.size:
        from .kernels import kernel_matrix

        kmat = kernel_matrix(complex_.kernel, complex_.space)
        w = complex_.space.weights
        for a, b in ((0, 1), (1, 0)):
            x = pairs[:, a]
            y = pairs[:, b]
            np.add.at(acc, x, (chi[y] - chi[x]) ** 2 * kmat[x, y] * w[y])
    grad_sup = float(np.sqrt(acc.max(initial=0.0)))
    return sup**p * (1.0 + sup + (p + 1) * grad_sup)


def multiplier_bound_check(
    complex_: WeightedComplex, p: int, chi: np.ndarray, F: Cochain
) -> MultiplierCheck:
    """Verify the graph-norm bound for the tensor-power action of chi."""
    from .cochains import multiply_power

    c = multiplier_constant(complex_, p, chi)
    _, _, graph_f = energy_norms(complex_, p, F)
    chiF = multiply_power(chi, F)
    _, _, graph_chif = energy_norms(complex_, p, chiF)
    lhs = float(np.sqrt(graph_chif))
    rhs = c * float(np.sqrt(graph_f))
    return MultiplierCheck(lhs <= rhs * (1.0 + 1e-12) + 1e-300, lhs, rhs, c)


def save_report(report, path) -> None:
    with open(path, "w") as fh:
        json.dump(report.to_json(), fh, sort_keys=True)
        fh.write("\n")
