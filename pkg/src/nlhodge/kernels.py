"""Pair kernels and the tuple weights they induce on each degree.

A degree-p tuple (i_0 < ... < i_p) carries the mass

    (p+1)! * (1/(p+1)) * sum_k prod_{l != k} j(x_{i_k}, x_{i_l}) * prod_m w_{i_m},

the density of the degree-p product measure folded onto sorted representatives.
Degree-0 masses are the point weights themselves.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .space import MetricMeasureSpace
from .neighborhoods import TupleSet


class KernelError(ValueError):
    """Raised for invalid kernel parameters or failed weight assembly."""


@dataclass(frozen=True, eq=False)
class KernelModel:
    """Symmetric positive pair kernel j(x, y), evaluated off the diagonal only."""

    kind: str  # "fractional" | "truncated_fractional" | "constant" | "custom"
    d: float | None = None
    alpha: float | None = None
    scale: float = 1.0
    eps_trunc: float | None = None
    floor: float = 0.0
    table: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("fractional", "truncated_fractional", "constant", "custom"):
            raise KernelError(f"unknown kernel kind {self.kind!r}")
        if self.kind in ("fractional", "truncated_fractional"):
            if self.alpha is None or not (0.0 < self.alpha < 2.0):
                raise KernelError("alpha must lie in (0, 2)")
            if self.d is None or self.d <= 0:
                raise KernelError("dimension parameter d must be positive")
        if self.scale <= 0:
            raise KernelError("scale must be positive")
        if self.kind == "truncated_fractional":
            if self.eps_trunc is None or self.eps_trunc <= 0:
                raise KernelError("truncation radius must be positive")
            if self.floor < 0:
                raise KernelError("floor must be nonnegative")
        if self.kind == "custom":
            if self.table is None:
                raise KernelError("custom kernel needs a table")
            t = np.asarray(self.table, dtype=float)
            if t.ndim != 2 or t.shape[0] != t.shape[1]:
                raise KernelError("custom kernel table must be square")
            if np.abs(t - t.T).max(initial=0.0) > 1e-12:
                i, j = np.unravel_index(np.argmax(np.abs(t - t.T)), t.shape)
                raise KernelError(f"custom kernel asymmetric at ({i}, {j})")
            off = t + np.eye(t.shape[0]) * (1.0 + np.abs(t).max())
            if off.min() <= 0 or not np.isfinite(t).all():
                raise KernelError("custom kernel must be positive and finite off the diagonal")
            object.__setattr__(self, "table", t)

    def rescaled(self, c: float) -> "KernelModel":
        """Kernel multiplied by c > 0; degree-p masses scale by c**p."""
        if c <= 0:
            raise KernelError("rescaling factor must be positive")
        if self.kind == "custom":
            return KernelModel("custom", table=self.table * c)
        return KernelModel(
            self.kind,
            d=self.d,
            alpha=self.alpha,
            scale=self.scale * c,
            eps_trunc=self.eps_trunc,
            floor=self.floor * c,
        )


def fractional_kernel(d: float, alpha: float, scale: float = 1.0) -> KernelModel:
    """j(x, y) = scale * dist(x, y)^(-d-alpha)."""
    return KernelModel("fractional", d=d, alpha=alpha, scale=scale)


def truncated_fractional_kernel(
    d: float, alpha: float, eps_trunc: float, scale: float = 1.0, floor: float = 0.0
) -> KernelModel:
    """Fractional inside dist < eps_trunc, constant floor outside."""
    return KernelModel(
        "truncated_fractional", d=d, alpha=alpha, scale=scale, eps_trunc=eps_trunc, floor=floor
    )


def constant_kernel(value: float) -> KernelModel:
    if value <= 0:
        raise KernelError("constant kernel must be positive")
    return KernelModel("constant", scale=value)


def custom_kernel(table: np.ndarray) -> KernelModel:
    return KernelModel("custom", table=table)


def load_kernel_table(path, n: int) -> KernelModel:
    """Load 'i, j, value' triples covering every unordered pair of 0..n-1."""
    table = np.full((n, n), np.nan)
    np.fill_diagonal(table, 0.0)
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = [s.strip() for s in line.split(",")]
            if len(parts) != 3:
                raise KernelError(f"{path}:{lineno}: expected 'i, j, value'")
            i, j, v = int(parts[0]), int(parts[1]), float(parts[2])
            if not (0 <= i < n and 0 <= j < n) or i == j:
                raise KernelError(f"{path}:{lineno}: bad pair ({i}, {j})")
            table[i, j] = v
            table[j, i] = v
    missing = np.argwhere(np.isnan(table))
    if missing.size:
        i, j = missing[0]
        raise KernelError(f"kernel table missing pair ({i}, {j})")
    return custom_kernel(table)


def eval_kernel(model: KernelModel, space: MetricMeasureSpace, i: int, j: int) -> float:
    """Kernel value for one ordered pair of distinct points."""
    if i == j:
        raise KernelError("kernel is undefined on the diagonal")
    rho = space.dist[i, j]
    if model.kind == "constant":
        return model.scale
    if model.kind == "custom":
        return float(model.table[i, j])
    val = model.scale * rho ** (-(model.d + model.alpha))
    if model.kind == "truncated_fractional" and rho >= model.eps_trunc:
        return model.floor
    return float(val)


def kernel_matrix(model: KernelModel, space: MetricMeasureSpace) -> np.ndarray:
    """Dense kernel values with a zero diagonal (the diagonal is never used)."""
    if model.kind == "constant":
        k = np.full_like(space.dist, model.scale)
    elif model.kind == "custom":
        if model.table.shape[0] != space.n:
            raise KernelError("custom kernel table size does not match the space")
        k = model.table.copy()
    else:
        with np.errstate(divide="ignore", over="ignore"):
            rho = space.dist + np.eye(space.n)
            k = model.scale * rho ** (-(model.d + model.alpha))
        if model.kind == "truncated_fractional":
            k = np.where(space.dist < model.eps_trunc, k, model.floor)
    np.fill_diagonal(k, 0.0)
    return k


@dataclass(frozen=True, eq=False)
class WeightAssignment:
    """Strictly positive tuple masses for one degree."""

    degree: int
    masses: np.ndarray

    def __post_init__(self):
        m = np.ascontiguousarray(np.asarray(self.masses, dtype=float))
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)


def assemble_weights(
    model: KernelModel, space: MetricMeasureSpace, tuple_set: TupleSet
) -> WeightAssignment:
    """Fold the degree-p density over sorted tuples into per-tuple masses."""
    p = tuple_set.degree
    t = tuple_set.tuples
    if p == 0:
        masses = space.weights[t[:, 0]] if t.size else np.empty(0)
        return WeightAssignment(0, masses)
    if t.shape[0] == 0:
        return WeightAssignment(p, np.empty(0))
    kmat = kernel_matrix(model, space)
    m = t.shape[0]
    density = np.zeros(m)
    for k in range(p + 1):
        prod = np.ones(m)
        for l in range(p + 1):
            if l != k:
                prod = prod * kmat[t[:, k], t[:, l]]
        density += prod
    density /= p + 1
    wprod = np.prod(space.weights[t], axis=1)
    masses = math.factorial(p + 1) * density * wprod
    if not np.isfinite(masses).all():
        bad = int(np.argwhere(~np.isfinite(masses))[0])
        raise KernelError(f"non-finite mass for tuple {tuple(t[bad])}")
    if masses.min() <= 0.0:
        bad = int(np.argmin(masses))
        raise KernelError(f"non-positive mass for tuple {tuple(t[bad])}")
    return WeightAssignment(p, masses)


@dataclass(frozen=True)
class KernelConditionsReport:
    """Discrete analogues of the near/far integrability and lower-bound checks."""

    near_sup: float
    far_sup: float
    pair_inf: float | None
    vacuous: bool


def check_kernel_conditions(
    model: KernelModel, space: MetricMeasureSpace, eps: float
) -> KernelConditionsReport:
    """Report sup_x of the near-field rho^2-moment and far-field kernel mass.

    near: sum over 0 < rho < eps of rho^2 j(x, y) w_y;  far: sum over rho >= eps
    of j(x, y) w_y; pair_inf: min kernel value over pairs with rho < eps
    (None, flagged vacuous, when no such pair exists).
    """
    kmat = kernel_matrix(model, space)
    off = ~np.eye(space.n, dtype=bool)
    near = off & (space.dist < eps)
    far = off & (space.dist >= eps)
    near_sup = float((np.where(near, space.dist**2 * kmat, 0.0) @ space.weights).max())
    far_sup = float((np.where(far, kmat, 0.0) @ space.weights).max())
    if near.any():
        pair_inf = float(kmat[near].min())
        return KernelConditionsReport(near_sup, far_sup, pair_inf, False)
    return KernelConditionsReport(near_sup, far_sup, None, True)
