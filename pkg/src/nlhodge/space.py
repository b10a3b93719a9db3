"""Finite metric measure spaces: validated distance matrices plus point weights."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

METRIC_TOL = 1e-12
MIN_SEPARATION_WARN = 1e-9


class SpaceValidationError(ValueError):
    """Raised when a distance matrix or weight vector fails validation."""


def _check_metric(dist: np.ndarray, tol: float = METRIC_TOL) -> None:
    if dist.ndim != 2 or dist.shape[0] != dist.shape[1]:
        raise SpaceValidationError(f"distance matrix must be square, got shape {dist.shape}")
    n = dist.shape[0]
    if n < 1:
        raise SpaceValidationError("empty space")
    if not np.isfinite(dist).all():
        bad = np.argwhere(~np.isfinite(dist))[0]
        raise SpaceValidationError(f"non-finite distance at ({bad[0]}, {bad[1]})")
    asym = np.abs(dist - dist.T)
    if asym.max(initial=0.0) > tol:
        i, j = np.unravel_index(np.argmax(asym), asym.shape)
        raise SpaceValidationError(
            f"asymmetric distances at ({i}, {j}): {dist[i, j]!r} vs {dist[j, i]!r}"
        )
    diag = np.abs(np.diagonal(dist))
    if diag.max(initial=0.0) > tol:
        i = int(np.argmax(diag))
        raise SpaceValidationError(f"nonzero diagonal at ({i}, {i}): {dist[i, i]!r}")
    off = dist + np.eye(n)  # mask the diagonal when checking positivity
    if off.min() <= 0.0:
        i, j = np.unravel_index(np.argmin(off), off.shape)
        raise SpaceValidationError(f"non-positive distance between distinct points ({i}, {j})")
    # Triangle inequality, one intermediate point per pass to keep memory at O(n^2).
    for j in range(n):
        slack = dist[:, j, None] + dist[None, j, :] - dist
        if slack.min() < -tol:
            i, k = np.unravel_index(np.argmin(slack), slack.shape)
            raise SpaceValidationError(
                f"triangle inequality violated for ({i}, {j}, {k}): "
                f"d({i},{k})={dist[i, k]!r} > d({i},{j})+d({j},{k})={dist[i, j] + dist[j, k]!r}"
            )
    if n > 1:
        min_sep = np.min(dist + np.eye(n) * dist.max())
        if min_sep < MIN_SEPARATION_WARN:
            warnings.warn(
                f"minimum point separation {min_sep:.3e} below {MIN_SEPARATION_WARN:.0e}; "
                "kernel weights may overflow",
                RuntimeWarning,
                stacklevel=3,
            )


def _check_weights(weights: np.ndarray, n: int) -> None:
    if weights.shape != (n,):
        raise SpaceValidationError(f"weights shape {weights.shape} does not match {n} points")
    if not np.isfinite(weights).all():
        i = int(np.argwhere(~np.isfinite(weights))[0])
        raise SpaceValidationError(f"non-finite weight at {i}")
    if weights.min() <= 0.0:
        i = int(np.argmin(weights))
        raise SpaceValidationError(f"non-positive weight at {i}: {float(weights[i])}")


@dataclass(frozen=True, eq=False)
class MetricMeasureSpace:
    """Point set given by pairwise distances and strictly positive weights.

    The distance matrix must be a genuine metric up to 1e-12 roundoff:
    symmetric, zero diagonal, positive off the diagonal, triangle inequality.
    """

    dist: np.ndarray
    weights: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        dist = np.ascontiguousarray(np.asarray(self.dist, dtype=float))
        weights = np.ascontiguousarray(np.asarray(self.weights, dtype=float))
        _check_metric(dist)
        _check_weights(weights, dist.shape[0])
        dist.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "dist", dist)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.dist.shape[0]

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum())

    def mesh_width(self) -> float:
        """Largest nearest-neighbor distance (covering scale of the sample)."""
        if self.n == 1:
            return 0.0
        masked = self.dist + np.eye(self.n) * (self.dist.max() + 1.0)
        return float(masked.min(axis=1).max())

    def permuted(self, perm) -> "MetricMeasureSpace":
        """Relabeled copy; all intrinsic quantities must be invariant under this."""
        perm = np.asarray(perm, dtype=int)
        if sorted(perm.tolist()) != list(range(self.n)):
            raise SpaceValidationError("not a permutation")
        return MetricMeasureSpace(
            self.dist[np.ix_(perm, perm)], self.weights[perm], dict(self.metadata)
        )


def gen_circle(n: int, radius: float = 1.0) -> MetricMeasureSpace:
    """n equally spaced points on a circle with arc-length (geodesic) distances.

    dist(i, j) = radius * (2*pi/n) * min(|i-j|, n-|i-j|); every weight is
    2*pi*radius/n so the total mass is the circumference.
    """
    if n < 3:
        raise SpaceValidationError("circle needs at least 3 points")
    if radius <= 0:
        raise SpaceValidationError("radius must be positive")
    idx = np.arange(n)
    k = np.abs(idx[:, None] - idx[None, :])
    k = np.minimum(k, n - k)
    step = radius * (2.0 * np.pi / n)
    dist = step * k
    weights = np.full(n, 2.0 * np.pi * radius / n)
    return MetricMeasureSpace(dist, weights, {"generator": "circle", "n": n, "radius": radius, "dim": 1})


def gen_interval(n: int) -> MetricMeasureSpace:
    """n equally spaced points on [0, 1], weight 1/n each (total mass 1)."""
    if n < 2:
        raise SpaceValidationError("interval needs at least 2 points")
    x = np.linspace(0.0, 1.0, n)
    dist = np.abs(x[:, None] - x[None, :])
    weights = np.full(n, 1.0 / n)
    return MetricMeasureSpace(
        dist, weights, {"generator": "interval", "n": n, "dim": 1, "points": x}
    )


def gen_two_components(n_each: int, gap: float) -> MetricMeasureSpace:
    """Two unit intervals separated by `gap` along the line, n_each points each."""
    if n_each < 2:
        raise SpaceValidationError("each component needs at least 2 points")
    if gap <= 0:
        raise SpaceValidationError("gap must be positive")
    left = np.linspace(0.0, 1.0, n_each)
    right = np.linspace(1.0 + gap, 2.0 + gap, n_each)
    x = np.concatenate([left, right])
    dist = np.abs(x[:, None] - x[None, :])
    weights = np.full(2 * n_each, 1.0 / n_each)
    return MetricMeasureSpace(
        dist,
        weights,
        {"generator": "two_components", "n_each": n_each, "gap": gap, "dim": 1, "points": x},
    )


def gen_punctured_interval(n: int, hole_center: float, hole_radius: float) -> MetricMeasureSpace:
    """Equally spaced [0, 1] grid with points strictly inside the hole removed.

    The hole is the open band (hole_center - hole_radius, hole_center + hole_radius);
    hole_radius = 0 removes nothing.
    """
    if n < 2:
        raise SpaceValidationError("interval needs at least 2 points")
    if not (0.0 < hole_center < 1.0):
        raise SpaceValidationError("hole center must lie strictly inside (0, 1)")
    if hole_radius < 0:
        raise SpaceValidationError("hole radius must be nonnegative")
    x = np.linspace(0.0, 1.0, n)
    keep = np.abs(x - hole_center) >= hole_radius if hole_radius > 0 else np.ones(n, bool)
    x = x[keep]
    if x.size < 2:
        raise SpaceValidationError("hole removes too many points")
    dist = np.abs(x[:, None] - x[None, :])
    weights = np.full(x.size, 1.0 / n)
    return MetricMeasureSpace(
        dist,
        weights,
        {
            "generator": "punctured_interval",
            "n": n,
            "hole_center": hole_center,
            "hole_radius": hole_radius,
            "dim": 1,
            "points": x,
        },
    )


def gen_sphere(n: int) -> MetricMeasureSpace:
    """Fibonacci point set on the unit 2-sphere with geodesic distances.

    Weights are 4*pi/n each. Distances use atan2 of cross/dot products, which
    stays accurate for nearly coincident and nearly antipodal pairs.
    """
    if n < 4:
        raise SpaceValidationError("sphere needs at least 4 points")
    i = np.arange(n)
    z = 1.0 - 2.0 * (i + 0.5) / n
    golden = (1.0 + np.sqrt(5.0)) / 2.0
    phi = 2.0 * np.pi * i / golden
    r = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)
    dots = np.clip(pts @ pts.T, -1.0, 1.0)
    crosses = np.linalg.norm(np.cross(pts[:, None, :], pts[None, :, :]), axis=2)
    dist = np.arctan2(crosses, dots)
    np.fill_diagonal(dist, 0.0)
    dist = 0.5 * (dist + dist.T)
    weights = np.full(n, 4.0 * np.pi / n)
    return MetricMeasureSpace(
        dist, weights, {"generator": "sphere", "n": n, "dim": 2, "points": pts}
    )


def load_distance_matrix(path, weights_path=None) -> MetricMeasureSpace:
    """Load a space from a dense CSV distance matrix plus optional weight sidecar.

    The matrix file holds one comma-separated row per line; the sidecar holds one
    positive weight per line (uniform 1/n if absent). All validation failures
    raise SpaceValidationError naming the offending entries.
    """
    try:
        dist = np.loadtxt(path, delimiter=",", ndmin=2)
    except ValueError as exc:
        raise SpaceValidationError(f"cannot parse distance matrix {path}: {exc}") from exc
    if weights_path is not None:
        try:
            weights = np.loadtxt(weights_path, ndmin=1)
        except ValueError as exc:
            raise SpaceValidationError(f"cannot parse weights {weights_path}: {exc}") from exc
    else:
        weights = np.full(dist.shape[0], 1.0 / dist.shape[0])
    return MetricMeasureSpace(dist, weights, {"generator": "file", "path": str(path)})
