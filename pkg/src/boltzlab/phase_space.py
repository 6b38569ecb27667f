"""Truncated velocity grids, distributions and weighted norms.

The velocity domain is the box ``[-L, L]^N`` discretized by a uniform lattice
with ``n`` points per axis (n even), spacing ``h = 2L/n`` and node
coordinates ``-L + i h`` for ``i = 0..n-1``; each node represents the cell
``[v_i - h/2, v_i + h/2)``, so the origin is always a node and integrals are
cell sums ``sum f_i h^N``.

Norms follow the weighted-Lebesgue convention with the Japanese bracket
``<v> = sqrt(1 + |v|^2)``:

    ||f||_{L^p_s}^p = int |f(v)|^p <v>^(p s) dv

and Sobolev norms sum central finite-difference derivatives (second order
inside, one-sided second order within the boundary layer) up to the requested
order, mixed derivatives included.

Reductions use numpy's pairwise summation, which is deterministic for a fixed
shape, so every norm and moment is reproducible bit for bit.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product

import numpy as np

__all__ = [
    "PhaseSpaceError",
    "VelocityGrid",
    "Distribution",
    "NormSpec",
    "lp_norm",
    "sobolev_norm",
    "norm",
    "moments",
    "entropy",
    "maxwellian",
    "interpolate",
    "fd_derivative",
    "clip_negative",
    "save_checkpoint",
    "load_checkpoint",
]


class PhaseSpaceError(ValueError):
    """Grid or distribution construction/usage error."""


@dataclass(frozen=True)
class VelocityGrid:
    """Uniform cell-centered lattice on ``[-L, L]^N``, N in {2, 3}."""

    dimension: int
    half_width: float
    points_per_axis: int

    def __post_init__(self) -> None:
        if self.dimension not in (2, 3):
            raise PhaseSpaceError("dimension must be 2 or 3")
        if self.half_width <= 0.0:
            raise PhaseSpaceError("half_width must be positive")
        n = self.points_per_axis
        if n < 8 or n % 2 != 0:
            raise PhaseSpaceError("points_per_axis must be even and >= 8")

    @property
    def h(self) -> float:
        return 2.0 * self.half_width / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dimension

    @property
    def size(self) -> int:
        return self.points_per_axis**self.dimension

    @property
    def cell_volume(self) -> float:
        return self.h**self.dimension

    @property
    def axis(self) -> np.ndarray:
        return _axis(self)

    def nodes(self) -> np.ndarray:
        """All node coordinates, shape (size, dimension), C order."""
        return _nodes(self)


@lru_cache(maxsize=32)
def _axis(grid: VelocityGrid) -> np.ndarray:
    a = -grid.half_width + grid.h * np.arange(grid.points_per_axis)
    a.setflags(write=False)
    return a


@lru_cache(maxsize=32)
def _nodes(grid: VelocityGrid) -> np.ndarray:
    axes = np.meshgrid(*([_axis(grid)] * grid.dimension), indexing="ij")
    pts = np.stack([a.reshape(-1) for a in axes], axis=-1)
    pts.setflags(write=False)
    return pts


@lru_cache(maxsize=128)
def _bracket_weight(grid: VelocityGrid, exponent: float) -> np.ndarray:
    """<v>^exponent on the grid, shaped like the value array."""
    speed2 = np.sum(_nodes(grid) ** 2, axis=-1)
    w = (1.0 + speed2) ** (0.5 * exponent)
    w = w.reshape(grid.shape)
    w.setflags(write=False)
    return w


@dataclass
class Distribution:
    """Grid function with a time stamp.

    Values may be signed (differences and collision outputs live here too);
    time steppers are responsible for clipping evolved densities and logging
    what was removed.
    """

    grid: VelocityGrid
    values: np.ndarray
    time_stamp: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise PhaseSpaceError(
                f"value shape {self.values.shape} does not match grid {self.grid.shape}"
            )

    def copy(self) -> "Distribution":
        return Distribution(self.grid, self.values.copy(), self.time_stamp)


@dataclass(frozen=True)
class NormSpec:
    """Weighted norm descriptor: L^p with weight exponent s, derivatives to k."""

    p: float = 1.0
    s: float = 0.0
    k: int = 0

    def __post_init__(self) -> None:
        if not (self.p >= 1.0 or math.isinf(self.p)):
            raise PhaseSpaceError("p must be >= 1 (or inf)")
        if self.k not in (0, 1, 2):
            raise PhaseSpaceError("derivative order k must be 0, 1 or 2")


def _multi_indices(dimension: int, order: int) -> list[tuple[int, ...]]:
    out = []
    for alpha in product(range(order + 1), repeat=dimension):
        if 0 < sum(alpha) <= order:
            out.append(alpha)
    return out


def fd_derivative(values: np.ndarray, h: float, axis: int, order: int = 1) -> np.ndarray:
    """Central finite-difference derivative (one-sided at the boundary)."""
    out = values
    for _ in range(order):
        out = np.gradient(out, h, axis=axis, edge_order=2)
    return out


def _apply_multi_index(f: Distribution, alpha: tuple[int, ...]) -> np.ndarray:
    out = f.values
    for axis, order in enumerate(alpha):
        if order:
            out = fd_derivative(out, f.grid.h, axis, order)
    return out


def lp_norm(f: Distribution, p: float = 1.0, s: float = 0.0) -> float:
    """Weighted Lebesgue norm ``(int |f|^p <v>^(p s))^(1/p)``; p = inf allowed."""
    if not (p >= 1.0 or math.isinf(p)):
        raise PhaseSpaceError("p must be >= 1 (or inf)")
    if math.isinf(p):
        return float(np.max(np.abs(f.values) * _bracket_weight(f.grid, s)))
    integrand = np.abs(f.values) ** p * _bracket_weight(f.grid, p * s)
    return float(np.sum(integrand) * f.grid.cell_volume) ** (1.0 / p)


def sobolev_norm(f: Distribution, k: int, s: float = 0.0, p: float = 1.0) -> float:
    """Weighted Sobolev norm summing all derivatives up to order ``k``.

    ``||f||^p = sum over multi-indices |alpha| <= k of ||d^alpha f||_{L^p_s}^p``
    (max over alpha when p = inf).  Mixed derivatives are included.
    """
    if k not in (0, 1, 2):
        raise PhaseSpaceError("derivative order k must be 0, 1 or 2")
    terms = [lp_norm(f, p, s)]
    for alpha in _multi_indices(f.grid.dimension, k):
        d = Distribution(f.grid, _apply_multi_index(f, alpha), f.time_stamp)
        terms.append(lp_norm(d, p, s))
    if math.isinf(p):
        return max(terms)
    return float(sum(t**p for t in terms)) ** (1.0 / p)


def norm(f: Distribution, spec: NormSpec) -> float:
    if spec.k == 0:
        return lp_norm(f, spec.p, spec.s)
    return sobolev_norm(f, spec.k, spec.s, spec.p)


def moments(f: Distribution) -> tuple[float, np.ndarray, float]:
    """Mass, momentum vector and second moment ``int f |v|^2``."""
    vol = f.grid.cell_volume
    nodes = _nodes(f.grid)
    flat = f.values.reshape(-1)
    mass = float(np.sum(flat) * vol)
    momentum = np.sum(flat[:, None] * nodes, axis=0) * vol
    energy = float(np.sum(flat * np.sum(nodes**2, axis=-1)) * vol)
    return mass, momentum, energy


def entropy(f: Distribution) -> float:
    """``int f log f`` with the 0 log 0 = 0 convention; requires f >= 0."""
    if np.any(f.values < 0.0):
        raise PhaseSpaceError("entropy requires a nonnegative distribution")
    vals = f.values
    out = np.zeros_like(vals)
    positive = vals > 0.0
    out[positive] = vals[positive] * np.log(vals[positive])
    return float(np.sum(out) * f.grid.cell_volume)


def maxwellian(
    grid: VelocityGrid,
    rho: float = 1.0,
    mean: np.ndarray | tuple | None = None,
    temperature: float = 1.0,
) -> Distribution:
    """Maxwellian with prescribed mass, bulk velocity and temperature."""
    if rho <= 0.0 or temperature <= 0.0:
        raise PhaseSpaceError("rho and temperature must be positive")
    n = grid.dimension
    u = np.zeros(n) if mean is None else np.asarray(mean, dtype=float)
    if u.shape != (n,):
        raise PhaseSpaceError("mean velocity has wrong dimension")
    nodes = _nodes(grid)
    arg = np.sum((nodes - u) ** 2, axis=-1) / (2.0 * temperature)
    values = rho * (2.0 * math.pi * temperature) ** (-0.5 * n) * np.exp(-arg)
    return Distribution(grid, values.reshape(grid.shape))


def clip_negative(f: Distribution) -> tuple[Distribution, float]:
    """Clip negative values to zero; returns (clipped, removed mass).

    The removed mass is reported as a positive number: the integral of the
    clipped-away negative part.
    """
    negative = np.minimum(f.values, 0.0)
    removed = float(-np.sum(negative) * f.grid.cell_volume)
    if removed == 0.0:
        return f, 0.0
    return Distribution(f.grid, np.maximum(f.values, 0.0), f.time_stamp), removed


# ---------------------------------------------------------------------------
# Interpolation


def _cubic_weights(t: np.ndarray) -> tuple[np.ndarray, ...]:
    # Lagrange cubic through nodes -1, 0, 1, 2 at fractional position t.
    w0 = -t * (t - 1.0) * (t - 2.0) / 6.0
    w1 = (t * t - 1.0) * (t - 2.0) / 2.0
    w2 = -t * (t + 1.0) * (t - 2.0) / 2.0
    w3 = t * (t * t - 1.0) / 6.0
    return w0, w1, w2, w3


def interpolate(f: Distribution, points: np.ndarray, order: int = 1) -> np.ndarray:
    """Interpolate grid values at arbitrary points; zero outside the box.

    ``order`` 1 is multilinear, ``order`` 3 is separable Lagrange cubic (the
    same stencils the collision quadrature uses).  Points outside
    ``[-L, L]^N`` evaluate to exactly zero; near the boundary the lattice is
    zero-padded, consistent with the truncation convention.
    """
    if order not in (1, 3):
        raise PhaseSpaceError("interpolation order must be 1 or 3")
    grid = f.grid
    pts = np.asarray(points, dtype=float)
    if pts.shape[-1] != grid.dimension:
        raise PhaseSpaceError("point dimension does not match the grid")
    flat_pts = pts.reshape(-1, grid.dimension)
    n = grid.points_per_axis
    pad = 2 if order == 3 else 1
    padded = np.zeros((n + 2 * pad,) * grid.dimension)
    inner = tuple(slice(pad, pad + n) for _ in range(grid.dimension))
    padded[inner] = f.values

    coords = (flat_pts + grid.half_width) / grid.h
    base = np.floor(coords).astype(np.int64)
    frac = coords - base
    inside = np.all(
        (flat_pts >= -grid.half_width) & (flat_pts <= grid.half_width), axis=-1
    )
    base = np.clip(base, -pad, n + pad - 1)

    if order == 1:
        weights_per_axis = (1.0 - frac, frac)
        offsets = (0, 1)
    else:
        weights_per_axis = _cubic_weights(frac)
        offsets = (-1, 0, 1, 2)
    out = np.zeros(flat_pts.shape[0])
    for combo in product(range(len(offsets)), repeat=grid.dimension):
        w = np.ones(flat_pts.shape[0])
        idx = []
        for axis, pick in enumerate(combo):
            w = w * weights_per_axis[pick][:, axis]
            idx.append(np.clip(base[:, axis] + offsets[pick] + pad, 0, n + 2 * pad - 1))
        out += w * padded[tuple(idx)]
    out = np.where(inside, out, 0.0)
    return out.reshape(pts.shape[:-1])


# ---------------------------------------------------------------------------
# Checkpoints

_CHECKPOINT_MAGIC = "# boltzlab-distribution-checkpoint v1"


def save_checkpoint(f: Distribution, path: str) -> None:
    """Write a textual (index, value) checkpoint that round-trips exactly."""
    buf = io.StringIO()
    buf.write(_CHECKPOINT_MAGIC + "\n")
    buf.write(
        "# dimension=%d half_width=%s points_per_axis=%d time_stamp=%s\n"
        % (
            f.grid.dimension,
            format(f.grid.half_width, ".17g"),
            f.grid.points_per_axis,
            format(f.time_stamp, ".17g"),
        )
    )
    buf.write("index,value\n")
    for i, v in enumerate(f.values.reshape(-1)):
        buf.write("%d,%s\n" % (i, format(v, ".17g")))
    with open(path, "w") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path: str) -> Distribution:
    with open(path) as fh:
        magic = fh.readline().rstrip("\n")
        if magic != _CHECKPOINT_MAGIC:
            raise PhaseSpaceError(f"not a distribution checkpoint: {path}")
        header = fh.readline().rstrip("\n").lstrip("# ")
        fields = dict(item.split("=", 1) for item in header.split())
        columns = fh.readline().rstrip("\n")
        if columns != "index,value":
            raise PhaseSpaceError("malformed checkpoint column header")
        grid = VelocityGrid(
            dimension=int(fields["dimension"]),
            half_width=float(fields["half_width"]),
            points_per_axis=int(fields["points_per_axis"]),
        )
        values = np.empty(grid.size)
        seen = 0
        for line in fh:
            line = line.strip()
            if not line:
                continue
            idx_text, val_text = line.split(",")
            values[int(idx_text)] = float(val_text)
            seen += 1
        if seen != grid.size:
            raise PhaseSpaceError(
                f"checkpoint holds {seen} values, grid needs {grid.size}"
            )
    return Distribution(
        grid, values.reshape(grid.shape), time_stamp=float(fields["time_stamp"])
    )
