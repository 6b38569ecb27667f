"""Deterministic collision operator on the truncated velocity lattice.

The bilinear operator is discretized pair-by-pair: for every ordered pair of
lattice cells and every node of a fixed quadrature over the deviation sphere,
the two post-collisional velocities are formed through the midpoint-sphere
parametrization and read off (or deposited onto) the lattice through tensor
interpolation stencils.  Velocities beyond the truncated box read the zero
extension of the lattice function (partial stencils straddling the edge see
the interior values they cover).  Because the post-collisional offsets depend only on
the lattice offset between the two cells, the whole quadrature compresses
into a translation-invariant entry table that a compiled sweep replays for
every cell; entry order is fixed, loops are sequential, and results are
reproducible bit for bit.

Only the head part of the symmetrized angular profile, deviation angles in
``[eps, pi/2]``, enters the discrete operator; the grazing range below
``eps`` is the regime whose residual influence the estimate checks quantify
separately.  The zero-offset pair drops out of the bracket identically and
is excluded from the entry table; the loss rate, the scatter-form gain, and
the coercivity convolution keep it through the cell-averaged kinetic factor,
which preserves the exact discrete balance between deposited gain mass and
integrated loss up to outflow through the velocity truncation.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from . import _quadloop
from .geometry import perp_frame
from .kernel import (
    CollisionKernel,
    kinetic_cell_average,
    eval_kinetic,
    symmetrized_angular,
)
from .phase_space import Distribution, VelocityGrid


class CollisionConfigError(ValueError):
    """Raised for collision quadrature configurations that are not usable."""


_THETA_SPACINGS = ("uniform", "geometric-toward-eps")
# accepted spellings from scenario files, mapped to the canonical names
_SPACING_ALIASES = {
    "uniform": "uniform",
    "uniform-in-theta": "uniform",
    "geometric-toward-eps": "geometric-toward-eps",
    "geometric": "geometric-toward-eps",
}


@dataclass(frozen=True)
class QuadratureSpec:
    """Discretization knobs for the collision quadrature.

    ``eps`` is the angular cutoff: only deviation angles in [eps, pi/2]
    enter the discrete operator.  ``theta_spacing`` selects a single
    Gauss-Legendre panel over the window ("uniform") or a composite rule on
    dyadic segments refined toward the cutoff ("geometric-toward-eps").
    ``n_phi`` is the azimuthal node count, used in dimension 3 only.
    ``diagonal_exclusion_radius`` removes lattice pairs closer than this in
    relative speed; it must be positive whenever the kinetic factor is
    singular at the origin (negative homogeneity).
    """

    eps: float
    n_theta: int = 8
    n_phi: int = 8
    theta_spacing: str = "uniform"
    diagonal_exclusion_radius: float = 0.0
    interpolation_order: int = 1

    def __post_init__(self) -> None:
        if not 0.0 < self.eps <= math.pi / 2.0:
            raise CollisionConfigError("eps must lie in (0, pi/2]")
        if self.n_theta < 4:
            raise CollisionConfigError("n_theta must be at least 4")
        if self.n_phi < 4:
            raise CollisionConfigError("n_phi must be at least 4")
        canonical = _SPACING_ALIASES.get(self.theta_spacing)
        if canonical is None:
            raise CollisionConfigError(
                f"unknown theta spacing {self.theta_spacing!r}"
            )
        object.__setattr__(self, "theta_spacing", canonical)
        if self.diagonal_exclusion_radius < 0.0:
            raise CollisionConfigError("diagonal_exclusion_radius must be >= 0")
        if self.interpolation_order not in (1, 3):
            raise CollisionConfigError("interpolation_order must be 1 or 3")


@dataclass(frozen=True, eq=False)
class CollisionTable:
    """Precomputed entry table binding one (grid, kernel, quadrature) triple."""

    grid: VelocityGrid
    kernel: CollisionKernel
    quad: QuadratureSpec
    ints: np.ndarray
    floats: np.ndarray
    pad: int
    npx: int
    m0_disc: float
    diag_phi: float
    loss_stencil: np.ndarray
    theta_nodes: np.ndarray
    theta_weights: np.ndarray


@dataclass(frozen=True, eq=False)
class CollisionResult:
    """Value of the collision operator together with bookkeeping integrals."""

    values: np.ndarray
    gain_norm: float
    loss_norm: float
    conservation_defect: np.ndarray


@functools.lru_cache(maxsize=32)
def _theta_rule(
    eps: float, n_theta: int, spacing: str
) -> tuple[np.ndarray, np.ndarray]:
    """Quadrature nodes and weights for the angular window [eps, pi/2]."""
    hi = math.pi / 2.0
    if spacing == "uniform":
        x, w = np.polynomial.legendre.leggauss(n_theta)
        nodes = 0.5 * (hi - eps) * x + 0.5 * (hi + eps)
        weights = 0.5 * (hi - eps) * w
    else:
        edges = [hi]
        while edges[-1] > 2.0 * eps * (1.0 + 1e-12):
            edges.append(edges[-1] / 2.0)
        edges.append(eps)
        per_seg = max(2, -(-n_theta // (len(edges) - 1)))
        x, w = np.polynomial.legendre.leggauss(per_seg)
        parts = []
        for a, b in zip(edges[1:], edges[:-1]):
            parts.append(
                (0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w)
            )
        nodes = np.concatenate([p[0] for p in parts])
        weights = np.concatenate([p[1] for p in parts])
        order = np.argsort(nodes)
        nodes = nodes[order]
        weights = weights[order]
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return nodes, weights


def _check_compatible(
    grid: VelocityGrid, kernel: CollisionKernel, quad: QuadratureSpec
) -> None:
    if not kernel.symmetrized:
        raise CollisionConfigError(
            "collision quadrature requires a symmetrized kernel"
        )
    if kernel.dimension != grid.dimension:
        raise CollisionConfigError(
            f"kernel dimension {kernel.dimension} does not match "
            f"grid dimension {grid.dimension}"
        )
    if kernel.kinetic.gamma < 0.0 and quad.diagonal_exclusion_radius == 0.0:
        raise CollisionConfigError(
            "a kinetic factor with negative homogeneity requires a positive "
            "diagonal_exclusion_radius"
        )


def _offset_lattice(n: int, ndim: int) -> np.ndarray:
    offs = np.arange(1 - n, n)
    grids = np.meshgrid(*([offs] * ndim), indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def _sphere_nodes_2d(
    theta: np.ndarray, weights: np.ndarray, uhat: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Unit sphere nodes around each pair direction, 2-d.

    Returns sigma with shape (npairs, 2 * n_theta, 2) and the per-node
    weights (2 * n_theta,): each deviation angle contributes one node on
    each side of the pair axis.
    """
    perp = np.stack([-uhat[:, 1], uhat[:, 0]], axis=-1)
    cos_t = np.cos(theta)[None, :, None]
    sin_t = np.sin(theta)[None, :, None]
    up = cos_t * uhat[:, None, :] + sin_t * perp[:, None, :]
    dn = cos_t * uhat[:, None, :] - sin_t * perp[:, None, :]
    sigma = np.concatenate([up, dn], axis=1)
    node_w = np.concatenate([weights, weights])
    return sigma, node_w


def _sphere_nodes_3d(
    theta: np.ndarray, weights: np.ndarray, n_phi: int, uhat: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Unit sphere nodes around each pair direction, 3-d.

    Product of the theta rule with a uniform azimuthal rule; weights carry
    the ring circumference factor sin(theta) * 2 pi / n_phi.
    """
    frame = perp_frame(uhat)
    t1 = frame[:, 0, :]
    t2 = frame[:, 1, :]
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    ring = np.cos(phi)[:, None, None] * t1[None, :, :] + np.sin(phi)[
        :, None, None
    ] * t2[None, :, :]
    cos_t = np.cos(theta)[:, None, None, None]
    sin_t = np.sin(theta)[:, None, None, None]
    sigma = cos_t * uhat[None, None, :, :] + sin_t * ring[None, :, :, :]
    sigma = np.moveaxis(sigma, 2, 0).reshape(uhat.shape[0], -1, 3)
    node_w = np.repeat(weights * np.sin(theta), n_phi) * (2.0 * math.pi / n_phi)
    return sigma, node_w


@functools.lru_cache(maxsize=6)
def build_table(
    grid: VelocityGrid, kernel: CollisionKernel, quad: QuadratureSpec
) -> CollisionTable:
    """Assemble (and cache) the translation-invariant quadrature table."""
    _check_compatible(grid, kernel, quad)
    n = grid.points_per_axis
    ndim = grid.dimension
    h = grid.h
    theta, theta_w = _theta_rule(quad.eps, quad.n_theta, quad.theta_spacing)
    bvals = symmetrized_angular(kernel, theta)

    offsets = _offset_lattice(n, ndim)
    absd = np.sqrt(np.sum(offsets.astype(float) ** 2, axis=-1))
    keep = absd > 0.0
    if quad.diagonal_exclusion_radius > 0.0:
        keep &= absd * h >= quad.diagonal_exclusion_radius
    offsets = offsets[keep]
    absd = absd[keep]
    phi = eval_kinetic(kernel.kinetic, absd * h)
    uhat = -offsets / absd[:, None]

    if ndim == 2:
        sigma, node_w = _sphere_nodes_2d(theta, theta_w, uhat)
        node_b = np.concatenate([bvals, bvals])
    elif ndim == 3:
        sigma, node_w = _sphere_nodes_3d(theta, theta_w, quad.n_phi, uhat)
        node_b = np.repeat(bvals, quad.n_phi)
    else:
        raise CollisionConfigError("collision quadrature supports dimensions 2 and 3")
    m0_disc = float(np.sum(node_w * node_b))

    # post-collisional offsets in grid units, relative to the current cell
    delta_p = 0.5 * (absd[:, None, None] * sigma + offsets[:, None, :])
    delta_s = offsets[:, None, :].astype(float) - delta_p
    po = np.floor(delta_p)
    ps = np.floor(delta_s)
    frac_p = delta_p - po
    frac_s = delta_s - ps

    n_nodes = sigma.shape[1]
    coeff = (
        0.5
        * grid.cell_volume
        * (node_w * node_b)[None, :]
        * phi[:, None]
    )
    d_block = np.broadcast_to(offsets[:, None, :], delta_p.shape)
    ints = np.concatenate([d_block, po, ps], axis=-1).reshape(-1, 3 * ndim)
    floats = np.concatenate(
        [coeff[:, :, None], frac_p, frac_s], axis=-1
    ).reshape(-1, 2 * ndim + 1)
    live = floats[:, 0] != 0.0
    ints = np.ascontiguousarray(ints[live], dtype=np.int64)
    floats = np.ascontiguousarray(floats[live], dtype=np.float64)

    pad = int(math.ceil(0.5 * (1.0 + math.sqrt(ndim)) * (n - 1))) + 4
    npx = n + 2 * pad

    diag_phi = kinetic_cell_average(kernel.kinetic, h)
    loss_stencil = _kinetic_stencil(grid, kernel, quad.diagonal_exclusion_radius)
    for arr in (ints, floats, loss_stencil):
        arr.setflags(write=False)
    return CollisionTable(
        grid=grid,
        kernel=kernel,
        quad=quad,
        ints=ints,
        floats=floats,
        pad=pad,
        npx=npx,
        m0_disc=m0_disc,
        diag_phi=diag_phi,
        loss_stencil=loss_stencil,
        theta_nodes=theta,
        theta_weights=theta_w,
    )


def _kinetic_stencil(
    grid: VelocityGrid, kernel: CollisionKernel, exclusion: float
) -> np.ndarray:
    """Kinetic factor sampled on the offset lattice, cell-averaged at zero."""
    n = grid.points_per_axis
    offsets = _offset_lattice(n, grid.dimension)
    absr = np.sqrt(np.sum(offsets.astype(float) ** 2, axis=-1)) * grid.h
    vals = np.zeros(absr.shape)
    center = absr == 0.0
    vals[~center] = eval_kinetic(kernel.kinetic, absr[~center])
    vals[center] = kinetic_cell_average(kernel.kinetic, grid.h)
    if exclusion > 0.0:
        vals[(absr > 0.0) & (absr < exclusion)] = 0.0
    return vals.reshape((2 * n - 1,) * grid.dimension)


def _padded(table: CollisionTable, values: np.ndarray) -> np.ndarray:
    n = table.grid.points_per_axis
    pad = table.pad
    buf = np.zeros((table.npx,) * table.grid.dimension)
    inner = tuple(slice(pad, pad + n) for _ in range(table.grid.dimension))
    buf[inner] = values
    return buf.ravel()


def _moment_columns(grid: VelocityGrid) -> np.ndarray:
    pts = grid.nodes()
    cols = [np.ones(grid.size)]
    cols.extend(pts[:, a] for a in range(grid.dimension))
    cols.append(np.sum(pts * pts, axis=-1))
    return np.stack(cols, axis=-1)


@functools.lru_cache(maxsize=8)
def _invariant_basis(grid: VelocityGrid) -> np.ndarray:
    cols = _moment_columns(grid)
    cols = cols / np.linalg.norm(cols, axis=0)
    basis, _ = np.linalg.qr(cols)
    basis.setflags(write=False)
    return basis


def moment_defect(grid: VelocityGrid, values: np.ndarray) -> np.ndarray:
    """Mass, momentum, and energy integrals of a lattice field."""
    flat = np.asarray(values, dtype=float).reshape(-1)
    return grid.cell_volume * (_moment_columns(grid).T @ flat)


def conserve_project(grid: VelocityGrid, values: np.ndarray) -> np.ndarray:
    """Remove the collision-invariant component of a lattice field.

    Orthogonal projection onto the complement of span{1, v, |v|^2}; the
    result has vanishing mass, momentum, and energy integrals to rounding.
    """
    flat = np.asarray(values, dtype=float).reshape(-1)
    basis = _invariant_basis(grid)
    flat = flat - basis @ (basis.T @ flat)
    return flat.reshape(grid.shape)


def _resolve_pair(
    f: Distribution, g: Distribution | None
) -> tuple[Distribution, Distribution]:
    if g is None:
        return f, f
    if g.grid != f.grid:
        raise CollisionConfigError("both arguments must share one grid")
    return f, g


def eval_loss_rate(
    f: Distribution, kernel: CollisionKernel, quad: QuadratureSpec
) -> np.ndarray:
    """Collision frequency generated by ``f``.

    The kinetic factor convolved with ``f`` (cell-averaged on the diagonal,
    zeroed inside the exclusion radius) times the discrete angular mass of
    the cutoff window.
    """
    table = build_table(f.grid, kernel, quad)
    conv = fftconvolve(f.values, table.loss_stencil, mode="same")
    return table.m0_disc * f.grid.cell_volume * conv


def max_loss_rate(
    f: Distribution, kernel: CollisionKernel, quad: QuadratureSpec
) -> float:
    """Largest collision frequency on the grid (explicit step-size control)."""
    return float(np.max(eval_loss_rate(f, kernel, quad)))


def _loss_field(
    table: CollisionTable, f: Distribution, g: Distribution
) -> np.ndarray:
    """Symmetrized loss term (f L[g] + g L[f]) / 2 on the lattice."""
    grid = table.grid
    conv_g = fftconvolve(g.values, table.loss_stencil, mode="same")
    if g is f:
        conv_f = conv_g
    else:
        conv_f = fftconvolve(f.values, table.loss_stencil, mode="same")
    rate = table.m0_disc * grid.cell_volume
    return 0.5 * rate * (f.values * conv_g + g.values * conv_f)


def eval_Q(
    f: Distribution,
    kernel: CollisionKernel,
    quad: QuadratureSpec,
    g: Distribution | None = None,
    correct: bool = True,
) -> CollisionResult:
    """Symmetrized bilinear collision operator applied to ``(g, f)``.

    With ``g`` omitted this is the quadratic operator of ``f``.  The values
    come from the gather sweep of the full bracket, followed by removal of
    the invariant-moment component (skipped when ``correct`` is False);
    ``conservation_defect`` always reports the moments of the raw sweep.
    Gain and loss integrals are reported alongside.
    """
    f, g = _resolve_pair(f, g)
    table = build_table(f.grid, kernel, quad)
    grid = f.grid
    n = grid.points_per_axis
    fpad = _padded(table, f.values)
    gpad = fpad if g is f else _padded(table, g.values)
    out = np.zeros(grid.size)
    sweep = _quadloop.bracket2 if grid.dimension == 2 else _quadloop.bracket3
    sweep(
        table.ints,
        table.floats,
        fpad,
        gpad,
        n,
        table.npx,
        table.pad,
        quad.interpolation_order,
        out,
    )
    values = out.reshape(grid.shape)
    loss = _loss_field(table, f, g)
    gain = values + loss
    vol = grid.cell_volume
    defect = moment_defect(grid, values)
    if correct:
        values = conserve_project(grid, values)
    return CollisionResult(
        values=values,
        gain_norm=float(vol * np.sum(np.abs(gain))),
        loss_norm=float(vol * np.sum(np.abs(loss))),
        conservation_defect=defect,
    )


def eval_gain(
    f: Distribution,
    kernel: CollisionKernel,
    quad: QuadratureSpec,
    g: Distribution | None = None,
    form: str = "deposit",
) -> Distribution:
    """Gain half of the collision operator.

    ``form="deposit"`` scatters each pair's contribution onto the stencils
    of the post-collisional velocities (adjoint of gather interpolation);
    its lattice integral matches the integrated loss exactly, up to gain
    mass deposited beyond the velocity truncation, which is discarded.
    ``form="gather"`` evaluates the interpolated product at the
    post-collisional points instead.
    """
    if form not in ("deposit", "gather"):
        raise CollisionConfigError(f"unknown gain form {form!r}")
    f, g = _resolve_pair(f, g)
    table = build_table(f.grid, kernel, quad)
    grid = f.grid
    n = grid.points_per_axis
    ndim = grid.dimension
    fpad = _padded(table, f.values)
    gpad = fpad if g is f else _padded(table, g.values)
    if form == "gather":
        out = np.zeros(grid.size)
        kern = _quadloop.gain2 if ndim == 2 else _quadloop.gain3
        kern(
            table.ints,
            table.floats,
            fpad,
            gpad,
            n,
            table.npx,
            table.pad,
            quad.interpolation_order,
            out,
        )
        values = out.reshape(grid.shape)
    else:
        out = np.zeros(table.npx**ndim)
        kern = _quadloop.deposit2 if ndim == 2 else _quadloop.deposit3
        kern(
            table.ints,
            table.floats,
            fpad,
            gpad,
            n,
            table.npx,
            table.pad,
            quad.interpolation_order,
            out,
        )
        inner = tuple(slice(table.pad, table.pad + n) for _ in range(ndim))
        values = out.reshape((table.npx,) * ndim)[inner].copy()
    # zero-offset pairs: both post-collisional velocities coincide with the
    # pair point, so the diagonal contributes analytically in either form
    values += (
        grid.cell_volume * table.diag_phi * table.m0_disc * f.values * g.values
    )
    return Distribution(grid, values, time_stamp=f.time_stamp)


def entropy_production(
    f: Distribution,
    kernel: CollisionKernel,
    quad: QuadratureSpec,
    log_cap: float = 1e3,
) -> tuple[float, int]:
    """Quadrature value of the entropy dissipation functional of ``f``.

    Nonnegative by construction.  Log ratios are clamped at ``log_cap`` and
    degenerate products fall back to the clamp with the sign that keeps the
    summand nonnegative; the number of clamped terms is returned with the
    value.
    """
    if log_cap <= 0.0:
        raise CollisionConfigError("log_cap must be positive")
    table = build_table(f.grid, kernel, quad)
    grid = f.grid
    fpad = _padded(table, f.values)
    kern = _quadloop.entropy2 if grid.dimension == 2 else _quadloop.entropy3
    acc, clamped = kern(
        table.ints,
        table.floats,
        fpad,
        grid.points_per_axis,
        table.npx,
        table.pad,
        quad.interpolation_order,
        log_cap,
    )
    return 0.5 * grid.cell_volume * float(acc), int(clamped)


@functools.lru_cache(maxsize=8)
def _full_stencil(grid: VelocityGrid, kernel: CollisionKernel) -> np.ndarray:
    """Kinetic-factor stencil with every lattice offset kept."""
    stencil = _kinetic_stencil(grid, kernel, 0.0)
    stencil.setflags(write=False)
    return stencil


def coercivity_lower_bound(
    f: Distribution, kernel: CollisionKernel
) -> tuple[float, np.ndarray]:
    """Certified lattice constant c with conv(kinetic, f) >= c <v>^gamma.

    Purely kinetic: no angular nodes enter.  The convolution keeps every
    lattice offset (cell-averaged diagonal, no exclusion); returns the grid
    minimum of the ratio together with the velocity node attaining it.
    """
    if not np.any(f.values > 0.0):
        raise CollisionConfigError(
            "coercivity needs nonnegative input with positive mass"
        )
    grid = f.grid
    stencil = _full_stencil(grid, kernel)
    conv = grid.cell_volume * fftconvolve(f.values, stencil, mode="same")
    pts = grid.nodes()
    weight = (1.0 + np.sum(pts * pts, axis=-1)) ** (
        kernel.kinetic.gamma / 2.0
    )
    ratio = conv.reshape(-1) / weight
    idx = int(np.argmin(ratio))
    return float(ratio[idx]), pts[idx].copy()
