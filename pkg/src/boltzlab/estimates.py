"""Time integration and the quantitative-estimate harness.

This module turns the collision operator into trajectories and turns
growth/stability estimates into falsifiable numerical verdicts.  The
pattern throughout is calibrate-then-freeze-then-validate: every
inequality carries an unspecified prefactor, so a constant is fitted on
a declared calibration run, frozen, and then required to hold on fresh
runs with no further tuning.

Contents:

* an initial-data library with closed-form moments,
* a conservative explicit stepper (``step``) and driver (``evolve``)
  producing write-once :class:`TrajectoryReport` records,
* the two-solution contraction check (``stability_run`` and its
  constant ``compute_Cs``),
* single-solution growth checks (``lp_ode_check``, ``moment_check``,
  ``gradient_check``) against Gronwall/Riccati envelopes,
* the grazing-limit consistency sweep (``grazing_sweep``).

All randomness is seeded and every reduction is a fixed-order numpy
sum, so identical inputs produce bit-identical reports.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import integrate, special

from .collision import (
    QuadratureSpec,
    coercivity_lower_bound,
    entropy_production,
    eval_Q,
    max_loss_rate,
)
from .kernel import AngularPart, CollisionKernel, angular_moment
from .phase_space import (
    Distribution,
    VelocityGrid,
    entropy,
    fd_derivative,
    lp_norm,
    maxwellian,
    moments,
    sobolev_norm,
)

__all__ = [
    "EstimateConfigError",
    "EstimateRunError",
    "GLOBAL_REGIME",
    "LOCAL_REGIME",
    "INITIAL_DATA",
    "PERTURBATION_SHAPES",
    "classify_regime",
    "closed_form_moments",
    "make_initial_data",
    "matched_maxwellian",
    "perturbed_initial_data",
    "step",
    "evolve",
    "SimulationConfig",
    "TrajectoryReport",
    "StabilityCalibration",
    "StabilityReport",
    "run_pair",
    "difference_norms",
    "calibrate_stability",
    "compute_Cs",
    "stability_aggregate",
    "stability_run",
    "fit_lp_constant",
    "fit_moment_constant",
    "fit_gradient_constant",
    "lp_ode_rhs",
    "riccati_blowup_time",
    "LpOdeReport",
    "lp_ode_check",
    "MomentReport",
    "moment_check",
    "GradientReport",
    "gradient_check",
    "GrazingSweepReport",
    "grazing_sweep",
]


class EstimateConfigError(ValueError):
    """A run or check was configured outside its admissible range."""


class EstimateRunError(RuntimeError):
    """A run aborted at runtime (CFL breach, mass loss, failed repair)."""


GLOBAL_REGIME = "global-regime"
LOCAL_REGIME = "local-regime"


def classify_regime(gamma: float, nu: float) -> str:
    """Label a (gamma, nu) pair by how long its checks are trusted.

    ``global-regime`` runs (gamma >= -nu, gamma <= 0 included as well as
    hard kinetic factors) are expected to sustain long horizons;
    ``local-regime`` runs are only checked up to the blow-up time of
    their Riccati envelope.  The boundary case gamma == -nu is counted
    as global.
    """
    if gamma >= -nu:
        return GLOBAL_REGIME
    return LOCAL_REGIME


# ---------------------------------------------------------------------------
# initial-data library


INITIAL_DATA = ("maxwellian", "bimodal", "anisotropic", "bump")

_BUMP_INTEGRALS: dict[int, tuple[float, float]] = {}


def _bump_integrals(dimension: int) -> tuple[float, float]:
    """Mass and radial second moment of exp(-1/(1-r^2)) on the unit ball."""
    cached = _BUMP_INTEGRALS.get(dimension)
    if cached is not None:
        return cached
    if dimension == 2:
        # polar substitution reduces both integrals to exponential integrals
        e2 = float(special.expn(2, 1.0))
        e3 = float(special.expn(3, 1.0))
        i0 = math.pi * e2
        i2 = math.pi * (e2 - e3)
    else:
        profile = lambda r: math.exp(-1.0 / (1.0 - r * r))  # noqa: E731
        area = 2.0 * math.pi ** (dimension / 2.0) / math.gamma(dimension / 2.0)
        i0 = area * integrate.quad(lambda r: profile(r) * r ** (dimension - 1), 0.0, 1.0)[0]
        i2 = area * integrate.quad(lambda r: profile(r) * r ** (dimension + 1), 0.0, 1.0)[0]
    _BUMP_INTEGRALS[dimension] = (i0, i2)
    return i0, i2


def _as_vector(value, dimension: int, name: str) -> np.ndarray:
    if value is None:
        return np.zeros(dimension)
    vec = np.asarray(value, dtype=float).reshape(-1)
    if vec.size != dimension:
        raise EstimateConfigError(f"{name} must have {dimension} components")
    return vec


def closed_form_moments(name: str, dimension: int, **params) -> tuple[float, np.ndarray, float]:
    """Exact (mass, momentum, energy) of a library profile.

    Used to cross-check that a grid resolves the profile it was asked to
    sample: the discrete moments of ``make_initial_data`` must agree
    with these up to truncation error.
    """
    if name == "maxwellian":
        rho = float(params.get("rho", 1.0))
        mean = _as_vector(params.get("mean"), dimension, "mean")
        temperature = float(params.get("temperature", 1.0))
        _check_positive(rho=rho, temperature=temperature)
        return rho, rho * mean, rho * (mean @ mean + dimension * temperature)
    if name == "bimodal":
        rho = float(params.get("rho", 1.0))
        drift = _as_vector(params.get("drift", _default_drift(dimension)), dimension, "drift")
        temperature = float(params.get("temperature", 0.8))
        _check_positive(rho=rho, temperature=temperature)
        return rho, np.zeros(dimension), rho * (drift @ drift + dimension * temperature)
    if name == "anisotropic":
        rho = float(params.get("rho", 1.0))
        mean = _as_vector(params.get("mean"), dimension, "mean")
        temps = _as_vector(
            params.get("temperatures", _default_temps(dimension)), dimension, "temperatures"
        )
        if np.any(temps <= 0.0):
            raise EstimateConfigError("temperatures must be positive")
        _check_positive(rho=rho)
        return rho, rho * mean, rho * (mean @ mean + float(temps.sum()))
    if name == "bump":
        rho = float(params.get("rho", 1.0))
        center = _as_vector(params.get("center"), dimension, "center")
        radius = float(params.get("radius", 3.0))
        _check_positive(rho=rho, radius=radius)
        i0, i2 = _bump_integrals(dimension)
        return rho, rho * center, rho * (center @ center + radius * radius * i2 / i0)
    raise EstimateConfigError(
        f"unknown initial data {name!r}; available: {', '.join(INITIAL_DATA)}"
    )


def _check_positive(**named: float) -> None:
    for key, value in named.items():
        if not value > 0.0:
            raise EstimateConfigError(f"{key} must be positive, got {value}")


def _default_drift(dimension: int) -> np.ndarray:
    drift = np.zeros(dimension)
    drift[0] = 1.5
    return drift


def _default_temps(dimension: int) -> np.ndarray:
    temps = np.full(dimension, 0.5)
    temps[0] = 1.5
    return temps


def make_initial_data(name: str, grid: VelocityGrid, **params) -> Distribution:
    """Sample a library profile on ``grid``.

    No renormalisation is applied; the discrete moments are whatever the
    grid resolves, and ``evolve`` conserves those.
    """
    dim = grid.dimension
    closed_form_moments(name, dim, **params)  # validates name and params
    if name == "maxwellian":
        return maxwellian(
            grid,
            float(params.get("rho", 1.0)),
            _as_vector(params.get("mean"), dim, "mean"),
            float(params.get("temperature", 1.0)),
        )
    if name == "bimodal":
        rho = float(params.get("rho", 1.0))
        drift = _as_vector(params.get("drift", _default_drift(dim)), dim, "drift")
        temperature = float(params.get("temperature", 0.8))
        lobe_a = maxwellian(grid, 0.5 * rho, drift, temperature)
        lobe_b = maxwellian(grid, 0.5 * rho, -drift, temperature)
        return Distribution(grid, lobe_a.values + lobe_b.values)
    if name == "anisotropic":
        rho = float(params.get("rho", 1.0))
        mean = _as_vector(params.get("mean"), dim, "mean")
        temps = _as_vector(params.get("temperatures", _default_temps(dim)), dim, "temperatures")
        pts = grid.nodes()
        arg = np.zeros(grid.size)
        norm = rho
        for axis in range(dim):
            arg -= (pts[:, axis] - mean[axis]) ** 2 / (2.0 * temps[axis])
            norm /= math.sqrt(2.0 * math.pi * temps[axis])
        return Distribution(grid, (norm * np.exp(arg)).reshape(grid.shape))
    # bump: smooth, compactly supported in a ball of the given radius
    rho = float(params.get("rho", 1.0))
    center = _as_vector(params.get("center"), dim, "center")
    radius = float(params.get("radius", 3.0))
    i0, _ = _bump_integrals(dim)
    amplitude = rho / (i0 * radius**dim)
    pts = grid.nodes()
    rsq = ((pts - center) ** 2).sum(axis=1) / (radius * radius)
    values = np.zeros(grid.size)
    inside = rsq < 1.0
    values[inside] = amplitude * np.exp(-1.0 / (1.0 - rsq[inside]))
    return Distribution(grid, values.reshape(grid.shape))


def matched_maxwellian(f: Distribution) -> Distribution:
    """Maxwellian sharing the discrete mass, momentum and energy of ``f``."""
    mass, momentum, energy = moments(f)
    if mass <= 0.0:
        raise EstimateConfigError("matched_maxwellian needs positive mass")
    mean = momentum / mass
    temperature = (energy / mass - mean @ mean) / f.grid.dimension
    if temperature <= 0.0:
        raise EstimateConfigError("nonpositive temperature, data is not resolvable")
    return maxwellian(f.grid, mass, mean, temperature)


# ---------------------------------------------------------------------------
# conserved-moment bookkeeping


def _collision_invariants(grid: VelocityGrid) -> np.ndarray:
    """Rows are 1, v_1 .. v_N, |v|^2 evaluated at the grid nodes."""
    pts = grid.nodes()
    rows = [np.ones(grid.size)]
    rows.extend(pts[:, axis] for axis in range(grid.dimension))
    rows.append((pts * pts).sum(axis=1))
    return np.stack(rows)


def _moment_vector(f: Distribution) -> np.ndarray:
    mass, momentum, energy = moments(f)
    return np.concatenate(([mass], momentum, [energy]))


def _restore_moments(
    grid: VelocityGrid, values: np.ndarray, target: np.ndarray
) -> tuple[np.ndarray, float]:
    """Rescale ``values`` by 1 + (low-degree polynomial) to hit ``target``.

    The correction is proportional to the local density, so it cannot
    create negative values as long as the multiplier stays positive.
    Raises :class:`EstimateRunError` when the repair would need a sign
    change, which signals that far too much mass was clipped.
    """
    psi = _collision_invariants(grid)
    flat = values.reshape(-1)
    weighted = flat * grid.cell_volume
    gram = (psi * weighted) @ psi.T
    defect = target - psi @ weighted
    try:
        coeff = np.linalg.solve(gram, defect)
    except np.linalg.LinAlgError as exc:
        raise EstimateRunError("conserved-moment repair is singular") from exc
    multiplier = 1.0 + coeff @ psi
    low = float(multiplier.min())
    if low <= 0.0:
        raise EstimateRunError(
            f"conserved-moment repair went negative (min multiplier {low:.3e})"
        )
    return (flat * multiplier).reshape(grid.shape), low


# ---------------------------------------------------------------------------
# perturbations for two-solution runs


PERTURBATION_SHAPES = ("bump", "dipole", "quadrupole", "random")


def _perturbation_field(grid: VelocityGrid, shape: str, seed: int) -> np.ndarray:
    pts = grid.nodes()
    x = pts[:, 0]
    y = pts[:, 1] if grid.dimension > 1 else np.zeros_like(x)
    if shape == "bump":
        center = np.full(grid.dimension, 0.0)
        center[0] = 1.0
        if grid.dimension > 1:
            center[1] = 0.5
        return np.exp(-((pts - center) ** 2).sum(axis=1) / 0.5)
    if shape == "dipole":
        return x * np.exp(-(pts * pts).sum(axis=1) / 4.0)
    if shape == "quadrupole":
        return (x * x - y * y) * np.exp(-(pts * pts).sum(axis=1) / 4.0)
    if shape == "random":
        rng = np.random.default_rng(seed)
        raw = rng.standard_normal(grid.shape)
        # cheap smoothing keeps the perturbation resolvable on the grid
        smooth = raw
        for axis in range(grid.dimension):
            smooth = (
                np.roll(smooth, 1, axis) + 2.0 * smooth + np.roll(smooth, -1, axis)
            ) / 4.0
        return smooth.reshape(-1)
    raise EstimateConfigError(
        f"unknown perturbation shape {shape!r}; available: {', '.join(PERTURBATION_SHAPES)}"
    )


def perturbed_initial_data(
    f0: Distribution,
    *,
    shape: str = "bump",
    amplitude: float = 0.05,
    seed: int = 0,
) -> Distribution:
    """Multiplicative perturbation of ``f0`` with identical invariants.

    Returns ``f0 * (1 + eta)`` where ``eta`` is the requested field with
    its density-weighted mass/momentum/energy components removed, scaled
    so the two profiles differ by exactly ``amplitude`` in unweighted
    L1.  Nonnegativity is preserved by capping the relative size of
    ``eta``.
    """
    _check_positive(amplitude=amplitude)
    grid = f0.grid
    eta = _perturbation_field(grid, shape, seed)
    psi = _collision_invariants(grid)
    weight = f0.values.reshape(-1) * grid.cell_volume
    gram = (psi * weight) @ psi.T
    rhs = psi @ (weight * eta)
    try:
        coeff = np.linalg.solve(gram, rhs)
    except np.linalg.LinAlgError as exc:
        raise EstimateRunError("perturbation projection is singular") from exc
    eta = eta - coeff @ psi
    scale = float(np.abs(weight * eta).sum())
    if scale <= 0.0:
        raise EstimateConfigError("perturbation vanishes against the data")
    eta *= amplitude / scale
    peak = float(np.abs(eta).max())
    if peak > 0.9:
        raise EstimateConfigError(
            f"amplitude {amplitude} too large for this shape (relative peak {peak:.2f})"
        )
    values = f0.values * (1.0 + eta.reshape(grid.shape))
    return Distribution(grid, values, f0.time_stamp)


# ---------------------------------------------------------------------------
# configuration and reports


def _float_tuple(values) -> tuple[float, ...]:
    return tuple(sorted({float(v) for v in values}))


@dataclass(frozen=True)
class SimulationConfig:
    """Everything needed to reproduce one trajectory.

    ``s_list``/``w1_list``/``w2_list`` pick the polynomial weights of
    the recorded L1 and Sobolev series (the primary weight ``q`` is
    always included), ``p_list`` the recorded Lebesgue orders, and
    ``grad_p_list`` the orders for gradient-only Lebesgue norms.
    """

    kernel: CollisionKernel
    grid: VelocityGrid
    quad: QuadratureSpec
    dt: float
    t_end: float
    integrator: str = "euler"
    q: float = 2.0
    record_every: int = 1
    s_list: tuple[float, ...] = ()
    p_list: tuple[float, ...] = (2.0,)
    w1_list: tuple[float, ...] = ()
    w2_list: tuple[float, ...] = ()
    grad_p_list: tuple[float, ...] = ()
    entropy_slack: float = 1e-8
    clip_limit: float = 1e-2
    cfl_limit: float = 0.5
    track_production: bool = True
    store_snapshots: bool = False

    def __post_init__(self) -> None:
        if self.dt <= 0.0:
            raise EstimateConfigError("dt must be positive")
        if self.t_end <= 0.0:
            raise EstimateConfigError("t_end must be positive")
        steps = self.t_end / self.dt
        if abs(steps - round(steps)) > 1e-9 * max(1.0, steps):
            raise EstimateConfigError("t_end must be an integer number of steps")
        if self.integrator not in ("euler", "rk4"):
            raise EstimateConfigError(f"unknown integrator {self.integrator!r}")
        if self.q < 0.0:
            raise EstimateConfigError("q must be nonnegative")
        if not (isinstance(self.record_every, int) and self.record_every >= 1):
            raise EstimateConfigError("record_every must be a positive integer")
        if self.entropy_slack < 0.0:
            raise EstimateConfigError("entropy_slack must be nonnegative")
        if not 0.0 < self.clip_limit:
            raise EstimateConfigError("clip_limit must be positive")
        if not 0.0 < self.cfl_limit <= 1.0:
            raise EstimateConfigError("cfl_limit must lie in (0, 1]")
        for name in ("s_list", "p_list", "w1_list", "w2_list", "grad_p_list"):
            object.__setattr__(self, name, _float_tuple(getattr(self, name)))
        for p in self.p_list + self.grad_p_list:
            if p < 1.0:
                raise EstimateConfigError(f"Lebesgue order {p} must be >= 1")
        for s in self.s_list + self.w1_list + self.w2_list:
            if s < 0.0:
                raise EstimateConfigError(f"polynomial weight {s} must be >= 0")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def l1_weights(self) -> tuple[float, ...]:
        return _float_tuple((0.0, 2.0, self.q) + self.s_list)

    def w11_weights(self) -> tuple[float, ...]:
        return _float_tuple((self.q,) + self.w1_list)


def _series_lookup(table: dict[float, np.ndarray], key: float, what: str) -> np.ndarray:
    for stored, series in table.items():
        if math.isclose(stored, key, rel_tol=1e-12, abs_tol=1e-12):
            return series
    recorded = ", ".join(f"{k:g}" for k in sorted(table)) or "none"
    raise EstimateConfigError(f"{what} {key:g} was not recorded (recorded: {recorded})")


@dataclass
class TrajectoryReport:
    """Write-once record of one evolution.

    Series are sampled at ``times`` (strictly increasing, starting at
    the initial time).  ``clipped_mass`` is cumulative.  When
    ``entropy_production`` tracking is disabled the field is ``None``.
    """

    config: SimulationConfig
    times: np.ndarray
    mass: np.ndarray
    momentum: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    entropy_production: np.ndarray | None
    l1: dict[float, np.ndarray]
    lp: dict[float, np.ndarray]
    w11: dict[float, np.ndarray]
    w21: dict[float, np.ndarray]
    grad_lp: dict[float, np.ndarray]
    coercivity: np.ndarray
    equilibrium_distance: np.ndarray
    clipped_mass: np.ndarray
    regime: str
    final: Distribution
    snapshots: tuple[np.ndarray, ...] | None = None

    def __post_init__(self) -> None:
        n = self.times.size
        if n < 2:
            raise EstimateConfigError("a report needs at least two record times")
        if not np.all(np.diff(self.times) > 0.0):
            raise EstimateConfigError("record times must be strictly increasing")
        named = {
            "mass": self.mass,
            "energy": self.energy,
            "entropy": self.entropy,
            "coercivity": self.coercivity,
            "equilibrium_distance": self.equilibrium_distance,
            "clipped_mass": self.clipped_mass,
        }
        for label, series in named.items():
            if series.shape != (n,):
                raise EstimateConfigError(f"series {label} has inconsistent length")
        if self.momentum.shape != (n, self.config.grid.dimension):
            raise EstimateConfigError("momentum series has inconsistent shape")
        if self.entropy_production is not None and self.entropy_production.shape != (n,):
            raise EstimateConfigError("entropy production series has inconsistent length")
        for table in (self.l1, self.lp, self.w11, self.w21, self.grad_lp):
            for series in table.values():
                if series.shape != (n,):
                    raise EstimateConfigError("a norm series has inconsistent length")
        if self.snapshots is not None and len(self.snapshots) != n:
            raise EstimateConfigError("snapshot count does not match record times")

    def l1_series(self, s: float) -> np.ndarray:
        return _series_lookup(self.l1, s, "L1 weight")

    def lp_series(self, p: float) -> np.ndarray:
        return _series_lookup(self.lp, p, "Lebesgue order")

    def w11_series(self, s: float) -> np.ndarray:
        return _series_lookup(self.w11, s, "first-order Sobolev weight")

    def w21_series(self, s: float) -> np.ndarray:
        return _series_lookup(self.w21, s, "second-order Sobolev weight")

    def grad_lp_series(self, p: float) -> np.ndarray:
        return _series_lookup(self.grad_lp, p, "gradient Lebesgue order")


# ---------------------------------------------------------------------------
# stepping


def _grad_only_norm(f: Distribution, p: float) -> float:
    total = 0.0
    for axis in range(f.grid.dimension):
        part = fd_derivative(f.values, f.grid.h, axis)
        total += lp_norm(Distribution(f.grid, part), p)
    return total


def step(
    f: Distribution,
    kernel: CollisionKernel,
    quad: QuadratureSpec,
    dt: float,
    *,
    integrator: str = "euler",
    anchor: np.ndarray | None = None,
) -> tuple[Distribution, float]:
    """Advance one time step; returns the new state and the clipped mass.

    Every stage evaluation is projected onto the conserved-moment
    complement, the combined update is clipped to be nonnegative, and
    the clipped state is repaired multiplicatively so its mass,
    momentum and energy land exactly on ``anchor`` (the incoming
    moments when not supplied).
    """
    if dt <= 0.0:
        raise EstimateConfigError("dt must be positive")
    if anchor is None:
        anchor = _moment_vector(f)
    grid = f.grid
    if integrator == "euler":
        slope = eval_Q(f, kernel, quad).values
        candidate = f.values + dt * slope
    elif integrator == "rk4":
        k1 = eval_Q(f, kernel, quad).values
        k2 = eval_Q(Distribution(grid, f.values + 0.5 * dt * k1), kernel, quad).values
        k3 = eval_Q(Distribution(grid, f.values + 0.5 * dt * k2), kernel, quad).values
        k4 = eval_Q(Distribution(grid, f.values + dt * k3), kernel, quad).values
        candidate = f.values + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        raise EstimateConfigError(f"unknown integrator {integrator!r}")
    negative = np.minimum(candidate, 0.0)
    clipped = -float(negative.sum()) * grid.cell_volume
    candidate = np.maximum(candidate, 0.0)
    repaired, _ = _restore_moments(grid, candidate, anchor)
    return Distribution(grid, repaired, f.time_stamp + dt), clipped


def _record_bundle(
    f: Distribution,
    cfg: SimulationConfig,
    reference: Distribution,
    cumulative_clip: float,
) -> dict:
    mass, momentum, energy = moments(f)
    bundle = {
        "mass": mass,
        "momentum": momentum,
        "energy": energy,
        "entropy": entropy(f),
        "coercivity": coercivity_lower_bound(f, cfg.kernel)[0],
        "eq_dist": lp_norm(Distribution(f.grid, f.values - reference.values), 1.0),
        "clip": cumulative_clip,
        "l1": {s: lp_norm(f, 1.0, s) for s in cfg.l1_weights()},
        "lp": {p: lp_norm(f, p) for p in cfg.p_list},
        "w11": {s: sobolev_norm(f, 1, s) for s in cfg.w11_weights()},
        "w21": {s: sobolev_norm(f, 2, s) for s in cfg.w2_list},
        "grad": {p: _grad_only_norm(f, p) for p in cfg.grad_p_list},
    }
    if cfg.track_production:
        bundle["production"] = entropy_production(f, cfg.kernel, cfg.quad)[0]
    return bundle


def evolve(f0: Distribution, cfg: SimulationConfig) -> TrajectoryReport:
    """Run the explicit solver and assemble a :class:`TrajectoryReport`.

    Aborts with :class:`EstimateRunError` when the per-step loss rate
    breaches the CFL guard, when a step clips more than
    ``cfg.clip_limit`` of the total mass, or when the entropy rises by
    more than ``cfg.entropy_slack`` relative per step.
    """
    if f0.grid != cfg.grid:
        raise EstimateConfigError("initial data lives on a different grid")
    if not np.all(np.isfinite(f0.values)):
        raise EstimateConfigError("initial data must be finite")
    if float(f0.values.min()) < 0.0:
        raise EstimateConfigError("initial data must be nonnegative")
    nu = cfg.kernel.angular.nu
    gamma = cfg.kernel.kinetic.gamma
    if nu >= 1.0:
        raise EstimateConfigError(
            "time integration supports angular orders nu < 1 only"
        )
    anchor = _moment_vector(f0)
    if anchor[0] <= 0.0:
        raise EstimateConfigError("initial data must carry positive mass")

    rate = max_loss_rate(f0, cfg.kernel, cfg.quad)
    if cfg.dt * rate >= cfg.cfl_limit:
        raise EstimateRunError(
            f"loss-rate guard failed at t=0: dt*rate = {cfg.dt * rate:.3f}"
            f" >= {cfg.cfl_limit}"
        )

    reference = matched_maxwellian(f0)
    f = f0.copy()
    cumulative_clip = 0.0
    records = [_record_bundle(f, cfg, reference, cumulative_clip)]
    record_steps = [0]
    snapshots = [f.values.copy()] if cfg.store_snapshots else None
    h_prev = records[0]["entropy"]

    n = cfg.n_steps
    for k in range(1, n + 1):
        f, clip = step(
            f, cfg.kernel, cfg.quad, cfg.dt, integrator=cfg.integrator, anchor=anchor
        )
        cumulative_clip += clip
        if clip > cfg.clip_limit * anchor[0]:
            raise EstimateRunError(
                f"step {k} clipped {clip:.3e} of mass {anchor[0]:.3e}"
            )
        h_now = entropy(f)
        if h_now > h_prev + cfg.entropy_slack * abs(h_prev):
            raise EstimateRunError(
                f"entropy rose at step {k}: {h_prev:.12f} -> {h_now:.12f}"
            )
        h_prev = h_now
        if k % cfg.record_every == 0 or k == n:
            rate = max_loss_rate(f, cfg.kernel, cfg.quad)
            if cfg.dt * rate >= cfg.cfl_limit:
                raise EstimateRunError(
                    f"loss-rate guard failed at step {k}: dt*rate = {cfg.dt * rate:.3f}"
                )
            records.append(_record_bundle(f, cfg, reference, cumulative_clip))
            record_steps.append(k)
            if snapshots is not None:
                snapshots.append(f.values.copy())

    times = np.asarray(record_steps, dtype=float) * cfg.dt + f0.time_stamp
    production = None
    if cfg.track_production:
        production = np.array([r["production"] for r in records])
    return TrajectoryReport(
        config=cfg,
        times=times,
        mass=np.array([r["mass"] for r in records]),
        momentum=np.stack([r["momentum"] for r in records]),
        energy=np.array([r["energy"] for r in records]),
        entropy=np.array([r["entropy"] for r in records]),
        entropy_production=production,
        l1={s: np.array([r["l1"][s] for r in records]) for s in cfg.l1_weights()},
        lp={p: np.array([r["lp"][p] for r in records]) for p in cfg.p_list},
        w11={s: np.array([r["w11"][s] for r in records]) for s in cfg.w11_weights()},
        w21={s: np.array([r["w21"][s] for r in records]) for s in cfg.w2_list},
        grad_lp={p: np.array([r["grad"][p] for r in records]) for p in cfg.grad_p_list},
        coercivity=np.array([r["coercivity"] for r in records]),
        equilibrium_distance=np.array([r["eq_dist"] for r in records]),
        clipped_mass=np.array([r["clip"] for r in records]),
        regime=classify_regime(gamma, nu),
        final=f,
        snapshots=tuple(snapshots) if snapshots is not None else None,
    )


# ---------------------------------------------------------------------------
# two-solution contraction check


@dataclass(frozen=True)
class StabilityCalibration:
    """Frozen prefactor for the contraction constant, with provenance.

    ``c_s_measured`` is the worst log-slope of the calibration pair's
    difference norm and ``slope_spread`` the width of the observed
    slope band; both are per unit time, before division by the norm
    aggregate.
    """

    cst_hat: float
    safety: float
    q: float
    gamma: float
    nu: float
    variant: str
    c_s_measured: float
    slope_spread: float
    aggregate: float
    source: str = ""

    def __post_init__(self) -> None:
        if self.cst_hat <= 0.0:
            raise EstimateConfigError("cst_hat must be positive")
        if self.safety < 1.0:
            raise EstimateConfigError("safety factor must be >= 1")


@dataclass(frozen=True)
class StabilityReport:
    """Verdict of one two-solution run at one weight order."""

    q: float
    times: np.ndarray
    d_norm: np.ndarray
    c_s_measured: float
    c_s_bound: float
    bound_margin: np.ndarray
    verdict: bool
    degenerate: bool
    rep_f: TrajectoryReport
    rep_g: TrajectoryReport


def run_pair(
    f0: Distribution, g0: Distribution, cfg: SimulationConfig
) -> tuple[TrajectoryReport, TrajectoryReport]:
    """Evolve two states under one config, keeping snapshots for norms."""
    if f0.grid != g0.grid:
        raise EstimateConfigError("the two states live on different grids")
    pair_cfg = replace(cfg, store_snapshots=True)
    return evolve(f0, pair_cfg), evolve(g0, pair_cfg)


def difference_norms(
    rep_f: TrajectoryReport, rep_g: TrajectoryReport, q: float
) -> np.ndarray:
    """Weighted L1 distance between two recorded trajectories."""
    if rep_f.snapshots is None or rep_g.snapshots is None:
        raise EstimateConfigError("difference norms need stored snapshots")
    if rep_f.times.shape != rep_g.times.shape or not np.allclose(
        rep_f.times, rep_g.times, rtol=0.0, atol=1e-12
    ):
        raise EstimateConfigError("the two reports use different record times")
    grid = rep_f.config.grid
    return np.array(
        [
            lp_norm(Distribution(grid, fa - fb), 1.0, q)
            for fa, fb in zip(rep_f.snapshots, rep_g.snapshots)
        ]
    )


def _log_slope_range(times: np.ndarray, d: np.ndarray) -> tuple[float, float]:
    low, high = math.inf, -math.inf
    for k in range(d.size - 1):
        if d[k] > 0.0 and d[k + 1] > 0.0:
            slope = math.log(d[k + 1] / d[k]) / (times[k + 1] - times[k])
            low = min(low, slope)
            high = max(high, slope)
    if high == -math.inf:
        raise EstimateRunError("difference norm vanished, slope is undefined")
    return low, high


def _kernel_descriptor(kernel: CollisionKernel) -> tuple[float, float, str]:
    return kernel.kinetic.gamma, kernel.angular.nu, kernel.kinetic.variant


def _needs_lebesgue_terms(kernel: CollisionKernel) -> bool:
    # only an unmollified soft kinetic factor is singular enough to
    # require Lebesgue control on top of the weighted Sobolev norm
    return kernel.kinetic.variant == "power-soft" and kernel.kinetic.gamma < 0.0


def stability_aggregate(
    rep: TrajectoryReport,
    q: float,
    *,
    p: float | None = None,
    p1: float | None = None,
    p2: float | None = None,
) -> float:
    """Sup-over-time norm aggregate entering the contraction constant.

    The norm depends on the kernel: first-order angular singularities
    (nu < 1) read a weighted W^{1,1} sup, strong singularities
    (1 <= nu < 2) a weighted W^{2,1} sup with q >= 4.  Unmollified soft
    kinetic factors additionally need Lebesgue norms: one order
    p > N/(N+gamma) when gamma + 1 >= 0, otherwise explicit orders
    p1 > N/(N+gamma) and p2 > N/(N+gamma+1) with a gradient term.
    """
    kernel = rep.config.kernel
    gamma, nu, _ = _kernel_descriptor(kernel)
    dim = kernel.dimension
    if nu >= 2.0:
        raise EstimateConfigError("angular order must satisfy nu < 2")
    if nu >= 1.0:
        if q < 4.0:
            raise EstimateConfigError("second-order variant requires q >= 4")
        if _needs_lebesgue_terms(kernel):
            raise EstimateConfigError(
                "the second-order constant is only available for bounded or"
                " hard kinetic factors"
            )
        weight = q + max(2.0 + gamma, 0.0)
        return float(rep.w21_series(weight).max())
    if q < 2.0:
        raise EstimateConfigError("the contraction estimate requires q >= 2")
    weight = q + max(1.0 + gamma, 0.0)
    total = float(rep.w11_series(weight).max())
    if not _needs_lebesgue_terms(kernel):
        return total
    if gamma + 1.0 >= 0.0:
        if p is None:
            raise EstimateConfigError(
                f"soft kinetic factor needs a Lebesgue order p > {dim / (dim + gamma):g}"
            )
        if p <= dim / (dim + gamma):
            raise EstimateConfigError(
                f"p must exceed {dim / (dim + gamma):g}, got {p:g}"
            )
        return total + float(rep.lp_series(p).max())
    if p1 is None or p2 is None:
        raise EstimateConfigError(
            "gamma + 1 < 0 requires explicit orders p1 and p2"
        )
    if p1 <= dim / (dim + gamma):
        raise EstimateConfigError(f"p1 must exceed {dim / (dim + gamma):g}, got {p1:g}")
    if p2 <= dim / (dim + gamma + 1.0):
        raise EstimateConfigError(
            f"p2 must exceed {dim / (dim + gamma + 1.0):g}, got {p2:g}"
        )
    return (
        total
        + float(rep.lp_series(p1).max())
        + float(rep.grad_lp_series(p2).max())
    )


def compute_Cs(
    rep_f: TrajectoryReport,
    rep_g: TrajectoryReport,
    q: float,
    calibration: StabilityCalibration,
    *,
    p: float | None = None,
    p1: float | None = None,
    p2: float | None = None,
) -> float:
    """Contraction-rate bound: frozen prefactor times the norm aggregate."""
    if _kernel_descriptor(rep_f.config.kernel) != _kernel_descriptor(rep_g.config.kernel):
        raise EstimateConfigError("the two reports use different kernels")
    agg_f = stability_aggregate(rep_f, q, p=p, p1=p1, p2=p2)
    agg_g = stability_aggregate(rep_g, q, p=p, p1=p1, p2=p2)
    return calibration.cst_hat * (agg_f + agg_g)


def calibrate_stability(
    f0: Distribution,
    g0: Distribution,
    cfg: SimulationConfig,
    q: float,
    *,
    safety: float = 3.0,
    p: float | None = None,
    p1: float | None = None,
    p2: float | None = None,
    source: str = "",
) -> StabilityCalibration:
    """Fit the contraction prefactor on one declared pair and freeze it.

    The frozen rate is ``safety`` times the positive part of the worst
    measured log-slope of the difference norm, plus the observed
    fluctuation band of that slope (the band sizes the growth allowance
    when the calibration pair only ever contracts, which is the common
    case).  Dividing by the pair's norm aggregate yields ``cst_hat``.
    Degenerate or slope-free pairs raise :class:`EstimateRunError`.
    """
    rep_f, rep_g = run_pair(f0, g0, cfg)
    d = difference_norms(rep_f, rep_g, q)
    if d[0] == 0.0:
        raise EstimateRunError("calibration pair is degenerate (identical data)")
    slope_min, slope_max = _log_slope_range(rep_f.times, d)
    rate = safety * max(slope_max, 0.0) + (slope_max - slope_min)
    if rate <= 0.0:
        raise EstimateRunError(
            "calibration pair has a constant contraction rate; no growth band"
            " can be sized from it"
        )
    aggregate = stability_aggregate(rep_f, q, p=p, p1=p1, p2=p2) + stability_aggregate(
        rep_g, q, p=p, p1=p1, p2=p2
    )
    gamma, nu, variant = _kernel_descriptor(cfg.kernel)
    return StabilityCalibration(
        cst_hat=rate / aggregate,
        safety=safety,
        q=q,
        gamma=gamma,
        nu=nu,
        variant=variant,
        c_s_measured=slope_max,
        slope_spread=slope_max - slope_min,
        aggregate=aggregate,
        source=source,
    )


def stability_run(
    f0: Distribution,
    g0: Distribution,
    cfg: SimulationConfig,
    q: float,
    calibration: StabilityCalibration,
    *,
    slack: float = 1e-9,
    p: float | None = None,
    p1: float | None = None,
    p2: float | None = None,
    pair: tuple[TrajectoryReport, TrajectoryReport] | None = None,
) -> StabilityReport:
    """Check the exponential contraction bound on one pair of solutions.

    ``pair`` can hand in precomputed trajectories (several weight orders
    can then share one evolution).  The verdict is true when every
    recorded log-distance stays within ``slack`` of the calibrated
    exponential envelope.  A pair that starts bitwise identical is
    flagged degenerate and passes trivially.
    """
    nu = cfg.kernel.angular.nu
    if nu >= 1.0:
        raise EstimateConfigError("stability runs require nu < 1")
    if q < 2.0:
        raise EstimateConfigError("the contraction estimate requires q >= 2")
    if pair is None:
        pair = run_pair(f0, g0, cfg)
    rep_f, rep_g = pair
    d = difference_norms(rep_f, rep_g, q)
    times = rep_f.times - rep_f.times[0]
    if d[0] == 0.0:
        return StabilityReport(
            q=q,
            times=rep_f.times,
            d_norm=d,
            c_s_measured=0.0,
            c_s_bound=compute_Cs(rep_f, rep_g, q, calibration, p=p, p1=p1, p2=p2),
            bound_margin=np.zeros_like(d),
            verdict=bool(np.all(d == 0.0)),
            degenerate=True,
            rep_f=rep_f,
            rep_g=rep_g,
        )
    c_bound = compute_Cs(rep_f, rep_g, q, calibration, p=p, p1=p1, p2=p2)
    with np.errstate(divide="ignore"):
        log_d = np.log(d)
    margin = log_d - log_d[0] - c_bound * times
    return StabilityReport(
        q=q,
        times=rep_f.times,
        d_norm=d,
        c_s_measured=_log_slope_range(rep_f.times, d)[1],
        c_s_bound=c_bound,
        bound_margin=margin,
        verdict=bool(np.max(margin) <= slack),
        degenerate=False,
        rep_f=rep_f,
        rep_g=rep_g,
    )


# ---------------------------------------------------------------------------
# single-solution growth checks


def _fit_ratio(times: np.ndarray, y: np.ndarray, den: np.ndarray, safety: float) -> float:
    if safety < 1.0:
        raise EstimateConfigError("safety factor must be >= 1")
    if np.any(den <= 0.0):
        raise EstimateConfigError("fit denominator must be positive")
    slopes = np.diff(y) / np.diff(times)
    mid_den = 0.5 * (den[:-1] + den[1:])
    best = float(np.max(slopes / mid_den))
    return safety * max(best, 0.0)


def fit_lp_constant(rep: TrajectoryReport, p: float, *, safety: float = 2.0) -> float:
    """Calibrate the Lebesgue-norm growth constant on one run."""
    y = rep.lp_series(p)
    factor = 1.0 - 1.0 / p
    if factor <= 0.0:
        raise EstimateConfigError("Lebesgue order must exceed 1")
    return _fit_ratio(rep.times, y, factor * (y + y * y), safety)


def fit_moment_constant(
    rep: TrajectoryReport, q: float, *, p: float | None = None, safety: float = 2.0
) -> float:
    """Calibrate the weighted-moment growth constant on one run."""
    _, den = _moment_rhs(rep, q, p)
    return _fit_ratio(rep.times, rep.l1_series(q), den, safety)


def fit_gradient_constant(
    rep: TrajectoryReport, q: float, p: float, *, safety: float = 2.0
) -> float:
    """Calibrate the gradient-mass growth constant on one run."""
    grad = rep.w11_series(q) - rep.l1_series(q)
    if np.any(grad <= 0.0):
        raise EstimateConfigError("gradient mass must be positive to calibrate")
    return _fit_ratio(rep.times, grad, grad * (rep.l1_series(q) + rep.lp_series(p)), safety)


def lp_ode_rhs(y: float, p: float, c_hat: float) -> float:
    """Right-hand side of the Lebesgue-norm growth inequality.

    The prefactor degrades gracefully with the order and tends to a
    finite limit as p goes to infinity, so the sup-norm case is the
    ``p = math.inf`` evaluation.
    """
    if p <= 1.0:
        raise EstimateConfigError("Lebesgue order must exceed 1")
    factor = 1.0 - 1.0 / p
    return c_hat * factor * (y + y * y)


def riccati_blowup_time(y0: float, rate: float) -> float:
    """Blow-up time of dy/dt = rate*(y + y^2) from y(0) = y0."""
    if y0 <= 0.0:
        raise EstimateConfigError("initial value must be positive")
    if rate <= 0.0:
        return math.inf
    return math.log((1.0 + y0) / y0) / rate


class LpOdeReport(NamedTuple):
    max_violation: float
    holds: bool
    blowup_time: float


def lp_ode_check(
    rep: TrajectoryReport, p: float, c_hat: float, *, slack: float = 1e-6
) -> LpOdeReport:
    """Check a recorded Lebesgue-norm series against its Riccati envelope.

    Admissible for nonpositive kinetic exponents with p > N/(N+gamma).
    Violations are normalised slope excesses and envelope excesses; the
    check only applies below the envelope's blow-up time, which is
    returned alongside the verdict.
    """
    gamma = rep.config.kernel.kinetic.gamma
    dim = rep.config.kernel.dimension
    if gamma > 0.0:
        raise EstimateConfigError("the Lebesgue growth bound needs gamma <= 0")
    if p <= dim / (dim + gamma):
        raise EstimateConfigError(f"p must exceed {dim / (dim + gamma):g}, got {p:g}")
    if c_hat < 0.0:
        raise EstimateConfigError("c_hat must be nonnegative")
    y = rep.lp_series(p)
    times = rep.times - rep.times[0]
    y0 = float(y[0])
    rate = c_hat * (1.0 - 1.0 / p)
    t_star = riccati_blowup_time(y0, rate)
    inside = times < t_star
    scale = y0
    worst = -math.inf
    # envelope containment on records below blow-up
    ratio = y0 / (1.0 + y0) * np.exp(rate * times[inside])
    envelope = ratio / (1.0 - ratio)
    worst = max(worst, float(np.max((y[inside] - envelope) / (scale + envelope))))
    # finite-difference slopes against the instantaneous bound
    for k in range(y.size - 1):
        if not (inside[k] and inside[k + 1]):
            continue
        slope = (y[k + 1] - y[k]) / (times[k + 1] - times[k])
        rhs = 0.5 * (lp_ode_rhs(float(y[k]), p, c_hat) + lp_ode_rhs(float(y[k + 1]), p, c_hat))
        worst = max(worst, (slope - rhs) / (scale + rhs))
    return LpOdeReport(worst, bool(worst <= slack), t_star)


def _moment_case(kernel: CollisionKernel, q: float, p: float | None) -> str:
    gamma = kernel.kinetic.gamma
    dim = kernel.dimension
    if gamma + 1.0 >= 0.0 and q >= 2.0:
        return "kinetic-exponent >= -1, q >= 2"
    if gamma + 2.0 >= 0.0 and q >= 4.0:
        return "kinetic-exponent >= -2, q >= 4"
    if gamma + 2.0 < 0.0 and q >= 4.0:
        if p is None:
            raise EstimateConfigError(
                f"gamma + 2 < 0 requires a Lebesgue order p > {dim / (dim + gamma + 2.0):g}"
            )
        if p <= dim / (dim + gamma + 2.0):
            raise EstimateConfigError(
                f"p must exceed {dim / (dim + gamma + 2.0):g}, got {p:g}"
            )
        return "kinetic-exponent < -2, q >= 4, Lebesgue-reinforced"
    raise EstimateConfigError(
        f"no admissible moment bound for gamma = {gamma:g}, q = {q:g}"
    )


def _moment_rhs(
    rep: TrajectoryReport, q: float, p: float | None
) -> tuple[str, np.ndarray]:
    case = _moment_case(rep.config.kernel, q, p)
    driver = rep.l1_series(0.0).copy()
    if case.endswith("Lebesgue-reinforced"):
        driver = driver + rep.lp_series(p)
    return case, rep.l1_series(q) * driver


class MomentReport(NamedTuple):
    max_violation: float
    holds: bool
    case: str


def moment_check(
    rep: TrajectoryReport, q: float, c_hat: float, *, p: float | None = None, slack: float = 1e-6
) -> MomentReport:
    """Check a weighted-moment series against its Gronwall envelope.

    The admissible case (and whether a Lebesgue term reinforces the
    right-hand side) is resolved from the kernel exponent and ``q``.
    """
    if c_hat < 0.0:
        raise EstimateConfigError("c_hat must be nonnegative")
    case, den = _moment_rhs(rep, q, p)
    y = rep.l1_series(q)
    times = rep.times - rep.times[0]
    driver = den / y
    growth = integrate.cumulative_trapezoid(driver, times, initial=0.0)
    envelope = y[0] * np.exp(c_hat * growth)
    scale = float(y[0])
    worst = float(np.max((y - envelope) / (scale + envelope)))
    for k in range(y.size - 1):
        slope = (y[k + 1] - y[k]) / (times[k + 1] - times[k])
        rhs = c_hat * 0.5 * (den[k] + den[k + 1])
        worst = max(worst, (slope - rhs) / (scale + rhs))
    return MomentReport(worst, bool(worst <= slack), case)


class GradientReport(NamedTuple):
    max_violation: float
    holds: bool
    sup_w11: float


def gradient_check(
    rep: TrajectoryReport,
    q: float,
    c_hat: float,
    *,
    p: float | None = None,
    slack: float = 1e-6,
) -> GradientReport:
    """Check propagation of the weighted gradient mass.

    Precondition (checked first): the run keeps finite weighted-L1 and
    Lebesgue norms, with p > N/(N+gamma).  The gradient part of the
    weighted W^{1,1} series must stay below the Gronwall envelope driven
    by those two series.  Returns the measured sup of the full W^{1,1}
    series alongside the verdict.
    """
    kernel = rep.config.kernel
    gamma = kernel.kinetic.gamma
    dim = kernel.dimension
    if kernel.angular.nu >= 1.0:
        raise EstimateConfigError("the gradient bound requires nu < 1")
    if q < 2.0:
        raise EstimateConfigError("the gradient bound requires q >= 2")
    if c_hat < 0.0:
        raise EstimateConfigError("c_hat must be nonnegative")
    if p is None:
        admissible = [o for o in rep.config.p_list if o > dim / (dim + gamma)]
        if not admissible:
            raise EstimateConfigError(
                f"no recorded Lebesgue order exceeds {dim / (dim + gamma):g}"
            )
        p = admissible[0]
    elif p <= dim / (dim + gamma):
        raise EstimateConfigError(f"p must exceed {dim / (dim + gamma):g}, got {p:g}")
    l1q = rep.l1_series(q)
    lebesgue = rep.lp_series(p)
    if not (np.all(np.isfinite(l1q)) and np.all(np.isfinite(lebesgue))):
        raise EstimateConfigError("integrability precondition failed: non-finite norms")
    w11 = rep.w11_series(q)
    grad = w11 - l1q
    times = rep.times - rep.times[0]
    driver = l1q + lebesgue
    growth = integrate.cumulative_trapezoid(driver, times, initial=0.0)
    envelope = grad[0] * np.exp(c_hat * growth)
    scale = max(float(grad[0]), 1e-300)
    worst = float(np.max((grad - envelope) / (scale + envelope)))
    for k in range(grad.size - 1):
        slope = (grad[k + 1] - grad[k]) / (times[k + 1] - times[k])
        rhs = c_hat * 0.5 * (grad[k] * driver[k] + grad[k + 1] * driver[k + 1])
        worst = max(worst, (slope - rhs) / (scale + rhs))
    return GradientReport(worst, bool(worst <= slack), float(w11.max()))


# ---------------------------------------------------------------------------
# grazing-limit consistency


@dataclass(frozen=True)
class GrazingSweepReport:
    """Observable drift along a ladder of angular resolution floors."""

    eps: tuple[float, ...]
    m1_tail: np.ndarray
    final_entropy: np.ndarray
    final_eq_distance: np.ndarray
    final_l1q: np.ndarray
    observable: str
    obs_diffs: np.ndarray
    m1_diffs: np.ndarray
    ratios: np.ndarray
    ratio_spread: float
    verdict: bool
    factor: float
    reports: tuple[TrajectoryReport, ...]


def grazing_sweep(
    f0: Distribution,
    cfg: SimulationConfig,
    eps_list: Sequence[float],
    *,
    factor: float = 3.0,
    observable: str = "entropy",
    degenerate_floor: float = 1e-12,
    abs_floor: float = 1e-10,
) -> GrazingSweepReport:
    """Evolve one state under successively smaller grazing floors.

    For each consecutive pair of floors the change of the final-time
    observable is compared with the change of the first angular moment
    below the floor.  The verdict asserts the two shrink proportionally:
    the ratio between consecutive floors stays within ``factor``, and
    pairs whose angular-moment change vanishes (a floor below the
    kernel's support) must leave the observable unchanged too.
    """
    if cfg.kernel.angular.nu >= 1.0:
        raise EstimateConfigError("the grazing sweep requires nu < 1")
    eps = tuple(float(e) for e in eps_list)
    if len(eps) < 2:
        raise EstimateConfigError("eps_list needs at least two entries")
    if any(e <= 0.0 or e > math.pi / 2.0 for e in eps):
        raise EstimateConfigError("eps values must lie in (0, pi/2]")
    if any(a <= b for a, b in zip(eps, eps[1:])):
        raise EstimateConfigError("eps_list must be strictly decreasing")
    if observable not in ("entropy", "eq_distance", "l1q"):
        raise EstimateConfigError(f"unknown observable {observable!r}")
    if factor < 1.0:
        raise EstimateConfigError("factor must be >= 1")

    reports = []
    for e in eps:
        run_cfg = replace(cfg, quad=replace(cfg.quad, eps=e))
        reports.append(evolve(f0, run_cfg))
    m1 = np.array(
        [angular_moment(AngularPart(cfg.kernel, 0.0, e), 1) for e in eps]
    )
    finals = {
        "entropy": np.array([r.entropy[-1] for r in reports]),
        "eq_distance": np.array([r.equilibrium_distance[-1] for r in reports]),
        "l1q": np.array([r.l1_series(cfg.q)[-1] for r in reports]),
    }
    obs = finals[observable]
    obs_diffs = np.abs(np.diff(obs))
    m1_diffs = np.abs(np.diff(m1))
    live = m1_diffs > degenerate_floor
    ratios = obs_diffs[live] / m1_diffs[live]
    degenerate_ok = bool(np.all(obs_diffs[~live] <= abs_floor))
    if ratios.size == 0:
        spread = 1.0
        verdict = degenerate_ok
    elif float(ratios.min()) <= 0.0:
        spread = math.inf
        verdict = False
    else:
        spread = float(ratios.max() / ratios.min())
        verdict = degenerate_ok and spread <= factor
    return GrazingSweepReport(
        eps=eps,
        m1_tail=m1,
        final_entropy=finals["entropy"],
        final_eq_distance=finals["eq_distance"],
        final_l1q=finals["l1q"],
        observable=observable,
        obs_diffs=obs_diffs,
        m1_diffs=m1_diffs,
        ratios=ratios,
        ratio_spread=spread,
        verdict=verdict,
        factor=factor,
        reports=tuple(reports),
    )
