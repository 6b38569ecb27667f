"""Long-range collision kernels and their angular moments.

Kernels are tensor products ``B(|v - v_*|, cos theta) = Phi(|v - v_*|)
b(cos theta)``.  The angular factor follows the parametric family

    b(cos theta) = c_b * theta**(-(N-1) - nu),    theta in (0, pi],

with singularity exponent ``nu < 2``; ``nu <= 0`` gives an integrable
(cutoff-type) profile and an optional support cutoff truncates it away from
grazing angles entirely.  The kinetic factor is either an exact power
``Phi(r) = c_phi * r**gamma`` or its mollified counterpart
``Phi(r) = c_phi * (scale**2 + r**2)**(gamma/2)``, with the hard range
``gamma in (0, 1]`` and the soft range ``gamma in (-N, 0]``.

Working form: kernels are symmetrized onto deviation angles ``[0, pi/2]``
(``b(theta) + b(pi - theta)`` on the half range, zero beyond), then split at
a cutoff angle ``eps`` into a bounded part, which quadrature integrates
directly, and a grazing part, whose entire effect on the estimates is carried
by the angular moments

    m_k(part) = integral over the sphere of part(theta) * sin(theta/2)**k.

``m_k`` is finite exactly when ``nu < k``; divergence is reported as ``inf``
(a signal, not an exception).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

__all__ = [
    "KernelConfigError",
    "KineticSingularityError",
    "AngularKernel",
    "KineticKernel",
    "CollisionKernel",
    "AngularPart",
    "eval_angular",
    "eval_kinetic",
    "kinetic_cell_average",
    "from_inverse_power_law",
    "symmetrize",
    "symmetrized_angular",
    "split",
    "angular_moment",
    "sphere_area",
]

ANGULAR_FAMILIES = ("power", "power-truncated")
KINETIC_VARIANTS = ("mollified-hard", "mollified-soft", "power-hard", "power-soft")


class KernelConfigError(ValueError):
    """Kernel parameters outside the admissible ranges."""


class KineticSingularityError(ValueError):
    """The kinetic factor was evaluated at its singular point."""


def sphere_area(ndim: int) -> float:
    """Surface measure of the unit sphere S^(ndim-1)."""
    return 2.0 * math.pi ** (ndim / 2.0) / math.gamma(ndim / 2.0)


@dataclass(frozen=True)
class AngularKernel:
    """Angular factor of a collision kernel.

    ``support_cutoff`` zeroes the profile below a fixed angle and above its
    mirror at pi; it is only meaningful for cutoff-type exponents
    (``family == "power-truncated"``) and models kernels whose grazing range
    is empty even after symmetrization.
    """

    dimension: int
    nu: float
    c_b: float = 1.0
    family: str = "power"
    support_cutoff: float = 0.0

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise KernelConfigError("dimension must be >= 2")
        if not self.nu < 2.0:
            raise KernelConfigError(f"nu must be < 2, got {self.nu}")
        if self.c_b <= 0.0:
            raise KernelConfigError("c_b must be positive")
        if self.family not in ANGULAR_FAMILIES:
            raise KernelConfigError(f"unknown angular family {self.family!r}")
        if self.family == "power" and self.support_cutoff != 0.0:
            raise KernelConfigError(
                "support_cutoff requires the 'power-truncated' family"
            )
        if not 0.0 <= self.support_cutoff < math.pi:
            raise KernelConfigError("support_cutoff must lie in [0, pi)")


@dataclass(frozen=True)
class KineticKernel:
    """Kinetic (relative speed) factor of a collision kernel."""

    dimension: int
    gamma: float
    c_phi: float = 1.0
    variant: str = "power-hard"
    mollifier_scale: float = 1.0

    def __post_init__(self) -> None:
        if self.dimension < 2:
            raise KernelConfigError("dimension must be >= 2")
        if self.variant not in KINETIC_VARIANTS:
            raise KernelConfigError(f"unknown kinetic variant {self.variant!r}")
        if self.c_phi <= 0.0:
            raise KernelConfigError("c_phi must be positive")
        hard = self.variant.endswith("hard")
        if hard and not 0.0 < self.gamma <= 1.0:
            raise KernelConfigError(
                f"{self.variant} requires gamma in (0, 1], got {self.gamma}"
            )
        if not hard and not -self.dimension < self.gamma <= 0.0:
            raise KernelConfigError(
                f"{self.variant} requires gamma in (-N, 0], got {self.gamma}"
            )
        if self.variant.startswith("mollified") and self.mollifier_scale <= 0.0:
            raise KernelConfigError("mollifier_scale must be positive")


@dataclass(frozen=True)
class CollisionKernel:
    """Tensor-product collision kernel, optionally symmetrized."""

    angular: AngularKernel
    kinetic: KineticKernel
    symmetrized: bool = False

    def __post_init__(self) -> None:
        if self.angular.dimension != self.kinetic.dimension:
            raise KernelConfigError("angular and kinetic dimensions differ")

    @property
    def dimension(self) -> int:
        return self.angular.dimension


@dataclass(frozen=True)
class AngularPart:
    """Restriction of a symmetrized angular profile to a theta window.

    ``lo`` is inclusive, ``hi`` exclusive, except that ``hi == pi/2`` is
    inclusive (the symmetrized support is closed at pi/2).  Evaluation is
    exactly the parent profile times the window indicator, so a split is an
    exact partition.
    """

    kernel: CollisionKernel
    lo: float
    hi: float

    def __call__(self, theta: np.ndarray) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        inside = (theta >= self.lo) & (
            (theta < self.hi) | ((theta == self.hi) & (self.hi == math.pi / 2.0))
        )
        return np.where(inside, symmetrized_angular(self.kernel, theta), 0.0)

    @property
    def dimension(self) -> int:
        return self.kernel.dimension


def eval_angular(kernel: AngularKernel, theta: np.ndarray) -> np.ndarray:
    """Evaluate the (un-symmetrized) angular profile at deviation angles.

    Defined for theta in (0, pi]; theta == 0 is outside the domain for the
    singular family and raises.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0.0) or np.any(theta > math.pi):
        raise KernelConfigError("theta must lie in [0, pi]")
    exponent = -(kernel.dimension - 1) - kernel.nu
    if exponent < 0.0 and kernel.support_cutoff == 0.0 and np.any(theta == 0.0):
        raise KernelConfigError("singular angular profile evaluated at theta = 0")
    # overflow to inf near theta = 0 feeds the moment divergence detector
    with np.errstate(divide="ignore", over="ignore"):
        values = kernel.c_b * np.power(theta, exponent, where=theta > 0.0)
    # theta = 0 reaches here only when the profile is continuous there.
    at_zero = kernel.c_b * (0.0 if exponent > 0.0 else 1.0)
    values = np.where(theta > 0.0, values, at_zero)
    if kernel.support_cutoff > 0.0:
        # symmetric truncation: zero both the grazing end and its mirror,
        # so the folded profile's grazing window genuinely empties
        dead = (theta < kernel.support_cutoff) | (
            theta > math.pi - kernel.support_cutoff
        )
        values = np.where(dead, 0.0, values)
    return values


def eval_kinetic(kernel: KineticKernel, r: np.ndarray) -> np.ndarray:
    """Evaluate the kinetic factor at relative speeds ``r >= 0``.

    The exact power-soft profile is singular at r = 0; evaluating it there
    raises ``KineticSingularityError`` (quadrature handles that cell through
    ``kinetic_cell_average``).
    """
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0):
        raise KernelConfigError("relative speed must be nonnegative")
    if kernel.variant.startswith("mollified"):
        return kernel.c_phi * (kernel.mollifier_scale**2 + r * r) ** (
            kernel.gamma / 2.0
        )
    if kernel.gamma < 0.0 and np.any(r == 0.0):
        raise KineticSingularityError(
            "power-law kinetic factor with gamma < 0 evaluated at r = 0"
        )
    if kernel.gamma == 0.0:
        return np.full_like(r, kernel.c_phi)
    with np.errstate(divide="ignore"):
        return kernel.c_phi * np.power(r, kernel.gamma)


def kinetic_cell_average(kernel: KineticKernel, h: float) -> float:
    """Average of the kinetic factor over one grid cell centered at r = 0.

    The cell is replaced by the equal-volume ball (radius ``h/sqrt(pi)`` in
    2-d, ``h (3/(4 pi))**(1/3)`` in 3-d), over which the power profile has an
    analytic radial integral; finite exactly for gamma > -N.  For mollified
    variants the value at 0 is already finite and is returned directly.
    """
    if h <= 0.0:
        raise KernelConfigError("cell width must be positive")
    if kernel.variant.startswith("mollified") or kernel.gamma == 0.0:
        return float(eval_kinetic(kernel, np.asarray(0.0)))
    n = kernel.dimension
    if n == 2:
        r_cell = h / math.sqrt(math.pi)
    elif n == 3:
        r_cell = h * (3.0 / (4.0 * math.pi)) ** (1.0 / 3.0)
    else:
        ball = math.pi ** (n / 2.0) / math.gamma(n / 2.0 + 1.0)
        r_cell = h * ball ** (-1.0 / n)
    return kernel.c_phi * n * r_cell**kernel.gamma / (kernel.gamma + n)


def from_inverse_power_law(s: float) -> tuple[float, float]:
    """Exponents ``(gamma, nu)`` of the kernel induced by a 1/r^s force.

    gamma = (s - 4)/s and nu = 2/s; s = 4 is the Maxwell case (gamma = 0),
    s > 4 hard, s < 4 soft.  Requires s > 1.
    """
    if not s > 1.0:
        raise KernelConfigError(f"inverse power law exponent must exceed 1, got {s}")
    return (s - 4.0) / s, 2.0 / s


def symmetrize(kernel: CollisionKernel) -> CollisionKernel:
    """Fold the angular profile onto deviation angles [0, pi/2].

    The symmetrized profile is ``b(theta) + b(pi - theta)`` on the half range
    and zero beyond; applying it twice is a usage error.
    """
    if kernel.symmetrized:
        raise KernelConfigError("kernel is already symmetrized")
    return replace(kernel, symmetrized=True)


def symmetrized_angular(kernel: CollisionKernel, theta: np.ndarray) -> np.ndarray:
    """Angular profile of a collision kernel in its working form.

    For a symmetrized kernel this is ``b(theta) + b(pi - theta)`` on
    [0, pi/2] and zero on (pi/2, pi]; for a raw kernel it is ``b`` itself.
    """
    theta = np.asarray(theta, dtype=float)
    if not kernel.symmetrized:
        return eval_angular(kernel.angular, theta)
    half = theta <= math.pi / 2.0
    safe = np.where(half, theta, math.pi / 2.0)
    folded = eval_angular(kernel.angular, safe) + eval_angular(
        kernel.angular, math.pi - safe
    )
    return np.where(half, folded, 0.0)


def split(kernel: CollisionKernel, eps: float) -> tuple[AngularPart, AngularPart]:
    """Split a symmetrized kernel at the cutoff angle.

    Returns ``(cutoff_part, grazing_part)`` supported on [eps, pi/2] and
    (0, eps) respectively; the boundary angle belongs to the cutoff part and
    the two parts sum to the symmetrized profile exactly.
    """
    if not kernel.symmetrized:
        raise KernelConfigError("split requires a symmetrized kernel")
    if not 0.0 < eps < math.pi / 2.0:
        raise KernelConfigError("cutoff angle must lie in (0, pi/2)")
    return (
        AngularPart(kernel, eps, math.pi / 2.0),
        AngularPart(kernel, 0.0, eps),
    )


# ---------------------------------------------------------------------------
# Angular moments


_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _gauss_segment(fn, a: float, b: float) -> float:
    x = 0.5 * (b - a) * _GL_NODES + 0.5 * (b + a)
    return 0.5 * (b - a) * float(np.sum(_GL_WEIGHTS * fn(x)))


def _integrate_smooth(fn, a: float, b: float, abs_tol: float) -> float:
    """Composite Gauss with segment doubling on a regular interval."""
    total = _gauss_segment(fn, a, b)
    segments = 2
    while segments <= 256:
        edges = np.linspace(a, b, segments + 1)
        refined = sum(_gauss_segment(fn, lo, hi) for lo, hi in zip(edges, edges[1:]))
        if abs(refined - total) < abs_tol:
            return refined
        total = refined
        segments *= 2
    return total


def _integrate_singular_end(
    fn,
    hi: float,
    abs_tol: float,
    div_threshold: float,
    max_segments: int,
) -> float:
    """Integrate fn over (0, hi] by geometric subdivision toward 0.

    Segment sums over [hi 2^-(m+1), hi 2^-m] decay geometrically when the
    integrand is power-integrable and grow (or stall) otherwise; growth past
    ``div_threshold``, or failure to decay by the segment cap, is declared
    divergence and reported as inf.  A decaying tail is closed by geometric
    extrapolation.
    """
    total = 0.0
    prev = 0.0
    seg = 0.0
    upper = hi
    for step in range(max_segments):
        lower = upper / 2.0
        seg = _gauss_segment(fn, lower, upper)
        total += seg
        if abs(total) > div_threshold:
            return math.inf
        if step > 0 and abs(seg) < 0.05 * abs_tol and abs(prev) < 0.05 * abs_tol:
            ratio = abs(seg) / abs(prev) if prev != 0.0 else 0.0
            if ratio < 1.0:
                return total + seg * ratio / (1.0 - ratio)
            return total
        prev = seg
        upper = lower
    # Segment cap reached: decide by the final decay ratio.
    if seg == 0.0:
        return total
    ratio = abs(seg) / abs(prev) if prev != 0.0 else 1.0
    if ratio >= 1.0:
        return math.inf
    return total + seg * ratio / (1.0 - ratio)


def angular_moment(
    part: AngularPart,
    k: int,
    *,
    abs_tol: float = 1e-10,
    div_threshold: float = 1e12,
    max_segments: int = 600,
) -> float:
    """Sphere integral of ``part(theta) * sin(theta/2)**k``, order k >= 1.

        m_k(part) = |S^(N-2)| * int part(theta) sin(theta/2)^k sin(theta)^(N-2) dtheta

    over the part's support.  Finite exactly when the singularity exponent
    satisfies ``nu < k``; divergence is reported as ``inf``.
    """
    if k < 1:
        raise KernelConfigError("moment order must be at least 1")
    return _weighted_sphere_integral(
        part, k, abs_tol, div_threshold, max_segments
    )


def angular_mass(
    part: AngularPart,
    *,
    abs_tol: float = 1e-10,
    div_threshold: float = 1e12,
    max_segments: int = 600,
) -> float:
    """Plain angular mass of a profile window, the L1 sphere norm of b.

    Finite for any window bounded away from zero and for full windows with
    negative singularity exponent; the non-cutoff case diverges and is
    reported as ``inf``.
    """
    return _weighted_sphere_integral(
        part, 0, abs_tol, div_threshold, max_segments
    )


def _weighted_sphere_integral(
    part: AngularPart,
    k: int,
    abs_tol: float,
    div_threshold: float,
    max_segments: int,
) -> float:
    n = part.dimension
    ring = sphere_area(n - 1) if n > 2 else 2.0

    def integrand(theta: np.ndarray) -> np.ndarray:
        return (
            part(theta)
            * np.sin(0.5 * theta) ** k
            * np.sin(theta) ** (n - 2)
        )

    lo, hi = part.lo, min(part.hi, math.pi / 2.0)
    if hi <= lo:
        return 0.0
    cut = part.kernel.angular.support_cutoff
    if lo > 0.0:
        # Regular window; split at an interior support cutoff so Gauss
        # segments never straddle the jump.
        if lo < cut < hi:
            value = _integrate_smooth(integrand, cut, hi, abs_tol)
        elif cut >= hi:
            value = 0.0
        else:
            value = _integrate_smooth(integrand, lo, hi, abs_tol)
        return ring * value
    if cut > 0.0:
        if cut >= hi:
            return 0.0
        return ring * _integrate_smooth(integrand, cut, hi, abs_tol)
    return ring * _integrate_singular_end(
        integrand, hi, abs_tol, div_threshold, max_segments
    )
