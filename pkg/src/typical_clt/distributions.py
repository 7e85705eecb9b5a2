"""Empirical and mixture CDFs, Kolmogorov distance, weighted total variation.

The typical distribution of the weighted sums is represented as a scale
mixture: an average of kernel CDFs K(x / r) over radial atoms r >= 0
with weights summing to one.  The kernel is either the standard normal
CDF or the sphere-coordinate CDF for a given dimension.  An atom at
r = 0 contributes a unit step at the origin.

Kolmogorov distances are exact for step-vs-step and step-vs-mixture
inputs (the sup is attained at a jump, where both one-sided limits are
checked); mixture-vs-mixture distances use a documented grid with local
refinement.

Mixtures with many atoms are evaluated through an equal-weight quantile
compression plus a dense lookup table (accuracy ~1e-7, far below every
Monte Carlo noise floor in this package); small mixtures are evaluated
exactly, which is what the distance-oracle checks exercise.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import ndtr

from .errors import DomainError, InsufficientDataError
from .rng import as_rng, make_rng
from .sphere_law import Direction, cdf_table, density_grid, normal_pdf, \
    sample_direction, SphereCoordinateLaw
from .systems import SystemSpec, sample_vector, weighted_sum

# E sup_x |F_N(x) - F(x)| ~ sqrt(pi/2) ln(2) / sqrt(N) for an N-sample
# empirical CDF of a continuous law.
NOISE_FLOOR_COEF = math.sqrt(math.pi / 2.0) * math.log(2.0)

EXACT_PRODUCT_LIMIT = 20_000_000
COMPRESS_ATOMS = 2048
LUT_POINTS = 32768
GAUSSIAN_SPAN_FACTOR = 12.0


def noise_floor(per_theta_budget: int) -> float:
    return NOISE_FLOOR_COEF / math.sqrt(per_theta_budget)


# ---------------------------------------------------------------------------
# Step CDF
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StepCDF:
    """Empirical CDF with sorted sample values; right-continuous."""

    values: np.ndarray
    count: int

    @classmethod
    def from_samples(cls, samples) -> "StepCDF":
        arr = np.sort(np.asarray(samples, dtype=float))
        if arr.size == 0:
            raise DomainError("empirical CDF needs at least one sample")
        return cls(values=arr, count=arr.size)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.values, x, side="right") / self.count

    def cdf_left(self, x) -> np.ndarray:
        """Left limits F(x-)."""
        x = np.asarray(x, dtype=float)
        return np.searchsorted(self.values, x, side="left") / self.count

    def jump_points(self) -> np.ndarray:
        return np.unique(self.values)


def empirical_cdf(samples) -> StepCDF:
    return StepCDF.from_samples(samples)


# ---------------------------------------------------------------------------
# Mixture CDF
# ---------------------------------------------------------------------------

def _compress_atoms(radii: np.ndarray, weights: np.ndarray, max_atoms: int):
    """Equal-weight quantile binning of radial atoms."""
    if radii.size <= max_atoms:
        return radii, weights
    order = np.argsort(radii)
    r = radii[order]
    w = weights[order]
    cum = np.cumsum(w)
    edges = np.searchsorted(cum, np.linspace(0.0, cum[-1], max_atoms + 1)[1:-1],
                            side="left")
    groups = np.split(np.arange(r.size), np.unique(edges + 1))
    out_r, out_w = [], []
    for g in groups:
        if g.size == 0:
            continue
        wg = w[g]
        out_w.append(wg.sum())
        out_r.append(np.dot(r[g], wg) / wg.sum())
    return np.asarray(out_r), np.asarray(out_w)


@dataclass
class MixtureCDF:
    """Scale mixture E K(x / r) over radial atoms (r, weight)."""

    radii: np.ndarray
    weights: np.ndarray
    kernel: str                 # "gaussian" or "sphere"
    n: int | None = None        # sphere kernel dimension
    _lut: tuple | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.radii = np.asarray(self.radii, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.radii.shape != self.weights.shape or self.radii.ndim != 1:
            raise DomainError("radii and weights must be 1-d arrays of equal length")
        if np.any(self.radii < 0.0):
            raise DomainError("radial atoms must be nonnegative")
        if np.any(self.weights <= 0.0):
            raise DomainError("atom weights must be positive")
        total = self.weights.sum()
        if abs(total - 1.0) > 1e-9:
            raise DomainError(f"atom weights must sum to 1, got {total!r}")
        self.weights = self.weights / total
        if self.kernel not in ("gaussian", "sphere"):
            raise DomainError(f"unknown kernel {self.kernel!r}")
        if self.kernel == "sphere" and (self.n is None or self.n < 2):
            raise DomainError("sphere kernel needs a dimension n >= 2")

    # -- kernel primitives --------------------------------------------------

    def _kernel_cdf(self, z):
        if self.kernel == "gaussian":
            return ndtr(z)
        return cdf_table(self.n)(z)

    def _kernel_pdf(self, z):
        if self.kernel == "gaussian":
            return normal_pdf(z)
        return density_grid(SphereCoordinateLaw.for_dimension(self.n), z)

    @property
    def has_zero_atom(self) -> bool:
        return bool(np.any(self.radii == 0.0))

    @property
    def zero_weight(self) -> float:
        return float(self.weights[self.radii == 0.0].sum())

    @property
    def max_radius(self) -> float:
        return float(self.radii.max())

    @property
    def span(self) -> float:
        """|x| beyond which the CDF is 0/1 up to ~1e-33."""
        if self.kernel == "sphere":
            return math.sqrt(self.n) * self.max_radius
        return GAUSSIAN_SPAN_FACTOR * self.max_radius

    # -- evaluation ---------------------------------------------------------

    def _direct(self, x: np.ndarray, radii: np.ndarray, weights: np.ndarray) -> np.ndarray:
        out = np.zeros(x.shape, dtype=float)
        chunk = max(1, int(4e6 // max(radii.size, 1)))
        for lo in range(0, x.size, chunk):
            hi = min(lo + chunk, x.size)
            out[lo:hi] = self._kernel_cdf(
                x[lo:hi, None] / radii[None, :]) @ weights
        return out

    def _ensure_lut(self):
        if self._lut is None:
            r, w = _compress_atoms(self.radii[self.radii > 0],
                                   self.weights[self.radii > 0], COMPRESS_ATOMS)
            w = w / w.sum()
            span = self.span
            grid = np.linspace(-span, span, LUT_POINTS)
            self._lut = (grid, self._direct(grid, r, w))
        return self._lut

    def cdf(self, x, exact: bool | None = None):
        """Mixture CDF at x (scalar or array).

        exact=None picks direct summation when atoms * points is small and
        the cached lookup table otherwise; exact=True forces direct
        summation over all atoms.
        """
        scalar = np.isscalar(x)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        pos = self.radii > 0.0
        r, w = self.radii[pos], self.weights[pos]
        if r.size == 0:
            vals = np.zeros(x.shape)
        elif exact is True or (exact is None and x.size * r.size <= EXACT_PRODUCT_LIMIT):
            vals = self._direct(x, r, w)
        else:
            grid, lut = self._ensure_lut()
            vals = np.interp(x, grid, lut, left=0.0, right=float(w.sum()))
        w0 = self.zero_weight
        if w0 > 0.0:
            vals = vals + w0 * (x >= 0.0)
        return float(vals[0]) if scalar else vals

    def cdf_left(self, x):
        """Left limits; differs from cdf only at 0 when a zero atom exists."""
        vals = np.atleast_1d(np.asarray(self.cdf(x), dtype=float)).copy()
        if self.has_zero_atom:
            x_arr = np.atleast_1d(np.asarray(x, dtype=float))
            vals[x_arr == 0.0] -= self.zero_weight
        return float(vals[0]) if np.isscalar(x) else vals

    def density(self, x) -> np.ndarray:
        """Mixture density; undefined when a zero-radius atom is present."""
        if self.has_zero_atom:
            raise DomainError("mixture with a zero-radius atom has no density")
        x = np.atleast_1d(np.asarray(x, dtype=float))
        r, w = _compress_atoms(self.radii, self.weights, COMPRESS_ATOMS)
        w = w / w.sum()
        out = np.zeros(x.shape, dtype=float)
        chunk = max(1, int(4e6 // r.size))
        for lo in range(0, x.size, chunk):
            hi = min(lo + chunk, x.size)
            out[lo:hi] = self._kernel_pdf(x[lo:hi, None] / r[None, :]) @ (w / r)
        return out


def gaussian_mixture_cdf(atoms) -> MixtureCDF:
    """Mixture of centered Gaussians: atoms is a sequence of (r, weight)."""
    atoms = list(atoms)
    radii = np.array([a[0] for a in atoms], dtype=float)
    weights = np.array([a[1] for a in atoms], dtype=float)
    return MixtureCDF(radii=radii, weights=weights, kernel="gaussian")


def typical_cdf(spec: SystemSpec, radial_budget: int = 100_000, rng=0) -> MixtureCDF:
    """Typical distribution as a sphere-kernel mixture over r = |X|/sqrt(n).

    Fixed-norm systems give the single atom r = 1 exactly.
    """
    if spec.is_fixed_norm:
        return MixtureCDF(radii=np.array([1.0]), weights=np.array([1.0]),
                          kernel="sphere", n=spec.n)
    batch = sample_vector(spec, radial_budget, rng)
    r = np.linalg.norm(batch.matrix, axis=1) / math.sqrt(spec.n)
    weights = np.full(r.size, 1.0 / r.size)
    return MixtureCDF(radii=r, weights=weights, kernel="sphere", n=spec.n)


def radial_gaussian_cdf(spec: SystemSpec, radial_budget: int = 100_000, rng=0) -> MixtureCDF:
    """The Gaussian mixture G: law of r Z with r = |X|/sqrt(n), Z standard normal."""
    if spec.is_fixed_norm:
        return gaussian_mixture_cdf([(1.0, 1.0)])
    batch = sample_vector(spec, radial_budget, rng)
    r = np.linalg.norm(batch.matrix, axis=1) / math.sqrt(spec.n)
    weights = np.full(r.size, 1.0 / r.size)
    return MixtureCDF(radii=r, weights=weights, kernel="gaussian")


def standard_normal_cdf() -> MixtureCDF:
    return gaussian_mixture_cdf([(1.0, 1.0)])


# ---------------------------------------------------------------------------
# Kolmogorov distance
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DistanceReport:
    rho: float
    location: float
    method: str
    metadata: dict = field(default_factory=dict)


def _ks_step_step(a: StepCDF, b: StepCDF) -> DistanceReport:
    pts = np.unique(np.concatenate([a.values, b.values]))
    d_right = np.abs(a.cdf(pts) - b.cdf(pts))
    d_left = np.abs(a.cdf_left(pts) - b.cdf_left(pts))
    d = np.maximum(d_right, d_left)
    i = int(np.argmax(d))
    return DistanceReport(rho=float(d[i]), location=float(pts[i]),
                          method="step-step", metadata={"points": pts.size})


def _ks_step_mixture(step: StepCDF, mix: MixtureCDF) -> DistanceReport:
    pts = step.jump_points()
    if mix.has_zero_atom:
        pts = np.unique(np.concatenate([pts, [0.0]]))
    m_right = np.atleast_1d(mix.cdf(pts))
    m_left = np.atleast_1d(mix.cdf_left(pts))
    d = np.maximum(
        np.abs(step.cdf(pts) - m_right),
        np.abs(step.cdf_left(pts) - m_left),
    )
    i = int(np.argmax(d))
    return DistanceReport(rho=float(d[i]), location=float(pts[i]),
                          method="step-mixture", metadata={"points": pts.size})


def _ks_mixture_mixture(a: MixtureCDF, b: MixtureCDF, grid_points: int = 8193,
                        refine: int = 24) -> DistanceReport:
    span = max(a.span, b.span)
    xs = np.linspace(-span, span, grid_points)
    if a.has_zero_atom or b.has_zero_atom:
        xs = np.unique(np.concatenate([xs, [0.0]]))
    diff = np.abs(np.atleast_1d(a.cdf(xs)) - np.atleast_1d(b.cdf(xs)))
    best_val = float(diff.max())
    best_x = float(xs[int(np.argmax(diff))])
    top = np.argsort(diff)[-refine:]
    h = xs[1] - xs[0]
    for i in top:
        lo, hi = xs[i] - h, xs[i] + h

        def neg(x):
            return -abs(float(a.cdf(float(x))) - float(b.cdf(float(x))))

        res = minimize_scalar(neg, bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if -res.fun > best_val:
            best_val = float(-res.fun)
            best_x = float(res.x)
    # left limits matter only at the shared zero-atom step
    if a.has_zero_atom or b.has_zero_atom:
        dl = abs(float(a.cdf_left(0.0)) - float(b.cdf_left(0.0)))
        if dl > best_val:
            best_val, best_x = dl, 0.0
    return DistanceReport(rho=best_val, location=best_x, method="mixture-mixture",
                          metadata={"grid_points": grid_points, "refined": refine})


def kolmogorov_distance(u, v) -> DistanceReport:
    """sup-norm distance between two CDFs (step or mixture, any combination)."""
    if isinstance(u, StepCDF) and isinstance(v, StepCDF):
        return _ks_step_step(u, v)
    if isinstance(u, StepCDF) and isinstance(v, MixtureCDF):
        return _ks_step_mixture(u, v)
    if isinstance(u, MixtureCDF) and isinstance(v, StepCDF):
        return _ks_step_mixture(v, u)
    if isinstance(u, MixtureCDF) and isinstance(v, MixtureCDF):
        return _ks_mixture_mixture(u, v)
    raise DomainError(f"cannot compare {type(u).__name__} with {type(v).__name__}")


# ---------------------------------------------------------------------------
# Weighted total variation
# ---------------------------------------------------------------------------

def _gaussian_tail_weighted_mass(radii, weights, span: float) -> float:
    """integral of (1 + x^2) times the mixture density over |x| > span."""
    z = span / radii
    q = ndtr(-z)
    one_sided = (1.0 + np.square(radii)) * q + radii * span * normal_pdf(z)
    return float(2.0 * np.dot(weights, one_sided))


def weighted_total_variation(a: MixtureCDF, b: MixtureCDF, grid=None) -> float:
    """integral of (1 + x^2) |density_a - density_b| over the line.

    Evaluated on a truncated grid; the (negligible) tail mass outside the
    grid is bounded analytically and added to the result.
    """
    if a.has_zero_atom or b.has_zero_atom:
        raise DomainError("weighted total variation needs density representations "
                          "(no zero-radius atoms)")
    if grid is None:
        span = max(a.span, b.span)
        grid = np.linspace(-span, span, 32769)
    grid = np.asarray(grid, dtype=float)
    integrand = (1.0 + np.square(grid)) * np.abs(a.density(grid) - b.density(grid))
    value = float(np.trapezoid(integrand, grid))
    span = float(np.max(np.abs(grid)))
    tail = 0.0
    for mix in (a, b):
        if mix.kernel == "gaussian":
            tail += _gaussian_tail_weighted_mass(mix.radii, mix.weights, span)
        elif mix.span > span:
            # sphere kernel mass beyond the grid (only if the grid is narrower
            # than the support); bounded by the full weighted mass out there
            xs = np.linspace(span, mix.span, 4097)
            dens = mix.density(xs)
            tail += 2.0 * float(np.trapezoid((1.0 + np.square(xs)) * dens, xs))
    return value + tail


# ---------------------------------------------------------------------------
# Mean Kolmogorov distance over random directions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MeanThetaDistance:
    mean: float
    se: float
    per_theta: np.ndarray
    noise_floor: float
    spec_id: str
    n: int
    target: str
    theta_budget: int
    per_theta_budget: int
    radial_budget: int
    seed: int


def build_target(spec: SystemSpec, target: str, radial_budget: int, rng) -> MixtureCDF:
    if target == "phi":
        return standard_normal_cdf()
    if target == "F":
        return typical_cdf(spec, radial_budget, rng)
    if target == "G":
        return radial_gaussian_cdf(spec, radial_budget, rng)
    raise DomainError(f"unknown target {target!r}; expected one of phi, F, G")


def mean_theta_distance(
    spec: SystemSpec,
    target: str = "phi",
    theta_budget: int = 64,
    per_theta_budget: int = 100_000,
    rng=0,
    radial_budget: int = 100_000,
    threads: int = 1,
) -> MeanThetaDistance:
    """Mean over random directions of rho(empirical F_theta, target CDF).

    Draws `theta_budget` directions; for each, builds a step CDF of the
    weighted sum from `per_theta_budget` fresh samples and measures the
    exact Kolmogorov distance to the target.  Nothing is subtracted from
    the estimates; the empirical-CDF noise floor is reported alongside.
    """
    if theta_budget < 2:
        raise InsufficientDataError("need at least 2 directions for a standard error")
    if per_theta_budget < 100:
        raise InsufficientDataError("need at least 100 samples per direction")
    if target == "phi" and spec.mean_square_norm != spec.n:
        raise DomainError(
            "target phi requires a normalized system with E|X|^2 = n")
    if isinstance(rng, (int, np.integer)):
        master = int(rng)
    else:
        master = int(as_rng(rng).integers(1 << 62))
    target_cdf = build_target(spec, target, radial_budget, make_rng(master, "radial"))
    if target_cdf.radii.size > 64:
        target_cdf._ensure_lut()  # build the shared table once, not per thread

    def one_theta(j: int) -> float:
        theta = sample_direction(spec.n, make_rng(master, "theta", j))
        batch = sample_vector(spec, per_theta_budget, make_rng(master, "batch", j))
        step = StepCDF.from_samples(weighted_sum(batch, theta))
        return kolmogorov_distance(step, target_cdf).rho

    indices = range(theta_budget)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_theta = np.array(list(pool.map(one_theta, indices)))
    else:
        per_theta = np.array([one_theta(j) for j in indices])
    return MeanThetaDistance(
        mean=float(per_theta.mean()),
        se=float(per_theta.std(ddof=1) / math.sqrt(theta_budget)),
        per_theta=per_theta,
        noise_floor=noise_floor(per_theta_budget),
        spec_id=spec.spec_id,
        n=spec.n,
        target=target,
        theta_budget=theta_budget,
        per_theta_budget=per_theta_budget,
        radial_budget=radial_budget,
        seed=master,
    )
