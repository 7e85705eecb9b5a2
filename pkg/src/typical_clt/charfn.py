"""Characteristic functions of weighted sums and of the typical law.

Provides empirical cf estimation for a fixed direction, the typical cf
f(t) = E J_n(t |X|), concentration checks for cfs over random
directions, and the three smoothing integrals that convert cf closeness
into a Kolmogorov-distance bound:

    I_close = integral_0^T0  |u(t) - v(t)| / t dt
    I_mid   = integral_T0^T  |u(t)| / t dt
    I_tail  = (1/T) integral_0^T |v(t)| dt

One sample batch is reused across all grid points of a cf estimate
(common random numbers), which sharpens the margins of the bound checks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDataError
from .functionals import SmallBallResult, moment_Mp, small_ball
from .reports import BoundCheck, BoundCheckReport
from .rng import make_rng
from .sphere_law import Direction, jn_table, sample_direction
from .systems import SystemSpec, sample_vector, weighted_sum
from .distributions import _compress_atoms, mean_theta_distance

DEFAULT_GRID_POINTS = 512
GRID_T_MIN = 1e-3


def default_t_grid(t_max: float, points: int = DEFAULT_GRID_POINTS) -> np.ndarray:
    """Log-spaced grid on [1e-3, t_max]; cf integrands vary multiplicatively."""
    if t_max <= GRID_T_MIN:
        raise DomainError(f"t_max must exceed {GRID_T_MIN}, got {t_max}")
    return np.geomspace(GRID_T_MIN, t_max, points)


@dataclass(frozen=True)
class CharFnEstimate:
    """cf values on a nonnegative t grid; f(-t) is the conjugate of f(t)."""

    t: np.ndarray
    values: np.ndarray          # complex
    se: np.ndarray
    budget: int

    def __post_init__(self):
        if np.any(self.t < 0.0):
            raise DomainError("cf grids are restricted to t >= 0 "
                              "(negative t by conjugate symmetry)")
        if np.any(np.diff(self.t) <= 0.0):
            raise DomainError("cf grid must be strictly increasing")

    def csv_rows(self):
        header = ["t", "re", "im", "se"]
        rows = [
            [float(t), float(v.real), float(v.imag), float(s)]
            for t, v, s in zip(self.t, self.values, self.se)
        ]
        return header, rows


def _empirical_cf(samples: np.ndarray, t: np.ndarray):
    """Mean of exp(i t S) with per-point standard errors."""
    m = samples.shape[0]
    vals = np.empty(t.shape[0], dtype=complex)
    ses = np.empty(t.shape[0])
    chunk = max(1, int(4e6 // m))
    for lo in range(0, t.shape[0], chunk):
        hi = min(lo + chunk, t.shape[0])
        phase = samples[None, :] * t[lo:hi, None]
        c, s = np.cos(phase), np.sin(phase)
        vals[lo:hi] = c.mean(axis=1) + 1j * s.mean(axis=1)
        ses[lo:hi] = np.sqrt((c.var(axis=1) + s.var(axis=1)) / m)
    return vals, ses


def charfn_weighted_sum(spec: SystemSpec, theta: Direction, t_grid,
                        budget: int = 20000, rng=0) -> CharFnEstimate:
    """Empirical cf of <X, theta> on the grid, one shared sample batch."""
    if budget < 100:
        raise InsufficientDataError(f"cf estimation needs a budget >= 100, got {budget}")
    t = np.asarray(t_grid, dtype=float)
    batch = sample_vector(spec, budget, rng)
    s = weighted_sum(batch, theta)
    vals, ses = _empirical_cf(s, t)
    return CharFnEstimate(t=t, values=vals, se=ses, budget=budget)


def charfn_typical(spec: SystemSpec, t_grid, radial_budget: int = 100_000,
                   rng=0) -> CharFnEstimate:
    """cf of the typical distribution: f(t) = E J_n(t |X|).

    Fixed-norm systems give J_n(t sqrt n) exactly (zero standard error);
    otherwise the expectation runs over sampled norms, with |X| atoms
    quantile-compressed for bulk J_n evaluation.
    """
    t = np.asarray(t_grid, dtype=float)
    jn = jn_table(spec.n)
    root_n = math.sqrt(spec.n)
    if spec.is_fixed_norm:
        vals = jn(t * root_n).astype(complex)
        return CharFnEstimate(t=t, values=vals, se=np.zeros(t.shape), budget=0)
    if radial_budget < 100:
        raise InsufficientDataError(
            f"radial budget must be >= 100, got {radial_budget}")
    batch = sample_vector(spec, radial_budget, rng)
    norms = np.linalg.norm(batch.matrix, axis=1)
    radii, weights = _compress_atoms(np.sort(norms),
                                     np.full(norms.size, 1.0 / norms.size), 4096)
    vals = np.empty(t.shape[0], dtype=complex)
    ses = np.empty(t.shape[0])
    chunk = max(1, int(4e6 // radii.size))
    for lo in range(0, t.shape[0], chunk):
        hi = min(lo + chunk, t.shape[0])
        jv = jn(t[lo:hi, None] * radii[None, :])
        mean = jv @ weights
        var = np.square(jv - mean[:, None]) @ weights
        vals[lo:hi] = mean
        ses[lo:hi] = np.sqrt(var / radial_budget)
    return CharFnEstimate(t=t, values=vals, se=ses, budget=radial_budget)


def mixture_charfn(mix, t) -> np.ndarray:
    """Exact cf of a radial mixture CDF (real by symmetry)."""
    t = np.atleast_1d(np.asarray(t, dtype=float))
    radii, weights = _compress_atoms(mix.radii, mix.weights, 4096)
    if mix.kernel == "gaussian":
        return np.exp(-0.5 * np.square(t[:, None] * radii[None, :])) @ weights
    jn = jn_table(mix.n)
    root_n = math.sqrt(mix.n)
    return jn(t[:, None] * radii[None, :] * root_n) @ weights


# ---------------------------------------------------------------------------
# Direction-concentration checks
# ---------------------------------------------------------------------------

def _per_theta_cf_matrix(spec: SystemSpec, t: np.ndarray, theta_budget: int,
                         sample_budget: int, seed: int) -> np.ndarray:
    rows = np.empty((theta_budget, t.shape[0]), dtype=complex)
    for j in range(theta_budget):
        theta = sample_direction(spec.n, make_rng(seed, "cf_theta", j))
        batch = sample_vector(spec, sample_budget, make_rng(seed, "cf_batch", j))
        s = weighted_sum(batch, theta)
        rows[j], _ = _empirical_cf(s, t)
    return rows


def poincare_gap_check(spec: SystemSpec, t_grid, theta_budget: int = 48,
                       sample_budget: int = 20000, rng=0,
                       slack_se: float = 3.0) -> BoundCheckReport:
    """Check E_theta |f_theta(t) - f(t)|^2 <= t^2 M_1^2 / (n - 1).

    M_1 is bounded above by the analytic M_2, which exists for every
    catalog system; the left side is the sample variance of the per-theta
    cf estimates (per-theta estimation noise only inflates it, making the
    check conservative).
    """
    seed = int(rng) if isinstance(rng, (int, np.integer)) else 0
    t = np.asarray(t_grid, dtype=float)
    m2 = moment_Mp(spec, 2.0, strategy="analytic")
    m1_sq = m2.value ** 2
    rows = _per_theta_cf_matrix(spec, t, theta_budget, sample_budget, seed)
    center = rows.mean(axis=0)
    sq_dev = np.square(np.abs(rows - center[None, :]))
    lhs = sq_dev.sum(axis=0) / (theta_budget - 1)
    se = sq_dev.std(axis=0, ddof=1) / math.sqrt(theta_budget)
    rhs = np.square(t) * m1_sq / (spec.n - 1)
    report = BoundCheckReport()
    for k in range(t.shape[0]):
        slack = slack_se * float(se[k])
        report.add(BoundCheck(
            name="cf_direction_variance",
            statement="E_theta |f_theta(t) - f(t)|^2 <= t^2 M_1^2 / (n-1)",
            lhs=float(lhs[k]), rhs=float(rhs[k]), slack=slack,
            passed=bool(lhs[k] <= rhs[k] + slack),
            spec_id=spec.spec_id, n=spec.n, seed=seed, budget=sample_budget,
            extra={"t": float(t[k]), "theta_budget": theta_budget},
        ))
    return report


def decay_bound_check(spec: SystemSpec, t_grid, theta_budget: int = 48,
                      sample_budget: int = 20000, rng=0,
                      small_ball_result: SmallBallResult | None = None,
                      slack_se: float = 3.0) -> BoundCheckReport:
    """Check E_theta |f_theta(t)| <= 2.1 (e^(-t^2/16) + e^(-n/24) + sqrt(P)).

    P = P{|X - Y|^2 <= n/4}, estimated empirically when not supplied.
    """
    seed = int(rng) if isinstance(rng, (int, np.integer)) else 0
    t = np.asarray(t_grid, dtype=float)
    if small_ball_result is None:
        small_ball_result = small_ball(spec, budget=sample_budget,
                                       rng=make_rng(seed, "decay_sb"))
    p_hat = small_ball_result.empirical
    p_up = p_hat + slack_se * small_ball_result.se
    rows = _per_theta_cf_matrix(spec, t, theta_budget, sample_budget, seed)
    mags = np.abs(rows)
    lhs = mags.mean(axis=0)
    se = mags.std(axis=0, ddof=1) / math.sqrt(theta_budget)
    rhs = 2.1 * (np.exp(-np.square(t) / 16.0) + math.exp(-spec.n / 24.0)
                 + math.sqrt(p_up))
    report = BoundCheckReport()
    for k in range(t.shape[0]):
        slack = slack_se * float(se[k])
        report.add(BoundCheck(
            name="cf_decay_bound",
            statement="E_theta |f_theta(t)| <= 2.1 (exp(-t^2/16) + exp(-n/24) "
                      "+ sqrt(P{|X-Y|^2 <= n/4}))",
            lhs=float(lhs[k]), rhs=float(rhs[k]), slack=slack,
            passed=bool(lhs[k] <= rhs[k] + slack),
            spec_id=spec.spec_id, n=spec.n, seed=seed, budget=sample_budget,
            extra={"t": float(t[k]), "small_ball": p_hat},
        ))
    return report


# ---------------------------------------------------------------------------
# Smoothing integrals
# ---------------------------------------------------------------------------

def _integrand_over_t(t: np.ndarray, numer: np.ndarray, lo: float, hi: float,
                      extrapolate_zero: bool) -> float:
    """Trapezoid of numer(t)/t over [lo, hi] on the stored grid.

    With extrapolate_zero and lo == 0, the integrand value at t = 0 is
    linearly extrapolated from the two smallest positive grid points
    (numer vanishes linearly at 0, so the ratio has a finite limit).
    """
    inside = (t > lo) & (t < hi)
    ts = t[inside]
    gs = numer[inside] / ts
    pieces_t = [ts]
    pieces_g = [gs]
    if lo == 0.0 and extrapolate_zero:
        t1, t2 = t[0], t[1]
        g1, g2 = numer[0] / t1, numer[1] / t2
        g0 = g1 - t1 * (g2 - g1) / (t2 - t1)
        pieces_t.insert(0, np.array([0.0]))
        pieces_g.insert(0, np.array([max(g0, 0.0)]))
    else:
        pieces_t.insert(0, np.array([lo]))
        pieces_g.insert(0, np.array([np.interp(lo, t, numer) / max(lo, GRID_T_MIN)]))
    pieces_t.append(np.array([hi]))
    pieces_g.append(np.array([np.interp(hi, t, numer) / hi]))
    tt = np.concatenate(pieces_t)
    gg = np.concatenate(pieces_g)
    return float(np.trapezoid(gg, tt))


def esseen_integrals(t: np.ndarray, abs_diff: np.ndarray, abs_mid: np.ndarray,
                     abs_typical: np.ndarray, t0: float, t_max: float):
    """The three smoothing integrals from magnitude series on one grid."""
    if not t_max >= t0 > 0.0:
        raise DomainError(f"need T >= T0 > 0, got T0={t0}, T={t_max}")
    if t[-1] < t_max * (1.0 - 1e-9):
        raise DomainError(f"grid ends at {t[-1]}, does not cover T={t_max}")
    i_close = _integrand_over_t(t, abs_diff, 0.0, t0, extrapolate_zero=True)
    i_mid = _integrand_over_t(t, abs_mid, t0, t_max, extrapolate_zero=False)
    inside = t <= t_max
    tt = np.concatenate([[0.0], t[inside], [t_max]])
    vv = np.concatenate([[abs_typical[0]], abs_typical[inside],
                         [np.interp(t_max, t, abs_typical)]])
    i_tail = float(np.trapezoid(vv, tt)) / t_max
    return i_close, i_mid, i_tail


def smoothing_rhs(u: CharFnEstimate, v: CharFnEstimate, t0: float, t_max: float):
    """Smoothing integrals for a cf pair (u plays f_theta, v plays f)."""
    if not np.array_equal(u.t, v.t):
        raise DomainError("cf estimates must share one grid")
    diff = np.abs(u.values - v.values)
    return esseen_integrals(u.t, diff, np.abs(u.values), np.abs(v.values),
                            t0, t_max)


@dataclass(frozen=True)
class SmoothingReport:
    i_close: float
    i_mid: float
    i_tail: float
    t0: float
    t_max: float
    mean_rho: float
    metadata: dict = field(default_factory=dict)

    @property
    def total(self) -> float:
        return self.i_close + self.i_mid + self.i_tail

    @property
    def ratio_to_mean_rho(self) -> float:
        return self.total / self.mean_rho if self.mean_rho > 0 else math.inf


def smoothing_report(spec: SystemSpec, theta_budget: int = 16,
                     sample_budget: int = 20000, radial_budget: int = 50000,
                     t0: float | None = None, t_max: float | None = None,
                     grid_points: int = DEFAULT_GRID_POINTS, rng=0,
                     rho_theta_budget: int = 16,
                     rho_sample_budget: int = 50000) -> SmoothingReport:
    """Full-pipeline smoothing bound for a system.

    Defaults mirror the moderate/large-t split used in the rate analysis:
    T0 = 5 sqrt(log n) and T = 5 n.  The total of the three integrals is
    compared with the measured mean Kolmogorov distance to the typical
    law and the ratio is logged in the report.
    """
    seed = int(rng) if isinstance(rng, (int, np.integer)) else 0
    n = spec.n
    if t0 is None:
        t0 = 5.0 * math.sqrt(math.log(n))
    if t_max is None:
        t_max = 5.0 * n
    t = default_t_grid(t_max, grid_points)
    rows = _per_theta_cf_matrix(spec, t, theta_budget, sample_budget, seed)
    typical = charfn_typical(spec, t, radial_budget, make_rng(seed, "smooth_radial"))
    abs_diff = np.abs(rows - typical.values[None, :]).mean(axis=0)
    abs_mid = np.abs(rows).mean(axis=0)
    i_close, i_mid, i_tail = esseen_integrals(
        t, abs_diff, abs_mid, np.abs(typical.values), t0, t_max)
    rho = mean_theta_distance(spec, "F", theta_budget=rho_theta_budget,
                              per_theta_budget=rho_sample_budget,
                              rng=make_rng(seed, "smooth_rho"),
                              radial_budget=radial_budget)
    return SmoothingReport(
        i_close=i_close, i_mid=i_mid, i_tail=i_tail, t0=t0, t_max=t_max,
        mean_rho=rho.mean,
        metadata={
            "spec_id": spec.spec_id, "n": n, "theta_budget": theta_budget,
            "sample_budget": sample_budget, "seed": seed,
        },
    )
