"""Correlation-type functionals of a random vector X in R^n.

Implements estimators for

    M_p  = sup_theta (E |<X, theta>|^p)^(1/p)          (maximal L^p norm)
    m_p  = n^(-1/2) (E |<X, Y>|^p)^(1/p)               (Y an independent copy)
    s_2p = sqrt(n) (E | |X|^2/n - 1 |^p)^(1/p)         (norm concentration)

together with the variance chain for |X|, the small-ball probability
P{|X - Y|^2 <= n/4} with its moment bound, and the exponential lower-tail
bound for sums of nonnegative i.i.d. variables with unit mean.

The M_p "search" strategy maximizes an empirical L^p norm over candidate
directions with coordinate-ascent refinement; it is a lower-bound
estimate and is flagged as such, so checks that need an upper bound on
M_p must use the analytic strategy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientDataError, NumericKernelError
from .reports import BoundCheck, BoundCheckReport
from .rng import as_rng, make_rng
from .systems import SampleBatch, SystemSpec, sample_vector

BOOTSTRAP_REPS = 200


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float


def _as_child_rng(rng, key: str) -> np.random.Generator:
    if isinstance(rng, (int, np.integer)):
        return make_rng(int(rng), key)
    return rng  # an explicit Generator is consumed sequentially


def _bootstrap_se(values: np.ndarray, statistic, rng: np.random.Generator,
                  reps: int = BOOTSTRAP_REPS) -> float:
    """SE of statistic(values) under i.i.d. resampling."""
    m = values.shape[0]
    stats = np.empty(reps)
    for b in range(reps):
        idx = rng.integers(0, m, size=m)
        stats[b] = statistic(values[idx])
    return float(stats.std(ddof=1))


def gauss_abs_moment(p: float) -> float:
    """E|Z|^p for standard normal Z."""
    return 2.0 ** (p / 2.0) * math.exp(math.lgamma((p + 1.0) / 2.0)) / math.sqrt(math.pi)


def _abs_pow(x: np.ndarray, p: float) -> np.ndarray:
    """|x|^p, avoiding the generic pow kernel for the common small orders."""
    if p == 1.0:
        return np.abs(x)
    if p == 2.0:
        return np.square(x)
    if p == 3.0:
        return np.square(x) * np.abs(x)
    return np.abs(x) ** p


# ---------------------------------------------------------------------------
# M_p
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentEstimate:
    value: float
    se: float
    strategy: str           # "analytic" or "search"
    is_lower_bound: bool    # True for search results
    fell_back: bool = False # analytic was requested but unavailable
    direction: np.ndarray | None = None


def _analytic_Mp(spec: SystemSpec, p: float) -> float | None:
    if spec.is_gaussian:
        if spec.kind == "gaussian_anisotropic":
            top = math.sqrt(max(spec.eigenvalues))
        else:
            top = 1.0
        return top * gauss_abs_moment(p) ** (1.0 / p)
    if p == 2.0 and spec.is_isotropic:
        return 1.0
    return None


def _empirical_lp(matrix: np.ndarray, directions: np.ndarray, p: float) -> np.ndarray:
    """(E_hat |X . d|^p)^(1/p) for each column d of `directions`."""
    proj = matrix @ directions
    return np.mean(_abs_pow(proj, p), axis=0) ** (1.0 / p)


def _search_Mp(spec: SystemSpec, p: float, budget: int, n_directions: int,
               rng) -> MomentEstimate:
    gen = _as_child_rng(rng, "mp_search")
    batch = sample_vector(spec, budget, gen)
    n = spec.n
    # candidates: coordinate axes, the diagonal, and random directions
    cand = [np.eye(n), np.full((n, 1), 1.0 / math.sqrt(n))]
    rand = gen.standard_normal((n, n_directions))
    rand /= np.linalg.norm(rand, axis=0, keepdims=True)
    cand.append(rand)
    directions = np.concatenate(cand, axis=1)
    scores = _empirical_lp(batch.matrix, directions, p)
    best = int(np.argmax(scores))
    theta = directions[:, best].copy()
    value = float(scores[best])
    # coordinate ascent with shrinking step; stops once gains hit batch noise
    signed_axes = np.concatenate([np.eye(n), -np.eye(n)], axis=1)
    for step in (0.5, 0.2, 0.08, 0.03, 0.01):
        for _ in range(10):
            props = theta[:, None] + step * signed_axes
            props /= np.linalg.norm(props, axis=0, keepdims=True)
            sc = _empirical_lp(batch.matrix, props, p)
            j = int(np.argmax(sc))
            if sc[j] <= value * (1.0 + 1e-6):
                break
            value = float(sc[j])
            theta = props[:, j].copy()
    v = _abs_pow(batch.matrix @ theta, p)
    mean = v.mean()
    se = v.std(ddof=1) / math.sqrt(budget) * (1.0 / p) * mean ** (1.0 / p - 1.0)
    return MomentEstimate(value=value, se=float(se), strategy="search",
                          is_lower_bound=True, direction=theta)


def moment_Mp(spec: SystemSpec, p: float, strategy: str = "auto",
              budget: int = 20000, n_directions: int = 64, rng=0) -> MomentEstimate:
    """Maximal L^p norm of the linear marginals.

    strategy "analytic" uses closed forms (exact, SE 0) where they exist
    and otherwise falls back to "search" with the fell_back flag set.
    Search maximizes the empirical L^p norm and is a lower-bound estimate.
    """
    if p < 1:
        raise DomainError(f"moment order must satisfy p >= 1, got {p}")
    if strategy not in ("auto", "analytic", "search"):
        raise DomainError(f"unknown strategy {strategy!r}")
    analytic = _analytic_Mp(spec, p)
    if strategy in ("auto", "analytic") and analytic is not None:
        return MomentEstimate(value=analytic, se=0.0, strategy="analytic",
                              is_lower_bound=False)
    fell_back = strategy == "analytic"
    est = _search_Mp(spec, p, budget, n_directions, rng)
    if fell_back:
        est = MomentEstimate(value=est.value, se=est.se, strategy=est.strategy,
                             is_lower_bound=True, fell_back=True,
                             direction=est.direction)
    return est


# ---------------------------------------------------------------------------
# m_p and sigma_2p
# ---------------------------------------------------------------------------

def _pair_inner_products(spec: SystemSpec, pairs: int, rng) -> np.ndarray:
    if isinstance(rng, (int, np.integer)):
        bx = sample_vector(spec, pairs, make_rng(int(rng), "pairs_x"))
        by = sample_vector(spec, pairs, make_rng(int(rng), "pairs_y"))
    else:
        gen = as_rng(rng)
        bx = sample_vector(spec, pairs, gen)
        by = sample_vector(spec, pairs, gen)
    return np.einsum("ij,ij->i", bx.matrix, by.matrix)


def moment_mp(spec: SystemSpec, p: float, pairs: int = 20000, rng=0) -> Estimate:
    """m_p estimate over independent pairs, with bootstrap SE."""
    if p < 1:
        raise DomainError(f"moment order must satisfy p >= 1, got {p}")
    if pairs < 100:
        raise InsufficientDataError(f"need at least 100 pairs, got {pairs}")
    ip = _pair_inner_products(spec, pairs, rng)
    v = _abs_pow(ip, p)
    root_n = math.sqrt(spec.n)

    def stat(sample):
        return sample.mean() ** (1.0 / p) / root_n

    boot = _as_child_rng(rng, "mp_boot")
    return Estimate(value=float(stat(v)), se=_bootstrap_se(v, stat, boot))


def sigma_2p(spec: SystemSpec, p: float, budget: int = 20000, rng=0) -> Estimate:
    """sigma_{2p} estimate: sqrt(n) (E | |X|^2/n - 1 |^p)^(1/p)."""
    if p < 1:
        raise DomainError(f"moment order must satisfy p >= 1, got {p}")
    if budget < 100:
        raise InsufficientDataError(f"need a budget of at least 100, got {budget}")
    gen = _as_child_rng(rng, "sigma")
    batch = sample_vector(spec, budget, gen)
    dev = _abs_pow(np.square(batch.matrix).sum(axis=1) / spec.n - 1.0, p)
    root_n = math.sqrt(spec.n)

    def stat(sample):
        return root_n * sample.mean() ** (1.0 / p)

    if not dev.any():  # fixed-norm system: exactly zero, no resampling noise
        return Estimate(value=0.0, se=0.0)
    boot = _as_child_rng(rng, "sigma_boot")
    return Estimate(value=float(stat(dev)), se=_bootstrap_se(dev, stat, boot))


# ---------------------------------------------------------------------------
# Variance chain and small-ball bound
# ---------------------------------------------------------------------------

def norm_variance_check(spec: SystemSpec, budget: int = 20000, rng=0,
                        slack_se: float = 3.0, atol: float = 1e-9) -> BoundCheckReport:
    """Check Var|X| <= sigma_4^2 and sigma_2^2/4 <= Var|X| <= sigma_2 sqrt(n).

    Each inequality gets `slack_se` bootstrap standard errors of its
    margin as slack, plus a tiny absolute tolerance: for fixed-norm
    systems every quantity is zero up to float epsilon, and the chain
    must hold with equality rather than fail on rounding noise.
    """
    gen = _as_child_rng(rng, "normvar")
    batch = sample_vector(spec, budget, gen)
    # squared norms are exact for the +-1-valued systems; take sqrt after
    sq = np.square(batch.matrix).sum(axis=1)
    norms = np.sqrt(sq)
    n = spec.n
    root_n = math.sqrt(n)

    def stats(idx):
        var_norm = norms[idx].var(ddof=1)
        sq_dev = np.abs(sq[idx] / n - 1.0)
        sigma2 = root_n * sq_dev.mean()
        sigma4_sq = n * np.mean(np.square(sq_dev))
        return var_norm, sigma2, sigma4_sq

    full = np.arange(budget)
    var_norm, sigma2, sigma4_sq = stats(full)
    margins = np.array([
        sigma4_sq - var_norm,
        var_norm - 0.25 * sigma2 ** 2,
        sigma2 * root_n - var_norm,
    ])
    boot = _as_child_rng(rng, "normvar_boot")
    reps = np.empty((BOOTSTRAP_REPS, 3))
    for b in range(BOOTSTRAP_REPS):
        vn, s2, s4sq = stats(boot.integers(0, budget, size=budget))
        reps[b] = (s4sq - vn, vn - 0.25 * s2 ** 2, s2 * root_n - vn)
    ses = reps.std(axis=0, ddof=1)

    names = [
        ("var_norm_le_sigma4sq", "Var|X| <= sigma_4^2", var_norm, sigma4_sq),
        ("sigma2sq_quarter_le_var_norm", "sigma_2^2 / 4 <= Var|X|",
         0.25 * sigma2 ** 2, var_norm),
        ("var_norm_le_sigma2_rootn", "Var|X| <= sigma_2 sqrt(n)",
         var_norm, sigma2 * root_n),
    ]
    report = BoundCheckReport()
    for (name, statement, lhs, rhs), margin, se in zip(names, margins, ses):
        slack = slack_se * float(se) + atol
        report.add(BoundCheck(
            name=name, statement=statement, lhs=float(lhs), rhs=float(rhs),
            slack=slack, passed=bool(margin >= -slack),
            spec_id=spec.spec_id, n=n, budget=budget,
        ))
    return report


@dataclass(frozen=True)
class SmallBallResult:
    empirical: float
    se: float
    bound: float
    bound_se: float
    p: float
    q: float
    passed: bool


def small_ball(spec: SystemSpec, budget: int = 20000, rng=0,
               p: float = 2.0, q: float = 2.0, slack_se: float = 3.0) -> SmallBallResult:
    """Empirical P{|X - Y|^2 <= n/4} against its moment bound.

    The bound is 4^q m_q^q / n^(q/2) + 4^(2p) s_2p^(2p) / n^p, evaluated
    from estimates on the same pair sample.
    """
    if isinstance(rng, (int, np.integer)):
        bx = sample_vector(spec, budget, make_rng(int(rng), "sb_x"))
        by = sample_vector(spec, budget, make_rng(int(rng), "sb_y"))
    else:
        gen = as_rng(rng)
        bx = sample_vector(spec, budget, gen)
        by = sample_vector(spec, budget, gen)
    n = spec.n
    diff2 = np.square(bx.matrix - by.matrix).sum(axis=1)
    hits = diff2 <= n / 4.0
    emp = float(hits.mean())
    se = math.sqrt(emp * (1.0 - emp) / budget)

    ip = np.einsum("ij,ij->i", bx.matrix, by.matrix)
    vq = _abs_pow(ip, q)
    # 4^q m_q^q / n^(q/2) = 4^q E|<X,Y>|^q / n^q
    term1 = 4.0 ** q * vq.mean() / n ** q
    dev = _abs_pow(np.square(bx.matrix).sum(axis=1) / n - 1.0, p)
    # sigma_2p^(2p) / n^p = (E dev)^2 by the definition of sigma_2p
    term2 = 4.0 ** (2 * p) * dev.mean() ** 2
    bound = float(term1 + term2)
    se_t1 = 4.0 ** q * vq.std(ddof=1) / math.sqrt(budget) / n ** q
    se_t2 = 4.0 ** (2 * p) * 2.0 * dev.mean() * dev.std(ddof=1) / math.sqrt(budget)
    bound_se = float(math.hypot(se_t1, se_t2))
    slack = slack_se * (se + bound_se)
    return SmallBallResult(
        empirical=emp, se=se, bound=bound, bound_se=bound_se, p=p, q=q,
        passed=emp <= bound + slack,
    )


# ---------------------------------------------------------------------------
# Lower-tail bound for sums of nonnegative unit-mean variables
# ---------------------------------------------------------------------------

class ConstantXi:
    """xi identically 1."""

    def tail_mean(self, kappa: float) -> float:
        return 1.0 if kappa < 1.0 else 0.0

    def sample_sum(self, n: int, size: int, rng) -> np.ndarray:
        return np.full(size, float(n))


class TwoPointXi:
    """xi taking value `high` with probability p_high, else `low`."""

    def __init__(self, low: float = 0.0, high: float = 2.0, p_high: float = 0.5):
        if low < 0 or high < 0:
            raise DomainError("two-point values must be nonnegative")
        mean = low * (1.0 - p_high) + high * p_high
        if abs(mean - 1.0) > 1e-12:
            raise DomainError(f"two-point xi must have mean 1, got {mean}")
        self.low, self.high, self.p_high = low, high, p_high

    def tail_mean(self, kappa: float) -> float:
        out = 0.0
        if self.low > kappa:
            out += self.low * (1.0 - self.p_high)
        if self.high > kappa:
            out += self.high * self.p_high
        return out

    def sample_sum(self, n: int, size: int, rng) -> np.ndarray:
        gen = as_rng(rng)
        k = gen.binomial(n, self.p_high, size=size)
        return self.low * (n - k) + self.high * k


class ExponentialXi:
    """Standard exponential xi; E xi 1{xi > k} = (1 + k) e^(-k)."""

    def tail_mean(self, kappa: float) -> float:
        return (1.0 + kappa) * math.exp(-kappa)

    def sample_sum(self, n: int, size: int, rng) -> np.ndarray:
        gen = as_rng(rng)
        return gen.gamma(shape=float(n), scale=1.0, size=size)


@dataclass(frozen=True)
class LowerTailBound:
    lam: float
    kappa: float

    def bound(self, n: int) -> float:
        return math.exp(-(1.0 - self.lam) ** 2 * n / (8.0 * self.kappa))


def lower_tail_bound(xi, lam: float, grid_base: float = 1e-3,
                     max_doublings: int = 60) -> LowerTailBound:
    """Smallest admissible truncation level kappa and the tail bound.

    kappa must satisfy E xi 1{xi > kappa} <= (1 - lam)/2.  A geometric
    grid kappa = grid_base * 2^k locates a bracket, then bisection
    refines to the minimal admissible level (smaller kappa gives a
    stronger bound exp(-(1-lam)^2 n / (8 kappa))).
    """
    if not 0.0 < lam < 1.0:
        raise DomainError(f"lambda must lie in (0, 1), got {lam}")
    if abs(xi.tail_mean(0.0) - 1.0) > 1e-9:
        raise DomainError("xi must be nonnegative with mean 1")
    target = (1.0 - lam) / 2.0
    lo, hi = 0.0, None
    kappa = grid_base
    for _ in range(max_doublings):
        if xi.tail_mean(kappa) <= target:
            hi = kappa
            break
        lo = kappa
        kappa *= 2.0
    if hi is None:
        raise NumericKernelError(
            f"no admissible truncation level up to {kappa}; tail mean decays too slowly"
        )
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if xi.tail_mean(mid) <= target:
            hi = mid
        else:
            lo = mid
    return LowerTailBound(lam=lam, kappa=hi)


# ---------------------------------------------------------------------------
# Assembled report
# ---------------------------------------------------------------------------

@dataclass
class FunctionalsReport:
    spec_id: str
    n: int
    max_moments: dict = field(default_factory=dict)   # p -> MomentEstimate
    pair_moments: dict = field(default_factory=dict)  # p -> Estimate (m_p)
    norm_moments: dict = field(default_factory=dict)  # p -> Estimate (sigma_2p)
    var_norm: Estimate | None = None
    small_ball: SmallBallResult | None = None
    budget: int = 0
    seed: int = 0

    def csv_rows(self):
        header = ["spec_id", "functional", "p", "estimate", "se", "budget", "seed"]
        rows = []
        for p, est in sorted(self.max_moments.items()):
            rows.append([self.spec_id, "M_p", p, est.value, est.se, self.budget, self.seed])
        for p, est in sorted(self.pair_moments.items()):
            rows.append([self.spec_id, "m_p", p, est.value, est.se, self.budget, self.seed])
        for p, est in sorted(self.norm_moments.items()):
            rows.append([self.spec_id, "sigma_2p", p, est.value, est.se, self.budget, self.seed])
        if self.var_norm is not None:
            rows.append([self.spec_id, "var_norm", "", self.var_norm.value,
                         self.var_norm.se, self.budget, self.seed])
        if self.small_ball is not None:
            rows.append([self.spec_id, "small_ball", "", self.small_ball.empirical,
                         self.small_ball.se, self.budget, self.seed])
            rows.append([self.spec_id, "small_ball_bound", "", self.small_ball.bound,
                         self.small_ball.bound_se, self.budget, self.seed])
        return header, rows


def compute_functionals(spec: SystemSpec, p_values=(2.0, 3.0), budget: int = 20000,
                        seed: int = 0) -> FunctionalsReport:
    """One-stop report of all functionals for a spec."""
    report = FunctionalsReport(spec_id=spec.spec_id, n=spec.n, budget=budget, seed=seed)
    for p in p_values:
        report.max_moments[p] = moment_Mp(spec, p, rng=make_rng(seed, "Mp", int(2 * p)))
        report.pair_moments[p] = moment_mp(spec, p, pairs=budget,
                                           rng=make_rng(seed, "mp", int(2 * p)))
    for p in (1.0, 1.5, 2.0):
        report.norm_moments[p] = sigma_2p(spec, p, budget=budget,
                                          rng=make_rng(seed, "s2p", int(2 * p)))
    gen = make_rng(seed, "varnorm")
    batch = sample_vector(spec, budget, gen)
    norms = np.linalg.norm(batch.matrix, axis=1)
    boot = make_rng(seed, "varnorm_boot")
    report.var_norm = Estimate(
        value=float(norms.var(ddof=1)),
        se=_bootstrap_se(norms, lambda s: s.var(ddof=1), boot),
    )
    report.small_ball = small_ball(spec, budget=budget, rng=make_rng(seed, "smallball"))
    return report
