"""Declarative catalog and samplers for the random vectors under study.

Every built-in system is centered with unit-variance coordinates, so
E|X|^2 = n, except the anisotropic Gaussian where E|X|^2 is the sum of
the covariance eigenvalues.  Samplers are deterministic given (spec,
seed): large batches are sharded with per-shard derived seeds so the
assembled matrix never depends on execution order.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigurationError, DomainError, InsufficientDataError
from .rng import as_rng, make_rng
from .sphere_law import Direction

SQRT3 = math.sqrt(3.0)
SQRT2 = math.sqrt(2.0)

IID_BASES = ("rademacher", "uniform", "exponential", "normal")
KINDS = ("iid", "trigonometric", "walsh", "fixed_norm_rademacher", "gaussian_anisotropic")

SHARD_SIZE = 1 << 16


def default_walsh_characters(n: int) -> tuple[tuple[int, ...], ...]:
    """The n smallest nonempty subsets of {1..m} in graded-lex order.

    m is minimal with 2^m - 1 >= n.
    """
    m = 1
    while (1 << m) - 1 < n:
        m += 1
    chars = []
    for size in range(1, m + 1):
        for combo in itertools.combinations(range(1, m + 1), size):
            chars.append(combo)
            if len(chars) == n:
                return tuple(chars)
    raise AssertionError("unreachable")


@dataclass(frozen=True)
class SystemSpec:
    kind: str
    n: int
    base: str | None = None
    characters: tuple[tuple[int, ...], ...] | None = None
    eigenvalues: tuple[float, ...] | None = None

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 2:
            raise ConfigurationError(f"dimension must be an integer >= 2, got {self.n}")
        if self.kind not in KINDS and self.kind not in _EXTRA_SAMPLERS:
            raise ConfigurationError(f"unknown system kind {self.kind!r}")
        if self.kind == "iid":
            if self.base not in IID_BASES:
                raise ConfigurationError(f"unknown iid base {self.base!r}")
        elif self.base is not None:
            raise ConfigurationError(f"base is only valid for iid systems, got kind={self.kind!r}")
        if self.kind == "trigonometric" and self.n % 2 != 0:
            raise ConfigurationError(f"trigonometric system needs even n, got {self.n}")
        if self.kind == "walsh":
            chars = self.characters
            if chars is None:
                chars = default_walsh_characters(self.n)
                object.__setattr__(self, "characters", chars)
            chars = tuple(tuple(sorted(c)) for c in chars)
            object.__setattr__(self, "characters", chars)
            if len(chars) != self.n:
                raise ConfigurationError(
                    f"walsh system needs {self.n} characters, got {len(chars)}"
                )
            if any(len(c) == 0 for c in chars):
                raise ConfigurationError("walsh characters must be nonempty index sets")
            if len(set(chars)) != len(chars):
                raise ConfigurationError("walsh characters must be distinct")
            if any(i < 1 for c in chars for i in c):
                raise ConfigurationError("walsh character indices are 1-based positive integers")
        elif self.characters is not None:
            raise ConfigurationError("characters are only valid for walsh systems")
        if self.kind == "gaussian_anisotropic":
            if self.eigenvalues is None or len(self.eigenvalues) != self.n:
                raise ConfigurationError("gaussian_anisotropic needs one eigenvalue per coordinate")
            eig = tuple(float(v) for v in self.eigenvalues)
            if any(v <= 0 for v in eig):
                raise ConfigurationError("covariance eigenvalues must be positive")
            object.__setattr__(self, "eigenvalues", eig)
        elif self.eigenvalues is not None:
            raise ConfigurationError("eigenvalues are only valid for gaussian_anisotropic")

    @property
    def spec_id(self) -> str:
        if self.kind == "iid":
            return f"{self.base}-n{self.n}"
        short = {
            "trigonometric": "trig",
            "walsh": "walsh",
            "fixed_norm_rademacher": "fixed_norm",
            "gaussian_anisotropic": "aniso",
        }.get(self.kind, self.kind)
        return f"{short}-n{self.n}"

    @property
    def is_fixed_norm(self) -> bool:
        """Whether |X|^2 = n holds almost surely."""
        return (
            self.kind in ("trigonometric", "walsh", "fixed_norm_rademacher")
            or (self.kind == "iid" and self.base == "rademacher")
        )

    @property
    def is_isotropic(self) -> bool:
        if self.kind == "gaussian_anisotropic":
            return all(v == 1.0 for v in self.eigenvalues)
        return self.kind in ("iid", "trigonometric", "walsh", "fixed_norm_rademacher")

    @property
    def is_gaussian(self) -> bool:
        return self.kind == "gaussian_anisotropic" or (
            self.kind == "iid" and self.base == "normal"
        )

    @property
    def mean_square_norm(self) -> float:
        if self.kind == "gaussian_anisotropic":
            return float(sum(self.eigenvalues))
        return float(self.n)

    @property
    def walsh_bits(self) -> int:
        return max(i for c in self.characters for i in c)


@dataclass(frozen=True)
class SampleBatch:
    matrix: np.ndarray
    spec: SystemSpec
    seed: int | None

    @property
    def count(self) -> int:
        return self.matrix.shape[0]


_EXTRA_SAMPLERS: dict = {}


def register_sampler(kind: str, sampler) -> None:
    """In-process extension point: sampler(spec, count, generator) -> matrix."""
    _EXTRA_SAMPLERS[kind] = sampler


def _sample_rows(spec: SystemSpec, count: int, gen: np.random.Generator) -> np.ndarray:
    n = spec.n
    if spec.kind == "iid":
        if spec.base == "rademacher":
            return gen.integers(0, 2, size=(count, n)).astype(float) * 2.0 - 1.0
        if spec.base == "uniform":
            return gen.uniform(-SQRT3, SQRT3, size=(count, n))
        if spec.base == "exponential":
            return gen.standard_exponential(size=(count, n)) - 1.0
        return gen.standard_normal(size=(count, n))
    if spec.kind == "fixed_norm_rademacher":
        return gen.integers(0, 2, size=(count, n)).astype(float) * 2.0 - 1.0
    if spec.kind == "trigonometric":
        omega = gen.uniform(-math.pi, math.pi, size=count)
        k = np.arange(1, n // 2 + 1, dtype=float)
        ang = omega[:, None] * k[None, :]
        out = np.empty((count, n))
        out[:, 0::2] = SQRT2 * np.cos(ang)
        out[:, 1::2] = SQRT2 * np.sin(ang)
        return out
    if spec.kind == "walsh":
        eps = gen.integers(0, 2, size=(count, spec.walsh_bits)).astype(float) * 2.0 - 1.0
        out = np.empty((count, n))
        for j, char in enumerate(spec.characters):
            idx = np.array(char) - 1
            out[:, j] = np.prod(eps[:, idx], axis=1)
        return out
    if spec.kind == "gaussian_anisotropic":
        scale = np.sqrt(np.asarray(spec.eigenvalues))
        return gen.standard_normal(size=(count, n)) * scale[None, :]
    sampler = _EXTRA_SAMPLERS.get(spec.kind)
    if sampler is None:
        raise ConfigurationError(f"no sampler registered for kind {spec.kind!r}")
    return np.asarray(sampler(spec, count, gen), dtype=float)


def sample_vector(spec: SystemSpec, count: int, rng) -> SampleBatch:
    """Draw `count` i.i.d. rows from the law of X.

    With an integer seed, batches above the shard size are generated in
    independent shards whose seeds derive from (seed, shard index); the
    assembled matrix is identical whatever order shards run in.
    """
    if count < 1:
        raise ConfigurationError(f"sample count must be positive, got {count}")
    if isinstance(rng, (int, np.integer)) and count > SHARD_SIZE:
        seed = int(rng)
        out = np.empty((count, spec.n))
        for shard, lo in enumerate(range(0, count, SHARD_SIZE)):
            hi = min(lo + SHARD_SIZE, count)
            out[lo:hi] = _sample_rows(spec, hi - lo, make_rng(seed, "shard", shard))
        return SampleBatch(matrix=out, spec=spec, seed=seed)
    seed = int(rng) if isinstance(rng, (int, np.integer)) else None
    return SampleBatch(matrix=_sample_rows(spec, count, as_rng(rng)), spec=spec, seed=seed)


def weighted_sum(batch: SampleBatch, theta: Direction) -> np.ndarray:
    """Row-wise inner products <X, theta>."""
    if batch.matrix.shape[1] != theta.n:
        raise DomainError(
            f"dimension mismatch: batch has n={batch.matrix.shape[1]}, "
            f"direction has n={theta.n}"
        )
    return batch.matrix @ theta.coords


@dataclass(frozen=True)
class CovarianceSummary:
    max_eigenvalue: float   # M_2^2
    trace: float            # E|X|^2
    mean_square_eigenvalue: float  # (1/n) sum lambda_i^2 = m_2^2
    exact: bool


def covariance_summary(spec: SystemSpec, budget: int, rng=0) -> CovarianceSummary:
    """Eigen-summary of the covariance; exact for anisotropic Gaussians."""
    if spec.kind == "gaussian_anisotropic":
        eig = np.asarray(spec.eigenvalues)
        return CovarianceSummary(
            max_eigenvalue=float(eig.max()),
            trace=float(eig.sum()),
            mean_square_eigenvalue=float(np.square(eig).sum() / spec.n),
            exact=True,
        )
    if budget < spec.n:
        raise InsufficientDataError(
            f"covariance estimation needs at least n={spec.n} samples, got {budget}"
        )
    batch = sample_vector(spec, budget, rng)
    cov = batch.matrix.T @ batch.matrix / budget  # all built-ins are centered
    eig = np.linalg.eigvalsh(cov)
    return CovarianceSummary(
        max_eigenvalue=float(eig.max()),
        trace=float(eig.sum()),
        mean_square_eigenvalue=float(np.square(eig).sum() / spec.n),
        exact=False,
    )


# ---------------------------------------------------------------------------
# Built-in catalog
# ---------------------------------------------------------------------------

def spiked_eigenvalues(n: int, spike: float = 2.0, normalize: bool = True) -> tuple[float, ...]:
    """One spiked eigenvalue, rest flat; optionally rescaled so the sum is n."""
    eig = np.ones(n)
    eig[0] = spike
    if normalize:
        eig *= n / eig.sum()
    return tuple(float(v) for v in eig)


def built_in_spec(name: str, n: int) -> SystemSpec:
    """Construct a catalog system by CLI name."""
    name = name.lower()
    if name in IID_BASES:
        return SystemSpec(kind="iid", n=n, base=name)
    if name in ("trigonometric", "trig"):
        return SystemSpec(kind="trigonometric", n=n)
    if name == "walsh":
        return SystemSpec(kind="walsh", n=n)
    if name in ("fixed_norm_rademacher", "fixed_norm"):
        return SystemSpec(kind="fixed_norm_rademacher", n=n)
    if name in ("gaussian_anisotropic", "aniso"):
        return SystemSpec(kind="gaussian_anisotropic", n=n, eigenvalues=spiked_eigenvalues(n))
    raise ConfigurationError(f"unknown system name {name!r}")


def default_catalog(n: int = 64) -> list[SystemSpec]:
    """The systems exercised by the verification suites."""
    walsh_n = n - 1  # 2^m - 1 shape: all nonempty characters of a minimal cube
    return [
        SystemSpec(kind="iid", n=n, base="rademacher"),
        SystemSpec(kind="iid", n=n, base="uniform"),
        SystemSpec(kind="iid", n=n, base="exponential"),
        SystemSpec(kind="iid", n=n, base="normal"),
        SystemSpec(kind="trigonometric", n=n),
        SystemSpec(kind="walsh", n=walsh_n),
        SystemSpec(kind="fixed_norm_rademacher", n=n),
        SystemSpec(kind="gaussian_anisotropic", n=n, eigenvalues=spiked_eigenvalues(n)),
    ]
