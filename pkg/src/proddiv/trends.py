"""Annual metric series: least-squares trend with confidence interval and
Pearson correlation with a seeded permutation p-value."""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy import stats

DEFAULT_PERMUTATIONS = 100_000
EXHAUSTIVE_MAX_N = 7
_BATCH = 10_000


class TrendError(ValueError):
    pass


@dataclass
class AnnualSeries:
    metric: str
    points: list[tuple[int, float]]
    q: float | None = None

    def __post_init__(self):
        self.points = sorted((int(y), float(v)) for y, v in self.points)
        years = [y for y, _ in self.points]
        if any(b <= a for a, b in zip(years, years[1:])):
            raise TrendError(f"{self.metric}: years must be strictly increasing, got {years}")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        x = np.array([y for y, _ in self.points], dtype=float)
        v = np.array([v for _, v in self.points], dtype=float)
        return x, v

    def __len__(self):
        return len(self.points)


@dataclass
class LinearFit:
    slope: float
    intercept: float
    ci: float  # half-width of the slope confidence interval
    se_slope: float
    resid_std: float
    t_quantile: float
    level: float
    n: int


@dataclass
class TrendReport:
    metric: str
    q: float | None
    slope: float
    intercept: float
    ci90: float
    r: float
    p: float
    stars: str
    n: int

    def row(self):
        q = "" if self.q is None else f"{self.q:g}"
        return (self.metric, q, repr(self.slope), repr(self.ci90), repr(self.r), repr(self.p), self.stars)

    def to_dict(self):
        return asdict(self)


def _xy(series_or_x, y=None):
    if y is None:
        return series_or_x.arrays()
    return np.asarray(series_or_x, dtype=float), np.asarray(y, dtype=float)


def linear_fit(series, level: float = 0.90) -> LinearFit:
    """Ordinary least squares of value on year with a t-based slope interval."""
    x, y = _xy(series)
    n = x.size
    if n < 3:
        raise TrendError(f"a trend fit needs at least 3 points, got {n}")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0:
        raise TrendError("all years are equal")
    slope = float(xc @ (y - y.mean())) / sxx
    intercept = float(y.mean() - slope * x.mean())
    resid = y - (intercept + slope * x)
    resid_std = math.sqrt(float(resid @ resid) / (n - 2))
    se = resid_std / math.sqrt(sxx)
    tq = float(stats.t.ppf(0.5 + level / 2, n - 2))
    return LinearFit(slope, intercept, tq * se, se, resid_std, tq, level, n)


def _flat(v: np.ndarray) -> bool:
    # rounding noise around a constant (e.g. 1.0 +- 1 ulp) counts as no variance
    return float(v.std()) <= 1e-12 * float(np.abs(v).max())


def pearson_r(x, y) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    for v in (x, y):
        if _flat(v):
            raise TrendError("Pearson correlation is undefined for a zero-variance coordinate")
    xc, yc = x - x.mean(), y - y.mean()
    denom = math.sqrt(float(xc @ xc) * float(yc @ yc))
    return max(-1.0, min(1.0, float(xc @ yc) / denom))


def permutation_pvalue(x, y, n_perm=DEFAULT_PERMUTATIONS, seed=0, exhaustive=None) -> float:
    """Two-sided p-value for Pearson r under random relabelling of ``y``.

    Monte Carlo mode returns ``(hits + 1) / (n_perm + 1)``; batches draw from
    independent child seeds so their counts can be summed in any order.
    Exhaustive mode (default for ``n <= 7``) enumerates every permutation.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.size
    r_obs = abs(pearson_r(x, y))
    xc = x - x.mean()
    yc = y - y.mean()
    norm = math.sqrt(float(xc @ xc) * float(yc @ yc))
    cut = r_obs - 1e-12
    if exhaustive is None:
        exhaustive = n <= EXHAUSTIVE_MAX_N
    if exhaustive:
        if n > EXHAUSTIVE_MAX_N + 1:
            raise TrendError(f"exhaustive permutation is limited to n <= {EXHAUSTIVE_MAX_N + 1}")
        perms = np.array(list(itertools.permutations(range(n))))
        r = np.abs(yc[perms] @ xc) / norm
        return float((r >= cut).sum() / len(perms))

    hits = 0
    sizes = [_BATCH] * (n_perm // _BATCH) + ([n_perm % _BATCH] if n_perm % _BATCH else [])
    for size, child in zip(sizes, np.random.SeedSequence(seed).spawn(len(sizes))):
        rng = np.random.default_rng(child)
        shuffled = rng.permuted(np.broadcast_to(yc, (size, n)), axis=1)
        hits += int((np.abs(shuffled @ xc) / norm >= cut).sum())
    return (hits + 1) / (n_perm + 1)


def significance_stars(p: float) -> str:
    if p <= 0.01:
        return "***"
    if p <= 0.05:
        return "**"
    return ""


def pearson_trend(series, n_perm=DEFAULT_PERMUTATIONS, seed=0, exhaustive=None, level=0.90) -> TrendReport:
    x, y = series.arrays()
    if len(series) < 3:
        raise TrendError(f"{series.metric}: a trend needs at least 3 points")
    r = pearson_r(x, y)
    p = permutation_pvalue(x, y, n_perm=n_perm, seed=seed, exhaustive=exhaustive)
    fit = linear_fit(series, level)
    return TrendReport(series.metric, series.q, fit.slope, fit.intercept, fit.ci, r, p, significance_stars(p), fit.n)
