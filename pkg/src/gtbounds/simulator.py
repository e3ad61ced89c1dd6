"""Monte Carlo group-testing engine: matrix ensembles, observation sampling,
MAP and information-density decoders, empirical error estimation, and
test-count sweeps exhibiting the phase transition."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channels import Channel
from .errors import (
    AbsoluteContinuityError,
    DomainError,
    FeasibilityError,
    MatrixParseError,
    ParameterError,
)
from .infomath import Distribution
from .rng import substream
from .thresholds import MixtureProfile

_SET_CAP = 10**6
# Surrogate for log(0): large enough that a single zero-probability test
# outranks any sum of finite log-likelihoods, small enough to avoid inf/nan.
_LOG_FLOOR = -1e30


class MeasurementMatrix:
    """n x p binary test-design matrix with cached row weights."""

    def __init__(self, rows):
        arr = np.asarray(rows, dtype=np.uint8)
        if arr.ndim != 2:
            raise ParameterError("matrix rows must form a 2-D array")
        if not np.all((arr == 0) | (arr == 1)):
            raise ParameterError("matrix entries must be 0 or 1")
        self.rows = arr
        self.rows.setflags(write=False)
        self.n, self.p = arr.shape
        self.row_weights = arr.sum(axis=1).astype(int)
        self._cache = {}

    def set_count_table(self, k: int):
        """All size-k candidate sets (lexicographic) and their per-test
        defective counts; cached per k."""
        if k not in self._cache:
            combos = _combos(self.p, k)
            vtable = self.rows[:, combos].sum(axis=2).T  # (n_sets, n)
            self._cache[k] = (combos, vtable)
        return self._cache[k]

    def loglik_tables(self, k: int, channel: Channel):
        """log P(y=0|.) and log P(y=1|.) per candidate set and test."""
        key = (k, channel.table)
        if key not in self._cache:
            combos, vtable = self.set_count_table(k)
            q = channel.prob_one_array()
            logp1 = np.where(q > 0, np.log(np.where(q > 0, q, 1.0)), _LOG_FLOOR)
            logp0 = np.where(q < 1, np.log(np.where(q < 1, 1.0 - q, 1.0)), _LOG_FLOOR)
            self._cache[key] = (combos, logp0[vtable], logp1[vtable])
        return self._cache[key]


@lru_cache(maxsize=32)
def _combos(p: int, k: int) -> np.ndarray:
    if math.comb(p, k) > _SET_CAP:
        raise FeasibilityError(
            f"C({p},{k}) = {math.comb(p, k)} candidate sets exceeds the "
            f"exhaustive-decoding cap {_SET_CAP}; use smaller (p, k)"
        )
    return np.array(list(itertools.combinations(range(p), k)), dtype=np.intp)


@dataclass(frozen=True)
class EnsembleSpec:
    """Matrix ensemble: i.i.d. Bernoulli(nu/k), constant column weight, or a
    row profile driven by a mixture of Bernoulli intensities."""

    variant: str
    nu: float | None = None
    column_weight: int | None = None
    profile: MixtureProfile | None = None
    seed: int = 0

    def __post_init__(self):
        if self.variant == "iid":
            if self.nu is None or self.nu < 0:
                raise ParameterError("iid ensemble needs nu >= 0")
        elif self.variant == "constant_column_weight":
            if self.column_weight is None or self.column_weight < 0:
                raise ParameterError("constant-column-weight ensemble needs weight >= 0")
        elif self.variant == "profile":
            if self.profile is None:
                raise ParameterError("profile ensemble needs a mixture profile")
        else:
            raise ParameterError(f"unknown ensemble variant {self.variant!r}")

    @classmethod
    def from_string(cls, text: str, seed: int = 0) -> "EnsembleSpec":
        """Parse "iid:NU", "ccw:W", or "profile:w1@nu1,w2@nu2"."""
        name, sep, rest = text.partition(":")
        if name == "iid":
            return cls("iid", nu=float(rest), seed=seed)
        if name == "ccw":
            return cls("constant_column_weight", column_weight=int(rest), seed=seed)
        if name == "profile":
            return cls("profile", profile=MixtureProfile.from_string(rest), seed=seed)
        raise ParameterError(f"unknown ensemble spec {text!r}")

    def __str__(self) -> str:
        if self.variant == "iid":
            return f"iid:{self.nu:g}"
        if self.variant == "constant_column_weight":
            return f"ccw:{self.column_weight}"
        return f"profile:{self.profile}"


def _profile_row_nus(profile: MixtureProfile, n: int) -> np.ndarray:
    """Deterministic per-row intensities matching the profile's weights as
    closely as n rows allow (largest-remainder apportionment)."""
    weights = np.array([w for w, _ in profile.atoms])
    nus = np.array([nu for _, nu in profile.atoms])
    exact = weights * n
    counts = np.floor(exact).astype(int)
    short = n - counts.sum()
    if short > 0:
        order = np.argsort(-(exact - counts), kind="stable")
        counts[order[:short]] += 1
    return np.repeat(nus, counts)


def _gen_matrix_with_rng(spec: EnsembleSpec, n, p, k, rng) -> MeasurementMatrix:
    if spec.variant == "iid":
        if spec.nu > k:
            raise ParameterError(f"iid nu={spec.nu} exceeds k={k}")
        rows = (rng.random((n, p)) < spec.nu / k).astype(np.uint8)
    elif spec.variant == "constant_column_weight":
        w = spec.column_weight
        if w > n:
            raise ParameterError(f"column weight {w} exceeds n={n}")
        rows = np.zeros((n, p), dtype=np.uint8)
        for j in range(p):
            rows[rng.permutation(n)[:w], j] = 1
    else:
        row_nus = _profile_row_nus(spec.profile, n)
        if np.any(row_nus > k) or np.any(row_nus < 0):
            raise ParameterError("profile intensities must lie in [0, k]")
        rows = (rng.random((n, p)) < (row_nus / k)[:, None]).astype(np.uint8)
    return MeasurementMatrix(rows)


def gen_matrix(spec: EnsembleSpec, n: int, p: int, k: int) -> MeasurementMatrix:
    """Draw a matrix from the ensemble; deterministic given spec.seed."""
    return _gen_matrix_with_rng(spec, n, p, k, substream(spec.seed, 0))


def sample_observations(matrix: MeasurementMatrix, s, channel: Channel, rng) -> np.ndarray:
    """Test outcomes for defective set s, independent across tests."""
    s = sorted(s)
    if len(s) != channel.k:
        raise DomainError(f"set size {len(s)} does not match channel k={channel.k}")
    if s and (s[0] < 0 or s[-1] >= matrix.p):
        raise DomainError("defective set outside item range")
    v = matrix.rows[:, s].sum(axis=1)
    q = channel.prob_one_array()[v]
    return (rng.random(matrix.n) < q).astype(np.uint8)


def map_decoder(matrix: MeasurementMatrix, y, k: int, channel: Channel) -> tuple:
    """Exhaustive maximum-likelihood decoding over all size-k sets.

    Ties break to the lexicographically first set.  Zero-probability
    outcomes are scored with a finite surrogate for log(0), so any set
    with fewer inconsistencies outranks one with more.
    """
    combos, m0, m1 = matrix.loglik_tables(k, channel)
    y = np.asarray(y, dtype=float)
    loglik = m0 @ (1.0 - y) + m1 @ y
    return tuple(int(i) for i in combos[int(np.argmax(loglik))])


def info_density_decoder(
    matrix: MeasurementMatrix,
    y,
    k: int,
    channel: Channel,
    q: Distribution,
    gamma: float,
) -> tuple | None:
    """First set (lexicographic) whose cumulative information density
    reaches gamma; None (abstain) if no set does."""
    combos, m0, m1 = matrix.loglik_tables(k, channel)
    y = np.asarray(y, dtype=float)
    q0, q1 = q.prob(0), q.prob(1)
    if (np.any(y == 0) and q0 == 0) or (np.any(y == 1) and q1 == 0):
        raise AbsoluteContinuityError("reference output law has zero mass on an observed outcome")
    ref = float(np.where(y > 0, math.log(q1) if q1 > 0 else 0.0, math.log(q0) if q0 > 0 else 0.0).sum())
    stats = m0 @ (1.0 - y) + m1 @ y - ref
    hits = np.nonzero(stats >= gamma)[0]
    if hits.size == 0:
        return None
    return tuple(int(i) for i in combos[int(hits[0])])


def wilson_interval(errors: int, trials: int, z: float = 1.959963984540054):
    """95% Wilson score interval for a binomial proportion."""
    if trials == 0:
        return 0.0, 1.0
    phat = errors / trials
    denom = 1.0 + z * z / trials
    center = (phat + z * z / (2 * trials)) / denom
    half = z * math.sqrt(phat * (1 - phat) / trials + z * z / (4 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


@dataclass(frozen=True)
class SimEstimate:
    pe_hat: float
    trials: int
    errors: int
    ci_low: float
    ci_high: float
    seed: int

    def to_json_dict(self) -> dict:
        return {
            "pe_hat": self.pe_hat,
            "trials": self.trials,
            "errors": self.errors,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "seed": self.seed,
        }


def estimate_pe(
    matrix: MeasurementMatrix,
    channel: Channel,
    k: int,
    decoder,
    trials: int,
    seed: int,
) -> SimEstimate:
    """Empirical exact-recovery error for a fixed matrix.

    Each trial draws the defective set uniformly from its own substream,
    so parallel and serial evaluation orders agree; an abstaining decoder
    counts as an error.
    """
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    p = matrix.p
    errors = 0
    for t in range(trials):
        rng = substream(seed, t)
        s = tuple(sorted(int(i) for i in rng.choice(p, size=k, replace=False)))
        y = sample_observations(matrix, s, channel, rng)
        if decoder(matrix, y, k, channel) != s:
            errors += 1
    lo, hi = wilson_interval(errors, trials)
    return SimEstimate(errors / trials, trials, errors, lo, hi, seed)


def estimate_pe_ensemble(
    spec: EnsembleSpec,
    channel: Channel,
    n: int,
    p: int,
    k: int,
    decoder,
    trials: int,
    seed: int,
) -> SimEstimate:
    """Empirical error averaged over the matrix ensemble (fresh matrix per
    trial)."""
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    errors = 0
    for t in range(trials):
        rng = substream(seed, t)
        matrix = _gen_matrix_with_rng(spec, n, p, k, rng)
        s = tuple(sorted(int(i) for i in rng.choice(p, size=k, replace=False)))
        y = sample_observations(matrix, s, channel, rng)
        if decoder(matrix, y, k, channel) != s:
            errors += 1
    lo, hi = wilson_interval(errors, trials)
    return SimEstimate(errors / trials, trials, errors, lo, hi, seed)


def isotonic_decreasing(values, weights=None) -> np.ndarray:
    """Weighted least-squares fit that is nonincreasing (pool adjacent
    violators)."""
    y = list(map(float, values))
    w = [1.0] * len(y) if weights is None else list(map(float, weights))
    blocks = [[y[i], w[i], 1] for i in range(len(y))]  # mean, weight, count
    merged = []
    for b in blocks:
        merged.append(b)
        while len(merged) > 1 and merged[-2][0] < merged[-1][0]:
            m2, w2, c2 = merged.pop()
            m1, w1, c1 = merged.pop()
            merged.append([(m1 * w1 + m2 * w2) / (w1 + w2), w1 + w2, c1 + c2])
    out = []
    for mean, _, count in merged:
        out.extend([mean] * count)
    return np.array(out)


@dataclass(frozen=True)
class SweepPoint:
    n: int
    estimate: SimEstimate


@dataclass(frozen=True)
class SweepResult:
    points: tuple[SweepPoint, ...]
    cleaned_pe: tuple[float, ...]
    ensemble: str
    fixed_matrix: bool
    seed: int

    CSV_HEADER = ("n", "trials", "errors", "pe_hat", "ci_low", "ci_high")

    def to_csv_rows(self) -> list[tuple]:
        return [
            (pt.n, pt.estimate.trials, pt.estimate.errors, pt.estimate.pe_hat,
             pt.estimate.ci_low, pt.estimate.ci_high)
            for pt in self.points
        ]


def sweep_n(
    spec: EnsembleSpec,
    channel: Channel,
    p: int,
    k: int,
    n_grid,
    trials: int,
    seed: int,
    fixed_matrix: bool = False,
    decoder=map_decoder,
) -> SweepResult:
    """Empirical error across a grid of test counts.

    Default mode redraws the matrix every trial (ensemble-averaged error);
    fixed-matrix mode draws one matrix per n from spec.seed and estimates
    its specific error.  A nonincreasing isotonic fit of the curve is
    reported alongside the raw estimates.
    """
    n_grid = list(n_grid)
    if not n_grid:
        raise ParameterError("n grid must be nonempty")
    points = []
    for j, n in enumerate(n_grid):
        point_seed = seed + j * trials
        if fixed_matrix:
            matrix = gen_matrix(spec, n, p, k)
            est = estimate_pe(matrix, channel, k, decoder, trials, point_seed)
        else:
            est = estimate_pe_ensemble(spec, channel, n, p, k, decoder, trials, point_seed)
        points.append(SweepPoint(n=n, estimate=est))
    cleaned = isotonic_decreasing(
        [pt.estimate.pe_hat for pt in points],
        [pt.estimate.trials for pt in points],
    )
    return SweepResult(
        points=tuple(points),
        cleaned_pe=tuple(float(x) for x in cleaned),
        ensemble=str(spec),
        fixed_matrix=fixed_matrix,
        seed=seed,
    )


def crossing_n(result: SweepResult, level: float = 0.5) -> float | None:
    """Test count where the isotonic-cleaned error curve crosses `level`,
    by linear interpolation; None if it never does."""
    ns = [pt.n for pt in result.points]
    ys = list(result.cleaned_pe)
    if ys[0] <= level:
        return float(ns[0])
    for i in range(1, len(ys)):
        if ys[i] <= level:
            y0, y1 = ys[i - 1], ys[i]
            if y0 == y1:
                return float(ns[i])
            frac = (y0 - level) / (y0 - y1)
            return float(ns[i - 1] + frac * (ns[i] - ns[i - 1]))
    return None


def save_matrix(matrix: MeasurementMatrix, path) -> None:
    """Plain text format: header "p n", then n rows of 0/1 characters."""
    with open(path, "w") as fh:
        fh.write(f"{matrix.p} {matrix.n}\n")
        for row in matrix.rows:
            fh.write("".join("1" if x else "0" for x in row) + "\n")


def load_matrix(path) -> MeasurementMatrix:
    """Parse the plain-text matrix format, validating shape line by line."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or not lines[0].strip():
        raise MatrixParseError(f"{path}: empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise MatrixParseError(f"{path}:1: header must be 'p n'")
    try:
        p, n = int(header[0]), int(header[1])
    except ValueError:
        raise MatrixParseError(f"{path}:1: header must contain two integers") from None
    if p < 1 or n < 0:
        raise MatrixParseError(f"{path}:1: need p >= 1 and n >= 0")
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != n:
        raise MatrixParseError(f"{path}: expected {n} rows, found {len(body)}")
    rows = np.zeros((n, p), dtype=np.uint8)
    for i, ln in enumerate(body):
        ln = ln.strip()
        if len(ln) != p or set(ln) - {"0", "1"}:
            raise MatrixParseError(
                f"{path}:{i + 2}: row must be {p} characters of 0/1, got {ln!r}"
            )
        rows[i] = [c == "1" for c in ln]
    return MeasurementMatrix(rows)
