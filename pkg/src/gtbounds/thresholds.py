"""Converse thresholds: the Bernoulli-design information maximum, channel
capacity and its output distribution, the strong-converse test count with
its Chebyshev error lower bound, and the weak-converse thresholds
(including the mixture variant with an auxiliary time-sharing variable).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .channels import Channel
from .errors import (
    AbsoluteContinuityError,
    ConvergenceError,
    DomainError,
    ParameterError,
)
from .infomath import Distribution, conditional_mi_bernoulli_design, log_binom
from .rng import substream

# Numerator conventions for the weak-converse ratio.  "ell_log" is the
# l*log(p/l) form whose noiseless/symmetric closed forms are the usual
# counting-style thresholds; "binom" is the log C(p-k+l, l) form from the
# Fano step.  The binomial form is larger at desk scale (it keeps the
# +Theta(l) term of the log binomial coefficient).
NUMERATORS = ("ell_log", "binom")

_EXHAUSTIVE_SET_CAP = 10**5


@dataclass(frozen=True)
class CapacityResult:
    capacity: float
    q_star: Distribution
    input_dist: Distribution
    iterations: int
    gap: float


@dataclass(frozen=True)
class InfoDensityMoments:
    mean: float
    variance: float


@dataclass(frozen=True)
class MixtureProfile:
    """Finite mixture of Bernoulli-design intensities: (weight, nu) atoms."""

    atoms: tuple[tuple[float, float], ...]

    def __post_init__(self):
        if not self.atoms:
            raise ParameterError("profile needs at least one atom")
        total = sum(w for w, _ in self.atoms)
        if abs(total - 1.0) > 1e-12:
            raise ParameterError(f"profile weights sum to {total}, not 1")
        if any(w < 0 for w, _ in self.atoms):
            raise ParameterError("profile weights must be nonnegative")

    @classmethod
    def single(cls, nu: float) -> "MixtureProfile":
        return cls(((1.0, nu),))

    @classmethod
    def from_string(cls, text: str) -> "MixtureProfile":
        """Parse "w1@nu1,w2@nu2,..."."""
        atoms = []
        for part in text.split(","):
            w, sep, nu = part.partition("@")
            if not sep:
                raise ParameterError(f"bad profile atom {part!r}, expected w@nu")
            atoms.append((float(w), float(nu)))
        return cls(tuple(atoms))

    def __str__(self) -> str:
        return ",".join(f"{w:g}@{nu:g}" for w, nu in self.atoms)


@dataclass(frozen=True)
class PerEllRow:
    ell: int
    nu: float
    mi: float
    delta_ell: float
    ratio: float


@dataclass(frozen=True)
class ThresholdResult:
    n_threshold: float
    best_ell: int
    best_nu: float
    eta: float
    c0: float
    per_ell: tuple[PerEllRow, ...]
    numerator: str = "ell_log"
    profile: MixtureProfile | None = None

    def to_json_dict(self) -> dict:
        d = {
            "n_threshold": self.n_threshold,
            "best_ell": self.best_ell,
            "best_nu": self.best_nu,
            "eta": self.eta,
            "c0": self.c0,
            "numerator": self.numerator,
            "per_ell": [
                {
                    "ell": r.ell,
                    "nu": r.nu,
                    "mi": r.mi,
                    "delta_ell": r.delta_ell,
                    "ratio": r.ratio,
                }
                for r in self.per_ell
            ],
        }
        if self.profile is not None:
            d["profile"] = str(self.profile)
        return d

    CSV_HEADER = ("ell", "nu", "mi", "delta_ell", "ratio")

    def to_csv_rows(self) -> list[tuple]:
        return [(r.ell, r.nu, r.mi, r.delta_ell, r.ratio) for r in self.per_ell]


@dataclass(frozen=True)
class ChebyshevBound:
    value: float
    vacuous: bool
    reason: str | None
    delta: float
    delta1: float
    i_star: float
    n_sets: int
    avg_variance: float
    stderr: float | None = None


def _golden_min(f, a: float, b: float, rel_tol: float = 1e-6):
    """Golden-section minimization on [a, b]; returns (x, f(x))."""
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = b - invphi * (b - a)
    x2 = a + invphi * (b - a)
    f1, f2 = f(x1), f(x2)
    scale = max(1.0, abs(a), abs(b))
    while (b - a) > rel_tol * scale:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - invphi * (b - a)
            f1 = f(x1)
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + invphi * (b - a)
            f2 = f(x2)
    if f1 <= f2:
        return x1, f1
    return x2, f2


def _grid_refine_min(f, lo: float, hi: float, grid_points: int = 257):
    """256-interval grid seed followed by golden-section refinement."""
    grid = np.linspace(lo, hi, grid_points)
    vals = [f(x) for x in grid]
    i = int(np.argmin(vals))
    a = grid[max(0, i - 1)]
    b = grid[min(len(grid) - 1, i + 1)]
    x, v = _golden_min(f, a, b)
    if vals[i] < v:
        return float(grid[i]), vals[i]
    return float(x), v


def i_star(channel: Channel) -> tuple[float, float]:
    """Maximize nu -> I(X_s; Y) over nu in [0, k] for the full set (ell = k).

    Returns (nu_star, value).
    """
    k = channel.k

    def neg(nu):
        return -conditional_mi_bernoulli_design(channel, k, nu)

    nu, v = _grid_refine_min(neg, 0.0, float(k))
    return nu, -v


def capacity_output_dist(
    channel: Channel, tol: float = 1e-9, max_iter: int = 100_000
) -> CapacityResult:
    """Capacity of P(Y|V) over all input laws on {0..k}, by alternating
    maximization, with the capacity-achieving output distribution.

    Stops when the spread between max_v KL(P(.|v) || Q) and the current
    mutual information is <= tol, so the returned Q* satisfies the
    saddlepoint property KL(P(.|v) || Q*) <= capacity + tol for every v.
    """
    if tol <= 0:
        raise ParameterError("tolerance must be positive")
    W = np.stack([channel.row(v) for v in range(channel.k + 1)])  # (k+1, 2)
    m = W.shape[0]
    r = np.full(m, 1.0 / m)
    best = None
    for it in range(1, max_iter + 1):
        q = r @ W
        with np.errstate(divide="ignore", invalid="ignore"):
            log_ratio = np.where(W > 0, np.log(np.where(W > 0, W, 1.0) / np.where(q > 0, q, 1.0)), 0.0)
        d = (W * log_ratio).sum(axis=1)
        i_lower = float(r @ d)
        i_upper = float(d.max())
        gap = i_upper - i_lower
        best = CapacityResult(
            capacity=i_lower,
            q_star=Distribution(q / q.sum()),
            input_dist=Distribution(r / r.sum()),
            iterations=it,
            gap=gap,
        )
        if gap <= tol:
            return best
        r = r * np.exp(d - d.max())
        r /= r.sum()
    raise ConvergenceError(
        f"capacity iteration did not reach gap <= {tol} in {max_iter} steps",
        best=best,
    )


def strong_converse_threshold(p: int, k: int, channel: Channel, eta: float) -> float:
    """log C(p,k) / I_s* * (1 - eta); +inf for an unidentifiable channel."""
    if not 1 <= k <= p:
        raise DomainError(f"need 1 <= k <= p, got k={k}, p={p}")
    _, istar = i_star(channel)
    if istar <= 1e-15:
        return math.inf
    return log_binom(p, k) / istar * (1.0 - eta)


def info_density_moments(matrix, s, channel: Channel, q: Distribution) -> InfoDensityMoments:
    """Mean and variance of the cumulative information density for set s.

    Tests are independent given s, so per-test variances add.
    """
    s = sorted(s)
    k = channel.k
    if len(s) != k:
        raise DomainError(f"set size {len(s)} does not match channel k={k}")
    if matrix.n == 0:
        return InfoDensityMoments(0.0, 0.0)
    v = matrix.rows[:, s].sum(axis=1)
    counts = np.bincount(v, minlength=k + 1)
    qy = np.array([q.prob(0), q.prob(1)])
    mean = 0.0
    var = 0.0
    for vv in range(k + 1):
        c = counts[vv]
        if c == 0:
            continue
        row = channel.row(vv)
        if np.any((row > 0) & (qy == 0)):
            raise AbsoluteContinuityError(
                f"reference output law has zero mass on a reachable outcome (v={vv})"
            )
        with np.errstate(divide="ignore"):
            lr = np.where(row > 0, np.log(np.where(row > 0, row, 1.0) / qy), 0.0)
        m1 = float((row * lr).sum())
        m2 = float((row * lr * lr).sum())
        mean += c * m1
        var += c * (m2 - m1 * m1)
    return InfoDensityMoments(mean, var)


def max_per_test_log_ratio_variance(channel: Channel, q: Distribution) -> float:
    """max_v Var_Y[log(P(Y|v)/q(Y))]; analytic cap for the per-test variance."""
    qy = np.array([q.prob(0), q.prob(1)])
    worst = 0.0
    for vv in range(channel.k + 1):
        row = channel.row(vv)
        with np.errstate(divide="ignore"):
            lr = np.where(row > 0, np.log(np.where(row > 0, row, 1.0) / qy), 0.0)
        m1 = float((row * lr).sum())
        m2 = float((row * lr * lr).sum())
        worst = max(worst, m2 - m1 * m1)
    return worst


def chebyshev_error_lower_bound(
    matrix,
    channel: Channel,
    k: int,
    delta1: float | None = None,
    delta: float = 0.1,
    sampler: str = "auto",
    trials: int = 2000,
    seed: int = 0,
) -> ChebyshevBound:
    """Chebyshev lower bound on the error probability of any decoder.

    Averages over defective sets s exhaustively when C(p,k) is small,
    otherwise by Monte Carlo.  Returns a vacuous zero (with the failed
    condition named) when the applicability condition
    log C(p,k) + log delta1 <= mu_n(s) + n*Delta*I_s* fails for a sampled s.
    """
    if not 0 < delta < 1:
        raise ParameterError(f"Delta must be in (0,1), got {delta}")
    p = matrix.p
    n = matrix.n
    n_sets_total = math.comb(p, k)
    if delta1 is None:
        delta1 = min(0.5, max(1e-6, 1.0 / math.sqrt(n_sets_total)))
    if not 0 < delta1 < 1:
        raise ParameterError(f"delta1 must be in (0,1), got {delta1}")
    if p == k:
        return ChebyshevBound(
            value=0.0,
            vacuous=True,
            reason="single candidate set: error probability is trivially 0",
            delta=delta,
            delta1=delta1,
            i_star=math.nan,
            n_sets=0,
            avg_variance=0.0,
        )
    cap = capacity_output_dist(channel)
    _, istar = i_star(channel)
    log_pk = log_binom(p, k)
    threshold = log_pk + math.log(delta1)
    slack = n * delta * istar

    if sampler not in ("auto", "exhaustive", "mc"):
        raise ParameterError(f"unknown sampler {sampler!r}")
    exhaustive = sampler == "exhaustive" or (
        sampler == "auto" and n_sets_total <= _EXHAUSTIVE_SET_CAP
    )
    if exhaustive:
        sets = itertools.combinations(range(p), k)
        count = n_sets_total
    else:
        def _mc_sets():
            for t in range(trials):
                rng = substream(seed, t)
                yield tuple(sorted(rng.choice(p, size=k, replace=False).tolist()))

        sets = _mc_sets()
        count = trials

    variances = np.empty(count)
    for idx, s in enumerate(sets):
        mom = info_density_moments(matrix, s, channel, cap.q_star)
        if threshold > mom.mean + slack:
            return ChebyshevBound(
                value=0.0,
                vacuous=True,
                reason=(
                    f"condition failed for set {tuple(s)}: "
                    f"log C(p,k)+log delta1 = {threshold:.6g} > "
                    f"mu_n(s)+n*Delta*I* = {mom.mean + slack:.6g}"
                ),
                delta=delta,
                delta1=delta1,
                i_star=istar,
                n_sets=idx + 1,
                avg_variance=math.nan,
            )
        variances[idx] = mom.variance

    avg_var = float(variances.mean())
    denom = (n * delta * istar) ** 2
    if denom == 0.0:
        ratio = 0.0 if avg_var == 0.0 else math.inf
        ratio_stderr = 0.0
    else:
        ratio = avg_var / denom
        ratio_stderr = float(variances.std(ddof=1)) / math.sqrt(count) / denom if count > 1 else 0.0
    value = max(0.0, 1.0 - ratio - delta1)
    return ChebyshevBound(
        value=value,
        vacuous=False,
        reason=None,
        delta=delta,
        delta1=delta1,
        i_star=istar,
        n_sets=count,
        avg_variance=avg_var,
        stderr=None if exhaustive else ratio_stderr,
    )


def delta_ell(p: int, k: int, ell: int, c0: float) -> float:
    """Remainder term absorbing the binomial-approximation error."""
    if not 1 <= ell <= k < p:
        raise DomainError(f"need 1 <= ell <= k < p, got ell={ell}, k={k}, p={p}")
    if c0 <= 0:
        raise ParameterError(f"c0 must be positive, got {c0}")
    if ell == k:
        return 0.0
    prod = ell * (k - ell)
    return c0 * prod / p * max(1.0, math.log(p / prod))


def _log_numerator(p: int, k: int, ell: int, numerator: str) -> float:
    if numerator == "ell_log":
        return ell * math.log(p / ell)
    if numerator == "binom":
        return log_binom(p - k + ell, ell)
    raise ParameterError(f"unknown numerator convention {numerator!r}")


def _ratio_rows(channel, p, k, ells, lognums, deltas, mis):
    rows = []
    for ell, lognum, dl, mi in zip(ells, lognums, deltas, mis):
        denom = mi + dl
        ratio = math.inf if denom <= 1e-15 else lognum / denom
        rows.append((ell, mi, dl, ratio))
    return rows


def weak_converse_threshold(
    p: int,
    k: int,
    channel: Channel,
    eta: float,
    c0: float = 1.0,
    numerator: str = "ell_log",
) -> ThresholdResult:
    """Weak-converse test count: min over nu of max over ell of the
    Fano ratio, times (1 - eta).

    The minimum over nu is applied to the whole max-over-ell ratio (the
    literal per-ell minimum of the mutual information alone degenerates
    to zero at nu = 0).
    """
    if not 1 <= k < p:
        raise DomainError(f"need 1 <= k < p, got k={k}, p={p}")
    if not 0 <= eta < 1:
        raise ParameterError(f"eta must be in [0,1), got {eta}")
    ells = list(range(1, k + 1))
    lognums = [_log_numerator(p, k, ell, numerator) for ell in ells]
    deltas = [delta_ell(p, k, ell, c0) for ell in ells]

    def max_ratio(nu: float) -> float:
        worst = 0.0
        for ell, lognum, dl in zip(ells, lognums, deltas):
            denom = conditional_mi_bernoulli_design(channel, ell, nu) + dl
            if denom <= 1e-15:
                return math.inf
            worst = max(worst, lognum / denom)
        return worst

    nu_star, f_star = _grid_refine_min(max_ratio, 0.0, float(k))
    if not math.isfinite(f_star):
        return ThresholdResult(
            n_threshold=math.inf,
            best_ell=k,
            best_nu=nu_star,
            eta=eta,
            c0=c0,
            per_ell=(),
            numerator=numerator,
        )
    mis = [conditional_mi_bernoulli_design(channel, ell, nu_star) for ell in ells]
    rows = _ratio_rows(channel, p, k, ells, lognums, deltas, mis)
    per_ell = tuple(
        PerEllRow(ell=ell, nu=nu_star, mi=mi, delta_ell=dl, ratio=ratio)
        for ell, mi, dl, ratio in rows
    )
    best = max(per_ell, key=lambda r: r.ratio)
    return ThresholdResult(
        n_threshold=f_star * (1.0 - eta),
        best_ell=best.ell,
        best_nu=nu_star,
        eta=eta,
        c0=c0,
        per_ell=per_ell,
        numerator=numerator,
    )


def mixture_threshold(
    p: int,
    k: int,
    channel: Channel,
    eta: float,
    c0: float,
    profile: MixtureProfile,
    numerator: str = "ell_log",
) -> ThresholdResult:
    """Evaluate the auxiliary-variable threshold at a fixed mixture profile."""
    if not 1 <= k < p:
        raise DomainError(f"need 1 <= k < p, got k={k}, p={p}")
    ells = list(range(1, k + 1))
    lognums = [_log_numerator(p, k, ell, numerator) for ell in ells]
    deltas = [delta_ell(p, k, ell, c0) for ell in ells]
    mis = [
        sum(w * conditional_mi_bernoulli_design(channel, ell, nu) for w, nu in profile.atoms)
        for ell in ells
    ]
    rows = _ratio_rows(channel, p, k, ells, lognums, deltas, mis)
    mean_nu = sum(w * nu for w, nu in profile.atoms)
    per_ell = tuple(
        PerEllRow(ell=ell, nu=mean_nu, mi=mi, delta_ell=dl, ratio=ratio)
        for ell, mi, dl, ratio in rows
    )
    best = max(per_ell, key=lambda r: r.ratio)
    return ThresholdResult(
        n_threshold=best.ratio * (1.0 - eta),
        best_ell=best.ell,
        best_nu=mean_nu,
        eta=eta,
        c0=c0,
        per_ell=per_ell,
        numerator=numerator,
        profile=profile,
    )


def optimize_mixture_threshold(
    p: int,
    k: int,
    channel: Channel,
    eta: float,
    c0: float = 1.0,
    max_atoms: int = 3,
    numerator: str = "ell_log",
) -> ThresholdResult:
    """Minimize the mixture threshold over profiles with <= max_atoms atoms,
    by grid search plus local refinement.

    Single-atom candidates include the weak-converse optimum, so the result
    never exceeds weak_converse_threshold.
    """
    ells = list(range(1, k + 1))
    lognums = np.array([_log_numerator(p, k, ell, numerator) for ell in ells])
    deltas = np.array([delta_ell(p, k, ell, c0) for ell in ells])
    nu_grid = np.linspace(0.0, float(k), 33)
    mi_grid = np.array(
        [[conditional_mi_bernoulli_design(channel, ell, nu) for nu in nu_grid] for ell in ells]
    )  # (k, len(nu_grid))

    def objective(weights, nus_idx):
        mi = mi_grid[:, nus_idx] @ weights
        denom = mi + deltas
        if np.any(denom <= 0):
            return math.inf
        return float((lognums / denom).max())

    weak = weak_converse_threshold(p, k, channel, eta, c0, numerator)
    best_profile = MixtureProfile.single(weak.best_nu)
    best_value = weak.n_threshold / (1.0 - eta) if math.isfinite(weak.n_threshold) else math.inf

    if max_atoms >= 2:
        w_grid = np.linspace(0.1, 0.9, 9)
        for i in range(len(nu_grid)):
            for j in range(i + 1, len(nu_grid)):
                for w in w_grid:
                    val = objective(np.array([w, 1 - w]), [i, j])
                    if val < best_value:
                        best_value = val
                        best_profile = MixtureProfile(
                            ((float(w), float(nu_grid[i])), (1 - float(w), float(nu_grid[j])))
                        )
    if max_atoms >= 3 and len(best_profile.atoms) == 2:
        (w1, nu1), (w2, nu2) = best_profile.atoms
        for nu3 in nu_grid[:: 4]:
            for w3 in (0.1, 0.2, 0.3):
                scale = 1 - w3
                atoms = ((w1 * scale, nu1), (w2 * scale, nu2), (float(w3), float(nu3)))
                cand = mixture_threshold(p, k, channel, 0.0, c0, MixtureProfile(atoms), numerator)
                if cand.n_threshold < best_value:
                    best_value = cand.n_threshold
                    best_profile = MixtureProfile(atoms)

    # Local refinement of each atom's nu by golden-section, one pass each.
    atoms = list(best_profile.atoms)
    for idx in range(len(atoms)):
        w_fixed = atoms[idx][0]

        def f(nu):
            trial = list(atoms)
            trial[idx] = (w_fixed, nu)
            return mixture_threshold(
                p, k, channel, 0.0, c0, MixtureProfile(tuple(trial)), numerator
            ).n_threshold

        lo = max(0.0, atoms[idx][1] - float(k) / 16)
        hi = min(float(k), atoms[idx][1] + float(k) / 16)
        nu_best, val = _golden_min(f, lo, hi)
        if val < best_value:
            best_value = val
            atoms[idx] = (w_fixed, nu_best)
    best_profile = MixtureProfile(tuple(atoms))
    return mixture_threshold(p, k, channel, eta, c0, best_profile, numerator)
