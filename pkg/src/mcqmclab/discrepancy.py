"""Star discrepancy over anchored boxes, delta-covers, pull-back discrepancy
and the weighted (H1) Koksma-Hlawka machinery.

Boxes are strictly open, so the supremum over corners is approached from
above at data coordinates; the exact scan evaluates both the
"point counted" and "point not counted" branch at every critical coordinate
instead of nudging by an epsilon.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .chain import ChainSystem, run_chain
from .core import AnchoredBox, DriverSequence, Rng, TargetMeasure

__all__ = [
    "DiscrepancyReport",
    "DeltaCover",
    "H1Function",
    "ExactScanInfeasible",
    "CoverConstructionError",
    "star_discrepancy_exact",
    "star_discrepancy_bracket",
    "build_quantile_cover",
    "cover_size_bound",
    "pullback_discrepancy_mc",
    "kh_error_bound",
]


class ExactScanInfeasible(RuntimeError):
    """Exact scan requested for d > 3; use the cover-bracket method."""


class CoverConstructionError(RuntimeError):
    def __init__(self, message: str, achieved_delta: float):
        super().__init__(message)
        self.achieved_delta = achieved_delta


@dataclass(frozen=True)
class DiscrepancyReport:
    """Lower/upper bracket of a discrepancy plus method metadata."""

    lower: float
    upper: float
    method: str  # exact-scan | cover-bracket | pullback-mc
    delta_used: float = 0.0
    mc_stderr: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.lower <= self.upper <= 1.0 + 1e-12):
            raise ValueError(f"invalid bracket [{self.lower}, {self.upper}]")


def _as_points(points, d: int) -> np.ndarray:
    pts = np.asarray(points, float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if pts.ndim != 2 or pts.shape[1] != d:
        raise ValueError(f"points must have shape (n, {d})")
    return pts


# ---------------------------------------------------------------------------
# Exact scan
# ---------------------------------------------------------------------------


def star_discrepancy_exact(points, measure: TargetMeasure) -> DiscrepancyReport:
    """Exact star discrepancy over open anchored boxes, d <= 3.

    The supremum is attained on the critical grid: per coordinate the sorted
    point coordinates, each evaluated with the point excluded (strict box at
    the coordinate) and included (limit from above), plus the domain upper
    extreme.
    """
    d = measure.dim
    if d > 3:
        raise ExactScanInfeasible(
            "exact scan is limited to d <= 3; use star_discrepancy_bracket"
        )
    pts = _as_points(points, d)
    n = pts.shape[0]

    if d == 1 and measure.exact_cdf is not None:
        x = np.sort(pts[:, 0])
        vals, first, counts = np.unique(x, return_index=True, return_counts=True)
        lt = first.astype(float)
        le = (first + counts).astype(float)
        mass = np.asarray(measure.cdf(vals), float)
        disc = max(
            float(np.max(np.abs(lt / n - mass))),
            float(np.max(np.abs(le / n - mass))),
        )
        return DiscrepancyReport(lower=disc, upper=disc, method="exact-scan")

    # generic grid scan (mass via box-mass oracle; boundary has measure 0)
    axes = []
    for j in range(d):
        vals = np.unique(pts[:, j])
        cands = [(v, True) for v in vals] + [(v, False) for v in vals]
        cands.append((np.inf, True))
        axes.append(cands)
    best = 0.0
    max_err = 0.0
    for combo in itertools.product(*axes):
        corner = np.array([c[0] for c in combo])
        strict = np.array([c[1] for c in combo])
        inside = np.ones(n, bool)
        for j in range(d):
            if strict[j]:
                inside &= pts[:, j] < corner[j]
            else:
                inside &= pts[:, j] <= corner[j]
        mass, err = measure.box_mass(AnchoredBox(corner))
        best = max(best, abs(inside.mean() - mass))
        max_err = max(max_err, err)
    return DiscrepancyReport(
        lower=max(best - max_err, 0.0),
        upper=min(best + max_err, 1.0),
        method="exact-scan",
    )


# ---------------------------------------------------------------------------
# Delta-covers
# ---------------------------------------------------------------------------


@dataclass
class DeltaCover:
    """Finite bracketing family for anchored boxes.

    ``sets`` always contains the empty box and the full-domain box;
    :meth:`bracket` maps any anchored box A to (C, D) in the family with
    C ⊆ A ⊆ D and pi(D \\ C) <= delta (+ quadrature error).
    """

    delta: float
    measure: TargetMeasure
    cuts: tuple  # per-coordinate sorted cut arrays
    sets: list = field(default_factory=list)
    _corners: Optional[np.ndarray] = None
    _masses: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return len(self.sets)

    def bracket(self, box: AnchoredBox) -> tuple[AnchoredBox, AnchoredBox]:
        d = self.measure.dim
        if box.is_empty:
            e = AnchoredBox.empty(d)
            return e, e
        c_lo = np.empty(d)
        c_hi = np.empty(d)
        for j in range(d):
            a = box.corner[j]
            cuts = self.cuts[j]
            if a == np.inf:
                c_lo[j] = c_hi[j] = np.inf
                continue
            idx = int(np.searchsorted(cuts, a, side="right"))
            c_lo[j] = cuts[idx - 1] if idx > 0 else -np.inf
            c_hi[j] = cuts[idx] if idx < len(cuts) else np.inf
        if np.any(c_lo == -np.inf):
            inner = AnchoredBox.empty(d)
        else:
            inner = AnchoredBox(c_lo)
        return inner, AnchoredBox(c_hi)

    def mass(self, box: AnchoredBox) -> tuple[float, float]:
        return self.measure.box_mass(box)

    def corners(self) -> np.ndarray:
        """All member corners as one (size, d) array (empty box = all -inf)."""
        if self._corners is None:
            self._corners = np.array([b.corner for b in self.sets])
        return self._corners

    def masses(self) -> tuple[np.ndarray, float]:
        """Masses of every member, plus the max quadrature error."""
        if self._masses is None:
            vals = np.empty(self.size)
            err = 0.0
            for i, b in enumerate(self.sets):
                m, e = self.measure.box_mass(b) if not b.is_empty else (0.0, 0.0)
                vals[i] = m
                err = max(err, e)
            self._masses = vals
            self._mass_err = err
        return self._masses, self._mass_err


def build_quantile_cover(measure: TargetMeasure, delta: float) -> DeltaCover:
    """Delta-cover from per-coordinate marginal quantile cuts.

    Coordinate j gets m = ceil(d/delta) slabs of marginal mass <= delta/d;
    bracketing each corner coordinate to adjacent cuts then gives
    pi(D \\ C) <= delta.
    """
    if not (0.0 < delta <= 1.0):
        raise ValueError("delta must lie in (0, 1]")
    d = measure.dim
    m = math.ceil(d / delta)
    cuts = []
    for j in range(d):
        cj = np.array([measure.marginal_quantile(j, k / m) for k in range(1, m)])
        cuts.append(cj)
        # Audit the slab masses; the construction can only fail for
        # pathological marginals, but we never report a cover silently.
        levels = np.array(
            [0.0] + [measure.marginal_cdf(j, c) for c in cj] + [1.0]
        )
        worst = float(np.max(np.diff(levels)))
        if worst > delta / d + 1e-8:
            raise CoverConstructionError(
                f"coordinate {j}: finest achieved slab mass {worst:.3e}",
                achieved_delta=worst * d,
            )
    axis_vals = [np.append(cj, np.inf) for cj in cuts]
    sets = [AnchoredBox(np.array(c)) for c in itertools.product(*axis_vals)]
    sets.append(AnchoredBox.empty(d))
    return DeltaCover(delta=delta, measure=measure, cuts=tuple(cuts), sets=sets)


def cover_size_bound(delta: float, d: int, epsilon: float) -> int:
    """Theoretical delta-cover size bound
    ``(2 + ceil((2 C_{eps,d} / delta)^{1/(1-eps)}))^d`` with
    ``C_{eps,d} = 4^eps ((3d+1) / (2 e eps log 2))^{(3d+1)/2}``."""
    if not (0.0 < delta <= 1.0) or not (0.0 < epsilon < 1.0):
        raise ValueError("need 0 < delta <= 1 and 0 < epsilon < 1")
    c_eps = 4.0**epsilon * ((3 * d + 1) / (2 * math.e * epsilon * math.log(2.0))) ** (
        (3 * d + 1) / 2
    )
    inner = (2.0 * c_eps / delta) ** (1.0 / (1.0 - epsilon))
    return int(2 + math.ceil(inner)) ** d


# ---------------------------------------------------------------------------
# Cover-bracket discrepancy
# ---------------------------------------------------------------------------


def star_discrepancy_bracket(
    points, measure: TargetMeasure, cover: DeltaCover
) -> DiscrepancyReport:
    """Bracket of the star discrepancy: the max over cover members is a
    lower bound, and adding delta gives an upper bound."""
    pts = _as_points(points, measure.dim)
    corners = cover.corners()
    masses, mass_err = cover.masses()
    emp = np.all(pts[None, :, :] < corners[:, None, :], axis=2).mean(axis=1)
    lower = float(np.max(np.abs(emp - masses)))
    upper = min(lower + cover.delta + mass_err, 1.0)
    return DiscrepancyReport(
        lower=lower, upper=upper, method="cover-bracket", delta_used=cover.delta
    )


# ---------------------------------------------------------------------------
# Pull-back discrepancy
# ---------------------------------------------------------------------------


def pullback_discrepancy_mc(
    system: ChainSystem,
    driver: DriverSequence,
    burn_in: int,
    cover: DeltaCover,
    m: int,
    rng: Rng,
) -> DiscrepancyReport:
    """Pull-back discrepancy of the driver sequence over the cover sets.

    For each cover set A the indicator term is evaluated exactly by replaying
    the driver prefix (membership of the prefix in the pulled-back set is
    equivalent to x_{i+1} in A), while the volume term equals the chain
    marginal nu P^i(A): taken from the system's exact-marginal oracle when
    available (mc_stderr = 0), otherwise estimated from m independent random
    chains.
    """
    n = driver.n - burn_in
    if n < 1:
        raise ValueError("driver shorter than burn-in")
    path = run_chain(system, driver, burn_in=burn_in)
    corners = cover.corners()
    # indicator averages over the retained window, per cover set
    ind = np.all(path.retained[None, :, :] < corners[:, None, :], axis=2).mean(axis=1)

    if system.exact_marginal is not None:
        vol = np.empty(cover.size)
        for k, box in enumerate(cover.sets):
            vol[k] = (
                0.0
                if box.is_empty
                else np.mean([system.exact_marginal(i, box) for i in range(burn_in, burn_in + n)])
            )
        stderr = 0.0
    else:
        if m < 100:
            raise ValueError("need at least 100 replications without a marginal oracle")
        acc = np.empty((m, cover.size))
        for r in range(m):
            rep_rng = rng.split(r)
            rep_driver = DriverSequence(
                rep_rng.uniforms(driver.n * system.s).reshape(driver.n, system.s),
                provenance="pullback-mc-replication",
            )
            rep_path = run_chain(system, rep_driver, burn_in=burn_in)
            acc[r] = np.all(
                rep_path.retained[None, :, :] < corners[:, None, :], axis=2
            ).mean(axis=1)
        vol = acc.mean(axis=0)
        stderr = float(np.max(acc.std(axis=0, ddof=1) / math.sqrt(m)))

    lower = float(np.max(np.abs(ind - vol)))
    upper = min(lower + cover.delta + stderr, 1.0)
    return DiscrepancyReport(
        lower=lower,
        upper=upper,
        method="pullback-mc",
        delta_used=cover.delta,
        mc_stderr=stderr,
    )


# ---------------------------------------------------------------------------
# H1 functions and the Koksma-Hlawka inequality
# ---------------------------------------------------------------------------


class H1Function:
    """f(x) = f0 + sum_j w_j 1_{(-inf, z_j)}(x): a constant plus finitely
    many open-box indicators; ||f||_H1 = |f0| + sum_j |w_j|."""

    def __init__(self, f0: float, atoms: Sequence[tuple[Sequence[float], float]]):
        self.f0 = float(f0)
        if atoms:
            self.corners = np.array([np.asarray(z, float) for z, _ in atoms])
        else:
            self.corners = np.empty((0, 1))
        self.weights = np.array([w for _, w in atoms], float)

    @property
    def norm(self) -> float:
        return abs(self.f0) + float(np.sum(np.abs(self.weights)))

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, float))
        if len(self.weights) == 0:
            return np.full(pts.shape[0], self.f0)
        inside = np.all(pts[None, :, :] < self.corners[:, None, :], axis=2)
        return self.f0 + self.weights @ inside

    def expectation(self, measure: TargetMeasure) -> tuple[float, float]:
        """E_pi f = f0 + sum_j w_j pi(box_j), with accumulated error bound."""
        val = self.f0
        err = 0.0
        for corner, w in zip(self.corners, self.weights):
            mass, e = measure.box_mass(AnchoredBox(corner))
            val += w * mass
            err += abs(w) * e
        return val, err


def kh_error_bound(
    f: H1Function, points, measure: TargetMeasure
) -> tuple[float, float]:
    """Exact integration error of f against the sample mean, and the
    Koksma-Hlawka bound ``||f||_H1 * D*_upper``.

    Raises if the exact error exceeds the bound beyond quadrature slack.
    """
    pts = _as_points(points, measure.dim)
    expect, quad_err = f.expectation(measure)
    sample = float(np.mean(f(pts)))
    exact_error = abs(expect - sample)
    report = star_discrepancy_exact(pts, measure)
    bound = f.norm * report.upper
    if exact_error > bound + quad_err + 1e-12:
        raise AssertionError(
            f"Koksma-Hlawka violation: error {exact_error} > bound {bound}"
        )
    return exact_error, bound
