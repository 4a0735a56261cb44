"""Metropolis algorithm with ball-walk proposal on the Euclidean unit ball.

The proposal draws z uniformly from a gamma-ball via an explicit generator
(sphere direction from the leading driver coordinates, radius from the last
proposal coordinate) and accepts with the usual density ratio, evaluated in
log space.  For gamma >= 2 the update is invertible anywhere-to-anywhere,
which is what the driver-construction pipeline exploits.

Dimension conventions: for d >= 2 the proposal consumes d coordinates
(d - 1 sphere + 1 radius) and the update d + 1 (plus acceptance).  For d = 1
the sphere S^0 = {-1, +1} needs its own sign coordinate, so the proposal
consumes 2 coordinates and the update 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from .bounds import ballwalk_gap_bound
from .chain import ChainSystem, GeneratorFunction, UpdateFunction
from .core import Rng, TargetMeasure, exp_linear_ball, uniform_ball

__all__ = [
    "LogDensity",
    "BallWalkParams",
    "sphere_generator",
    "ball_generator",
    "metropolis_update",
    "invert_update",
    "density_presets",
    "make_metropolis_system",
]


@dataclass(frozen=True)
class LogDensity:
    """Log of an unnormalized density on the unit ball, with a certified
    log-Lipschitz constant alpha and a log-concavity witness tag."""

    log_rho: Callable[[np.ndarray], float]
    alpha: float
    concavity_witness: str  # affine | verified-numerically | asserted

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.concavity_witness not in ("affine", "verified-numerically", "asserted"):
            raise ValueError(f"unknown witness {self.concavity_witness!r}")

    def audit(self, d: int, rng: Rng, pairs: int = 10_000, tol: float = 1e-9) -> None:
        """Randomized membership audit: log-Lipschitz bound and midpoint
        log-concavity on sampled pairs of ball points.  Raises on violation."""
        for _ in range(pairs):
            x = _random_ball_point(d, rng)
            y = _random_ball_point(d, rng)
            lx, ly = self.log_rho(x), self.log_rho(y)
            if abs(lx - ly) > self.alpha * np.linalg.norm(x - y) + tol:
                raise AssertionError(f"log-Lipschitz violation at {x}, {y}")
            if self.log_rho(0.5 * (x + y)) < 0.5 * (lx + ly) - tol:
                raise AssertionError(f"log-concavity violation at {x}, {y}")


def _random_ball_point(d: int, rng: Rng) -> np.ndarray:
    while True:
        x = 2.0 * rng.uniforms(d) - 1.0
        if np.dot(x, x) <= 1.0:
            return x


@dataclass(frozen=True)
class BallWalkParams:
    """Proposal radius gamma and state dimension d."""

    gamma: float
    d: int

    def __post_init__(self):
        if self.gamma <= 0 or self.d < 1:
            raise ValueError("need gamma > 0 and d >= 1")

    @property
    def proposal_dim(self) -> int:
        return self.d if self.d >= 2 else 2

    @property
    def driver_dim(self) -> int:
        return self.proposal_dim + 1


# ---------------------------------------------------------------------------
# Generators
# ---------------------------------------------------------------------------


def _sin_power_quantile(p: float, m: int) -> float:
    """theta in [0, pi] with int_0^theta sin^m / int_0^pi sin^m = p, by
    bisection to 1e-12."""
    total, _ = integrate.quad(lambda t: math.sin(t) ** m, 0.0, math.pi, epsabs=1e-14)
    a, b = 0.0, math.pi
    while b - a > 1e-12:
        mid = 0.5 * (a + b)
        val, _ = integrate.quad(lambda t: math.sin(t) ** m, 0.0, mid, epsabs=1e-14)
        if val / total < p:
            a = mid
        else:
            b = mid
    return 0.5 * (a + b)


def sphere_generator(v, d: int) -> np.ndarray:
    """Uniform point on the unit sphere S^{d-1} from d-1 driver coordinates
    (one coordinate, sign threshold 1/2, for d = 1)."""
    v = np.atleast_1d(np.asarray(v, float))
    if d == 1:
        return np.array([-1.0 if v[0] < 0.5 else 1.0])
    if len(v) != d - 1:
        raise ValueError(f"need {d - 1} coordinates for d = {d}")
    if d == 2:
        ang = 2.0 * math.pi * v[0]
        return np.array([math.cos(ang), math.sin(ang)])
    if d == 3:
        z = 1.0 - 2.0 * v[0]
        ang = 2.0 * math.pi * v[1]
        r = math.sqrt(max(1.0 - z * z, 0.0))
        return np.array([r * math.cos(ang), r * math.sin(ang), z])
    # general d: spherical angles theta_j with density prop. to sin^{d-1-j},
    # last angle uniform on [0, 2 pi)
    angles = [_sin_power_quantile(v[j], d - 2 - j) for j in range(d - 2)]
    angles.append(2.0 * math.pi * v[d - 2])
    x = np.empty(d)
    sin_prod = 1.0
    for j in range(d - 1):
        x[j] = sin_prod * math.cos(angles[j])
        sin_prod *= math.sin(angles[j])
    x[d - 1] = sin_prod
    return x


def ball_generator(v, gamma: float, d: int) -> np.ndarray:
    """Uniform point in the closed gamma-ball: direction from the leading
    coordinates, radius gamma * v_last^{1/d}."""
    v = np.atleast_1d(np.asarray(v, float))
    radius = gamma * v[-1] ** (1.0 / d)
    return radius * sphere_generator(v[:-1], d)


# ---------------------------------------------------------------------------
# Update function and its inverse
# ---------------------------------------------------------------------------


def metropolis_update(
    x: np.ndarray, u, params: BallWalkParams, density: LogDensity
) -> np.ndarray:
    """One Metropolis step: propose x + z with z uniform in the gamma-ball;
    accept iff the proposal stays in the unit ball and the last driver
    coordinate clears the density ratio.  Rejection returns x unchanged."""
    x = np.asarray(x, float)
    u = np.atleast_1d(np.asarray(u, float))
    if len(u) != params.driver_dim:
        raise ValueError(f"need {params.driver_dim} driver coordinates")
    z = ball_generator(u[: params.proposal_dim], params.gamma, params.d)
    y = x + z
    if np.dot(y, y) > 1.0:
        return x
    log_ratio = density.log_rho(y) - density.log_rho(x)
    v = u[-1]
    if log_ratio >= 0.0 or v <= math.exp(log_ratio):
        return y
    return x


def _sphere_inverse(e: np.ndarray, d: int) -> np.ndarray:
    if d == 1:
        return np.array([0.25 if e[0] < 0 else 0.75])
    if d == 2:
        ang = math.atan2(e[1], e[0]) % (2.0 * math.pi)
        return np.array([ang / (2.0 * math.pi)])
    if d == 3:
        ang = math.atan2(e[1], e[0]) % (2.0 * math.pi)
        return np.array([(1.0 - e[2]) / 2.0, ang / (2.0 * math.pi)])
    raise NotImplementedError("sphere inverse implemented for d <= 3 only")


def invert_update(
    x: np.ndarray, y: np.ndarray, params: BallWalkParams, density: LogDensity
) -> np.ndarray:
    """Driver point u with metropolis_update(x, u) = y, for gamma >= 2.

    For y != x the proposal is forced to z = y - x with acceptance coordinate
    0 (always accepted since rho > 0).  For y = x the returned u proposes a
    point outside the unit ball, forcing the stay branch.
    """
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    d = params.d
    if d > 3:
        raise NotImplementedError("update inversion implemented for d <= 3 only")
    z = y - x
    r = float(np.linalg.norm(z))
    if r > params.gamma:
        raise ValueError(f"target at distance {r} exceeds proposal radius {params.gamma}")
    if r > 0.0:
        v_dir = _sphere_inverse(z / r, d)
        v_rad = (r / params.gamma) ** d
        return np.concatenate([v_dir, [v_rad, 0.0]])
    # stay branch: exiting proposal along x (any direction when x = 0)
    nx = float(np.linalg.norm(x))
    e = x / nx if nx > 0 else np.eye(d)[0]
    r_out = 0.5 * ((1.0 - nx) + params.gamma)
    v_dir = _sphere_inverse(e, d)
    v_rad = min((r_out / params.gamma) ** d, 1.0)
    return np.concatenate([v_dir, [v_rad, 1.0]])


# ---------------------------------------------------------------------------
# Density presets and chain assembly
# ---------------------------------------------------------------------------


def density_presets(name: str, alpha: float, d: int) -> LogDensity:
    """uniform: log rho = 0; exp-linear: log rho(x) = alpha * x_1."""
    if name == "uniform":
        return LogDensity(log_rho=lambda x: 0.0, alpha=0.0, concavity_witness="affine")
    if name == "exp-linear":
        return LogDensity(
            log_rho=lambda x: alpha * float(np.atleast_1d(x)[0]),
            alpha=alpha,
            concavity_witness="affine",
        )
    raise ValueError(f"unknown density preset {name!r}")


def _target_for(name: str, alpha: float, d: int) -> TargetMeasure:
    if name == "uniform":
        return uniform_ball(d)
    return exp_linear_ball(alpha, d)


def make_metropolis_system(
    name: str, alpha: float, gamma: float, d: int
) -> ChainSystem:
    """Chain system for the Metropolis ball walk, started from the uniform
    distribution on the unit ball.

    ||dnu/dpi||_2 <= e^alpha is used as the density-norm certificate.  The
    spectral-gap lower bound applies at the optimal radius gamma*; for any
    other radius (notably the inversion regime gamma = 2) lambda0 is left at
    the uninformative value 0 and the theory calculators must not be fed
    from this system.
    """
    density = density_presets(name, alpha, d)
    target = _target_for(name, alpha, d)
    params = BallWalkParams(gamma=gamma, d=d)

    generator = GeneratorFunction(
        s_init=params.driver_dim,
        map=lambda u: ball_generator(u[: params.proposal_dim], 1.0, d),
    )
    update = UpdateFunction(
        s=params.driver_dim,
        map=lambda x, u: metropolis_update(x, u, params, density),
        inverse=lambda x, y: invert_update(x, y, params, density),
    )

    def sampler(x: np.ndarray, rng: Rng) -> np.ndarray:
        # independent route: rejection-sample z uniform in the gamma-ball
        while True:
            z = params.gamma * (2.0 * rng.uniforms(d) - 1.0)
            if np.dot(z, z) <= params.gamma**2:
                break
        y = x + z
        if np.dot(y, y) > 1.0:
            return x
        log_ratio = density.log_rho(y) - density.log_rho(x)
        if log_ratio >= 0.0 or rng.uniform() <= math.exp(log_ratio):
            return y
        return x

    gamma_star, gap = ballwalk_gap_bound(max(alpha, 1e-300), d) if alpha > 0 else (
        1.0 / math.sqrt(d + 1),
        3.125e-6 / (d + 1) ** 2,
    )
    lambda0 = 1.0 - gap if abs(gamma - gamma_star) <= 1e-12 else 0.0

    norm = math.exp(density.alpha)
    return ChainSystem(
        update=update,
        generator=generator,
        target=target,
        lambda0=lambda0,
        beta=None,
        nu_density_norm=norm,
        nu_norm_centered=math.sqrt(max(norm**2 - 1.0, 0.0)),
        exact_marginal=None,
        kernel_sampler=sampler,
        nu_measure=uniform_ball(d),
    )
