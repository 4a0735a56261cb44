"""Update-function / generator-function formalism and chain-path generation.

A chain system bundles an update function phi: G x [0,1]^s -> G, a generator
function psi: [0,1]^s -> G for the initial distribution, the target measure,
and spectral metadata.  Paths are generated deterministically from a driver
sequence: x_1 = psi(u_0), x_{i+1} = phi(x_i; u_i), so every path is exactly
replayable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .core import AnchoredBox, DriverSequence, Rng, TargetMeasure

__all__ = [
    "GeneratorFunction",
    "UpdateFunction",
    "ChainSystem",
    "ChainPath",
    "ChainDomainError",
    "run_chain",
    "make_direct_kernel",
    "make_lazy_direct_kernel",
    "compare_expectation",
]


class ChainDomainError(RuntimeError):
    """An update produced a state outside the domain G."""


@dataclass(frozen=True)
class GeneratorFunction:
    """Map psi: [0,1]^{s_init} -> G pushing the uniform law to the initial
    distribution nu."""

    s_init: int
    map: Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class UpdateFunction:
    """Map phi: G x [0,1]^s -> G realizing the kernel K(x, .).

    ``inverse``, when present, maps (x, y) to a driver point u with
    phi(x; u) = y (the anywhere-to-anywhere witness).
    """

    s: int
    map: Callable[[np.ndarray, np.ndarray], np.ndarray]
    inverse: Optional[Callable[[np.ndarray, np.ndarray], np.ndarray]] = None


@dataclass
class ChainSystem:
    """Update/generator pair with target and spectral metadata.

    ``lambda0`` is max{Lambda, 0}; ``beta`` the absolute operator norm on
    mean-zero L2 (None when unknown).  ``exact_marginal(i, box)`` returns
    nu P^i(box) when the kernel admits a closed-form marginal; otherwise the
    marginal is estimated by Monte Carlo.  ``kernel_sampler(x, rng)`` draws
    one transition from K(x, .) independently of the update function.
    """

    update: UpdateFunction
    generator: GeneratorFunction
    target: TargetMeasure
    lambda0: float
    beta: Optional[float]
    nu_density_norm: float
    nu_norm_centered: float = 0.0
    exact_marginal: Optional[Callable[[int, AnchoredBox], float]] = None
    kernel_sampler: Optional[Callable[[np.ndarray, Rng], np.ndarray]] = None
    nu_measure: Optional[TargetMeasure] = None

    def __post_init__(self):
        if not (0.0 <= self.lambda0 <= 1.0):
            raise ValueError("lambda0 must lie in [0, 1]")
        if self.beta is not None and self.lambda0 > self.beta + 1e-12:
            raise ValueError("lambda0 must not exceed beta")
        if self.update.s != self.generator.s_init:
            raise ValueError("generator and update must consume the same driver dimension")

    @property
    def s(self) -> int:
        return self.update.s

    @property
    def dim(self) -> int:
        return self.target.dim


@dataclass(frozen=True)
class ChainPath:
    """States x_1 .. x_{n0+n} (shape (n0+n, d)), replayable from the driver."""

    states: np.ndarray
    burn_in: int
    driver: DriverSequence

    @property
    def retained(self) -> np.ndarray:
        return self.states[self.burn_in :]

    @property
    def n(self) -> int:
        return self.states.shape[0] - self.burn_in


def run_chain(system: ChainSystem, driver: DriverSequence, burn_in: int = 0) -> ChainPath:
    """Deterministic replay: x_1 = psi(u_0), x_{i+1} = phi(x_i; u_i).

    The path has one state per driver point; the retained sample is
    ``states[burn_in:]``.  Raises ChainDomainError if a state leaves G.
    """
    if driver.s != system.s:
        raise ValueError(f"driver dimension {driver.s} != system dimension {system.s}")
    if driver.n < burn_in + 1:
        raise ValueError("driver must contain at least burn_in + 1 points")
    d = system.dim
    states = np.empty((driver.n, d))
    x = np.atleast_1d(np.asarray(system.generator.map(driver.points[0]), float))
    if not system.target.domain.contains(x):
        raise ChainDomainError(f"initial state {x} outside domain")
    states[0] = x
    for i in range(1, driver.n):
        x = np.atleast_1d(np.asarray(system.update.map(x, driver.points[i]), float))
        if not system.target.domain.contains(x):
            raise ChainDomainError(f"state {x} left the domain at step {i}")
        states[i] = x
    states.setflags(write=False)
    return ChainPath(states=states, burn_in=burn_in, driver=driver)


# ---------------------------------------------------------------------------
# Reference kernels with known spectral data
# ---------------------------------------------------------------------------


def _centered_norm(nu_norm: float) -> float:
    # ||r - 1||_2^2 = ||r||_2^2 - 1 since E_pi(dnu/dpi) = 1.
    return math.sqrt(max(nu_norm**2 - 1.0, 0.0))


def nu_density_norm(nu: TargetMeasure, pi: TargetMeasure) -> float:
    """||dnu/dpi||_2 by quadrature (d = 1 only)."""
    if pi.dim != 1:
        raise ValueError("quadrature norm implemented for d = 1 only")
    from scipy import integrate

    lo, hi = pi.domain.bounding()
    z_nu = _normalizer(nu)
    z_pi = _normalizer(pi)

    def integrand(t):
        x = np.array([[t]])
        g_nu = float(nu.density(x)[0]) / z_nu
        g_pi = float(pi.density(x)[0]) / z_pi
        return g_nu**2 / g_pi

    val, _ = integrate.quad(integrand, lo[0], hi[0], epsabs=1e-12, limit=200)
    return math.sqrt(val)


def _normalizer(m: TargetMeasure) -> float:
    if m.exact_box_mass is None:
        return m.normalizer
    from scipy import integrate

    lo, hi = m.domain.bounding()
    val, _ = integrate.quad(
        lambda t: float(m.density(np.array([[t]]))[0]), lo[0], hi[0], epsabs=1e-12
    )
    return val


def make_direct_kernel(
    target: TargetMeasure, generator: Optional[GeneratorFunction] = None
) -> ChainSystem:
    """Kernel K(x, A) = pi(A): the update ignores the state and applies the
    pi-generator to the driver point.  Lambda0 = beta = 0 and nu = pi.

    For d = 1 the generator defaults to the inverse CDF; otherwise one must
    be supplied (e.g. the uniform-ball generator).
    """
    if generator is None:
        if target.dim != 1:
            raise ValueError("default generator available for d = 1 only")
        generator = GeneratorFunction(
            s_init=1, map=lambda u: np.array([target.inv_cdf(u[0])])
        )
    update = UpdateFunction(
        s=generator.s_init, map=lambda x, u: np.atleast_1d(generator.map(u))
    )

    def marginal(i: int, box: AnchoredBox) -> float:
        return target.box_mass(box)[0]

    def sampler(x: np.ndarray, rng: Rng) -> np.ndarray:
        return np.atleast_1d(generator.map(rng.uniforms(generator.s_init)))

    return ChainSystem(
        update=update,
        generator=generator,
        target=target,
        lambda0=0.0,
        beta=0.0,
        nu_density_norm=1.0,
        nu_norm_centered=0.0,
        exact_marginal=marginal,
        kernel_sampler=sampler,
        nu_measure=target,
    )


def make_lazy_direct_kernel(
    target: TargetMeasure, a: float, nu: Optional[TargetMeasure] = None
) -> ChainSystem:
    """Lazy direct kernel K = (1-a) * identity + a * pi on a 1-D target.

    The driver dimension is s_pi + 1 = 2: the update draws fresh from pi via
    the first coordinate when the last coordinate is < a, else stays.  The
    spectrum is known exactly (lambda0 = beta = 1 - a) and the marginal law
    nu P^i = (1-a)^i nu + (1 - (1-a)^i) pi is exposed as an exact oracle.
    """
    if not (0.0 < a <= 1.0):
        raise ValueError("hold-probability complement a must lie in (0, 1]")
    if target.dim != 1:
        raise ValueError("lazy direct kernel implemented for d = 1")
    nu = nu if nu is not None else target

    generator = GeneratorFunction(s_init=2, map=lambda u: np.array([nu.inv_cdf(u[0])]))

    def update_map(x, u):
        if u[-1] < a:
            return np.array([target.inv_cdf(u[0])])
        return x

    update = UpdateFunction(s=2, map=update_map)

    def marginal(i: int, box: AnchoredBox) -> float:
        w = (1.0 - a) ** i
        return w * nu.box_mass(box)[0] + (1.0 - w) * target.box_mass(box)[0]

    def sampler(x: np.ndarray, rng: Rng) -> np.ndarray:
        if rng.uniform() < a:
            return np.array([target.inv_cdf(rng.uniform())])
        return x

    if nu is target:
        norm, cnorm = 1.0, 0.0
    else:
        norm = nu_density_norm(nu, target)
        cnorm = _centered_norm(norm)

    return ChainSystem(
        update=update,
        generator=generator,
        target=target,
        lambda0=1.0 - a,
        beta=1.0 - a,
        nu_density_norm=norm,
        nu_norm_centered=cnorm,
        exact_marginal=marginal,
        kernel_sampler=sampler,
        nu_measure=nu,
    )


# ---------------------------------------------------------------------------
# Expectation comparison (update-function route vs kernel route)
# ---------------------------------------------------------------------------


def compare_expectation(
    system: ChainSystem,
    F: Callable[[list[np.ndarray]], float],
    i: int,
    m: int,
    rng: Rng,
) -> tuple[float, float, float]:
    """Two Monte Carlo estimates of E_{nu,K} F(X_1, ..., X_i).

    One pushes i*s uniforms through (psi, phi); the other draws X_1 from nu
    via psi and transitions via the kernel's reference sampler.  Returns
    (estimate_via_driver, estimate_via_kernel, pooled_stderr).
    """
    if system.kernel_sampler is None:
        raise ValueError("system has no kernel_sampler")
    s = system.s
    rng_a = rng.split(0)
    rng_b = rng.split(1)
    vals_a = np.empty(m)
    vals_b = np.empty(m)
    for r in range(m):
        us = rng_a.uniforms(i * s).reshape(i, s)
        x = np.atleast_1d(system.generator.map(us[0]))
        states = [x]
        for k in range(1, i):
            x = np.atleast_1d(system.update.map(x, us[k]))
            states.append(x)
        vals_a[r] = F(states)

        y = np.atleast_1d(system.generator.map(rng_b.uniforms(s)))
        states_b = [y]
        for _ in range(1, i):
            y = np.atleast_1d(system.kernel_sampler(y, rng_b))
            states_b.append(y)
        vals_b[r] = F(states_b)
    stderr = math.sqrt((np.var(vals_a, ddof=1) + np.var(vals_b, ddof=1)) / m)
    return float(np.mean(vals_a)), float(np.mean(vals_b)), stderr
