"""Network planning: invert the link model and optimise ring geometry and densities.

``maximize_range`` bisects on the connection-reliability budget T_H1 to stretch the
SF rings while keeping at least ``n_min`` nodes; ``maximize_nodes`` fixes the outer
ring at ``r_min`` and returns the largest node population meeting the target.
"""
from dataclasses import dataclass, field
import logging
import math

import numpy as np

from .errors import DomainError, NumericError
from .model import (
    N_RINGS,
    ExternalNetwork,
    NetworkGeometry,
    SpatialConfig,
    capture_external,
    coverage_prob,
    duty_from_period,
    path_gain,
)
from .specfun import ring_integral

log = logging.getLogger(__name__)

CONVERGED = 1
INFEASIBLE = -1
MAX_CONDITION = 1e12


@dataclass(frozen=True)
class PlanRequest:
    """Inputs of both planning algorithms.

    Give either ``message_period_s`` or an explicit ``duty`` vector, and
    ``n_min`` (range maximisation) or ``r_min`` (node maximisation).
    ``alpha_z`` is the external intensity; during planning the external disc
    radius follows the current coverage radius.
    """
    target: float
    message_period_s: float = None
    duty: tuple = None
    n_min: float = None
    r_min: float = None
    alpha_z: float = 0.0
    chi: float = 1.0
    epsilon: float = 1e-9
    external_duty: float = 1e-3

    def __post_init__(self):
        if not 0 < self.target < 1:
            raise DomainError(f"target reliability must lie in (0, 1), got {self.target!r}")
        if (self.message_period_s is None) == (self.duty is None):
            raise DomainError("give exactly one of message_period_s or duty")
        if self.n_min is not None and self.n_min < 0:
            raise DomainError(f"n_min must be >= 0, got {self.n_min!r}")
        if self.r_min is not None and not self.r_min > 0:
            raise DomainError(f"r_min must be > 0, got {self.r_min!r}")
        if not self.chi > 0 or not self.epsilon > 0:
            raise DomainError("chi and epsilon must be positive")
        if not self.alpha_z >= 0:
            raise DomainError(f"alpha_z must be >= 0, got {self.alpha_z!r}")

    def duty_cycles(self):
        if self.duty is not None:
            p = np.asarray(self.duty, float)
            if p.shape != (N_RINGS,) or ((p <= 0) | (p > 1)).any():
                raise DomainError(f"duty must be {N_RINGS} values in (0, 1]")
            return p
        return duty_from_period(self.message_period_s)

    def external(self, radius):
        return ExternalNetwork.from_intensity(self.alpha_z, radius, self.external_duty)


@dataclass
class DensitySystem:
    Y: np.ndarray
    B: np.ndarray
    t_h1: float
    edge_z: np.ndarray
    budget_violations: list = field(default_factory=list)
    A: np.ndarray = None


@dataclass
class PlanResult:
    result: int
    geometry: NetworkGeometry
    alpha: np.ndarray
    duty: np.ndarray
    t_h1: float
    iterations: int
    edge_reliability: np.ndarray
    history: list = field(default_factory=list)

    @property
    def converged(self):
        return self.result == CONVERGED

    @property
    def density(self):
        return self.alpha / self.duty

    @property
    def ring_counts(self):
        return self.density * self.geometry.areas

    @property
    def total(self):
        return float(self.ring_counts.sum())

    @property
    def radius(self):
        return self.geometry.radius


def invert_connection(t_h1, radio, thresholds):
    """Ring limits such that H1 equals ``t_h1`` on every ring's outer edge."""
    if not 0 < t_h1 < 1:
        raise DomainError(f"T_H1 must lie in (0, 1), got {t_h1!r}")
    ratio = -radio.pt_mw * math.log(t_h1) / (radio.noise_mw * thresholds.psi)
    outer = radio.wavelength / (4.0 * math.pi) * ratio ** (1.0 / radio.eta)
    return NetworkGeometry(outer)


def connection_threshold(r, radio, thresholds, ring=N_RINGS):
    """T_H1 that places the outer edge of ``ring`` at distance ``r``."""
    psi = thresholds.psi[ring - 1]
    return math.exp(-radio.noise_mw * psi / (radio.pt_mw * path_gain(r, radio)))


def build_density_system(geometry, t_h1, target, thresholds, radio, external):
    """Assemble Y and B for the density equations Y A = B.

    ``external`` is evaluated as given (callers bind its radius).  Rings whose
    external-interference budget is already exhausted (target > t_h1 * Z1) are
    listed in ``budget_violations``; B then has negative entries.
    """
    lim = geometry.limits
    Y = np.zeros((N_RINGS, N_RINGS))
    B = np.zeros(N_RINGS)
    edge_z = np.ones(N_RINGS)
    for i in range(1, N_RINGS + 1):
        li = lim[i]
        for j in range(1, N_RINGS + 1):
            gamma = thresholds.delta[i - 1, j - 1]
            if gamma > 0 and lim[j] > lim[j - 1]:
                Y[i - 1, j - 1] = ring_integral(li, gamma, lim[j - 1], lim[j], radio.eta)
        edge_z[i - 1] = capture_external(li, i, external, thresholds, radio)
        B[i - 1] = -math.log(target / (t_h1 * edge_z[i - 1])) / (2.0 * math.pi)
    violations = [i for i in range(1, N_RINGS + 1) if target > t_h1 * edge_z[i - 1]]
    if violations:
        log.debug("external interference exhausts the reliability budget in rings %s", violations)
    return DensitySystem(Y, B, t_h1, edge_z, violations)


def solve_densities(system):
    """Solve Y A = B (LU with partial pivoting); stores and returns A."""
    Y, B = system.Y, system.B
    if not np.any(B):
        system.A = np.zeros_like(B)
        return system.A
    cond = np.linalg.cond(Y, 1)
    if not np.isfinite(cond) or cond > MAX_CONDITION:
        raise NumericError(f"density system is singular or ill-conditioned (cond={cond:.3g})")
    A = np.linalg.solve(Y, B)
    resid = np.max(np.abs(Y @ A - B))
    if resid > 1e-9 * np.max(np.abs(B)):
        raise NumericError(f"density solve residual {resid:.3g} too large")
    system.A = A
    return A


def total_nodes(alpha, duty, geometry):
    """Mean node count sum_i (alpha_i / p_i) V_i."""
    duty = np.asarray(duty, float)
    if (duty <= 0).any():
        raise DomainError("duty cycles must be positive")
    return float(np.sum(np.asarray(alpha, float) / duty * geometry.areas))


def edge_reliability(geometry, alpha, duty, external, thresholds, radio):
    spatial = SpatialConfig.from_intensities(np.maximum(alpha, 0.0), duty)
    return np.array([
        coverage_prob(geometry.limits[i], i, geometry, spatial, external, thresholds, radio)
        if geometry.limits[i] > 0 else 1.0
        for i in range(1, N_RINGS + 1)
    ])


def _evaluate(t_h1, req, duty, thresholds, radio, geometry=None):
    if geometry is None:
        geometry = invert_connection(t_h1, radio, thresholds)
    external = req.external(geometry.radius)
    system = build_density_system(geometry, t_h1, req.target, thresholds, radio, external)
    A = solve_densities(system)
    return geometry, external, A, total_nodes(A, duty, geometry)


def maximize_range(req, radio, thresholds):
    """Bisection on T_H1 in (target, 1) maximising the coverage radius."""
    if req.n_min is None:
        raise DomainError("maximize_range needs n_min")
    duty = req.duty_cycles()
    hi, lo = 1.0, req.target
    radius = 0.0
    history = []
    result = 0
    while result == 0:
        t_h1 = 0.5 * (hi + lo)
        geometry, external, A, n = _evaluate(t_h1, req, duty, thresholds, radio)
        last, radius = radius, geometry.radius
        feasible = bool((A >= 0).all())
        history.append({"iteration": len(history) + 1, "t_h1": t_h1, "R_m": radius,
                        "N_total": n, "feasible": feasible, "window": hi - lo})
        if abs(radius - last) < req.chi and feasible:
            if n < req.n_min:
                if hi - lo < req.epsilon:
                    result = INFEASIBLE
            else:
                result = CONVERGED
        if result == 0:
            if feasible and n >= req.n_min:
                hi = t_h1
            else:
                lo = t_h1
            # negative densities near a collapsed window would otherwise loop forever
            if hi - lo < req.epsilon and not feasible:
                result = INFEASIBLE
    edges = edge_reliability(geometry, A, duty, external, thresholds, radio)
    return PlanResult(result, geometry, A, duty, t_h1, len(history), edges, history)


def maximize_nodes(req, radio, thresholds):
    """Largest node population with the outermost ring edge at r_min."""
    if req.r_min is None:
        raise DomainError("maximize_nodes needs r_min")
    duty = req.duty_cycles()
    t_h1 = connection_threshold(req.r_min, radio, thresholds)
    outer = invert_connection(t_h1, radio, thresholds).outer.copy()
    outer[-1] = req.r_min
    geometry = NetworkGeometry(outer)
    geometry, external, A, n = _evaluate(t_h1, req, duty, thresholds, radio, geometry)
    result = CONVERGED if (A >= 0).all() else INFEASIBLE
    edges = edge_reliability(geometry, A, duty, external, thresholds, radio)
    history = [{"iteration": 1, "t_h1": t_h1, "R_m": geometry.radius, "N_total": n,
                "feasible": result == CONVERGED, "window": 0.0}]
    return PlanResult(result, geometry, A, duty, t_h1, 1, edges, history)
