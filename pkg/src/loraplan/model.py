"""Analytic LoRaWAN link model: path gain, noise and the H1/Q1/Z1/C1 probabilities.

Everything in here works in linear units (mW, linear gains and thresholds);
dB values only appear in the configuration dataclasses.
"""
from dataclasses import dataclass, field, replace
import math

import numpy as np

from .errors import DomainError
from .specfun import ring_integral

N_RINGS = 6
SPEED_OF_LIGHT = 3e8


def db_to_linear(x_db):
    """10^(x/10), elementwise; -inf maps to 0."""
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def dbm_to_mw(x_dbm):
    return db_to_linear(x_dbm)


@dataclass(frozen=True)
class RadioParams:
    pt_dbm: float = 14.0
    noise_figure_db: float = 6.0
    bandwidth_hz: float = 125e3
    freq_hz: float = 868e6
    eta: float = 2.75
    speed_of_light: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.bandwidth_hz > 0:
            raise DomainError(f"bandwidth must be positive, got {self.bandwidth_hz!r}")
        if not self.freq_hz > 0:
            raise DomainError(f"carrier frequency must be positive, got {self.freq_hz!r}")
        if not (math.isfinite(self.eta) and self.eta >= 2.0):
            raise DomainError(f"path-loss exponent must be >= 2, got {self.eta!r}")

    @property
    def wavelength(self):
        return self.speed_of_light / self.freq_hz

    @property
    def pt_mw(self):
        return float(dbm_to_mw(self.pt_dbm))

    @property
    def noise_dbm(self):
        return noise_power(self)

    @property
    def noise_mw(self):
        return float(dbm_to_mw(noise_power(self)))


@dataclass(frozen=True)
class SfParams:
    ring_index: int
    sf: int
    toa_ms: float
    bitrate_kbps: float
    sensitivity_dbm: float
    snr_threshold_db: float


# 9-byte uplink, B = 125 kHz, CR 4/5, header and CRC on (SX1272)
SF_TABLE = (
    SfParams(1, 7, 41.22, 5.47, -123.0, -6.0),
    SfParams(2, 8, 72.19, 3.12, -126.0, -9.0),
    SfParams(3, 9, 144.38, 1.76, -129.0, -12.0),
    SfParams(4, 10, 247.81, 0.98, -132.0, -15.0),
    SfParams(5, 11, 495.62, 0.54, -134.5, -17.5),
    SfParams(6, 12, 991.23, 0.29, -137.0, -20.0),
)

TOA_S = np.array([row.toa_ms for row in SF_TABLE]) / 1000.0
PSI_DB = np.array([row.snr_threshold_db for row in SF_TABLE])

# row = desired SF, column = interfering SF (SF7..SF12)
DELTA_DB = np.array([
    [1.0, -8.0, -9.0, -9.0, -9.0, -9.0],
    [-11.0, 1.0, -11.0, -12.0, -13.0, -13.0],
    [-15.0, -13.0, 1.0, -13.0, -14.0, -15.0],
    [-19.0, -18.0, -17.0, 1.0, -17.0, -18.0],
    [-22.0, -22.0, -21.0, -20.0, 1.0, -20.0],
    [-25.0, -25.0, -25.0, -24.0, -23.0, 1.0],
])

# LoRa vs IEEE 802.15.4g
THETA_DB = np.array([-6.0, -9.0, -12.5, -16.0, -16.0, -16.0])

INTERFERENCE_MODES = ("all", "intra_sf_only", "none")


def _frozen_array(values, shape, name):
    arr = np.array(values, dtype=float)
    if arr.shape != shape:
        raise DomainError(f"{name} must have shape {shape}, got {arr.shape}")
    if np.isnan(arr).any() or np.isposinf(arr).any():
        raise DomainError(f"{name} must not contain NaN or +inf")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ThresholdSet:
    """SNR thresholds psi, inter-SF SIR matrix delta and external SIR vector theta.

    Inputs are in dB; ``-inf`` dB disables a constraint (linear value 0).
    """
    psi_db: np.ndarray = field(default_factory=lambda: PSI_DB.copy())
    delta_db: np.ndarray = field(default_factory=lambda: DELTA_DB.copy())
    theta_db: np.ndarray = field(default_factory=lambda: THETA_DB.copy())

    def __post_init__(self):
        object.__setattr__(self, "psi_db", _frozen_array(self.psi_db, (N_RINGS,), "psi_db"))
        object.__setattr__(self, "delta_db", _frozen_array(self.delta_db, (N_RINGS, N_RINGS), "delta_db"))
        object.__setattr__(self, "theta_db", _frozen_array(self.theta_db, (N_RINGS,), "theta_db"))
        if np.isinf(self.psi_db).any():
            raise DomainError("psi_db must be finite")
        for name in ("psi", "delta", "theta"):
            lin = db_to_linear(getattr(self, name + "_db"))
            lin.setflags(write=False)
            object.__setattr__(self, name, lin)

    def with_mode(self, mode):
        """Return a copy with interference terms disabled according to ``mode``."""
        if mode == "all":
            return self
        if mode == "intra_sf_only":
            delta = np.where(np.eye(N_RINGS, dtype=bool), self.delta_db, -np.inf)
        elif mode == "none":
            delta = np.full((N_RINGS, N_RINGS), -np.inf)
        else:
            raise DomainError(f"unknown interference mode {mode!r}; expected one of {INTERFERENCE_MODES}")
        return ThresholdSet(self.psi_db, delta, np.full(N_RINGS, -np.inf))


@dataclass(frozen=True, eq=False)
class NetworkGeometry:
    """Ring limits L = [l0 = 0, l1, ..., l6] in metres."""
    limits: np.ndarray

    def __post_init__(self):
        lim = np.array(self.limits, dtype=float)
        if lim.shape == (N_RINGS,):
            lim = np.concatenate(([0.0], lim))
        if lim.shape != (N_RINGS + 1,):
            raise DomainError(f"ring limits need {N_RINGS} or {N_RINGS + 1} entries, got {lim.shape}")
        if lim[0] != 0.0:
            raise DomainError("l0 must be 0")
        if not np.isfinite(lim).all() or (np.diff(lim) < 0).any():
            raise DomainError(f"ring limits must be finite and nondecreasing, got {lim.tolist()}")
        lim.setflags(write=False)
        object.__setattr__(self, "limits", lim)

    @classmethod
    def equal_width(cls, radius):
        if not radius > 0:
            raise DomainError(f"radius must be positive, got {radius!r}")
        return cls(np.linspace(0.0, radius, N_RINGS + 1))

    @property
    def radius(self):
        return float(self.limits[-1])

    @property
    def outer(self):
        return self.limits[1:]

    @property
    def areas(self):
        return math.pi * np.diff(self.limits ** 2)

    def ring_of(self, d):
        """1-based ring index of a node at distance ``d`` (inner limit exclusive)."""
        if not 0 < d <= self.radius:
            raise DomainError(f"distance {d!r} outside (0, {self.radius}]")
        return int(np.searchsorted(self.limits, d, side="left"))


@dataclass(frozen=True, eq=False)
class SpatialConfig:
    """Per-ring duty cycles p and spatial densities rho (nodes/m^2)."""
    duty: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        duty = _frozen_array(self.duty, (N_RINGS,), "duty")
        density = _frozen_array(self.density, (N_RINGS,), "density")
        if ((duty <= 0) | (duty > 1)).any():
            raise DomainError(f"duty cycles must lie in (0, 1], got {duty.tolist()}")
        if (density < 0).any():
            raise DomainError(f"densities must be nonnegative, got {density.tolist()}")
        object.__setattr__(self, "duty", duty)
        object.__setattr__(self, "density", density)

    @classmethod
    def uniform(cls, n_nodes, geometry, duty):
        rho = n_nodes / (math.pi * geometry.radius ** 2)
        return cls(np.broadcast_to(np.asarray(duty, float), (N_RINGS,)), np.full(N_RINGS, rho))

    @classmethod
    def from_intensities(cls, alpha, duty):
        duty = np.asarray(duty, float)
        return cls(duty, np.asarray(alpha, float) / duty)

    @property
    def alpha(self):
        return self.duty * self.density

    def mean_counts(self, geometry):
        return self.density * geometry.areas

    def total_nodes(self, geometry):
        return float(self.mean_counts(geometry).sum())


@dataclass(frozen=True)
class ExternalNetwork:
    """Interfering IEEE 802.15.4g PPP: duty p_z, radius R_z (m), density rho_z."""
    duty: float = 1e-3
    radius: float = 4000.0
    density: float = 0.0

    def __post_init__(self):
        if not 0 < self.duty <= 1:
            raise DomainError(f"external duty cycle must lie in (0, 1], got {self.duty!r}")
        if not self.radius >= 0:
            raise DomainError(f"external radius must be nonnegative, got {self.radius!r}")
        if not self.density >= 0:
            raise DomainError(f"external density must be nonnegative, got {self.density!r}")

    @classmethod
    def from_count(cls, n_nodes, duty, radius):
        return cls(duty, radius, n_nodes / (math.pi * radius ** 2))

    @classmethod
    def from_intensity(cls, alpha, radius, duty=1e-3):
        return cls(duty, radius, alpha / duty)

    @property
    def alpha(self):
        return self.duty * self.density

    @property
    def mean_count(self):
        return self.density * math.pi * self.radius ** 2

    def bound_to(self, radius):
        """Same intensity, integration radius moved to ``radius``."""
        return replace(self, radius=radius)


def duty_from_period(period_s, toa_s=TOA_S):
    """p_i = t_i / T for a message period T in seconds."""
    if not period_s > 0:
        raise DomainError(f"message period must be positive, got {period_s!r}")
    p = np.asarray(toa_s, float) / period_s
    if (p > 1).any():
        raise DomainError(f"message period {period_s} s shorter than the time-on-air")
    return p


def _check_ring(ring):
    if ring not in range(1, N_RINGS + 1):
        raise DomainError(f"ring index must be in 1..{N_RINGS}, got {ring!r}")


def _check_distance(d):
    if not (math.isfinite(d) and d > 0):
        raise DomainError(f"distance must be positive and finite, got {d!r}")


def path_gain(d, radio):
    """g(d) = (lambda / (4 pi d))^eta."""
    _check_distance(d)
    return (radio.wavelength / (4.0 * math.pi * d)) ** radio.eta


def noise_power(radio):
    """Receiver noise N = -174 + F + 10 log10(B) in dBm."""
    if not radio.bandwidth_hz > 0:
        raise DomainError("bandwidth must be positive")
    return -174.0 + radio.noise_figure_db + 10.0 * math.log10(radio.bandwidth_hz)


def connection_prob(d1, ring, radio, thresholds):
    """H1: probability that the Rayleigh-faded SNR clears psi_ring."""
    _check_distance(d1)
    _check_ring(ring)
    psi = thresholds.psi[ring - 1]
    return math.exp(-radio.noise_mw * psi / (radio.pt_mw * path_gain(d1, radio)))


def _ring_term(d1, gamma, la, lb, eta):
    if gamma == 0.0 or la == lb:
        return 0.0
    return ring_integral(d1, gamma, la, lb, eta)


def capture_single(d1, desired_ring, interfering_ring, geometry, spatial, thresholds, radio):
    """P_SIR_j: survival against the PPP of a single interfering ring."""
    _check_distance(d1)
    _check_ring(desired_ring)
    _check_ring(interfering_ring)
    j = interfering_ring
    alpha = spatial.alpha[j - 1]
    if alpha == 0.0:
        return 1.0
    y = _ring_term(d1, thresholds.delta[desired_ring - 1, j - 1],
                   geometry.limits[j - 1], geometry.limits[j], radio.eta)
    return math.exp(-2.0 * math.pi * alpha * y)


def capture_internal(d1, ring, geometry, spatial, thresholds, radio, orthogonal_only=False):
    """Q1 (or Q1* when ``orthogonal_only``): survival against intra-network interference."""
    _check_distance(d1)
    _check_ring(ring)
    rings = (ring,) if orthogonal_only else range(1, N_RINGS + 1)
    exponent = 0.0
    for j in rings:
        alpha = spatial.alpha[j - 1]
        if alpha == 0.0:
            continue
        exponent += alpha * _ring_term(d1, thresholds.delta[ring - 1, j - 1],
                                       geometry.limits[j - 1], geometry.limits[j], radio.eta)
    return math.exp(-2.0 * math.pi * exponent)


def capture_external(d1, ring, external, thresholds, radio):
    """Z1: survival against the external PPP over the disc of radius R_z."""
    _check_distance(d1)
    _check_ring(ring)
    if external.alpha == 0.0:
        return 1.0
    y = _ring_term(d1, thresholds.theta[ring - 1], 0.0, external.radius, radio.eta)
    return math.exp(-2.0 * math.pi * external.alpha * y)


def coverage_prob(d1, ring, geometry, spatial, external, thresholds, radio):
    """C1 = H1 * Q1 * Z1."""
    return (connection_prob(d1, ring, radio, thresholds)
            * capture_internal(d1, ring, geometry, spatial, thresholds, radio)
            * capture_external(d1, ring, external, thresholds, radio))


CURVE_NAMES = ("H1", "Q1", "Q1_star", "Z1", "C1")


def curves(distances, geometry, spatial, external, thresholds, radio, rings=None):
    """All five probabilities on a distance grid.

    Each distance is assigned to the ring that contains it unless ``rings`` is given.
    Returns a dict of arrays keyed by ``"ring"`` and :data:`CURVE_NAMES`.
    """
    distances = np.asarray(distances, float)
    if rings is None:
        rings = [geometry.ring_of(d) for d in distances]
    out = {"ring": np.asarray(rings, int)}
    cols = {name: np.empty(len(distances)) for name in CURVE_NAMES}
    for k, (d, i) in enumerate(zip(distances, out["ring"])):
        i = int(i)
        h = connection_prob(d, i, radio, thresholds)
        q = capture_internal(d, i, geometry, spatial, thresholds, radio)
        z = capture_external(d, i, external, thresholds, radio)
        cols["H1"][k] = h
        cols["Q1"][k] = q
        cols["Q1_star"][k] = capture_internal(d, i, geometry, spatial, thresholds, radio,
                                              orthogonal_only=True)
        cols["Z1"][k] = z
        cols["C1"][k] = h * q * z
    out.update(cols)
    return out
