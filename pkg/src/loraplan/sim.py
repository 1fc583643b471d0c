"""Monte Carlo oracle for the analytic link model.

Every trial drops a fresh Poisson deployment of *active* interferers (the duty
cycle thinning is applied to the intensity up front), draws Rayleigh power gains
and checks the SNR and SIR outage conditions for a probe node at a fixed
distance.  Trials for probe point ``k`` are generated in fixed-size chunks, each
seeded from ``SeedSequence(seed, spawn_key=(k, chunk))``, so results do not
depend on the order in which points or chunks are processed.
"""
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from ._accel import USE_NUMBA, njit
from .errors import DomainError
from .model import CURVE_NAMES, N_RINGS

N_LABELS = N_RINGS + 1  # six SF rings plus the external network
CHUNK = 10_000
FADING_MODES = ("independent", "shared")
# column layout of the desired-signal fading draws
_COL_SNR, _COL_EXT = 0, N_RINGS + 1
N_DESIRED = N_RINGS + 2


@dataclass(frozen=True)
class TrialConfig:
    geometry: object
    spatial: object
    external: object
    radio: object
    thresholds: object
    distances: np.ndarray
    trials: int = 100_000
    seed: int = 0
    fading: str = "independent"

    def __post_init__(self):
        d = np.asarray(self.distances, float)
        if self.trials < 1:
            raise DomainError(f"trials must be >= 1, got {self.trials!r}")
        if d.ndim != 1 or d.size == 0 or (d <= 0).any() or (d > self.geometry.radius).any():
            raise DomainError(f"probe distances must lie in (0, {self.geometry.radius}]")
        if self.fading not in FADING_MODES:
            raise DomainError(f"fading must be one of {FADING_MODES}, got {self.fading!r}")
        object.__setattr__(self, "distances", d)

    def mean_counts(self):
        """Expected number of active interferers per label (rings 1..6, external)."""
        ring_means = self.spatial.alpha * self.geometry.areas
        ext = self.external.alpha * math.pi * self.external.radius ** 2
        return np.append(ring_means, ext)

    def label_radii(self):
        lim = self.geometry.limits
        inner = np.append(lim[:-1], 0.0)
        outer = np.append(lim[1:], self.external.radius)
        return inner, outer


@dataclass
class Deployment:
    """A batch of independent interferer realizations in CSR layout."""
    counts: np.ndarray   # (n, 7) active interferers per label
    offsets: np.ndarray  # (n + 1,)
    labels: np.ndarray   # 0..5 ring, 6 external
    distances: np.ndarray

    @property
    def n_trials(self):
        return self.counts.shape[0]


def sample_deployment(config, rng, n_trials=1):
    means = config.mean_counts()
    counts = rng.poisson(means, size=(n_trials, N_LABELS))
    per_trial = counts.sum(axis=1)
    offsets = np.zeros(n_trials + 1, dtype=np.int64)
    np.cumsum(per_trial, out=offsets[1:])
    labels = np.repeat(np.tile(np.arange(N_LABELS, dtype=np.int64), n_trials), counts.ravel())
    inner, outer = config.label_radii()
    a2, b2 = inner[labels] ** 2, outer[labels] ** 2
    u = rng.random(labels.size)
    dist = np.sqrt(a2 + u * (b2 - a2))
    return Deployment(counts, offsets, labels, dist)


def _outcomes_loop(offsets, labels, weights, h, snr_req, delta_row, theta, ring):
    n = offsets.size - 1
    out = np.zeros((n, 5), dtype=np.bool_)
    sums = np.zeros(7)
    for t in range(n):
        for k in range(7):
            sums[k] = 0.0
        for m in range(offsets[t], offsets[t + 1]):
            sums[labels[m]] += weights[m]
        connected = h[t, 0] >= snr_req
        internal = True
        for j in range(6):
            if delta_row[j] > 0.0 and h[t, 1 + j] < delta_row[j] * sums[j]:
                internal = False
                break
        orth = not (delta_row[ring] > 0.0 and h[t, 1 + ring] < delta_row[ring] * sums[ring])
        external = not (theta > 0.0 and h[t, 7] < theta * sums[6])
        out[t, 0] = connected
        out[t, 1] = internal
        out[t, 2] = orth
        out[t, 3] = external
        out[t, 4] = connected and internal and external
    return out


def _outcomes_numpy(offsets, labels, weights, h, snr_req, delta_row, theta, ring):
    n = offsets.size - 1
    trial = np.repeat(np.arange(n), np.diff(offsets))
    sums = np.bincount(trial * N_LABELS + labels, weights=weights,
                       minlength=n * N_LABELS).reshape(n, N_LABELS)
    connected = h[:, _COL_SNR] >= snr_req
    active = delta_row > 0
    sir_ok = ~active | (h[:, 1:1 + N_RINGS] >= delta_row * sums[:, :N_RINGS])
    internal = sir_ok.all(axis=1)
    orth = sir_ok[:, ring]
    external = np.ones(n, dtype=bool) if theta <= 0 else h[:, _COL_EXT] >= theta * sums[:, N_RINGS]
    return np.column_stack([connected, internal, orth, external, connected & internal & external])


_outcomes_loop_jit = njit(_outcomes_loop)
trial_outcomes_numpy = _outcomes_numpy
trial_outcomes_numba = _outcomes_loop_jit
trial_outcomes_kernel = _outcomes_loop_jit if USE_NUMBA else _outcomes_numpy


def trial_outcome(d1, ring, deployment, rng, config, kernel=None):
    """Outage indicators for a batch of trials.

    Returns an (n, 5) boolean array with columns connected, captured-internal,
    captured-internal-orthogonal, captured-external and covered.
    """
    radio, th = config.radio, config.thresholds
    n = deployment.n_trials
    fade = rng.exponential(size=deployment.labels.size)
    with np.errstate(divide="ignore", over="ignore"):
        # received power relative to the probe's mean, Pt cancels in every SIR
        weights = fade * (d1 / deployment.distances) ** radio.eta
    if config.fading == "independent":
        h = rng.exponential(size=(n, N_DESIRED))
    else:
        h = np.repeat(rng.exponential(size=(n, 1)), N_DESIRED, axis=1)
    g1 = (radio.wavelength / (4.0 * math.pi * d1)) ** radio.eta
    snr_req = th.psi[ring - 1] * radio.noise_mw / (radio.pt_mw * g1)
    kernel = kernel or trial_outcomes_kernel
    return kernel(deployment.offsets, deployment.labels, weights, h, snr_req,
                  np.ascontiguousarray(th.delta[ring - 1]), float(th.theta[ring - 1]), ring - 1)


def _point_counts(config, k):
    d1 = float(config.distances[k])
    ring = config.geometry.ring_of(d1)
    successes = np.zeros(5, dtype=np.int64)
    done = 0
    chunk_idx = 0
    while done < config.trials:
        n = min(CHUNK, config.trials - done)
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(k, chunk_idx)))
        dep = sample_deployment(config, rng, n)
        successes += trial_outcome(d1, ring, dep, rng, config).sum(axis=0)
        done += n
        chunk_idx += 1
    return ring, successes


@dataclass
class EmpiricalCurves:
    distances: np.ndarray
    rings: np.ndarray
    trials: int
    freq: dict
    stderr: dict


def estimate_curves(config, jobs=1):
    """Empirical H1, Q1, Q1*, Z1 and C1 frequencies on the probe grid."""
    idx = range(len(config.distances))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_point_counts, [config] * len(idx), idx))
    else:
        results = [_point_counts(config, k) for k in idx]
    rings = np.array([r for r, _ in results])
    counts = np.array([c for _, c in results])
    freq = {name: counts[:, m] / config.trials for m, name in enumerate(CURVE_NAMES)}
    stderr = {name: np.sqrt(f * (1.0 - f) / config.trials) for name, f in freq.items()}
    return EmpiricalCurves(config.distances.copy(), rings, config.trials, freq, stderr)


@dataclass
class DeviationReport:
    deviation: dict      # per curve, analytic - empirical
    max_abs: dict
    flagged: dict        # points beyond 3 standard errors of the analytic value

    @property
    def overall_max(self):
        return max(self.max_abs.values())

    @property
    def total_flagged(self):
        return int(sum(self.flagged.values()))


def compare_curves(analytic, empirical, n_sigma=3.0):
    """Per-point deviations between analytic curves (dict) and an EmpiricalCurves."""
    grid = np.asarray(analytic.get("distance_m", empirical.distances), float)
    if grid.shape != empirical.distances.shape or not np.allclose(grid, empirical.distances):
        raise DomainError("analytic and empirical curves use different distance grids")
    dev, mx, flagged = {}, {}, {}
    for name in CURVE_NAMES:
        a = np.asarray(analytic[name], float)
        if a.shape != grid.shape:
            raise DomainError(f"curve {name} has {a.size} points, grid has {grid.size}")
        e = empirical.freq[name]
        dev[name] = a - e
        mx[name] = float(np.max(np.abs(dev[name])))
        se = np.sqrt(np.clip(a * (1 - a), 0, None) / empirical.trials)
        flagged[name] = int(np.sum(np.abs(dev[name]) > n_sigma * se))
    return DeviationReport(dev, mx, flagged)
