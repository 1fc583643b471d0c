"""Ring interference integral and its Gauss hypergeometric closed form.

The integral of interest is

    f(d1, gamma, la, lb) = int_la^lb x * gamma d1^eta / (x^eta + gamma d1^eta) dx

whose antiderivative is (x^2 / 2) * 2F1(1, 2/eta; 1 + 2/eta; -x^eta / (gamma d1^eta)).

Only the 2F1(1, b; 1 + b; -z) family with b = 2/eta in (0, 1] is supported.
For z <= Z_SWITCH the Pfaff transform maps the argument into [0, 2/3] where the
power series converges quickly.  Above the switch the large-argument connection
formula is used; the ring integral itself is then summed term by term as a
difference of tails, which avoids the catastrophic cancellation that a plain
difference of two antiderivative values suffers when both radii are far out.
"""
import math
import warnings

import numpy as np
from scipy import integrate

from ._accel import USE_NUMBA, njit
from .errors import ConvergenceError, DomainError

MAX_TERMS = 10_000
REL_TOL = 1e-16
Z_SWITCH = 2.0


def _pfaff_sum(b, w):
    # sum_k k! / (1+b)_k * w^k, i.e. 2F1(1, 1; 1+b; w)
    total = 1.0
    term = 1.0
    for k in range(MAX_TERMS):
        term *= (k + 1.0) / (k + 1.0 + b) * w
        total += term
        if term <= REL_TOL * total:
            return total, k + 2
    return total, -1


def _pi_csc_minus_inv(eps):
    # pi / sin(pi eps) - 1/eps, smooth through eps = 0
    if eps < 1e-3:
        e2 = eps * eps
        pi2 = math.pi * math.pi
        return eps * pi2 * (1.0 / 6.0 + e2 * pi2 * (7.0 / 360.0 + e2 * pi2 * 31.0 / 15120.0))
    return math.pi / math.sin(math.pi * eps) - 1.0 / eps


def _large_z(b, z):
    # connection formula about z = infinity; the k = 0 term is folded into the
    # leading bracket so that b -> 1 (eta -> 2) stays finite
    eps = 1.0 - b
    lz = math.log(z)
    if eps == 0.0:
        head = lz
    else:
        head = math.expm1(eps * lz) / eps + math.exp(eps * lz) * _pi_csc_minus_inv(eps)
    lead = b * head / z
    tail = 0.0
    zk = 1.0 / z
    for k in range(1, MAX_TERMS):
        zk /= -z
        term = zk / (k + 1.0 - b)
        tail += term
        if abs(term) <= REL_TOL * lead:
            return lead - b * tail, k + 1
    return lead - b * tail, -1


def _phi(e, r):
    # (1 - exp(-e r)) / e with the e -> 0 limit
    if e == 0.0:
        return r
    return -math.expm1(-e * r) / e


def _tail_diff(eta, r0, a, b):
    # int_a^b of the integrand for a >= r0 * Z_SWITCH**(1/eta), summed termwise
    u_eta = (r0 / a) ** eta
    r = math.log(b / a)
    e = eta - 2.0
    scale = (r0 / a) ** e
    total = 0.0
    sign = 1.0
    for k in range(MAX_TERMS):
        term = scale * _phi(e, r)
        total += sign * term
        if term <= REL_TOL * abs(total):
            return r0 * r0 * total, k + 1
        sign = -sign
        scale *= u_eta
        e += eta
    return r0 * r0 * total, -1


_pfaff_sum_py, _large_z_py, _tail_diff_py = _pfaff_sum, _large_z, _tail_diff
if USE_NUMBA:
    _phi = njit(_phi)
    _pi_csc_minus_inv = njit(_pi_csc_minus_inv)
    _pfaff_sum = njit(_pfaff_sum)
    _large_z = njit(_large_z)
    _tail_diff = njit(_tail_diff)


def _check(value, nterms, what):
    if nterms < 0:
        raise ConvergenceError(f"{what}: series did not converge within {MAX_TERMS} terms")
    return value


def _validate_eta(eta):
    if not math.isfinite(eta) or eta < 2.0:
        raise DomainError(f"path-loss exponent must be finite and >= 2, got {eta!r}")


def hyp2f1_ring(eta, z):
    """Evaluate 2F1(1, 2/eta; 1 + 2/eta; -z) for z >= 0 and eta >= 2.

    The result lies in (0, 1] and decreases strictly with z.
    """
    eta = float(eta)
    z = float(z)
    _validate_eta(eta)
    if not math.isfinite(z) or z < 0.0:
        raise DomainError(f"argument must be finite and nonnegative, got {z!r}")
    if z == 0.0:
        return 1.0
    b = 2.0 / eta
    if z <= Z_SWITCH:
        s, n = _pfaff_sum(b, z / (1.0 + z))
        return _check(s, n, "hyp2f1_ring") / (1.0 + z)
    return _check(*_large_z(b, z), "hyp2f1_ring")


def _validate_ring_args(d1, gamma, la, lb, eta):
    _validate_eta(eta)
    for name, v in (("d1", d1), ("gamma", gamma), ("la", la), ("lb", lb)):
        if not math.isfinite(v):
            raise DomainError(f"{name} must be finite, got {v!r}")
    if d1 <= 0.0:
        raise DomainError(f"d1 must be positive, got {d1!r}")
    if gamma <= 0.0:
        raise DomainError(f"gamma must be positive, got {gamma!r}")
    if la < 0.0 or lb < la:
        raise DomainError(f"need 0 <= la <= lb, got la={la!r}, lb={lb!r}")


def _antiderivative(eta, r0, x):
    if x == 0.0:
        return 0.0
    return 0.5 * x * x * hyp2f1_ring(eta, (x / r0) ** eta)


def ring_integral(d1, gamma, la, lb, eta):
    """Closed-form ring interference integral f(d1, gamma, la, lb).

    ``gamma`` is a linear SIR threshold; radii are in metres.  Returns the
    integral of x * gamma d1^eta / (x^eta + gamma d1^eta) over [la, lb].
    """
    d1, gamma, la, lb, eta = float(d1), float(gamma), float(la), float(lb), float(eta)
    _validate_ring_args(d1, gamma, la, lb, eta)
    if la == lb:
        return 0.0
    r0 = gamma ** (1.0 / eta) * d1
    x_s = r0 * Z_SWITCH ** (1.0 / eta)
    if lb <= x_s:
        return _antiderivative(eta, r0, lb) - _antiderivative(eta, r0, la)
    if la >= x_s:
        return _check(*_tail_diff(eta, r0, la, lb), "ring_integral")
    inner = _antiderivative(eta, r0, x_s) - _antiderivative(eta, r0, la)
    return inner + _check(*_tail_diff(eta, r0, x_s, lb), "ring_integral")


def ring_integral_log(d1, gamma, la, lb):
    """Ring integral for eta = 2 via its logarithmic antiderivative.

    Independent of the hypergeometric path; used to cross-check it.
    """
    d1, gamma, la, lb = float(d1), float(gamma), float(la), float(lb)
    _validate_ring_args(d1, gamma, la, lb, 2.0)
    k = gamma * d1 * d1
    # (k/2) ln((lb^2 + k) / (la^2 + k)), written to keep precision for small intervals
    return 0.5 * k * math.log1p((lb - la) * (lb + la) / (la * la + k))


def ring_integral_numeric(d1, gamma, la, lb, eta, rtol=1e-10, limit=500):
    """Adaptive Gauss-Kronrod quadrature of the ring integrand (test oracle).

    Raises ConvergenceError when the requested tolerance is not reached.
    """
    d1, gamma, la, lb, eta = float(d1), float(gamma), float(la), float(lb), float(eta)
    _validate_ring_args(d1, gamma, la, lb, eta)
    if la == lb:
        return 0.0
    r0 = gamma ** (1.0 / eta) * d1

    def integrand(x):
        return x / (1.0 + (x / r0) ** eta)

    points = [r0] if la < r0 < lb else None
    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            val, _err = integrate.quad(integrand, la, lb, epsabs=0.0, epsrel=rtol,
                                       limit=limit, points=points)
        except integrate.IntegrationWarning as exc:
            raise ConvergenceError(f"quadrature failed: {exc}") from exc
    return val


def ring_integral_vec(d1, gamma, la, lb, eta):
    """Broadcasting wrapper around :func:`ring_integral`."""
    return np.vectorize(ring_integral, otypes=[float])(d1, gamma, la, lb, eta)
