"""Closed-form error rates, concentration bounds, and design constants.

These are the analytic references the Monte Carlo harness is accepted
against.  BER arguments are linear block SNR: gamma = Es/N0 for AWGN,
gamma_bar = E|h|^2 * Es/N0 for Rayleigh fading.

The exact expressions are alternating binomial series whose terms grow to
astronomical magnitude before cancelling (roughly 0.3 * 2**sf decimal
digits cancel), so they are summed in arbitrary precision and rounded
once at the end.  Double-precision compensated summation cannot reach
sf = 7; the cutoff at sf = 12 keeps the arbitrary-precision cost sane.
Beyond that the *_approx forms are the supported route.
"""

from __future__ import annotations

import functools
import math

import mpmath as mp
import numpy as np
from scipy import special

MAX_EXACT_SF = 12
EULER_MASCHERONI = 0.57722  # rounded constant used by the harmonic asymptote


def q_function(x):
    """Upper-tail standard normal probability Q(x)."""
    return 0.5 * special.erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


@functools.lru_cache(maxsize=None)
def _harmonic_exact(n: int) -> float:
    return float(np.sum(1.0 / np.arange(1, n + 1)))


def harmonic(n: int) -> float:
    """n-th harmonic number: exact partial sum up to 10**6, asymptotic after.

    The asymptote is ln(n) + 1/(2n) + 0.57722.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n <= 10**6:
        return _harmonic_exact(int(n))
    return math.log(n) + 1.0 / (2.0 * n) + EULER_MASCHERONI


def _require_exact_sf(sf: int) -> int:
    if sf < 1:
        raise ValueError("sf must be >= 1")
    if sf > MAX_EXACT_SF:
        raise ValueError(
            f"sf={sf} exceeds the exact-series cutoff {MAX_EXACT_SF}; "
            "use the *_approx form"
        )
    return 1 << sf


def _clamp_ber(p: float) -> float:
    return min(max(p, 0.0), 0.5)


@functools.lru_cache(maxsize=4096)
def ber_awgn_exact(sf: int, gamma: float) -> float:
    """Bit error rate of noncoherent detection of 2**sf orthogonal signals
    over AWGN.

    P_b = 2**(sf-1)/(2**sf - 1) * sum_{k=1}^{2**sf - 1}
          (-1)**(k+1)/(k+1) * C(2**sf - 1, k) * exp(-k*gamma/(k+1))
    """
    m = _require_exact_sf(sf)
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    digits = int(0.302 * (m - 1)) + 40
    with mp.workdps(digits):
        g = mp.mpf(gamma)
        log_gamma_m = mp.loggamma(m)
        terms = []
        for k in range(1, m):
            ln_t = (
                log_gamma_m
                - mp.loggamma(k + 1)
                - mp.loggamma(m - k)
                - mp.log(k + 1)
                - k * g / (k + 1)
            )
            t = mp.e**ln_t
            terms.append(t if (k + 1) % 2 == 0 else -t)
        total = mp.mpf(1 << (sf - 1)) / (m - 1) * mp.fsum(terms)
        return _clamp_ber(float(total))


def ber_awgn_approx(sf: int, gamma: float) -> float:
    """Numerically stable closed-form approximation of ber_awgn_exact.

    P_b ~= 0.5 * Q(sqrt(2*gamma) - sqrt(1.386*sf + 1.154)); the Q argument
    is the per-chip SNR gamma/2**sf scaled by 2**(sf+1).  Monotone
    nonincreasing in gamma.
    """
    if sf < 1:
        raise ValueError("sf must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    val = 0.5 * float(q_function(math.sqrt(2.0 * gamma) - math.sqrt(1.386 * sf + 1.154)))
    return _clamp_ber(val)


@functools.lru_cache(maxsize=4096)
def ber_rayleigh_exact(sf: int, gamma_bar: float) -> float:
    """Bit error rate of noncoherent orthogonal signaling over flat Rayleigh
    fading with average block SNR gamma_bar.

    P_b = 2**(sf-1)/(2**sf - 1) * sum_{k=1}^{2**sf - 1}
          (-1)**(k+1) * C(2**sf - 1, k) / (1 + k + k*gamma_bar)
    """
    m = _require_exact_sf(sf)
    if gamma_bar < 0:
        raise ValueError("gamma_bar must be >= 0")
    digits = int(0.302 * (m - 1)) + 40
    with mp.workdps(digits):
        g = mp.mpf(gamma_bar)
        log_gamma_m = mp.loggamma(m)
        terms = []
        for k in range(1, m):
            ln_t = (
                log_gamma_m
                - mp.loggamma(k + 1)
                - mp.loggamma(m - k)
                - mp.log(1 + k + k * g)
            )
            t = mp.e**ln_t
            terms.append(t if (k + 1) % 2 == 0 else -t)
        total = mp.mpf(1 << (sf - 1)) / (m - 1) * mp.fsum(terms)
        return _clamp_ber(float(total))


def ber_rayleigh_approx(sf: int, gamma: float) -> float:
    """Numerically stable approximation of ber_rayleigh_exact.

    With H the (2**sf - 1)-th harmonic number and g_eff the average block
    SNR:

    P_b ~= 0.5 * [ Q(-sqrt(2H))
                   - sqrt(g_eff/(g_eff+1)) * exp(-H/(g_eff+1))
                     * Q(sqrt((g_eff+1)/g_eff) * (-sqrt(2H) + sqrt(2H)/(g_eff+1))) ]

    Decays like 1/g_eff (diversity order one).
    """
    if sf < 1:
        raise ValueError("sf must be >= 1")
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    h = harmonic((1 << sf) - 1)
    t = math.sqrt(2.0 * h)
    g = max(gamma, 1e-300)
    val = 0.5 * (
        float(q_function(-t))
        - math.sqrt(g / (g + 1.0))
        * math.exp(-h / (g + 1.0))
        * float(q_function(math.sqrt((g + 1.0) / g) * (-t + t / (g + 1.0))))
    )
    return _clamp_ber(val)


def bernstein_tail_single(k: int, n_sf: int, a_max: float, eps: float) -> float:
    """Concentration bound on the pairwise codeword correlation tail.

    Pr(|Z| >= eps) <= 2 * exp(-K*N_SF*eps^2 / (2*A_max^2 + (2/3)*A_max*eps)),
    capped at 1.  A_max bounds the per-subcarrier amplitude products; 1 for
    constant-modulus profiles.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if a_max <= 0:
        raise ValueError("a_max must be > 0")
    expo = (k * n_sf * eps**2) / (2.0 * a_max**2 + (2.0 / 3.0) * a_max * eps)
    return min(1.0, 2.0 * math.exp(-expo))


def bernstein_tail_cross(k: int, mu: float, eps: float) -> float:
    """Cross-user correlation tail bound for spreading coherence mu.

    Pr(|Z| >= eps) <= 2 * exp(-K*eps^2 / (2*mu^2 + (2/3)*mu*eps)), capped
    at 1.
    """
    if eps <= 0:
        raise ValueError("eps must be > 0")
    if not 0 < mu <= 1:
        raise ValueError("mu must lie in (0, 1]")
    expo = (k * eps**2) / (2.0 * mu**2 + (2.0 / 3.0) * mu * eps)
    return min(1.0, 2.0 * math.exp(-expo))


def mui_bound(m: int, k: int, n_sf: int, eps: float, mu: float | None = None):
    """Residual multi-user interference bound with its confidence level.

    Returns (amplitude_bound, power_bound, confidence): the aggregate
    interference amplitude stays below (M-1)*K*N_SF*eps, its power below
    the square, with probability at least 1 - (M-1)*eta where eta is the
    cross-user tail bound.  mu defaults to 1/sqrt(N_SF), the coherence a
    well-designed family approaches.
    """
    if m < 2:
        raise ValueError("m must be >= 2")
    if mu is None:
        mu = 1.0 / math.sqrt(n_sf)
    amplitude = (m - 1) * k * n_sf * eps
    eta = bernstein_tail_cross(k, mu, eps)
    confidence = min(1.0, max(0.0, 1.0 - (m - 1) * eta))
    return amplitude, amplitude**2, confidence


def welch_bound(m: int, n_sf: int) -> float:
    """Lower bound on the coherence of m unit-norm vectors in C^{n_sf}:

    max_{i != j} |<v_i, v_j>| >= sqrt((m - n_sf) / (n_sf * (m - 1)))

    Requires m > n_sf; as m grows the bound approaches 1/sqrt(n_sf).
    """
    if m <= n_sf:
        raise ValueError("welch bound requires more vectors than dimensions")
    return math.sqrt((m - n_sf) / (n_sf * (m - 1.0)))


def welch_asymptote(n_sf: int) -> float:
    """Large-family limit of the Welch bound, 1/sqrt(n_sf)."""
    return 1.0 / math.sqrt(n_sf)


def processing_gain_db(n_sf: int) -> float:
    """Despreading gain of a length-n_sf block: 10*log10(n_sf) dB."""
    if n_sf < 1:
        raise ValueError("n_sf must be >= 1")
    return 10.0 * math.log10(n_sf)
