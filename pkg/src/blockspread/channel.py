"""Discrete-time baseband channels and multi-user superposition.

Noise calibration: for a transmit block of energy Es and a target ratio
Gamma = 10**(es_n0_db / 10), every complex sample receives i.i.d.
circularly-symmetric Gaussian noise of variance Es / Gamma.  With a
unit-energy codeword and unit-norm matched filter the filter-output SNR is
then exactly Gamma, so simulated curves line up with the closed forms in
``theory`` without further scaling.  es_n0_db = inf disables noise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODELS = ("awgn", "rayleigh", "two-tap")
OFFSET_MODES = ("sync", "uniform")


@dataclass
class ChannelSpec:
    """Channel selector: AWGN, flat Rayleigh, or two-tap multipath.

    rho splits power between the two taps, sqrt(1-rho) and sqrt(rho), so
    the impulse response has unit energy.  fading draws an independent
    CN(0, 1) coefficient per tap.
    """

    model: str
    es_n0_db: float
    rho: float = 0.0
    fading: bool = False
    seed: int | None = None

    def __post_init__(self):
        if self.model not in MODELS:
            raise ValueError(f"unknown channel model {self.model!r}")
        if not 0.0 <= self.rho < 1.0:
            raise ValueError("rho must lie in [0, 1)")

    def to_json_dict(self) -> dict:
        return {
            "model": self.model,
            "es_n0_db": self.es_n0_db,
            "rho": self.rho,
            "fading": self.fading,
            "seed": self.seed,
        }


@dataclass
class ChannelRealization:
    taps: np.ndarray
    noise_variance: float
    applied_offset: int = 0


def noise_variance(es: float, es_n0_db: float) -> float:
    """Per-sample complex noise variance Es / Gamma; 0 when noise disabled."""
    if np.isinf(es_n0_db):
        return 0.0
    return es / 10.0 ** (es_n0_db / 10.0)


def add_noise(x: np.ndarray, sigma2: float, rng) -> np.ndarray:
    """x plus circularly-symmetric complex Gaussian noise of variance sigma2."""
    if sigma2 == 0.0:
        return x.copy()
    scale = np.sqrt(sigma2 / 2.0)
    n = scale * (rng.standard_normal(x.size) + 1j * rng.standard_normal(x.size))
    return x + n


def rayleigh_tap(rng) -> complex:
    """Single CN(0, 1) coefficient; consumes two normal draws."""
    re, im = rng.standard_normal(2)
    return complex(re, im) / np.sqrt(2.0)


def two_tap_taps(rho: float, fading: bool, rng=None) -> np.ndarray:
    """Impulse response sqrt(1-rho), sqrt(rho), optionally faded per tap."""
    taps = np.array([np.sqrt(1.0 - rho), np.sqrt(rho)], dtype=np.complex128)
    if fading:
        g = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2.0)
        taps = taps * g
    return taps


def apply(spec: ChannelSpec, x: np.ndarray, rng=None):
    """Pass one block through the channel; returns (y, realization).

    Deterministic given (spec, rng state, x).  Draw order is fixed: channel
    coefficients first, then noise.  When rng is omitted a fresh generator
    is seeded from spec.seed.
    """
    x = np.asarray(x, dtype=np.complex128).ravel()
    if x.size == 0:
        raise ValueError("empty input block")
    es = float(np.vdot(x, x).real)
    if es <= 0:
        raise ValueError("input block carries no energy")
    if rng is None:
        rng = np.random.default_rng(spec.seed)

    if spec.model == "awgn":
        taps = np.ones(1, dtype=np.complex128)
        y = x.copy()
    elif spec.model == "rayleigh":
        h = rayleigh_tap(rng)
        taps = np.array([h])
        y = h * x
    else:  # two-tap
        taps = two_tap_taps(spec.rho, spec.fading, rng)
        y = np.convolve(x, taps)

    sigma2 = noise_variance(es, spec.es_n0_db)
    y = add_noise(y, sigma2, rng)
    return y, ChannelRealization(taps=taps, noise_variance=sigma2)


def superpose_async(waveforms, offsets) -> np.ndarray:
    """Zero-padded, sample-delayed sum of per-user blocks.

    Noise is not added here; the caller applies it once to the aggregate.
    """
    if len(waveforms) != len(offsets):
        raise ValueError("waveforms and offsets must pair up")
    if len(waveforms) == 0:
        raise ValueError("nothing to superpose")
    offsets = [int(o) for o in offsets]
    if any(o < 0 for o in offsets):
        raise ValueError("offsets must be >= 0")
    total = max(o + len(w) for w, o in zip(waveforms, offsets))
    out = np.zeros(total, dtype=np.complex128)
    for w, o in zip(waveforms, offsets):
        out[o : o + len(w)] += w
    return out


def draw_offsets(m: int, mode: str, max_offset: int, rng_or_seed=None) -> np.ndarray:
    """Per-user sample delays: all zero, or i.i.d. uniform on [0, max_offset]."""
    if mode not in OFFSET_MODES:
        raise ValueError(f"unknown offsets mode {mode!r}")
    if max_offset < 0:
        raise ValueError("max_offset must be >= 0")
    if m < 1:
        raise ValueError("m must be >= 1")
    if mode == "sync":
        return np.zeros(m, dtype=np.int64)
    rng = (
        rng_or_seed
        if isinstance(rng_or_seed, np.random.Generator)
        else np.random.default_rng(rng_or_seed)
    )
    return rng.integers(0, max_offset + 1, size=m, dtype=np.int64)
