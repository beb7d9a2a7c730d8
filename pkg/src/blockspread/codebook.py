"""Codeword family construction for the unified block-transmission model.

Three families of complex exponentials share one parameterization
(subcarrier bandwidth f0, modulation index theta, K subcarriers, N_SF
chips per block):

* sims -- codeword l stacks N_SF chips of K samples each, the chip tone
  selected by the l-cyclic-shift of a root sequence (sequence index
  modulation; quasi-orthogonal codewords of length K * N_SF).
* fsk  -- the K subcarrier tones of length N_SF (orthogonal for integer
  f0 * theta).
* css  -- the N_SF cyclic diagonal chirps of the fundamental waveform
  matrix (orthogonal for integer f0 * theta).

Codewords are stored as unit-energy columns; the scale back to the raw
construction is kept so identities on the raw samples stay testable.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .sequences import RootSequence

SCHEMES = ("sims", "fsk", "css")


@dataclass
class WaveformParams:
    """Fundamental waveform parameters.

    k is the subcarrier count (SIMS oversampling factor), sf the spreading
    factor with n_sf = 2**sf chips per block.  f0 (subcarrier bandwidth,
    normalized) and theta (modulation index) default to 1, which puts SIMS
    chip phases on the K-th roots of unity and makes FSK/CSS exactly
    orthogonal.
    """

    k: int
    sf: int
    f0: float = 1.0
    theta: float = 1.0

    def __post_init__(self):
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if self.sf < 1:
            raise ValueError("sf must be >= 1")

    @property
    def n_sf(self) -> int:
        return 1 << self.sf

    @property
    def f0_theta(self) -> float:
        return self.f0 * self.theta

    def to_json_dict(self) -> dict:
        return {"k": self.k, "sf": self.sf, "f0": self.f0, "theta": self.theta}


@dataclass
class AmplitudeProfile:
    """Per-subcarrier complex amplitudes d[k] applied to each chip."""

    d: np.ndarray

    def __post_init__(self):
        self.d = np.asarray(self.d, dtype=np.complex128).ravel()
        if self.d.size == 0 or not np.any(np.abs(self.d) > 0):
            raise ValueError("amplitude profile must carry energy")

    @classmethod
    def flat(cls, k: int) -> "AmplitudeProfile":
        return cls(np.ones(k, dtype=np.complex128))

    @classmethod
    def random_unit_modulus(cls, k: int, seed: int) -> "AmplitudeProfile":
        rng = np.random.default_rng(seed)
        return cls(np.exp(2j * np.pi * rng.random(k)))

    @property
    def is_constant_modulus(self) -> bool:
        mags = np.abs(self.d)
        return bool(np.allclose(mags, mags[0], rtol=0, atol=1e-12))


@dataclass
class Codebook:
    """Immutable family of unit-energy codewords (columns).

    scales[l] converts stored codeword l back to its raw, pre-normalization
    samples: raw = codewords[:, l] / scales[l].  circulant marks schemes
    whose detection admits the FFT fast path.
    """

    scheme: str
    codewords: np.ndarray
    params: WaveformParams
    amplitudes: AmplitudeProfile
    scales: np.ndarray
    root: RootSequence | None = None
    circulant: bool = False
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.codewords.setflags(write=False)

    @property
    def codeword_length(self) -> int:
        return self.codewords.shape[0]

    @property
    def num_codewords(self) -> int:
        return self.codewords.shape[1]

    @property
    def bits_per_codeword(self) -> int:
        n = self.num_codewords
        if n & (n - 1):
            raise ValueError(f"{n} codewords do not map to a whole bit block")
        return n.bit_length() - 1

    @property
    def baseline_correlation(self) -> float:
        """Deterministic pairwise correlation floor of the scheme.

        Every SIMS chip contributes a k=0 sample whose phase is independent
        of the sequence value, so any two codewords correlate by at least
        |d[0]|^2 / ||d||^2 in expectation.  FSK/CSS families are orthogonal
        and have no floor.
        """
        if self.scheme != "sims":
            return 0.0
        d = self.amplitudes.d
        return float(np.abs(d[0]) ** 2 / np.sum(np.abs(d) ** 2))


@dataclass
class MultiUserCodebook:
    """Per-user codebooks sharing scheme and waveform parameters."""

    users: list

    def __post_init__(self):
        if len(self.users) < 2:
            raise ValueError("need >= 2 users")
        first = self.users[0]
        for cb in self.users[1:]:
            if (
                cb.scheme != first.scheme
                or cb.params.k != first.params.k
                or cb.params.sf != first.params.sf
            ):
                raise ValueError("user codebooks must share scheme and params")

    @property
    def num_users(self) -> int:
        return len(self.users)

    @property
    def codeword_length(self) -> int:
        return self.users[0].codeword_length


def _resolve_amplitudes(amplitudes, k: int) -> AmplitudeProfile:
    amp = AmplitudeProfile.flat(k) if amplitudes is None else amplitudes
    if amp.d.size != k:
        raise ValueError(f"amplitude profile length {amp.d.size} != K={k}")
    return amp


def build_sims(
    root: RootSequence,
    params: WaveformParams,
    amplitudes: AmplitudeProfile | None = None,
) -> Codebook:
    """SIMS codebook: one codeword per cyclic shift of the root.

    Chip n of codeword l carries K samples d[k] * exp(j * 2*pi/K * f0 *
    theta * q((n - l) mod N_SF) * k), k = 0..K-1, chips stacked in order.
    The codeword length is K * N_SF and there are N_SF codewords.
    """
    k, n = params.k, params.n_sf
    if root.alphabet_size != k:
        raise ValueError(
            f"root alphabet {root.alphabet_size} does not match K={k}"
        )
    if len(root) != n:
        raise ValueError(f"root length {len(root)} != N_SF={n}")
    amp = _resolve_amplitudes(amplitudes, k)
    q = root.values
    if np.all(q == q[0]):
        warnings.warn(
            "constant root sequence: all codewords are the same tone",
            stacklevel=2,
        )
    # q_shifted[n, l] = q[(n - l) mod N]
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    q_shifted = q[idx]
    phase = 2.0 * np.pi / k * params.f0_theta
    chips = np.exp(1j * phase * q_shifted[:, :, None] * np.arange(k)[None, None, :])
    chips *= amp.d[None, None, :]
    cw = chips.transpose(0, 2, 1).reshape(n * k, n)
    energy = n * np.sum(np.abs(amp.d) ** 2)
    scale = 1.0 / math.sqrt(energy)
    return Codebook(
        scheme="sims",
        codewords=np.ascontiguousarray(cw * scale),
        params=params,
        amplitudes=amp,
        scales=np.full(n, scale),
        root=root,
        circulant=True,
    )


def build_fsk(params: WaveformParams, amplitudes: AmplitudeProfile | None = None) -> Codebook:
    """FSK codebook: K subcarrier tones of length N_SF.

    Codeword k has samples d[k] * exp(j * 2*pi/N_SF * f0 * theta * k * n).
    The stored codeword is the transmitted waveform itself; no conjugation
    is applied.
    """
    k, n = params.k, params.n_sf
    if k > n:
        raise ValueError(f"K={k} must not exceed N_SF={n}")
    amp = _resolve_amplitudes(amplitudes, k)
    a = params.f0_theta
    cw = np.exp(2j * np.pi / n * a * np.outer(np.arange(n), np.arange(k)))
    cw = cw * amp.d[None, :]
    if abs(a - round(a)) < 1e-12:
        ai = int(round(a)) % n
        distinct = 1 if ai == 0 else n // math.gcd(ai, n)
        if distinct < k:
            warnings.warn(
                "tone indices collide; codewords are not distinct", stacklevel=2
            )
    energies = np.linalg.norm(cw, axis=0)
    scales = 1.0 / energies
    return Codebook(
        scheme="fsk",
        codewords=np.ascontiguousarray(cw * scales[None, :]),
        params=params,
        amplitudes=amp,
        scales=scales,
        circulant=False,
    )


def build_css(params: WaveformParams, amplitudes: AmplitudeProfile | None = None) -> Codebook:
    """CSS codebook: N_SF chirps taken from the shifted diagonals of the
    fundamental waveform matrix.

    Codeword m has samples d[m] * exp(j * 2*pi/N_SF * f0 * theta *
    ((m + n) mod N_SF) * n); m = 0 is the up-chirp with quadratic phase.
    Requires the square case K = N_SF.
    """
    k, n = params.k, params.n_sf
    if k != n:
        raise ValueError(f"CSS requires K = N_SF (got K={k}, N_SF={n})")
    amp = _resolve_amplitudes(amplitudes, k)
    a = params.f0_theta
    nn = np.arange(n)
    kidx = (nn[None, :] + nn[:, None]) % n  # (time, codeword) -> (m + n) mod N
    cw = np.exp(2j * np.pi / n * a * kidx * nn[:, None])
    cw = cw * amp.d[None, :]
    fast_path = abs(a - round(a)) < 1e-12
    if fast_path and math.gcd(int(round(a)) % n or n, n) > 1:
        warnings.warn(
            "gcd(f0*theta, N_SF) > 1: chirp codewords coincide", stacklevel=2
        )
    energies = np.linalg.norm(cw, axis=0)
    scales = 1.0 / energies
    return Codebook(
        scheme="css",
        codewords=np.ascontiguousarray(cw * scales[None, :]),
        params=params,
        amplitudes=amp,
        scales=scales,
        circulant=fast_path,
    )


def verify_kronecker(codebook: Codebook, l: int) -> bool:
    """Check the block-diagonal factorization of SIMS codeword l.

    Rebuilds the raw codeword two independent ways -- (a) the stacked
    spreading vector multiplied by the block-diagonal amplitude operator
    I_{N_SF} (x) diag(d), (b) a scalar per-sample loop -- and compares both
    against the stored column (denormalized).  True when the worst absolute
    deviation is below 1e-10.
    """
    if codebook.scheme != "sims":
        raise ValueError("Kronecker identity applies to SIMS codebooks only")
    params, root = codebook.params, codebook.root
    k, n = params.k, params.n_sf
    if not 0 <= l < codebook.num_codewords:
        raise ValueError("codeword index out of range")
    d = codebook.amplitudes.d
    q = root.values
    phase = 2.0 * np.pi / k * params.f0_theta

    # (a) stacked spreading vector, then block-diagonal multiply
    shifted = np.roll(q, l)
    c_stack = np.exp(
        1j * phase * np.outer(shifted, np.arange(k))
    ).ravel()
    block_diag = np.kron(np.eye(n), np.diag(d))
    s_a = block_diag @ c_stack

    # (b) direct scalar evaluation
    s_b = np.empty(k * n, dtype=np.complex128)
    for chip in range(n):
        qv = q[(chip - l) % n]
        for sub in range(k):
            s_b[chip * k + sub] = d[sub] * np.exp(1j * phase * qv * sub)

    stored_raw = codebook.codewords[:, l] / codebook.scales[l]
    dev = max(
        np.max(np.abs(s_a - s_b)),
        np.max(np.abs(stored_raw - s_b)),
    )
    return bool(dev < 1e-10)


def build_multiuser(
    roots: list,
    params: WaveformParams,
    amplitudes: AmplitudeProfile | None = None,
) -> MultiUserCodebook:
    """One SIMS codebook per root under shared waveform parameters."""
    if len(roots) < 2:
        raise ValueError("need >= 2 users")
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if roots[i] == roots[j]:
                raise ValueError("codebook collision: duplicate roots")
    return MultiUserCodebook([build_sims(r, params, amplitudes) for r in roots])


def codebook_to_json(cb: Codebook, include_samples: bool = False) -> str:
    doc = {
        "scheme": cb.scheme,
        "params": cb.params.to_json_dict(),
        "amplitudes": [[float(v.real), float(v.imag)] for v in cb.amplitudes.d],
        "root": cb.root.to_json_dict() if cb.root is not None else None,
    }
    if include_samples:
        doc["samples"] = [
            [[float(v.real), float(v.imag)] for v in cb.codewords[:, l]]
            for l in range(cb.num_codewords)
        ]
    return json.dumps(doc)


def codebook_from_json(s: str) -> Codebook:
    doc = json.loads(s)
    params = WaveformParams(**doc["params"])
    amp = AmplitudeProfile(np.array([complex(re, im) for re, im in doc["amplitudes"]]))
    scheme = doc["scheme"]
    if scheme == "sims":
        root = RootSequence.from_json_dict(doc["root"])
        return build_sims(root, params, amp)
    if scheme == "fsk":
        return build_fsk(params, amp)
    if scheme == "css":
        return build_css(params, amp)
    raise ValueError(f"unknown scheme {scheme!r}")
