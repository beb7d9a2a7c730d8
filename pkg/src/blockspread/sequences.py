"""Root spreading sequence generators and correlation analysis.

Spreading codebooks are seeded by a root sequence of subcarrier indices
q(n) in [0, K).  This module generates roots from classic binary families
(m-sequences, Gold codes), quantized Zadoff-Chu phase ramps, or a seeded
uniform PRNG, and measures their correlation and coherence properties.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("mseq", "gold", "zc-quantized", "uniform")

# Direct-sum correlation below this length, FFT above.
_FFT_THRESHOLD = 64


@dataclass
class RootSequence:
    """Integer-valued spreading root: values q(n) in [0, alphabet_size).

    Regenerating with identical provenance yields an identical sequence;
    generators are keyed by explicit seeds/parameters only.
    """

    values: np.ndarray
    alphabet_size: int
    family: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.int64)
        if self.alphabet_size < 2:
            raise ValueError("alphabet_size must be >= 2")
        if self.values.ndim != 1 or self.values.size == 0:
            raise ValueError("values must be a nonempty 1-D vector")
        if self.values.min() < 0 or self.values.max() >= self.alphabet_size:
            raise ValueError("sequence values must lie in [0, alphabet_size)")
        n = self.values.size
        if n & (n - 1):
            # spreading use requires 2**SF chips; codebook builders reject,
            # but intermediate (e.g. full-period LFSR) lengths are legal here
            warnings.warn(
                f"root length {n} is not a power of two; "
                "not usable as a spreading root",
                stacklevel=2,
            )

    def __len__(self) -> int:
        return self.values.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, RootSequence):
            return NotImplemented
        return (
            self.alphabet_size == other.alphabet_size
            and np.array_equal(self.values, other.values)
        )

    def to_json_dict(self) -> dict:
        return {
            "family": self.family,
            "params": self.provenance,
            "K": self.alphabet_size,
            "N_SF": int(self.values.size),
            "values": [int(v) for v in self.values],
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "RootSequence":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            seq = cls(
                values=np.asarray(d["values"], dtype=np.int64),
                alphabet_size=int(d["K"]),
                family=d["family"],
                provenance=dict(d.get("params", {})),
            )
        if len(seq) != int(d["N_SF"]):
            raise ValueError("N_SF field does not match values length")
        return seq

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json(cls, s: str) -> "RootSequence":
        return cls.from_json_dict(json.loads(s))


@dataclass
class CorrelationProfile:
    """Normalized circular cross-correlation over all lags.

    normalization records the denominator convention: "energy" divides by
    ||a|| * ||b||, "length" divides by the vector length.
    """

    lags: np.ndarray
    values: np.ndarray
    normalization: str


def generate_msequence(poly: int, seed: int, length: int) -> np.ndarray:
    """LFSR output stream for the primitive polynomial given as a bit mask.

    The mask includes the leading term: x^3 + x + 1 -> 0b1011.  A Fibonacci
    register is stepped ``length`` times; when length exceeds the period
    2^r - 1 the stream continues cyclically.  The polynomial is not checked
    for primitivity; a non-primitive mask silently yields a shorter period.
    """
    if poly < 0b11:
        raise ValueError("polynomial mask must have degree >= 1")
    degree = poly.bit_length() - 1
    if seed == 0:
        raise ValueError("degenerate LFSR state")
    if length < 1:
        raise ValueError("length must be >= 1")
    taps = poly & ((1 << degree) - 1)
    state = seed & ((1 << degree) - 1)
    if state == 0:
        raise ValueError("degenerate LFSR state")
    out = np.empty(length, dtype=np.int64)
    for i in range(length):
        out[i] = state & 1
        fb = (state & taps).bit_count() & 1
        state = (state >> 1) | (fb << (degree - 1))
    return out


def generate_gold(poly_a: int, poly_b: int, shift: int, length: int) -> np.ndarray:
    """Gold sequence: XOR of one m-sequence with a rotated preferred partner.

    Both registers start from state 1.  ``shift`` rotates the second
    m-sequence within its period before the XOR.
    """
    deg_a = poly_a.bit_length() - 1
    deg_b = poly_b.bit_length() - 1
    if deg_a != deg_b:
        raise ValueError(f"polynomial degrees differ ({deg_a} vs {deg_b})")
    period = (1 << deg_a) - 1
    if not 0 <= shift < period:
        raise ValueError(f"shift must lie in [0, {period})")
    a = generate_msequence(poly_a, 1, period)
    b = generate_msequence(poly_b, 1, period)
    g = a ^ np.roll(b, -shift)
    reps = -(-length // period)
    return np.tile(g, reps)[:length]


def binary_to_kary(
    bits: np.ndarray,
    k: int,
    family: str = "mseq",
    provenance: dict | None = None,
) -> RootSequence:
    """Group log2(k) consecutive bits, MSB first, into one K-ary symbol.

    Leftover bits that do not fill a symbol are dropped with a warning.
    """
    if k < 2 or k & (k - 1):
        raise ValueError("K must be a power of two >= 2")
    if family not in FAMILIES:
        raise ValueError(f"family must be one of {FAMILIES}")
    bits = np.asarray(bits, dtype=np.int64)
    m = k.bit_length() - 1
    n_sym = bits.size // m
    if n_sym == 0:
        raise ValueError("not enough bits for a single symbol")
    if bits.size % m:
        warnings.warn(f"truncating {bits.size % m} leftover bits", stacklevel=2)
    groups = bits[: n_sym * m].reshape(n_sym, m)
    weights = 1 << np.arange(m - 1, -1, -1)
    values = groups @ weights
    return RootSequence(values, k, family, provenance or {"mapping": "msb-first"})


def generate_zc_quantized(u: int, n_sf: int, k: int) -> RootSequence:
    """Zadoff-Chu phase ramp quantized to k integer levels.

    q(n) = floor(k * frac(u*n*(n+1) / (2*n_sf))) mod k, evaluated in exact
    integer arithmetic.  Requires gcd(u, n_sf) = 1.
    """
    if math.gcd(u, n_sf) != 1:
        raise ValueError(f"gcd(u={u}, n_sf={n_sf}) must be 1")
    n = np.arange(n_sf, dtype=object)
    num = (u * n * (n + 1)) % (2 * n_sf)
    values = np.array([(k * int(x)) // (2 * n_sf) % k for x in num], dtype=np.int64)
    return RootSequence(values, k, "zc-quantized", {"u": u, "n_sf": n_sf, "k": k})


def generate_random_root(seed: int, n_sf: int, k: int) -> RootSequence:
    """I.i.d. uniform values in [0, k) from a seeded PCG64 stream.

    The same seed yields the same sequence on any platform.
    """
    rng = np.random.default_rng(seed)
    values = rng.integers(0, k, size=n_sf, dtype=np.int64)
    return RootSequence(values, k, "uniform", {"seed": seed, "n_sf": n_sf, "k": k})


def cyclic_shift(seq: RootSequence, l: int) -> RootSequence:
    """Shifted root: output(n) = input((n - l) mod N)."""
    n = len(seq)
    if not 0 <= l < n:
        raise ValueError(f"shift must lie in [0, {n})")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return RootSequence(
            np.roll(seq.values, l),
            seq.alphabet_size,
            seq.family,
            {**seq.provenance, "shift": l},
        )


def _circular_correlation_direct(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    n = a.size
    return np.array(
        [np.sum(a * np.conj(np.roll(b, lag))) for lag in range(n)]
    )


def _circular_correlation_fft(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.fft.fft(a) * np.conj(np.fft.fft(b)))


def cross_correlation_profile(
    a: np.ndarray,
    b: np.ndarray,
    normalization: str = "energy",
) -> CorrelationProfile:
    """Normalized circular cross-correlation of a against b at every lag.

    values[lag] = sum_n a[n] * conj(b[(n - lag) mod N]) / denom.  Lengths
    above 64 go through the FFT; shorter inputs use the direct sum.  Both
    paths agree to 1e-9 relative.
    """
    a = np.asarray(a, dtype=np.complex128).ravel()
    b = np.asarray(b, dtype=np.complex128).ravel()
    if a.size != b.size:
        raise ValueError(f"length mismatch: {a.size} vs {b.size}")
    if normalization == "energy":
        denom = np.linalg.norm(a) * np.linalg.norm(b)
    elif normalization == "length":
        denom = float(a.size)
    else:
        raise ValueError(f"unknown normalization {normalization!r}")
    if denom == 0:
        raise ValueError("zero-energy input")
    if a.size > _FFT_THRESHOLD:
        raw = _circular_correlation_fft(a, b)
    else:
        raw = _circular_correlation_direct(a, b)
    return CorrelationProfile(np.arange(a.size), raw / denom, normalization)


def _sample_pairs(num_items: int, num_pairs: int, rng) -> tuple[np.ndarray, np.ndarray]:
    """Distinct unordered index pairs, without replacement when feasible."""
    total = num_items * (num_items - 1) // 2
    if total <= 10**7 and num_pairs <= total:
        flat = rng.choice(total, size=num_pairs, replace=False)
    else:
        flat = rng.integers(0, total, size=num_pairs)
    # triangular decode: flat = i*(2*num_items - i - 1)/2 + (j - i - 1)
    i = (
        num_items
        - 2
        - np.floor(
            np.sqrt(-8.0 * flat + 4 * num_items * (num_items - 1) - 7) / 2.0 - 0.5
        )
    ).astype(np.int64)
    j = (flat + i + 1 - i * (2 * num_items - i - 1) // 2).astype(np.int64)
    return i, j


def empirical_tail(
    codebook,
    epsilon: float,
    num_pairs: int,
    seed: int,
    centered: bool = True,
) -> float:
    """Estimate Pr(|Z| >= epsilon) over sampled distinct codeword pairs.

    Z is the inner product of the (unit-energy) codewords.  Chip-structured
    spreading codewords share a deterministic baseline correlation: the
    zero-frequency sample of every chip matches regardless of sequence
    values, giving |d[0]|^2 / ||d||^2 (1/K for a flat profile) on every
    pair.  That baseline is common to all pairs, so codeword
    distinguishability is limited by the dispersion about it; with
    ``centered=True`` (default) it is subtracted before thresholding, which
    is the statistic the concentration bound in ``theory`` addresses.
    ``centered=False`` thresholds the raw magnitude.  FSK and CSS codebooks
    are orthogonal by construction and have zero baseline.
    """
    if epsilon <= 0:
        raise ValueError("epsilon must be > 0")
    if num_pairs < 1:
        raise ValueError("num_pairs must be >= 1")
    num = codebook.num_codewords
    if num < 2:
        raise ValueError("codebook must hold >= 2 codewords")
    rng = np.random.default_rng(seed)
    i, j = _sample_pairs(num, num_pairs, rng)
    cw = codebook.codewords
    z = np.einsum("ij,ij->j", np.conj(cw[:, i]), cw[:, j])
    if centered:
        z = z - codebook.baseline_correlation
    return float(np.mean(np.abs(z) >= epsilon))


def coherence(sequences, lags: str = "all") -> float:
    """Maximum pairwise |inner product| over distinct unit-normalized vectors.

    lags="all" (default) also scans every cyclic lag, matching asynchronous
    reception where arbitrary shifts of one family member interfere with
    another; lags="zero" restricts to aligned pairs.
    """
    seqs = [np.asarray(s, dtype=np.complex128).ravel() for s in sequences]
    if len(seqs) < 2:
        raise ValueError("need >= 2 sequences")
    n = seqs[0].size
    if any(s.size != n for s in seqs):
        raise ValueError("sequences must share a common length")
    mat = np.vstack(seqs)
    norms = np.linalg.norm(mat, axis=1, keepdims=True)
    if np.any(norms == 0):
        raise ValueError("zero-energy sequence")
    mat = mat / norms
    if lags == "zero":
        gram = np.abs(mat @ mat.conj().T)
        np.fill_diagonal(gram, 0.0)
        return float(gram.max())
    if lags != "all":
        raise ValueError(f"unknown lags mode {lags!r}")
    spectra = np.fft.fft(mat, axis=1)
    best = 0.0
    for a in range(len(seqs)):
        for b in range(a + 1, len(seqs)):
            corr = np.fft.ifft(spectra[a] * np.conj(spectra[b]))
            best = max(best, float(np.abs(corr).max()))
    return best
