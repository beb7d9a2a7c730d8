"""Seeded Monte Carlo BER experiments and result persistence.

Determinism contract: every trial draws from its own generator keyed by
(master_seed, snr_index, trial_index), and error counts accumulate as
integers, so results are identical for any worker count or schedule.  The
early-stop rule is evaluated only at fixed batch boundaries, which keeps
the set of executed trials schedule-independent too.
"""

from __future__ import annotations

import csv
import dataclasses
import datetime
import hashlib
import json
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import channel as ch
from . import modem, theory
from .codebook import (
    Codebook,
    WaveformParams,
    build_css,
    build_fsk,
    build_sims,
)
from .sequences import empirical_tail, generate_random_root

__version__ = "0.1.0"

logger = logging.getLogger(__name__)

# Trials per stop-rule checkpoint; fixed so early stopping is independent
# of the worker count.
BATCH_SIZE = 1024

CSV_COLUMNS = (
    "scheme",
    "sf",
    "k",
    "channel",
    "rho",
    "fading",
    "users",
    "snr_db",
    "trials",
    "bit_errors",
    "ber",
    "ci_lo",
    "ci_hi",
    "seed",
)


@dataclass
class SimConfig:
    """One BER experiment: scheme, channel, SNR grid, and seeding.

    snr_grid_db supplies Es/N0 per grid point and overrides the value held
    by the channel spec; a grid point of +inf disables noise.  root_seeds
    assigns one spreading root per user (defaults to 1..users); they are a
    system design choice, deliberately independent of master_seed, which
    keys only the random trials.  stop_rule ends a grid point once that
    many bit errors have accumulated (checked at batch boundaries).
    """

    scheme: str
    sf: int
    k: int
    channel: ch.ChannelSpec
    snr_grid_db: tuple
    trials_per_point: int = 100_000
    users: int = 1
    offsets_mode: str = "uniform"
    master_seed: int = 0
    root_family: str = "uniform"
    root_seeds: tuple | None = None
    stop_rule: int | None = 200

    def __post_init__(self):
        if self.scheme not in ("sims", "fsk", "css"):
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.snr_grid_db = tuple(float(s) for s in self.snr_grid_db)
        if len(self.snr_grid_db) == 0:
            raise ValueError("empty SNR grid")
        if any(b <= a for a, b in zip(self.snr_grid_db, self.snr_grid_db[1:])):
            raise ValueError("SNR grid must be strictly increasing")
        if self.trials_per_point < 1:
            raise ValueError("trials_per_point must be >= 1")
        if self.users < 1:
            raise ValueError("users must be >= 1")
        if self.offsets_mode not in ch.OFFSET_MODES:
            raise ValueError(f"unknown offsets mode {self.offsets_mode!r}")
        if self.stop_rule is not None and self.stop_rule < 1:
            raise ValueError("stop_rule must be >= 1 or None")
        if self.root_seeds is None:
            self.root_seeds = tuple(range(1, self.users + 1))
        else:
            self.root_seeds = tuple(int(s) for s in self.root_seeds)
        if len(self.root_seeds) != self.users:
            raise ValueError("need one root seed per user")

    def to_json_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["channel"] = self.channel.to_json_dict()
        d["snr_grid_db"] = list(self.snr_grid_db)
        d["root_seeds"] = list(self.root_seeds)
        return d

    def config_hash(self) -> str:
        canon = json.dumps(self.to_json_dict(), sort_keys=True)
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass
class BerPoint:
    snr_db: float
    trials: int
    bit_errors: int
    ber: float
    ci_lo: float
    ci_hi: float
    per_user_bit_errors: tuple | None = None
    # bit errors arrive in bursts (one block error flips several bits), so
    # interval statistics should be computed on the block-level count
    symbol_errors: int = 0


@dataclass
class BerCurve:
    points: list
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "metadata": self.metadata,
            "points": [dataclasses.asdict(p) for p in self.points],
        }

    def snr_at_ber(self, target: float) -> float:
        """SNR (dB) where the curve crosses ``target``, by log-linear
        interpolation between the bracketing grid points."""
        pts = [(p.snr_db, p.ber) for p in self.points if p.ber > 0]
        if len(pts) < 2:
            raise ValueError("not enough nonzero points to interpolate")
        logt = math.log10(target)
        for (s0, b0), (s1, b1) in zip(pts, pts[1:]):
            l0, l1 = math.log10(b0), math.log10(b1)
            if (l0 - logt) * (l1 - logt) <= 0 and l0 != l1:
                return s0 + (s1 - s0) * (l0 - logt) / (l0 - l1)
        raise ValueError(f"curve does not cross BER {target}")


def wilson_interval(errors: int, n: int, z: float = 1.96) -> tuple:
    """Wilson score interval for a binomial proportion; robust at low counts."""
    if n < 1:
        raise ValueError("n must be >= 1")
    p = errors / n
    denom = 1.0 + z * z / n
    center = (p + z * z / (2.0 * n)) / denom
    half = z * math.sqrt(p * (1.0 - p) / n + z * z / (4.0 * n * n)) / denom
    # containment of the point estimate survives rounding at p = 0 or 1
    return max(0.0, min(center - half, p)), min(1.0, max(center + half, p))


def build_codebooks(config: SimConfig) -> list:
    """One codebook per user from the configured scheme and roots."""
    params = WaveformParams(k=config.k, sf=config.sf)
    if config.scheme == "fsk":
        cb = build_fsk(params)
    elif config.scheme == "css":
        cb = build_css(params)
    else:
        cb = None
    if config.scheme in ("fsk", "css"):
        if config.users > 1:
            raise ValueError(
                "multi-user codebooks require per-user roots (scheme sims)"
            )
        return [cb]
    roots = [
        generate_random_root(seed, params.n_sf, params.k)
        for seed in config.root_seeds
    ]
    for i in range(len(roots)):
        for j in range(i + 1, len(roots)):
            if roots[i] == roots[j]:
                raise ValueError("codebook collision: duplicate roots")
    return [build_sims(r, params) for r in roots]


class _TrialRunner:
    """Per-point trial executor shared by the single- and multi-user paths."""

    def __init__(self, config: SimConfig, codebooks: list, snr_idx: int):
        self.config = config
        self.codebooks = codebooks
        self.snr_idx = snr_idx
        snr_db = config.snr_grid_db[snr_idx]
        self.sigma2 = ch.noise_variance(1.0, snr_db)
        self.spec = dataclasses.replace(config.channel, es_n0_db=snr_db)
        self.nb = codebooks[0].bits_per_codeword
        self.length = codebooks[0].codeword_length
        self.two_tap = config.channel.model == "two-tap"
        self.pow2 = 1 << np.arange(self.nb, dtype=np.int64)
        self.z_dump = []

    def _rng(self, trial: int):
        return np.random.default_rng(
            [self.config.master_seed, self.snr_idx, trial]
        )

    def _detect_two_tap(self, cb, y, taps):
        # Tap combining needs decorrelated fingers to pay off; without
        # per-tap fading the static two-tap response is handled by the
        # plain codebook correlator, which is also what keeps the chirp
        # family's delay alias visible (shifted chirps re-align with a
        # neighboring codeword, so matched-to-channel combining would hide
        # exactly the degradation under study).
        if self.config.channel.fading:
            return modem.detect_mrc_two_tap(cb, y, taps)
        return modem.detect(cb, y[: cb.codeword_length])

    def run_single(self, trial: int, keep_z: bool = False) -> int:
        cb = self.codebooks[0]
        rng = self._rng(trial)
        bits = rng.integers(0, 2, size=self.nb)
        idx = int(bits @ self.pow2)
        x = cb.codewords[:, idx]
        y, real = ch.apply(self.spec, x, rng)
        if self.two_tap:
            res = self._detect_two_tap(cb, y, real.taps)
        else:
            res = modem.detect(cb, y)
        if keep_z:
            self.z_dump.append(res.z.tolist())
        return (idx ^ res.best_index).bit_count()

    def run_multi(self, trial: int) -> np.ndarray:
        cfg = self.config
        m = cfg.users
        rng = self._rng(trial)
        bits = rng.integers(0, 2, size=(m, self.nb))
        idxs = bits @ self.pow2
        waveforms = [
            self.codebooks[u].codewords[:, int(idxs[u])] for u in range(m)
        ]
        offsets = ch.draw_offsets(m, cfg.offsets_mode, self.length, rng)
        if cfg.channel.model == "rayleigh":
            waveforms = [ch.rayleigh_tap(rng) * w for w in waveforms]
            taps = None
        elif self.two_tap:
            taps = [ch.two_tap_taps(cfg.channel.rho, cfg.channel.fading, rng) for _ in range(m)]
            waveforms = [np.convolve(w, t) for w, t in zip(waveforms, taps)]
        else:
            taps = None
        y = ch.superpose_async(waveforms, offsets)
        y = ch.add_noise(y, self.sigma2, rng)
        win = self.length + 1 if self.two_tap else self.length
        errors = np.zeros(m, dtype=np.int64)
        for u in range(m):
            block = y[offsets[u] : offsets[u] + win]
            if self.two_tap:
                res = self._detect_two_tap(self.codebooks[u], block, taps[u])
            else:
                res = modem.detect(self.codebooks[u], block)
            errors[u] = (int(idxs[u]) ^ res.best_index).bit_count()
        return errors

    def run_range(self, start: int, end: int) -> np.ndarray:
        """Error counts for trials [start, end): [block_errors,
        total_bit_errors, per-user bit errors...]; order-free to sum."""
        m = self.config.users
        if m == 1:
            sym = 0
            bits = 0
            for t in range(start, end):
                e = self.run_single(t)
                bits += e
                sym += e > 0
            return np.array([sym, bits, bits], dtype=np.int64)
        totals = np.zeros(m, dtype=np.int64)
        sym = 0
        for t in range(start, end):
            e = self.run_multi(t)
            totals += e
            sym += int(np.count_nonzero(e))
        return np.concatenate(([sym, totals.sum()], totals))


def _run_point(
    config: SimConfig,
    codebooks: list,
    snr_idx: int,
    workers: int,
    executor,
    dump_z: bool,
) -> tuple:
    runner = _TrialRunner(config, codebooks, snr_idx)
    m = config.users
    counts = np.zeros(2 + m, dtype=np.int64)  # [symbol, bit, per-user bit...]
    done = 0
    if dump_z and m == 1:
        # deterministic trace: the first trials of the point
        for t in range(min(8, config.trials_per_point)):
            runner.run_single(t, keep_z=True)
    while done < config.trials_per_point:
        batch = min(BATCH_SIZE, config.trials_per_point - done)
        if workers <= 1 or batch < 2 * workers:
            counts += runner.run_range(done, done + batch)
        else:
            bounds = np.linspace(done, done + batch, workers + 1).astype(int)
            futures = [
                executor.submit(runner.run_range, int(a), int(b))
                for a, b in zip(bounds[:-1], bounds[1:])
                if b > a
            ]
            for f in futures:
                counts += f.result()
        done += batch
        if config.stop_rule is not None and int(counts[1]) >= config.stop_rule:
            break
    nb = runner.nb
    errors = int(counts[1])
    n_bits = done * m * nb
    ci_lo, ci_hi = wilson_interval(errors, n_bits)
    snr_db = config.snr_grid_db[snr_idx]
    logger.info(
        "point snr=%.2f dB (eb_n0=%.2f dB): trials=%d errors=%d ber=%.3e",
        snr_db,
        snr_db - 10.0 * math.log10(nb),
        done,
        errors,
        errors / n_bits,
    )
    return BerPoint(
        snr_db=snr_db,
        trials=done,
        bit_errors=errors,
        ber=errors / n_bits,
        ci_lo=ci_lo,
        ci_hi=ci_hi,
        per_user_bit_errors=tuple(int(e) for e in counts[2:]) if m > 1 else None,
        symbol_errors=int(counts[0]),
    ), runner.z_dump


def run_ber(config: SimConfig, workers: int = 1, dump_z_path: str | None = None) -> BerCurve:
    """Monte Carlo BER over the configured SNR grid.

    Per trial: draw a bit block per user, modulate at unit block energy,
    pass through the channel at the grid SNR, detect (FFT path when the
    codebook supports it; in the two-tap channel, tap combining under
    per-tap fading and the plain codebook correlator otherwise), and count
    bit errors against the transmitted block.  With several users the
    reported BER is the per-user average and noise is added once to the
    asynchronous superposition.
    """
    codebooks = build_codebooks(config)
    points = []
    dumps = {}
    executor = (
        ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    )
    try:
        for snr_idx in range(len(config.snr_grid_db)):
            point, zs = _run_point(
                config,
                codebooks,
                snr_idx,
                workers,
                executor,
                dump_z_path is not None,
            )
            points.append(point)
            if dump_z_path is not None:
                dumps[str(config.snr_grid_db[snr_idx])] = zs
    finally:
        if executor is not None:
            executor.shutdown()
    if dump_z_path is not None:
        with open(dump_z_path, "w") as fh:
            json.dump(dumps, fh)
    metadata = {
        "scheme": config.scheme,
        "sf": config.sf,
        "k": config.k,
        "channel": config.channel.to_json_dict(),
        "users": config.users,
        "offsets_mode": config.offsets_mode,
        "master_seed": config.master_seed,
        "root_seeds": list(config.root_seeds),
        "stop_rule": config.stop_rule,
        "trials_per_point": config.trials_per_point,
        "config_hash": config.config_hash(),
        "version": __version__,
        "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
    }
    return BerCurve(points=points, metadata=metadata)


def run_mu_ber(config: SimConfig, workers: int = 1) -> BerCurve:
    """Multi-user BER: per-user average with a per-user error breakdown on
    every point.  A degenerate single-user config reduces to run_ber
    exactly."""
    return run_ber(config, workers=workers)


def run_xcorr_study(
    codebook: Codebook, eps_grid, num_pairs: int, seed: int
) -> list:
    """Empirical correlation tails next to their analytic bound.

    One row per epsilon: the measured Pr(|Z| >= eps) over sampled codeword
    pairs and the concentration bound at the codebook's amplitude level.
    """
    eps_grid = [float(e) for e in eps_grid]
    if len(eps_grid) == 0:
        raise ValueError("empty epsilon grid")
    d = np.abs(codebook.amplitudes.d)
    a_max = float(codebook.params.k * d.max() ** 2 / np.sum(d**2))
    rows = []
    for eps in eps_grid:
        rows.append(
            {
                "eps": eps,
                "empirical_tail": empirical_tail(codebook, eps, num_pairs, seed),
                "bernstein_bound": theory.bernstein_tail_single(
                    codebook.params.k, codebook.params.n_sf, a_max, eps
                ),
            }
        )
    return rows


def _curve_rows(curve: BerCurve) -> list:
    md = curve.metadata
    rows = []
    for p in curve.points:
        rows.append(
            {
                "scheme": md["scheme"],
                "sf": md["sf"],
                "k": md["k"],
                "channel": md["channel"]["model"],
                "rho": md["channel"]["rho"],
                "fading": md["channel"]["fading"],
                "users": md["users"],
                "snr_db": p.snr_db,
                "trials": p.trials,
                "bit_errors": p.bit_errors,
                "ber": p.ber,
                "ci_lo": p.ci_lo,
                "ci_hi": p.ci_hi,
                "seed": md["master_seed"],
            }
        )
    return rows


def emit(curve: BerCurve, path: str, format: str = "csv") -> None:
    """Persist a curve; CSV columns are fixed, JSON mirrors them plus
    metadata.  Floats are written in shortest round-trip form."""
    if format == "csv":
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CSV_COLUMNS)
            for row in _curve_rows(curve):
                writer.writerow(
                    [
                        repr(row[c]) if isinstance(row[c], float) else row[c]
                        for c in CSV_COLUMNS
                    ]
                )
    elif format == "json":
        doc = curve.to_json_dict()
        doc["rows"] = _curve_rows(curve)
        with open(path, "w") as fh:
            json.dump(doc, fh, indent=1)
    else:
        raise ValueError(f"unknown format {format!r}")


def load_results(path: str) -> list:
    """Rows written by emit, with numeric types restored exactly."""
    if path.endswith(".json"):
        with open(path) as fh:
            return json.load(fh)["rows"]
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        rows = []
        for raw in reader:
            rows.append(
                {
                    "scheme": raw["scheme"],
                    "sf": int(raw["sf"]),
                    "k": int(raw["k"]),
                    "channel": raw["channel"],
                    "rho": float(raw["rho"]),
                    "fading": raw["fading"] == "True",
                    "users": int(raw["users"]),
                    "snr_db": float(raw["snr_db"]),
                    "trials": int(raw["trials"]),
                    "bit_errors": int(raw["bit_errors"]),
                    "ber": float(raw["ber"]),
                    "ci_lo": float(raw["ci_lo"]),
                    "ci_hi": float(raw["ci_hi"]),
                    "seed": int(raw["seed"]),
                }
            )
        return rows
