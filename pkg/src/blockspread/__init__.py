"""blockspread: block-transmission PHY with sequence-index spreading.

Codebook construction (SIMS, FSK, CSS), FFT matched-filter detection,
channel models, closed-form BER references, and a seeded Monte Carlo
harness.
"""

from .channel import ChannelRealization, ChannelSpec, apply, draw_offsets, superpose_async
from .codebook import (
    AmplitudeProfile,
    Codebook,
    MultiUserCodebook,
    WaveformParams,
    build_css,
    build_fsk,
    build_multiuser,
    build_sims,
    codebook_from_json,
    codebook_to_json,
    verify_kronecker,
)
from .harness import (
    BerCurve,
    BerPoint,
    SimConfig,
    emit,
    load_results,
    run_ber,
    run_mu_ber,
    run_xcorr_study,
    wilson_interval,
)
from .modem import (
    DetectionResult,
    detect,
    detect_direct,
    detect_fft,
    detect_mrc_two_tap,
    detect_multiuser,
    map_bits,
    modulate,
    unmap_index,
)
from .sequences import (
    CorrelationProfile,
    RootSequence,
    binary_to_kary,
    coherence,
    cross_correlation_profile,
    cyclic_shift,
    empirical_tail,
    generate_gold,
    generate_msequence,
    generate_random_root,
    generate_zc_quantized,
)
from .theory import (
    ber_awgn_approx,
    ber_awgn_exact,
    ber_rayleigh_approx,
    ber_rayleigh_exact,
    bernstein_tail_cross,
    bernstein_tail_single,
    harmonic,
    mui_bound,
    processing_gain_db,
    q_function,
    welch_bound,
)

__version__ = "0.1.0"
