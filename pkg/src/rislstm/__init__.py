"""Pilot-driven RIS codeword selection for mmWave MIMO with a from-scratch LSTM."""

from .baselines import (
    SearchOutcome,
    alternating_optimization,
    exhaustive_search,
    near_optimal_label_set,
    random_selection,
)
from .codebook import Codebook, apply_hardware_model, build_codebook, build_ideal_codebook, quantized_angles
from .precoding import rate_for_channel, spectral_efficiency, svd_precoder
from .sysmodel import (
    ChannelPair,
    RisConfig,
    SystemConfig,
    amplitude_model,
    dbm_to_watts,
    desk_config,
    effective_channel,
    path_loss_linear,
    ris_config_from_phases,
    sample_channels,
    steering_vector,
)

__version__ = "0.1.0"
