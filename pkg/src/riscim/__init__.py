"""Link-level simulator for RIS-assisted mmWave cluster index modulation."""
from .arrays import Angle2D, ArrayGeometry, steering_matrix, steering_vector
from .channel import ChannelRealization, LinkSetup, PathLossParams, path_loss_db
from .codebook import CimCodebook, build_bgcs_codebook, build_codebook
from .config import ConfigError, SimConfig, load_config
from .signal_chain import SingularWhiteningError, build_whitening, ml_detect, modulate, transmit
from .simulate import (
    aber_upper_bound,
    emit_csv,
    run_array_sweep,
    run_curve,
    run_perturbation_sweep,
    run_sparsity_sweep,
)
from .theory import BerCurve, cpep_correct, cpep_erroneous

__version__ = "0.1.0"
