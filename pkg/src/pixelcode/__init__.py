"""Antenna coding with pixel antennas: multiport network model, beamspace
channels, binary coder optimization, codebook training, and MIMO capacity."""

__version__ = "0.1.0"

from ._kernels import HAVE_NATIVE, backend_name
from .analysis import (
    CombinerResult,
    PatternBasis,
    codebook_correlation,
    equivalent_combiner,
    gain_upper_bound,
    pattern_spectrum,
    pattern_svd,
)
from .beamspace import isotropic_pattern, mimo_channel, sample_virtual_channel, siso_channel
from .capacity import (
    CodingDesign,
    PowerAllocation,
    capacity_uniform,
    capacity_waterfilling,
    optimize_coding,
    waterfill,
)
from .codebook import (
    Codebook,
    GlaConfig,
    TrainingSet,
    centroid_update,
    load_codebook,
    partition_training_set,
    save_codebook,
    select_coder,
    train_codebook,
)
from .gain import GainEvaluator, QuadraticGainObjective
from .harness import ExperimentConfig, ResultSet, emit_results, run_experiment
from .model import (
    PixelAntennaModel,
    SynthesisSpec,
    load_model,
    port_currents,
    radiation_pattern,
    save_model,
    synthesize_model,
    validate_model,
)
from .sebo import OptimizationTrace, SeboConfig, exhaustive_maximize, sebo_maximize
