"""Dialogue separation post-processing by signal component reassignment.

Background components that leak into a separated dialogue track are moved
back to the background whenever the separated energy and a voice activity
detector agree that no dialogue is present. The package also derives a
refined VAD from the cleaned dialogue and ships an evaluation harness.
"""

from .activity import (
    ScrParams,
    binarize_below,
    fill_gaps,
    gate_small,
    rms_envelope,
    smooth_zero_phase,
    threshold_for,
)
from .config import Config, load_config, load_params
from .metrics import VadAccuracyReport, loudness_normalize, si_sdr, vad_accuracy
from .scr import (
    METHODS,
    apply_reassignment,
    compute_gain,
    gain_direct,
    gain_oracle,
    gain_probability,
    gain_smoothed_vad,
    gain_threshold,
    remix,
    rescale_probability,
)
from .signal import (
    BinaryActivity,
    Envelope,
    GainSignal,
    ProbabilitySignal,
    SampleBuffer,
    downmix_mono,
    resample_probability,
)
from .synth import ScenarioSpec, gen_scenario
from .vad import binarize_probability, energy_vad, oracle_vad, refined_vad

__version__ = "0.1.0"
