"""Tactile fingertip emulation and adaptive grasp assessment harness."""

from .config import Config, default_config, load_config
from .contact import ContactConfig, ContactVector, calibrate_threshold, contact_vector, detect_contact, sensor_activation
from .control import ControllerParams, JointLimits, adaptation_tick, clamp_target, closing_step, grasp_complete, p_controller
from .fingertips import (
    ContactField,
    FingertipFrame,
    FingertipKind,
    SampleSchedule,
    SensorLayout,
    biotac_layout,
    indentation_to_reading,
    sample_schedule,
    synthesize_frame,
    wts_layout,
)
from .filtering import FilterState, NormalizedFrame, Pipeline, lowpass_step, normalize_delta, pipeline_for
from .fitting import polyfit2
from .objects import ObjectSpec, get_object, object_library
from .plant import GraspOutcome, GraspStatus, HandState, Plant, PlantParams
from .sequence import GraspSequenceEngine, Phase, PhaseState, PreGrasp, run_main_sequence, select_pregrasp
from .shake import ImuSample, PerturbationProfile, imu_read, perturbation_pose
from .experiments import (
    SlipTestResult,
    SweepResult,
    perturbation_weight_sweep,
    slip_resistance_test,
    touch_sensitivity_test,
)

__version__ = "0.1.0"
