"""antnav: insect-inspired point-goal navigation workbench.

A closed-loop agent pairing a sparse associative visual memory with an
angular steering controller, embodied in a deterministic 2D simulator with
discrete and continuous motion regimes, plus the benchmark harness (episodes,
trials, SPL metrics, ablations, difficulty scoring) used to evaluate it.
"""

from .scene import (
    EpisodeSpec,
    Pose,
    Scene,
    SceneFormatError,
    SceneGenerationError,
    complexity_ratio,
    generate_scene,
    geodesic_distance,
    load_scene,
    make_episode,
    save_scene,
    wrap_angle,
)
from .render import CameraConfig, cast_rays, dog_filter, preprocess, render_view
from .mb import MBONOutput, MBParams, MushroomBody, opposite
from .cx import CXState, SteeringController, goal_bearing, modulation
from .sim import (
    CollisionEvent,
    ContinuousState,
    Perturbation,
    RobotSpec,
    controller_map,
    lognormal_draw,
    step_continuous,
    step_discrete,
)
from .harness import (
    AgentConfig,
    EpisodeResult,
    SuiteConfig,
    SuiteEpisode,
    SuiteResult,
    TrialResult,
    compute_spl,
    difficulty,
    run_episode,
    run_suite,
    run_trial,
    summary_csv,
    write_outputs,
)

__version__ = "0.1.0"

__all__ = [
    "AgentConfig",
    "CameraConfig",
    "CollisionEvent",
    "ContinuousState",
    "CXState",
    "EpisodeResult",
    "EpisodeSpec",
    "MBONOutput",
    "MBParams",
    "MushroomBody",
    "Perturbation",
    "Pose",
    "RobotSpec",
    "Scene",
    "SceneFormatError",
    "SceneGenerationError",
    "SteeringController",
    "SuiteConfig",
    "SuiteEpisode",
    "SuiteResult",
    "TrialResult",
    "cast_rays",
    "complexity_ratio",
    "compute_spl",
    "controller_map",
    "difficulty",
    "dog_filter",
    "generate_scene",
    "geodesic_distance",
    "goal_bearing",
    "load_scene",
    "lognormal_draw",
    "make_episode",
    "modulation",
    "opposite",
    "preprocess",
    "render_view",
    "run_episode",
    "run_suite",
    "run_trial",
    "save_scene",
    "step_continuous",
    "step_discrete",
    "summary_csv",
    "wrap_angle",
    "write_outputs",
]
