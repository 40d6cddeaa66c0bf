"""Episode and trial orchestration, metrics, ablated agent variants,
suite running with deterministic aggregation, and difficulty scoring.

An episode fixes (scene, start pose, goal) and repeats trials of at most 500
frames.  The full agent carries its plastic memory across trials and the
episode ends after a trial that fails to update long-term memory (or at the
trial cap); ablated variants are memoryless and deterministic, so they run a
single trial.  Perturbed runs always execute the full trial count.
"""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .cx import SteeringController, goal_bearing
from .mb import MBONOutput, MBParams, MushroomBody
from .render import CameraConfig, DEFAULT_CAMERA, preprocess, render_view
from .scene import EpisodeSpec, Pose, complexity_ratio, load_scene, make_episode
from .sim import (
    ContinuousState,
    Perturbation,
    RobotSpec,
    controller_map,
    step_continuous,
    step_discrete,
)

VARIANTS = ("full", "odometry_collision", "odometry_only")
REGIMES = ("discrete", "continuous")

MAX_FRAMES = 500
MAX_TRIALS = 20

NEUTRAL_Z = MBONOutput(1.0, 1.0)

# spelling accepted on the CLI -> internal variant name
VARIANT_ALIASES = {
    "full": "full",
    "odom-collision": "odometry_collision",
    "odometry_collision": "odometry_collision",
    "odom-only": "odometry_only",
    "odometry_only": "odometry_only",
}


def compute_spl(success: bool, geodesic_dist: float, path_length: float) -> float:
    """Success weighted by path length: success * l / max(l, p)."""
    if not success:
        return 0.0
    if geodesic_dist <= 0.0:
        return 1.0  # degenerate start-on-goal episode
    return geodesic_dist / max(geodesic_dist, path_length)


def reached_goal(x: float, y: float, goal: tuple[float, float], catchment: float) -> bool:
    """Catchment test, inclusive of the boundary."""
    return math.hypot(x - goal[0], y - goal[1]) <= catchment


@dataclass(frozen=True)
class AgentConfig:
    variant: str = "full"
    consolidation: str = "selective"
    mb: MBParams = field(default_factory=MBParams)
    tau_c: int = 20
    perturbation: Perturbation = field(default_factory=Perturbation)
    camera: CameraConfig = DEFAULT_CAMERA

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")

    @property
    def perturbed(self) -> bool:
        return self.perturbation.sigma > 0.0 or self.perturbation.b_omega != 0.0


@dataclass
class TrialResult:
    success: bool
    path_length: float
    geodesic: float
    spl: float
    collisions: int
    frames_used: int
    trace: list[dict] | None = None


@dataclass
class EpisodeResult:
    trials: list[TrialResult]
    terminated_reason: str  # "ltm_stale" | "max_trials"
    best_spl: float
    consolidation_log: list[dict]

    @property
    def first(self) -> TrialResult:
        return self.trials[0]

    @property
    def final(self) -> TrialResult:
        return self.trials[-1]

    @property
    def solved(self) -> bool:
        return any(t.success for t in self.trials)


def run_trial(
    spec: EpisodeSpec,
    config: AgentConfig | None = None,
    regime: str = "discrete",
    mb: MushroomBody | None = None,
    rng: np.random.Generator | None = None,
    max_frames: int = MAX_FRAMES,
    collect_trace: bool = False,
) -> TrialResult:
    """One navigation attempt.  The frame loop is render -> preprocess ->
    encode -> read out -> steer -> act -> step -> reinforce, with the vision
    and collision pathways switched off according to the agent variant."""
    config = config or AgentConfig()
    if regime not in REGIMES:
        raise ValueError(f"unknown regime {regime!r}")
    variant = config.variant
    sees = variant == "full"
    escapes = variant != "odometry_only"
    if sees:
        if mb is None:
            mb = MushroomBody(config.mb)
        mb.start_trial()
    cx = SteeringController(tau_c=config.tau_c)

    scene = spec.scene
    goal = spec.goal
    if regime == "discrete":
        robot = RobotSpec.discrete()
        pose = spec.start_pose
    else:
        robot = RobotSpec.continuous()
        world = ContinuousState(spec.start_pose)
        pose = world.pose

    path_length = 0.0
    collisions = 0
    success = False
    frames_used = max_frames
    trace: list[dict] | None = [] if collect_trace else None

    for t in range(max_frames):
        z = NEUTRAL_Z
        kc = None
        if sees:
            raw = render_view(scene, pose, config.camera)
            kc = mb.encode(preprocess(raw))
            z = mb.read_out(kc)
            mb.record(kc)
        if escapes:
            reward_side = cx.check_escape_complete(t)
            if reward_side is not None and sees:
                mb.reward(reward_side, kc)
        delta_sigma = cx.desired_rotation(pose, goal, z, t)
        command = controller_map(delta_sigma, regime)

        if regime == "discrete":
            new_pose, event = step_discrete(scene, pose, command, robot)
        else:
            world, event = step_continuous(
                scene, world, command, config.perturbation, rng, robot
            )
            new_pose = world.pose
        path_length += math.hypot(new_pose.x - pose.x, new_pose.y - pose.y)

        if event is not None:
            collisions += 1
            event.frame = t
            if escapes:
                event.side = cx.on_collision(
                    event.gamma, new_pose.heading, t, goal_bearing(new_pose, goal)
                )
                if sees:
                    mb.punish(event.side)
        pose = new_pose

        if trace is not None:
            trace.append(
                {
                    "frame": t,
                    "x": pose.x,
                    "y": pose.y,
                    "heading": pose.heading,
                    "action": command if regime == "discrete" else f"{command[0]:.6g},{command[1]:.6g}",
                    "collision": int(event is not None),
                    "gamma": event.gamma if event is not None else "",
                    "z_left": z.z_left,
                    "z_right": z.z_right,
                    "mode": cx.state.mode,
                }
            )
        if reached_goal(pose.x, pose.y, goal, spec.catchment_radius):
            success = True
            frames_used = t + 1
            break

    spl = compute_spl(success, spec.geodesic, path_length)
    return TrialResult(success, path_length, spec.geodesic, spl, collisions, frames_used, trace)


def run_episode(
    spec: EpisodeSpec,
    config: AgentConfig | None = None,
    regime: str = "discrete",
    rng: np.random.Generator | None = None,
    max_trials: int = MAX_TRIALS,
    collect_trace: bool = False,
) -> EpisodeResult:
    """Repeat trials with memory carried across per the variant rules.

    Ablated variants run once (they would repeat the identical trajectory).
    The full/selective agent stops after the first trial (beyond the first)
    whose consolidation left long-term memory unchanged; excessive/checkpoint
    consolidation and any perturbed run always use the full trial budget.
    """
    config = config or AgentConfig()
    if config.variant != "full":
        trial = run_trial(spec, config, regime, None, rng, collect_trace=collect_trace)
        return EpisodeResult([trial], "max_trials", trial.spl, [])

    mb = MushroomBody(config.mb)
    early_stop = config.consolidation == "selective" and not config.perturbed
    trials: list[TrialResult] = []
    log: list[dict] = []
    best = 0.0
    reason = "max_trials"
    for i in range(1, max_trials + 1):
        trial = run_trial(spec, config, regime, mb, rng, collect_trace=collect_trace)
        trials.append(trial)
        consolidated = mb.end_trial(trial.spl, best, config.consolidation)
        log.append({"trial": i, "spl": trial.spl, "consolidated": consolidated})
        best = max(best, trial.spl)
        if early_stop and i >= 2 and not consolidated:
            reason = "ltm_stale"
            break
    if config.consolidation == "checkpoint" and mb.checkpoints:
        restored = mb.restore_best_checkpoint()
        log.append({"trial": "restore_best", "spl": restored, "consolidated": False})
    return EpisodeResult(trials, reason, best, log)


def difficulty(spec: EpisodeSpec, regime: str = "discrete") -> dict:
    """Episode difficulty record: the floor-plan complexity ratio alongside the
    behaviorally grounded odometry-only baseline performance."""
    baseline = run_trial(spec, AgentConfig(variant="odometry_only"), regime)
    return {
        "complexity_ratio": complexity_ratio(spec),
        "odometry_only_spl": baseline.spl,
        "odometry_only_success": baseline.success,
    }


# ---------------------------------------------------------------------------
# Suites


@dataclass(frozen=True)
class SuiteEpisode:
    """One episode definition: a generated scene kind or an explicit scene file."""

    kind: str | None = None
    seed: int = 0
    size: int = 32
    scene_file: str | None = None
    start: tuple[float, float, float] | None = None  # x, y, heading
    goal: tuple[float, float] | None = None
    catchment_radius: float = 0.2

    def build(self) -> EpisodeSpec:
        if self.scene_file is not None:
            scene = load_scene(self.scene_file)
            if self.start is None or self.goal is None:
                raise ValueError("scene_file episodes need explicit start and goal")
            spec = EpisodeSpec(
                scene=scene,
                start_pose=Pose(*self.start),
                goal=tuple(self.goal),
                catchment_radius=self.catchment_radius,
                name=scene.name,
            )
            spec.validate()
            return spec
        if self.kind is None:
            raise ValueError("episode needs either kind or scene_file")
        return make_episode(self.kind, self.seed, self.size, catchment_radius=self.catchment_radius)


@dataclass
class SuiteConfig:
    episodes: list[SuiteEpisode]
    variants: tuple[str, ...] = ("full",)
    regime: str = "discrete"
    consolidation: str = "selective"
    sigma: float = 0.0
    bias: float = 0.0
    seed: int = 0
    max_trials: int = MAX_TRIALS
    name: str = "suite"
    mb: MBParams = field(default_factory=MBParams)
    tau_c: int = 20

    @classmethod
    def from_json(cls, path: str | Path, **overrides) -> "SuiteConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        episodes = [
            SuiteEpisode(**{k: tuple(v) if isinstance(v, list) else v for k, v in e.items()})
            for e in raw.pop("episodes")
        ]
        raw.update(overrides)
        allowed = {f.name for f in dataclasses.fields(cls)} - {"episodes", "mb"}
        kwargs = {k: v for k, v in raw.items() if k in allowed}
        if "variants" in kwargs:
            kwargs["variants"] = tuple(kwargs["variants"])
        if "mb" in raw and isinstance(raw["mb"], dict):
            kwargs["mb"] = MBParams(**raw["mb"])
        elif "mb" in raw:
            kwargs["mb"] = raw["mb"]
        return cls(episodes=episodes, **kwargs)

    def agent_config(self, variant: str) -> AgentConfig:
        return AgentConfig(
            variant=variant,
            consolidation=self.consolidation,
            mb=self.mb,
            tau_c=self.tau_c,
            perturbation=Perturbation(self.bias, self.sigma, self.seed),
        )


@dataclass
class SuiteResult:
    config: SuiteConfig
    episodes: list[dict]  # one dict per episode: variant -> EpisodeResult
    rows: list[dict]  # flat per-trial records (the summary.csv payload)

    def aggregate(self, variant: str) -> dict:
        eps = [e[variant] for e in self.episodes if variant in e]
        if not eps:
            raise ValueError(f"variant {variant!r} not in this suite")
        return {
            "episodes": len(eps),
            "first_sr": float(np.mean([e.first.success for e in eps])),
            "first_spl": float(np.mean([e.first.spl for e in eps])),
            "learnt_sr": float(np.mean([e.solved for e in eps])),
            "learnt_spl": float(np.mean([e.best_spl for e in eps])),
            "final_spl": float(np.mean([e.final.spl for e in eps])),
            "collisions_first": int(sum(e.first.collisions for e in eps)),
            "collisions_final": int(sum(e.final.collisions for e in eps)),
            "collisions_total": int(sum(t.collisions for e in eps for t in e.trials)),
        }

    def hard_episode_indices(self) -> list[int]:
        """Episodes unsolved by the odometry-collision baseline."""
        out = []
        for i, ep in enumerate(self.episodes):
            if "odometry_collision" not in ep:
                raise ValueError("hard episodes need the odometry_collision variant in the suite")
            if not ep["odometry_collision"].solved:
                out.append(i)
        return out


def _run_suite_episode(args) -> dict:
    cfg, index, collect_trace = args
    spec = cfg.episodes[index].build()
    results: dict = {}
    for variant in cfg.variants:
        # independent stream per (suite seed, episode); fresh per variant so
        # adding or removing variants never shifts another variant's draws
        rng = np.random.default_rng([cfg.seed, index])
        results[variant] = run_episode(
            spec, cfg.agent_config(variant), cfg.regime, rng, cfg.max_trials, collect_trace
        )
    return results


def run_suite(cfg: SuiteConfig, jobs: int = 1, collect_trace: bool = False) -> SuiteResult:
    """Run every (episode, variant) pair.  Episodes are independent and may run
    in parallel; results are folded in episode order so output is replayable."""
    tasks = [(cfg, i, collect_trace) for i in range(len(cfg.episodes))]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            episode_results = list(pool.map(_run_suite_episode, tasks, chunksize=1))
    else:
        episode_results = [_run_suite_episode(t) for t in tasks]

    rows = []
    for i, per_variant in enumerate(episode_results):
        for variant in cfg.variants:
            for j, trial in enumerate(per_variant[variant].trials, start=1):
                rows.append(
                    {
                        "episode": i,
                        "trial": j,
                        "variant": variant,
                        "sr": int(trial.success),
                        "spl": trial.spl,
                        "collisions": trial.collisions,
                        "frames": trial.frames_used,
                    }
                )
    return SuiteResult(cfg, episode_results, rows)


SUMMARY_FIELDS = ("episode", "trial", "variant", "sr", "spl", "collisions", "frames")

TRACE_FIELDS = (
    "frame", "x", "y", "heading", "action", "collision", "gamma", "z_left", "z_right", "mode",
)


def summary_csv(result: SuiteResult) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=SUMMARY_FIELDS, lineterminator="\n")
    writer.writeheader()
    for row in result.rows:
        out = dict(row)
        out["spl"] = f"{row['spl']:.12g}"
        writer.writerow(out)
    return buf.getvalue()


def write_outputs(result: SuiteResult, out_dir: str | Path) -> None:
    """summary.csv, a JSON manifest of every config value, and per-trial trace
    files when the suite was run with collect_trace."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "summary.csv").write_text(summary_csv(result), encoding="utf-8")
    cfg = result.config
    manifest = {
        "name": cfg.name,
        "regime": cfg.regime,
        "variants": list(cfg.variants),
        "consolidation": cfg.consolidation,
        "sigma": cfg.sigma,
        "bias": cfg.bias,
        "seed": cfg.seed,
        "max_trials": cfg.max_trials,
        "tau_c": cfg.tau_c,
        "mb": dataclasses.asdict(cfg.mb),
        "episodes": [dataclasses.asdict(e) for e in cfg.episodes],
        "aggregates": {v: result.aggregate(v) for v in cfg.variants},
    }
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    if any(
        trial.trace is not None
        for ep in result.episodes
        for res in ep.values()
        for trial in res.trials
    ):
        trace_dir = out / "traces"
        trace_dir.mkdir(exist_ok=True)
        for i, per_variant in enumerate(result.episodes):
            for variant, ep in per_variant.items():
                for j, trial in enumerate(ep.trials, start=1):
                    if trial.trace is None:
                        continue
                    path = trace_dir / f"ep{i:03d}_trial{j:02d}_{variant}.csv"
                    with path.open("w", newline="", encoding="utf-8") as f:
                        w = csv.DictWriter(f, fieldnames=TRACE_FIELDS, lineterminator="\n")
                        w.writeheader()
                        for rec in trial.trace:
                            w.writerow(rec)
