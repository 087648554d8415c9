"""Reproducible experiment runner.

Every experiment is a subcommand that reads an optional JSON config,
simulates deterministically under an explicit seed and writes plot-ready
CSV/JSON into one directory per experiment. Identical config and seed give
byte-identical outputs. Metrics that never trigger are empty CSV cells and
JSON nulls.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .controller import ControllerConfig, GainTriple
from .metrics import Trajectory, compute_step_metrics
from .plants import FirstOrderParams, SecondOrderParams
from .robustness import (
    DEFAULT_DERIV_ALPHA,
    ModelInstance,
    TaskSpec,
    ensemble_controller,
    evaluate_candidate,
    run_closed_loop,
    sample_ensemble,
    score_model,
    UncertaintySpec,
)
from .sensing import SensorModel
from .stability import PlantUncertainty, ki_upper_bound, region_grid, robust_point_screen
from .tuner import (
    GainBounds,
    ScreenConfig,
    feasible_fraction,
    hcsbo_run,
    random_search_baseline,
)

SCHEMA_VERSION = 1


# ---------------------------------------------------------------------------
# experiment configs


@dataclass
class SweepConfig:
    tau: float = 1.0
    gain: float = 1.0
    dt: float = 0.01
    horizon: float = 5.0
    reference: float = 1.0
    u_min: float = -10.0
    u_max: float = 10.0
    p_gains: list = field(default_factory=lambda: [0.5, 1.0, 1.5, 2.0, 3.0])
    pi_kp: float = 3.0
    pi_kis: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 1.0])
    pid_kp: float = 3.0
    pid_ki: float = 1.0
    pid_kds: list = field(default_factory=lambda: [0.0, 0.05, 0.10])
    seed: int = 0


@dataclass
class StabilityConfig:
    tau: float = 1.0
    gain: float = 1.0
    dt: float = 0.01
    kp_range: list = field(default_factory=lambda: [0.0, 10.0])
    ki_range: list = field(default_factory=lambda: [0.0, 500.0])
    resolution: int = 200
    guardrail_kp: float = 3.0
    guardrail_dt_min: float = 0.001
    guardrail_dt_max: float = 0.1
    # odd count puts dt = 0.01 exactly on the log-spaced grid
    guardrail_dt_points: int = 49
    screen_kp: float = 1.0
    screen_ki: float = 1.0
    screen_draws: int = 200
    seed: int = 0


@dataclass
class WindupConfig:
    omega_n: float = 3.0
    zeta: float = 0.3
    input_gain: float = 9.0
    viscous: float = 0.05
    coulomb: float = 0.02
    deadzone: float = 0.01
    dt: float = 0.002
    delay_samples: int = 1
    u_max: float = 1.2
    loose_u_max: float = 50.0
    horizon: float = 8.0
    reference: float = 1.0
    kp: float = 4.0
    ki: float = 12.0
    kd: float = 0.2
    t_aw: float = 0.1
    seed: int = 0


@dataclass
class MonteCarloConfig:
    n_models: int = 200
    horizon: float = 3.0
    manual_gains: list = field(default_factory=lambda: [3.0, 1.0, 0.05])
    robust_gains: list = field(default_factory=lambda: [10.0, 25.0, 0.8])
    t_aw: float = 0.12
    tau_range: list = field(default_factory=lambda: [0.5, 1.5])
    gain_range: list = field(default_factory=lambda: [0.8, 1.2])
    delay_choices: list = field(default_factory=lambda: [0, 1, 2, 3])
    noise_sigma_range: list = field(default_factory=lambda: [0.0, 0.01])
    quant_choices: list = field(default_factory=lambda: [0.0, 0.001, 0.002])
    umax_choices: list = field(default_factory=lambda: [2.0, 3.0, 5.0])
    dt: float = 0.01
    seed: int = 42


@dataclass
class TuneConfig:
    kp_bounds: list = field(default_factory=lambda: [0.1, 20.0])
    ki_bounds: list = field(default_factory=lambda: [0.0, 50.0])
    kd_bounds: list = field(default_factory=lambda: [0.0, 2.0])
    budget: int = 60
    init_n0: int = 10
    seeds: list = field(default_factory=lambda: [0, 1, 2, 3, 4])
    n_models: int = 50
    objective_horizon: float = 2.0
    feasible_samples: int = 10000
    nominal_tau: float = 1.0
    nominal_gain: float = 1.0
    nominal_dt: float = 0.01
    ensemble_seed: int = 42
    seed: int = 0


@dataclass
class BenchmarkConfig:
    omega_n: float = 9.0
    zeta: float = 0.7
    input_gain: float = 81.0
    viscous: float = 0.055
    coulomb: float = 0.025
    deadzone: float = 0.01
    dt: float = 0.002
    delay_samples: int = 1
    kp: float = 4.0
    ki: float = 6.0
    kd: float = 0.3
    t_aw: float = 0.1
    step_horizon: float = 3.0
    sine_horizon: float = 5.0
    sine_amplitude: float = 0.5
    sine_frequency: float = 0.8
    task_u_max: float = 1.0
    aw_sweep_t_aw: list = field(default_factory=lambda: [0.02, 0.05, 0.1, 0.2, 0.5, 1.0])
    aw_sweep_u_max: list = field(default_factory=lambda: [0.25, 0.5, 1.0])
    seed: int = 0


CONFIG_TYPES = {
    "sweep": SweepConfig,
    "stability": StabilityConfig,
    "windup": WindupConfig,
    "montecarlo": MonteCarloConfig,
    "tune": TuneConfig,
    "benchmark": BenchmarkConfig,
}


class ConfigError(ValueError):
    pass


def load_config(kind: str, path: str | None, seed_override: int | None):
    cls = CONFIG_TYPES[kind]
    overrides = {}
    if path is not None:
        with open(path, encoding="utf-8") as fh:
            overrides = json.load(fh)
        if not isinstance(overrides, dict):
            raise ConfigError("config file must hold a JSON object")
    overrides.pop("schema_version", None)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(overrides) - known
    if unknown:
        raise ConfigError(f"unknown config keys for '{kind}': {sorted(unknown)}")
    cfg = cls(**overrides)
    if seed_override is not None:
        cfg.seed = seed_override
    return cfg


def config_hash(cfg) -> str:
    payload = json.dumps(dataclasses.asdict(cfg), sort_keys=True,
                         separators=(",", ":"))
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:12]


# ---------------------------------------------------------------------------
# output helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".10g")
    return str(v)


def write_csv(path: Path, header: list[str], rows):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path: Path, payload: dict):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=1, allow_nan=False)
        fh.write("\n")


def write_trajectory_csv(path: Path, traj: Trajectory):
    header = ["t", "r", "y", "y_meas", "u_cmd", "u_sat", "I"]
    t = traj.t
    rows = zip(t, traj.reference, traj.output, traj.measured,
               traj.u_cmd, traj.u_sat, traj.integrator)
    write_csv(path, header, rows)


def _summary(experiment: str, cfg, results: dict) -> dict:
    return {
        "experiment": experiment,
        "schema_version": SCHEMA_VERSION,
        "package_version": __version__,
        "config": dataclasses.asdict(cfg),
        "config_hash": config_hash(cfg),
        "results": results,
    }


# ---------------------------------------------------------------------------
# sweep


def _baseline_model(cfg: SweepConfig) -> ModelInstance:
    return ModelInstance(
        family="first_order_euler",
        first=FirstOrderParams(tau=cfg.tau, gain=cfg.gain, dt=cfg.dt),
        sensor=SensorModel(),
        u_max=cfg.u_max,
    )


def _baseline_controller(cfg: SweepConfig, kp, ki, kd) -> ControllerConfig:
    # baseline sweeps use the raw difference derivative and no anti-windup
    return ControllerConfig(
        gains=GainTriple(kp=kp, ki=ki, kd=kd),
        u_min=cfg.u_min,
        u_max=cfg.u_max,
        antiwindup_kaw=None,
        deriv_filter_alpha=0.0,
    )


def cmd_sweep(cfg: SweepConfig, out: Path, threads: int = 1) -> dict:
    model = _baseline_model(cfg)
    task = TaskSpec(kind="step", horizon=cfg.horizon, amplitude=cfg.reference)
    chash = config_hash(cfg)
    traj_dir = out / "trajectories"
    traj_dir.mkdir(parents=True, exist_ok=True)

    runs = []
    for kp in cfg.p_gains:
        runs.append(("p", kp, 0.0, 0.0, f"p_kp{_fmt(kp)}"))
    for ki in cfg.pi_kis:
        runs.append(("pi", cfg.pi_kp, ki, 0.0, f"pi_ki{_fmt(ki)}"))
    for kd in cfg.pid_kds:
        runs.append(("pid", cfg.pid_kp, cfg.pid_ki, kd, f"pid_kd{_fmt(kd)}"))

    rows = []
    results = []
    for sweep, kp, ki, kd, name in runs:
        traj = run_closed_loop(model, _baseline_controller(cfg, kp, ki, kd), task)
        m = compute_step_metrics(traj, cfg.reference)
        write_trajectory_csv(traj_dir / f"{name}.csv", traj)
        rows.append([sweep, kp, ki, kd, m.overshoot_pct, m.rise_time,
                     m.settle_time, m.ss_error, m.iae, m.sat_duty, m.u_rms,
                     chash])
        results.append({"sweep": sweep, "kp": kp, "ki": ki, "kd": kd,
                        **m.as_dict()})

    write_csv(out / "metrics.csv",
              ["sweep", "kp", "ki", "kd", "overshoot_pct", "rise_time",
               "settle_time", "ss_error", "iae", "sat_duty", "u_rms",
               "config_hash"],
              rows)
    summary = _summary("sweep", cfg, {"rows": results})
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# stability


def cmd_stability(cfg: StabilityConfig, out: Path, threads: int = 1) -> dict:
    p = FirstOrderParams(tau=cfg.tau, gain=cfg.gain, dt=cfg.dt)
    out.mkdir(parents=True, exist_ok=True)

    grids = {}
    for disc in ("euler", "zoh"):
        grid = region_grid(tuple(cfg.kp_range), tuple(cfg.ki_range),
                           cfg.resolution, disc, p)
        grid.write_csv(out / f"region_{disc}.csv")
        grid.write_json(out / f"region_{disc}.json")
        grids[disc] = grid

    chash = config_hash(cfg)
    dts = np.geomspace(cfg.guardrail_dt_min, cfg.guardrail_dt_max,
                       cfg.guardrail_dt_points)
    guard_rows = []
    for dt in dts:
        pk = FirstOrderParams(tau=cfg.tau, gain=cfg.gain, dt=float(dt))
        guard_rows.append([float(dt), ki_upper_bound(cfg.guardrail_kp, pk),
                           chash])
    write_csv(out / "guardrail.csv", ["dt", "ki_max", "config_hash"],
              guard_rows)

    frac = robust_point_screen(
        cfg.screen_kp, cfg.screen_ki, PlantUncertainty(),
        n_draws=cfg.screen_draws, seed=cfg.seed, dt=cfg.dt)

    disagreement = int(np.sum(grids["euler"].verdicts != grids["zoh"].verdicts))
    summary = _summary("stability", cfg, {
        "euler_stable_nodes": int(np.sum(grids["euler"].verdicts)),
        "zoh_stable_nodes": int(np.sum(grids["zoh"].verdicts)),
        "grid_disagreement_nodes": disagreement,
        "guardrail_at_config_dt": ki_upper_bound(cfg.guardrail_kp, p),
        "point_screen_stable_fraction": frac,
    })
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# windup


def _windup_model(cfg: WindupConfig) -> ModelInstance:
    return ModelInstance(
        family="second_order",
        second=SecondOrderParams(
            omega_n=cfg.omega_n, zeta=cfg.zeta, input_gain=cfg.input_gain,
            viscous=cfg.viscous, coulomb=cfg.coulomb, deadzone=cfg.deadzone,
            dt=cfg.dt),
        delay_samples=cfg.delay_samples,
        sensor=SensorModel(),
        u_max=cfg.u_max,
    )


def cmd_windup(cfg: WindupConfig, out: Path, threads: int = 1) -> dict:
    model = _windup_model(cfg)
    task = TaskSpec(kind="step", horizon=cfg.horizon, amplitude=cfg.reference)
    gains = GainTriple(kp=cfg.kp, ki=cfg.ki, kd=cfg.kd)
    traj_dir = out / "trajectories"
    traj_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)

    def controller(kaw, umax):
        return ControllerConfig(gains=gains, u_min=-umax, u_max=umax,
                                antiwindup_kaw=kaw,
                                deriv_filter_alpha=DEFAULT_DERIV_ALPHA)

    cases = [
        ("tight_aw_on", cfg.t_aw, cfg.u_max),
        ("tight_aw_off", None, cfg.u_max),
        ("loose_aw_on", cfg.t_aw, cfg.loose_u_max),
        ("loose_aw_off", None, cfg.loose_u_max),
    ]
    rows = []
    results = {}
    for name, kaw, umax in cases:
        run_model = dataclasses.replace(model, u_max=umax)
        traj = run_closed_loop(run_model, controller(kaw, umax), task)
        m = compute_step_metrics(traj, cfg.reference)
        write_trajectory_csv(traj_dir / f"{name}.csv", traj)
        rows.append([name, m.overshoot_pct, m.rise_time, m.settle_time,
                     m.ss_error, m.iae, m.sat_duty, m.u_rms, chash])
        results[name] = m.as_dict()

    write_csv(out / "metrics.csv",
              ["case", "overshoot_pct", "rise_time", "settle_time",
               "ss_error", "iae", "sat_duty", "u_rms", "config_hash"],
              rows)
    results["aw_improves_iae"] = bool(
        results["tight_aw_on"]["iae"] < results["tight_aw_off"]["iae"])
    summary = _summary("windup", cfg, results)
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# montecarlo


def _mc_spec(cfg: MonteCarloConfig) -> UncertaintySpec:
    return UncertaintySpec(
        tau_range=tuple(cfg.tau_range),
        gain_range=tuple(cfg.gain_range),
        delay_choices=tuple(cfg.delay_choices),
        noise_sigma_range=tuple(cfg.noise_sigma_range),
        quant_choices=tuple(cfg.quant_choices),
        umax_choices=tuple(cfg.umax_choices),
        dt=cfg.dt,
    )


def cmd_montecarlo(cfg: MonteCarloConfig, out: Path, threads: int = 1) -> dict:
    spec = _mc_spec(cfg)
    ensemble = sample_ensemble(spec, cfg.n_models, cfg.seed)
    task = TaskSpec(kind="step", horizon=cfg.horizon, amplitude=1.0)
    out.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)

    controllers = {
        "manual": GainTriple(*cfg.manual_gains),
        "robust_tuned": GainTriple(*cfg.robust_gains),
    }

    def run_one(args):
        idx, model, gains = args
        ctl = ensemble_controller(gains, model.u_max, cfg.t_aw)
        traj = run_closed_loop(model, ctl, task)
        j, m = score_model(traj, task)
        return idx, model, j, m

    rows = []
    medians = {}
    for name, gains in controllers.items():
        jobs = [(i, mdl, gains) for i, mdl in enumerate(ensemble)]
        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                outs = list(pool.map(run_one, jobs))
        else:
            outs = [run_one(j) for j in jobs]
        iaes, oss, duties = [], [], []
        for idx, model, j, m in outs:
            rows.append([name, idx, model.first.tau, model.first.gain,
                         model.delay_samples, model.sensor.noise_sigma,
                         model.sensor.quant_step, model.u_max,
                         m.iae, m.overshoot_pct, m.sat_duty, m.u_rms, j,
                         chash])
            iaes.append(m.iae)
            oss.append(m.overshoot_pct)
            duties.append(m.sat_duty)
        medians[name] = {
            "gains": list(gains.as_tuple()),
            "median_iae": float(np.median(iaes)),
            "median_overshoot_pct": float(np.median(oss)),
            "median_sat_duty": float(np.median(duties)),
        }

    write_csv(out / "trials.csv",
              ["controller", "model_index", "tau", "gain", "delay_samples",
               "noise_sigma", "quant_step", "u_max", "iae", "overshoot_pct",
               "sat_duty", "u_rms", "j", "config_hash"],
              rows)
    summary = _summary("montecarlo", cfg, medians)
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# tune


def cmd_tune(cfg: TuneConfig, out: Path, threads: int = 1) -> dict:
    bounds = GainBounds(kp=tuple(cfg.kp_bounds), ki=tuple(cfg.ki_bounds),
                        kd=tuple(cfg.kd_bounds))
    nominal = FirstOrderParams(tau=cfg.nominal_tau, gain=cfg.nominal_gain,
                               dt=cfg.nominal_dt)
    screen = ScreenConfig()
    spec = UncertaintySpec(dt=cfg.nominal_dt)
    ensemble = sample_ensemble(spec, cfg.n_models, cfg.ensemble_seed)
    task = TaskSpec(kind="step", horizon=cfg.objective_horizon, amplitude=1.0)
    out.mkdir(parents=True, exist_ok=True)

    def objective(gains: GainTriple):
        return evaluate_candidate(gains, ensemble, task)

    frac = feasible_fraction(bounds, cfg.feasible_samples, cfg.seed,
                             nominal, screen)
    chash = config_hash(cfg)

    curve_rows = []
    per_seed = []
    for seed in cfg.seeds:
        res_h = hcsbo_run(bounds, cfg.budget, cfg.init_n0, objective,
                          seed=seed, nominal=nominal, screen=screen)
        res_r = random_search_baseline(bounds, cfg.budget, objective,
                                       seed=seed, nominal=nominal,
                                       screen=screen)
        for res, tag in ((res_h, "hcsbo"), (res_r, "random")):
            path = out / f"history_{tag}_seed{seed}.jsonl"
            with open(path, "w", encoding="utf-8", newline="\n") as fh:
                for rec in res.history:
                    fh.write(json.dumps({
                        "iteration": rec.index,
                        "kp": rec.gains.kp,
                        "ki": rec.gains.ki,
                        "kd": rec.gains.kd,
                        "j": rec.j,
                        "certified": rec.certified,
                        "n_diverged_models": rec.n_diverged,
                        "phase": rec.phase,
                        "best_so_far": rec.best_so_far,
                    }, allow_nan=False) + "\n")
            for rec in res.history:
                curve_rows.append([tag, seed, rec.index, rec.best_so_far,
                                   chash])
        per_seed.append({
            "seed": seed,
            "hcsbo_best_j": res_h.best_j,
            "hcsbo_best_gains": list(res_h.best_gains.as_tuple()),
            "hcsbo_unsafe_evaluations": res_h.unsafe_evaluations,
            "hcsbo_uncertified_evaluations": res_h.uncertified_evaluations,
            "hcsbo_init_rejected": res_h.init_rejected,
            "hcsbo_pool_rejected": res_h.pool_rejected,
            "hcsbo_pool_candidates": res_h.pool_candidates,
            "random_best_j": res_r.best_j,
            "random_best_gains": list(res_r.best_gains.as_tuple()),
            "random_unsafe_evaluations": res_r.unsafe_evaluations,
            "random_uncertified_evaluations": res_r.uncertified_evaluations,
            "hcsbo_wins": bool(res_h.best_j <= res_r.best_j),
        })

    write_csv(out / "best_so_far.csv",
              ["method", "seed", "iteration", "best_j", "config_hash"],
              curve_rows)
    wins = sum(1 for s in per_seed if s["hcsbo_wins"])
    summary = _summary("tune", cfg, {
        "feasible_fraction": frac,
        "rejection_fraction": 1.0 - frac,
        "per_seed": per_seed,
        "hcsbo_wins": wins,
        "n_seeds": len(cfg.seeds),
    })
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# benchmark


def cmd_benchmark(cfg: BenchmarkConfig, out: Path, threads: int = 1) -> dict:
    actuator = SecondOrderParams(
        omega_n=cfg.omega_n, zeta=cfg.zeta, input_gain=cfg.input_gain,
        viscous=cfg.viscous, coulomb=cfg.coulomb, deadzone=cfg.deadzone,
        dt=cfg.dt)
    gains = GainTriple(kp=cfg.kp, ki=cfg.ki, kd=cfg.kd)
    traj_dir = out / "trajectories"
    traj_dir.mkdir(parents=True, exist_ok=True)
    chash = config_hash(cfg)

    def model(umax):
        return ModelInstance(family="second_order", second=actuator,
                             delay_samples=cfg.delay_samples,
                             sensor=SensorModel(), u_max=umax)

    def controller(kaw, umax):
        return ControllerConfig(gains=gains, u_min=-umax, u_max=umax,
                                antiwindup_kaw=kaw,
                                deriv_filter_alpha=DEFAULT_DERIV_ALPHA)

    step = TaskSpec(kind="step", horizon=cfg.step_horizon, amplitude=1.0)
    sine = TaskSpec(kind="sine", horizon=cfg.sine_horizon,
                    amplitude=cfg.sine_amplitude, frequency=cfg.sine_frequency)

    task_rows = []
    results = {}
    for task, tname in ((step, "step"), (sine, "sine")):
        for kaw, aname in ((cfg.t_aw, "aw_on"), (None, "aw_off")):
            traj = run_closed_loop(model(cfg.task_u_max),
                                   controller(kaw, cfg.task_u_max), task)
            m = compute_step_metrics(traj, task.metric_reference())
            write_trajectory_csv(traj_dir / f"{tname}_{aname}.csv", traj)
            task_rows.append([tname, aname, m.overshoot_pct, m.rise_time,
                              m.settle_time, m.ss_error, m.iae, m.sat_duty,
                              m.u_rms, chash])
            results[f"{tname}_{aname}"] = m.as_dict()
    write_csv(out / "metrics.csv",
              ["task", "antiwindup", "overshoot_pct", "rise_time",
               "settle_time", "ss_error", "iae", "sat_duty", "u_rms",
               "config_hash"],
              task_rows)

    sweep_rows = []
    for umax in cfg.aw_sweep_u_max:
        for taw in cfg.aw_sweep_t_aw:
            traj = run_closed_loop(model(umax), controller(taw, umax), step)
            m = compute_step_metrics(traj, 1.0)
            sweep_rows.append([taw, umax, m.iae, m.sat_duty, chash])
    write_csv(out / "aw_sweep.csv",
              ["t_aw", "u_max", "iae", "sat_duty", "config_hash"],
              sweep_rows)

    summary = _summary("benchmark", cfg, results)
    write_json(out / "summary.json", summary)
    return summary


# ---------------------------------------------------------------------------
# entry point


COMMANDS = {
    "sweep": cmd_sweep,
    "stability": cmd_stability,
    "windup": cmd_windup,
    "montecarlo": cmd_montecarlo,
    "tune": cmd_tune,
    "benchmark": cmd_benchmark,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jointpid",
        description="Deterministic PID simulation, certification and tuning "
                    "experiments")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, help=f"run the {name} experiment")
        p.add_argument("--config", type=str, default=None,
                       help="JSON config file; omitted fields use defaults")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config seed")
        p.add_argument("--out", type=str, default="out",
                       help="output root directory")
        p.add_argument("--threads", type=int, default=1,
                       help="worker threads for ensemble evaluations")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.threads < 1:
            raise ConfigError("--threads must be at least 1")
        cfg = load_config(args.command, args.config, args.seed)
        out = Path(args.out) / args.command
        out.mkdir(parents=True, exist_ok=True)
        t0 = time.perf_counter()
        summary = COMMANDS[args.command](cfg, out, threads=args.threads)
        elapsed = time.perf_counter() - t0
        print(f"{args.command}: wrote {out} "
              f"(config {summary['config_hash']}, {elapsed:.2f} s)")
        return 0
    except Exception as exc:  # noqa: BLE001 - single reporting point
        error = {"error": type(exc).__name__, "message": str(exc),
                 "command": args.command}
        print(json.dumps(error), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
