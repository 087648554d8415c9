"""Hybrid-certified safe Bayesian optimization of PID gains.

Candidates pass two filters before the expensive robust objective is ever
evaluated: a closed-form Schur test of the PI pair on the nominal joint
model, and a short deterministic simulation of the full PID gains on a
second-order actuator that rejects divergence, excessive overshoot and a
transient spent entirely at the clamp. The surrogate loop then maximizes
expected improvement over certified candidates only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .controller import ControllerConfig, GainTriple
from .gp import SurrogateDataset, expected_improvement, gp_fit
from .plants import FirstOrderParams, SecondOrderParams
from .robustness import (
    DEFAULT_DERIV_ALPHA,
    ModelInstance,
    RobustScore,
    TaskSpec,
    run_closed_loop,
)
from .sensing import SensorModel
from .stability import jury_zoh_pi, zoh_coeffs
from .metrics import compute_step_metrics

INIT_REJECTION_LIMIT = 100_000
POOL_UNIFORM = 1024
POOL_LOCAL = 256
LOCAL_SIGMA_FRACTION = 0.05


class InfeasibleDomainError(RuntimeError):
    """Certification rejected too many consecutive samples during startup."""


@dataclass(frozen=True)
class GainBounds:
    """Axis-aligned search box for (kp, ki, kd)."""

    kp: tuple[float, float] = (0.1, 20.0)
    ki: tuple[float, float] = (0.0, 50.0)
    kd: tuple[float, float] = (0.0, 2.0)

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            lo, hi = getattr(self, name)
            if not (0 <= lo <= hi):
                raise ValueError(f"invalid {name} bounds ({lo}, {hi})")

    @property
    def lower(self) -> np.ndarray:
        return np.array([self.kp[0], self.ki[0], self.kd[0]])

    @property
    def upper(self) -> np.ndarray:
        return np.array([self.kp[1], self.ki[1], self.kd[1]])

    def sample_uniform(self, rng: np.random.Generator, n: int) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(n, 3))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        span = self.upper - self.lower
        span = np.where(span > 0, span, 1.0)
        return (np.atleast_2d(x) - self.lower) / span


@dataclass(frozen=True)
class ScreenConfig:
    """Deterministic short-horizon check on a nominal actuator model.

    The model's input gain equals omega_n^2 so a unit effort maps to a
    unit static deflection; with the clamp at 3 the step task is feasible
    and windup-prone gains reveal themselves inside the 1 s window.
    """

    model: SecondOrderParams = field(default_factory=lambda: SecondOrderParams(
        omega_n=9.0, zeta=0.7, input_gain=81.0, viscous=0.05, coulomb=0.02,
        deadzone=0.01, dt=0.002))
    delay_samples: int = 1
    u_max: float = 3.0
    reference: float = 1.0
    horizon: float = 1.0
    os_max_pct: float = 40.0
    divergence_factor: float = 50.0

    @property
    def divergence_limit(self) -> float:
        return self.divergence_factor * max(1.0, abs(self.reference))


@dataclass(frozen=True)
class CertificationReport:
    analytic_pass: bool
    behavioral_pass: bool
    reasons: tuple[str, ...]
    screen_overshoot_pct: float | None = None
    screen_sat_duty: float | None = None
    screen_diverged: bool | None = None

    @property
    def certified(self) -> bool:
        return self.analytic_pass and self.behavioral_pass


@dataclass
class EvalRecord:
    index: int
    gains: GainTriple
    j: float
    certified: bool
    n_diverged: int
    phase: str
    best_so_far: float


@dataclass
class TuningResult:
    method: str
    best_gains: GainTriple
    best_j: float
    history: list[EvalRecord]
    init_raw_samples: int = 0
    init_rejected: int = 0
    pool_candidates: int = 0
    pool_rejected: int = 0

    @property
    def best_so_far_curve(self) -> list[float]:
        return [rec.best_so_far for rec in self.history]

    @property
    def unsafe_evaluations(self) -> int:
        """Evaluations during which at least one model rollout diverged."""
        return sum(1 for rec in self.history if rec.n_diverged > 0)

    @property
    def uncertified_evaluations(self) -> int:
        """Evaluations spent on candidates the hybrid filter would reject."""
        return sum(1 for rec in self.history if not rec.certified)


def _screen_controller(gains: GainTriple, screen: ScreenConfig) -> ControllerConfig:
    # the screen runs without anti-windup: windup-prone gains must show it
    return ControllerConfig(
        gains=gains,
        u_min=-screen.u_max,
        u_max=screen.u_max,
        antiwindup_kaw=None,
        deriv_filter_alpha=DEFAULT_DERIV_ALPHA,
    )


def analytic_feasible(gains: GainTriple, nominal: FirstOrderParams) -> bool:
    """Schur feasibility of the PI pair on the nominal hold-equivalent loop.

    The derivative gain is not part of this check; it is safeguarded by
    the behavioral screen and the robust evaluation.
    """
    return jury_zoh_pi(gains.kp, gains.ki, nominal).stable


def analytic_feasible_batch(gains: np.ndarray, nominal: FirstOrderParams) -> np.ndarray:
    """Vectorized PI Schur test over rows (kp, ki, kd)."""
    c = zoh_coeffs(nominal)
    kp = gains[:, 0]
    ki = gains[:, 1]
    a1 = -(1.0 + c.a - c.b * kp)
    a0 = (c.a - c.b * kp) + c.b * ki * nominal.dt
    return (1.0 + a1 + a0 > 0) & (1.0 - a1 + a0 > 0) & (1.0 - a0 > 0)


def behavioral_certify(gains: GainTriple,
                       screen: ScreenConfig | None = None,
                       nominal: FirstOrderParams | None = None,
                       ) -> CertificationReport:
    """Run the short-horizon screen and report the full hybrid verdict.

    The analytic PI flag is evaluated alongside (it is closed-form and
    free) so the returned report always satisfies
    certified == analytic_pass and behavioral_pass.
    """
    screen = screen or ScreenConfig()
    nominal = nominal or FirstOrderParams()
    model = ModelInstance(
        family="second_order",
        second=screen.model,
        delay_samples=screen.delay_samples,
        sensor=SensorModel(),
        u_max=screen.u_max,
    )
    task = TaskSpec(kind="step", horizon=screen.horizon,
                    amplitude=screen.reference)
    traj = run_closed_loop(model, _screen_controller(gains, screen), task,
                           divergence_limit=screen.divergence_limit)
    m = compute_step_metrics(traj, screen.reference)
    analytic = analytic_feasible(gains, nominal)
    reasons = [] if analytic else ["analytic instability"]
    if traj.diverged:
        reasons.append("divergence")
    if m.overshoot_pct > screen.os_max_pct:
        reasons.append("excessive overshoot")
    if m.sat_duty == 1.0:
        reasons.append("saturated entire transient")
    return CertificationReport(
        analytic_pass=analytic,
        behavioral_pass=not (traj.diverged
                             or m.overshoot_pct > screen.os_max_pct
                             or m.sat_duty == 1.0),
        reasons=tuple(reasons),
        screen_overshoot_pct=m.overshoot_pct,
        screen_sat_duty=m.sat_duty,
        screen_diverged=traj.diverged,
    )


def behavioral_certify_batch(gains: np.ndarray,
                             screen: ScreenConfig | None = None) -> np.ndarray:
    """Vectorized screen over many candidates; mirrors the scalar loop.

    Diverged lanes freeze once they cross the limit so the verdicts match
    the truncated scalar runs.
    """
    screen = screen or ScreenConfig()
    p = screen.model
    dt = p.dt
    n_steps = round(screen.horizon / dt) + 1
    r = screen.reference
    umax = screen.u_max
    alpha = DEFAULT_DERIV_ALPHA
    v_eps = 1e-4
    limit = screen.divergence_limit

    kp = gains[:, 0].copy()
    ki = gains[:, 1].copy()
    kd = gains[:, 2].copy()
    m = len(kp)

    theta = np.zeros(m)
    omega = np.zeros(m)
    integral = np.zeros(m)
    prev_e = np.zeros(m)
    dfilt = np.zeros(m)
    buf = np.zeros((screen.delay_samples, m)) if screen.delay_samples else None

    alive = np.ones(m, dtype=bool)
    diverged = np.zeros(m, dtype=bool)
    n_sat = np.zeros(m, dtype=np.int64)
    n_seen = np.zeros(m, dtype=np.int64)
    ymax = np.zeros(m)

    for k in range(n_steps):
        if not alive.any():
            break
        e = r - theta
        raw = np.where(k == 0, 0.0, (e - prev_e) / dt)
        dfilt_new = alpha * dfilt + (1.0 - alpha) * raw
        u_cmd = kp * e + ki * integral + kd * dfilt_new
        u_sat = np.clip(u_cmd, -umax, umax)
        integral_new = integral + dt * e
        if buf is not None:
            u_eff = buf[0].copy()
            buf[:-1] = buf[1:]
            buf[-1] = np.where(alive, u_sat, buf[-1])
        else:
            u_eff = u_sat
        u_dz = np.where(np.abs(u_eff) <= p.deadzone, 0.0, u_eff)
        sgn = np.sign(omega) * np.minimum(1.0, np.abs(omega) / v_eps)
        friction = p.viscous * omega + p.coulomb * sgn
        accel = (p.input_gain * u_dz
                 - 2.0 * p.zeta * p.omega_n * omega
                 - p.omega_n ** 2 * theta
                 - friction)
        omega_new = omega + dt * accel
        theta_new = theta + dt * omega_new

        prev_e = np.where(alive, e, prev_e)
        dfilt = np.where(alive, dfilt_new, dfilt)
        integral = np.where(alive, integral_new, integral)
        omega = np.where(alive, omega_new, omega)
        theta = np.where(alive, theta_new, theta)
        n_sat += (alive & (u_cmd != u_sat)).astype(np.int64)
        n_seen += alive.astype(np.int64)
        ymax = np.where(alive, np.maximum(ymax, np.abs(theta)), ymax)
        just_diverged = alive & (np.abs(theta) > limit)
        diverged |= just_diverged
        alive &= ~just_diverged

    os_pct = np.maximum(0.0, (ymax - r) / r) * 100.0
    full_sat = (~diverged) & (n_sat == n_steps)
    return ~(diverged | (os_pct > screen.os_max_pct) | full_sat)


def certify_batch(gains: np.ndarray, nominal: FirstOrderParams,
                  screen: ScreenConfig | None = None) -> np.ndarray:
    """Hybrid filter: analytic PI guard first, screen the survivors."""
    ok = analytic_feasible_batch(gains, nominal)
    if ok.any():
        ok_idx = np.nonzero(ok)[0]
        ok[ok_idx] = behavioral_certify_batch(gains[ok_idx], screen)
    return ok


def feasible_fraction(bounds: GainBounds, n_samples: int, seed: int,
                      nominal: FirstOrderParams,
                      screen: ScreenConfig | None = None) -> float:
    """Fraction of uniform in-bounds samples that pass the hybrid filter."""
    rng = np.random.default_rng(seed)
    draws = bounds.sample_uniform(rng, n_samples)
    return float(np.mean(certify_batch(draws, nominal, screen)))


def _record(history, index, gains, score: RobustScore, phase):
    best = min(score.aggregate_j,
               history[-1].best_so_far if history else math.inf)
    rec = EvalRecord(index=index, gains=gains, j=score.aggregate_j,
                     certified=True, n_diverged=score.n_diverged,
                     phase=phase, best_so_far=best)
    history.append(rec)
    return rec


def hcsbo_run(
    bounds: GainBounds,
    budget_n: int,
    init_n0: int,
    objective,
    seed: int,
    nominal: FirstOrderParams | None = None,
    screen: ScreenConfig | None = None,
    noise_floor: float = 1e-6,
) -> TuningResult:
    """Certified surrogate search: rejection-sampled start, then EI picks
    from a certified candidate pool each iteration.

    objective maps a GainTriple to a RobustScore; certification screens do
    not count against the evaluation budget.
    """
    if not budget_n > init_n0 >= 2:
        raise ValueError("need budget_n > init_n0 >= 2")
    nominal = nominal or FirstOrderParams()
    screen = screen or ScreenConfig()
    rng = np.random.default_rng(seed)

    history: list[EvalRecord] = []
    xs: list[np.ndarray] = []
    js: list[float] = []

    init_raw = 0
    init_rejected = 0
    consecutive = 0
    chunk = 256
    while len(xs) < init_n0:
        draws = bounds.sample_uniform(rng, chunk)
        ok = certify_batch(draws, nominal, screen)
        for row, good in zip(draws, ok):
            if len(xs) >= init_n0:
                break
            init_raw += 1
            if good:
                consecutive = 0
                gains = GainTriple(*row)
                score = objective(gains)
                xs.append(row)
                js.append(score.aggregate_j)
                _record(history, len(history), gains, score, "init")
            else:
                init_rejected += 1
                consecutive += 1
                if consecutive >= INIT_REJECTION_LIMIT:
                    raise InfeasibleDomainError(
                        f"{consecutive} consecutive samples rejected; "
                        "the certified region appears empty within bounds")

    pool_total = 0
    pool_rejected = 0
    span = bounds.upper - bounds.lower
    for n in range(init_n0, budget_n):
        data = SurrogateDataset(points=bounds.normalize(np.array(xs)),
                                values=np.array(js), noise_floor=noise_floor)
        surrogate = gp_fit(data)

        candidates = None
        for _ in range(20):
            uniform = bounds.sample_uniform(rng, POOL_UNIFORM)
            incumbent = xs[int(np.argmin(js))]
            local = rng.normal(incumbent, LOCAL_SIGMA_FRACTION * span,
                               size=(POOL_LOCAL, 3))
            local = np.clip(local, bounds.lower, bounds.upper)
            pool = np.vstack([uniform, local])
            ok = certify_batch(pool, nominal, screen)
            pool_total += len(pool)
            pool_rejected += int(np.sum(~ok))
            if ok.any():
                candidates = pool[ok]
                break
        if candidates is None:
            raise InfeasibleDomainError(
                "no certified candidates found in repeated pool draws")

        mean, var = surrogate.predict(bounds.normalize(candidates))
        ei = expected_improvement(mean, np.sqrt(var), min(js))
        pick = candidates[int(np.argmax(ei))]
        gains = GainTriple(*pick)
        score = objective(gains)
        xs.append(pick)
        js.append(score.aggregate_j)
        _record(history, n, gains, score, "bo")

    best_idx = int(np.argmin(js))
    return TuningResult(
        method="hcsbo",
        best_gains=GainTriple(*xs[best_idx]),
        best_j=js[best_idx],
        history=history,
        init_raw_samples=init_raw,
        init_rejected=init_rejected,
        pool_candidates=pool_total,
        pool_rejected=pool_rejected,
    )


def random_search_baseline(
    bounds: GainBounds,
    budget_n: int,
    objective,
    seed: int,
    nominal: FirstOrderParams | None = None,
    screen: ScreenConfig | None = None,
) -> TuningResult:
    """Uncertified uniform search at the same budget.

    Certification is still computed per candidate, for reporting only; it
    never gates an evaluation here.
    """
    if budget_n < 1:
        raise ValueError("budget_n must be at least 1")
    nominal = nominal or FirstOrderParams()
    screen = screen or ScreenConfig()
    rng = np.random.default_rng(seed)
    draws = bounds.sample_uniform(rng, budget_n)
    certified = certify_batch(draws, nominal, screen)

    history: list[EvalRecord] = []
    best = math.inf
    best_gains = None
    for i, row in enumerate(draws):
        gains = GainTriple(*row)
        score = objective(gains)
        if score.aggregate_j < best:
            best = score.aggregate_j
            best_gains = gains
        history.append(EvalRecord(
            index=i, gains=gains, j=score.aggregate_j,
            certified=bool(certified[i]), n_diverged=score.n_diverged,
            phase="random", best_so_far=best))
    return TuningResult(method="random", best_gains=best_gains,
                        best_j=best, history=history)
