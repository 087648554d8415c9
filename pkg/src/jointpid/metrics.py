"""Step-response and tracking-fidelity metrics over sampled trajectories.

Conventions, fixed package-wide:

* A trajectory row k holds the state produced by the k-th control update,
  timestamped t_k = k*dt; the tracking error series is reference - output.
* IAE integrates |e| with the trapezoid rule on the sample grid.
* The terminal error averages |e| over the last ceil(10%) of samples.
* Rise and settling times are grid times, never interpolated; metrics that
  never trigger are None (serialized as null / empty cell downstream).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SETTLE_BAND = 0.02
RISE_THRESHOLD = 0.9
TAIL_FRACTION = 0.1


@dataclass
class Trajectory:
    """Time-indexed record of one closed-loop run.

    All series share one length. `diverged` marks a run truncated by the
    divergence guard.
    """

    dt: float
    reference: np.ndarray
    output: np.ndarray
    measured: np.ndarray
    u_cmd: np.ndarray
    u_sat: np.ndarray
    integrator: np.ndarray
    diverged: bool = False

    def __post_init__(self):
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        n = len(self.reference)
        for name in ("output", "measured", "u_cmd", "u_sat", "integrator"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"series '{name}' length differs from reference")

    def __len__(self) -> int:
        return len(self.reference)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self.reference)) * self.dt

    @property
    def error(self) -> np.ndarray:
        return self.reference - self.output

    def slice(self, start: int, stop: int) -> "Trajectory":
        """Sub-trajectory over sample indices [start, stop)."""
        return Trajectory(
            dt=self.dt,
            reference=self.reference[start:stop],
            output=self.output[start:stop],
            measured=self.measured[start:stop],
            u_cmd=self.u_cmd[start:stop],
            u_sat=self.u_sat[start:stop],
            integrator=self.integrator[start:stop],
            diverged=self.diverged,
        )


@dataclass(frozen=True)
class StepMetrics:
    overshoot_pct: float
    rise_time: float | None
    settle_time: float | None
    ss_error: float
    iae: float
    sat_duty: float
    u_rms: float

    def as_dict(self) -> dict:
        return {
            "overshoot_pct": self.overshoot_pct,
            "rise_time": self.rise_time,
            "settle_time": self.settle_time,
            "ss_error": self.ss_error,
            "iae": self.iae,
            "sat_duty": self.sat_duty,
            "u_rms": self.u_rms,
        }


def percent_overshoot(traj: Trajectory, r: float) -> float:
    """Peak above the reference as a percentage of r, clipped at zero."""
    if r == 0:
        raise ValueError("relative overshoot is undefined for r = 0; "
                         "use peak_deviation for regulation tasks")
    return max(0.0, (float(np.max(traj.output)) - r) / r) * 100.0


def peak_deviation(traj: Trajectory) -> float:
    """Largest |output| excursion; the absolute variant for r = 0 tasks."""
    return float(np.max(np.abs(traj.output)))


def rise_time(traj: Trajectory, r: float) -> float | None:
    """First grid time with output >= 0.9 r, or None if never reached."""
    if r <= 0:
        raise ValueError("rise_time requires a positive reference")
    hits = np.nonzero(traj.output >= RISE_THRESHOLD * r)[0]
    if len(hits) == 0:
        return None
    return float(hits[0] * traj.dt)


def settling_time(traj: Trajectory, r: float) -> float | None:
    """Earliest grid time from which the output stays within the +/-2% band.

    For r = 0 the band is absolute: 0.02 * max(1, peak |y|).
    """
    if r != 0:
        tol = SETTLE_BAND * abs(r)
    else:
        tol = SETTLE_BAND * max(1.0, peak_deviation(traj))
    inside = np.abs(traj.output - r) <= tol
    if not inside[-1]:
        return None
    outside = np.nonzero(~inside)[0]
    first = 0 if len(outside) == 0 else int(outside[-1]) + 1
    return float(first * traj.dt)


def steady_state_error(traj: Trajectory, r: float,
                       tail_fraction: float = TAIL_FRACTION) -> float:
    """Mean |r - y| over the final ceil(tail_fraction * n) samples."""
    if not 0.0 < tail_fraction <= 1.0:
        raise ValueError("tail_fraction must lie in (0, 1]")
    n = len(traj)
    m = math.ceil(tail_fraction * n)
    return float(np.mean(np.abs(r - traj.output[-m:])))


def iae(traj: Trajectory) -> float:
    """Integral of |error| over the trajectory, trapezoid rule on the grid."""
    return float(np.trapezoid(np.abs(traj.error), dx=traj.dt))


def saturation_duty(traj: Trajectory) -> float:
    """Fraction of samples on which the clamp altered the command."""
    return float(np.mean(traj.u_cmd != traj.u_sat))


def u_rms(traj: Trajectory) -> float:
    """Root-mean-square of the saturated effort."""
    return float(np.sqrt(np.mean(traj.u_sat ** 2)))


def compute_step_metrics(traj: Trajectory, r: float) -> StepMetrics:
    """All step metrics of one trajectory against a scalar reference."""
    return StepMetrics(
        overshoot_pct=percent_overshoot(traj, r) if r != 0
        else peak_deviation(traj) * 100.0,
        rise_time=rise_time(traj, r) if r > 0 else None,
        settle_time=settling_time(traj, r),
        ss_error=steady_state_error(traj, r),
        iae=iae(traj),
        sat_duty=saturation_duty(traj),
        u_rms=u_rms(traj),
    )
