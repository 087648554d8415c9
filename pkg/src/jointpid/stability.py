"""Closed-form discrete-time stability certification for P and PI loops.

The PI closed loop over state (y, I) is second order, so Schur stability
reduces to three polynomial inequalities on the monic characteristic
polynomial. Both the forward-Euler and the exact hold discretizations are
covered, plus a sampled robust screen that augments the loop with input
delay states and falls back to an eigenvalue check.
"""

from __future__ import annotations

import cmath
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .plants import FirstOrderParams, zoh_coeffs


@dataclass(frozen=True)
class JuryVerdict:
    """Outcome of one stability test.

    margins are the three inequality left-hand sides; the loop is Schur
    stable iff all of them are strictly positive, which is cross-checked
    against the spectral radius of the closed-loop matrix.
    """

    stable: bool
    margins: tuple[float, float, float]
    spectral_radius: float


@dataclass
class StabilityRegionGrid:
    """Boolean stability verdicts on a (kp, ki) grid."""

    kp_axis: np.ndarray
    ki_axis: np.ndarray
    verdicts: np.ndarray  # shape (len(ki_axis), len(kp_axis))
    discretization: str

    def __post_init__(self):
        if self.verdicts.shape != (len(self.ki_axis), len(self.kp_axis)):
            raise ValueError("verdict matrix shape does not match axes")

    def rows(self):
        """Yield (kp, ki, stable) per grid node, kp-major order."""
        for i, ki in enumerate(self.ki_axis):
            for j, kp in enumerate(self.kp_axis):
                yield float(kp), float(ki), int(self.verdicts[i, j])

    def write_csv(self, path: Path):
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("kp,ki,stable\n")
            for kp, ki, s in self.rows():
                fh.write(f"{kp:.10g},{ki:.10g},{s}\n")

    def write_json(self, path: Path):
        payload = {
            "discretization": self.discretization,
            "kp_axis": [float(v) for v in self.kp_axis],
            "ki_axis": [float(v) for v in self.ki_axis],
            "stable": self.verdicts.astype(int).tolist(),
        }
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(payload, fh, indent=1)
            fh.write("\n")


def p_control_pole(kp: float, p: FirstOrderParams) -> float:
    """Scalar closed-loop pole of proportional control under forward Euler."""
    return 1.0 - (p.dt / p.tau) * (1.0 + p.gain * kp)


def _quadratic_radius(a1: float, a0: float) -> float:
    """Largest root modulus of z^2 + a1 z + a0."""
    disc = cmath.sqrt(a1 * a1 - 4.0 * a0)
    r1 = (-a1 + disc) / 2.0
    r2 = (-a1 - disc) / 2.0
    return max(abs(r1), abs(r2))


def jury_monic_quadratic(a1: float, a0: float) -> JuryVerdict:
    """Schur test for z^2 + a1 z + a0: three strict inequalities."""
    margins = (1.0 + a1 + a0, 1.0 - a1 + a0, 1.0 - a0)
    return JuryVerdict(
        stable=all(m > 0 for m in margins),
        margins=margins,
        spectral_radius=_quadratic_radius(a1, a0),
    )


def euler_pi_matrix(kp: float, ki: float, p: FirstOrderParams) -> np.ndarray:
    """Closed-loop state matrix over (y, I) under forward Euler, r = 0."""
    alpha = p.dt / p.tau
    return np.array([
        [1.0 - alpha * (1.0 + p.gain * kp), alpha * p.gain * ki],
        [-p.dt, 1.0],
    ])


def zoh_pi_matrix(kp: float, ki: float, p: FirstOrderParams) -> np.ndarray:
    """Closed-loop state matrix over (y, I) under the exact hold, r = 0."""
    c = zoh_coeffs(p)
    return np.array([
        [c.a - c.b * kp, c.b * ki],
        [-p.dt, 1.0],
    ])


def jury_euler_pi(kp: float, ki: float, p: FirstOrderParams) -> JuryVerdict:
    """PI stability under forward Euler via the explicit inequalities.

    Margins: (ki, the z = -1 test, the determinant test); the last one
    rearranges into the integrator guardrail ki < (1 + K kp)/(K dt).
    """
    alpha = p.dt / p.tau
    m1 = ki
    m2 = 4.0 - 2.0 * alpha * (1.0 + p.gain * kp) + alpha * p.gain * ki * p.dt
    m3 = alpha * (1.0 + p.gain * kp) - alpha * p.gain * ki * p.dt
    mat = euler_pi_matrix(kp, ki, p)
    a1 = -float(np.trace(mat))
    a0 = float(np.linalg.det(mat))
    return JuryVerdict(
        stable=m1 > 0 and m2 > 0 and m3 > 0,
        margins=(m1, m2, m3),
        spectral_radius=_quadratic_radius(a1, a0),
    )


def jury_zoh_pi(kp: float, ki: float, p: FirstOrderParams) -> JuryVerdict:
    """PI stability under the exact hold via the monic quadratic test."""
    mat = zoh_pi_matrix(kp, ki, p)
    a1 = -float(mat[0, 0] + mat[1, 1])
    a0 = float(mat[0, 0] * mat[1, 1] - mat[0, 1] * mat[1, 0])
    return jury_monic_quadratic(a1, a0)


def ki_upper_bound(kp: float, p: FirstOrderParams) -> float:
    """Largest integral gain the Euler determinant test admits at fixed kp."""
    return (1.0 + p.gain * kp) / (p.gain * p.dt)


def region_grid(
    kp_range: tuple[float, float],
    ki_range: tuple[float, float],
    resolution: int,
    discretization: str,
    p: FirstOrderParams,
) -> StabilityRegionGrid:
    """Evaluate the chosen test on an evenly spaced (kp, ki) grid."""
    if kp_range[0] >= kp_range[1] or ki_range[0] >= ki_range[1]:
        raise ValueError("grid ranges must be non-degenerate")
    if resolution < 2:
        raise ValueError("resolution must be at least 2")
    kp_axis = np.linspace(kp_range[0], kp_range[1], resolution)
    ki_axis = np.linspace(ki_range[0], ki_range[1], resolution)
    KP, KI = np.meshgrid(kp_axis, ki_axis)

    if discretization == "euler":
        alpha = p.dt / p.tau
        m1 = KI
        m2 = 4.0 - 2.0 * alpha * (1.0 + p.gain * KP) + alpha * p.gain * KI * p.dt
        m3 = alpha * (1.0 + p.gain * KP) - alpha * p.gain * KI * p.dt
    elif discretization == "zoh":
        c = zoh_coeffs(p)
        a1 = -(1.0 + c.a - c.b * KP)
        a0 = (c.a - c.b * KP) + c.b * KI * p.dt
        m1 = 1.0 + a1 + a0
        m2 = 1.0 - a1 + a0
        m3 = 1.0 - a0
    else:
        raise ValueError(f"unknown discretization '{discretization}'")

    verdicts = (m1 > 0) & (m2 > 0) & (m3 > 0)
    return StabilityRegionGrid(kp_axis=kp_axis, ki_axis=ki_axis,
                               verdicts=verdicts, discretization=discretization)


@dataclass(frozen=True)
class PlantUncertainty:
    """Sampling ranges for the robust point screen."""

    tau_range: tuple[float, float] = (0.5, 1.5)
    gain_range: tuple[float, float] = (0.8, 1.2)
    delays: tuple[int, ...] = (0, 1, 2, 3)


def delay_augmented_matrix(kp: float, ki: float, p: FirstOrderParams,
                           delay: int) -> np.ndarray:
    """ZOH closed loop with the delayed efforts appended as extra states.

    State ordering (y, I, u[k-1], ..., u[k-delay]); the plant consumes the
    oldest buffered effort.
    """
    c = zoh_coeffs(p)
    if delay == 0:
        return zoh_pi_matrix(kp, ki, p)
    n = 2 + delay
    A = np.zeros((n, n))
    A[0, 0] = c.a
    A[0, n - 1] = c.b
    A[1, 0] = -p.dt
    A[1, 1] = 1.0
    A[2, 0] = -kp
    A[2, 1] = ki
    for j in range(3, n):
        A[j, j - 1] = 1.0
    return A


def spectral_radius(mat: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(mat))))


def robust_point_screen(
    kp: float,
    ki: float,
    uncertainty: PlantUncertainty,
    n_draws: int,
    seed: int,
    dt: float = 0.01,
) -> float:
    """Fraction of sampled (tau, gain, delay) plants the PI pair stabilizes."""
    rng = np.random.default_rng(seed)
    stable = 0
    for _ in range(n_draws):
        tau = rng.uniform(*uncertainty.tau_range)
        gain = rng.uniform(*uncertainty.gain_range)
        d = int(rng.choice(uncertainty.delays))
        p = FirstOrderParams(tau=tau, gain=gain, dt=dt)
        mat = delay_augmented_matrix(kp, ki, p, d)
        if spectral_radius(mat) < 1.0:
            stable += 1
    return stable / n_draws
