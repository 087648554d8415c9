"""Discrete-time joint plant models.

Two first-order discretizations of the velocity-limited joint model
tau*dy/dt + y = K*u (forward Euler and exact zero-order hold), plus a
second-order actuator model with deadzone and friction integrated by
semi-implicit Euler.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

# Velocity below which the Coulomb friction sign is linearly smoothed, rad/s.
# Prevents force chatter when the joint is at rest.
COULOMB_V_EPS = 1e-4


@dataclass(frozen=True)
class FirstOrderParams:
    """First-order joint: time constant, static gain, sampling interval."""

    tau: float = 1.0
    gain: float = 1.0
    dt: float = 0.01

    def __post_init__(self):
        if not (self.tau > 0 and math.isfinite(self.tau)):
            raise ValueError(f"tau must be positive and finite, got {self.tau}")
        if not (self.gain > 0 and math.isfinite(self.gain)):
            raise ValueError(f"gain must be positive and finite, got {self.gain}")
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise ValueError(f"dt must be positive and finite, got {self.dt}")

    @property
    def euler_open_loop_stable(self) -> bool:
        """Forward Euler keeps the open-loop pole inside the unit circle."""
        return self.dt < 2.0 * self.tau


@dataclass(frozen=True)
class ZohCoeffs:
    """Exact discrete map y[k+1] = a*y[k] + b*u[k] for a held input."""

    a: float
    b: float


@dataclass(frozen=True)
class SecondOrderParams:
    """Second-order actuator with input deadzone and friction.

    Dynamics: theta_dd + 2*zeta*omega_n*theta_d + omega_n^2*theta
    = input_gain*u_eff + d_ext - friction(theta_d), where u_eff is the
    deadzoned input and friction combines viscous and smoothed Coulomb
    terms. Static gain from input to position is input_gain/omega_n^2.
    """

    omega_n: float = 9.0
    zeta: float = 0.7
    input_gain: float = 1.0
    viscous: float = 0.05
    coulomb: float = 0.02
    deadzone: float = 0.01
    dt: float = 0.002

    def __post_init__(self):
        if not (self.omega_n > 0 and self.zeta > 0 and self.dt > 0):
            raise ValueError("omega_n, zeta and dt must be positive")
        if self.viscous < 0 or self.coulomb < 0 or self.deadzone < 0:
            raise ValueError("friction terms and deadzone must be non-negative")


def analytic_step_response(t: float, p: FirstOrderParams) -> float:
    """Closed-form output of the first-order plant for a unit step from rest."""
    if t < 0:
        raise ValueError(f"t must be non-negative, got {t}")
    return p.gain * (1.0 - math.exp(-t / p.tau))


def euler_step(y: float, u: float, p: FirstOrderParams) -> float:
    """One forward-Euler update of the first-order plant."""
    if not (math.isfinite(y) and math.isfinite(u)):
        raise ValueError("euler_step requires finite state and input")
    return y + p.dt * (-y / p.tau + p.gain * u / p.tau)


def zoh_coeffs(p: FirstOrderParams) -> ZohCoeffs:
    """Exact hold-equivalent coefficients a = exp(-dt/tau), b = gain*(1-a)."""
    a = math.exp(-p.dt / p.tau)
    return ZohCoeffs(a=a, b=p.gain * (1.0 - a))


def zoh_step(y: float, u: float, c: ZohCoeffs) -> float:
    """One exact discrete update under a zero-order-held input."""
    if not (math.isfinite(y) and math.isfinite(u)):
        raise ValueError("zoh_step requires finite state and input")
    return c.a * y + c.b * u


def apply_deadzone(u: float, width: float) -> float:
    """Zero the input inside the deadzone band, pass it through outside."""
    return 0.0 if abs(u) <= width else u


def smoothed_sign(v: float, v_eps: float = COULOMB_V_EPS) -> float:
    """sign(v) ramped linearly through [-v_eps, v_eps] to avoid chatter."""
    if v == 0.0:
        return 0.0
    return math.copysign(min(1.0, abs(v) / v_eps), v)


def second_order_step(
    state: tuple[float, float],
    u: float,
    d_ext: float,
    p: SecondOrderParams,
) -> tuple[float, float]:
    """Advance the actuator one sample with semi-implicit Euler.

    Velocity is updated from the current state, then position is updated
    with the new velocity, which keeps lightly damped modes stable at
    millisecond sampling without an exact discretization of the friction.
    """
    theta, omega = state
    if not (math.isfinite(theta) and math.isfinite(omega)
            and math.isfinite(u) and math.isfinite(d_ext)):
        raise ValueError("second_order_step requires finite state and inputs")
    u_eff = apply_deadzone(u, p.deadzone)
    friction = p.viscous * omega + p.coulomb * smoothed_sign(omega)
    accel = (p.input_gain * u_eff + d_ext
             - 2.0 * p.zeta * p.omega_n * omega
             - p.omega_n ** 2 * theta
             - friction)
    omega_next = omega + p.dt * accel
    theta_next = theta + p.dt * omega_next
    return theta_next, omega_next


def second_order_energy(state: tuple[float, float], p: SecondOrderParams) -> float:
    """Mechanical energy 0.5*w^2 + 0.5*omega_n^2*theta^2 of the actuator."""
    theta, omega = state
    return 0.5 * omega ** 2 + 0.5 * p.omega_n ** 2 * theta ** 2
