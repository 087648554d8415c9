"""Discrete PID law with saturation, filtered derivative and back-calculation
anti-windup.

The controller is a pure state-transition function: pid_step consumes the
current error and state and returns the commanded effort, the saturated
effort and the next state. Independent loops can therefore run in parallel
without shared mutable state.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class GainTriple:
    """Proportional, integral and derivative gains, all non-negative."""

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            v = float(getattr(self, name))
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
            object.__setattr__(self, name, v)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.kp, self.ki, self.kd)


@dataclass(frozen=True)
class ControllerConfig:
    """Gains plus the implementation parameters of the discrete realization.

    antiwindup_kaw: back-calculation time constant; None disables the
    correction. Larger values weaken it and the limit recovers the plain
    integrator.
    deriv_filter_alpha: pole of the first-order derivative smoother in
    [0, 1); 0 means raw finite differences.
    """

    gains: GainTriple
    u_min: float = -10.0
    u_max: float = 10.0
    antiwindup_kaw: float | None = None
    deriv_filter_alpha: float = 0.0
    deriv_on: bool = True

    def __post_init__(self):
        if math.isnan(self.u_min) or math.isnan(self.u_max):
            raise ValueError("effort bounds must not be NaN")
        if not self.u_min < self.u_max:
            raise ValueError(f"u_min must be below u_max, got [{self.u_min}, {self.u_max}]")
        if self.antiwindup_kaw is not None and not self.antiwindup_kaw > 0:
            raise ValueError("antiwindup_kaw must be positive when enabled")
        if not 0.0 <= self.deriv_filter_alpha < 1.0:
            raise ValueError("deriv_filter_alpha must lie in [0, 1)")


@dataclass(frozen=True)
class ControllerState:
    """Integrator, previous error and filtered derivative estimate."""

    integral: float = 0.0
    prev_error: float = 0.0
    deriv_filtered: float = 0.0
    initialized: bool = False


def reset_state() -> ControllerState:
    """Fresh state: zero integrator, cleared derivative memory."""
    return ControllerState()


def saturate(u: float, u_min: float, u_max: float) -> float:
    """Clip the effort to the actuator bounds."""
    if not u_min < u_max:
        raise ValueError(f"invalid bounds [{u_min}, {u_max}]")
    return min(max(u, u_min), u_max)


def pid_step(
    e_k: float,
    cfg: ControllerConfig,
    st: ControllerState,
    dt: float,
) -> tuple[float, float, ControllerState]:
    """One controller update; returns (u_cmd, u_sat, next state).

    The command uses the current integrator state; the integrator is
    updated afterwards, with the back-calculation correction
    (u_sat - u_cmd)/kaw added when anti-windup is enabled. The first call
    after a reset uses a zero raw derivative so there is no startup kick.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    g = cfg.gains

    if cfg.deriv_on and g.kd != 0.0:
        raw = 0.0 if not st.initialized else (e_k - st.prev_error) / dt
        alpha = cfg.deriv_filter_alpha
        deriv = alpha * st.deriv_filtered + (1.0 - alpha) * raw
        d_term = g.kd * deriv
    else:
        deriv = st.deriv_filtered
        d_term = 0.0

    u_cmd = g.kp * e_k + g.ki * st.integral + d_term
    u_sat = saturate(u_cmd, cfg.u_min, cfg.u_max)

    if cfg.antiwindup_kaw is not None:
        integral = st.integral + dt * (e_k + (u_sat - u_cmd) / cfg.antiwindup_kaw)
    else:
        integral = st.integral + dt * e_k

    new_state = replace(
        st,
        integral=integral,
        prev_error=e_k,
        deriv_filtered=deriv,
        initialized=True,
    )
    return u_cmd, u_sat, new_state
