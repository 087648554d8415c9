"""Measurement pipeline and input delay line.

Measurements pass through additive Gaussian noise and then encoder-style
quantization; the control effort passes through an integer-sample FIFO
delay between saturation and the plant.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SensorModel:
    """Noise level, quantization interval and seed of the noise stream."""

    noise_sigma: float = 0.0
    quant_step: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be non-negative")
        if self.quant_step < 0:
            raise ValueError("quant_step must be non-negative")


def quantize(value: float, step: float) -> float:
    """Round to the nearest multiple of step, halves away from zero.

    step == 0 disables quantization.
    """
    if step == 0.0:
        return value
    return math.copysign(math.floor(abs(value) / step + 0.5) * step, value)


class SensorStream:
    """Stateful measurement source: y -> quantize(y + noise).

    Identical (seed, sigma, quant_step) produce bitwise-identical
    measurement sequences on replay.
    """

    def __init__(self, model: SensorModel):
        self.model = model
        self._rng = np.random.default_rng(model.seed)

    def measure(self, y_true: float) -> float:
        noisy = y_true
        if self.model.noise_sigma > 0.0:
            noisy = y_true + self.model.noise_sigma * self._rng.standard_normal()
        return quantize(noisy, self.model.quant_step)

    def reset(self):
        self._rng = np.random.default_rng(self.model.seed)


class DelayLine:
    """Integer-sample FIFO: output at step k is the input pushed at k - depth."""

    def __init__(self, depth: int):
        if depth < 0:
            raise ValueError("delay depth must be non-negative")
        self.depth = depth
        self._buf = deque([0.0] * depth)

    def push_pop(self, u_in: float) -> float:
        if self.depth == 0:
            return u_in
        self._buf.append(u_in)
        return self._buf.popleft()

    def reset(self):
        self._buf = deque([0.0] * self.depth)
