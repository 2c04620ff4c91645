from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from rmpc.errors import ConfigError, ContractViolation
from rmpc.rollout import MpcInstance

Range = Tuple[float, float]


def load_recorded_reference(path: Union[str, Path]) -> np.ndarray:
    """Reference samples from a CSV file: column `r` if present, otherwise the first numeric column."""
    try:
        df = pd.read_csv(path)
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as ex:
        raise ConfigError(f"cannot read recorded reference <{path}>: {ex}") from ex
    if "r" in df.columns:
        series = df["r"]
    else:
        numeric = df.select_dtypes(include="number")
        if numeric.shape[1] == 0:
            raise ConfigError(f"recorded reference <{path}> has no numeric column")
        series = numeric.iloc[:, 0]
    values = series.to_numpy(dtype=np.float64)
    if values.size == 0 or not np.all(np.isfinite(values)):
        raise ConfigError(f"recorded reference <{path}> is empty or not finite")
    return values


@dataclass(frozen=True)
class SamplerSpec:
    """Distribution of training and evaluation instances.

    x0 is uniform in [state_low, state_high]; when `track_index` is set that component
    is drawn relative to r_1. References of length `horizon` come from one family:

    - sine: r_i = A sin(2 pi i step_length / wavelength + phase)
    - piecewise-constant: uniform levels held for a uniform number of steps
    - recorded: a random window of a recorded series
    """

    state_low: Tuple[float, ...]
    state_high: Tuple[float, ...]
    horizon: int
    family: str = "sine"
    track_index: Optional[int] = 0
    amplitude: Range = (0.0, 1.0)
    wavelength: Range = (4.0, 16.0)
    phase: Range = (0.0, 2 * np.pi)
    step_length: float = 1.0
    levels: Range = (-1.0, 1.0)
    hold: Tuple[int, int] = (2, 10)
    recorded: Optional[Tuple[float, ...]] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "state_low", tuple(float(v) for v in self.state_low))
        object.__setattr__(self, "state_high", tuple(float(v) for v in self.state_high))
        if len(self.state_low) != len(self.state_high):
            raise ContractViolation("state box bounds differ in length")
        if any(lo > hi for lo, hi in zip(self.state_low, self.state_high)):
            raise ContractViolation(f"empty state box {self.state_low} / {self.state_high}")
        if self.horizon < 1:
            raise ContractViolation("sampled horizon must be >= 1")
        if self.track_index is not None and not 0 <= self.track_index < len(self.state_low):
            raise ContractViolation(f"track_index {self.track_index} outside the state")
        if self.family == "recorded":
            if self.recorded is None or len(self.recorded) < self.horizon:
                raise ContractViolation(f"recorded reference shorter than the horizon {self.horizon}")
            object.__setattr__(self, "recorded", tuple(float(v) for v in self.recorded))
        elif self.family not in ("sine", "piecewise-constant"):
            raise ContractViolation(f"unknown reference family <{self.family}>")
        if self.family == "sine" and self.wavelength[0] <= 0:
            raise ContractViolation("sine wavelength must be positive")

    @property
    def n(self) -> int:
        return len(self.state_low)


def _uniform(rng: np.random.Generator, bounds: Sequence[float]) -> float:
    return float(rng.uniform(bounds[0], bounds[1]))


def sample_reference(spec: SamplerSpec, rng: np.random.Generator, length: Optional[int] = None) -> np.ndarray:
    length = spec.horizon if length is None else length
    steps = np.arange(1, length + 1, dtype=np.float64)
    if spec.family == "sine":
        amplitude = _uniform(rng, spec.amplitude)
        wavelength = _uniform(rng, spec.wavelength)
        phase = _uniform(rng, spec.phase)
        return sine_reference(steps, amplitude, wavelength, phase, spec.step_length)
    if spec.family == "piecewise-constant":
        r = np.empty(length)
        i = 0
        while i < length:
            hold = int(rng.integers(spec.hold[0], spec.hold[1] + 1))
            r[i:i + hold] = _uniform(rng, spec.levels)
            i += hold
        return r
    series = np.asarray(spec.recorded)
    start = int(rng.integers(0, series.size - length + 1))
    return series[start:start + length].copy()


def sine_reference(steps, amplitude: float, wavelength: float, phase: float, step_length: float) -> np.ndarray:
    steps = np.asarray(steps, dtype=np.float64)
    return amplitude * np.sin(2.0 * np.pi * steps * step_length / wavelength + phase)


def sample_instance(spec: SamplerSpec, rng: np.random.Generator) -> MpcInstance:
    """Draws the reference first, then x0 (possibly relative to r_1)."""
    r = sample_reference(spec, rng)
    x0 = rng.uniform(np.asarray(spec.state_low), np.asarray(spec.state_high))
    if spec.track_index is not None:
        x0[spec.track_index] += r[0]
    return MpcInstance(x0, r, spec.horizon)


def sample_batch(spec: SamplerSpec, rng: np.random.Generator, batch_size: int) -> List[MpcInstance]:
    return [sample_instance(spec, rng) for _ in range(batch_size)]


def scenario_reference(family: str, length: int, step_length: float, amplitude: float = 1.0,
                       wavelength: float = 8.0, phase: float = 0.0, levels: Sequence[float] = (-1.0, 1.0),
                       hold: int = 40, recorded: Optional[np.ndarray] = None) -> np.ndarray:
    """Deterministic closed-loop reference stream r_1..r_length."""
    steps = np.arange(1, length + 1, dtype=np.float64)
    if family == "sine":
        return sine_reference(steps, amplitude, wavelength, phase, step_length)
    if family == "piecewise-constant":
        return np.asarray(levels, dtype=np.float64)[(np.arange(length) // max(hold, 1)) % len(levels)]
    if family == "recorded":
        series = np.asarray(recorded, dtype=np.float64)
        if series.size >= length:
            return series[:length].copy()
        return np.concatenate([series, np.full(length - series.size, series[-1])])
    raise ContractViolation(f"unknown reference family <{family}>")
