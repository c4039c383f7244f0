"""Time-integration configuration and outcome."""
import enum
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

from magnls.models.diagnostics import DiagnosticsRecord
from magnls.models.grid import Field
from magnls.utils.errors import ConfigError


class EvolveStatus(str, enum.Enum):
    REACHED_T_FINAL = 'ReachedTFinal'
    NUMERICAL_BLOWUP = 'NumericalBlowUp'
    RESOLUTION_LOSS = 'ResolutionLoss'


@dataclass(frozen=True)
class EvolveConfig:
    """Stepper settings.

    ``cfl`` scales the adaptive step ``dt = min(dt_initial, cfl * M / |grad u|^2)``;
    when left as None it is fixed so the first step equals ``dt_initial``.
    """
    dt_initial: float = 1e-3
    t_final: float = 1.0
    adapt: bool = True
    blowup_grad_ratio: float = 25.0
    tail_fraction_max: float = 1e-4
    record_stride: int = 10
    cfl: Optional[float] = None
    max_steps: int = 200000
    nonlinear: bool = True
    checkpoint_stride: int = 0

    def __post_init__(self):
        if not self.dt_initial > 0:
            raise ConfigError('evolve.dt_initial', 'must be positive')
        if not self.t_final > 0:
            raise ConfigError('evolve.t_final', 'must be positive')
        if not self.blowup_grad_ratio > 1:
            raise ConfigError('evolve.blowup_grad_ratio', 'must exceed 1')
        if not 0 < self.tail_fraction_max < 1:
            raise ConfigError('evolve.tail_fraction_max', 'must lie in (0, 1)')
        if self.record_stride < 1:
            raise ConfigError('evolve.record_stride', 'must be at least 1')
        if self.max_steps < 1:
            raise ConfigError('evolve.max_steps', 'must be at least 1')

    @classmethod
    def from_dict(cls, data):
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError('evolve', f"unknown keys {sorted(unknown)}")
        return cls(**data)

    def to_dict(self):
        return {name: getattr(self, name) for name in self.__dataclass_fields__}


@dataclass
class EvolveOutcome:
    status: EvolveStatus
    t_end: float
    series: List[DiagnosticsRecord]
    final_state: Field
    blowup_time_estimate: Optional[float] = None
    steps: int = 0
    annotations: Dict[str, Any] = field(default_factory=dict)

    def drift(self):
        """Relative drift of mass, energy and angular momentum over the series."""
        first, last = self.series[0], self.series[-1]

        def rel(a, b, scale):
            return abs(b - a) / scale if scale > 0 else abs(b - a)

        energy_scale = max(abs(first.energy_E), first.mag_kinetic_sq, 1e-300)
        return {
            'mass': rel(first.mass, last.mass, first.mass),
            'energy_E': rel(first.energy_E, last.energy_E, energy_scale),
            'angular_R': rel(first.angular_R, last.angular_R, max(first.mass, 1e-300)),
        }

    def summary(self):
        return {
            'status': self.status.value,
            't_end': self.t_end,
            'steps': self.steps,
            'drift': self.drift(),
            'blowup_time_estimate': self.blowup_time_estimate,
            'annotations': self.annotations,
        }
