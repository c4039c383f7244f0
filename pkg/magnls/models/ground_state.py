"""Standing-wave solver results."""
from dataclasses import dataclass, field
from typing import Any, Dict

from magnls.models.grid import Field


@dataclass
class GroundStateResult:
    """A computed standing wave with its multiplier and residual diagnostics.

    ``objective`` is E(phi) for the mass-constrained problems and S_omega(phi)
    for the action problem; ``provenance`` records the solver inputs.
    """
    phi: Field
    omega: float
    objective: float
    residual_el: float
    k_omega: float
    h_value: float
    decay_delta: float
    scaling_second_deriv: float
    iterations: int
    converged: bool = True
    boundary_trapped: bool = False
    provenance: Dict[str, Any] = field(default_factory=dict)

    def sidecar(self):
        """JSON sidecar stored next to the archived field."""
        return {
            'omega': self.omega,
            'objective': self.objective,
            'residuals': {'euler_lagrange': self.residual_el},
            'k_omega': self.k_omega,
            'h_value': self.h_value,
            'decay_delta': self.decay_delta,
            'scaling_second_deriv': self.scaling_second_deriv,
            'iterations': self.iterations,
            'converged': self.converged,
            'boundary_trapped': self.boundary_trapped,
            'provenance': self.provenance,
        }

    def __repr__(self):
        return (f'<GroundStateResult omega={self.omega:.6g} '
                f'objective={self.objective:.6g} converged={self.converged}>')
