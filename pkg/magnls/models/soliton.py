"""Radial soliton profile and the sharp constants derived from it."""
from dataclasses import asdict, dataclass, field
from typing import Dict

import numpy as np


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Positive radial solution Q of -Q'' - 2Q'/r + Q - Q^(alpha+1) = 0.

    Beyond ``r_nodes[-1]`` the profile continues as
    ``tail_amplitude * exp(-r) / r``.
    """
    alpha: float
    r_nodes: np.ndarray
    q_values: np.ndarray
    dq_values: np.ndarray
    tail_rate: float
    tail_amplitude: float
    residual: float = 0.0
    tol: float = 1e-10

    @property
    def q0(self):
        return float(self.q_values[0])

    @property
    def r_max(self):
        return float(self.r_nodes[-1])

    def to_dict(self):
        return {
            'alpha': self.alpha,
            'r_nodes': self.r_nodes.tolist(),
            'q_values': self.q_values.tolist(),
            'dq_values': self.dq_values.tolist(),
            'tail_rate': self.tail_rate,
            'tail_amplitude': self.tail_amplitude,
            'residual': self.residual,
            'tol': self.tol,
        }

    @classmethod
    def from_dict(cls, data):
        return cls(
            alpha=float(data['alpha']),
            r_nodes=np.asarray(data['r_nodes'], dtype=float),
            q_values=np.asarray(data['q_values'], dtype=float),
            dq_values=np.asarray(data['dq_values'], dtype=float),
            tail_rate=float(data['tail_rate']),
            tail_amplitude=float(data['tail_amplitude']),
            residual=float(data.get('residual', 0.0)),
            tol=float(data.get('tol', 1e-10)),
        )

    def __repr__(self):
        return f'<RadialProfile alpha={self.alpha} q0={self.q0:.6f}>'


@dataclass(frozen=True)
class QConstants:
    """Norms of Q and the threshold constants built from them.

    ``sigma_c`` is ``inf`` in the mass-critical case, where ``e0_mq`` and
    ``lp_mass_product`` are unused.
    """
    alpha: float
    mass_Q: float
    grad_Q_sq: float
    lp_Q: float
    sigma_c: float
    c_opt: float
    e0_mq: float
    grad_mass_product: float
    lp_mass_product: float
    rho_Q_sq: float
    x_Q_sq: float
    q0: float
    pohozaev_residuals: Dict[str, float] = field(default_factory=dict)

    @property
    def is_mass_critical(self):
        return np.isinf(self.sigma_c)

    def to_dict(self):
        data = asdict(self)
        if np.isinf(self.sigma_c):
            data['sigma_c'] = 'inf'
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        if data.get('sigma_c') == 'inf':
            data['sigma_c'] = float('inf')
        return cls(**data)
