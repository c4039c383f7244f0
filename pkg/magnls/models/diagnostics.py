"""Per-time diagnostics record and its CSV row layout."""
from dataclasses import dataclass

CSV_COLUMNS = ('t', 'mass', 'E', 'E0', 'R', 'grad2', 'magkin2', 'rho2', 'lp', 'F',
               'Fprime', 'boundary_frac')


@dataclass(frozen=True)
class DiagnosticsRecord:
    t: float
    mass: float
    energy_E: float
    energy_E0: float
    angular_R: float
    grad_norm_sq: float
    mag_kinetic_sq: float
    rho_norm_sq: float
    lp_norm: float
    virial_F: float
    virial_Fprime: float
    boundary_mass_fraction: float
    spectral_tail: float = 0.0

    def csv_row(self):
        return (self.t, self.mass, self.energy_E, self.energy_E0, self.angular_R,
                self.grad_norm_sq, self.mag_kinetic_sq, self.rho_norm_sq, self.lp_norm,
                self.virial_F, self.virial_Fprime, self.boundary_mass_fraction)

    def to_dict(self):
        return dict(zip(CSV_COLUMNS, self.csv_row()))
