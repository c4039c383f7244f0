"""Domain types."""
from magnls.models.grid import Field, Grid, GridError, Params, MASS_CRITICAL_ALPHA
from magnls.models.soliton import QConstants, RadialProfile
from magnls.models.diagnostics import CSV_COLUMNS, DiagnosticsRecord
from magnls.models.evolution import EvolveConfig, EvolveOutcome, EvolveStatus
from magnls.models.classification import ClassificationReport, Inequality, Verdict
from magnls.models.ground_state import GroundStateResult
from magnls.models.scenario import COMMANDS, DATA_KINDS, ScenarioConfig, parse_alpha

__all__ = [
    'Field', 'Grid', 'GridError', 'Params', 'MASS_CRITICAL_ALPHA',
    'QConstants', 'RadialProfile',
    'CSV_COLUMNS', 'DiagnosticsRecord',
    'EvolveConfig', 'EvolveOutcome', 'EvolveStatus',
    'ClassificationReport', 'Inequality', 'Verdict',
    'GroundStateResult',
    'COMMANDS', 'DATA_KINDS', 'ScenarioConfig', 'parse_alpha',
]
