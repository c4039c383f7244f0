"""Dichotomy verdicts and their evidence."""
import enum
from dataclasses import dataclass, field
from typing import Dict, List, Optional


class Verdict(str, enum.Enum):
    GLOBAL_MASS_SUBCRITICAL = 'GlobalMassSubcritical'
    GLOBAL_MASS_CRITICAL = 'GlobalMassCritical'
    BLOWUP_KIEFFER_LOSS_1 = 'BlowupKiefferLoss1'
    BLOWUP_KIEFFER_LOSS_2 = 'BlowupKiefferLoss2'
    BLOWUP_KIEFFER_LOSS_3 = 'BlowupKiefferLoss3'
    GLOBAL_BELOW_THRESHOLD = 'GlobalBelowThreshold'
    BLOWUP_BELOW_THRESHOLD = 'BlowupBelowThreshold'
    GLOBAL_AT_THRESHOLD = 'GlobalAtThreshold'
    CONDITIONAL_AT_THRESHOLD = 'ConditionalAtThreshold'
    BLOWUP_ABOVE_THRESHOLD = 'BlowupAboveThreshold'
    NEGATIVE_ENERGY_BLOWUP = 'NegativeEnergyBlowup'
    INDETERMINATE = 'Indeterminate'

    @property
    def predicts_blowup(self):
        return self.value.startswith('Blowup') or self is Verdict.NEGATIVE_ENERGY_BLOWUP

    @property
    def predicts_global(self):
        return self.value.startswith('Global')


@dataclass(frozen=True)
class Inequality:
    """lhs <relation> rhs, with margin > 0 exactly when the relation holds."""
    lhs: float
    rhs: float
    relation: str = '<'

    @property
    def margin(self):
        if self.relation in ('<', '<='):
            return self.rhs - self.lhs
        return self.lhs - self.rhs

    @property
    def holds(self):
        if self.relation == '<':
            return self.lhs < self.rhs
        if self.relation == '<=':
            return self.lhs <= self.rhs
        if self.relation == '>':
            return self.lhs > self.rhs
        return self.lhs >= self.rhs

    def to_dict(self):
        return {'lhs': self.lhs, 'rhs': self.rhs, 'margin': self.margin,
                'relation': self.relation}


@dataclass
class ClassificationReport:
    verdict: Verdict
    alpha: float
    b: float
    evidence: Dict[str, Inequality] = field(default_factory=dict)
    quantities: Dict[str, Optional[float]] = field(default_factory=dict)
    tolerances: Dict[str, float] = field(default_factory=dict)
    notes: List[str] = field(default_factory=list)

    def merge(self, other):
        """Absorb evidence from a delegated report, keeping our own entries."""
        for name, item in other.evidence.items():
            self.evidence.setdefault(name, item)
        for name, value in other.quantities.items():
            self.quantities.setdefault(name, value)
        self.notes.extend(n for n in other.notes if n not in self.notes)
        return self

    def to_dict(self):
        return {
            'verdict': self.verdict.value,
            'alpha': self.alpha,
            'b': self.b,
            'evidence': {name: ineq.to_dict() for name, ineq in sorted(self.evidence.items())},
            'quantities': dict(sorted(self.quantities.items())),
            'tolerances': dict(sorted(self.tolerances.items())),
            'notes': list(self.notes),
        }
