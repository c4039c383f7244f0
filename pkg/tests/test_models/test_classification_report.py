"""Tests for verdicts, inequalities and classification reports."""
from magnls.models.classification import ClassificationReport, Inequality, Verdict


class TestInequality:
    """Test cases for Inequality margins."""

    def test_less_than(self):
        """Test margin is positive exactly when lhs < rhs."""
        assert Inequality(1.0, 2.0, '<').margin == 1.0
        assert Inequality(1.0, 2.0, '<').holds
        assert not Inequality(2.0, 2.0, '<').holds
        assert Inequality(2.0, 2.0, '<=').holds

    def test_greater_than(self):
        """Test margin orientation flips for '>'."""
        ineq = Inequality(3.0, 1.0, '>')
        assert ineq.margin == 2.0
        assert ineq.holds
        assert ineq.to_dict() == {'lhs': 3.0, 'rhs': 1.0, 'margin': 2.0, 'relation': '>'}


class TestVerdict:
    """Test cases for verdict predictions."""

    def test_predictions(self):
        """Test blow-up and global verdict families."""
        assert Verdict.BLOWUP_KIEFFER_LOSS_2.predicts_blowup
        assert Verdict.NEGATIVE_ENERGY_BLOWUP.predicts_blowup
        assert Verdict.GLOBAL_BELOW_THRESHOLD.predicts_global
        assert Verdict.GLOBAL_MASS_SUBCRITICAL.predicts_global
        assert not Verdict.CONDITIONAL_AT_THRESHOLD.predicts_global
        assert not Verdict.INDETERMINATE.predicts_blowup


class TestClassificationReport:
    """Test cases for report merging and serialization."""

    def test_merge_keeps_own_entries(self):
        """Test delegated evidence never overwrites existing entries."""
        own = ClassificationReport(Verdict.INDETERMINATE, 2.0, 1.0,
                                   evidence={'a': Inequality(0.0, 1.0)},
                                   quantities={'E': 1.0}, notes=['first'])
        other = ClassificationReport(Verdict.BLOWUP_KIEFFER_LOSS_1, 2.0, 1.0,
                                     evidence={'a': Inequality(5.0, 1.0), 'b': Inequality(0.0, 2.0)},
                                     quantities={'E': 9.0, 'M': 2.0}, notes=['first', 'second'])
        own.merge(other)
        assert own.evidence['a'].lhs == 0.0
        assert 'b' in own.evidence
        assert own.quantities == {'E': 1.0, 'M': 2.0}
        assert own.notes == ['first', 'second']

    def test_to_dict(self):
        """Test the serialized verdict and sorted evidence."""
        report = ClassificationReport(Verdict.GLOBAL_MASS_CRITICAL, 4.0 / 3.0, 1.0,
                                      evidence={'z': Inequality(0.0, 1.0), 'a': Inequality(0.0, 1.0)})
        data = report.to_dict()
        assert data['verdict'] == 'GlobalMassCritical'
        assert list(data['evidence']) == ['a', 'z']
