from __future__ import annotations

import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from qabd.casebook import fixture, parse_case, serialize_case
from qabd.errors import DuplicateIdError, TooFewHypothesesError
from qabd.model import (
    AbductiveState,
    CaseFile,
    DynamicsConfig,
    Hypothesis,
    Observation,
    initial_state,
    new_case,
    validate,
)


def _hyps(n):
    return [Hypothesis(f"H{i+1}", f"h{i+1}", f"statement {i+1}") for i in range(n)]


class TestNewCase:
    def test_five_hypotheses_uniform(self):
        case = new_case("ludwig", _hyps(5), DynamicsConfig())
        state = initial_state(case)
        assert state.amplitudes == pytest.approx((0.44721,) * 5, abs=1e-5)
        assert state.norm_sq() == pytest.approx(1.0, abs=1e-9)

    def test_two_hypotheses_uniform(self):
        case = new_case("x", _hyps(2))
        assert initial_state(case).amplitudes == pytest.approx((0.70711, 0.70711), abs=1e-5)

    def test_one_hypothesis_rejected(self):
        with pytest.raises(TooFewHypothesesError):
            new_case("x", _hyps(1))

    def test_duplicate_id_rejected(self):
        hyps = _hyps(2) + [Hypothesis("H1", "dup", "again")]
        with pytest.raises(DuplicateIdError):
            new_case("x", hyps)

    def test_event_log_starts_empty(self):
        assert new_case("x", _hyps(3)).observations == ()

    @given(st.integers(min_value=2, max_value=40))
    def test_uniform_initialization_property(self, n):
        state = AbductiveState.uniform(n)
        assert abs(state.norm_sq() - 1.0) < 1e-9
        assert len(set(state.amplitudes)) == 1


class TestValidate:
    def test_wellformed_fixture_is_clean(self):
        assert validate(fixture("ludwig").case) == []

    def test_weight_out_of_range(self):
        case = CaseFile(
            name="x",
            hypotheses=tuple(_hyps(2)),
            observations=(Observation("O1", "s", weight=1.5, sequence=1),),
        )
        violations = validate(case)
        assert any(v.rule == "WeightOutOfRange" and v.subject == "O1" for v in violations)

    def test_asymmetric_interference(self):
        case = CaseFile(
            name="x",
            hypotheses=tuple(_hyps(2)),
            interference_overrides={("H1", "H2"): 0.3, ("H2", "H1"): -0.3},
        )
        violations = validate(case)
        assert any(v.rule == "AsymmetricInterference" for v in violations)

    def test_diagonal_override(self):
        case = CaseFile(
            name="x", hypotheses=tuple(_hyps(2)), interference_overrides={("H1", "H1"): 0.5}
        )
        assert any(v.rule == "DiagonalOverride" for v in validate(case))

    def test_nonmonotone_sequence(self):
        case = CaseFile(
            name="x",
            hypotheses=tuple(_hyps(2)),
            observations=(
                Observation("O1", "a", sequence=2),
                Observation("O2", "b", sequence=1),
            ),
        )
        assert any(v.rule == "NonMonotoneSequence" for v in validate(case))

    def test_override_out_of_range(self):
        case = CaseFile(
            name="x",
            hypotheses=tuple(_hyps(2)),
            observations=(
                Observation("O1", "a", polarity_overrides={"H1": 2.0}, sequence=1),
            ),
        )
        assert any(v.rule == "OverrideOutOfRange" for v in validate(case))

    @given(
        st.integers(min_value=0, max_value=4),
        st.floats(min_value=-3, max_value=3, allow_nan=False),
        st.integers(min_value=-2, max_value=5),
    )
    def test_validate_is_total(self, n, weight, sequence):
        # never raises, whatever the (well-typed) input looks like
        case = CaseFile(
            name="x",
            hypotheses=tuple(_hyps(n)),
            observations=(
                Observation("O1", "", weight=weight, sequence=sequence),
                Observation("O1", "dup", weight=weight, sequence=sequence),
            ),
            config=DynamicsConfig(eta=-1.0, aggregation="bogus", embed_dim=0),
            interference_overrides={("H1", "H9"): 9.0},
        )
        violations = validate(case)
        assert isinstance(violations, list) and violations


class TestRoundTrip:
    @pytest.mark.parametrize(
        "fixture_id", ["ludwig", "bossetti", "medical", "drift", "order-witness"]
    )
    def test_serialize_parse_identity(self, fixture_id):
        case = fixture(fixture_id).case
        assert parse_case(serialize_case(case)) == case

    def test_uniform_state_math(self):
        for n in range(2, 13):
            state = AbductiveState.uniform(n)
            assert state.amplitudes[0] == pytest.approx(1 / math.sqrt(n), abs=1e-12)
