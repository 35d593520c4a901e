"""Estimator-style front door so the engine composes with the wider ecosystem.

``QuantumAbductor`` follows scikit-learn conventions: hyperparameters in the
constructor, data through ``fit``/``partial_fit``, learned state in
trailing-underscore attributes, and ``get_params``/``set_params`` inherited
from ``BaseEstimator`` (so ``sklearn.clone`` works). The functional core in
:mod:`qabd.dynamics` stays pure; this class carries the evolving state.
"""

from __future__ import annotations

from dataclasses import replace
from typing import Optional, Sequence

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import dynamics
from .embed import HashingEmbedder
from .errors import ValidationFailedError
from .model import (
    CaseFile,
    CollapseOutcome,
    DynamicsConfig,
    Hypothesis,
    Observation,
    ProjectionMatrix,
    new_case,
    set_override,
    validate,
)
from .classical import eliminate, qualitative_matrix


class QuantumAbductor(BaseEstimator):
    """Amplitude-dynamics engine with a fit/predict surface.

    ``fit`` replays an observation log with the same semantics as
    :func:`qabd.dynamics.run` (stops at the first dominant or hybrid
    outcome); ``partial_fit`` applies exactly one observation and never
    stops early, which is what a live session needs. ``predict`` returns
    the current collapse evaluation without touching the state.

    Estimator hyperparameters, not the case file, control the dynamics;
    use :meth:`from_case` to copy a case's stored configuration.
    """

    def __init__(
        self,
        eta: float = 0.1,
        aggregation: str = "sum",
        collapse_threshold: float = 0.6,
        hybrid_ratio: float = 0.8,
        interference_offset: float = 0.5,
        embed_dim: int = 256,
        provider=None,
    ):
        self.eta = eta
        self.aggregation = aggregation
        self.collapse_threshold = collapse_threshold
        self.hybrid_ratio = hybrid_ratio
        self.interference_offset = interference_offset
        self.embed_dim = embed_dim
        self.provider = provider

    @classmethod
    def from_case(cls, case: CaseFile, provider=None) -> "QuantumAbductor":
        cfg = case.config
        return cls(
            eta=cfg.eta,
            aggregation=cfg.aggregation,
            collapse_threshold=cfg.collapse_threshold,
            hybrid_ratio=cfg.hybrid_ratio,
            interference_offset=cfg.interference_offset,
            embed_dim=cfg.embed_dim,
            provider=provider,
        )

    def _config(self) -> DynamicsConfig:
        return DynamicsConfig(
            eta=self.eta,
            aggregation=self.aggregation,
            collapse_threshold=self.collapse_threshold,
            hybrid_ratio=self.hybrid_ratio,
            interference_offset=self.interference_offset,
            embed_dim=self.embed_dim,
        )

    def _provider(self):
        return self.provider or HashingEmbedder(self.embed_dim)

    def _as_case(
        self,
        hypotheses: CaseFile | Sequence[Hypothesis],
        observations: Optional[Sequence[Observation]],
        interference_overrides,
    ) -> CaseFile:
        if isinstance(hypotheses, CaseFile):
            base = hypotheses
            return CaseFile(
                name=base.name,
                hypotheses=base.hypotheses,
                observations=tuple(observations)
                if observations is not None
                else base.observations,
                config=self._config(),
                interference_overrides=interference_overrides
                or base.interference_overrides,
            )
        case = new_case("fit", tuple(hypotheses), self._config())
        return CaseFile(
            name=case.name,
            hypotheses=case.hypotheses,
            observations=tuple(observations or ()),
            config=case.config,
            interference_overrides=interference_overrides or {},
        )

    def fit(
        self,
        hypotheses: CaseFile | Sequence[Hypothesis],
        observations: Optional[Sequence[Observation]] = None,
        interference_overrides=None,
    ) -> "QuantumAbductor":
        """Validate the case and replay its observation log."""
        case = self._as_case(hypotheses, observations, interference_overrides)
        violations = validate(case)
        if violations:
            raise ValidationFailedError(violations)
        provider = self._provider()
        result = dynamics.run(case, provider)
        self.case_ = case
        self.hypotheses_ = case.hypotheses
        self.interference_ = result.interference
        self.state_ = result.state
        self.traces_ = list(result.traces)
        self.columns_ = [result.projections.column(j) for j in range(result.projections.m)]
        self.column_sources_ = list(result.projections.source)
        self.outcome_ = result.outcome
        self.n_steps_ = result.state.step
        return self

    def partial_fit(
        self,
        observation: Observation,
        hypotheses: CaseFile | Sequence[Hypothesis] | None = None,
    ) -> "QuantumAbductor":
        """Apply one observation to the live state (no early stopping).

        The first call must either follow ``fit`` or pass ``hypotheses``.
        """
        if hypotheses is not None and not hasattr(self, "state_"):
            self.fit(hypotheses, observations=())
        check_is_fitted(self, "state_")
        case = self.case_.with_observation(observation)
        violations = validate(case)
        if violations:
            raise ValidationFailedError(violations)
        provider = self._provider()
        column, source = dynamics.projection_column(case, observation, provider)
        if self.aggregation == "max":
            per_hypothesis = [
                [col[i] for col in self.columns_ + [column]]
                for i in range(len(case.hypotheses))
            ]
            evidence = dynamics.evidence_activation(
                per_hypothesis, observation.weight, "max"
            )
        else:
            evidence = dynamics.evidence_activation(column, observation.weight, "sum")
        # a degenerate step must leave the engine exactly as it was
        state, trace = dynamics.step(
            self.state_,
            evidence,
            self.interference_,
            self.eta,
            observation_id=observation.id,
        )
        self.columns_.append(column)
        self.column_sources_.append(source)
        self.case_ = case
        self.state_ = state
        self.traces_.append(trace)
        self.outcome_ = dynamics.try_collapse(
            state, self.interference_, self._config(), case.hypotheses, provider
        )
        self.n_steps_ = state.step
        return self

    def override_interference(self, i: str, j: str, value: float) -> "QuantumAbductor":
        """Set a symmetric expert coupling; affects future steps only."""
        check_is_fitted(self, "state_")
        overrides = set_override(self.case_.interference_overrides, i, j, value)
        case = replace(self.case_, interference_overrides=overrides)
        violations = validate(case)
        if violations:
            raise ValidationFailedError(violations)
        self.case_ = case
        self.interference_ = dynamics.build_interference(
            case.hypotheses, self._config(), overrides, self._provider()
        )
        return self

    def predict(self) -> CollapseOutcome:
        """Current collapse evaluation (dominant / hybrid / deferred)."""
        check_is_fitted(self, "state_")
        return self.outcome_

    def force_collapse(self) -> CollapseOutcome:
        """Decision-forced resolution: the collapse threshold is lowered to
        the current coherence so a dominant outcome is always produced. The
        state itself is untouched -- reasoning may continue in superposition.
        """
        check_is_fitted(self, "state_")
        forced_config = replace(
            self._config(), collapse_threshold=dynamics.coherence(self.state_)
        )
        outcome = dynamics.try_collapse(
            self.state_,
            self.interference_,
            forced_config,
            self.case_.hypotheses,
            self._provider(),
        )
        return replace(outcome, forced=True)

    @property
    def amplitudes_(self) -> tuple[float, ...]:
        check_is_fitted(self, "state_")
        return self.state_.amplitudes

    @property
    def coherence_(self) -> float:
        check_is_fitted(self, "state_")
        return dynamics.coherence(self.state_)

    @property
    def projections_(self) -> ProjectionMatrix:
        check_is_fitted(self, "state_")
        n = len(self.case_.hypotheses)
        return ProjectionMatrix(
            entries=tuple(
                tuple(col[i] for col in self.columns_) for i in range(n)
            ),
            source=tuple(self.column_sources_),
        )


class EliminativeAbductor(BaseEstimator):
    """Classical eliminative baseline behind the same fit/predict surface.

    Fits on a fixture-mode case (or an explicit qualitative matrix) and
    predicts the surviving hypothesis ids.
    """

    def fit(self, case: CaseFile) -> "EliminativeAbductor":
        matrix = qualitative_matrix(case)
        observation_ids = [
            o.id for o in sorted(case.observations, key=lambda o: o.sequence)
        ]
        self.result_ = eliminate(matrix, list(case.hypothesis_ids()), observation_ids)
        self.survivors_ = self.result_.survivors
        self.eliminated_ = self.result_.eliminated
        return self

    def predict(self) -> tuple[str, ...]:
        check_is_fitted(self, "result_")
        return tuple(sorted(self.survivors_))
