"""Cost imputation: partial-feedback events to cost-sensitive examples."""

from collections.abc import Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict

from ..datagen import MulticlassDataset
from ..errors import DomainError
from ..models import PropensityModel, RewardModel
from ..types import Features, LogEvent, Method


class CostMatrixExample(BaseModel):
    """(x, l_1, ..., l_K)."""

    model_config = ConfigDict(frozen=True)

    features: Features
    costs: tuple[float, ...]


def impute_costs(
    event: LogEvent,
    loss_model: RewardModel | None,
    propensity_estimate: float,
    n_actions: int | None = None,
    mode: Method = Method.DR,
) -> CostMatrixExample:
    """l_{a'} = l̂(x,a') + 1[a'=a]·(l − l̂(x,a))/μ̂(a|x).

    IPS mode uses l̂ ≡ 0, which leaves l/μ̂ in the logged slot and 0 elsewhere.
    """
    if not propensity_estimate > 0:
        raise DomainError(f"propensity estimate must be positive, got {propensity_estimate}")
    if mode is Method.IPS or loss_model is None:
        if n_actions is None:
            raise DomainError("IPS imputation needs the number of actions")
        predictions = np.zeros(n_actions)
    elif mode is Method.DR:
        predictions = loss_model.predict_all(event.context.features)
    else:
        raise DomainError(f"no imputation rule for {mode.value}")
    costs = predictions.copy()
    logged = event.action
    costs[logged] = predictions[logged] + (event.outcome - predictions[logged]) / propensity_estimate
    return CostMatrixExample(features=event.context.features, costs=tuple(costs.tolist()))


def impute_log(
    events: Sequence[LogEvent],
    loss_model: RewardModel | None,
    propensity_model: PropensityModel,
    n_actions: int,
    mode: Method = Method.DR,
) -> list[CostMatrixExample]:
    return [
        impute_costs(
            event,
            loss_model,
            propensity_model.estimate(event.context, event.action, k),
            n_actions=n_actions,
            mode=mode,
        )
        for k, event in enumerate(events)
    ]


def full_feedback_examples(dataset: MulticlassDataset) -> list[CostMatrixExample]:
    """Exact 0/1 cost vectors; the information-ordering baseline."""
    return [
        CostMatrixExample(features=features, costs=tuple(row.tolist()))
        for features, row in zip(dataset.features, dataset.loss_matrix(), strict=True)
    ]


def cost_arrays(examples: Sequence[CostMatrixExample]) -> tuple[list[Features], np.ndarray]:
    """Split examples into their features and a (examples x actions) cost matrix."""
    if not examples:
        raise DomainError("no cost-sensitive examples")
    return [e.features for e in examples], np.array([e.costs for e in examples], dtype=float)
