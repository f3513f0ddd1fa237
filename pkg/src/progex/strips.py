"""STRIPS-style planning models and their feature-set view.

A model is turned into a flat set of :class:`ModelFeature` values by
:func:`gamma`.  Two models differ by a set of unit :class:`FeatureChange`
edits (:func:`delta`), each of which adds or removes exactly one feature.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from fractions import Fraction
from functools import cached_property
from typing import Iterable

from .errors import InapplicableChange

INIT_HAS = "init-has"
GOAL_HAS = "goal-has"
HAS_PRECONDITION = "action-has-precondition"
HAS_SOFT_PRECONDITION = "action-has-soft-precondition"
HAS_ADD_EFFECT = "action-has-add-effect"
HAS_DEL_EFFECT = "action-has-del-effect"
HAS_COST = "action-has-cost"

FEATURE_KINDS = (
    INIT_HAS,
    GOAL_HAS,
    HAS_PRECONDITION,
    HAS_SOFT_PRECONDITION,
    HAS_ADD_EFFECT,
    HAS_DEL_EFFECT,
    HAS_COST,
)

_ACTION_FIELD = {
    HAS_PRECONDITION: ("preconditions", "precondition"),
    HAS_SOFT_PRECONDITION: ("soft_preconditions", "soft-precondition"),
    HAS_ADD_EFFECT: ("add_effects", "add-effect"),
    HAS_DEL_EFFECT: ("del_effects", "del-effect"),
}

ADD = "add"
REMOVE = "remove"


def _cost(value) -> Fraction:
    cost = Fraction(value)
    if cost < 0:
        raise ValueError(f"action cost must be nonnegative, got {value}")
    return cost


@dataclass(frozen=True)
class Action:
    """A grounded action.

    ``cost`` is ``None`` only transiently, while a cost feature has been
    removed and its replacement not yet added; the planner reads it as 0.
    Soft preconditions never block the action; each unmet one adds the
    owning model's ``soft_penalty`` to the step cost.
    """

    name: str
    preconditions: frozenset = frozenset()
    add_effects: frozenset = frozenset()
    del_effects: frozenset = frozenset()
    cost: Fraction | None = Fraction(1)
    soft_preconditions: frozenset = frozenset()

    def __post_init__(self):
        for name in ("preconditions", "add_effects", "del_effects", "soft_preconditions"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))
        if self.cost is not None:
            object.__setattr__(self, "cost", _cost(self.cost))

    @property
    def predicates(self) -> frozenset:
        return self.preconditions | self.add_effects | self.del_effects | self.soft_preconditions

    def is_empty(self) -> bool:
        return self.cost is None and not self.predicates


@dataclass(frozen=True)
class Model:
    predicates: frozenset = frozenset()
    actions: tuple = ()
    init: frozenset = frozenset()
    goal: frozenset = frozenset()
    soft_penalty: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "predicates", frozenset(self.predicates))
        object.__setattr__(self, "init", frozenset(self.init))
        object.__setattr__(self, "goal", frozenset(self.goal))
        object.__setattr__(self, "soft_penalty", _cost(self.soft_penalty))
        actions = tuple(sorted(self.actions, key=lambda a: a.name))
        names = [a.name for a in actions]
        if len(set(names)) != len(names):
            raise ValueError("duplicate action names in model")
        object.__setattr__(self, "actions", actions)

    @cached_property
    def action_map(self) -> dict:
        return {a.name: a for a in self.actions}

    def validate(self) -> None:
        """Raise ``ValueError`` if the model references undeclared predicates
        or an action has overlapping add and delete effects."""
        undeclared = (self.init | self.goal) - self.predicates
        for action in self.actions:
            undeclared |= action.predicates - self.predicates
            if action.add_effects & action.del_effects:
                raise ValueError(f"action {action.name} adds and deletes the same predicate")
        if undeclared:
            raise ValueError(f"undeclared predicates: {sorted(undeclared)}")


@dataclass(frozen=True, order=True)
class ModelFeature:
    """One fact about a model.

    ``subject`` is ``(predicate,)`` for init/goal features and
    ``(action, predicate)`` or ``(action, cost)`` for action features, with
    costs serialized as fraction strings.
    """

    kind: str
    subject: tuple

    def __post_init__(self):
        if self.kind not in FEATURE_KINDS:
            raise ValueError(f"unknown feature kind {self.kind!r}")
        object.__setattr__(self, "subject", tuple(str(s) for s in self.subject))

    def __str__(self) -> str:
        if self.kind in (INIT_HAS, GOAL_HAS):
            return f"{self.kind}-{self.subject[0]}"
        action, value = self.subject
        if self.kind == HAS_COST:
            return f"{action}-has-cost-{value}"
        return f"{action}-has-{_ACTION_FIELD[self.kind][1]}-{value}"


@dataclass(frozen=True)
class FeatureChange:
    """A unit edit: add or remove one feature.

    ``id`` labels the change within a scenario and does not take part in
    equality; it defaults to a serialization of direction and feature.
    """

    direction: str
    feature: ModelFeature
    id: str = field(default="", compare=False)

    def __post_init__(self):
        if self.direction not in (ADD, REMOVE):
            raise ValueError(f"direction must be 'add' or 'remove', got {self.direction!r}")
        if not self.id:
            sign = "+" if self.direction == ADD else "-"
            object.__setattr__(self, "id", f"{sign}{self.feature}")

    def inverse(self) -> FeatureChange:
        flipped = REMOVE if self.direction == ADD else ADD
        return FeatureChange(flipped, self.feature, self.id)


def gamma(model: Model) -> frozenset:
    """Return the complete feature set of ``model``."""
    features = [ModelFeature(INIT_HAS, (p,)) for p in model.init]
    features += [ModelFeature(GOAL_HAS, (p,)) for p in model.goal]
    for action in model.actions:
        features.extend(action_features(action))
    return frozenset(features)


def action_features(action: Action) -> list:
    features = []
    for kind, (attr, _) in _ACTION_FIELD.items():
        features += [ModelFeature(kind, (action.name, p)) for p in getattr(action, attr)]
    if action.cost is not None:
        features.append(ModelFeature(HAS_COST, (action.name, action.cost)))
    return features


def from_gamma(features: Iterable[ModelFeature], predicates=(), soft_penalty=0) -> Model:
    """Rebuild a model from a feature set (inverse of :func:`gamma`)."""
    model = Model(predicates=predicates, soft_penalty=soft_penalty)
    for feature in sorted(features):
        model = apply_change(model, FeatureChange(ADD, feature))
    return model


def has_feature(model: Model, feature: ModelFeature) -> bool:
    if feature.kind == INIT_HAS:
        return feature.subject[0] in model.init
    if feature.kind == GOAL_HAS:
        return feature.subject[0] in model.goal
    action = model.action_map.get(feature.subject[0])
    if action is None:
        return False
    if feature.kind == HAS_COST:
        return action.cost is not None and action.cost == Fraction(feature.subject[1])
    return feature.subject[1] in getattr(action, _ACTION_FIELD[feature.kind][0])


def _edit(items: frozenset, item, adding: bool) -> frozenset:
    return items | {item} if adding else items - {item}


def apply_change(model: Model, change: FeatureChange) -> Model:
    """Return a copy of ``model`` with ``change`` applied.

    Raises :class:`InapplicableChange` when adding a present feature,
    removing an absent one, or giving a second cost to an action.
    """
    feature = change.feature
    adding = change.direction == ADD
    if has_feature(model, feature) == adding:
        state = "already has" if adding else "lacks"
        raise InapplicableChange(f"model {state} feature {feature}")

    predicates = model.predicates
    if feature.kind != HAS_COST and adding:
        predicates = predicates | {feature.subject[-1]}

    if feature.kind == INIT_HAS:
        return replace(model, predicates=predicates, init=_edit(model.init, feature.subject[0], adding))
    if feature.kind == GOAL_HAS:
        return replace(model, predicates=predicates, goal=_edit(model.goal, feature.subject[0], adding))

    name, value = feature.subject
    action = model.action_map.get(name) or Action(name, cost=None)
    if feature.kind == HAS_COST:
        if adding and action.cost is not None:
            raise InapplicableChange(f"action {name} already has cost {action.cost}")
        action = replace(action, cost=Fraction(value) if adding else None)
    else:
        attr = _ACTION_FIELD[feature.kind][0]
        action = replace(action, **{attr: _edit(getattr(action, attr), value, adding)})

    others = [a for a in model.actions if a.name != name]
    if not action.is_empty():
        others.append(action)
    return replace(model, predicates=predicates, actions=tuple(others))


def apply_changes(model: Model, changes: Iterable[FeatureChange]) -> Model:
    for change in changes:
        model = apply_change(model, change)
    return model


def delta(m1: Model, m2: Model) -> tuple:
    """Changes that turn ``m2`` into ``m1``, sorted by id.

    Features only in ``m1`` become ``add`` changes, features only in ``m2``
    become ``remove`` changes.
    """
    g1, g2 = gamma(m1), gamma(m2)
    changes = [FeatureChange(ADD, f) for f in g1 - g2]
    changes += [FeatureChange(REMOVE, f) for f in g2 - g1]
    return tuple(sorted(changes, key=lambda c: c.id))


def model_distance_count(m1: Model, m2: Model) -> int:
    return len(gamma(m1) ^ gamma(m2))
