from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from progex.errors import InapplicableChange
from progex.strips import (
    ADD,
    GOAL_HAS,
    HAS_ADD_EFFECT,
    HAS_COST,
    HAS_PRECONDITION,
    INIT_HAS,
    REMOVE,
    Action,
    FeatureChange,
    Model,
    ModelFeature,
    apply_change,
    apply_changes,
    delta,
    from_gamma,
    gamma,
    model_distance_count,
)

PREDICATES = ("p", "q", "r", "s")


@st.composite
def models(draw):
    subsets = st.frozensets(st.sampled_from(PREDICATES))
    actions = []
    for name in draw(st.lists(st.sampled_from("ABC"), unique=True, max_size=3)):
        actions.append(Action(
            name,
            draw(subsets),
            draw(subsets),
            frozenset(),
            draw(st.sampled_from([1, 2, 3])),
            draw(subsets),
        ))
    return Model(PREDICATES, tuple(actions), draw(subsets), draw(subsets))


def removes_first(changes):
    return sorted(changes, key=lambda c: c.direction != REMOVE)


def test_gamma_lists_init_goal_and_action_facts():
    action = Action("OS", {"not-holiday"}, {"happy"}, cost=1)
    model = Model({"happy", "not-holiday"}, (action,), {"not-holiday"}, {"happy"})
    names = {str(f) for f in gamma(model)}
    assert {"init-has-not-holiday", "goal-has-happy", "OS-has-precondition-not-holiday",
            "OS-has-add-effect-happy", "OS-has-cost-1"} == names


def test_change_default_id_serializes_direction_and_feature():
    change = FeatureChange(REMOVE, ModelFeature(INIT_HAS, ("x",)))
    assert change.id == "-init-has-x"
    assert FeatureChange(ADD, ModelFeature(GOAL_HAS, ("y",))).id == "+goal-has-y"


def test_id_does_not_affect_equality():
    f = ModelFeature(INIT_HAS, ("x",))
    assert FeatureChange(ADD, f, "A") == FeatureChange(ADD, f, "B")


def test_inverse_round_trip():
    model = Model({"a"}, (), {"a"}, set())
    change = FeatureChange(REMOVE, ModelFeature(INIT_HAS, ("a",)))
    assert apply_change(apply_change(model, change), change.inverse()) == model


def test_adding_present_feature_is_inapplicable():
    model = Model({"a"}, (), {"a"}, set())
    with pytest.raises(InapplicableChange):
        apply_change(model, FeatureChange(ADD, ModelFeature(INIT_HAS, ("a",))))
    with pytest.raises(InapplicableChange):
        apply_change(model, FeatureChange(REMOVE, ModelFeature(GOAL_HAS, ("a",))))


def test_second_cost_is_inapplicable():
    model = Model({"a"}, (Action("A", cost=1),), set(), set())
    with pytest.raises(InapplicableChange):
        apply_change(model, FeatureChange(ADD, ModelFeature(HAS_COST, ("A", "2"))))


def test_cost_swap_goes_through_a_costless_action():
    model = Model({"a"}, (Action("A", {"a"}, cost=1),), set(), set())
    removed = apply_change(model, FeatureChange(REMOVE, ModelFeature(HAS_COST, ("A", "1"))))
    assert removed.action_map["A"].cost is None
    swapped = apply_change(removed, FeatureChange(ADD, ModelFeature(HAS_COST, ("A", "3"))))
    assert swapped.action_map["A"].cost == Fraction(3)


def test_adding_feature_of_unknown_action_creates_it():
    model = Model(set(), (), set(), set())
    model = apply_change(model, FeatureChange(ADD, ModelFeature(HAS_PRECONDITION, ("B", "p"))))
    assert model.action_map["B"].preconditions == {"p"}
    assert "p" in model.predicates


def test_removing_last_feature_drops_the_action():
    model = Model({"p"}, (Action("B", add_effects={"p"}, cost=None),), set(), set())
    model = apply_change(model, FeatureChange(REMOVE, ModelFeature(HAS_ADD_EFFECT, ("B", "p"))))
    assert model.actions == ()


def test_validate_rejects_undeclared_and_overlap():
    with pytest.raises(ValueError):
        Model({"a"}, (), {"b"}, set()).validate()
    with pytest.raises(ValueError):
        Model({"a"}, (Action("A", add_effects={"a"}, del_effects={"a"}),), set(), set()).validate()


def test_negative_cost_rejected():
    with pytest.raises(ValueError):
        Action("A", cost=-1)


@settings(max_examples=150, deadline=None)
@given(models(), models())
def test_delta_applied_reproduces_target(m1, m2):
    changes = delta(m1, m2)
    assert len(changes) == model_distance_count(m1, m2)
    assert gamma(apply_changes(m2, removes_first(changes))) == gamma(m1)


@settings(max_examples=100, deadline=None)
@given(models())
def test_delta_to_self_is_empty(m):
    assert delta(m, m) == ()


@settings(max_examples=100, deadline=None)
@given(models(), models())
def test_delta_is_antisymmetric(m1, m2):
    forward = {(c.direction, c.feature) for c in delta(m1, m2)}
    backward = {(c.inverse().direction, c.feature) for c in delta(m2, m1)}
    assert forward == backward


@settings(max_examples=100, deadline=None)
@given(models())
def test_from_gamma_inverts_gamma(m):
    assert gamma(from_gamma(gamma(m), m.predicates)) == gamma(m)
