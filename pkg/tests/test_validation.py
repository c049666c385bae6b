import random

from genspec import gen_component
from kmelia.exprs import IntLit, Var
from kmelia.model import (
    Assign,
    BehaviorELTS,
    CALLER_REF,
    Comm,
    Component,
    Dependency,
    Label,
    Named,
    SELF_REF,
    ServiceSpec,
    Signature,
    Transition,
    VarDecl,
    empty_behavior,
)
from kmelia.validation import validate_component


def _component(**service_kwargs) -> Component:
    spec = ServiceSpec(signature=Signature("s"), **service_kwargs)
    return Component(
        name="C", services={"s": spec}, provided=frozenset({"s"}), required=frozenset()
    )


def _behavior(transitions, states, initial="a", finals=("b",), annotations=None):
    return BehaviorELTS(
        states=frozenset(states),
        transitions=tuple(transitions),
        annotations=annotations or {},
        initial=initial,
        finals=frozenset(finals),
    )


def test_empty_component_is_well_formed():
    c = Component(name="Empty", services={}, provided=frozenset(), required=frozenset())
    assert validate_component(c).ok


def test_overlapping_dependency_sets():
    c = _component(
        dependency=Dependency(sub=frozenset({"a"}), cal=frozenset({"a"})),
        behavior=_behavior([Transition("a", Label(), "b")], ["a", "b"]),
    )
    report = validate_component(c)
    messages = [i.message for i in report]
    assert any("not disjoint" in m for m in messages)


def test_transition_to_undeclared_state():
    c = _component(
        behavior=_behavior([Transition("a", Label(), "s9")], ["a", "b"]),
    )
    report = validate_component(c)
    assert any("s9" in i.message for i in report)


def test_interface_lists_unknown_service():
    c = Component(
        name="C",
        services={},
        provided=frozenset({"ghost"}),
        required=frozenset(),
    )
    assert any("ghost" in i.message for i in validate_component(c))


def test_binder_expression_confusion():
    bad_send = Comm(Named("ch"), "!", "m", ("binder_name",))
    bad_recv = Comm(Named("ch"), "?", "m", (IntLit(1),))
    c = _component(
        dependency=Dependency(req=frozenset({"ch"})),
        behavior=_behavior(
            [
                Transition("a", Label(None, (bad_send,)), "b"),
                Transition("a", Label(None, (bad_recv,)), "b"),
            ],
            ["a", "b"],
        ),
    )
    messages = [i.message for i in validate_component(c)]
    assert any("binders instead of expressions" in m for m in messages)
    assert any("expressions instead of binders" in m for m in messages)


def test_multiple_communication_actions_flagged():
    two = (
        Comm(Named("ch"), "!", "m", ()),
        Comm(Named("ch"), "?", "m", ()),
    )
    c = _component(
        dependency=Dependency(req=frozenset({"ch"})),
        behavior=_behavior([Transition("a", Label(None, two), "b")], ["a", "b"]),
    )
    assert any("more than one communication" in i.message for i in validate_component(c))


def test_undeclared_variable_references_are_semantic_entries():
    c = _component(
        precondition=Var("missing"),
        behavior=_behavior(
            [Transition("a", Label(None, (Assign("also_missing", IntLit(1)),)), "b")],
            ["a", "b"],
        ),
    )
    report = validate_component(c)
    semantic = [i for i in report if i.kind == "semantic"]
    assert any("missing" in i.message for i in semantic)
    assert any("also_missing" in i.message for i in semantic)
    assert not report.structural()


def test_caller_outside_provided_service():
    spec = ServiceSpec(
        signature=Signature("r"),
        behavior=_behavior(
            [Transition("a", Label(None, (Comm(CALLER_REF, "?", "m", ()),)), "b")],
            ["a", "b"],
        ),
        kind="required",
    )
    c = Component(name="C", services={"r": spec}, provided=frozenset(), required=frozenset({"r"}))
    assert any("CALLER" in i.message for i in validate_component(c))


def test_self_call_must_target_internal_service():
    c = _component(
        behavior=_behavior(
            [Transition("a", Label(None, (Comm(SELF_REF, "!!", "nope", ()),)), "b")],
            ["a", "b"],
        ),
    )
    assert any("internal" in i.message for i in validate_component(c))


def test_annotation_values_must_be_subs():
    c = _component(
        behavior=_behavior(
            [Transition("a", Label(), "b")],
            ["a", "b"],
            annotations={"a": frozenset({"other"})},
        ),
    )
    assert any("sub set" in i.message for i in validate_component(c))


def test_provided_service_without_behaviour_flagged():
    c = _component(behavior=empty_behavior())
    assert any("no behaviour" in i.message for i in validate_component(c))


def test_required_default_behavior_accepted():
    spec = ServiceSpec(signature=Signature("r"), kind="required")
    c = Component(
        name="C", services={"r": spec}, provided=frozenset(), required=frozenset({"r"})
    )
    assert validate_component(c).ok


def test_generated_components_are_well_formed():
    rng = random.Random(99)
    for i in range(60):
        c = gen_component(rng, i)
        report = validate_component(c)
        assert report.ok, [str(x) for x in report]
