import pytest

from fixtures import FIXTURES, all_names, make_assembly
from kmelia.assembly import Link, link
from kmelia.product import UnknownEntry, explore, synchronized_product
from kmelia.semantics import Engine
from kmelia.syntax import parse_component_file
from naive_product import NaiveExplorer, engine_config, freeze

CALL_RESULT = """
component Consumer
    provides use
    requires p
    service use
        interface
            reqs p
        behaviour
            init c0
            final c2
            c0 --- x!!p() ---> c1
            c1 --- x??result() ---> c2
    end
    service p
    end
end
component Producer
    provides p
    service p
        behaviour
            init p0
            final p2
            p0 --- CALLER??p() ---> p1
            p1 --- CALLER!!result() ---> p2
    end
end
"""


def test_call_result_product_is_three_linear_states():
    comps = parse_component_file(CALL_RESULT)
    asm = link(comps, [Link("x", ("Consumer", "p"), ("Producer", "p"))])
    p = synchronized_product(asm, ("Consumer", "use"))
    assert p.states_explored == 3
    assert p.transition_count() == 2
    # linear: one successor each until the last
    chain = [p.initial]
    while p.successors(chain[-1]):
        (label_succ,) = p.successors(chain[-1])
        chain.append(label_succ[1])
    assert len(chain) == 3
    # the provider is activated in the middle state and gone at the end
    assert chain[1].location_of(("Producer", "p")) == "p1"
    assert chain[2].location_of(("Producer", "p")) is None
    assert chain[2].frames == ()


def test_unary_product_isomorphic_to_behavior():
    asm, entry, _ = make_assembly("solo_linear")
    p = synchronized_product(asm, entry)
    behavior = asm.service(entry).behavior
    product_states = {c.location_of(entry) for c in p.states}
    assert product_states == {"s0", "s1", "s2", "s3"}
    assert p.states_explored == len(behavior.states)
    assert p.transition_count() == len(behavior.transitions)


def test_mismatch_stops_after_activation():
    asm, entry, _ = make_assembly("message_mismatch")
    p = synchronized_product(asm, entry)
    # call activates the server, then nothing synchronizes
    assert p.states_explored == 2
    terminal = [c for c in p.states if not p.successors(c)]
    assert len(terminal) == 1
    assert p.engine.terminal_status(terminal[0]) == "deadlock"


def test_unknown_entry_rejected():
    asm, _entry, _ = make_assembly("booking_ok")
    with pytest.raises(UnknownEntry):
        synchronized_product(asm, ("Booking", "ghost"))
    with pytest.raises(UnknownEntry):
        synchronized_product(asm, ("Booking", "calendar"))  # required side


def test_bound_truncation_flagged():
    asm, entry, _ = make_assembly("booking_ok")
    p = synchronized_product(asm, entry, bound=2)
    assert p.truncated
    assert p.unexpanded
    full = synchronized_product(asm, entry)
    assert not full.truncated
    assert full.states_explored > 2


@pytest.mark.parametrize("name", all_names())
def test_product_matches_naive_enumerator(name):
    asm, entry, _dl = make_assembly(name)
    p = synchronized_product(asm, entry)
    assert not p.truncated

    got_states = {engine_config(c) for c in p.states}
    got_transitions = {
        (
            engine_config(src),
            (label.kind, label.primary, label.primary_tindex, label.partner, label.partner_tindex),
            engine_config(dst),
        )
        for src, out in p.transitions.items()
        for label, dst in out
    }

    oracle = NaiveExplorer(asm)
    want_states, want_transitions = oracle.explore(entry)
    assert got_states == want_states, name
    assert got_transitions == want_transitions, name


@pytest.mark.parametrize("name", all_names())
def test_projection_soundness(name):
    """Erasing all but one service's moves from any product path yields a path
    of that service's flattened behaviour."""
    asm, entry, _dl = make_assembly(name)
    p = synchronized_product(asm, entry)
    engine = p.engine
    for src, out in p.transitions.items():
        for label, _dst in out:
            for key, tindex, target in (
                (label.primary, label.primary_tindex, label.primary_target),
                (label.partner, label.partner_tindex, label.partner_target),
            ):
                if key is None:
                    continue
                t = engine.flat[key].transitions[tindex]
                assert t.target == target
                here = src.location_of(key)
                if label.kind == "call" and key == label.partner and here is None:
                    # activation starts from the callee's initial state
                    assert t.source == engine.flat[key].initial
                else:
                    assert t.source == here


def test_deadlock_monotonicity_under_added_link():
    """A deadlock whose witness uses no new channel persists when a link is added."""
    from kmelia.analysis import detect_deadlocks

    base_src, base_links, entry, _dl = FIXTURES["message_mismatch"]
    extra = """
component Extra
    provides ping
    service ping
        behaviour
            init e0
            final e1
            e0 --- CALLER??ping() ---> e1
    end
end
"""
    comps = parse_component_file(base_src + extra)
    links = [Link(c, tuple(f.split(".")), tuple(t.split("."))) for c, f, t in base_links]
    small = link([c for c in comps if c.name != "Extra"], links)
    # the added link binds a completely separate pair of services
    grown_comps = parse_component_file(
        base_src.replace(
            "service helper(x: int)\n    end",
            "service helper(x: int)\n    end\n    service ping\n    end",
        ).replace("requires helper", "requires helper, ping")
        + extra
    )
    grown = link(
        grown_comps,
        links + [Link("pg", ("Client", "ping"), ("Extra", "ping"))],
    )
    p_small = synchronized_product(small, entry)
    p_grown = synchronized_product(grown, entry)
    small_deadlocks = detect_deadlocks(p_small)
    grown_deadlock_states = {v.state for v in detect_deadlocks(p_grown)}
    new_channels = {"pg"}
    for v in small_deadlocks:
        channels = {w.channel for w in v.witness if w.channel}
        if channels & new_channels:
            continue
        assert any(
            g.locations == v.state.locations and g.stores == v.state.stores
            for g in grown_deadlock_states
        )


def test_explore_with_preactivated_services():
    """The shared exploration also drives multi-entry configurations."""
    comps = parse_component_file(CALL_RESULT)
    asm = link(comps, [Link("x", ("Consumer", "p"), ("Producer", "p"))])
    engine = Engine(asm)
    init = engine.initial_config(
        [(("Consumer", "use"), None), (("Producer", "p"), None)]
    )
    p = explore(engine, init, bound=1000)
    assert p.states_explored == 3
