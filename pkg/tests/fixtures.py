"""Hand-built assemblies with known deadlock status.

Each fixture is (source text, links, entry, deadlock expected). The
corpus covers the booking/calendar scenario and its blocking variant,
protocol mismatches, guard-stuck states, call chains, internal calls,
caller-side callbacks and re-entrancy.
"""

from kmelia.assembly import Link, link
from kmelia.syntax import parse_component_file

BOOKING_OK = """
component Calendar
    provides calendar
    service calendar(min: int): int
        interface
            variables chosen: int
        pre min >= 0
        post result >= min
        behaviour
            init c0
            final c3
            c0 --- CALLER??calendar(min) ---> c1
            c1 --- chosen := min + 1 ---> c2
            c2 --- CALLER!!result(chosen) ---> c3
    end
end
component Booking
    provides book
    requires calendar
    service book(tries: int): bool
        interface
            reqs calendar
            variables depart: int
        pre tries > 0
        post result
        behaviour
            init b0
            final b3
            b0 --- cal!!calendar(2) ---> b1
            b1 --- cal??result(depart) ---> b2
            b2 --- [depart > 0] result := true ---> b3
            b2 --- [not (depart > 0)] result := false ---> b3
    end
    service calendar(min: int): int
    end
end
"""

BOOKING_BLOCKED = """
component Calendar
    provides calendar
    service calendar(min: int): int
        interface
            variables chosen: int
        behaviour
            init c0
            final c3
            c0 --- CALLER??calendar(min) ---> c1
            c1 --- chosen := min + 1 ---> c2
            c2 --- CALLER!!result(chosen) ---> c3
    end
end
component Booking
    provides book
    requires calendar
    service book: bool
        interface
            reqs calendar
            variables depart: int
        behaviour
            init b0
            final b2
            b0 --- cal!!calendar(2) ---> b1
            b1 --- cal??reply(depart) ---> b2
    end
    service calendar(min: int): int
    end
end
"""

MESSAGE_MISMATCH = """
component Client
    provides go
    requires helper
    service go: bool
        behaviour
            init a0
            final a3
            a0 --- h!!helper(1) ---> a1
            a1 --- h!m(5) ---> a2
            a2 --- h??result() ---> a3
    end
    service helper(x: int)
    end
end
component Server
    provides helper
    service helper(x: int)
        interface
            variables y: int
        behaviour
            init p0
            final p3
            p0 --- CALLER??helper(x) ---> p1
            p1 --- CALLER?n(y) ---> p2
            p2 --- CALLER!!result() ---> p3
    end
end
"""

TWO_MESSAGE_PROTOCOL = """
component Pinger
    provides ping
    requires serve
    service ping: int
        interface
            reqs serve
            variables z: int
        behaviour
            init s0
            final s2
            s0 --- po!!serve(1) ---> s1
            s1 --- po??result(z) ---> s2
    end
    service serve(x: int): int
    end
end
component Ponger
    provides serve
    service serve(x: int): int
        interface
            variables y: int
        behaviour
            init p0
            final p3
            p0 --- CALLER??serve(x) ---> p1
            p1 --- CALLER?more(y) ---> p2
            p2 --- CALLER!!result(x + y) ---> p3
    end
end
"""

SOLO_LINEAR = """
component Solo
    provides main
    service main: int
        interface
            variables x: int
        post result = 3
        behaviour
            init s0
            final s3
            s0 --- x := 1 ---> s1
            s1 --- x := x + 2 ---> s2
            s2 --- result := x ---> s3
    end
end
"""

GUARDS_STUCK = """
component Stuck
    provides main
    service main
        interface
            variables x: int
        behaviour
            init s0
            final s2
            s0 --- [x > 0] x := x - 1 ---> s1
            s0 --- [x < 0] x := x + 1 ---> s1
            s1 --- ---> s2
    end
end
"""

ENDLESS_LOOP = """
component Loop
    provides main
    service main
        interface
            variables x: int
        behaviour
            init s0
            final s2
            s0 --- x := x + 1 ---> s1
            s1 --- x := 0 ---> s0
    end
end
"""

CALL_CHAIN = """
component Front
    provides entry
    requires middle
    service entry: int
        interface
            reqs middle
            variables a: int
        behaviour
            init f0
            final f2
            f0 --- mid!!middle(4) ---> f1
            f1 --- mid??result(a) ---> f2
    end
    service middle(x: int): int
    end
end
component Middle
    provides middle
    requires backend
    service middle(x: int): int
        interface
            reqs backend
            variables b: int
        behaviour
            init m0
            final m3
            m0 --- CALLER??middle(x) ---> m1
            m1 --- back!!backend(x + 1) ---> m2
            m2 --- back??result(b) ---> m2b
            m2b --- CALLER!!result(b * 2) ---> m3
    end
    service backend(x: int): int
    end
end
component Backend
    provides backend
    service backend(x: int): int
        behaviour
            init k0
            final k2
            k0 --- CALLER??backend(x) ---> k1
            k1 --- CALLER!!result(x + 10) ---> k2
    end
end
"""

SELF_INTERNAL = """
component Inner
    provides main
    service main: int
        interface
            ints helper
            variables y: int
        behaviour
            init s0
            final s2
            s0 --- SELF!!helper(3) ---> s1
            s1 --- SELF??result(y) ---> s2
    end
    service helper(x: int): int
        behaviour
            init h0
            final h2
            h0 --- CALLER??helper(x) ---> h1
            h1 --- CALLER!!result(x * 2) ---> h2
    end
end
"""

CALLBACK_CAL = """
component Driver
    provides drive, notify
    requires helper
    service drive: bool
        interface
            reqs helper
        behaviour
            init d0
            final d2
            d0 --- h!!helper(1) ---> d1
            d1 --- h??result() ---> d2
    end
    service notify(k: int)
        behaviour
            init n0
            final n2
            n0 --- CALLER??notify(k) ---> n1
            n1 --- CALLER!!result() ---> n2
    end
    service helper(x: int)
    end
end
component Worker
    provides helper
    service helper(x: int)
        interface
            cals notify
        behaviour
            init p0
            final p4
            p0 --- CALLER??helper(x) ---> p1
            p1 --- notify!!notify(x) ---> p2
            p2 --- notify??result() ---> p3
            p3 --- CALLER!!result() ---> p4
    end
end
"""

REENTRANT_CALL = """
component Eager
    provides go
    requires helper
    service go
        interface
            reqs helper
            variables y: int
        behaviour
            init e0
            final e4
            e0 --- h!!helper(1) ---> e1
            e1 --- h!!helper(2) ---> e2
            e2 --- h??result(y) ---> e3
            e3 --- h??result(y) ---> e4
    end
    service helper(x: int): int
    end
end
component Patient
    provides helper
    service helper(x: int): int
        behaviour
            init p0
            final p2
            p0 --- CALLER??helper(x) ---> p1
            p1 --- CALLER!!result(x) ---> p2
    end
end
"""

UNLINKED_REQ = """
component Alone
    provides main
    service main
        interface
            reqs oracle
        behaviour
            init s0
            final s2
            s0 --- oracle!!oracle(1) ---> s1
            s1 --- oracle??result() ---> s2
    end
end
"""

FINAL_WITH_PENDING = """
component Quiet
    provides go
    requires sink
    service go
        interface
            reqs sink
        behaviour
            init q0
            final q1
            q0 --- snk!!sink(1) ---> q1
    end
    service sink(x: int)
    end
end
component Sink
    provides sink
    service sink(x: int)
        behaviour
            init z0
            final z1
            z0 --- CALLER??sink(x) ---> z1
    end
end
"""

UNKNOWN_GUARD = """
component Choice
    provides main
    service main(p: int): int
        interface
            variables x: int
        behaviour
            init s0
            final s2
            s0 --- [p > 0] x := 1 ---> s1
            s0 --- [not (p > 0)] x := 2 ---> s1
            s1 --- result := x ---> s2
    end
end
"""

SERVING_LOOP = """
component Repeat
    provides go
    requires echo
    service go
        interface
            reqs echo
            variables a: int
        behaviour
            init g0
            final g4
            g0 --- e!!echo(1) ---> g1
            g1 --- e??result(a) ---> g2
            g2 --- e!!echo(2) ---> g3
            g3 --- e??result(a) ---> g4
    end
    service echo(x: int): int
    end
end
component Echo
    provides echo
    service echo(x: int): int
        behaviour
            init p0
            final p0
            p0 --- CALLER??echo(x) ---> p1
            p1 --- CALLER!!result(x) ---> p0
    end
end
"""

SECOND_REQUEST = """
component Asker
    provides go
    requires p
    service go
        interface
            reqs p
            variables y: int
        behaviour
            init a0
            final a3
            a0 --- ch!!p() ---> a1
            a1 --- ch!!extra(1) ---> a2
            a2 --- ch??result(y) ---> a3
    end
    service p
    end
end
component Answerer
    provides p
    service p
        interface
            variables x: int
        behaviour
            init p0
            final p3
            p0 --- CALLER??p() ---> p1
            p1 --- CALLER??extra(x) ---> p2
            p2 --- CALLER!!result(x) ---> p3
    end
end
"""

PROVIDER_PUSH = """
component Sub
    provides go
    requires feed
    service go
        interface
            reqs feed
            variables v: int, y: int
        behaviour
            init a0
            final a3
            a0 --- ch!!feed() ---> a1
            a1 --- ch?data(v) ---> a2
            a2 --- ch??result(y) ---> a3
    end
    service feed: int
    end
end
component Pub
    provides feed
    service feed: int
        behaviour
            init p0
            final p3
            p0 --- CALLER??feed() ---> p1
            p1 --- CALLER!data(7) ---> p2
            p2 --- CALLER!!result(1) ---> p3
    end
end
"""

FIXTURES = {
    "booking_ok": (BOOKING_OK, [("cal", "Booking.calendar", "Calendar.calendar")], ("Booking", "book"), False),
    "booking_blocked": (BOOKING_BLOCKED, [("cal", "Booking.calendar", "Calendar.calendar")], ("Booking", "book"), True),
    "message_mismatch": (MESSAGE_MISMATCH, [("h", "Client.helper", "Server.helper")], ("Client", "go"), True),
    "two_message_protocol": (TWO_MESSAGE_PROTOCOL, [("po", "Pinger.serve", "Ponger.serve")], ("Pinger", "ping"), True),
    "solo_linear": (SOLO_LINEAR, [], ("Solo", "main"), False),
    "guards_stuck": (GUARDS_STUCK, [], ("Stuck", "main"), True),
    "endless_loop": (ENDLESS_LOOP, [], ("Loop", "main"), False),
    "call_chain": (
        CALL_CHAIN,
        [("mid", "Front.middle", "Middle.middle"), ("back", "Middle.backend", "Backend.backend")],
        ("Front", "entry"),
        False,
    ),
    "self_internal": (SELF_INTERNAL, [], ("Inner", "main"), False),
    "callback_cal": (CALLBACK_CAL, [("h", "Driver.helper", "Worker.helper")], ("Driver", "drive"), False),
    "reentrant_call": (REENTRANT_CALL, [("h", "Eager.helper", "Patient.helper")], ("Eager", "go"), True),
    "unlinked_req": (UNLINKED_REQ, [], ("Alone", "main"), True),
    "final_with_pending": (FINAL_WITH_PENDING, [("snk", "Quiet.sink", "Sink.sink")], ("Quiet", "go"), True),
    "unknown_guard": (UNKNOWN_GUARD, [], ("Choice", "main"), False),
    "serving_loop": (SERVING_LOOP, [("e", "Repeat.echo", "Echo.echo")], ("Repeat", "go"), False),
    "second_request": (SECOND_REQUEST, [("ch", "Asker.p", "Answerer.p")], ("Asker", "go"), False),
    "provider_push": (PROVIDER_PUSH, [("ch", "Sub.feed", "Pub.feed")], ("Sub", "go"), False),
}

def make_assembly(name: str):
    source, link_specs, entry, expect_deadlock = FIXTURES[name]
    components = parse_component_file(source)
    links = [
        Link(channel, tuple(frm.split(".")), tuple(to.split(".")))
        for channel, frm, to in link_specs
    ]
    return link(components, links), entry, expect_deadlock


def all_names():
    return sorted(FIXTURES)
