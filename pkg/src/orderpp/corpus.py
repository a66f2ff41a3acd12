"""Hand-written example protocols.

Each builder returns a validated :class:`~orderpp.protocol.Protocol` built from
a raw description, so the same code path as user files is exercised.
"""

from __future__ import annotations

from .errors import UnknownName
from .protocol import Protocol, validate_protocol


def majority() -> Protocol:
    """Active/passive majority: accepts iff there are strictly more a's than b's.

    Active agents a, b cancel into passive ones; actives convert passives to
    their own side, and a passive b converts a passive a (ties go to b).
    """
    return validate_protocol({
        "name": "majority",
        "states": [{"id": "a", "opinion": "TOP"}, {"id": "b", "opinion": "BOT"},
                   {"id": "a.bar", "opinion": "TOP"}, {"id": "b.bar", "opinion": "BOT"}],
        "initial": ["a", "b"],
        "rules": [
            {"pre": ["a", "b"], "pred": "true", "post": ["a.bar", "b.bar"], "label": "cancel"},
            {"pre": ["a", "b.bar"], "pred": "true", "post": ["a", "a.bar"], "label": "a-converts"},
            {"pre": ["b", "a.bar"], "pred": "true", "post": ["b", "b.bar"], "label": "b-converts"},
            {"pre": ["a.bar", "b.bar"], "pred": "true", "post": ["b.bar", "b.bar"],
             "label": "tiebreak"},
        ],
    })


def abstar() -> Protocol:
    """Decides a*b*: a b left of an a collapses both into the sink, which spreads."""
    return validate_protocol({
        "name": "abstar",
        "states": [{"id": "a", "opinion": "TOP"}, {"id": "b", "opinion": "TOP"},
                   {"id": "q.BOT", "opinion": "BOT"}],
        "initial": ["a", "b"],
        "rules": [
            {"pre": ["b", "a"], "pred": "lt", "post": ["q.BOT", "q.BOT"], "label": "ba"},
            {"pre": ["q.BOT", "_"], "pred": "true", "post": ["q.BOT", "q.BOT"], "label": "sink"},
        ],
    })


def abstar_io() -> Protocol:
    """Immediate-observation variant deciding a*b*."""
    return validate_protocol({
        "name": "abstar_io",
        "states": [{"id": "a", "opinion": "TOP"}, {"id": "b", "opinion": "TOP"},
                   {"id": "q.BOT", "opinion": "BOT"}],
        "initial": ["a", "b"],
        "rules": [
            {"pre": ["b", "a"], "pred": "lt", "post": ["q.BOT", "a"], "label": "ba"},
            {"pre": ["_", "q.BOT"], "pred": "true", "post": ["q.BOT", "q.BOT"], "label": "sink"},
        ],
    })


def abstar_succ() -> Protocol:
    """Decides a*b* with a successor-guarded (non-IO) collapse rule."""
    return validate_protocol({
        "name": "abstar_succ",
        "states": [{"id": "a", "opinion": "TOP"}, {"id": "b", "opinion": "TOP"},
                   {"id": "q.BOT", "opinion": "BOT"}],
        "initial": ["a", "b"],
        "rules": [
            {"pre": ["b", "a"], "pred": "succ", "post": ["q.BOT", "q.BOT"], "label": "ba"},
            {"pre": ["q.BOT", "_"], "pred": "true", "post": ["q.BOT", "q.BOT"], "label": "sink"},
        ],
    })


def exists_a() -> Protocol:
    """IO decider for words containing an a."""
    return validate_protocol({
        "name": "exists_a",
        "states": [{"id": "a", "opinion": "TOP"}, {"id": "b", "opinion": "BOT"},
                   {"id": "y", "opinion": "TOP"}],
        "initial": ["a", "b"],
        "rules": [
            {"pre": ["b", "a"], "pred": "true", "post": ["y", "a"], "label": "see-a"},
            {"pre": ["b", "y"], "pred": "true", "post": ["y", "y"], "label": "spread"},
        ],
    })


MEDIAN_DIRS = ("CROWN", "R", "L")


def median_state(x: str, y: str, z: bool) -> str:
    return f"{x}.{y}.{'TOP' if z else 'BOT'}"


def median() -> Protocol:
    """Accepts words of odd length whose middle letter is a.

    States are (letter, direction, opinion).  Crowned agents pair up from the
    outside in and the last crowned agent spreads its opinion.
    """
    sigma = ("a", "b")
    states = []
    for x in sigma:
        for y in MEDIAN_DIRS:
            for z in (True, False):
                states.append({"id": median_state(x, y, z), "opinion": "TOP" if z else "BOT"})
    rules = []

    def add(pre, post, pred, label):
        rules.append({"pre": list(pre), "pred": pred, "post": list(post), "label": label})

    zs = (True, False)
    for x in sigma:
        for z in zs:
            for x2 in sigma:
                for z2 in zs:
                    add((median_state(x, "CROWN", z), median_state(x2, "CROWN", z2)),
                        (median_state(x, "R", False), median_state(x2, "L", False)), "lt", "(1)")
    for x in sigma:
        for z in zs:
            for x2 in sigma:
                for z2 in zs:
                    add((median_state(x, "CROWN", z), median_state(x2, "R", z2)),
                        (median_state(x, "R", False), median_state(x2, "CROWN", x2 == "a")),
                        "lt", "(2)")
    for x in sigma:
        for z in zs:
            for x2 in sigma:
                for z2 in zs:
                    add((median_state(x, "L", z), median_state(x2, "CROWN", z2)),
                        (median_state(x, "CROWN", x == "a"), median_state(x2, "L", False)),
                        "lt", "(3)")
    for x in sigma:
        for y in ("R", "L"):
            for z in zs:
                for x2 in sigma:
                    for z2 in zs:
                        add((median_state(x, y, z), median_state(x2, "CROWN", z2)),
                            (median_state(x, y, z2), median_state(x2, "CROWN", z2)),
                            "true", "(4)")
    for x in sigma:
        for y in ("R", "L"):
            for x2 in sigma:
                for y2 in ("R", "L"):
                    add((median_state(x, y, True), median_state(x2, y2, False)),
                        (median_state(x, y, False), median_state(x2, y2, False)),
                        "true", "(5)")
    return validate_protocol({
        "name": "median",
        "states": states,
        "initial": [median_state("a", "CROWN", True), median_state("b", "CROWN", False)],
        "inputs": {"a": median_state("a", "CROWN", True), "b": median_state("b", "CROWN", False)},
        "rules": rules,
    })


def markers() -> Protocol:
    """Successor-guarded protocol with hourglass, arrow, check and cross markers.

    From ``a.hg a* b* b.hg`` the two endpoints send arrows inwards; each arrow
    advances by one agent, and colliding arrows raise an error.
    """
    ids = ["a", "b", "a.hg", "b.hg", "a.gt", "b.lt", "ok", "err"]
    return validate_protocol({
        "name": "markers",
        "states": [{"id": x, "opinion": "BOT" if x == "err" else "TOP"} for x in ids],
        "initial": ["a", "b", "a.hg", "b.hg"],
        "rules": [
            {"pre": ["a.hg", "b.hg"], "pred": "true", "post": ["a.gt", "b.lt"], "label": "launch"},
            {"pre": ["a.gt", "a"], "pred": "succ", "post": ["ok", "a.hg"], "label": "advance-a"},
            {"pre": ["a.gt", "b.lt"], "pred": "succ", "post": ["err", "err"], "label": "collide"},
            {"pre": ["b", "b.lt"], "pred": "succ", "post": ["b.hg", "ok"], "label": "advance-b"},
        ],
    })


def empty_language() -> Protocol:
    """Two BOT letters and no rules: the empty language."""
    return validate_protocol({
        "name": "empty",
        "states": [{"id": "a", "opinion": "BOT"}, {"id": "b", "opinion": "BOT"}],
        "initial": ["a", "b"],
        "rules": [],
    })


PROTOCOLS = {
    "majority": majority,
    "abstar": abstar,
    "abstar_io": abstar_io,
    "abstar_succ": abstar_succ,
    "exists_a": exists_a,
    "median": median,
    "markers": markers,
    "empty": empty_language,
}


def protocol(name: str) -> Protocol:
    if name not in PROTOCOLS:
        raise UnknownName(f"unknown corpus protocol {name!r}", name=name)
    return PROTOCOLS[name]()
