"""Agents, holdings, channels, and structural validation."""

from __future__ import annotations

import pytest

from privarch import (
    AgentId,
    Architecture,
    ArchitectureError,
    Base,
    ConstructorDecl,
    INTERFACE,
    ORIGINAL,
    OUTPUT,
    TypeSystem,
    can_compute,
    make_signature,
    validate_architecture,
)

INFO = Base("INFO")
CONSENT = Base("CONSENT")
POLICY = Base("POLICY")

CHILD = AgentId("Child")
PARENT = AgentId("Parent")
WEBSITE = AgentId("Website")


@pytest.fixture(scope="module")
def coppa():
    ts = TypeSystem.build(
        [INFO, CONSENT, POLICY],
        [
            ConstructorDecl("info", INFO),
            ConstructorDecl("consent", CONSENT),
            ConstructorDecl("policy", POLICY),
        ],
    )
    return Architecture.build(
        ts,
        [CHILD, PARENT, WEBSITE],
        {CHILD: {"info"}, PARENT: {"consent"}, WEBSITE: {"policy"}},
        {
            (CHILD, WEBSITE): {INFO},
            (PARENT, WEBSITE): {CONSENT},
            (WEBSITE, PARENT): {POLICY},
        },
    )


def test_original_agent_ids():
    a = AgentId("Child")
    assert a.kind == ORIGINAL and a.owner is None
    assert str(a.name) == "Child"


def test_interface_ids_carry_owner():
    i = AgentId.interface_of(CHILD)
    o = AgentId.output_of(CHILD)
    assert (i.name, i.kind, i.owner) == ("I:Child", INTERFACE, "Child")
    assert (o.name, o.kind, o.owner) == ("O:Child", OUTPUT, "Child")


def test_reserved_prefix_rejected_for_originals():
    with pytest.raises(ArchitectureError):
        AgentId("I:Child")
    with pytest.raises(ArchitectureError):
        AgentId("O:Child")


def test_interface_kind_requires_prefix_and_owner():
    with pytest.raises(ArchitectureError):
        AgentId("Child", INTERFACE, "Child")
    with pytest.raises(ArchitectureError):
        AgentId("I:Child", INTERFACE, None)


def test_sort_key_orders_originals_first():
    agents = [AgentId.interface_of(CHILD), WEBSITE, AgentId.output_of(CHILD), CHILD]
    ordered = sorted(agents, key=lambda a: a.sort_key)
    assert [a.name for a in ordered] == ["Child", "Website", "I:Child", "O:Child"]


def test_can_compute_initial_holdings(coppa):
    assert can_compute(coppa, CHILD, INFO)
    assert not can_compute(coppa, WEBSITE, INFO)


def test_holdings_and_channel_accessors(coppa):
    assert coppa.holdings_of(CHILD) == frozenset({"info"})
    assert coppa.channel_types(CHILD, WEBSITE) == frozenset({INFO})
    assert coppa.channel_types(WEBSITE, CHILD) == frozenset()


def test_agent_named(coppa):
    assert coppa.agent_named("Parent") == PARENT
    with pytest.raises(ArchitectureError):
        coppa.agent_named("Stranger")


def test_validate_clean(coppa):
    rep = validate_architecture(coppa)
    assert rep.violations == ()
    assert rep.lines() == []


def test_validate_flags_unknown_holding(coppa):
    broken = Architecture.build(
        coppa.type_system,
        coppa.agents,
        {**{a: coppa.holdings_of(a) for a in coppa.agents}, CHILD: {"info", "ghost"}},
        coppa.channels,
    )
    rep = validate_architecture(broken)
    assert any(v.code == "holdings" and "ghost" in v.message for v in rep.violations)


def test_validate_flags_undeclared_channel_type(coppa):
    broken = Architecture.build(
        coppa.type_system,
        coppa.agents,
        {a: coppa.holdings_of(a) for a in coppa.agents},
        {**dict(coppa.channels), (CHILD, PARENT): {Base("GHOST")}},
    )
    rep = validate_architecture(broken)
    assert any(v.code == "channels" and "GHOST" in v.message for v in rep.violations)


def test_validate_flags_foreign_channel_endpoint(coppa):
    stranger = AgentId("Stranger")
    broken = Architecture.build(
        coppa.type_system,
        coppa.agents,
        {a: coppa.holdings_of(a) for a in coppa.agents},
        {**dict(coppa.channels), (CHILD, stranger): {INFO}},
    )
    rep = validate_architecture(broken)
    assert any(v.code == "channels" and "undeclared" in v.message for v in rep.violations)


def test_self_channel_is_a_violation(coppa):
    broken = Architecture.build(
        coppa.type_system,
        coppa.agents,
        {a: coppa.holdings_of(a) for a in coppa.agents},
        {**dict(coppa.channels), (CHILD, CHILD): {INFO}},
    )
    rep = validate_architecture(broken)
    assert any(v.code == "channels" and "self-channel" in v.message for v in rep.violations)


def test_original_agents_listing(coppa):
    safe_agents = list(coppa.agents) + [AgentId.interface_of(CHILD)]
    arch = Architecture.build(
        coppa.type_system,
        safe_agents,
        {**{a: coppa.holdings_of(a) for a in coppa.agents}, AgentId.interface_of(CHILD): set()},
        coppa.channels,
    )
    assert arch.original_agents() == [CHILD, PARENT, WEBSITE]
    assert [a.name for a in arch.sorted_agents()] == ["Child", "Parent", "Website", "I:Child"]
