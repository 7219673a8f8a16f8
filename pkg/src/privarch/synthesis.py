"""Privacy-safe architecture extensions.

Two constructions, one per negative-constraint language. The certified
transport (v1) wraps every cross-boundary payload in a Certified type whose
certifier demands evidence that each required type was created; the proof
transport (v2) demands proof terms naming the agent that possessed each
required type. Both add interface agents around every original agent and
confine unwrapping so that the original agents' code never changes.

Synthesized constructor names mirror the wrapper notation and stay parseable:
m[Agent,TYPE] / m[Agent,TYPE][B1,B2] certify, pi[Agent,TYPE] unwraps,
p[Agent,TYPE] builds proofs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .architecture import (
    Architecture,
    AgentId,
    ORIGINAL,
    INTERFACE,
    OUTPUT,
    can_compute,
)
from .constraints import Constraint, LocalSend, NegCreate, NegPossess, Positive
from .terms import (
    AtomicType,
    Base,
    Certified,
    ConstructorDecl,
    Proof,
    TypeSystem,
    make_signature,
    type_name,
)
from .verifier import Partition


class SynthesisError(Exception):
    pass


class ConstraintOutOfScope(SynthesisError):
    pass


class CapacityExceeded(SynthesisError):
    pass


class NotAnInterfacePair(SynthesisError):
    pass


@dataclass(frozen=True)
class SynthesisConfig:
    algorithm: int = 2
    m_family_cap: int = 10_000


@dataclass(frozen=True)
class SynthesizedFrom:
    """Provenance of one synthesized constructor or wrapper type."""

    role: str  # "certifier" | "unwrapper" | "proof-maker" | "wrapper-type"
    agent: str
    base: str
    constraints: tuple[Constraint, ...] = ()


@dataclass(frozen=True)
class SafeArchitecture:
    arch: Architecture
    canonical_partition: Partition
    provenance: Mapping[object, SynthesizedFrom]
    warnings: tuple[str, ...] = ()
    local_constraints: tuple[LocalSend, ...] = ()


def certifier_name(agent: str, base: str, witnesses: Sequence[str] = ()) -> str:
    name = f"m[{agent},{base}]"
    if witnesses:
        name += f"[{','.join(witnesses)}]"
    return name


def unwrapper_name(agent: str, base: str) -> str:
    return f"pi[{agent},{base}]"


def proof_maker_name(agent: str, base: str) -> str:
    return f"p[{agent},{base}]"


def _base_types(ts: TypeSystem) -> list[Base]:
    for t in ts.atomic_types:
        if not isinstance(t, Base):
            raise SynthesisError(
                f"input type system already contains wrapper type {type_name(t)}; "
                "synthesis starts from base types only"
            )
    return sorted((t for t in ts.atomic_types if isinstance(t, Base)), key=lambda t: t.name)


def _split_constraints(
    constraints: Iterable[Constraint], expected: type
) -> tuple[list, list[Positive]]:
    negatives: list = []
    positives: list[Positive] = []
    for c in constraints:
        if isinstance(c, expected):
            negatives.append(c)
        elif isinstance(c, Positive):
            positives.append(c)
        else:
            raise ConstraintOutOfScope(
                f"constraint form {type(c).__name__} is not handled by this construction: {c}"
            )
    return negatives, positives


def _check_scope(ts: TypeSystem, agents: Sequence[AgentId], negatives: Sequence) -> None:
    agent_set = set(agents)
    for c in negatives:
        if c.subject not in agent_set:
            raise ConstraintOutOfScope(f"constraint subject {c.subject.name} is not an agent")
        mentioned = [c.trigger, c.required]
        if isinstance(c, NegPossess) and c.holder not in agent_set:
            raise ConstraintOutOfScope(f"constraint holder {c.holder.name} is not an agent")
        for t in mentioned:
            if t not in ts.atomic_types:
                raise ConstraintOutOfScope(
                    f"constraint mentions undeclared type {type_name(t)}"
                )


def build_safe_type_system_v1(
    ts: TypeSystem,
    agents: Iterable[AgentId],
    constraints: Iterable[Constraint],
    m_family_cap: int = SynthesisConfig().m_family_cap,
) -> TypeSystem:
    return _build_ts_v1(ts, tuple(agents), constraints, m_family_cap)[0]


def _build_ts_v1(
    ts: TypeSystem,
    agents: Sequence[AgentId],
    constraints: Iterable[Constraint],
    m_family_cap: int,
) -> tuple[TypeSystem, dict[object, SynthesizedFrom]]:
    bases = _base_types(ts)
    negatives, _ = _split_constraints(constraints, NegCreate)
    _check_scope(ts, agents, negatives)
    agent_names = sorted(a.name for a in agents)
    provenance: dict[object, SynthesizedFrom] = {}

    types: set[AtomicType] = set(ts.atomic_types)
    for agent in agent_names:
        for b in bases:
            wrapper = Certified(agent, b.name)
            types.add(wrapper)
            provenance[wrapper] = SynthesizedFrom("wrapper-type", agent, b.name)

    decls = list(ts.constructors)
    for agent in agent_names:
        for b in bases:
            group = sorted(
                (c for c in negatives if c.subject.name == agent and c.trigger == b),
                key=lambda c: type_name(c.required),
            )
            if len(agent_names) ** len(group) > m_family_cap:
                raise CapacityExceeded(
                    f"certifier family for ({agent}, {b.name}) needs "
                    f"{len(agent_names)}^{len(group)} members, over the cap {m_family_cap}"
                )
            for witnesses in itertools.product(agent_names, repeat=len(group)):
                args: list[AtomicType] = [b]
                args += [
                    Certified(w, type_name(c.required))
                    for w, c in zip(witnesses, group)
                ]
                name = certifier_name(agent, b.name, witnesses)
                decls.append(ConstructorDecl(name, make_signature(args, Certified(agent, b.name))))
                provenance[name] = SynthesizedFrom("certifier", agent, b.name, tuple(group))
            pi = unwrapper_name(agent, b.name)
            decls.append(
                ConstructorDecl(pi, make_signature([Certified(agent, b.name)], b))
            )
            provenance[pi] = SynthesizedFrom("unwrapper", agent, b.name, tuple(group))
    return TypeSystem.build(types, decls), provenance


def build_safe_type_system_v2(
    ts: TypeSystem,
    agents: Iterable[AgentId],
    constraints: Iterable[Constraint],
) -> TypeSystem:
    return _build_ts_v2(ts, tuple(agents), constraints)[0]


def _build_ts_v2(
    ts: TypeSystem,
    agents: Sequence[AgentId],
    constraints: Iterable[Constraint],
) -> tuple[TypeSystem, dict[object, SynthesizedFrom]]:
    bases = _base_types(ts)
    negatives, _ = _split_constraints(constraints, NegPossess)
    _check_scope(ts, agents, negatives)
    agent_names = sorted(a.name for a in agents)
    provenance: dict[object, SynthesizedFrom] = {}

    types: set[AtomicType] = set(ts.atomic_types)
    for agent in agent_names:
        for b in bases:
            for wrapper in (Certified(agent, b.name), Proof(agent, b.name)):
                types.add(wrapper)
                provenance[wrapper] = SynthesizedFrom("wrapper-type", agent, b.name)

    decls = list(ts.constructors)
    for agent in agent_names:
        for b in bases:
            group = sorted(
                (c for c in negatives if c.subject.name == agent and c.trigger == b),
                key=lambda c: (type_name(c.required), c.holder.name),
            )
            args: list[AtomicType] = [b]
            args += [Proof(c.holder.name, type_name(c.required)) for c in group]
            m = certifier_name(agent, b.name)
            decls.append(ConstructorDecl(m, make_signature(args, Certified(agent, b.name))))
            provenance[m] = SynthesizedFrom("certifier", agent, b.name, tuple(group))
            pi = unwrapper_name(agent, b.name)
            decls.append(ConstructorDecl(pi, make_signature([Certified(agent, b.name)], b)))
            provenance[pi] = SynthesizedFrom("unwrapper", agent, b.name, tuple(group))
            p = proof_maker_name(agent, b.name)
            decls.append(ConstructorDecl(p, make_signature([b], Proof(agent, b.name))))
            provenance[p] = SynthesizedFrom("proof-maker", agent, b.name, tuple(group))
    return TypeSystem.build(types, decls), provenance


def _originals_only(arch: Architecture) -> list[AgentId]:
    for a in arch.agents:
        if a.kind != ORIGINAL:
            raise SynthesisError(
                f"synthesis input must contain original agents only, found {a.name}"
            )
    return arch.original_agents()


def _hypothesis_warnings(arch: Architecture, negatives: Sequence) -> tuple[str, ...]:
    warnings = []
    for c in negatives:
        if can_compute(arch, c.subject, c.trigger):
            warnings.append(
                f"subject {c.subject.name} can compute its trigger "
                f"{type_name(c.trigger)}; the safety guarantee for '{c}' needs "
                "the subject unable to create the trigger itself"
            )
    return tuple(warnings)


def build_safe_architecture_v1(
    arch: Architecture,
    constraints: Iterable[Constraint],
    config: SynthesisConfig = SynthesisConfig(algorithm=1),
) -> SafeArchitecture:
    """Interface extension for creation constraints: one interface per agent,
    certifiers everywhere, unwrapping confined to each owner's interface."""
    originals = _originals_only(arch)
    constraints = tuple(constraints)
    negatives, _ = _split_constraints(constraints, NegCreate)
    safe_ts, provenance = _build_ts_v1(
        arch.type_system, originals, constraints, config.m_family_cap
    )
    bases = _base_types(arch.type_system)

    interfaces = {a: AgentId.interface_of(a) for a in originals}
    agents = list(originals) + [interfaces[a] for a in originals]

    certifier_names = sorted(
        name
        for name, origin in provenance.items()
        if isinstance(name, str) and origin.role == "certifier"
    )
    holdings: dict[AgentId, set[str]] = {a: set(arch.holdings_of(a)) for a in originals}
    for a in originals:
        mine = set(certifier_names)
        mine.update(unwrapper_name(a.name, b.name) for b in bases)
        holdings[interfaces[a]] = mine

    channels: dict[tuple[AgentId, AgentId], set[AtomicType]] = {}
    base_set = set(bases)
    for a in originals:
        channels[(a, interfaces[a])] = set(base_set)
        channels[(interfaces[a], a)] = set(base_set)
    certified = {t for t in safe_ts.atomic_types if isinstance(t, Certified)}
    for a, b in itertools.permutations(originals, 2):
        channels[(interfaces[a], interfaces[b])] = set(certified)

    safe = Architecture.build(safe_ts, agents, holdings, channels)
    owner = {a: a for a in originals}
    owner.update({interfaces[a]: a for a in originals})
    return SafeArchitecture(
        safe, Partition(owner), provenance, _hypothesis_warnings(arch, negatives)
    )


def build_safe_architecture_v2(
    arch: Architecture,
    constraints: Iterable[Constraint],
    config: SynthesisConfig = SynthesisConfig(algorithm=2),
) -> SafeArchitecture:
    """Input/output interface extension for possession constraints: payloads
    enter an agent through its input interface (which alone unwraps) and
    leave through its output interface (which alone builds its proofs)."""
    originals = _originals_only(arch)
    constraints = tuple(constraints)
    negatives, _ = _split_constraints(constraints, NegPossess)
    safe_ts, provenance = _build_ts_v2(arch.type_system, originals, constraints)
    bases = _base_types(arch.type_system)

    inputs = {a: AgentId.interface_of(a) for a in originals}
    outputs = {a: AgentId.output_of(a) for a in originals}
    agents = list(originals) + [inputs[a] for a in originals] + [outputs[a] for a in originals]

    certifier_names = sorted(
        name
        for name, origin in provenance.items()
        if isinstance(name, str) and origin.role == "certifier"
    )
    holdings: dict[AgentId, set[str]] = {a: set(arch.holdings_of(a)) for a in originals}
    for a in originals:
        holdings[inputs[a]] = {unwrapper_name(a.name, b.name) for b in bases}
        mine = set(certifier_names)
        mine.update(proof_maker_name(a.name, b.name) for b in bases)
        holdings[outputs[a]] = mine

    channels: dict[tuple[AgentId, AgentId], set[AtomicType]] = {}
    base_set = set(bases)
    for a in originals:
        channels[(inputs[a], a)] = set(base_set)
        channels[(a, outputs[a])] = set(base_set)
    wrappers = {
        t for t in safe_ts.atomic_types if isinstance(t, (Certified, Proof))
    }
    interface_agents = [inputs[a] for a in originals] + [outputs[a] for a in originals]
    for x, y in itertools.permutations(interface_agents, 2):
        channels[(x, y)] = set(wrappers)

    safe = Architecture.build(safe_ts, agents, holdings, channels)
    owner = {a: a for a in originals}
    owner.update({inputs[a]: a for a in originals})
    owner.update({outputs[a]: a for a in originals})
    return SafeArchitecture(
        safe, Partition(owner), provenance, _hypothesis_warnings(arch, negatives)
    )


@dataclass(frozen=True)
class Grant:
    """Permission for one input interface to forward a base type straight to
    the matching output interface, bypassing the owner."""

    input_agent: AgentId
    msg_type: AtomicType
    output_agent: AgentId


def relax_with_local_constraints(
    safe: SafeArchitecture, grants: Iterable[Grant]
) -> tuple[SafeArchitecture, tuple[LocalSend, ...]]:
    """Open each granted I -> O channel and emit the local constraint that
    gates it: the forwarded term must already have been sent to the owner.

    The pair is returned so explorers and trace checks enforce the gate; the
    partition premises do not cover the widened architecture (a non-owner now
    sends a base type to a proof holder), which is exactly why the gate exists.
    """
    arch = safe.arch
    channels = {pair: set(types) for pair, types in arch.channels.items()}
    gates: list[LocalSend] = []
    for g in grants:
        if (
            g.input_agent.kind != INTERFACE
            or g.output_agent.kind != OUTPUT
            or g.input_agent.owner != g.output_agent.owner
        ):
            raise NotAnInterfacePair(
                f"grant must pair I:<owner> with O:<owner>, got "
                f"{g.input_agent.name} -> {g.output_agent.name}"
            )
        for end in (g.input_agent, g.output_agent):
            if end not in arch.agents:
                raise NotAnInterfacePair(f"grant names unknown agent {end.name}")
        if not isinstance(g.msg_type, Base) or g.msg_type not in arch.type_system.atomic_types:
            raise NotAnInterfacePair(
                f"grants carry declared base types only, got {type_name(g.msg_type)}"
            )
        owner = arch.agent_named(g.input_agent.owner)
        channels.setdefault((g.input_agent, g.output_agent), set()).add(g.msg_type)
        gates.append(LocalSend(g.input_agent, g.msg_type, g.output_agent, owner))
    relaxed = Architecture.build(arch.type_system, arch.agents, arch.holdings, channels)
    gates_out = tuple(dict.fromkeys(gates))
    return (
        SafeArchitecture(
            relaxed,
            safe.canonical_partition,
            safe.provenance,
            safe.warnings,
            safe.local_constraints + gates_out,
        ),
        gates_out,
    )
