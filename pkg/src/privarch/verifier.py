"""Partition premise checks.

A partition assigns every agent of an architecture to the cell of one
original agent. When the premises below hold, every trace through the
architecture satisfies the corresponding negative constraints, so the
checks are a static alternative to exhaustive search. The verifier never
assumes the architecture came from the synthesizer: wrapper constructors
are recognized by signature shape, not by name, so hand-modified
architectures re-verify honestly.

Premise codes: p1-self (each cell owner belongs to its own cell and the
partition is total), p2-boundary (cross-cell channels carry wrapper types
only), p3-unwrap (unwrappers live in their owner's cell), and for the
certified-only discipline p4-target (inside a constrained cell, the only
constructor targeting the trigger is its unwrapper); for the proof
discipline p4-proof-compute (a proof-maker's holder cannot compute the
proved type) and p5-proof-channel (the only incoming channel of the proved
type comes from the owner).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .architecture import Architecture, AgentId, UnknownAgent, Violation, VerdictReport, report
from .constraints import NegCreate, NegPossess
from .terms import (
    AtomicType,
    Base,
    Certified,
    ConstructorDecl,
    Proof,
    is_atomic,
    signature_parts,
    type_name,
)


@dataclass(frozen=True)
class Partition:
    """Total map from agents to the original agent owning their cell."""

    owner: Mapping[AgentId, AgentId]

    def cell_of(self, agent: AgentId) -> AgentId | None:
        return self.owner.get(agent)


def canonical_partition(agents: Iterable[AgentId]) -> Partition:
    """Each interface joins its owner's cell; originals own themselves."""
    agents = tuple(agents)
    by_name = {a.name: a for a in agents}
    owner: dict[AgentId, AgentId] = {}
    for a in agents:
        if a.owner is not None and a.owner not in by_name:
            raise UnknownAgent(a.owner)
        owner[a] = a if a.owner is None else by_name[a.owner]
    return Partition(owner)


def unwrapper_form(decl: ConstructorDecl) -> tuple[str, str] | None:
    """Recognize C[x](A) -> A by shape; returns (owner name, base name)."""
    args, target = signature_parts(decl)
    if (
        len(args) == 1
        and isinstance(args[0], Certified)
        and isinstance(target, Base)
        and args[0].inner == target.name
    ):
        return args[0].reader, target.name
    return None


def proof_maker_form(decl: ConstructorDecl) -> tuple[str, str] | None:
    """Recognize A -> P[x](A) by shape; returns (owner name, base name)."""
    args, target = signature_parts(decl)
    if (
        len(args) == 1
        and isinstance(args[0], Base)
        and isinstance(target, Proof)
        and target.inner == args[0].name
    ):
        return target.holder, args[0].name
    return None


def _membership_violations(arch: Architecture, partition: Partition) -> list[Violation]:
    violations = []
    owners = set(partition.owner.values())
    for a in sorted(arch.agents, key=lambda a: a.sort_key):
        cell = partition.cell_of(a)
        if cell is None:
            violations.append(
                Violation("p1-self", (a.name,), f"agent {a.name} is assigned to no cell")
            )
        elif cell not in arch.agents:
            violations.append(
                Violation(
                    "p1-self", (a.name,), f"agent {a.name} is owned by unknown {cell.name}"
                )
            )
    for o in sorted(owners, key=lambda a: a.sort_key):
        if partition.cell_of(o) != o:
            violations.append(
                Violation(
                    "p1-self", (o.name,), f"cell owner {o.name} does not belong to its own cell"
                )
            )
    return violations


def _boundary_violations(
    arch: Architecture, partition: Partition, allowed: tuple[type, ...]
) -> list[Violation]:
    violations = []
    for (s, r), types in sorted(
        arch.channels.items(), key=lambda kv: (kv[0][0].sort_key, kv[0][1].sort_key)
    ):
        if partition.cell_of(s) == partition.cell_of(r) and partition.cell_of(s) is not None:
            continue
        for t in sorted(types, key=type_name):
            # Unknown forms are rejected conservatively: anything that is not
            # an expected wrapper may leak across the boundary.
            if not (is_atomic(t) and isinstance(t, allowed)):
                violations.append(
                    Violation(
                        "p2-boundary",
                        (s.name, r.name, type_name(t)),
                        f"cross-cell channel {s.name} -> {r.name} carries {type_name(t)}",
                    )
                )
    return violations


def _unwrap_cell_violations(arch: Architecture, partition: Partition) -> list[Violation]:
    violations = []
    for a in sorted(arch.agents, key=lambda a: a.sort_key):
        for name in sorted(arch.holdings_of(a)):
            form = unwrapper_form(arch.type_system.constructor(name))
            if form is None:
                continue
            owner_name, _ = form
            cell = partition.cell_of(a)
            if cell is None or cell.name != owner_name:
                violations.append(
                    Violation(
                        "p3-unwrap",
                        (a.name, name),
                        f"{a.name} holds unwrapper {name} but is not in {owner_name}'s cell",
                    )
                )
    return violations


def verify_partition_v1(
    arch: Architecture, partition: Partition, constraints: Iterable[NegCreate]
) -> VerdictReport:
    """Premises of the certified-only discipline (four checks)."""
    negatives = [c for c in constraints if isinstance(c, NegCreate)]
    violations = _membership_violations(arch, partition)
    violations += _boundary_violations(arch, partition, (Certified,))
    violations += _unwrap_cell_violations(arch, partition)
    for c in negatives:
        cell = [a for a in arch.agents if partition.cell_of(a) == c.subject]
        for a in sorted(cell, key=lambda a: a.sort_key):
            for name in sorted(arch.holdings_of(a)):
                decl = arch.type_system.constructor(name)
                if signature_parts(decl)[1] != c.trigger:
                    continue
                form = unwrapper_form(decl)
                if form != (c.subject.name, type_name(c.trigger)):
                    violations.append(
                        Violation(
                            "p4-target",
                            (a.name, name, type_name(c.trigger)),
                            f"{a.name} in {c.subject.name}'s cell holds {name} targeting "
                            f"{type_name(c.trigger)}, which is not that cell's unwrapper",
                        )
                    )
    return report(violations)


def verify_partition_v2(
    arch: Architecture, partition: Partition, constraints: Iterable[NegPossess] = ()
) -> VerdictReport:
    """Premises of the proof discipline (five checks).

    The constraint set does not enter the premises; the parameter is kept so
    both verifiers share a calling convention.
    """
    del constraints
    violations = _membership_violations(arch, partition)
    violations += _boundary_violations(arch, partition, (Certified, Proof))
    violations += _unwrap_cell_violations(arch, partition)
    for a in sorted(arch.agents, key=lambda a: a.sort_key):
        proved: list[tuple[str, str, str]] = []
        for name in sorted(arch.holdings_of(a)):
            form = proof_maker_form(arch.type_system.constructor(name))
            if form is not None:
                proved.append((name, *form))
        if not proved:
            continue
        targets = {
            signature_parts(arch.type_system.constructor(n))[1]
            for n in arch.holdings_of(a)
        }
        for name, owner_name, base_name in proved:
            if Base(base_name) in targets:
                violations.append(
                    Violation(
                        "p4-proof-compute",
                        (a.name, name),
                        f"{a.name} holds proof-maker {name} but can compute {base_name}",
                    )
                )
            for (s, r), types in sorted(
                arch.channels.items(), key=lambda kv: (kv[0][0].sort_key, kv[0][1].sort_key)
            ):
                if r != a or Base(base_name) not in types:
                    continue
                if s.name != owner_name:
                    violations.append(
                        Violation(
                            "p5-proof-channel",
                            (a.name, name, s.name),
                            f"{a.name} holds proof-maker {name} but receives "
                            f"{base_name} from {s.name}, not {owner_name}",
                        )
                    )
    return report(violations)
