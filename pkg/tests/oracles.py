"""Independent oracles the property suites compare the engine against.

The possession oracle enumerates every well-typed term an agent can build,
bottom up by term size, from its initial constructors and the messages it
has received. It shares no code with the closure in the package: no
memoization, no witness bookkeeping, just a fixpoint over a term pool.
Completeness holds up to the size bound, which is why the random-instance
generator rejects instances whose closure witnesses exceed that bound.
"""

from __future__ import annotations

from privarch import (
    Architecture,
    AgentId,
    AtomicType,
    Event,
    TermExpr,
    apply,
    signature_parts,
    term_size,
)

DEFAULT_MAX_SIZE = 6


def derivable_pool(
    arch: Architecture,
    agent: AgentId,
    received: list[tuple[TermExpr, AtomicType]],
    max_size: int = DEFAULT_MAX_SIZE,
) -> dict[TermExpr, AtomicType]:
    """Every (term, atomic type) the agent can derive, term size capped."""
    pool: dict[TermExpr, AtomicType] = {}
    for term, ty in received:
        if term_size(term) <= max_size:
            pool[term] = ty
    decls = [arch.type_system.constructor(n) for n in arch.holdings_of(agent)]
    grew = True
    while grew:
        grew = False
        for decl in decls:
            args, target = signature_parts(decl)
            candidates: list[list[TermExpr]] = [[]]
            for arg_ty in args:
                matching = [t for t, ty in pool.items() if ty == arg_ty]
                candidates = [prefix + [t] for prefix in candidates for t in matching]
            for chosen in candidates:
                term = apply(decl.name, chosen)
                if term_size(term) > max_size or term in pool:
                    continue
                pool[term] = target
                grew = True
    return pool


def oracle_types(
    arch: Architecture,
    agent: AgentId,
    received: list[tuple[TermExpr, AtomicType]],
    max_size: int = DEFAULT_MAX_SIZE,
) -> frozenset[AtomicType]:
    return frozenset(derivable_pool(arch, agent, received, max_size).values())


def oracle_possession(
    arch: Architecture, events: list[Event], max_size: int = DEFAULT_MAX_SIZE
) -> list[dict[AgentId, frozenset[AtomicType]]]:
    """Per-prefix possession sets, one dict per prefix length 0..len(events)."""
    states = []
    for i in range(len(events) + 1):
        prefix = events[:i]
        per_agent = {}
        for agent in arch.agents:
            received = [(e.term, e.msg_type) for e in prefix if e.receiver == agent]
            per_agent[agent] = oracle_types(arch, agent, received, max_size)
        states.append(per_agent)
    return states


def global_term_of_type(
    arch: Architecture, ty: AtomicType, max_size: int = DEFAULT_MAX_SIZE
) -> TermExpr | None:
    """Smallest term of the given type buildable from all constructors at
    once, ignoring which agent holds what. Used to craft corrupted events."""
    pool: dict[TermExpr, AtomicType] = {}
    decls = list(arch.type_system.constructors)
    grew = True
    while grew:
        grew = False
        for decl in decls:
            args, target = signature_parts(decl)
            candidates: list[list[TermExpr]] = [[]]
            for arg_ty in args:
                matching = [t for t, t_ty in pool.items() if t_ty == arg_ty]
                candidates = [prefix + [t] for prefix in candidates for t in matching]
            for chosen in candidates:
                term = apply(decl.name, chosen)
                if term_size(term) > max_size or term in pool:
                    continue
                pool[term] = target
                grew = True
    best = None
    for term, t_ty in pool.items():
        if t_ty == ty and (best is None or term_size(term) < term_size(best)):
            best = term
    return best
