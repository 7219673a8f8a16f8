"""Trace semantics: what each agent can derive after a sequence of sends.

A trace is a sequence of events (sender, term, atomic type, receiver).
Derivability follows three ideas: an agent derives what it initially holds,
what a valid event delivered to it, and any application of a derivable
constructor to derivable arguments. Possession is monotone along a trace.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .architecture import Architecture, AgentId
from .terms import (
    App,
    AtomicType,
    Con,
    TermExpr,
    TypeExpr,
    CalculusError,
    infer_type,
    is_atomic,
    make_signature,
    signature_parts,
    term_size,
    term_to_str,
    type_name,
    type_sort_key,
    uncurry,
)

CHANNEL = "channel"
POSSESSION = "possession"


class TraceError(Exception):
    pass


class EventTypeError(TraceError):
    """The event is structurally broken: unknown agent, non-atomic message
    type, or a term that does not type-check at the declared type."""


class InvalidTraceError(TraceError):
    pass


class NotDerivable(TraceError):
    pass


@dataclass(frozen=True)
class Event:
    sender: AgentId
    term: TermExpr
    msg_type: AtomicType
    receiver: AgentId

    def __post_init__(self) -> None:
        if self.sender == self.receiver:
            raise EventTypeError(f"event sends {self.sender.name} to itself")
        if not is_atomic(self.msg_type):
            raise EventTypeError("events carry atomic types only")

    def __str__(self) -> str:
        return (
            f"{self.sender.name} -> {self.receiver.name} : "
            f"{term_to_str(self.term)} : {type_name(self.msg_type)}"
        )


Trace = tuple[Event, ...]


def as_trace(events: Iterable[Event]) -> Trace:
    return tuple(events)


@dataclass(frozen=True)
class TraceCheck:
    valid: bool
    index: int | None = None
    reason: str | None = None

    def __str__(self) -> str:
        if self.valid:
            return "valid"
        return f"invalid at event {self.index}: {self.reason} violation"


def _check_event_structure(arch: Architecture, i: int, e: Event) -> None:
    for end in (e.sender, e.receiver):
        if end not in arch.agents:
            raise EventTypeError(f"event {i}: unknown agent {end.name}")
    try:
        ty = infer_type(arch.type_system, e.term)
    except CalculusError as exc:
        raise EventTypeError(f"event {i}: {exc}") from exc
    if ty != e.msg_type:
        raise EventTypeError(
            f"event {i}: term {term_to_str(e.term)} has type {type_name(ty)}, "
            f"not {type_name(e.msg_type)}"
        )


class _DeriveEngine:
    """Decision procedure for 'after the first L events, agent derives term'.

    A term is derivable at L when its head constructor is initially held and
    every argument is derivable at L, or when some earlier event delivered
    exactly this term to the agent and the sender could derive it before
    sending. The recursion terminates because delivery steps strictly
    decrease the prefix length and computation steps decrease the term.
    """

    def __init__(self, arch: Architecture, events: Sequence[Event]):
        self.arch = arch
        self.events = list(events)
        self._memo: dict[tuple[int, AgentId, TermExpr], bool] = {}

    def derivable(self, length: int, agent: AgentId, term: TermExpr) -> bool:
        key = (length, agent, term)
        cached = self._memo.get(key)
        if cached is not None:
            return cached
        self._memo[key] = False  # cycle guard; real deliveries strictly descend
        result = self._compute(length, agent, term)
        self._memo[key] = result
        return result

    def _compute(self, length: int, agent: AgentId, term: TermExpr) -> bool:
        match term:
            case Con(name):
                if name in self.arch.holdings_of(agent):
                    return True
            case App(fun, arg):
                if self.derivable(length, agent, fun) and self.derivable(length, agent, arg):
                    return True
        for k in range(length - 1, -1, -1):
            e = self.events[k]
            if e.receiver == agent and e.term == term:
                if self.derivable(k, e.sender, term):
                    return True
        return False


def check_trace_valid(arch: Architecture, events: Sequence[Event]) -> TraceCheck:
    """Verdict-valued validity check; pinpoints the first offending event.

    Structural breakage (unknown agents, ill-typed terms) raises instead,
    since the verdict reasons are reserved for the two semantic failures:
    the channel does not carry the type, or the sender cannot derive the term.
    """
    engine = _DeriveEngine(arch, events)
    for i, e in enumerate(events):
        _check_event_structure(arch, i, e)
        if e.msg_type not in arch.channel_types(e.sender, e.receiver):
            return TraceCheck(False, i, CHANNEL)
        if not engine.derivable(i, e.sender, e.term):
            return TraceCheck(False, i, POSSESSION)
    return TraceCheck(True)


def derives(
    arch: Architecture,
    events: Sequence[Event],
    agent: AgentId,
    term: TermExpr,
    ty: TypeExpr,
) -> bool:
    """Decide whether the agent derives `term : ty` after the whole trace.

    The trace must be valid (raises InvalidTraceError otherwise). A term that
    does not type-check, or checks at a different type, is simply not
    derivable at `ty`.
    """
    verdict = check_trace_valid(arch, events)
    if not verdict.valid:
        raise InvalidTraceError(str(verdict))
    if agent not in arch.agents:
        raise EventTypeError(f"unknown agent {agent.name}")
    try:
        inferred = infer_type(arch.type_system, term)
    except CalculusError:
        return False
    if inferred != ty:
        return False
    return _DeriveEngine(arch, events).derivable(len(events), agent, term)


@dataclass(frozen=True)
class Decomposition:
    """How a derivable term came to be possessed: the agent that computed it
    from held constructors, and the chain of event indices (in order) that
    carried the exact term from the computer to the possessing agent."""

    computer: AgentId
    head: str
    args: tuple[TermExpr, ...]
    delivery_chain: tuple[int, ...]


def generation_decompose(
    arch: Architecture, events: Sequence[Event], agent: AgentId, term: TermExpr
) -> Decomposition:
    verdict = check_trace_valid(arch, events)
    if not verdict.valid:
        raise InvalidTraceError(str(verdict))
    engine = _DeriveEngine(arch, events)
    head, args = uncurry(term)

    def locate(length: int, holder: AgentId) -> tuple[AgentId, list[int]]:
        if head in arch.holdings_of(holder) and all(
            engine.derivable(length, holder, a) for a in args
        ):
            return holder, []
        for k in range(length - 1, -1, -1):
            e = events[k]
            if e.receiver == holder and e.term == term:
                if engine.derivable(k, e.sender, term):
                    computer, chain = locate(k, e.sender)
                    return computer, chain + [k]
        raise NotDerivable(f"{holder.name} cannot derive {term_to_str(term)}")

    computer, chain = locate(len(events), agent)
    return Decomposition(computer, head, args, tuple(chain))


@dataclass(frozen=True)
class KnowledgeState:
    """Type-level possession per agent after some prefix, with one canonical
    witness term per (agent, type). Witnesses are assigned once, smallest
    candidate first (by term size, then printed form), and never replaced."""

    possessed: Mapping[AgentId, frozenset[AtomicType]]
    witnesses: Mapping[tuple[AgentId, AtomicType], TermExpr]

    def types_of(self, agent: AgentId) -> frozenset[AtomicType]:
        return self.possessed.get(agent, frozenset())

    def witness(self, agent: AgentId, ty: AtomicType) -> TermExpr:
        return self.witnesses[(agent, ty)]


def _close_agent(
    arch: Architecture, agent: AgentId, owned: dict[AtomicType, TermExpr]
) -> None:
    """Saturate one agent's type-level possession in place: whenever every
    argument type of a held constructor is possessed, the target is too.
    Smallest new witness first keeps the choice canonical."""
    decls = [arch.type_system.constructor(n) for n in sorted(arch.holdings_of(agent))]
    parts = [(d.name, *signature_parts(d)) for d in decls]
    while True:
        best: tuple[int, str, TermExpr, AtomicType] | None = None
        for name, args, target in parts:
            if target in owned:
                continue
            if all(a in owned for a in args):
                term: TermExpr = Con(name)
                for a in args:
                    term = App(term, owned[a])
                cand = (term_size(term), term_to_str(term), term, target)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        if best is None:
            return
        owned[best[3]] = best[2]


def possession_closure(arch: Architecture, events: Sequence[Event]) -> list[KnowledgeState]:
    """One KnowledgeState per prefix (length of trace plus one).

    Seeds each agent with what its held constructors can build, then folds
    events: the receiver gains the delivered term at its type and the
    receiver's set is re-closed. Sound and complete for type-level
    possession against the derivability judgement.
    """
    verdict = check_trace_valid(arch, events)
    if not verdict.valid:
        raise InvalidTraceError(str(verdict))
    owned: dict[AgentId, dict[AtomicType, TermExpr]] = {}
    for agent in arch.sorted_agents():
        mine: dict[AtomicType, TermExpr] = {}
        _close_agent(arch, agent, mine)
        owned[agent] = mine

    def snapshot() -> KnowledgeState:
        possessed = {a: frozenset(m) for a, m in owned.items() if m}
        witnesses = {(a, t): w for a, m in owned.items() for t, w in m.items()}
        return KnowledgeState(possessed, witnesses)

    states = [snapshot()]
    for e in events:
        mine = owned[e.receiver]
        if e.msg_type not in mine:
            mine[e.msg_type] = e.term
            _close_agent(arch, e.receiver, mine)
        states.append(snapshot())
    return states


def weakening_holds(
    arch: Architecture,
    prefix: Sequence[Event],
    extension: Sequence[Event],
    agent: AgentId,
    term: TermExpr,
    ty: TypeExpr,
) -> bool:
    """Anything derivable after `prefix` stays derivable after appending
    `extension`; vacuously true when the judgement does not hold at the
    prefix. Property-test harness."""
    if not derives(arch, prefix, agent, term, ty):
        return True
    return derives(arch, tuple(prefix) + tuple(extension), agent, term, ty)


def arrow_possession_is_initial(arch: Architecture, events: Sequence[Event]) -> bool:
    """Sanity check: a bare constructor of arrow type is derivable only by
    its initial holders, no matter the trace."""
    for agent in arch.agents:
        for decl in arch.type_system.constructors:
            if is_atomic(decl.signature):
                continue
            held = decl.name in arch.holdings_of(agent)
            derived = derives(arch, events, agent, Con(decl.name), decl.signature)
            if held != derived:
                return False
    return True
