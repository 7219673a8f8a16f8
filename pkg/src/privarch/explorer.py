"""Bounded exhaustive search over type-level knowledge states.

States abstract a trace prefix to the map from agents to possessed atomic
types (message multiplicity and term identity are abstracted away; possession
is monotone and constraints are type-level, so the abstraction is exact for
them). Breadth-first search with deduplication on the possessed map finds
minimal counterexamples to negative constraints. Witnesses for positive goals
are built by a saturation pass (everything every agent could ever possess,
with the wave at which it first appears) followed by demand-driven extraction
of just the sends the goal needs; the result is validated end to end against
the concrete trace semantics.

Local-send gates are tracked per state as discharged-obligation bits; term
identity is approximated by type identity during search and checked on the
reconstructed concrete trace, which drops the candidate if a gate fails.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

from .architecture import (
    Architecture,
    AgentId,
    ArchitectureError,
    InvalidArchitecture,
    validate_architecture,
)
from .constraints import (
    Constraint,
    LocalSend,
    NegCreate,
    NegPossess,
    Positive,
    check_local,
    check_neg_create,
    check_neg_possess,
    check_positive,
)
from .semantics import Event, Trace, _close_agent, check_trace_valid, possession_closure
from .terms import AtomicType, TermExpr, signature_parts, type_sort_key

DEFAULT_DEPTH = 12
DEFAULT_BUDGET = 1_000_000
BUDGET_ENV = "PRIVARCH_BUDGET"

MAX_GATES = 60


class ExplorerError(Exception):
    pass


class ReconstructionFailure(ExplorerError):
    """The concrete trace rebuilt from an abstract path failed validation;
    this indicates a bug in the abstraction and must never occur."""


AbstractEvent = tuple[AgentId, AtomicType, AgentId]


@dataclass(frozen=True)
class SearchOutcome:
    counterexamples: tuple[tuple[Constraint, Trace], ...]
    witnesses: tuple[tuple[Positive, Trace], ...]
    missing_witnesses: tuple[Positive, ...]
    exhausted: bool
    states_visited: int
    depth: int
    budget: int

    @property
    def safe(self) -> bool:
        return not self.counterexamples


def default_budget() -> int:
    raw = os.environ.get(BUDGET_ENV)
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(raw)
    except ValueError as exc:
        raise ExplorerError(f"{BUDGET_ENV} must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ExplorerError(f"{BUDGET_ENV} must be positive")
    return value


class _Encoding:
    """Bit-packed view of an architecture: agents in canonical order
    (originals before interfaces), atomic types as bit positions, the whole
    knowledge state one integer with gate-discharge bits above the fields."""

    def __init__(self, arch: Architecture, gates: Sequence[LocalSend]):
        self.arch = arch
        self.agents: list[AgentId] = arch.sorted_agents()
        self.agent_idx = {a: i for i, a in enumerate(self.agents)}
        self.types: list[AtomicType] = sorted(
            arch.type_system.atomic_types, key=type_sort_key
        )
        self.type_idx = {t: i for i, t in enumerate(self.types)}
        self.width = len(self.types)
        self.type_mask = (1 << self.width) - 1
        self.gate_shift = len(self.agents) * self.width
        self.gates = list(gates)

        # Per agent: constructor rows (args mask, target bit, name), name order.
        self.ctors: list[list[tuple[int, int, str]]] = []
        for a in self.agents:
            entries = []
            for name in sorted(arch.holdings_of(a)):
                args, target = signature_parts(arch.type_system.constructor(name))
                mask = 0
                for t in args:
                    mask |= 1 << self.type_idx[t]
                entries.append((mask, 1 << self.type_idx[target], name))
            self.ctors.append(entries)

        # Gate bookkeeping keyed by (sender idx, type idx, receiver idx):
        # required - gates that must already be discharged for this send;
        # sets - gates this send discharges (it is their forward send).
        self.gate_required: dict[tuple[int, int, int], int] = {}
        self.gate_sets: dict[tuple[int, int, int], int] = {}
        for gi, g in enumerate(self.gates):
            s = self.agent_idx[g.gate_sender]
            t = self.type_idx[g.gate_type]
            r = self.agent_idx[g.gate_receiver]
            mp = self.agent_idx[g.must_prev_receiver]
            key = (s, t, r)
            self.gate_required[key] = self.gate_required.get(key, 0) | (1 << gi)
            fkey = (s, t, mp)
            self.gate_sets[fkey] = self.gate_sets.get(fkey, 0) | (1 << gi)

        # Channel rows carry masks of the types whose sends are gated or
        # discharge a gate, so the hot loop can skip the dict lookups.
        self.channels: list[tuple[int, int, int, int, int]] = []
        for (s, r), types in sorted(
            arch.channels.items(), key=lambda kv: (kv[0][0].sort_key, kv[0][1].sort_key)
        ):
            si, ri = self.agent_idx[s], self.agent_idx[r]
            mask = req_mask = sets_mask = 0
            for t in types:
                bit = 1 << self.type_idx[t]
                mask |= bit
                ti = self.type_idx[t]
                if (si, ti, ri) in self.gate_required:
                    req_mask |= bit
                if (si, ti, ri) in self.gate_sets:
                    sets_mask |= bit
            self.channels.append((si, ri, mask, req_mask, sets_mask))

        self._closure_memo: list[dict[int, int]] = [{} for _ in self.agents]

    def closure(self, agent: int, mask: int) -> int:
        memo = self._closure_memo[agent]
        out = memo.get(mask)
        if out is not None:
            return out
        closed = mask
        entries = self.ctors[agent]
        changed = True
        while changed:
            changed = False
            for args_mask, target_bit, _ in entries:
                if closed & target_bit:
                    continue
                if (closed & args_mask) == args_mask:
                    closed |= target_bit
                    changed = True
        memo[mask] = closed
        return closed

    def initial_fields(self) -> list[int]:
        return [self.closure(i, 0) for i in range(len(self.agents))]

    def pack(self, fields: Sequence[int], gate_bits: int = 0) -> int:
        state = gate_bits << self.gate_shift
        for i, f in enumerate(fields):
            state |= f << (i * self.width)
        return state

    def field(self, state: int, agent: int) -> int:
        return (state >> (agent * self.width)) & self.type_mask

    def event_code(self, s: int, t: int, r: int) -> int:
        return (s * self.width + t) * len(self.agents) + r

    def decode_event(self, code: int) -> AbstractEvent:
        n = len(self.agents)
        r = code % n
        code //= n
        t = code % self.width
        s = code // self.width
        return (self.agents[s], self.types[t], self.agents[r])


def reconstruct_trace(
    arch: Architecture, abstract_events: Sequence[AbstractEvent]
) -> Trace:
    """Turn an abstract send sequence into a concrete trace using canonical
    witness terms (the knowledge-closure rule: witnesses are assigned once,
    smallest first, never replaced)."""
    owned: dict[AgentId, dict[AtomicType, TermExpr]] = {}
    for agent in arch.sorted_agents():
        mine: dict[AtomicType, TermExpr] = {}
        _close_agent(arch, agent, mine)
        owned[agent] = mine
    events: list[Event] = []
    for sender, msg_type, receiver in abstract_events:
        term = owned[sender].get(msg_type)
        if term is None:
            raise ReconstructionFailure(
                f"sender {sender.name} holds no witness for the scheduled send"
            )
        events.append(Event(sender, term, msg_type, receiver))
        mine = owned[receiver]
        if msg_type not in mine:
            mine[msg_type] = term
            _close_agent(arch, receiver, mine)
    return tuple(events)


# --- saturation + demand-driven witness extraction --------------------------


@dataclass(frozen=True)
class _Saturation:
    """Everything any agent could ever possess: the wave at which each
    (agent idx, type idx) atom first appears, how it first arose, and the
    earliest wave each gate's forward send can happen."""

    atom_round: dict[tuple[int, int], int]
    derivation: dict[tuple[int, int], tuple]
    forward_round: dict[tuple[int, int, int], int]


def _saturate(enc: _Encoding) -> _Saturation:
    atom_round: dict[tuple[int, int], int] = {}
    derivation: dict[tuple[int, int], tuple] = {}
    forward_round: dict[tuple[int, int, int], int] = {}

    def close(agent: int, wave: int) -> None:
        changed = True
        while changed:
            changed = False
            for args_mask, target_bit, name in enc.ctors[agent]:
                t = target_bit.bit_length() - 1
                if (agent, t) in atom_round:
                    continue
                arg_idxs = []
                ok = True
                need = args_mask
                idx = 0
                while need:
                    if need & 1:
                        if (agent, idx) not in atom_round:
                            ok = False
                            break
                        arg_idxs.append(idx)
                    need >>= 1
                    idx += 1
                if ok:
                    atom_round[(agent, t)] = wave
                    derivation[(agent, t)] = ("ctor", name, tuple(arg_idxs))
                    changed = True

    for i in range(len(enc.agents)):
        close(i, 0)

    wave = 0
    while True:
        wave += 1
        progressed = False
        # Channels are visited in canonical order, so derivation tie-breaks
        # are deterministic and prefer original-agent senders.
        for s, r, mask, _, _ in enc.channels:
            m = mask
            while m:
                bit = m & -m
                m ^= bit
                t = bit.bit_length() - 1
                sr = atom_round.get((s, t))
                if sr is None or sr >= wave:
                    continue  # sender must possess strictly before this wave
                req = enc.gate_required.get((s, t, r), 0)
                if req:
                    blocked = False
                    rr, gi = req, 0
                    while rr:
                        if rr & 1:
                            g = enc.gates[gi]
                            mp = enc.agent_idx[g.must_prev_receiver]
                            fr = forward_round.get((s, t, mp))
                            if fr is None or fr >= wave:
                                blocked = True
                                break
                        rr >>= 1
                        gi += 1
                    if blocked:
                        continue
                if (s, t, r) in enc.gate_sets and (s, t, r) not in forward_round:
                    forward_round[(s, t, r)] = wave
                    progressed = True
                if (r, t) not in atom_round:
                    atom_round[(r, t)] = wave
                    derivation[(r, t)] = ("recv", s, wave)
                    close(r, wave)
                    progressed = True
        if not progressed:
            break
    return _Saturation(atom_round, derivation, forward_round)


def _demand_witness(
    enc: _Encoding, sat: _Saturation, goal_agent: int, goal_type: int
) -> list[AbstractEvent] | None:
    """Extract the send set the goal atom depends on and order it causally.
    Returns None when saturation never produced the goal, i.e. no witness
    exists at any depth."""
    if (goal_agent, goal_type) not in sat.atom_round:
        return None
    events: dict[tuple[int, int, int], int] = {}
    seen_atoms: set[tuple[int, int]] = set()
    seen_events: set[tuple[int, int, int]] = set()

    def demand_event(s: int, t: int, r: int, wave: int) -> None:
        key = (s, t, r)
        if key in seen_events:
            return
        seen_events.add(key)
        events[key] = wave
        demand_atom(s, t)
        req = enc.gate_required.get(key, 0)
        gi = 0
        while req:
            if req & 1:
                g = enc.gates[gi]
                mp = enc.agent_idx[g.must_prev_receiver]
                demand_event(s, t, mp, sat.forward_round[(s, t, mp)])
            req >>= 1
            gi += 1

    def demand_atom(agent: int, t: int) -> None:
        if (agent, t) in seen_atoms:
            return
        seen_atoms.add((agent, t))
        deriv = sat.derivation[(agent, t)]
        if deriv[0] == "ctor":
            for arg in deriv[2]:
                demand_atom(agent, arg)
        else:
            _, sender, wave = deriv
            demand_event(sender, t, agent, wave)

    demand_atom(goal_agent, goal_type)
    ordered = sorted(
        events.items(),
        key=lambda kv: (
            kv[1],
            enc.agents[kv[0][0]].sort_key,
            enc.agents[kv[0][2]].sort_key,
            kv[0][1],
        ),
    )
    return [
        (enc.agents[s], enc.types[t], enc.agents[r]) for (s, t, r), _ in ordered
    ]


# --- main entry --------------------------------------------------------------


def explore(
    arch: Architecture,
    constraints: Sequence[Constraint],
    depth: int = DEFAULT_DEPTH,
    budget: int | None = None,
    local_constraints: Sequence[LocalSend] = (),
) -> SearchOutcome:
    """Search every knowledge state reachable in at most `depth` sends.

    Negative constraints are checked at each reachable state; the first
    (shortest) counterexample per constraint is reconstructed as a concrete
    trace and validated before being reported. Positive constraints get a
    demand-built witness trace when one exists within the depth bound and are
    otherwise reported as missing (inconclusive, not a violation). Local-send
    constraints gate the search rather than being search targets. `exhausted`
    is True only when the frontier emptied within the state budget, i.e.
    every reachable knowledge state was seen.
    """
    report = validate_architecture(arch)
    if not report.passed:
        raise InvalidArchitecture(
            "cannot explore an invalid architecture: " + "; ".join(report.lines())
        )
    if depth < 0:
        raise ExplorerError("depth must be non-negative")
    if budget is None:
        budget = default_budget()
    if budget < 1:
        raise ExplorerError("budget must be positive")

    gates: list[LocalSend] = list(local_constraints)
    negatives: list[NegCreate | NegPossess] = []
    positives: list[Positive] = []
    for c in constraints:
        if isinstance(c, (NegCreate, NegPossess)):
            negatives.append(c)
        elif isinstance(c, Positive):
            positives.append(c)
        elif isinstance(c, LocalSend):
            gates.append(c)
        else:
            raise ExplorerError(f"unsupported constraint: {c!r}")
    gates = list(dict.fromkeys(gates))
    if len(gates) > MAX_GATES:
        raise ExplorerError("too many local-send constraints to track")
    def agent_of(a: AgentId) -> AgentId:
        try:
            return arch.agent_named(a.name)
        except ArchitectureError as exc:
            raise ExplorerError(
                f"constraint references an undeclared agent {a.name}"
            ) from exc

    for g in gates:
        if g.gate_receiver == g.must_prev_receiver:
            raise ExplorerError(
                "degenerate local-send constraint: gate receiver equals the "
                "required previous receiver"
            )
        for a in (g.gate_sender, g.gate_receiver, g.must_prev_receiver):
            agent_of(a)

    enc = _Encoding(arch, gates)
    n_agents = len(enc.agents)
    width = enc.width
    type_mask = enc.type_mask
    gate_shift = enc.gate_shift

    def type_bit(t: AtomicType) -> int:
        idx = enc.type_idx.get(t)
        if idx is None:
            raise ExplorerError(
                f"constraint references an undeclared type {t!r}"
            )
        return 1 << idx

    neg_enc: list[tuple[int, int, int | None, int, NegCreate | NegPossess]] = []
    for c in negatives:
        subj = enc.agent_idx[agent_of(c.subject)]
        trig_bit = type_bit(c.trigger)
        req_bit = type_bit(c.required)
        holder = (
            enc.agent_idx[agent_of(c.holder)]
            if isinstance(c, NegPossess)
            else None
        )
        neg_enc.append((subj, trig_bit, holder, req_bit, c))
    for g in gates:
        type_bit(g.gate_type)

    found: dict[int, tuple[Constraint, Trace]] = {}

    def violated_at(state: int, ci: int) -> bool:
        subj, trig_bit, holder, req_bit, _ = neg_enc[ci]
        if not (state >> (subj * width)) & trig_bit:
            return False
        if holder is not None:
            return not (state >> (holder * width)) & req_bit
        union = 0
        for i in range(n_agents):
            union |= (state >> (i * width)) & type_mask
        return not union & req_bit

    def path_to(state: int) -> list[AbstractEvent]:
        codes: list[int] = []
        cur = state
        while True:
            parent, code = visited[cur]
            if parent is None:
                break
            codes.append(code)
            cur = parent
        return [enc.decode_event(c) for c in reversed(codes)]

    def try_record(state: int, ci: int) -> None:
        """Validate the abstract counterexample concretely. A local-send gate
        can reject the reconstructed terms (the bit-level gate discharge is
        term-blind); such candidates are dropped and the search goes on. Any
        other mismatch is a bug and raises."""
        trace = reconstruct_trace(arch, path_to(state))
        check = check_trace_valid(arch, trace)
        if not check.valid:
            raise ReconstructionFailure(
                f"reconstructed trace invalid at index {check.index}: {check.reason}"
            )
        if not all(check_local(trace, g).compliant for g in gates):
            return
        states = possession_closure(arch, trace)
        c = neg_enc[ci][4]
        verdict = (
            check_neg_create(states, c)
            if isinstance(c, NegCreate)
            else check_neg_possess(states, c)
        )
        if verdict.compliant:
            raise ReconstructionFailure("abstract violation vanished on the concrete trace")
        found[ci] = (c, trace)

    root = enc.pack(enc.initial_fields())
    visited: dict[int, tuple[int | None, int]] = {root: (None, -1)}
    states_visited = 1
    budget_cut = False

    for ci in range(len(neg_enc)):
        if violated_at(root, ci):
            try_record(root, ci)

    pending = [ci for ci in range(len(neg_enc)) if ci not in found]
    frontier = [root]
    channels = enc.channels
    closure_memos = enc._closure_memo
    closure = enc.closure
    gate_required = enc.gate_required
    gate_sets = enc.gate_sets
    layers_done = 0

    # Hot-loop view of still-pending negatives: precomputed shifts so the
    # per-successor check is a couple of integer operations.
    def hot(cis: list[int]) -> list[tuple[int, int, int, int, int]]:
        rows = []
        for ci in cis:
            subj, trig_bit, holder, req_bit, _ = neg_enc[ci]
            rows.append(
                (subj * width, trig_bit, -1 if holder is None else holder * width,
                 req_bit, ci)
            )
        return rows

    neg_hot = hot(pending)

    while frontier and pending and layers_done < depth and not budget_cut:
        nxt: list[int] = []
        for state in frontier:
            fields = [(state >> (i * width)) & type_mask for i in range(n_agents)]
            gate_bits = state >> gate_shift
            for s, r, chan_mask, req_mask, sets_mask in channels:
                sendable = fields[s] & chan_mask
                if not sendable:
                    continue
                fr = fields[r]
                m = sendable & ~fr
                r_shift = r * width
                memo_r = closure_memos[r]
                while m:  # sends that grow the receiver's knowledge
                    bit = m & -m
                    m ^= bit
                    if bit & req_mask:
                        req = gate_required[(s, bit.bit_length() - 1, r)]
                        if (gate_bits & req) != req:
                            continue
                    key = fr | bit
                    closed = memo_r.get(key)
                    if closed is None:
                        closed = closure(r, key)
                    succ = state ^ ((fr ^ closed) << r_shift)
                    if bit & sets_mask:
                        succ |= gate_sets[(s, bit.bit_length() - 1, r)] << gate_shift
                    if succ in visited:
                        continue
                    if states_visited >= budget:
                        budget_cut = True
                        break
                    visited[succ] = (
                        state,
                        (s * width + bit.bit_length() - 1) * n_agents + r,
                    )
                    states_visited += 1
                    nxt.append(succ)
                    for subj_sh, trig_bit, holder_sh, req_bit, ci in neg_hot:
                        if (succ >> subj_sh) & trig_bit:
                            if holder_sh >= 0:
                                if (succ >> holder_sh) & req_bit:
                                    continue
                            else:
                                union = 0
                                for i in range(n_agents):
                                    union |= (succ >> (i * width)) & type_mask
                                if union & req_bit:
                                    continue
                            try_record(succ, ci)
                            if ci in found:
                                pending.remove(ci)
                                neg_hot = hot(pending)
                if budget_cut or not pending:
                    break
                m = sendable & fr & sets_mask
                while m:  # forward sends that only discharge gates
                    bit = m & -m
                    m ^= bit
                    t = bit.bit_length() - 1
                    sets = gate_sets[(s, t, r)]
                    if (gate_bits & sets) == sets:
                        continue
                    if bit & req_mask:
                        req = gate_required[(s, t, r)]
                        if (gate_bits & req) != req:
                            continue
                    succ = state | (sets << gate_shift)
                    if succ in visited:
                        continue
                    if states_visited >= budget:
                        budget_cut = True
                        break
                    visited[succ] = (state, (s * width + t) * n_agents + r)
                    states_visited += 1
                    nxt.append(succ)
                if budget_cut:
                    break
            if budget_cut or not pending:
                break
        frontier = nxt
        layers_done += 1

    exhausted = bool(negatives) and not frontier and not budget_cut

    witnesses: list[tuple[Positive, Trace]] = []
    missing: list[Positive] = []
    if positives:
        sat = _saturate(enc)
        for goal in positives:
            agent = enc.agent_idx[agent_of(goal.subject)]
            t = enc.type_idx[goal.goal]
            abstract = _demand_witness(enc, sat, agent, t)
            if abstract is None or len(abstract) > depth:
                missing.append(goal)
                continue
            trace = reconstruct_trace(arch, abstract)
            check = check_trace_valid(arch, trace)
            if not check.valid:
                raise ReconstructionFailure(
                    f"witness trace invalid at index {check.index}: {check.reason}"
                )
            states = possession_closure(arch, trace)
            if not all(check_local(trace, g).compliant for g in gates):
                raise ReconstructionFailure("witness trace breaks a local-send gate")
            if not check_positive(states, goal):
                raise ReconstructionFailure("witness trace does not establish its goal")
            witnesses.append((goal, trace))

    return SearchOutcome(
        counterexamples=tuple(found[ci] for ci in sorted(found)),
        witnesses=tuple(witnesses),
        missing_witnesses=tuple(missing),
        exhausted=exhausted,
        states_visited=states_visited,
        depth=depth,
        budget=budget,
    )
