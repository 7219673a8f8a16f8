"""Constructor/application term calculus with atomic and arrow types.

Atomic types are base names plus two wrapper forms used by the safe
extensions: Certified(reader, inner) for terms only `reader` may unwrap,
and Proof(holder, inner) recording that `holder` once possessed a term
of the inner type. Wrappers reference agents and base types by name so
this module stays independent of the architecture layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping


class CalculusError(Exception):
    pass


class UnknownConstructor(CalculusError):
    pass


class TypeMismatch(CalculusError):
    pass


class MalformedSignature(CalculusError):
    pass


@dataclass(frozen=True)
class Base:
    name: str


@dataclass(frozen=True)
class Certified:
    reader: str
    inner: str


@dataclass(frozen=True)
class Proof:
    holder: str
    inner: str


@dataclass(frozen=True)
class Arrow:
    domain: "TypeExpr"
    codomain: "TypeExpr"


AtomicType = Base | Certified | Proof
TypeExpr = Base | Certified | Proof | Arrow


def is_atomic(t: TypeExpr) -> bool:
    return not isinstance(t, Arrow)


def type_name(t: TypeExpr) -> str:
    """Printable form; arrows are right-associated and never parenthesized
    on the left because signatures never nest arrows in argument position."""
    match t:
        case Base(name):
            return name
        case Certified(reader, inner):
            return f"C[{reader}]({inner})"
        case Proof(holder, inner):
            return f"P[{holder}]({inner})"
        case Arrow(domain, codomain):
            return f"{type_name(domain)} -> {type_name(codomain)}"
    raise TypeError(f"not a type expression: {t!r}")


# Sort rank used everywhere a deterministic type order is needed.
def type_sort_key(t: AtomicType) -> tuple:
    match t:
        case Base(name):
            return (0, name, "")
        case Certified(reader, inner):
            return (1, reader, inner)
        case Proof(holder, inner):
            return (2, holder, inner)
    raise TypeError(f"not an atomic type: {t!r}")


@dataclass(frozen=True)
class Con:
    name: str


@dataclass(frozen=True)
class App:
    fun: "TermExpr"
    arg: "TermExpr"


TermExpr = Con | App


def term_to_str(t: TermExpr) -> str:
    head, args = uncurry(t)
    if not args:
        return head
    return f"{head}({', '.join(term_to_str(a) for a in args)})"


def term_size(t: TermExpr) -> int:
    match t:
        case Con(_):
            return 1
        case App(fun, arg):
            return term_size(fun) + term_size(arg)
    raise TypeError(f"not a term: {t!r}")


def uncurry(t: TermExpr) -> tuple[str, tuple[TermExpr, ...]]:
    """Split a term into its head constructor name and argument list."""
    args: list[TermExpr] = []
    while isinstance(t, App):
        args.append(t.arg)
        t = t.fun
    if not isinstance(t, Con):
        raise TypeError(f"term head is not a constructor: {t!r}")
    return t.name, tuple(reversed(args))


def apply(head: str, args: Iterable[TermExpr]) -> TermExpr:
    t: TermExpr = Con(head)
    for a in args:
        t = App(t, a)
    return t


def subterms(t: TermExpr) -> Iterator[TermExpr]:
    yield t
    if isinstance(t, App):
        yield from subterms(t.fun)
        yield from subterms(t.arg)


@dataclass(frozen=True)
class ConstructorDecl:
    name: str
    signature: TypeExpr


def make_signature(args: Iterable[AtomicType], target: AtomicType) -> TypeExpr:
    sig: TypeExpr = target
    for a in reversed(tuple(args)):
        sig = Arrow(a, sig)
    return sig


def signature_parts(decl: ConstructorDecl) -> tuple[tuple[AtomicType, ...], AtomicType]:
    """Decompose A1 -> ... -> An -> T into ((A1, ..., An), T).

    Every argument and the target must be atomic; anything else is a
    malformed signature (arrows only associate to the right here).
    """
    args: list[AtomicType] = []
    sig = decl.signature
    while isinstance(sig, Arrow):
        if not is_atomic(sig.domain):
            raise MalformedSignature(
                f"constructor {decl.name}: argument type is not atomic: {type_name(sig.domain)}"
            )
        args.append(sig.domain)
        sig = sig.codomain
    if not is_atomic(sig):
        raise MalformedSignature(f"constructor {decl.name}: target is not atomic")
    return tuple(args), sig


@dataclass(frozen=True)
class TypeSystem:
    """Atomic types plus named constructors; names are constructor identity."""

    atomic_types: frozenset[AtomicType]
    constructors: tuple[ConstructorDecl, ...]
    _by_name: Mapping[str, ConstructorDecl] = field(
        init=False, repr=False, compare=False, hash=False, default=None  # type: ignore[assignment]
    )

    def __post_init__(self) -> None:
        by_name: dict[str, ConstructorDecl] = {}
        for decl in self.constructors:
            if decl.name in by_name:
                raise MalformedSignature(f"duplicate constructor name: {decl.name}")
            args, target = signature_parts(decl)
            for part in (*args, target):
                if part not in self.atomic_types:
                    raise MalformedSignature(
                        f"constructor {decl.name} mentions undeclared type {type_name(part)}"
                    )
            by_name[decl.name] = decl
        object.__setattr__(self, "_by_name", by_name)

    @staticmethod
    def build(types: Iterable[AtomicType], constructors: Iterable[ConstructorDecl]) -> "TypeSystem":
        decls = tuple(sorted(constructors, key=lambda d: d.name))
        return TypeSystem(frozenset(types), decls)

    def constructor(self, name: str) -> ConstructorDecl:
        decl = self._by_name.get(name)
        if decl is None:
            raise UnknownConstructor(name)
        return decl

    def has_constructor(self, name: str) -> bool:
        return name in self._by_name


def infer_type(ts: TypeSystem, term: TermExpr) -> TypeExpr:
    """Syntax-directed inference: constructors read their declared signature,
    an application requires an arrow whose domain equals the argument type."""
    match term:
        case Con(name):
            return ts.constructor(name).signature
        case App(fun, arg):
            fun_ty = infer_type(ts, fun)
            if not isinstance(fun_ty, Arrow):
                raise TypeMismatch(
                    f"applied non-function {term_to_str(fun)} : {type_name(fun_ty)}"
                )
            arg_ty = infer_type(ts, arg)
            if arg_ty != fun_ty.domain:
                raise TypeMismatch(
                    f"argument {term_to_str(arg)} : {type_name(arg_ty)} "
                    f"does not match domain {type_name(fun_ty.domain)}"
                )
            return fun_ty.codomain
    raise TypeError(f"not a term: {term!r}")
