"""A small equational language: terms, identities, and two syntactic tests.

The text format is line oriented:

    ops: f/2, g/1        # declarations, required first
    idempotent: f        # optional
    f(x,y) = f(y,x)      # one identity per line, '#' starts a comment

Undeclared identifiers are variables.  The two analyses differ in scope:
the coordinate-labeling search treats arbitrary terms, while saturation
and the subset-condition check live in the fragment of linear identities
with at most two variables.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int) -> None:
        super().__init__(f"line {line}, col {col}: {message}")
        self.line = line
        self.col = col


class SystemError_(ValueError):
    """An identity system violates a structural precondition."""


@dataclass(frozen=True)
class Variable:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Application:
    symbol: str
    args: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "args", tuple(self.args))

    def __str__(self) -> str:
        return f"{self.symbol}({','.join(str(a) for a in self.args)})"


Term = Variable | Application


@dataclass(frozen=True)
class Identity:
    lhs: Term
    rhs: Term

    def __str__(self) -> str:
        return f"{self.lhs} = {self.rhs}"


@dataclass(frozen=True)
class TermSystem:
    declarations: Mapping[str, int]
    identities: tuple[Identity, ...]
    idempotent: frozenset[str] = frozenset()

    def __post_init__(self) -> None:
        object.__setattr__(self, "declarations", dict(self.declarations))
        object.__setattr__(self, "identities", tuple(self.identities))
        object.__setattr__(self, "idempotent", frozenset(self.idempotent))


_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")


class _LineParser:
    def __init__(self, text: str, lineno: int, declarations: Mapping[str, int]) -> None:
        self.text = text
        self.lineno = lineno
        self.pos = 0
        self.declarations = declarations

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.lineno, self.pos + 1)

    def skip_ws(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            raise self.error(f"expected '{ch}'")
        self.pos += 1

    def ident(self) -> str:
        self.skip_ws()
        m = _IDENT.match(self.text, self.pos)
        if not m:
            raise self.error("expected an identifier")
        self.pos = m.end()
        return m.group()

    def term(self) -> Term:
        start_col = self.pos + 1
        name = self.ident()
        if self.peek() == "(":
            if name not in self.declarations:
                raise ParseError(f"undeclared symbol '{name}'", self.lineno, start_col)
            self.pos += 1
            args = [self.term()]
            while self.peek() == ",":
                self.pos += 1
                args.append(self.term())
            self.expect(")")
            want = self.declarations[name]
            if len(args) != want:
                raise ParseError(
                    f"symbol '{name}' declared with arity {want}, applied to {len(args)} arguments",
                    self.lineno,
                    start_col,
                )
            return Application(name, tuple(args))
        if name in self.declarations:
            raise ParseError(
                f"declared symbol '{name}' used without arguments", self.lineno, start_col
            )
        return Variable(name)

    def identity(self) -> Identity:
        lhs = self.term()
        self.expect("=")
        rhs = self.term()
        self.skip_ws()
        if self.pos < len(self.text):
            raise self.error("trailing input after identity")
        return Identity(lhs, rhs)


def parse(text: str) -> TermSystem:
    declarations: dict[str, int] = {}
    idempotent: set[str] = set()
    identities: list[Identity] = []
    seen_ops = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("ops:"):
            if seen_ops:
                raise ParseError("duplicate 'ops:' header", lineno, 1)
            seen_ops = True
            body = line[len("ops:"):].strip()
            if body:
                for part in body.split(","):
                    part = part.strip()
                    if "/" not in part:
                        raise ParseError(f"expected name/arity, got '{part}'", lineno, 1)
                    name, _, arity_s = part.partition("/")
                    name = name.strip()
                    if not _IDENT.fullmatch(name):
                        raise ParseError(f"bad symbol name '{name}'", lineno, 1)
                    try:
                        arity = int(arity_s.strip())
                    except ValueError:
                        raise ParseError(f"bad arity '{arity_s.strip()}'", lineno, 1) from None
                    if arity < 1:
                        raise ParseError(f"arity must be >= 1 for '{name}'", lineno, 1)
                    if name in declarations:
                        raise ParseError(f"symbol '{name}' declared twice", lineno, 1)
                    declarations[name] = arity
            continue
        if not seen_ops:
            raise ParseError("first line must be an 'ops:' header", lineno, 1)
        if line.startswith("idempotent:"):
            for part in line[len("idempotent:"):].split(","):
                name = part.strip()
                if not name:
                    continue
                if name not in declarations:
                    raise ParseError(f"idempotent symbol '{name}' is not declared", lineno, 1)
                idempotent.add(name)
            continue
        identities.append(_LineParser(line, lineno, declarations).identity())
    if not seen_ops:
        raise ParseError("missing 'ops:' header", 1, 1)
    return TermSystem(declarations, tuple(identities), frozenset(idempotent))


def format_system(sys: TermSystem) -> str:
    lines = ["ops: " + ", ".join(f"{n}/{a}" for n, a in sorted(sys.declarations.items()))]
    if sys.idempotent:
        lines.append("idempotent: " + ", ".join(sorted(sys.idempotent)))
    lines.extend(str(i) for i in sys.identities)
    return "\n".join(lines) + "\n"


def term_variables(t: Term) -> frozenset[str]:
    if isinstance(t, Variable):
        return frozenset({t.name})
    out: frozenset[str] = frozenset()
    for a in t.args:
        out |= term_variables(a)
    return out


def is_linear(i: Identity) -> bool:
    """At most one function symbol on each side."""

    def side_ok(t: Term) -> bool:
        if isinstance(t, Variable):
            return True
        return all(isinstance(a, Variable) for a in t.args)

    return side_ok(i.lhs) and side_ok(i.rhs)


def linear_fragment(sys: TermSystem) -> TermSystem:
    """The sub-system keeping only linear identities in at most 2 variables."""
    kept = tuple(
        i
        for i in sys.identities
        if is_linear(i) and len(term_variables(i.lhs) | term_variables(i.rhs)) <= 2
    )
    return TermSystem(sys.declarations, kept, sys.idempotent)


# --- saturation of linear two-variable identities ---------------------------

_X = Variable("x")
_Y = Variable("y")


def _rename(t: Term, table: Mapping[str, str]) -> Term:
    if isinstance(t, Variable):
        return Variable(table.get(t.name, t.name))
    return Application(t.symbol, tuple(_rename(a, table) for a in t.args))


def _normalize(i: Identity) -> Identity:
    """Rename variables to x, y by first occurrence (left to right, lhs first)."""
    order: list[str] = []
    for side in (i.lhs, i.rhs):
        stack = [side]
        while stack:
            t = stack.pop(0)
            if isinstance(t, Variable):
                if t.name not in order:
                    order.append(t.name)
            else:
                stack = list(t.args) + stack
    table = {name: canon for name, canon in zip(order, ("x", "y"))}
    return Identity(_rename(i.lhs, table), _rename(i.rhs, table))


def saturate(sys: TermSystem) -> TermSystem:
    """Close a linear 2-variable identity set under sound derivations.

    Rules: swap the two variables; symmetry; transitivity; identify the
    variables; and pairing (s1 = v and s2 = v give s1 = s2 for a variable
    v).  Declared-idempotent symbols seed f(x,...,x) = x.  The identity
    universe is finite, so the closure terminates.
    """
    for i in sys.identities:
        if not is_linear(i):
            raise SystemError_(f"non-linear identity: {i}")
        if len(term_variables(i.lhs) | term_variables(i.rhs)) > 2:
            raise SystemError_(f"identity in more than 2 variables: {i}")

    current: set[Identity] = set()

    def add(i: Identity) -> None:
        current.add(i)

    for i in sys.identities:
        add(_normalize(i))
    for name in sorted(sys.idempotent):
        arity = sys.declarations[name]
        add(Identity(Application(name, (_X,) * arity), _X))

    swap = {"x": "y", "y": "x"}
    collapse = {"y": "x"}
    changed = True
    while changed:
        changed = False
        snapshot = sorted(current, key=str)
        derived: set[Identity] = set()
        for i in snapshot:
            derived.add(Identity(_rename(i.lhs, swap), _rename(i.rhs, swap)))
            derived.add(Identity(i.rhs, i.lhs))
            derived.add(_normalize(Identity(_rename(i.lhs, collapse), _rename(i.rhs, collapse))))
        by_lhs: dict[Term, list[Term]] = {}
        for i in snapshot:
            by_lhs.setdefault(i.lhs, []).append(i.rhs)
        for i in snapshot:
            for r in by_lhs.get(i.rhs, ()):  # transitivity
                derived.add(Identity(i.lhs, r))
        by_var_rhs: dict[str, list[Term]] = {}
        for i in snapshot:
            if isinstance(i.rhs, Variable):
                by_var_rhs.setdefault(i.rhs.name, []).append(i.lhs)
        for sides in by_var_rhs.values():  # pairing through a common variable
            for s1, s2 in itertools.product(sides, sides):
                derived.add(Identity(s1, s2))
        before = len(current)
        current |= derived
        if len(current) != before:
            changed = True

    ordered = tuple(sorted(current, key=str))
    return TermSystem(sys.declarations, ordered, sys.idempotent)


# --- the subset-condition test ----------------------------------------------


def nonempty_subsets(n: int) -> list[tuple[int, ...]]:
    """Non-empty subsets of {1..n} as sorted tuples, in lexicographic order."""
    subsets = []
    for r in range(1, n + 1):
        subsets.extend(itertools.combinations(range(1, n + 1), r))
    return sorted(subsets)


@dataclass(frozen=True)
class HmTermReport:
    symbol: str
    passed: bool
    witnesses: tuple[tuple[tuple[int, ...], Identity], ...]
    missing: tuple[int, ...] | None


def _witness_for(identity: Identity, symbol: str, subset: tuple[int, ...]) -> bool:
    """Does the identity witness the subset condition for this coordinate set?

    Both sides must be applications of the symbol to variables, two distinct
    variables overall; with x at every subset position on the left and y at
    some subset position on the right (either naming of the two variables).
    """
    lhs, rhs = identity.lhs, identity.rhs
    if not (isinstance(lhs, Application) and lhs.symbol == symbol):
        return False
    if not (isinstance(rhs, Application) and rhs.symbol == symbol):
        return False
    if not all(isinstance(a, Variable) for a in lhs.args + rhs.args):
        return False
    vars_ = term_variables(lhs) | term_variables(rhs)
    if len(vars_) != 2:
        return False
    p, q = sorted(vars_)
    for x, y in ((p, q), (q, p)):
        if all(lhs.args[i - 1].name == x for i in subset) and any(
            rhs.args[i - 1].name == y for i in subset
        ):
            return True
    return False


def hm_term_check(sys: TermSystem, symbol: str) -> HmTermReport:
    """The per-subset two-variable identity condition for one symbol.

    Expects a saturated system.  For each non-empty coordinate subset I,
    scans for an identity t(u) = t(v) with x at every I-position on the
    left and y at some I-position on the right.
    """
    if symbol not in sys.declarations:
        raise SystemError_(f"symbol '{symbol}' is not declared")
    arity = sys.declarations[symbol]
    idem = Identity(Application(symbol, (_X,) * arity), _X)
    if symbol not in sys.idempotent and idem not in set(sys.identities):
        raise SystemError_(f"symbol '{symbol}' is not known to be idempotent")

    witnesses = []
    for subset in nonempty_subsets(arity):
        found = None
        for identity in sys.identities:
            if _witness_for(identity, symbol, subset):
                found = identity
                break
        if found is None:
            return HmTermReport(symbol, False, tuple(witnesses), subset)
        witnesses.append((subset, found))
    return HmTermReport(symbol, True, tuple(witnesses), None)


# --- coordinate labelings ----------------------------------------------------


@dataclass(frozen=True)
class SLLabeling:
    sigma: Mapping[str, tuple[int, ...]]  # symbol -> sorted 1-based coordinates

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "sigma", {k: tuple(sorted(v)) for k, v in dict(self.sigma).items()}
        )

    def describe(self) -> str:
        if not self.sigma:
            return "(empty labeling)"
        parts = [f"{sym}->{{{','.join(map(str, coords))}}}" for sym, coords in sorted(self.sigma.items())]
        return " ".join(parts)


def sigma_varset(t: Term, labeling: SLLabeling) -> frozenset[str]:
    """Variables reachable through labeled coordinates only."""
    if isinstance(t, Variable):
        return frozenset({t.name})
    out: frozenset[str] = frozenset()
    for i in labeling.sigma[t.symbol]:
        out |= sigma_varset(t.args[i - 1], labeling)
    return out


@dataclass(frozen=True)
class SLRefutation:
    labeling: SLLabeling
    identity: Identity
    lhs_varset: frozenset[str]
    rhs_varset: frozenset[str]


@dataclass(frozen=True)
class SLUnsat:
    refutations: tuple[SLRefutation, ...]


def all_labelings(declarations: Mapping[str, int]) -> list[SLLabeling]:
    symbols = sorted(declarations)
    choices = [nonempty_subsets(declarations[s]) for s in symbols]
    return [
        SLLabeling(dict(zip(symbols, combo)))
        for combo in itertools.product(*choices)
    ]


def check_labeling(sys: TermSystem, labeling: SLLabeling) -> SLRefutation | None:
    """The first identity violated under the labeling, or None if all hold."""
    for identity in sys.identities:
        l = sigma_varset(identity.lhs, labeling)
        r = sigma_varset(identity.rhs, labeling)
        if l != r:
            return SLRefutation(labeling, identity, l, r)
    return None


def sl_interp_search(sys: TermSystem) -> SLLabeling | SLUnsat:
    """First labeling (lexicographic) satisfying every identity, else UNSAT.

    A labeling assigns each symbol a non-empty coordinate subset; an
    identity holds when both sides reach the same variables through
    labeled coordinates.  This semantics is exact for semilattice
    interpretations, where a term is determined by its variable set.
    """
    refutations = []
    for labeling in all_labelings(sys.declarations):
        refutation = check_labeling(sys, labeling)
        if refutation is None:
            return labeling
        refutations.append(refutation)
    return SLUnsat(tuple(refutations))


def hm_pass_forces_unsat(sys: TermSystem, report: HmTermReport) -> bool:
    """Machine check that a subset-condition pass refutes every labeling.

    For each labeling of the checked symbol, the witness identity for
    I = sigma(symbol) must have different variable sets on its two sides.
    """
    if not report.passed:
        raise SystemError_("implication check requires a passing report")
    witness = dict(report.witnesses)
    arity = sys.declarations[report.symbol]
    for subset in nonempty_subsets(arity):
        labeling = SLLabeling({report.symbol: subset})
        identity = witness[subset]
        if sigma_varset(identity.lhs, labeling) == sigma_varset(identity.rhs, labeling):
            return False
    return True


# --- evaluation bridge -------------------------------------------------------


def evaluate(t: Term, env: Mapping[str, int], interp: Mapping[str, "object"]) -> int:
    if isinstance(t, Variable):
        return env[t.name]
    table = interp[t.symbol]
    return table.apply(*(evaluate(a, env, interp) for a in t.args))


def holds_in(algebra, identity: Identity, interp: Mapping[str, "object"]) -> bool:
    """True iff both sides agree under every assignment of algebra elements.

    `algebra` only needs a .size attribute; `interp` maps each symbol to an
    operation table of matching arity.
    """
    names = sorted(term_variables(identity.lhs) | term_variables(identity.rhs))
    for values in itertools.product(range(algebra.size), repeat=len(names)):
        env = dict(zip(names, values))
        if evaluate(identity.lhs, env, interp) != evaluate(identity.rhs, env, interp):
            return False
    return True
