"""Interaction templates, their semantics, and candidate inference.

An interaction is one of five shapes over membership constraints ``o ∈ S``:

* ``TRUE`` -- no constraint;
* :class:`Conj` -- every core constraint holds;
* :class:`Disj` -- at least one clause holds;
* :class:`ConjDisj` -- the core holds and at least one clause holds;
* :class:`DisjConj` -- some clause holds or the whole core holds.

Instances are built through :func:`make_conj`, :func:`make_disj`,
:func:`normalize_conjdisj` and :func:`make_disjconj`, which reduce every
formula to a canonical shape (a single-clause disjunction is a
conjunction, implied disjuncts collapse, and so on). Structural equality of
canonical instances is what the inference loop uses to detect a fix-point.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Collection, Iterable, Mapping, Sequence
from dataclasses import dataclass
from typing import Union

from .config_space import ConfigSpace, Configuration, SettingSet, pointwise_union
from .formula import And, Const, Formula, Member, Not, Or, _render_member, parse_formula

DEFAULT_IMPLICATION_CAP = 10**6

Atom = tuple[str, str, frozenset]


class InteractionError(ValueError):
    """Structural misuse: wrong space, missing option, violated precondition."""


class NotATemplate(ValueError):
    """A formula that none of the four templates can express."""


def _literal(option: str, values: frozenset[str], space: ConfigSpace, ascii: bool) -> str:
    return _render_member(option, values, space, ascii)


def _syms(ascii: bool) -> tuple[str, str]:
    return (" && ", " || ") if ascii else (" ∧ ", " ∨ ")


class _TrueInteraction:
    """The trivially satisfied interaction (a singleton, see :data:`TRUE`)."""

    __slots__ = ()
    space = None
    kind = "true"

    def satisfied_by(self, config: Mapping[str, str]) -> bool:
        return True

    @property
    def options(self) -> tuple[str, ...]:
        return ()

    @property
    def length(self) -> int:
        return 0

    @property
    def required(self) -> dict[str, frozenset[str]]:
        return {}

    def atoms(self) -> frozenset[Atom]:
        return frozenset()

    def render(self, ascii: bool = False) -> str:
        return "true"

    def __repr__(self) -> str:
        return "TRUE"

    def __reduce__(self) -> str:
        return "TRUE"


TRUE = _TrueInteraction()


class _Template:
    space: ConfigSpace

    @property
    def length(self) -> int:
        return len(self.options)

    def __str__(self) -> str:
        return self.render()


@dataclass(frozen=True)
class Conj(_Template):
    core: SettingSet
    kind = "conj"

    def satisfied_by(self, config: Mapping[str, str]) -> bool:
        return self.core.allows(config)

    @property
    def space(self) -> ConfigSpace:  # type: ignore[override]
        return self.core.space

    @property
    def options(self) -> tuple[str, ...]:
        return tuple(self.core)

    @property
    def required(self) -> Mapping[str, frozenset[str]]:
        return self.core

    def atoms(self) -> frozenset[Atom]:
        return frozenset(("core", o, vs) for o, vs in self.core.items())

    def render(self, ascii: bool = False) -> str:
        AND, _ = _syms(ascii)
        return AND.join(_literal(o, vs, self.space, ascii) for o, vs in self.core.items())


@dataclass(frozen=True)
class Disj(_Template):
    clauses: SettingSet
    kind = "disj"

    def satisfied_by(self, config: Mapping[str, str]) -> bool:
        return any(config[o] in vs for o, vs in self.clauses.items())

    @property
    def space(self) -> ConfigSpace:  # type: ignore[override]
        return self.clauses.space

    @property
    def options(self) -> tuple[str, ...]:
        return tuple(self.clauses)

    @property
    def required(self) -> Mapping[str, frozenset[str]]:
        return {}

    def atoms(self) -> frozenset[Atom]:
        return frozenset(("clauses", o, vs) for o, vs in self.clauses.items())

    def render(self, ascii: bool = False) -> str:
        _, OR = _syms(ascii)
        return OR.join(_literal(o, vs, self.space, ascii) for o, vs in self.clauses.items())


@dataclass(frozen=True)
class ConjDisj(_Template):
    core: SettingSet
    clauses: SettingSet
    kind = "mix"

    def satisfied_by(self, config: Mapping[str, str]) -> bool:
        return self.core.allows(config) and any(config[o] in vs for o, vs in self.clauses.items())

    @property
    def space(self) -> ConfigSpace:  # type: ignore[override]
        return self.core.space

    @property
    def options(self) -> tuple[str, ...]:
        used = set(self.core) | set(self.clauses)
        return tuple(n for n in self.space.names if n in used)

    @property
    def required(self) -> Mapping[str, frozenset[str]]:
        return self.core

    def atoms(self) -> frozenset[Atom]:
        return Conj(self.core).atoms() | Disj(self.clauses).atoms()

    def render(self, ascii: bool = False) -> str:
        AND, OR = _syms(ascii)
        lits = [_literal(o, vs, self.space, ascii) for o, vs in self.core.items()]
        lits.append("(" + OR.join(_literal(o, vs, self.space, ascii) for o, vs in self.clauses.items()) + ")")
        return AND.join(lits)


@dataclass(frozen=True)
class DisjConj(_Template):
    clauses: SettingSet
    core: SettingSet
    kind = "mix"

    def satisfied_by(self, config: Mapping[str, str]) -> bool:
        return any(config[o] in vs for o, vs in self.clauses.items()) or self.core.allows(config)

    @property
    def space(self) -> ConfigSpace:  # type: ignore[override]
        return self.core.space

    @property
    def options(self) -> tuple[str, ...]:
        used = set(self.core) | set(self.clauses)
        return tuple(n for n in self.space.names if n in used)

    @property
    def required(self) -> Mapping[str, frozenset[str]]:
        return {}

    def atoms(self) -> frozenset[Atom]:
        return Conj(self.core).atoms() | Disj(self.clauses).atoms()

    def render(self, ascii: bool = False) -> str:
        AND, OR = _syms(ascii)
        lits = [_literal(o, vs, self.space, ascii) for o, vs in self.clauses.items()]
        lits.append("(" + AND.join(_literal(o, vs, self.space, ascii) for o, vs in self.core.items()) + ")")
        return OR.join(lits)


Interaction = Union[_TrueInteraction, Conj, Disj, ConjDisj, DisjConj]


# ---------------------------------------------------------------------------
# canonical constructors


def _raw(space: ConfigSpace, mapping: Mapping[str, Iterable[str]]) -> dict[str, frozenset[str]]:
    out = {}
    for o, vs in mapping.items():
        vs = frozenset(vs)
        dom = space.domain_set(o)
        if not vs or not vs <= dom:
            raise InteractionError(f"invalid value set {sorted(vs)} for option {o!r}")
        out[o] = vs
    return out


def make_conj(core: SettingSet) -> Interaction:
    return Conj(core) if core else TRUE


def make_disj(space: ConfigSpace, clauses: Mapping[str, Iterable[str]]) -> Interaction:
    """Disjunction of clauses; a full-domain clause makes it TRUE.

    An empty clause map is the unsatisfiable formula and is rejected.
    """
    raw = _raw(space, clauses)
    if not raw:
        raise InteractionError("empty disjunction is unsatisfiable")
    if any(vs == space.domain_set(o) for o, vs in raw.items()):
        return TRUE
    ss = SettingSet.build(space, raw)
    return Conj(ss) if len(ss) == 1 else Disj(ss)


def normalize_conjdisj(core: SettingSet, clauses: Mapping[str, Iterable[str]], space: ConfigSpace | None = None) -> Interaction:
    """Canonical form of ``Conj(core) ∧ Disj(clauses)``.

    Clauses contradicted by the core are dropped and partially overlapping
    clauses are narrowed to the core's values. A clause implied by the core
    collapses the whole formula to ``Conj(core)``. When no clause survives the
    formula is unsatisfiable and the component is eliminated (``TRUE``).
    """
    space = space or core.space
    raw = _raw(space, clauses)
    if any(vs == space.domain_set(o) for o, vs in raw.items()):
        return make_conj(core)
    kept: dict[str, frozenset[str]] = {}
    for o, vs in raw.items():
        if o in core:
            inter = vs & core[o]
            if not inter:
                continue
            if core[o] <= vs:
                return make_conj(core)
            kept[o] = inter
        else:
            kept[o] = vs
    if not kept:
        return TRUE
    if not core:
        return make_disj(space, kept)
    if len(kept) == 1:
        (o, vs), = kept.items()
        merged = dict(core.items())
        merged[o] = merged.get(o, space.domain_set(o)) & vs
        return make_conj(SettingSet.build(space, merged))
    return ConjDisj(core, SettingSet.build(space, kept))


def make_disjconj(space: ConfigSpace, clauses: Mapping[str, Iterable[str]], core: Mapping[str, Iterable[str]]) -> Interaction:
    """Canonical form of ``Disj(clauses) ∨ Conj(core)``.

    A core value set is widened by the clause values on the same option (those
    configurations already satisfy the disjunction), dropping the option once
    it reaches its full domain. A single clause over one of exactly two core
    options is rewritten as the equivalent :class:`ConjDisj`.
    """
    core_ss = core if isinstance(core, SettingSet) else SettingSet.build(space, core)
    if not core_ss:
        return TRUE
    raw = _raw(space, clauses)
    if any(vs == space.domain_set(o) for o, vs in raw.items()):
        return TRUE
    if not raw:
        return Conj(core_ss)
    if any(o in raw and vs <= raw[o] for o, vs in core_ss.items()):
        return make_disj(space, raw)
    widened = SettingSet.build(space, {o: vs | raw.get(o, frozenset()) for o, vs in core_ss.items()})
    if not widened:
        return TRUE
    if len(widened) == 1:
        (o, vs), = widened.items()
        merged = dict(raw)
        merged[o] = merged.get(o, frozenset()) | vs
        return make_disj(space, merged)
    if len(raw) == 1 and len(widened) == 2:
        # l_o ∨ (C_o ∧ C_p) is C_o ∧ (l_o ∨ C_p): the one shape both mixed templates share
        (o, vs), = raw.items()
        if o in widened:
            (p, pvs), = ((n, s) for n, s in widened.items() if n != o)
            return normalize_conjdisj(SettingSet.build(space, {o: widened[o]}), {o: vs, p: pvs}, space)
    return DisjConj(SettingSet.build(space, raw), widened)


def negate_core(core: SettingSet, space: ConfigSpace | None = None) -> SettingSet:
    """Clauses whose disjunction is the negation of ``Conj(core)``."""
    space = space or core.space
    return SettingSet.build(space, {o: space.domain_set(o) - vs for o, vs in core.items()})


# ---------------------------------------------------------------------------
# semantics and inference


def satisfies(config: Configuration, phi: Interaction) -> bool:
    missing = [o for o in phi.options if o not in config]
    if missing:
        raise InteractionError(f"interaction mentions options absent from the configuration: {missing}")
    return phi.satisfied_by(config)


@dataclass(frozen=True)
class CandidateTuple:
    """The four template candidates for one location, plus the cores used for refinement.

    ``ncov_core`` is the pointwise union of non-covering configurations (the
    negation of ``disj``), ``disj_prime`` the union of non-covering
    configurations that satisfy ``conj`` and ``conj_prime`` the union of
    covering configurations that falsify ``disj``. Absent cores are ``None``.
    """

    conj: Interaction
    disj: Interaction
    conjdisj: Interaction
    disjconj: Interaction
    conj_core: SettingSet
    ncov_core: SettingSet | None = None
    conj_prime: SettingSet | None = None
    disj_prime: SettingSet | None = None

    @property
    def components(self) -> tuple[Interaction, Interaction, Interaction, Interaction]:
        return (self.conj, self.disj, self.conjdisj, self.disjconj)

    def refinement_cores(self) -> list[SettingSet]:
        return [c for c in (self.conj_core, self.ncov_core, self.conj_prime, self.disj_prime) if c is not None]


def infer_candidates(
    cov_l: Collection[Configuration], ncov_l: Collection[Configuration], space: ConfigSpace | None = None
) -> CandidateTuple:
    if not cov_l:
        raise InteractionError("a location needs at least one covering configuration")
    if not isinstance(cov_l, (set, frozenset)):
        cov_set = set(cov_l)
    else:
        cov_set = cov_l
    if any(c in cov_set for c in ncov_l):
        raise InteractionError("covering and non-covering configurations overlap")
    space = space or next(iter(cov_l)).space

    conj_core = pointwise_union(cov_l)
    conj = make_conj(conj_core)

    ncov_core = pointwise_union(ncov_l) if ncov_l else None
    if ncov_core is None:
        disj = TRUE
    elif not ncov_core:
        # the negation of a tautology is unsatisfiable; check would drop it anyway
        disj = TRUE
    else:
        disj = make_disj(space, negate_core(ncov_core))

    sub = [c for c in ncov_l if conj_core.allows(c)]
    if sub:
        disj_prime = pointwise_union(sub)
        conjdisj = normalize_conjdisj(conj_core, negate_core(disj_prime), space)
    else:
        disj_prime = None
        conjdisj = conj

    conj_prime = None
    if ncov_core is None:
        disjconj = TRUE
    else:
        sub2 = [c for c in cov_l if ncov_core.allows(c)]
        if sub2:
            conj_prime = pointwise_union(sub2)
            disjconj = make_disjconj(space, negate_core(ncov_core), conj_prime)
        else:
            disjconj = disj

    return CandidateTuple(conj, disj, conjdisj, disjconj, conj_core, ncov_core, conj_prime, disj_prime)


def check(phi: Interaction, cov_l: Iterable[Configuration]) -> Interaction:
    """``phi`` if every covering configuration satisfies it, else ``TRUE``."""
    if phi is TRUE:
        return TRUE
    return phi if all(phi.satisfied_by(c) for c in cov_l) else TRUE


def _space_of(*formulas) -> ConfigSpace | None:
    for f in formulas:
        if f.space is not None:
            return f.space
    return None


def implies(phi, psi, space: ConfigSpace | None = None, cap: int = DEFAULT_IMPLICATION_CAP) -> bool | None:
    """Decide ``phi ⇒ psi`` by enumerating the options either formula mentions.

    Options outside both formulas cannot influence either side. Options that
    ``phi`` pins to a subset are only enumerated over that subset. Returns
    ``None`` (unknown) when the enumeration would exceed ``cap`` assignments.
    """
    space = space or _space_of(phi, psi)
    if space is None:
        return True  # both TRUE
    used = set(phi.options) | set(psi.options)
    required = phi.required
    names = [n for n in space.names if n in used]
    domains = []
    for n in names:
        dom = space.domain(n).values
        if n in required:
            dom = tuple(v for v in dom if v in required[n])
            if not dom:
                return True
        domains.append(dom)
    if math.prod(len(d) for d in domains) > cap:
        return None
    assignment: dict[str, str] = {}
    for values in itertools.product(*domains):
        assignment.update(zip(names, values))
        if phi.satisfied_by(assignment) and not psi.satisfied_by(assignment):
            return False
    return True


def equivalent(phi, psi, space: ConfigSpace | None = None, cap: int = DEFAULT_IMPLICATION_CAP) -> bool | None:
    a = implies(phi, psi, space, cap)
    if a is False:
        return False
    b = implies(psi, phi, space, cap)
    if b is False:
        return False
    return True if (a and b) else None


@dataclass(frozen=True)
class FinalResult:
    """Conjunction of pairwise-incomparable interactions selected for a location."""

    parts: tuple[Interaction, ...]

    def __post_init__(self) -> None:
        if not self.parts:
            raise InteractionError("a final result needs at least one part")

    @property
    def space(self) -> ConfigSpace | None:
        return _space_of(*self.parts)

    def satisfied_by(self, config: Mapping[str, str]) -> bool:
        return all(p.satisfied_by(config) for p in self.parts)

    @property
    def options(self) -> tuple[str, ...]:
        space = self.space
        if space is None:
            return ()
        used = set().union(*(p.options for p in self.parts))
        return tuple(n for n in space.names if n in used)

    @property
    def length(self) -> int:
        return len(self.options)

    @property
    def required(self) -> dict[str, frozenset[str]]:
        out: dict[str, frozenset[str]] = {}
        for p in self.parts:
            for o, vs in p.required.items():
                out[o] = out[o] & vs if o in out else vs
        return out

    @property
    def kind(self) -> str:
        return self.parts[0].kind if len(self.parts) == 1 else "mix"

    @property
    def is_true(self) -> bool:
        return self.parts == (TRUE,)

    def atoms(self) -> frozenset[Atom]:
        return frozenset().union(*(p.atoms() for p in self.parts))

    def render(self, ascii: bool = False) -> str:
        if len(self.parts) == 1:
            return self.parts[0].render(ascii)
        AND, _ = _syms(ascii)
        return AND.join(p.render(ascii) if p.length == 1 else f"({p.render(ascii)})" for p in self.parts)

    def __str__(self) -> str:
        return self.render()


TRUE_RESULT = FinalResult((TRUE,))


def sel_strongest(
    candidates: CandidateTuple | Sequence[Interaction], space: ConfigSpace | None = None, cap: int = DEFAULT_IMPLICATION_CAP
) -> FinalResult:
    """Keep the logically strongest candidates.

    A candidate is dropped when another implies it and is not implied back
    (strictly weaker), or when an earlier candidate is equivalent to it. An
    ``unknown`` implication counts as incomparable.
    """
    comps = candidates.components if isinstance(candidates, CandidateTuple) else tuple(candidates)
    uniq: list[Interaction] = []
    for c in comps:
        if c is not TRUE and c not in uniq:
            uniq.append(c)
    if not uniq:
        return TRUE_RESULT
    n = len(uniq)
    imp = [[i == j or implies(uniq[i], uniq[j], space, cap) is True for j in range(n)] for i in range(n)]
    survivors = []
    for i in range(n):
        dominated = any(imp[j][i] and (not imp[i][j] or j < i) for j in range(n) if j != i)
        if not dominated:
            survivors.append(uniq[i])
    return FinalResult(tuple(survivors))


def render(phi, ascii: bool = False) -> str:
    return phi.render(ascii)


# ---------------------------------------------------------------------------
# parsing


def _as_literal(node: Formula, space: ConfigSpace) -> tuple[str, frozenset[str]] | None:
    negated = False
    while isinstance(node, Not):
        negated = not negated
        node = node.child
    if not isinstance(node, Member):
        return None
    vs = node.values
    if negated:
        vs = space.domain_set(node.option) - vs
    return node.option, vs


def _flatten(node: Formula, kind: type) -> list[Formula]:
    if isinstance(node, kind):
        out = []
        for c in node.children:
            out.extend(_flatten(c, kind))
        return out
    return [node]


def _conj_of_literals(nodes: Sequence[Formula], space: ConfigSpace) -> dict[str, frozenset[str]] | None:
    core: dict[str, frozenset[str]] = {}
    for n in nodes:
        lit = _as_literal(n, space)
        if lit is None:
            return None
        o, vs = lit
        core[o] = core[o] & vs if o in core else vs
    return core


def _disj_of_literals(nodes: Sequence[Formula], space: ConfigSpace) -> dict[str, frozenset[str]] | None:
    clauses: dict[str, frozenset[str]] = {}
    for n in nodes:
        lit = _as_literal(n, space)
        if lit is None:
            return None
        o, vs = lit
        clauses[o] = clauses.get(o, frozenset()) | vs
    return clauses


def _core(space: ConfigSpace, core: dict[str, frozenset[str]]) -> SettingSet:
    if any(not vs for vs in core.values()):
        raise NotATemplate("contradictory conjunction")
    return SettingSet.build(space, core)


def formula_to_interaction(node: Formula, space: ConfigSpace) -> Interaction:
    """Express a formula AST as a canonical template, or raise :class:`NotATemplate`."""
    if isinstance(node, Const):
        if node.value:
            return TRUE
        raise NotATemplate("false is not an interaction")
    lit = _as_literal(node, space)
    if lit is not None:
        return make_conj(_core(space, {lit[0]: lit[1]}))
    if isinstance(node, And):
        kids = [k for k in _flatten(node, And) if k != Const(True)]
        if Const(False) in kids:
            raise NotATemplate("false is not an interaction")
        lits = [k for k in kids if _as_literal(k, space) is not None]
        groups = [k for k in kids if _as_literal(k, space) is None]
        core = _core(space, _conj_of_literals(lits, space) or {})
        if not groups:
            return make_conj(core)
        if len(groups) == 1 and isinstance(groups[0], Or):
            clauses = _disj_of_literals(_flatten(groups[0], Or), space)
            if clauses is not None:
                return normalize_conjdisj(core, clauses, space)
        raise NotATemplate("conjunction with more than one non-literal group")
    if isinstance(node, Or):
        kids = [k for k in _flatten(node, Or) if k != Const(False)]
        if Const(True) in kids:
            return TRUE
        lits = [k for k in kids if _as_literal(k, space) is not None]
        groups = [k for k in kids if _as_literal(k, space) is None]
        clauses = _disj_of_literals(lits, space) or {}
        if not groups:
            return make_disj(space, clauses)
        if len(groups) == 1 and isinstance(groups[0], And):
            core = _conj_of_literals(_flatten(groups[0], And), space)
            if core is not None:
                return make_disjconj(space, clauses, _core(space, core))
        raise NotATemplate("disjunction with more than one non-literal group")
    raise NotATemplate(f"unsupported formula shape {type(node).__name__}")


def parse_interaction(text: str, space: ConfigSpace) -> Interaction:
    return formula_to_interaction(parse_formula(text, space), space)


def parse_result(text: str, space: ConfigSpace) -> FinalResult:
    """Parse a rendered :class:`FinalResult` (possibly a conjunction of parts).

    A parenthesized conjunction directly under the top-level ``∧`` marks a
    multi-part result, so each top-level conjunct becomes one part.
    """
    node = parse_formula(text, space)
    if isinstance(node, And) and any(isinstance(k, And) for k in node.children):
        return FinalResult(tuple(formula_to_interaction(k, space) for k in node.children))
    try:
        return FinalResult((formula_to_interaction(node, space),))
    except NotATemplate:
        if not isinstance(node, And):
            raise
    return FinalResult(tuple(formula_to_interaction(k, space) for k in node.children))
