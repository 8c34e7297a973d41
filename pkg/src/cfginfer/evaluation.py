"""Ground truth and comparison tools.

* :func:`exhaustive_infer` -- one inference pass over every configuration;
* :func:`f_score` / :func:`delta_cov` -- compare two results location by location;
* :func:`random_baseline` -- one pass over a uniform sample of matching size;
* :func:`convergence_trajectory` -- score every iteration snapshot of a run;
* :func:`min_cover` -- a small configuration set satisfying every interaction;
* :func:`histogram` -- interaction length against how many locations share it.

The f-score works on *atoms*. Every template is decomposed into
``(slot, option, value set)`` triples, with slot ``core`` or ``clauses``.
Precision and recall are taken over those sets per location and averaged
over the union of locations. A location missing on one side scores 0.
"""

from __future__ import annotations

import itertools
import random
from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass, field
from typing import Any, Union

from .config_space import (
    DEFAULT_ENUMERATION_CAP,
    ConfigSpace,
    Configuration,
    all_configurations,
    complete_randomly,
)
from .inference import InferenceResult, finalize, single_pass
from .interaction import (
    DEFAULT_IMPLICATION_CAP,
    TRUE,
    Conj,
    ConjDisj,
    Disj,
    DisjConj,
    FinalResult,
    Interaction,
    implies,
)
from .oracle import CoverageOracle

ResultLike = Union[InferenceResult, Mapping[str, FinalResult]]


def _per_location(result: ResultLike) -> Mapping[str, FinalResult]:
    return result.per_location if isinstance(result, InferenceResult) else result


def exhaustive_infer(
    oracle: CoverageOracle,
    space: ConfigSpace,
    cap: int = DEFAULT_ENUMERATION_CAP,
    implication_cap: int = DEFAULT_IMPLICATION_CAP,
    jobs: int = 1,
) -> InferenceResult:
    """Evaluate the whole space once and infer from it; refuses spaces above ``cap``."""
    configs = all_configurations(space, cap)
    return single_pass(oracle, space, configs, cap=implication_cap, jobs=jobs)


@dataclass
class EvalReport:
    delta_cov: int
    f_score: float
    per_location_f: dict[str, float]
    missing_locations: set[str] = field(default_factory=set)

    def to_document(self) -> dict[str, Any]:
        return {
            "delta_cov": self.delta_cov,
            "f_score": round(self.f_score, 6),
            "per_location": {loc: round(f, 6) for loc, f in sorted(self.per_location_f.items())},
            "missing_locations": sorted(self.missing_locations),
        }

    def to_text(self) -> str:
        width = max([len("location")] + [len(loc) for loc in self.per_location_f])
        lines = [f"delta_cov  {self.delta_cov:+d}", f"f_score    {self.f_score:.4f}", ""]
        lines.append(f"{'location':<{width}}  f")
        for loc, f in sorted(self.per_location_f.items()):
            mark = "  (missing on one side)" if loc in self.missing_locations else ""
            lines.append(f"{loc:<{width}}  {f:.4f}{mark}")
        return "\n".join(lines) + "\n"


def atom_f(inferred: FinalResult, exact: FinalResult) -> float:
    a, b = inferred.atoms(), exact.atoms()
    if not a and not b:
        return 1.0
    if not a or not b:
        return 0.0
    hit = len(a & b)
    if hit == 0:
        return 0.0
    p, r = hit / len(a), hit / len(b)
    return 2 * p * r / (p + r)


def f_score(inferred: ResultLike, exact: ResultLike) -> EvalReport:
    left, right = _per_location(inferred), _per_location(exact)
    per: dict[str, float] = {}
    missing = set()
    for loc in sorted(set(left) | set(right)):
        if loc in left and loc in right:
            per[loc] = atom_f(left[loc], right[loc])
        else:
            per[loc] = 0.0
            missing.add(loc)
    mean = sum(per.values()) / len(per) if per else 1.0
    return EvalReport(delta_cov(left, right), mean, per, missing)


def delta_cov(inferred: ResultLike, exact: ResultLike) -> int:
    return len(_per_location(inferred)) - len(_per_location(exact))


def random_baseline(
    oracle: CoverageOracle,
    space: ConfigSpace,
    n_configs: int,
    include_default: bool = True,
    seed: int = 0,
    implication_cap: int = DEFAULT_IMPLICATION_CAP,
    jobs: int = 1,
) -> InferenceResult:
    """One inference pass over ``n_configs`` distinct uniformly drawn configurations.

    The default configuration, when requested and present, counts towards
    the budget so that budgets match the iterative run's ``configs_used``.
    """
    if n_configs < 1:
        raise ValueError("n_configs must be at least 1")
    warnings = []
    size = space.size
    if n_configs > size:
        warnings.append(f"n_configs={n_configs} exceeds the space size {size}; clamped")
        n_configs = size
    rng = random.Random(seed)
    configs: list[Configuration] = []
    default = space.default_config if include_default else None
    if default is not None:
        configs.append(default)
    for index in rng.sample(range(size), n_configs):
        if len(configs) == n_configs:
            break
        c = space.config_at(index)
        if c != default:
            configs.append(c)
    result = single_pass(oracle, space, configs, seed=seed, cap=implication_cap, jobs=jobs)
    result.warnings.extend(warnings)
    return result


def convergence_trajectory(
    result: InferenceResult, exact: ResultLike, cap: int = DEFAULT_IMPLICATION_CAP
) -> list[tuple[int, float, float]]:
    """``(iteration, iteration / total, f-score)`` for every recorded iteration."""
    if not result.history or result.coverage is None:
        raise ValueError("the result carries no iteration history")
    total = len(result.history)
    out = []
    for entry in result.history:
        snapshot = finalize(entry.candidates, result.coverage, cap, limit=entry.configs_total)
        out.append((entry.iteration, entry.iteration / total, f_score(snapshot, exact).f_score))
    return out


# ---------------------------------------------------------------------------
# minimal covering configurations

Term = dict[str, frozenset[str]]


class MinCoverError(ValueError):
    pass


def _meet(a: Term, b: Term) -> Term | None:
    out = dict(a)
    for o, vs in b.items():
        both = out[o] & vs if o in out else vs
        if not both:
            return None
        out[o] = both
    return out


def _terms(phi: Interaction | FinalResult) -> list[Term]:
    """``phi`` as a disjunction of consistent conjunctive terms."""
    if isinstance(phi, FinalResult):
        return _conjoin([_terms(p) for p in phi.parts])
    if phi is TRUE:
        return [{}]
    if isinstance(phi, Conj):
        return [dict(phi.core.items())]
    if isinstance(phi, Disj):
        return [{o: vs} for o, vs in phi.clauses.items()]
    if isinstance(phi, ConjDisj):
        core = dict(phi.core.items())
        return [t for o, vs in phi.clauses.items() if (t := _meet(core, {o: vs})) is not None]
    if isinstance(phi, DisjConj):
        return [{o: vs} for o, vs in phi.clauses.items()] + [dict(phi.core.items())]
    raise TypeError(f"not an interaction: {phi!r}")


def _conjoin(groups: Sequence[list[Term]], cap: int = DEFAULT_IMPLICATION_CAP) -> list[Term] | None:
    """Consistent terms of the conjunction; ``None`` when more than ``cap`` would be explored."""
    acc: list[Term] = [{}]
    for terms in groups:
        if len(acc) * len(terms) > cap:
            return None
        nxt = []
        seen = set()
        for a, b in itertools.product(acc, terms):
            m = _meet(a, b)
            if m is None:
                continue
            key = tuple(sorted(m.items()))
            if key not in seen:
                seen.add(key)
                nxt.append(m)
        acc = nxt
        if not acc:
            break
    return acc


@dataclass
class MinCoverResult:
    configs: list[Configuration]
    covered: set[str]

    def to_document(self) -> dict[str, Any]:
        return {"configs": [c.canonical() for c in self.configs], "covered": sorted(self.covered)}


def _keyed(interactions) -> list[tuple[str, Interaction | FinalResult]]:
    if isinstance(interactions, InferenceResult):
        interactions = interactions.per_location
    if isinstance(interactions, Mapping):
        return [(str(k), v) for k, v in sorted(interactions.items())]
    return [(str(i), v) for i, v in enumerate(interactions)]


def drop_implied(
    items: Sequence[Interaction | FinalResult], space: ConfigSpace, cap: int = DEFAULT_IMPLICATION_CAP
) -> list[Interaction | FinalResult]:
    """Remove every interaction implied by another one; of equivalent ones the first stays."""
    n = len(items)
    imp = [[i == j or implies(items[i], items[j], space, cap) is True for j in range(n)] for i in range(n)]
    return [items[i] for i in range(n) if not any(imp[j][i] and (not imp[i][j] or j < i) for j in range(n) if j != i)]


def _is_true(phi) -> bool:
    return phi is TRUE or (isinstance(phi, FinalResult) and phi.is_true)


def _one_draw(items, space, rng, cap) -> list[Configuration]:
    order = list(items)
    rng.shuffle(order)
    groups: list[list[Term]] = []
    for phi in order:
        own = _terms(phi)
        for i, g in enumerate(groups):
            merged = _conjoin([g, own], cap)
            if merged:
                groups[i] = merged
                break
        else:
            groups.append(own)
    return [complete_randomly(rng.choice(g), space, rng) for g in groups]


def min_cover(
    interactions,
    space: ConfigSpace,
    rng: random.Random,
    cap: int = DEFAULT_IMPLICATION_CAP,
    draws: int = 10,
) -> MinCoverResult:
    """Greedy small configuration set satisfying every given interaction.

    ``interactions`` is a mapping from location to interaction, an
    :class:`InferenceResult`, or a plain sequence (keyed by position). The
    smallest of ``draws`` random grouping orders is returned.
    """
    if draws < 1:
        raise ValueError("draws must be at least 1")
    keyed = _keyed(interactions)
    for key, phi in keyed:
        if not _terms(phi):
            raise MinCoverError(f"interaction for {key} is unsatisfiable: {phi.render(ascii=True)}")
    distinct: list = []
    seen = set()
    for _, phi in keyed:
        text = phi.render(ascii=True)
        if not _is_true(phi) and text not in seen:
            seen.add(text)
            distinct.append(phi)
    survivors = drop_implied(distinct, space, cap)

    best: list[Configuration] | None = None
    if survivors:
        for _ in range(draws):
            configs = _one_draw(survivors, space, rng, cap)
            if best is None or len(configs) < len(best):
                best = configs
    elif keyed:
        best = [complete_randomly({}, space, rng)]
    best = best or []
    covered = {key for key, phi in keyed if any(phi.satisfied_by(c) for c in best)}
    return MinCoverResult(best, covered)


def histogram(result: ResultLike) -> list[tuple[int, int, int]]:
    """Rows ``(length, distinct interactions, locations)`` sorted by length; ``true`` has length 0."""
    per = _per_location(result)
    by_len: dict[int, tuple[set[str], int]] = {}
    for r in per.values():
        texts, n = by_len.get(r.length, (set(), 0))
        texts.add(r.render(ascii=True))
        by_len[r.length] = (texts, n + 1)
    return [(length, len(texts), n) for length, (texts, n) in sorted(by_len.items())]

