"""The iterative interaction-inference loop.

Starting from a random 1-way covering array (plus the default configuration
when the space has one), each iteration runs the coverage oracle on the
configurations not seen before, re-infers the four template candidates for
every covered location from *all* evaluated configurations, then mutates the
longest candidate core not refined before to obtain the next batch. When no
such core is left, the batch is a single random unseen configuration. The loop
stops once neither the covered locations nor any candidate changed, every
current core has been refined, and that state has held for ``patience``
consecutive iterations (or the space is exhausted).

All randomness comes from one ``random.Random(seed)`` stream consumed in a
fixed order: covering-array columns in option order, then per iteration the
tie-break among the longest cores (collected from locations in sorted order)
followed by the random fills of each mutation (options in space order).
"""

from __future__ import annotations

import logging
import random
from collections.abc import Collection, Iterable, Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

from .config_space import (
    DEFAULT_ENUMERATION_CAP,
    ConfigSpace,
    Configuration,
    SettingSet,
    complete_randomly,
    one_way_covering_array,
    random_configuration,
)
from .interaction import (
    DEFAULT_IMPLICATION_CAP,
    CandidateTuple,
    FinalResult,
    check,
    infer_candidates,
    make_conj,
    parse_result,
    sel_strongest,
)
from .oracle import CoverageOracle, OracleError

log = logging.getLogger(__name__)


@dataclass
class InferenceParams:
    seed: int = 0
    max_iterations: int = 100
    implication_cap: int = DEFAULT_IMPLICATION_CAP
    include_default: bool = True
    jobs: int = 1
    patience: int = 32
    patience_fraction: float = 0.1

    def __post_init__(self) -> None:
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")
        if self.patience < 1:
            raise ValueError("patience must be at least 1")
        if not 0 < self.patience_fraction <= 1:
            raise ValueError("patience_fraction must be in (0, 1]")
        if self.jobs < 1:
            raise ValueError("jobs must be at least 1")

    def effective_patience(self, space: ConfigSpace) -> int:
        """``patience`` capped at ``patience_fraction`` of the space size (at least 1)."""
        return max(1, min(self.patience, int(space.size * self.patience_fraction)))


class CoverageMap:
    """Evaluated configurations (with stable ids) and ``location -> covering ids``.

    The non-covering set of a location is derived as the complement within
    the universe and never stored.
    """

    def __init__(self, space: ConfigSpace):
        self.space = space
        self.universe: list[Configuration] = []
        self.cov: dict[str, set[int]] = {}
        self._ids: dict[Configuration, int] = {}

    def __contains__(self, config: object) -> bool:
        return config in self._ids

    def __len__(self) -> int:
        return len(self.universe)

    def add(self, config: Configuration, locations: Iterable[str]) -> int:
        if config in self._ids:
            raise ValueError(f"configuration already evaluated: {config.canonical()}")
        cid = len(self.universe)
        self.universe.append(config)
        self._ids[config] = cid
        for loc in locations:
            self.cov.setdefault(loc, set()).add(cid)
        return cid

    def id_of(self, config: Configuration) -> int:
        return self._ids[config]

    @property
    def locations(self) -> list[str]:
        return sorted(self.cov)

    def locations_of(self, config: Configuration) -> list[str]:
        cid = self._ids[config]
        return sorted(loc for loc, ids in self.cov.items() if cid in ids)

    def covering(self, location: str, limit: int | None = None) -> list[Configuration]:
        """Configurations covering ``location`` among the first ``limit`` ids."""
        ids = sorted(self.cov.get(location, ()))
        if limit is not None:
            ids = [i for i in ids if i < limit]
        return [self.universe[i] for i in ids]

    def not_covering(self, location: str, limit: int | None = None) -> list[Configuration]:
        ids = self.cov.get(location, set())
        n = len(self.universe) if limit is None else min(limit, len(self.universe))
        return [self.universe[i] for i in range(n) if i not in ids]

    def covered_locations(self, limit: int | None = None) -> frozenset[str]:
        if limit is None:
            return frozenset(self.cov)
        return frozenset(loc for loc, ids in self.cov.items() if any(i < limit for i in ids))


@dataclass
class HistoryEntry:
    iteration: int
    new_configs: tuple[Configuration, ...]
    configs_total: int
    candidates: dict[str, CandidateTuple]
    refined: SettingSet | None = None

    def to_document(self) -> dict[str, Any]:
        return {
            "iteration": self.iteration,
            "new_configs": [c.canonical() for c in self.new_configs],
            "configs_total": self.configs_total,
            "refined": None if self.refined is None else make_conj(self.refined).render(ascii=True),
            "candidates": {
                loc: [c.render(ascii=True) for c in t.components] for loc, t in sorted(self.candidates.items())
            },
        }


@dataclass
class InferenceResult:
    per_location: dict[str, FinalResult]
    configs_used: int
    iterations: int
    space: ConfigSpace
    seed: int | None = None
    history: list[HistoryEntry] = field(default_factory=list)
    coverage: CoverageMap | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def locations(self) -> list[str]:
        return sorted(self.per_location)

    def counts(self) -> dict[str, int]:
        """Distinct final interactions by kind; ``true`` counts as a conjunction."""
        seen = {}
        for r in self.per_location.values():
            seen.setdefault(r.render(ascii=True), r)
        out = {"conj": 0, "disj": 0, "mix": 0}
        for r in seen.values():
            out["conj" if r.kind == "true" else r.kind] += 1
        out["total"] = len(seen)
        return out

    def to_document(self, include_history: bool = True) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "seed": self.seed,
            "iterations": self.iterations,
            "configs_used": self.configs_used,
            "space": self.space.to_dict(),
            "interactions": {loc: self.per_location[loc].render(ascii=True) for loc in self.locations},
        }
        if include_history:
            doc["history"] = [h.to_document() for h in self.history]
        doc["warnings"] = list(self.warnings)
        return doc

    @classmethod
    def from_document(cls, doc: Mapping[str, Any]) -> InferenceResult:
        """Rebuild the per-location results and counters; history is not restored."""
        space = ConfigSpace.from_dict(doc["space"])
        per_location = {str(loc): parse_result(text, space) for loc, text in doc["interactions"].items()}
        return cls(
            per_location=per_location,
            configs_used=int(doc.get("configs_used", 0)),
            iterations=int(doc.get("iterations", 0)),
            space=space,
            seed=doc.get("seed"),
            warnings=list(doc.get("warnings", [])),
        )


def evaluate_configs(
    oracle: CoverageOracle, configs: Sequence[Configuration], jobs: int = 1
) -> list[frozenset[str]]:
    """Run the oracle on each configuration; results come back in input order."""

    def one(config: Configuration) -> frozenset[str]:
        try:
            return frozenset(oracle.coverage(config))
        except OracleError:
            raise
        except Exception as exc:
            raise OracleError(config, str(exc)) from exc

    if jobs <= 1 or len(configs) <= 1:
        return [one(c) for c in configs]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(one, configs))


def infer_all(cmap: CoverageMap, limit: int | None = None) -> dict[str, CandidateTuple]:
    """Candidate tuples for every location covered among the first ``limit`` configurations."""
    out = {}
    for loc in sorted(cmap.covered_locations(limit)):
        out[loc] = infer_candidates(cmap.covering(loc, limit), cmap.not_covering(loc, limit), cmap.space)
    return out


def finalize(
    tuples: Mapping[str, CandidateTuple], cmap: CoverageMap, cap: int = DEFAULT_IMPLICATION_CAP, limit: int | None = None
) -> dict[str, FinalResult]:
    """Check every candidate against the covering configurations and keep the strongest."""
    out = {}
    for loc in sorted(tuples):
        cov_l = cmap.covering(loc, limit)
        checked = [check(c, cov_l) for c in tuples[loc].components]
        out[loc] = sel_strongest(checked, cmap.space, cap)
    return out


def fixpoint_reached(
    prev_cov: Iterable[str],
    prev_tuples: Mapping[str, CandidateTuple],
    cur_cov: Iterable[str],
    cur_tuples: Mapping[str, CandidateTuple],
) -> bool:
    if set(prev_cov) != set(cur_cov):
        return False
    if set(prev_tuples) != set(cur_tuples):
        return False
    return all(prev_tuples[loc].components == cur_tuples[loc].components for loc in cur_tuples)


def pending_cores(tuples: Mapping[str, CandidateTuple], explored: Collection[SettingSet] = ()) -> list[SettingSet]:
    """Distinct nonempty refinement cores not yet mutated, locations in sorted order."""
    pool: list[SettingSet] = []
    seen = set(explored)
    for loc in sorted(tuples):
        for core in tuples[loc].refinement_cores():
            if core and core not in seen:
                seen.add(core)
                pool.append(core)
    return pool


def select_core(
    tuples: Mapping[str, CandidateTuple], rng: random.Random, explored: Collection[SettingSet] = ()
) -> SettingSet | None:
    """The longest pending refinement core across all locations, ties broken at random."""
    pool = pending_cores(tuples, explored)
    if not pool:
        return None
    longest = max(len(c) for c in pool)
    return rng.choice([c for c in pool if len(c) == longest])


def mutate_core(
    core: SettingSet, existing: Iterable[Configuration] | Mapping, space: ConfigSpace, rng: random.Random
) -> list[Configuration]:
    """One configuration per (constrained option, value outside its set).

    The mutated option takes the outside value, every other constrained
    option a random member of its set, the rest random values.
    """
    batch: list[Configuration] = []
    seen = set()
    for name, allowed in core.items():
        others = {o: vs for o, vs in core.items() if o != name}
        for value in space.domain(name).values:
            if value in allowed:
                continue
            partial = dict(others)
            partial[name] = {value}
            c = complete_randomly(partial, space, rng)
            if c not in existing and c not in seen:
                seen.add(c)
                batch.append(c)
    return batch


def random_unseen(
    existing, space: ConfigSpace, rng: random.Random, attempts: int = 100, cap: int = DEFAULT_ENUMERATION_CAP
) -> Configuration | None:
    if len(existing) >= space.size:
        return None
    for _ in range(attempts):
        c = random_configuration(space, rng)
        if c not in existing:
            return c
    if space.size <= cap:
        unseen = [i for i in range(space.size) if space.config_at(i) not in existing]
        return space.config_at(rng.choice(unseen)) if unseen else None
    return None


def _generate(tuples, existing, space, rng, explored=()) -> tuple[SettingSet | None, list[Configuration]]:
    core = select_core(tuples, rng, explored)
    batch = mutate_core(core, existing, space, rng) if core is not None else []
    if not batch:
        extra = random_unseen(existing, space, rng)
        batch = [extra] if extra is not None else []
    return core, batch


def gen_new_configs(
    tuples: Mapping[str, CandidateTuple],
    existing,
    space: ConfigSpace,
    rng: random.Random,
    explored: Collection[SettingSet] = (),
) -> list[Configuration]:
    """New configurations refining the longest current interaction.

    Cores in ``explored`` were already mutated and are skipped. Falls back to
    one random unseen configuration when no mutation is new, and to nothing
    once the space is exhausted.
    """
    return _generate(tuples, existing, space, rng, explored)[1]


def run(oracle: CoverageOracle, space: ConfigSpace, params: InferenceParams | None = None) -> InferenceResult:
    params = params or InferenceParams()
    rng = random.Random(params.seed)
    cmap = CoverageMap(space)
    configs = one_way_covering_array(space, rng)
    if params.include_default and space.default_config is not None and space.default_config not in configs:
        configs.append(space.default_config)

    history: list[HistoryEntry] = []
    warnings: list[str] = []
    prev_cov: frozenset[str] = frozenset()
    prev_tuples: dict[str, CandidateTuple] = {}
    explored: set[SettingSet] = set()
    stalled = 0
    patience = params.effective_patience(space)
    for iteration in range(1, params.max_iterations + 1):
        fresh = []
        for c in configs:
            if c not in cmap and c not in fresh:
                fresh.append(c)
        for c, locs in zip(fresh, evaluate_configs(oracle, fresh, params.jobs)):
            cmap.add(c, locs)
        tuples = infer_all(cmap)
        cur_cov = cmap.covered_locations()
        entry = HistoryEntry(iteration, tuple(fresh), len(cmap), tuples)
        history.append(entry)
        log.debug("iteration %d: %d new configs, %d total, %d locations", iteration, len(fresh), len(cmap), len(cur_cov))
        if fixpoint_reached(prev_cov, prev_tuples, cur_cov, tuples) and not pending_cores(tuples, explored):
            stalled += 1
            if stalled >= patience or not fresh:
                break
        else:
            stalled = 0
        prev_cov, prev_tuples = cur_cov, tuples
        if iteration == params.max_iterations:
            warnings.append(f"stopped after max_iterations={params.max_iterations} without reaching a fix-point")
            break
        entry.refined, configs = _generate(tuples, cmap, space, rng, explored)
        if entry.refined is not None:
            explored.add(entry.refined)

    per_location = finalize(history[-1].candidates, cmap, params.implication_cap)
    return InferenceResult(
        per_location=per_location,
        configs_used=len(cmap),
        iterations=len(history),
        space=space,
        seed=params.seed,
        history=history,
        coverage=cmap,
        warnings=warnings,
    )


def single_pass(
    oracle: CoverageOracle,
    space: ConfigSpace,
    configs: Sequence[Configuration],
    seed: int | None = None,
    cap: int = DEFAULT_IMPLICATION_CAP,
    jobs: int = 1,
) -> InferenceResult:
    """One candidate-inference pass over a fixed configuration set, then check + selection."""
    cmap = CoverageMap(space)
    unique = list(dict.fromkeys(configs))
    for c, locs in zip(unique, evaluate_configs(oracle, unique, jobs)):
        cmap.add(c, locs)
    tuples = infer_all(cmap)
    return InferenceResult(
        per_location=finalize(tuples, cmap, cap),
        configs_used=len(cmap),
        iterations=1,
        space=space,
        seed=seed,
        history=[HistoryEntry(1, tuple(unique), len(cmap), tuples)],
        coverage=cmap,
    )
