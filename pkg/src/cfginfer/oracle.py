"""Coverage oracles.

Anything with a ``coverage(config) -> iterable of location ids`` method can
drive inference. Two are provided: :class:`SyntheticOracle`, which evaluates
hand-written guard formulas (a subject whose ground truth is known), and
:class:`ExternalOracle`, which runs real test commands under a configuration
and reads the covered locations back from a sink file, memoizing results in
a :class:`CoverageCache`.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import os
import random
import shlex
import subprocess
import sys
import threading
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Protocol

from .config_space import ConfigSpace, Configuration, OptionDomain, SpaceError
from .formula import And, Const, Formula, FormulaSyntaxError, Member, Or, parse_formula, render_formula

CACHE_DIR_ENV = "CFGINFER_CACHE_DIR"


class CoverageOracle(Protocol):
    def coverage(self, config: Configuration) -> Iterable[str]: ...


class OracleError(RuntimeError):
    """The oracle could not produce coverage for ``config``."""

    def __init__(self, config: Configuration, message: str):
        super().__init__(f"coverage oracle failed for {config.canonical()}: {message}")
        self.config = config


class SubjectError(ValueError):
    """A subject or runner document failed validation; ``errors`` lists every problem."""

    def __init__(self, errors: list[str], source: str = "subject"):
        super().__init__(f"invalid {source}:\n  " + "\n  ".join(errors))
        self.errors = errors


# ---------------------------------------------------------------------------
# synthetic subjects


@dataclass(frozen=True)
class SubjectSpec:
    name: str
    space: ConfigSpace
    locations: tuple[tuple[str, Formula], ...]

    def guard(self, location: str) -> Formula:
        return dict(self.locations)[location]

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "space": self.space.to_dict(),
            "locations": [{"id": lid, "guard": render_formula(g, self.space)} for lid, g in self.locations],
        }


def synthetic_coverage(spec: SubjectSpec, config: Configuration) -> frozenset[str]:
    return frozenset(lid for lid, guard in spec.locations if guard.evaluate(config))


class SyntheticOracle:
    def __init__(self, spec: SubjectSpec):
        self.spec = spec
        self.calls = 0

    def coverage(self, config: Configuration) -> frozenset[str]:
        self.calls += 1
        return synthetic_coverage(self.spec, config)


def _subject_from_dict(doc: Any, errors: list[str]) -> SubjectSpec | None:
    if not isinstance(doc, Mapping):
        errors.append("subject document must be a JSON object")
        return None
    unknown = set(doc) - {"name", "space", "locations"}
    if unknown:
        errors.append(f"unknown fields: {sorted(unknown)}")
    space = _space_field(doc, errors)
    locs = doc.get("locations")
    if not isinstance(locs, list):
        errors.append("'locations' must be a list")
        return None
    parsed = []
    seen = set()
    for i, entry in enumerate(locs):
        if not isinstance(entry, Mapping) or "id" not in entry or "guard" not in entry:
            errors.append(f"location #{i}: needs 'id' and 'guard'")
            continue
        extra = set(entry) - {"id", "guard"}
        if extra:
            errors.append(f"location #{i}: unknown fields {sorted(extra)}")
        lid = str(entry["id"])
        if lid in seen:
            errors.append(f"duplicate location id {lid!r}")
        seen.add(lid)
        if space is None:
            continue
        try:
            parsed.append((lid, parse_formula(str(entry["guard"]), space)))
        except (SpaceError, FormulaSyntaxError) as exc:
            errors.append(f"location {lid!r}: {exc}")
    if space is None or errors:
        return None
    return SubjectSpec(str(doc.get("name", "subject")), space, tuple(parsed))


def _space_field(doc: Mapping, errors: list[str]) -> ConfigSpace | None:
    if "space" not in doc:
        errors.append("missing 'space'")
        return None
    try:
        return ConfigSpace.from_dict(doc["space"])
    except SpaceError as exc:
        errors.append(f"space: {exc}")
        return None


def fig1_subject() -> SubjectSpec:
    """The seven-option running example: six booleans and ``z`` over 0..4."""
    return load_subject(data_path("fig1.subject"))  # type: ignore[return-value]


def data_path(name: str) -> Path:
    return Path(str(resources.files("cfginfer") / "data" / name))


def _random_literal(space: ConfigSpace, rng: random.Random, name: str) -> Member:
    dom = space.domain(name).values
    k = rng.randint(1, len(dom) - 1)
    return Member(name, frozenset(rng.sample(dom, k)))


def random_template_guard(space: ConfigSpace, rng: random.Random, template: str | None = None) -> Formula:
    """A guard drawn from one of the templates (``true``, conj, disj, conjdisj, disjconj)."""
    names = list(space.names)
    if len(names) < 2:
        raise ValueError("template guards need at least two options")
    template = template or rng.choice(["true", "conj", "disj", "conjdisj", "disjconj"])

    def lits(lo: int, hi: int) -> list[Formula]:
        k = rng.randint(lo, min(hi, len(names)))
        return [_random_literal(space, rng, n) for n in rng.sample(names, k)]

    if template == "true":
        return Const(True)
    if template == "conj":
        ls = lits(1, 3)
        return ls[0] if len(ls) == 1 else And(tuple(ls))
    if template == "disj":
        return Or(tuple(lits(2, 3)))
    if template == "conjdisj":
        return And(tuple(lits(1, 2)) + (Or(tuple(lits(2, 3))),))
    if template == "disjconj":
        return Or(tuple(lits(1, 2)) + (And(tuple(lits(2, 2))),))
    raise ValueError(f"unknown template {template!r}")


def random_subject(
    rng: random.Random,
    max_options: int = 6,
    max_domain: int = 4,
    n_locations: tuple[int, int] = (4, 8),
    name: str = "random",
    min_options: int = 2,
) -> SubjectSpec:
    """Random subject whose guards are all template-shaped and satisfiable."""
    if not 2 <= min_options <= max_options:
        raise ValueError("need 2 <= min_options <= max_options")
    n_opts = rng.randint(min_options, max_options)
    options = tuple(
        OptionDomain(f"o{i}", tuple(str(v) for v in range(rng.randint(2, max_domain)))) for i in range(n_opts)
    )
    space = ConfigSpace(options)
    every = [dict(zip(space.names, vals)) for vals in itertools.product(*(o.values for o in options))]
    n_locs = rng.randint(*n_locations)
    locations = []
    while len(locations) < n_locs:
        guard = random_template_guard(space, rng)
        if any(guard.evaluate(c) for c in every):
            locations.append((f"L{len(locations)}", guard))
    return SubjectSpec(name, space, tuple(locations))


# ---------------------------------------------------------------------------
# external runner


_RUNNER_KEYS = {"name", "space", "render", "tests", "coverage_sink", "timeout_sec", "working_dir", "env"}


@dataclass(frozen=True)
class RunnerSpec:
    """How to run a test suite under a configuration.

    Test commands are shell templates. ``{OPTS}`` expands to the rendered
    option arguments, ``{SINK}`` to the coverage sink path, ``{HASH}`` to the
    configuration hash and ``{PYTHON}`` to the current interpreter. The
    sink path is also exported as ``CFGINFER_SINK``.
    """

    space: ConfigSpace
    render: Mapping[str, Mapping[str, tuple[str, ...]]]
    tests: tuple[str, ...]
    coverage_sink: str
    timeout_sec: float = 30.0
    working_dir: Path = Path(".")
    env: Mapping[str, str] = field(default_factory=dict)
    name: str = "runner"

    def opts(self, config: Configuration) -> str:
        frags = []
        for opt in self.space.options:
            frags.extend(self.render[opt.name][config[opt.name]])
        return " ".join(shlex.quote(f) for f in frags)


def _runner_from_dict(doc: Any, base: Path, errors: list[str]) -> RunnerSpec | None:
    if not isinstance(doc, Mapping):
        errors.append("runner document must be a JSON object")
        return None
    unknown = set(doc) - _RUNNER_KEYS
    if unknown:
        errors.append(f"unknown fields: {sorted(unknown)}")
    space = _space_field(doc, errors)
    render = doc.get("render")
    rendered: dict[str, dict[str, tuple[str, ...]]] = {}
    if not isinstance(render, Mapping):
        errors.append("'render' must be an object")
    elif space is not None:
        for name in set(render) - set(space.names):
            errors.append(f"rendering for undeclared option {name!r}")
        for opt in space.options:
            per_value = render.get(opt.name)
            if not isinstance(per_value, Mapping):
                errors.append(f"missing rendering for option {opt.name!r}")
                continue
            rendered[opt.name] = {}
            for value in opt.values:
                frags = per_value.get(value)
                if not isinstance(frags, list) or not all(isinstance(f, str) for f in frags):
                    errors.append(f"missing rendering for {opt.name}={value}")
                    continue
                rendered[opt.name][value] = tuple(frags)
    tests = doc.get("tests")
    if not isinstance(tests, list) or not tests or not all(isinstance(t, str) for t in tests):
        errors.append("'tests' must be a nonempty list of command strings")
        tests = []
    for i, t in enumerate(tests):
        if "{OPTS}" not in t:
            errors.append(f"test #{i} lacks the {{OPTS}} placeholder")
    sink = doc.get("coverage_sink")
    if not isinstance(sink, str) or not sink:
        errors.append("'coverage_sink' must be a path template")
    timeout = doc.get("timeout_sec", 30)
    if not isinstance(timeout, (int, float)) or timeout <= 0:
        errors.append("'timeout_sec' must be positive")
    env = doc.get("env", {})
    if not isinstance(env, Mapping):
        errors.append("'env' must be an object")
    if errors or space is None:
        return None
    workdir = Path(doc.get("working_dir", "."))
    return RunnerSpec(
        space=space,
        render=rendered,
        tests=tuple(tests),
        coverage_sink=sink,
        timeout_sec=float(timeout),
        working_dir=workdir if workdir.is_absolute() else (base / workdir).resolve(),
        env={str(k): str(v) for k, v in env.items()},
        name=str(doc.get("name", "runner")),
    )


def read_sink(path: Path) -> set[str]:
    out = set()
    for line in path.read_text(encoding="utf-8").splitlines():
        token = line.strip()
        if token and not token.startswith("#"):
            out.add(token)
    return out


def config_hash(config: Configuration) -> str:
    return hashlib.sha1(config.canonical().encode()).hexdigest()[:12]


class CoverageCache:
    """Canonical configuration -> covered locations, persisted as JSON lines.

    The backing file is only appended to; later entries win when reloading.
    """

    def __init__(self, path: str | os.PathLike | None = None, fresh: bool = False):
        self.path = Path(path) if path is not None else None
        self.entries: dict[str, frozenset[str]] = {}
        self._lock = threading.Lock()
        if self.path is None:
            return
        if fresh and self.path.exists():
            self.path.unlink()
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    rec = json.loads(line)
                    self.entries[rec["config"]] = frozenset(rec["locations"])

    def __contains__(self, key: str) -> bool:
        return key in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, key: str) -> frozenset[str] | None:
        return self.entries.get(key)

    def put(self, key: str, locations: Iterable[str]) -> None:
        locs = frozenset(locations)
        with self._lock:
            self.entries[key] = locs
            if self.path is not None:
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with self.path.open("a", encoding="utf-8") as fh:
                    fh.write(json.dumps({"config": key, "locations": sorted(locs)}) + "\n")


def external_coverage(spec: RunnerSpec, config: Configuration, cache: CoverageCache | None = None) -> frozenset[str]:
    return ExternalOracle(spec, cache).coverage(config)


class ExternalOracle:
    """Runs ``spec.tests`` under a configuration and unions the sink contents.

    Nonzero exit codes are tolerated; a timeout or a missing sink is an
    :class:`OracleError`. With ``verify=True`` every fresh evaluation is run
    twice and differing coverage is reported as an error.
    """

    def __init__(self, spec: RunnerSpec, cache: CoverageCache | None = None, verify: bool = False):
        self.spec = spec
        self.cache = cache if cache is not None else CoverageCache()
        self.verify = verify
        self.spawns = 0
        self._lock = threading.Lock()

    def coverage(self, config: Configuration) -> frozenset[str]:
        key = config.canonical()
        hit = self.cache.get(key)
        if hit is not None:
            return hit
        result = self._execute(config)
        if self.verify:
            again = self._execute(config)
            if again != result:
                raise OracleError(config, "coverage differs between two runs of the same configuration")
        self.cache.put(key, result)
        return result

    def _execute(self, config: Configuration) -> frozenset[str]:
        spec = self.spec
        h = config_hash(config)
        sink = Path(spec.coverage_sink.replace("{HASH}", h))
        if not sink.is_absolute():
            sink = spec.working_dir / sink
        env = dict(os.environ)
        env.update(spec.env)
        env["CFGINFER_SINK"] = str(sink)
        env["CFGINFER_CONFIG"] = config.canonical()
        opts = spec.opts(config)
        covered: set[str] = set()
        for i, template in enumerate(spec.tests):
            cmd = (
                template.replace("{OPTS}", opts)
                .replace("{SINK}", shlex.quote(str(sink)))
                .replace("{HASH}", h)
                .replace("{PYTHON}", shlex.quote(sys.executable))
            )
            if sink.exists():
                sink.unlink()
            with self._lock:
                self.spawns += 1
            try:
                subprocess.run(
                    cmd, shell=True, cwd=spec.working_dir, env=env, timeout=spec.timeout_sec, capture_output=True
                )
            except subprocess.TimeoutExpired:
                raise OracleError(config, f"test #{i} ({template!r}) timed out after {spec.timeout_sec}s") from None
            try:
                covered |= read_sink(sink)
            except OSError as exc:
                raise OracleError(config, f"test #{i} ({template!r}) left no readable coverage sink {sink}: {exc}") from None
        if sink.exists():
            sink.unlink()
        return frozenset(covered)


# ---------------------------------------------------------------------------
# loading


def load_subject(path: str | os.PathLike) -> SubjectSpec | RunnerSpec:
    """Load a subject (guards) or runner (test commands) document, reporting every problem at once."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise SubjectError([f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}"]) from None
    errors: list[str] = []
    if isinstance(doc, Mapping) and "tests" in doc:
        spec: SubjectSpec | RunnerSpec | None = _runner_from_dict(doc, path.parent.resolve(), errors)
        source = "runner"
    else:
        spec = _subject_from_dict(doc, errors)
        source = "subject"
    if errors or spec is None:
        raise SubjectError(errors or ["unreadable document"], source)
    return spec


def subject_from_dict(doc: Mapping[str, Any]) -> SubjectSpec:
    errors: list[str] = []
    spec = _subject_from_dict(doc, errors)
    if errors or spec is None:
        raise SubjectError(errors)
    return spec


def make_oracle(spec: SubjectSpec | RunnerSpec, cache: CoverageCache | None = None, verify: bool = False):
    if isinstance(spec, SubjectSpec):
        return SyntheticOracle(spec)
    return ExternalOracle(spec, cache, verify)


def default_cache_path(spec: RunnerSpec) -> Path:
    base = os.environ.get(CACHE_DIR_ENV)
    root = Path(base) if base else spec.working_dir / ".cfginfer-cache"
    return root / f"{spec.name}.jsonl"
