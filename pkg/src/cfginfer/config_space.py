"""Option domains, configurations and pointwise union.

Values are opaque string tokens. A :class:`ConfigSpace` owns an ordered list
of :class:`OptionDomain`; every :class:`Configuration` and :class:`SettingSet`
keeps a reference to the space it was built for so that rendering and
complementation never need the space passed in again.
"""

from __future__ import annotations

import itertools
import math
import random
from collections.abc import Iterable, Iterator, Mapping
from dataclasses import dataclass, field
from typing import Any

DEFAULT_ENUMERATION_CAP = 100_000

_SPACE_KEYS = {"options", "default"}
_OPTION_KEYS = {"name", "values"}


class SpaceError(ValueError):
    """Invalid option domain, configuration or space document."""


class SpaceTooLarge(SpaceError):
    def __init__(self, size: int, cap: int):
        super().__init__(f"configuration space has {size} configurations, exceeding the cap of {cap}")
        self.size = size
        self.cap = cap


@dataclass(frozen=True)
class OptionDomain:
    name: str
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "values", tuple(str(v) for v in self.values))
        if not self.name:
            raise SpaceError("option name must be nonempty")
        if len(self.values) < 2:
            raise SpaceError(f"option {self.name!r} needs at least 2 values, got {len(self.values)}")
        if len(set(self.values)) != len(self.values):
            raise SpaceError(f"option {self.name!r} has duplicate values")

    @property
    def is_boolean(self) -> bool:
        return set(self.values) == {"0", "1"}

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True, eq=False)
class ConfigSpace:
    options: tuple[OptionDomain, ...]
    default_config: Configuration | None = None
    _position: dict[str, int] = field(init=False, repr=False)
    _domains: dict[str, frozenset[str]] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "options", tuple(self.options))
        position: dict[str, int] = {}
        for i, opt in enumerate(self.options):
            if opt.name in position:
                raise SpaceError(f"duplicate option name {opt.name!r}")
            position[opt.name] = i
        object.__setattr__(self, "_position", position)
        object.__setattr__(self, "_domains", {o.name: frozenset(o.values) for o in self.options})
        if self.default_config is not None:
            default = self.default_config
            if not isinstance(default, Configuration):
                default = self.config(default)
            elif default.names != self.names:
                raise SpaceError("default configuration does not match the space's options")
            object.__setattr__(self, "default_config", Configuration(self, default.values))

    @classmethod
    def from_dict(cls, doc: Mapping[str, Any]) -> ConfigSpace:
        """Build a space from its JSON document form."""
        if not isinstance(doc, Mapping):
            raise SpaceError("space document must be an object")
        unknown = set(doc) - _SPACE_KEYS
        if unknown:
            raise SpaceError(f"unknown space fields: {sorted(unknown)}")
        if "options" not in doc or not isinstance(doc["options"], list):
            raise SpaceError("space document needs an 'options' list")
        options = []
        for i, entry in enumerate(doc["options"]):
            if not isinstance(entry, Mapping):
                raise SpaceError(f"option #{i} must be an object")
            extra = set(entry) - _OPTION_KEYS
            if extra:
                raise SpaceError(f"option #{i}: unknown fields {sorted(extra)}")
            if "name" not in entry or "values" not in entry:
                raise SpaceError(f"option #{i}: needs 'name' and 'values'")
            if not isinstance(entry["values"], list):
                raise SpaceError(f"option #{i}: 'values' must be a list")
            options.append(OptionDomain(str(entry["name"]), tuple(str(v) for v in entry["values"])))
        space = cls(tuple(options))
        default = doc.get("default")
        if default is not None:
            space = cls(tuple(options), space.config(default))
        return space

    def to_dict(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"options": [{"name": o.name, "values": list(o.values)} for o in self.options]}
        if self.default_config is not None:
            doc["default"] = dict(self.default_config)
        return doc

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(o.name for o in self.options)

    @property
    def size(self) -> int:
        return math.prod(len(o) for o in self.options)

    def __len__(self) -> int:
        return len(self.options)

    def __contains__(self, name: object) -> bool:
        return name in self._position

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ConfigSpace):
            return NotImplemented
        return self.options == other.options

    def __hash__(self) -> int:
        return hash(self.options)

    def position(self, name: str) -> int:
        try:
            return self._position[name]
        except KeyError:
            raise SpaceError(f"unknown option {name!r}") from None

    def domain(self, name: str) -> OptionDomain:
        return self.options[self.position(name)]

    def domain_set(self, name: str) -> frozenset[str]:
        self.position(name)
        return self._domains[name]

    def config(self, assignment: Mapping[str, Any]) -> Configuration:
        """Validate a total assignment and return it as a configuration."""
        extra = set(assignment) - set(self._position)
        if extra:
            raise SpaceError(f"unknown options in configuration: {sorted(extra)}")
        values = []
        for opt in self.options:
            if opt.name not in assignment:
                raise SpaceError(f"configuration does not assign option {opt.name!r}")
            value = str(assignment[opt.name])
            if value not in self._domains[opt.name]:
                raise SpaceError(f"value {value!r} is not in the domain of {opt.name!r}")
            values.append(value)
        return Configuration(self, tuple(values))

    def parse_config(self, text: str) -> Configuration:
        """Inverse of :meth:`Configuration.canonical`."""
        assignment = {}
        for part in text.split(","):
            name, sep, value = part.partition("=")
            if not sep:
                raise SpaceError(f"malformed configuration entry {part!r}")
            assignment[name] = value
        return self.config(assignment)

    def config_at(self, index: int) -> Configuration:
        """The index-th configuration in lexicographic order (last option varies fastest)."""
        if not 0 <= index < self.size:
            raise IndexError(index)
        values = []
        for opt in reversed(self.options):
            index, r = divmod(index, len(opt))
            values.append(opt.values[r])
        return Configuration(self, tuple(reversed(values)))

    def settings(self, constraints: Mapping[str, Iterable[str]]) -> SettingSet:
        return SettingSet.build(self, constraints)


class Configuration(Mapping[str, str]):
    """A total, immutable assignment of one value to every option."""

    __slots__ = ("space", "values", "_hash")

    def __init__(self, space: ConfigSpace, values: tuple[str, ...]):
        self.space = space
        self.values = values
        self._hash = hash((space.names, values))

    def __getitem__(self, name: str) -> str:
        try:
            return self.values[self.space._position[name]]
        except KeyError:
            raise KeyError(name) from None

    def __iter__(self) -> Iterator[str]:
        return iter(self.space.names)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def names(self) -> tuple[str, ...]:
        return self.space.names

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Configuration):
            return self.values == other.values and self.space.names == other.space.names
        return super().__eq__(other)

    def __hash__(self) -> int:
        return self._hash

    def canonical(self) -> str:
        return ",".join(f"{n}={v}" for n, v in zip(self.space.names, self.values))

    def replace(self, **changes: str) -> Configuration:
        values = list(self.values)
        for name, value in changes.items():
            values[self.space.position(name)] = str(value)
        return self.space.config(dict(zip(self.space.names, values)))

    def __repr__(self) -> str:
        return f"Configuration({self.canonical()})"


class SettingSet(Mapping[str, frozenset[str]]):
    """Per-option value subsets; an option absent from the map is unconstrained.

    Every stored set is a nonempty proper subset of the option's domain. Sets
    equal to the full domain are dropped on construction, so an empty
    SettingSet denotes "no constraint".
    """

    __slots__ = ("space", "_items", "_map", "_hash")

    def __init__(self, space: ConfigSpace, items: tuple[tuple[str, frozenset[str]], ...]):
        self.space = space
        self._items = items
        self._map = dict(items)
        self._hash = hash(items)

    @classmethod
    def build(cls, space: ConfigSpace, constraints: Mapping[str, Iterable[str]]) -> SettingSet:
        kept = {}
        for name, values in constraints.items():
            domain = space.domain_set(name)
            vs = frozenset(str(v) for v in values)
            if not vs:
                raise SpaceError(f"empty value set for option {name!r}")
            if not vs <= domain:
                raise SpaceError(f"values {sorted(vs - domain)} are not in the domain of {name!r}")
            if vs != domain:
                kept[name] = vs
        items = tuple((n, kept[n]) for n in space.names if n in kept)
        return cls(space, items)

    @classmethod
    def top(cls, space: ConfigSpace) -> SettingSet:
        return cls(space, ())

    def __getitem__(self, name: str) -> frozenset[str]:
        return self._map[name]

    def __iter__(self) -> Iterator[str]:
        return (n for n, _ in self._items)

    def __len__(self) -> int:
        return len(self._items)

    def items(self):  # type: ignore[override]
        return self._items

    def __eq__(self, other: object) -> bool:
        if isinstance(other, SettingSet):
            return self._items == other._items
        return NotImplemented

    def __hash__(self) -> int:
        return self._hash

    def allows(self, assignment: Mapping[str, str]) -> bool:
        """True when the assignment meets every membership constraint."""
        return all(assignment[n] in vs for n, vs in self._items)

    def ordered_values(self, name: str) -> list[str]:
        vs = self._map[name]
        return [v for v in self.space.domain(name).values if v in vs]

    def __repr__(self) -> str:
        body = ", ".join(f"{n}:{{{','.join(self.ordered_values(n))}}}" for n, _ in self._items)
        return f"SettingSet({body})"


def pointwise_union(configs: Iterable[Configuration]) -> SettingSet:
    """Per-option union of the values taken by ``configs``.

    Options whose union covers their whole domain are left unconstrained.
    """
    it = iter(configs)
    try:
        first = next(it)
    except StopIteration:
        raise ValueError("pointwise_union needs at least one configuration") from None
    space = first.space
    seen: list[set[str]] = [{v} for v in first.values]
    for c in it:
        if c.space.names != space.names:
            raise SpaceError("configurations come from different spaces")
        for s, v in zip(seen, c.values):
            s.add(v)
    items = tuple(
        (opt.name, frozenset(s)) for opt, s in zip(space.options, seen) if len(s) < len(opt)
    )
    return SettingSet(space, items)


def one_way_covering_array(space: ConfigSpace, rng: random.Random) -> list[Configuration]:
    """Randomized 1-way covering array with ``max |domain|`` rows.

    Each option's shuffled value list is cycled down the rows, so every
    (option, value) pair appears at least once.
    """
    rows = max((len(o) for o in space.options), default=0)
    columns = []
    for opt in space.options:
        vals = list(opt.values)
        rng.shuffle(vals)
        columns.append([vals[i % len(vals)] for i in range(rows)])
    out: list[Configuration] = []
    seen = set()
    for r in range(rows):
        c = Configuration(space, tuple(col[r] for col in columns))
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def all_configurations(space: ConfigSpace, cap: int = DEFAULT_ENUMERATION_CAP) -> list[Configuration]:
    size = space.size
    if size > cap:
        raise SpaceTooLarge(size, cap)
    return [Configuration(space, vals) for vals in itertools.product(*(o.values for o in space.options))]


def complete_randomly(
    partial: Mapping[str, Iterable[str]], space: ConfigSpace, rng: random.Random
) -> Configuration:
    """Random configuration meeting ``partial``; unconstrained options are uniform."""
    values = []
    for opt in space.options:
        allowed = partial.get(opt.name)
        if allowed is None:
            values.append(rng.choice(opt.values))
        else:
            allowed = set(allowed)
            choices = [v for v in opt.values if v in allowed]
            if not choices:
                raise SpaceError(f"no admissible value for option {opt.name!r}")
            values.append(rng.choice(choices))
    return Configuration(space, tuple(values))


def random_configuration(space: ConfigSpace, rng: random.Random) -> Configuration:
    return Configuration(space, tuple(rng.choice(o.values) for o in space.options))
