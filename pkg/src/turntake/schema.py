"""Turn-taking label inventories and the label grammar.

A label is one base label or two distinct base labels joined by ``_`` in
alphabetical order, optionally followed by ``@`` to flag annotator
uncertainty::

    hold    change_hold    change_question@

Base labels come from a per-layer inventory (IPU or PCOMP).  Markers such as
``<noise>`` and empty intervals are not labels at all; :func:`parse_token`
returns :data:`NON_LABEL` for them.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Mapping


class Layer(str, enum.Enum):
    IPU = "IPU"
    PCOMP = "PCOMP"

    def __str__(self) -> str:
        return self.value


IPU_LABELS: tuple[str, ...] = (
    "hold", "incomplete-hold", "change", "question", "trail-off", "self-interruption", "hrt",
)

PCOMP_LABELS: tuple[str, ...] = (
    "hold", "cont", "change", "part", "q-part", "question", "hes", "coll", "hrt",
    "disruption", "incomplete",
)

_INVENTORIES: dict[Layer, tuple[str, ...]] = {
    Layer.IPU: IPU_LABELS,
    Layer.PCOMP: PCOMP_LABELS,
}

# labels that may only occur inside a combination
_BOUND_ONLY: dict[Layer, frozenset[str]] = {
    Layer.IPU: frozenset(),
    Layer.PCOMP: frozenset({"coll"}),
}

UNCERTAIN_MARK = "@"
SEPARATOR = "_"


def inventory(layer: Layer | str) -> tuple[str, ...]:
    """Base labels of ``layer`` in their canonical table order."""
    return _INVENTORIES[Layer(layer)]


def register_inventory(layer: Layer | str, labels: Iterable[str],
                       bound_only: Iterable[str] = ()) -> None:
    """Replace the inventory of ``layer``.

    This is the configuration hook for applying the grammar to other corpora.
    Names must not contain ``_`` or ``@``.
    """
    layer = Layer(layer)
    labels = tuple(labels)
    for name in labels:
        if not name or SEPARATOR in name or UNCERTAIN_MARK in name or name != name.strip():
            raise ValueError(f"invalid base label name {name!r}")
    if len(set(labels)) != len(labels):
        raise ValueError("duplicate base label names")
    bound = frozenset(bound_only)
    if not bound <= set(labels):
        raise ValueError("bound-only labels must belong to the inventory")
    _INVENTORIES[layer] = labels
    _BOUND_ONLY[layer] = bound


def reset_inventories() -> None:
    _INVENTORIES[Layer.IPU] = IPU_LABELS
    _INVENTORIES[Layer.PCOMP] = PCOMP_LABELS
    _BOUND_ONLY[Layer.IPU] = frozenset()
    _BOUND_ONLY[Layer.PCOMP] = frozenset({"coll"})


# -- errors -----------------------------------------------------------------

class LabelError(ValueError):
    """Base class of label grammar errors."""

    rule = "label"


class UnknownLabel(LabelError):
    def __init__(self, name: str, layer: Layer):
        self.name = name
        self.layer = layer
        other = [l for l in Layer if l is not layer and name in inventory(l)]
        hint = f" (it is a {other[0].value} label)" if other else ""
        super().__init__(f"unknown {layer.value} label {name!r}{hint}")


class MalformedCombination(LabelError):
    def __init__(self, text: str, reason: str):
        self.text = text
        self.reason = reason
        super().__init__(f"malformed label {text!r}: {reason}")


class LoneColl(LabelError):
    rule = "coll"

    def __init__(self, text: str):
        self.text = text
        super().__init__(f"label {text!r} must be combined with another label")


# -- values -----------------------------------------------------------------

class _NonLabel:
    """Singleton for tokens that are not turn-taking labels (markers, blanks)."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "NON_LABEL"

    def __bool__(self) -> bool:
        return False


NON_LABEL = _NonLabel()


class Outcome(str, enum.Enum):
    """Distinguished results of grouping a combined label."""

    MIXED = "Mixed"
    RESIDUE = "Residue"

    def __str__(self) -> str:
        return self.value


MIXED = Outcome.MIXED
RESIDUE = Outcome.RESIDUE


@dataclass(frozen=True, order=True)
class LabelExpr:
    layer: Layer
    parts: tuple[str, ...]
    uncertain: bool = False

    def __post_init__(self):
        object.__setattr__(self, "layer", Layer(self.layer))
        object.__setattr__(self, "parts", tuple(sorted(self.parts)))

    @property
    def combined(self) -> bool:
        return len(self.parts) > 1

    @property
    def single(self) -> bool:
        return len(self.parts) == 1

    def certain(self) -> "LabelExpr":
        return LabelExpr(self.layer, self.parts, False) if self.uncertain else self

    def text(self) -> str:
        return canonical_text(self)

    def __str__(self) -> str:
        return canonical_text(self)

    def __contains__(self, name: str) -> bool:
        return name in self.parts


def is_marker(text: str) -> bool:
    """True for blank text and ``<...>`` markers such as ``<noise>``."""
    t = text.strip()
    return not t or (t.startswith("<") and t.endswith(">"))


def parse_label(layer: Layer | str, text: str) -> LabelExpr:
    """Parse ``text`` as a label of ``layer``.

    Matching is exact and case-sensitive; only surrounding whitespace is
    forgiven.  Combinations given in non-alphabetical order are accepted and
    canonicalised.
    """
    layer = Layer(layer)
    raw = text
    text = text.strip()
    if not text:
        raise MalformedCombination(raw, "empty label")
    uncertain = text.endswith(UNCERTAIN_MARK)
    body = text[:-1] if uncertain else text
    if UNCERTAIN_MARK in body:
        raise MalformedCombination(raw, "'@' may only appear once, at the end")
    parts = body.split(SEPARATOR)
    if any(not p for p in parts):
        raise MalformedCombination(raw, "empty component")
    if len(parts) > 2:
        raise MalformedCombination(raw, f"{len(parts)} components, at most 2 allowed")
    names = inventory(layer)
    for p in parts:
        if p not in names:
            raise UnknownLabel(p, layer)
    if len(parts) == 2 and parts[0] == parts[1]:
        raise MalformedCombination(raw, "duplicated component")
    if len(parts) == 1 and parts[0] in _BOUND_ONLY[layer]:
        raise LoneColl(raw)
    return LabelExpr(layer, tuple(parts), uncertain)


def parse_token(layer: Layer | str, text: str) -> LabelExpr | _NonLabel:
    """Like :func:`parse_label` but returns :data:`NON_LABEL` for blanks and markers."""
    if is_marker(text):
        return NON_LABEL
    return parse_label(layer, text)


def canonical_text(label: LabelExpr) -> str:
    return SEPARATOR.join(label.parts) + (UNCERTAIN_MARK if label.uncertain else "")


# -- macro categories -------------------------------------------------------

@dataclass(frozen=True)
class MacroScheme:
    """Grouping of a layer's base labels into coarser categories.

    ``weak`` labels carry only a default category: inside a combination
    with a label that is not weak, the other label decides (a turn-medial
    question ``hold_question`` is a kind of hold).  ``representatives``
    names the base label that stands for a whole category when a combined
    label is collapsed for plotting.
    """

    name: str
    layer: Layer
    mapping: Mapping[str, str]
    weak: frozenset[str] = frozenset()
    representatives: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "layer", Layer(self.layer))
        object.__setattr__(self, "mapping", dict(self.mapping))
        object.__setattr__(self, "weak", frozenset(self.weak))
        object.__setattr__(self, "representatives", dict(self.representatives))

    def __hash__(self) -> int:
        return hash((self.name, self.layer))

    @property
    def categories(self) -> list[str]:
        return list(dict.fromkeys(self.mapping.values()))

    def check_total(self) -> None:
        missing = [n for n in inventory(self.layer) if n not in self.mapping]
        if missing:
            raise ValueError(f"scheme {self.name!r} does not map {missing}")

    def deciding_parts(self, label: LabelExpr) -> tuple[str, ...]:
        strong = tuple(p for p in label.parts if p not in self.weak)
        return strong or label.parts


def macro_category(label: LabelExpr, scheme: MacroScheme) -> str | Outcome:
    """Category shared by the deciding parts of ``label``, else :data:`MIXED`."""
    if label.layer is not scheme.layer:
        raise ValueError(f"scheme {scheme.name!r} is for {scheme.layer.value}, "
                         f"label is {label.layer.value}")
    cats = {scheme.mapping[p] for p in scheme.deciding_parts(label)}
    if len(cats) == 1:
        return cats.pop()
    return MIXED


def normalize_for_dynamics(label: LabelExpr, scheme: MacroScheme) -> str | Outcome:
    """Collapse ``label`` to one plotting category.

    Uncertainty is dropped; a single label stands for itself; a combination
    becomes its deciding part when only one part decides, the
    representative of the shared category when both parts agree, and
    :data:`RESIDUE` otherwise.
    """
    if label.single:
        return label.parts[0]
    deciding = scheme.deciding_parts(label)
    if len(deciding) == 1:
        return deciding[0]
    cat = macro_category(label, scheme)
    if cat is MIXED:
        return RESIDUE
    return scheme.representatives.get(cat, cat)


IPU_TURN_TAKING = MacroScheme(
    "turn-taking", Layer.IPU,
    {
        "hold": "turn-hold", "incomplete-hold": "turn-hold",
        "change": "turn-change", "question": "turn-change",
        "self-interruption": "turn-change", "trail-off": "turn-change",
        "hrt": "hrt",
    },
    representatives={"turn-hold": "hold", "turn-change": "change", "hrt": "hrt"},
)

IPU_COMPLETENESS = MacroScheme(
    "completeness", Layer.IPU,
    {
        "hold": "complete", "change": "complete", "question": "complete",
        "incomplete-hold": "incomplete", "self-interruption": "incomplete",
        "trail-off": "incomplete",
        "hrt": "hrt",
    },
)

PCOMP_TURN_TAKING = MacroScheme(
    "turn-taking", Layer.PCOMP,
    {
        "hold": "turn-hold", "cont": "turn-hold", "part": "turn-hold", "hes": "turn-hold",
        "q-part": "turn-hold", "disruption": "turn-hold", "coll": "turn-hold",
        "change": "turn-change", "question": "turn-change", "incomplete": "turn-change",
        "hrt": "hrt",
    },
    weak=frozenset({"part", "hes", "q-part", "question", "coll"}),
    representatives={"turn-hold": "hold", "turn-change": "change", "hrt": "hrt"},
)

SCHEMES: dict[tuple[Layer, str], MacroScheme] = {
    (Layer.IPU, "turn-taking"): IPU_TURN_TAKING,
    (Layer.IPU, "completeness"): IPU_COMPLETENESS,
    (Layer.PCOMP, "turn-taking"): PCOMP_TURN_TAKING,
}


def get_scheme(layer: Layer | str, name: str = "turn-taking") -> MacroScheme:
    try:
        return SCHEMES[(Layer(layer), name)]
    except KeyError:
        names = sorted(n for (l, n) in SCHEMES if l is Layer(layer))
        raise ValueError(f"no {Layer(layer).value} scheme {name!r}; available: {names}") from None


def label_sort_key(layer: Layer | str, text: str) -> tuple:
    """Order canonical label texts: inventory order for singles, then combinations."""
    names = inventory(layer)
    body = text.rstrip(UNCERTAIN_MARK)
    parts = body.split(SEPARATOR)
    idx = tuple(names.index(p) if p in names else len(names) for p in parts)
    return (len(parts), idx if len(parts) == 1 else (), body, text.endswith(UNCERTAIN_MARK))
