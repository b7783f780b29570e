"""Reading and writing Praat TextGrid files (interval tiers only).

Both the "long" (labelled) and "short" text forms are accepted.  Praat's own
reader treats a text file as a stream of values and skips the labels
(``xmin =``, ``intervals [3]:``, ...), and the parser here does the same, so
the two forms share one code path.

Output is always UTF-8 without a byte-order mark.
"""

from __future__ import annotations

import bisect
import codecs
import functools
import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Iterable, Iterator, Sequence

EPS = 1e-9

LONG = "long"
SHORT = "short"


class TextGridError(ValueError):
    """Raised for any malformed or unsupported TextGrid input."""

    def __init__(self, message: str, line: int | None = None, tier: int | None = None):
        self.line = line
        self.tier = tier
        where = []
        if line is not None:
            where.append(f"line {line}")
        if tier is not None:
            where.append(f"tier {tier}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class PointTierError(TextGridError):
    """Raised when a file contains a point tier (TextTier)."""


class TierLookupError(LookupError):
    """Raised by :func:`extract_tier` when a pattern matches zero or several tiers."""

    def __init__(self, pattern: str, matches: Sequence[str]):
        self.pattern = pattern
        self.matches = tuple(matches)
        if matches:
            msg = f"pattern {pattern!r} is ambiguous, matches: " + ", ".join(map(repr, matches))
        else:
            msg = f"no tier matches pattern {pattern!r}"
        super().__init__(msg)


@dataclass(frozen=True)
class Interval:
    xmin: float
    xmax: float
    text: str = ""

    @property
    def duration(self) -> float:
        return self.xmax - self.xmin

    def __post_init__(self):
        if not self.xmin < self.xmax:
            raise ValueError(f"interval must have xmin < xmax, got [{self.xmin}, {self.xmax}]")


@dataclass(frozen=True)
class Tier:
    name: str
    xmin: float
    xmax: float
    intervals: tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", tuple(self.intervals))

    def __len__(self) -> int:
        return len(self.intervals)

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __getitem__(self, i):
        return self.intervals[i]

    @property
    def duration(self) -> float:
        return self.xmax - self.xmin

    @functools.cached_property
    def _starts(self) -> tuple[float, ...]:
        return tuple(iv.xmin for iv in self.intervals)

    def starts(self) -> list[float]:
        return list(self._starts)

    def interval_at(self, t: float) -> Interval | None:
        """Return the interval with ``xmin <= t < xmax``, or None."""
        i = bisect.bisect_right(self._starts, t) - 1
        if i < 0:
            return None
        iv = self.intervals[i]
        if t < iv.xmax or (i == len(self.intervals) - 1 and t <= iv.xmax):
            return iv
        return None

    def check(self, index: int | None = None) -> None:
        """Verify ordering, contiguity and bounds; raise TextGridError otherwise."""
        if self.__dict__.get("_valid"):
            return
        if not self.xmin < self.xmax + EPS:
            raise TextGridError(f"tier {self.name!r} has xmin > xmax", tier=index)
        ivs = self.intervals
        if not ivs or (ivs[0].xmin >= self.xmin - EPS and ivs[-1].xmax <= self.xmax + EPS
                       and all(-EPS <= b.xmin - a.xmax <= EPS for a, b in zip(ivs, ivs[1:]))):
            # tiers are immutable, so one successful check is enough
            self.__dict__["_valid"] = True
            return
        prev = None
        for k, iv in enumerate(self.intervals, start=1):
            if iv.xmin < self.xmin - EPS or iv.xmax > self.xmax + EPS:
                raise TextGridError(
                    f"interval {k} [{iv.xmin}, {iv.xmax}] outside tier domain "
                    f"[{self.xmin}, {self.xmax}]", tier=index)
            if prev is not None:
                if iv.xmin < prev.xmax - EPS:
                    raise TextGridError(f"interval {k} overlaps interval {k - 1}", tier=index)
                if iv.xmin > prev.xmax + EPS:
                    raise TextGridError(
                        f"gap between interval {k - 1} (ends {prev.xmax}) and "
                        f"interval {k} (starts {iv.xmin})", tier=index)
            prev = iv

    def with_intervals(self, intervals: Iterable[Interval]) -> "Tier":
        return Tier(self.name, self.xmin, self.xmax, tuple(intervals))

    def labeled(self) -> list[Interval]:
        """Intervals whose text is not blank."""
        return [iv for iv in self.intervals if iv.text.strip()]

    @classmethod
    def from_segments(cls, name: str, xmin: float, xmax: float,
                      segments: Iterable[tuple[float, float, str]]) -> "Tier":
        """Build a contiguous tier from sorted, disjoint ``(start, end, text)``
        segments, filling the holes with empty intervals."""
        out: list[Interval] = []
        cursor = xmin
        for start, end, text in segments:
            if start > cursor + EPS:
                out.append(Interval(cursor, start, ""))
            elif start < cursor - EPS:
                raise ValueError(f"segment starting at {start} overlaps previous one")
            else:
                start = cursor
            out.append(Interval(start, end, text))
            cursor = end
        if xmax > cursor + EPS:
            out.append(Interval(cursor, xmax, ""))
        return cls(name, xmin, xmax, tuple(out))


@dataclass(frozen=True)
class TextGrid:
    xmin: float
    xmax: float
    tiers: tuple[Tier, ...] = field(default_factory=tuple)

    def __post_init__(self):
        object.__setattr__(self, "tiers", tuple(self.tiers))

    def __len__(self) -> int:
        return len(self.tiers)

    def __iter__(self) -> Iterator[Tier]:
        return iter(self.tiers)

    def __getitem__(self, key):
        if isinstance(key, str):
            for tier in self.tiers:
                if tier.name == key:
                    return tier
            raise KeyError(key)
        return self.tiers[key]

    @property
    def names(self) -> list[str]:
        return [t.name for t in self.tiers]

    def check(self) -> None:
        for i, tier in enumerate(self.tiers, start=1):
            if abs(tier.xmin - self.xmin) > EPS or abs(tier.xmax - self.xmax) > EPS:
                raise TextGridError(
                    f"tier {tier.name!r} domain [{tier.xmin}, {tier.xmax}] differs from "
                    f"grid domain [{self.xmin}, {self.xmax}]", tier=i)
            tier.check(i)

    def with_tiers(self, tiers: Iterable[Tier]) -> "TextGrid":
        return TextGrid(self.xmin, self.xmax, tuple(tiers))


def structurally_equal(a: TextGrid, b: TextGrid, eps: float = EPS) -> bool:
    """Same tier names, interval texts and times (within ``eps``)."""
    def close(x, y):
        return abs(x - y) <= eps

    if not (close(a.xmin, b.xmin) and close(a.xmax, b.xmax) and len(a.tiers) == len(b.tiers)):
        return False
    for ta, tb in zip(a.tiers, b.tiers):
        if ta.name != tb.name or not close(ta.xmin, tb.xmin) or not close(ta.xmax, tb.xmax):
            return False
        if len(ta.intervals) != len(tb.intervals):
            return False
        for ia, ib in zip(ta.intervals, tb.intervals):
            if ia.text != ib.text or not close(ia.xmin, ib.xmin) or not close(ia.xmax, ib.xmax):
                return False
    return True


# -- decoding ---------------------------------------------------------------

def decode(data: bytes) -> str:
    """Decode TextGrid bytes: UTF-16 if a BOM says so, otherwise UTF-8 (BOM optional)."""
    try:
        if data.startswith(codecs.BOM_UTF16_LE) or data.startswith(codecs.BOM_UTF16_BE):
            return data.decode("utf-16")
        if data.startswith(codecs.BOM_UTF8):
            return data[len(codecs.BOM_UTF8):].decode("utf-8")
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        line = data[:exc.start].count(b"\n") + 1
        raise TextGridError(f"undecodable bytes: {exc.reason}", line=line) from None


# -- parsing ----------------------------------------------------------------

# keys, brackets, comments and whitespace.  Whatever follows a greedy skip
# matches one of the token alternatives (or the end), so it never backtracks.
_SKIP = r"(?:\s+|\[[^\]\n]{0,64}\]|![^\n]*|[A-Za-z_][\w?-]*\??|[=:])*"
# one match per meaningful token
_TOKEN = re.compile(_SKIP + r'''(?:
    (?P<str>"(?:[^"]|"")*")
  | (?P<num>[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)(?![\w.])
  | (?P<flag><[A-Za-z]+>)
  | (?P<bad>[^\sA-Za-z_])
  | \Z
)''', re.X | re.S)
_KINDS = ("str", "num", "flag", "bad")


class _Tokens:
    """All tokens of a file, scanned up front; positions are token indices
    and are turned into line numbers only when an error is reported."""

    def __init__(self, text: str):
        self.text = text
        self.items = _TOKEN.findall(text)
        # the end-of-text alternative leaves empty items behind
        while self.items and not any(self.items[-1]):
            self.items.pop()
        self.i = 0
        self._newlines: list[int] | None = None
        self._starts: list[int] | None = None
        self.tier: int | None = None

    def line_of(self, index: int | None) -> int:
        if self._newlines is None:
            self._newlines = [m.start() for m in re.finditer("\n", self.text)]
        if index is None or index >= len(self.items):
            pos = len(self.text)
        else:
            if self._starts is None:
                self._starts = [m.start(m.lastgroup) if m.lastgroup else m.end()
                                for m in _TOKEN.finditer(self.text)]
            pos = self._starts[index]
        return bisect.bisect_right(self._newlines, pos - 1) + 1 if pos else 1

    def error(self, message: str, index: int | None = None) -> TextGridError:
        return TextGridError(message, line=self.line_of(index), tier=self.tier)

    @staticmethod
    def kind(item: tuple[str, ...]) -> tuple[str, str]:
        for kind, value in zip(_KINDS, item):
            if value:
                return kind, value
        raise AssertionError("empty token")

    def next(self) -> tuple[str, str, int]:
        if self.i >= len(self.items):
            raise self.error("unexpected end of file")
        index = self.i
        self.i += 1
        kind, value = self.kind(self.items[index])
        if kind == "bad":
            raise self.error(f"unexpected character {value!r}", index)
        if kind == "str":
            value = value[1:-1]
        return kind, value, index

    def string(self, what: str) -> str:
        kind, value, pos = self.next()
        if kind != "str":
            raise self.error(f"expected quoted {what}, found {value!r}", pos)
        return value.replace('""', '"')

    def number(self, what: str) -> float:
        kind, value, pos = self.next()
        if kind != "num":
            raise self.error(f"expected number for {what}, found {value!r}", pos)
        return float(value)

    def count(self, what: str) -> int:
        kind, value, pos = self.next()
        if kind != "num" or not re.fullmatch(r"\d+", value):
            raise self.error(f"expected non-negative integer for {what}, found {value!r}", pos)
        return int(value)

    def intervals(self, n: int) -> list[tuple[float, float, str]] | None:
        """Fast path: the next ``n`` (number, number, string) triples, or
        None if anything is off so the caller can diagnose token by token."""
        chunk = self.items[self.i:self.i + 3 * n]
        if len(chunk) != 3 * n:
            return None
        try:
            out = [(float(a[1]), float(b[1]), t[0][1:-1].replace('""', '"'))
                   for a, b, t in zip(chunk[0::3], chunk[1::3], chunk[2::3])
                   if a[1] and b[1] and t[0]]
        except ValueError:
            return None
        if len(out) != n or any(not a < b for a, b, _ in out):
            return None
        self.i += 3 * n
        return out

    def done(self) -> bool:
        if self.i < len(self.items):
            kind, value = self.kind(self.items[self.i])
            raise self.error(f"trailing content {value!r}", self.i)
        return True


def detect_form(text: str) -> str:
    return LONG if re.search(r"^\s*item\s*\[", text, re.M) else SHORT


def parse_textgrid(data: bytes | str) -> TextGrid:
    """Parse TextGrid bytes (or already decoded text) into a :class:`TextGrid`.

    Raises :class:`TextGridError` (with ``line`` and ``tier`` attributes) on
    malformed input and :class:`PointTierError` for point tiers.
    """
    text = decode(data) if isinstance(data, (bytes, bytearray)) else data
    toks = _Tokens(text)
    try:
        file_type = toks.string("file type")
        object_class = toks.string("object class")
    except TextGridError as exc:
        raise TextGridError("malformed header: " + str(exc).split(" (")[0], line=exc.line) from None
    if file_type != "ooTextFile":
        raise TextGridError(f"malformed header: file type {file_type!r} is not 'ooTextFile'", line=1)
    if object_class != "TextGrid":
        raise TextGridError(f"malformed header: object class {object_class!r} is not 'TextGrid'", line=2)

    xmin = toks.number("grid xmin")
    xmax = toks.number("grid xmax")
    kind, value, pos = toks.next()
    if kind != "flag":
        raise toks.error(f"expected <exists> or <absent>, found {value!r}", pos)
    if value == "<absent>":
        toks.done()
        return TextGrid(xmin, xmax, ())
    if value != "<exists>":
        raise toks.error(f"unknown flag {value}", pos)
    n_tiers = toks.count("tier count")

    tiers = []
    for t in range(1, n_tiers + 1):
        toks.tier = t
        kind, tier_class, pos = toks.next()
        if kind != "str":
            raise toks.error(f"expected tier class, found {tier_class!r}", pos)
        if tier_class == "TextTier":
            raise PointTierError("point tiers (TextTier) are not supported",
                                 line=toks.line_of(pos), tier=t)
        if tier_class != "IntervalTier":
            raise TextGridError(f"unsupported tier class {tier_class!r}",
                                line=toks.line_of(pos), tier=t)
        name = toks.string("tier name")
        txmin = toks.number("tier xmin")
        txmax = toks.number("tier xmax")
        n = toks.count("interval count")
        first = toks.i
        fast = toks.intervals(n)
        intervals = []
        if fast is not None:
            intervals = [(Interval(a, b, label), first + 3 * k)
                         for k, (a, b, label) in enumerate(fast)]
        for _ in range(n if fast is None else 0):
            kind, value, pos = toks.next()
            if kind != "num":
                raise toks.error(f"expected number for interval xmin, found {value!r}", pos)
            a = float(value)
            b = toks.number("interval xmax")
            label = toks.string("interval text")
            if not a < b:
                raise TextGridError(f"interval [{a}, {b}] has xmin >= xmax",
                                    line=toks.line_of(pos), tier=t)
            intervals.append((Interval(a, b, label), pos))
        tier = Tier(name, txmin, txmax, tuple(iv for iv, _ in intervals))
        try:
            tier.check(t)
        except TextGridError as exc:
            # locate the offending interval for the line number
            k = _bad_interval_index(tier)
            line = toks.line_of(intervals[k][1]) if k is not None else None
            raise TextGridError(str(exc).rsplit(" (", 1)[0], line=line, tier=t) from None
        tiers.append(tier)
    toks.tier = None
    toks.done()
    grid = TextGrid(xmin, xmax, tuple(tiers))
    grid.check()
    return grid


def _bad_interval_index(tier: Tier) -> int | None:
    prev = None
    for k, iv in enumerate(tier.intervals):
        if iv.xmin < tier.xmin - EPS or iv.xmax > tier.xmax + EPS:
            return k
        if prev is not None and abs(iv.xmin - prev.xmax) > EPS:
            return k
        prev = iv
    return None


def read_textgrid(path) -> TextGrid:
    with open(path, "rb") as fh:
        return parse_textgrid(fh.read())


# -- serialization ----------------------------------------------------------

def format_time(x: float) -> str:
    """Shortest decimal that round-trips, capped at 16 significant digits,
    in plain (non-exponent) notation with trailing zeros trimmed."""
    r = repr(float(x))
    if "e" not in r and "n" not in r and len(r.lstrip("-0.").replace(".", "")) <= 16:
        # plain repr already is the answer up to trailing zeros
        if r.endswith(".0"):
            r = r[:-2]
        return "0" if r == "-0" else r
    g = "%.16g" % x
    if "e" not in g and "n" not in g:
        return "0" if g == "-0" else g
    d = Decimal(r)
    if len(d.as_tuple().digits) > 16:
        d = Decimal("%.16g" % x)
    s = format(d, "f")
    if "." in s:
        s = s.rstrip("0").rstrip(".")
    if s in ("-0", ""):
        s = "0"
    return s


def _quote(text: str) -> str:
    return '"' + text.replace('"', '""') + '"'


def _times(tier: Tier) -> dict[float, str]:
    # neighbouring intervals share boundaries, so format each value once
    values = {iv.xmin for iv in tier.intervals}
    values.update(iv.xmax for iv in tier.intervals)
    out = {}
    for v in values:
        r = repr(v)
        # at most 16 digits fit in 17 characters with the point
        if len(r) <= 17 and "e" not in r and "n" not in r and r != "-0.0":
            out[v] = r[:-2] if r.endswith(".0") else r
        else:
            out[v] = format_time(v)
    return out


def serialize_textgrid(grid: TextGrid, form: str = LONG) -> bytes:
    """Render ``grid`` as UTF-8 TextGrid text in ``form`` ("long" or "short")."""
    if form not in (LONG, SHORT):
        raise ValueError(f"form must be 'long' or 'short', got {form!r}")
    grid.check()
    f = format_time
    out: list[str] = ['File type = "ooTextFile"', 'Object class = "TextGrid"', ""]
    if form == LONG:
        out += [f"xmin = {f(grid.xmin)} ", f"xmax = {f(grid.xmax)} "]
        if not grid.tiers:
            out.append("tiers? <absent> ")
        else:
            out += ["tiers? <exists> ", f"size = {len(grid.tiers)} ", "item []: "]
        for i, tier in enumerate(grid.tiers, start=1):
            out += [
                f"    item [{i}]:",
                '        class = "IntervalTier" ',
                f"        name = {_quote(tier.name)} ",
                f"        xmin = {f(tier.xmin)} ",
                f"        xmax = {f(tier.xmax)} ",
                f"        intervals: size = {len(tier.intervals)} ",
            ]
            t = _times(tier)
            for k, iv in enumerate(tier.intervals, start=1):
                out += [
                    f"        intervals [{k}]:",
                    f"            xmin = {t[iv.xmin]} ",
                    f"            xmax = {t[iv.xmax]} ",
                    f"            text = {_quote(iv.text)} ",
                ]
    else:
        out += [f(grid.xmin), f(grid.xmax)]
        if not grid.tiers:
            out.append("<absent>")
        else:
            out += ["<exists>", str(len(grid.tiers))]
        for tier in grid.tiers:
            out += ['"IntervalTier"', _quote(tier.name), f(tier.xmin), f(tier.xmax),
                    str(len(tier.intervals))]
            t = _times(tier)
            for iv in tier.intervals:
                out += [t[iv.xmin], t[iv.xmax], _quote(iv.text)]
    return ("\n".join(out) + "\n").encode("utf-8")


def write_textgrid(grid: TextGrid, path, form: str = LONG) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize_textgrid(grid, form))


# -- lookup -----------------------------------------------------------------

def extract_tier(grid: TextGrid, name_pattern: str, match: str = "suffix") -> Tier:
    """Return the single tier whose name equals (``match="exact"``) or ends
    with (``match="suffix"``) ``name_pattern``.

    An exact name match always wins over suffix matches.
    """
    if match not in ("exact", "suffix"):
        raise ValueError(f"match must be 'exact' or 'suffix', got {match!r}")
    exact = [t for t in grid.tiers if t.name == name_pattern]
    if len(exact) == 1:
        return exact[0]
    if match == "exact" or exact:
        if len(exact) > 1:
            raise TierLookupError(name_pattern, [t.name for t in exact])
        raise TierLookupError(name_pattern, [])
    found = [t for t in grid.tiers if t.name.endswith(name_pattern)]
    if len(found) != 1:
        raise TierLookupError(name_pattern, [t.name for t in found])
    return found[0]
