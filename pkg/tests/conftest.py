import random
import string

import pytest

from turntake.conversation import Conversation, SpeakerTiers
from turntake.textgrid import Interval, TextGrid, Tier

LABEL_CHARS = string.ascii_letters + string.digits + ' "\n\t_@<>-äöüß€'


def random_label(rng: random.Random) -> str:
    n = rng.choice([0, 0, 1, 3, 8, 20])
    return "".join(rng.choice(LABEL_CHARS) for _ in range(n))


def random_tier(rng: random.Random, name: str, xmin: float, xmax: float,
                max_intervals: int = 500) -> Tier:
    n = rng.randint(0, max_intervals)
    if n == 0:
        return Tier(name, xmin, xmax, ())
    cuts = sorted(rng.uniform(xmin, xmax) for _ in range(n - 1))
    bounds = [xmin, *cuts, xmax]
    ivs = []
    for a, b in zip(bounds, bounds[1:]):
        if b > a:
            ivs.append(Interval(a, b, random_label(rng)))
    # rebuild contiguity after dropping zero-length pieces
    fixed = []
    cursor = xmin
    for iv in ivs:
        fixed.append(Interval(cursor, iv.xmax, iv.text))
        cursor = iv.xmax
    return Tier(name, xmin, xmax, tuple(fixed))


def random_grid(rng: random.Random, max_intervals: int = 500) -> TextGrid:
    xmin = rng.choice([0.0, 0.0, rng.uniform(0, 10)])
    xmax = xmin + rng.uniform(0.5, 4000)
    tiers = [random_tier(rng, random_label(rng) or f"tier{k}", xmin, xmax, max_intervals)
             for k in range(rng.randint(1, 8))]
    return TextGrid(xmin, xmax, tuple(tiers))


def make_conversation(spec: dict, duration: float = 100.0, name: str = "conv") -> Conversation:
    """``spec`` maps speaker -> {"ORT"/"IPU"/"PCOMP": [(start, end, text), ...]}."""
    speakers = []
    for spk, layers in spec.items():
        tiers = {}
        for role in ("ORT", "IPU", "PCOMP"):
            segs = layers.get(role)
            tiers[role] = None if segs is None else Tier.from_segments(
                f"{role}-{spk}", 0.0, duration, sorted(segs))
        speakers.append(SpeakerTiers(spk, tiers["ORT"], tiers["IPU"], tiers["PCOMP"]))
    return Conversation(name, 0.0, duration, tuple(speakers))


def words(*items, start: float = 0.0):
    """Contiguous word tokens from (text, duration) items."""
    out = []
    t = start
    for text, d in items:
        out.append((round(t, 6), round(t + d, 6), text))
        t += d
    return out


@pytest.fixture
def rng():
    return random.Random(12345)


# -- acceptance summary ---------------------------------------------------------

_VERDICTS = pytest.StashKey[list]()


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion checked by a test")
    config.stash[_VERDICTS] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    # a setup error counts as a failed criterion too
    if marker is None or (report.when != "call" and not report.failed):
        return
    detail = "; ".join(v for k, v in item.user_properties if k == "measured")
    verdict = "PASS" if report.passed else "FAIL"
    item.config.stash[_VERDICTS].append(f"{verdict}  {marker.args[0]}"
                                        + (f"  [{detail}]" if detail else ""))


def pytest_terminal_summary(terminalreporter, config):
    lines = config.stash.get(_VERDICTS, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
