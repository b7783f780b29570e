"""``turntake`` command line: validate, segment, agree, stats, dynamics, convert."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Sequence

from . import __version__
from .agreement import agreement_report, align, boundary_agreement, interval_boundaries
from .config import ConfigError, RunConfig, TierMap, expand_inputs, resolve
from .conversation import Conversation, ConversationError
from .dynamics import Palette, build_tracks, default_palette, export_csv, render_svg
from .lint import ERROR, count_by_severity, diagnostics_csv, diagnostics_text, lint_conversation
from .schema import Layer, get_scheme
from .segment import ClassifierError, TokenClassifier, WORD, proposals_tier, propose_ipus
from .stats import label_distribution, speaking_time_csv, turn_structure
from .textgrid import TextGridError, read_textgrid, serialize_textgrid

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_ERRORS = 2

_D = RunConfig()


class _Failure(Exception):
    """I/O, parse or configuration problem; maps to exit code 1."""


def _common(p: argparse.ArgumentParser, inputs: bool = True) -> None:
    if inputs:
        p.add_argument("inputs", nargs="*", default=None,
                       help="TextGrid files, directories or globs (default: inputs from config)")
    p.add_argument("--config", help="config file of key = value lines "
                                     "(default: $TURNTAKE_CONFIG if set)")
    p.add_argument("-o", "--out-dir", help=f"output directory (default: {_D.out_dir})")
    p.add_argument("--tier-map", help="INI file of per-conversation tier overrides (default: none)")
    p.add_argument("--ort-template", help=f"word tier name template (default: {_D.ort_template})")
    p.add_argument("--ipu-template", help=f"IPU tier name template (default: {_D.ipu_template})")
    p.add_argument("--pcomp-template",
                   help=f"PCOMP tier name template (default: {_D.pcomp_template})")


def _layer(p: argparse.ArgumentParser, both: bool = True) -> None:
    choices = ["IPU", "PCOMP", "both"] if both else ["IPU", "PCOMP"]
    p.add_argument("--layer", choices=choices,
                   help=f"annotation layer (default: {_D.layer if both else 'IPU'})")


def _threshold(p):
    p.add_argument("--ipu-threshold-ms", type=float,
                   help=f"minimum pause that separates IPUs (default: {_D.ipu_threshold_ms:g})")


def _tolerance(p):
    p.add_argument("--tolerance-ms", type=float,
                   help=f"boundary matching tolerance (default: {_D.tolerance_ms:g})")


def _classifier(p):
    p.add_argument("--classifier", help="token class file, key<TAB>class lines "
                                        "(default: built-in markers)")


def _window(p):
    p.add_argument("--from-s", type=float, help="window start in seconds (default: recording start)")
    p.add_argument("--to-s", type=float, help="window end in seconds (default: recording end)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="turntake",
        description="Turn-taking annotation toolkit for two-speaker TextGrids.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="lint IPU and PCOMP annotations")
    _common(p)
    _layer(p)
    _threshold(p)
    _tolerance(p)
    _classifier(p)
    p.add_argument("--lapse-s", type=float,
                   help=f"silence after hrt treated as a lapse (default: {_D.lapse_s:g})")

    p = sub.add_parser("segment", help="propose IPUs from word tiers")
    _common(p)
    _threshold(p)
    _classifier(p)
    p.add_argument("--orphan-breaths", choices=["right", "left", "keep"],
                   help=f"where wordless breath groups go (default: {_D.orphan_breaths})")
    p.add_argument("--form", choices=["long", "short"],
                   help=f"TextGrid output form (default: {_D.form})")

    p = sub.add_parser("agree", help="agreement between two annotations of one recording")
    p.add_argument("file_a")
    p.add_argument("file_b")
    _common(p, inputs=False)
    _layer(p, both=False)
    _tolerance(p)
    p.add_argument("--scheme", help=f"macro scheme for grouped agreement (default: {_D.scheme}; "
                                    "IPU also reports completeness)")
    p.add_argument("--keep-uncertain", action="store_true", default=None,
                   help="treat label@ as distinct from label (default: strip @)")

    p = sub.add_parser("stats", help="label distributions and turn structure")
    _common(p)
    _layer(p)
    p.add_argument("--mode", choices=["single-only", "combined-only", "all"],
                   help=f"which labels to tabulate (default: {_D.mode})")
    p.add_argument("--name", help=f"report name prefix (default: {_D.name})")
    p.add_argument("--format", dest="formats", action="append", choices=["csv", "txt"],
                   help="output format, repeatable (default: csv and txt)")

    p = sub.add_parser("dynamics", help="colour-coded speaker timelines")
    _common(p)
    _layer(p)
    _window(p)
    p.add_argument("--scheme", help=f"grouping for combined labels (default: {_D.scheme})")
    p.add_argument("--palette", help="palette file of category=#RRGGBB lines (default: built-in)")
    p.add_argument("--width-px", type=int, help=f"SVG width (default: {_D.width_px})")
    p.add_argument("--tick-s", type=float, help=f"time axis tick spacing (default: {_D.tick_s:g})")

    p = sub.add_parser("convert", help="normalise TextGrid form and encoding (UTF-8 output)")
    _common(p)
    p.add_argument("--form", choices=["long", "short"],
                   help=f"TextGrid output form (default: {_D.form})")
    return parser


_NOT_CONFIG = {"command", "config", "file_a", "file_b"}


def _config(args: argparse.Namespace) -> RunConfig:
    overrides = {k: v for k, v in vars(args).items() if k not in _NOT_CONFIG}
    if overrides.get("inputs") == []:
        overrides["inputs"] = None
    try:
        return resolve(overrides, args.config)
    except (ConfigError, TypeError) as exc:
        raise _Failure(str(exc)) from None


def _out_dir(cfg: RunConfig) -> Path:
    d = Path(cfg.out_dir)
    try:
        d.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise _Failure(f"cannot create {d}: {exc}") from None
    return d


def _write(path: Path, text: str) -> None:
    try:
        path.write_text(text, encoding="utf-8", newline="")
    except OSError as exc:
        raise _Failure(f"cannot write {path}: {exc}") from None


def _load(path: Path, cfg: RunConfig, tier_map: TierMap | None) -> Conversation:
    try:
        grid = read_textgrid(path)
        mapping = tier_map.for_conversation(path.stem) if tier_map else None
        return Conversation.from_textgrid(grid, path.stem, cfg.templates, mapping)
    except FileNotFoundError:
        raise _Failure(f"{path}: no such file") from None
    except (OSError, TextGridError, ConversationError) as exc:
        raise _Failure(f"{path}: {exc}") from None


def _tier_map(cfg: RunConfig) -> TierMap | None:
    if not cfg.tier_map:
        return None
    try:
        return TierMap.read(cfg.tier_map)
    except (OSError, ConfigError) as exc:
        raise _Failure(f"tier map: {exc}") from None


def _token_classifier(cfg: RunConfig) -> TokenClassifier:
    if not cfg.classifier:
        return TokenClassifier()
    try:
        return TokenClassifier.from_file(cfg.classifier)
    except (OSError, ClassifierError) as exc:
        raise _Failure(f"classifier: {exc}") from None


def _inputs(cfg: RunConfig) -> list[Path]:
    paths = expand_inputs(cfg.inputs)
    if not paths:
        raise _Failure("no input files")
    return paths


def _resolved(paths: list[Path]) -> set[Path]:
    return {p.resolve() for p in paths}


def _restrict(conv: Conversation, layers: list[str]) -> Conversation:
    if set(layers) == {"IPU", "PCOMP"}:
        return conv
    speakers = tuple(replace(s, ipu=s.ipu if "IPU" in layers else None,
                             pcomp=s.pcomp if "PCOMP" in layers else None)
                     for s in conv.speakers)
    return replace(conv, speakers=speakers)


def cmd_validate(cfg: RunConfig, out=sys.stdout) -> int:
    out_dir = _out_dir(cfg)
    tmap = _tier_map(cfg)
    classifier = _token_classifier(cfg)
    status = EXIT_OK
    for path in _inputs(cfg):
        try:
            conv = _load(path, cfg, tmap)
        except _Failure as exc:
            print(f"error: {exc}", file=sys.stderr)
            status = EXIT_FAILURE
            continue
        try:
            diags = lint_conversation(_restrict(conv, cfg.layers()), classifier, cfg.threshold,
                                      cfg.tolerance, cfg.lapse_s, file=path.name)
        except ClassifierError as exc:
            print(f"error: {path}: {exc}", file=sys.stderr)
            status = EXIT_FAILURE
            continue
        layer_tag = cfg.layer
        if "csv" in cfg.formats:
            _write(out_dir / f"{conv.name}_{layer_tag}_diagnostics.csv", diagnostics_csv(diags))
        if "txt" in cfg.formats:
            _write(out_dir / f"{conv.name}_{layer_tag}_diagnostics.txt",
                   cfg.header_lines() + diagnostics_text(diags))
        counts = count_by_severity(diags)
        print(f"{path.name}: {counts['error']} errors, {counts['warning']} warnings, "
              f"{counts['info']} info", file=out)
        if counts[ERROR] and status == EXIT_OK:
            status = EXIT_ERRORS
    return status


def cmd_segment(cfg: RunConfig, out=sys.stdout) -> int:
    out_dir = _out_dir(cfg)
    tmap = _tier_map(cfg)
    classifier = _token_classifier(cfg)
    paths = _inputs(cfg)
    protected = _resolved(paths)
    for path in paths:
        conv = _load(path, cfg, tmap)
        grid = read_textgrid(path)
        new_tiers = []
        for spk in conv.speakers:
            if spk.words is None:
                continue
            try:
                props = propose_ipus(spk.words, classifier, cfg.threshold,
                                     orphan_breaths=cfg.orphan_breaths)
            except ClassifierError as exc:
                raise _Failure(f"{path}: {exc}") from None
            new_tiers.append(proposals_tier(f"IPU-auto-{spk.speaker}", spk.words, props))
            print(f"{path.name}: {spk.speaker}: {len(props)} IPUs", file=out)
        existing = set(grid.names)
        clash = [t.name for t in new_tiers if t.name in existing]
        if clash:
            # re-running on our own output replaces the proposals
            grid = grid.with_tiers(t for t in grid.tiers if t.name not in clash)
        grid = grid.with_tiers([*grid.tiers, *new_tiers])
        target = out_dir / f"{conv.name}_IPU_segmented.TextGrid"
        if target.resolve() in protected:
            raise _Failure(f"refusing to overwrite input {target}")
        try:
            target.write_bytes(serialize_textgrid(grid, cfg.form))
        except OSError as exc:
            raise _Failure(f"cannot write {target}: {exc}") from None
    return EXIT_OK


def _speakers_in_both(a: Conversation, b: Conversation, layer: Layer) -> list[str]:
    return [s.speaker for s in a.speakers
            if s.layer(layer) is not None and s.speaker in b.speaker_ids
            and b.speaker(s.speaker).layer(layer) is not None]


def cmd_agree(cfg: RunConfig, file_a: str, file_b: str, out=sys.stdout) -> int:
    out_dir = _out_dir(cfg)
    tmap = _tier_map(cfg)
    layer = Layer(cfg.layer if cfg.layer != "both" else "IPU")
    a = _load(Path(file_a), cfg, tmap)
    b = _load(Path(file_b), cfg, tmap)
    warnings = []
    if abs(a.duration - b.duration) > cfg.tolerance:
        warnings.append(f"recording durations differ: {a.duration:.3f} s vs {b.duration:.3f} s")
    speakers = _speakers_in_both(a, b, layer)
    if not speakers:
        raise _Failure(f"no speaker has a {layer.value} tier in both files")
    groupings = [get_scheme(layer, cfg.scheme)]
    if layer is Layer.IPU and cfg.scheme != "completeness":
        groupings.append(get_scheme(layer, "completeness"))
    tier_a = [iv for s in speakers for iv in a.speaker(s).layer(layer).intervals]
    tier_b = [iv for s in speakers for iv in b.speaker(s).layer(layer).intervals]
    # align per speaker so intervals of different speakers never pair up
    pairs = []
    for s in speakers:
        pairs += align(a.speaker(s).layer(layer), b.speaker(s).layer(layer), cfg.tolerance)
    try:
        report = agreement_report(tier_a, tier_b, layer, cfg.tolerance, groupings,
                                  cfg.keep_uncertain, pairs=pairs)
    except Exception as exc:  # label errors in either file
        raise _Failure(f"{file_a} / {file_b}: {exc}") from None
    report.header = {**cfg.header(), "file_a": file_a, "file_b": file_b,
                     "speakers": ", ".join(speakers)}
    report.warnings = warnings

    lines = [report.summary()]
    cands, ba, bb = [], [], []
    classifier = _token_classifier(cfg)
    for s in speakers:
        words = a.speaker(s).words
        if words is None:
            continue
        cands += [iv.xmax for iv in words.intervals if iv.text.strip()
                  and classifier.classify(iv.text) == WORD]
        ba += interval_boundaries(a.speaker(s).layer(layer))
        bb += interval_boundaries(b.speaker(s).layer(layer))
    if cands:
        bag = boundary_agreement(ba, bb, cands, cfg.tolerance)
        lines.append(f"boundary agreement: {bag.agreement:.4f} over {bag.candidates} candidates "
                     f"(both {bag.both}, only a {bag.only_a}, only b {bag.only_b}, "
                     f"neither {bag.neither}; uncovered a {len(bag.uncovered_a)}, "
                     f"b {len(bag.uncovered_b)})\n")
    stem = f"{a.name}_{layer.value}"
    _write(out_dir / f"{stem}_agreement.txt", "".join(lines))
    _write(out_dir / f"{stem}_confusion.csv", report.matrix.to_csv())
    for name, (m, _) in report.grouped.items():
        _write(out_dir / f"{stem}_confusion-{name}.csv", m.to_csv())
    out.write("".join(lines))
    return EXIT_OK


def cmd_stats(cfg: RunConfig, out=sys.stdout) -> int:
    out_dir = _out_dir(cfg)
    tmap = _tier_map(cfg)
    convs = [_load(p, cfg, tmap) for p in _inputs(cfg)]
    for layer in cfg.layers():
        table = label_distribution(convs, layer, cfg.mode)
        stem = f"{cfg.name}_{layer}_distribution-{cfg.mode}"
        if "csv" in cfg.formats:
            _write(out_dir / f"{stem}.csv", table.to_csv())
        if "txt" in cfg.formats:
            _write(out_dir / f"{stem}.txt", cfg.header_lines() + table.to_text())
        print(f"{layer}: {table.total()} labels over {len(table.rows)} speakers", file=out)
        if layer == "PCOMP":
            ts = turn_structure(convs)
            if "csv" in cfg.formats:
                _write(out_dir / f"{cfg.name}_PCOMP_turn-structure.csv", ts.to_csv())
            if "txt" in cfg.formats:
                _write(out_dir / f"{cfg.name}_PCOMP_turn-structure.txt",
                       cfg.header_lines() + ts.to_text())
        if layer == "IPU":
            _write(out_dir / f"{cfg.name}_IPU_speaking-time.csv", speaking_time_csv(convs))
    return EXIT_OK


def cmd_dynamics(cfg: RunConfig, out=sys.stdout) -> int:
    out_dir = _out_dir(cfg)
    tmap = _tier_map(cfg)
    for path in _inputs(cfg):
        conv = _load(path, cfg, tmap)
        w0 = conv.xmin if cfg.from_s is None else cfg.from_s
        w1 = conv.xmax if cfg.to_s is None else cfg.to_s
        if w1 <= w0:
            raise _Failure(f"{path}: empty window {w0}-{w1}")
        for layer in cfg.layers():
            try:
                scheme = get_scheme(layer, cfg.scheme)
            except ValueError as exc:
                raise _Failure(str(exc)) from None
            palette = default_palette(layer)
            if cfg.palette:
                try:
                    palette = Palette.from_file(cfg.palette, base=palette)
                except (OSError, ValueError) as exc:
                    raise _Failure(f"palette: {exc}") from None
            tracks = build_tracks(conv, layer, scheme, (w0, w1))
            try:
                svg = render_svg(tracks, (w0, w1), cfg.width_px, palette, cfg.tick_s,
                                 title=f"{conv.name} {layer} {w0:g}-{w1:g} s")
            except ValueError as exc:
                raise _Failure(f"{path}: {exc}") from None
            header = "<!--\n" + cfg.header_lines(prefix="  ").replace("--", "- -") + "-->\n"
            first, rest = svg.split("\n", 1)
            stem = f"{conv.name}_{layer}_dynamics"
            _write(out_dir / f"{stem}.svg", first + "\n" + header + rest)
            _write(out_dir / f"{stem}.csv", export_csv(tracks))
            print(f"{path.name}: {layer}: {sum(len(t.entries) for t in tracks)} entries",
                  file=out)
    return EXIT_OK


def cmd_convert(cfg: RunConfig, out=sys.stdout) -> int:
    out_dir = _out_dir(cfg)
    paths = _inputs(cfg)
    protected = _resolved(paths)
    for path in paths:
        try:
            grid = read_textgrid(path)
        except FileNotFoundError:
            raise _Failure(f"{path}: no such file") from None
        except (OSError, TextGridError) as exc:
            raise _Failure(f"{path}: {exc}") from None
        target = out_dir / f"{path.stem}.TextGrid"
        if target.resolve() in protected:
            raise _Failure(f"refusing to overwrite input {target}")
        try:
            target.write_bytes(serialize_textgrid(grid, cfg.form))
        except OSError as exc:
            raise _Failure(f"cannot write {target}: {exc}") from None
        print(f"{path} -> {target}", file=out)
    return EXIT_OK


def main(argv: Sequence[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    args = build_parser().parse_args(argv)
    try:
        cfg = _config(args)
        if args.command == "validate":
            return cmd_validate(cfg, out)
        if args.command == "segment":
            return cmd_segment(cfg, out)
        if args.command == "agree":
            return cmd_agree(cfg, args.file_a, args.file_b, out)
        if args.command == "stats":
            return cmd_stats(cfg, out)
        if args.command == "dynamics":
            return cmd_dynamics(cfg, out)
        return cmd_convert(cfg, out)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
