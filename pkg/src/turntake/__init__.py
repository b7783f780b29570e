"""Parse, validate, segment and analyse turn-taking annotations of
two-speaker conversations stored as Praat TextGrids."""

__version__ = "0.1.0"

from .agreement import (AgreementReport, ConfusionMatrix, agreement_report, align,
                        boundary_agreement, cohen_kappa, confusion_table, fleiss_kappa,
                        implied_expected_agreement, partial_agreement)
from .conversation import Conversation, SpeakerTiers
from .dynamics import Palette, build_tracks, export_csv, read_csv, render_svg
from .lint import Diagnostic, lint_conversation
from .schema import (MIXED, NON_LABEL, RESIDUE, LabelError, LabelExpr, Layer, MacroScheme,
                     get_scheme, macro_category, normalize_for_dynamics, parse_label, parse_token)
from .segment import TokenClassifier, overlaps, pauses, propose_ipus, transfer_offsets
from .stats import label_distribution, speaking_time, turn_structure
from .textgrid import (Interval, TextGrid, TextGridError, Tier, extract_tier, parse_textgrid,
                       read_textgrid, serialize_textgrid, write_textgrid)

__all__ = [
    "AgreementReport", "ConfusionMatrix", "Conversation", "Diagnostic", "Interval", "LabelError",
    "LabelExpr", "Layer", "MIXED", "MacroScheme", "NON_LABEL", "Palette", "RESIDUE",
    "SpeakerTiers", "TextGrid", "TextGridError", "Tier", "TokenClassifier", "agreement_report",
    "align", "boundary_agreement", "build_tracks", "cohen_kappa", "confusion_table",
    "export_csv", "extract_tier", "fleiss_kappa", "get_scheme", "implied_expected_agreement",
    "label_distribution", "lint_conversation", "macro_category", "normalize_for_dynamics",
    "overlaps", "parse_label", "parse_textgrid", "parse_token", "partial_agreement", "pauses",
    "propose_ipus", "read_csv", "read_textgrid", "render_svg", "serialize_textgrid",
    "speaking_time", "transfer_offsets", "turn_structure", "write_textgrid",
]
