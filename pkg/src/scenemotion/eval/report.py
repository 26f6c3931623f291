"""Plain-text table rendering for metric reports."""

from __future__ import annotations

from .metrics import MetricReport

_COLUMNS = (
    ("position (m)", "goal_pos_err"),
    ("orientation (rad)", "goal_orient_err"),
    ("height (m)", "goal_height_err"),
    ("collision", "collision_ratio"),
    ("foot skate", "foot_skate_ratio"),
    ("pen. value (m)", "penetration_value"),
    ("pen. ratio", "penetration_ratio"),
    ("diversity", "diversity"),
)


def render_table(reports: dict[str, MetricReport]) -> str:
    """One row per named report, columns in the familiar order."""
    names = list(reports.keys())
    header = ["method".ljust(18)] + [c[0].rjust(17) for c in _COLUMNS]
    lines = ["".join(header)]
    for name in names:
        r = reports[name]
        row = [name.ljust(18)]
        for _, attr in _COLUMNS:
            row.append(f"{getattr(r, attr):17.4f}")
        lines.append("".join(row))
    skipped = set()
    for r in reports.values():
        skipped.update(k for k in r.notes if "not computed" in str(r.notes.get(k, "")))
    if skipped:
        lines.append(f"(not computed: {', '.join(sorted(skipped))})")
    return "\n".join(lines)
