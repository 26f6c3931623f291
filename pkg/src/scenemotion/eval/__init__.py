from .metrics import (
    FOOT_CONTACT_HEIGHT, FOOT_SKATE_THRESHOLD, PENETRATION_RATIO_DEPTH,
    MetricReport, aggregate_report, collision_ratio, diversity,
    foot_skate_ratio, goal_errors, penetration,
)
from .report import render_table
