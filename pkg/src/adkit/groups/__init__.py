"""Group models with exact normal forms, their metric windows, graph-of-
groups structure (strata, separation audits, Bass-Serre trees), and
relative word metrics."""

from .models import (GroupModel, ZOO_NAMES, baumslag_solitar, central_double,
                     cyclic_group, direct_product, free_abelian, free_group,
                     free_product, integers, lamplighter, parse_group,
                     symmetric_group, trivial_group, wreath_zz)
from .windows import (ball_map, ball_sizes, cayley_window, stabilizer_window,
                      subject_for)
from .graphs import (AmalgamSchema, GraphOfGroups, GroupAction, HnnSchema,
                     SeparationReport, Stratification, amalgam_gog,
                     bass_serre_tree_window, gog_by_name, hnn_gog,
                     level_band_cover, make_action, one_type_action,
                     path_length, separation_audit, stratify_words,
                     trefoil_gog)
from .relhyp import (BallDecomposition, Peripheral, PeripheralFamily,
                     RelHypData, f2_rel_a, free_rel_cyclic,
                     relhyp_ball_decompose, relhyp_by_name, relhyp_metric)

__all__ = [
    "GroupModel", "ZOO_NAMES", "baumslag_solitar", "central_double",
    "cyclic_group", "direct_product", "free_abelian", "free_group",
    "free_product", "integers", "lamplighter", "parse_group",
    "symmetric_group", "trivial_group", "wreath_zz",
    "ball_map", "ball_sizes", "cayley_window", "stabilizer_window",
    "subject_for",
    "AmalgamSchema", "GraphOfGroups", "GroupAction", "HnnSchema",
    "SeparationReport", "Stratification", "amalgam_gog",
    "bass_serre_tree_window", "gog_by_name", "hnn_gog", "level_band_cover",
    "make_action", "one_type_action", "path_length", "separation_audit",
    "stratify_words", "trefoil_gog",
    "BallDecomposition", "Peripheral", "PeripheralFamily", "RelHypData",
    "f2_rel_a", "free_rel_cyclic", "relhyp_ball_decompose", "relhyp_by_name",
    "relhyp_metric",
]
