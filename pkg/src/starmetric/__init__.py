"""Star-metric spaces: metrics whose triangle inequality is taken through a t-definer."""
from .errors import DomainError, NumericError, StarMetricError, UnsupportedError, UsageError
from .laws import LawCheck, LawReport
from .metric import (StarMetricSpace, as_point, as_points, check_star_metric_axioms, d_L, d_max,
                     d_p, d_s, euclidean_product_L, induced_metric, product_max, product_T,
                     replay_metric_witness, signed_line_space)
from .tdefiner import (BUILTINS, LUKASIEWICZ, MAXIMUM, STAR_P, STAR_S, Comparison, Ordering,
                       TDefiner, ToleranceConfig, apply, check_residuum_laws,
                       check_tdefiner_axioms, compare, get_tdefiner, register_tdefiner,
                       residuum, residuum_numeric)
from .topology import (Ball, ball_grid, ball_members, interior_witness, normal_separation,
                       product_ball_inclusion_check, separation_radius)
from .vptree import Neighbor, VpTree, brute_force, brute_force_range, build, pruning_bounds

__version__ = "0.1.0"
