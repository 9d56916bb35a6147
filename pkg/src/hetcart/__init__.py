"""Regression trees with cost-complexity pruning, and a simulation harness for
studying how a change in noise level affects where they split."""

from .errors import ConfigError, InvalidStateError
from .metrics import (
    AggregateReport,
    ReplicationSummary,
    aggregate,
    histogram_splits,
    mse_ratio,
    single_split_threshold,
    summarize_tree,
)
from .pruning import CpPath, PruneConfig, Rule, cp_sequence, cross_validate, fit, select_subtree
from .simgen import (
    BaselineErrors,
    StructureSpec,
    compromise,
    compromise_sigma,
    flat,
    generate_baseline,
    realize,
    step,
)
from .tree import Dataset, GrowthConfig, SplitCandidate, Tree, best_split, grow, node_sse, predict

__version__ = "0.1.0"
