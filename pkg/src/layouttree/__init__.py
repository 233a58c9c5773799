"""Layout tree toolkit: DFS-ordered poster trees, decoding, metrics and statistics."""

__version__ = "0.1.0"

from .decoding import DecodeConfig, DecodedResult, decode, decode_beam, decode_greedy, eval_loss
from .ingest import DatasetSplit, adapt_external, load_split, write_split
from .metrics import error_distribution, evaluate, reds, relation_accuracy, steds, ted
from .model import (
    BBox,
    Category,
    LayoutTree,
    Poster,
    Relation,
    RelationKind,
    build_tree,
    dfs_replay,
    extract_relations,
)
from .scoring import ScorePair, heuristic_scores, load_scores, noisy_oracle, oracle_scores, save_scores
from .statistics import (
    category_stats,
    category_transitions,
    direction_class,
    norm_distance,
    relation_heatmap,
    tree_stats,
)
