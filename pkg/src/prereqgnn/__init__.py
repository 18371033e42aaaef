"""Directed link prediction for concept prerequisite graphs.

Weisfeiler-Leman guided higher-order GNN: restricted directed k-tuples,
per-position graph convolutions with MLP fusion, mean allocation back to
nodes, and a Siamese scoring head, trained end to end with hand-derived
gradients.
"""

from .errors import (
    ConfigError,
    DivergenceError,
    GraphDataError,
    SamplingExhaustedError,
    ShapeError,
)
from .graph import (
    DirectedGraph,
    LabeledPairSet,
    assemble_dataset,
    load_edge_list,
    load_embeddings,
    load_pairs,
    sample_negatives,
    split_pairs,
    write_edge_list,
    write_embeddings,
)
from .tuples import (
    PositionGraph,
    TupleSet,
    build_position_graph,
    build_position_graphs,
    enumerate_tuples,
    initial_tuple_features,
)
from .wl import ColorMap, distinguish, distinguish_rounds, wl_refine
from .gnn import (
    GcnLayerParams,
    MlpParams,
    ModelState,
    TupleGraphBundle,
    backward,
    forward,
    fuse,
    gcn_forward,
    init_model,
    node_readout,
    pool_to_nodes,
    prepare,
)
from .predictor import (
    AdamOptimizer,
    LinkModel,
    Metrics,
    SiameseParams,
    TrainConfig,
    TrainResult,
    bce_loss,
    evaluate,
    init_link_model,
    link_probability,
    pair_feature_vector,
    predict_pairs,
    threshold_sweep,
    train,
)
from .checkpoint import load_checkpoint, save_checkpoint

__version__ = "0.1.0"
