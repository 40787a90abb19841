"""From-scratch 1-D convolutional classifier: architecture declarations,
float64 forward/backward, Adam training, evaluation, and JSON checkpoints."""

from .arch import (
    ArchitectureSpec,
    Conv1d,
    DenseSoftmax,
    GlobalAvgPool,
    LayerSpec,
    MaxPool,
    architecture_a,
    architecture_b,
    compact_architecture,
    layer_spec_from_dict,
)
from .evaluation import EvaluationReport, accuracy_on, evaluate
from .model import (
    FeatureMap,
    LayerParams,
    Model,
    build_model,
    forward,
    forward_batch,
    load_checkpoint,
    predict,
    save_checkpoint,
)
from .training import (
    TrainingConfig,
    cross_entropy_loss,
    cross_validate,
    fine_tune,
    gradient_of_loss,
    train,
)

__all__ = [
    "ArchitectureSpec",
    "Conv1d",
    "DenseSoftmax",
    "GlobalAvgPool",
    "LayerSpec",
    "MaxPool",
    "architecture_a",
    "architecture_b",
    "compact_architecture",
    "layer_spec_from_dict",
    "EvaluationReport",
    "accuracy_on",
    "evaluate",
    "FeatureMap",
    "LayerParams",
    "Model",
    "build_model",
    "forward",
    "forward_batch",
    "load_checkpoint",
    "predict",
    "save_checkpoint",
    "TrainingConfig",
    "cross_entropy_loss",
    "cross_validate",
    "fine_tune",
    "gradient_of_loss",
    "train",
]
