"""Lifted critical points of fully-connected network losses: embeddings,
sample-output synthesis, saddle certificates and a worked toy example."""
from . import linalg
from .calculus import (
    BinaryCrossEntropy,
    EvenPower,
    LossKind,
    SampleSet,
    SquaredError,
    fd_grad_loss,
    grad_loss,
    invert_loss_gradient,
    jacobian_params,
    jacobians,
    loss_grad_p,
    loss_value,
    residual_grads,
    total_loss,
)
from .embeddings import (
    EmbeddingStep,
    ZeroTailParam,
    apply_embedding,
    is_in_split_null_image,
    verify_criticality,
    verify_output_preservation,
    zero_tail_three_layer,
)
from .errors import *  # noqa: F401,F403
from .lifting import *  # noqa: F401,F403
from .network import ACTIVATIONS, Architecture, ParamVec, forward, is_generic, layer_outputs

__version__ = "0.1.0"
