from .conv import conv2d, conv_transpose2d
from .optim import NonFiniteGradient, OptimizerState, adam_step
from .tensor import (
    ShapeError,
    Tensor,
    add,
    as_tensor,
    backward,
    concat,
    default_dtype,
    exp,
    grad_enabled,
    log,
    matmul,
    mean,
    multiply,
    neg,
    no_grad,
    precision,
    relu,
    reshape,
    slice_,
    softplus,
    squared_error,
    sum_,
    tanh,
)

__all__ = [
    "NonFiniteGradient",
    "OptimizerState",
    "ShapeError",
    "Tensor",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "concat",
    "conv2d",
    "conv_transpose2d",
    "default_dtype",
    "exp",
    "grad_enabled",
    "log",
    "matmul",
    "mean",
    "multiply",
    "neg",
    "no_grad",
    "precision",
    "relu",
    "reshape",
    "slice_",
    "softplus",
    "squared_error",
    "sum_",
    "tanh",
]
