"""Cardinality-sparse matrices: compression, compressed multiplication and regularization."""

from .codec import (
    columns_as_rows,
    compress_binary,
    compress_columns,
    compress_rows,
    decompress_binary,
    decompress_columns,
    decompress_rows,
    memory_footprint,
    rows_as_columns,
)
from .core import (
    BinaryCompressed,
    ColCompressed,
    RowCompressed,
    cardinality_degree,
    is_nk_sparse,
)
from .errors import CardmulError, CorruptionError, DimensionMismatch, DomainError, ModeError, ValidationError
from .matmul import (
    Kernel,
    MultReport,
    choose_kernel,
    multiply_auto,
    multiply_binary,
    multiply_inner_compressed,
    multiply_naive,
    multiply_outer_compressed,
    multiply_strassen,
    relative_error,
)
from .sparsity import (
    DifferenceOperator,
    GroupSpec,
    LambdaConfig,
    ParamStack,
    apply_difference,
    difference_operator,
    grouped_difference,
    lambda_bound,
    m_bound,
    one_to_one_norm,
    project_cardinality,
    project_kernel,
    regularizer_h,
)
from .tensor import (
    TensorFit,
    contracted_product,
    data_gradient,
    difference_tensor,
    effective_noise_s,
    mode_n_product,
    tensor_regression_fit,
)

__version__ = "0.1.0"
