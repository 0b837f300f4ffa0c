"""Neural networks over structured weight matrices.

Core pieces: Toeplitz/Hankel/triangular matrices with FFT-accelerated
products (structmat), structured factorization of dense matrices
(decompose), identity approximation through an activation
(identity_approx), feed-forward networks with structured gradients
(network), dense-to-structured network compression (compressor), and a
CLI harness for training, benchmarking, and file formats (harness).
"""

from .activations import ACTIVATIONS, ActivationSpec, get_activation
from .compressor import (
    CompressOptions,
    CompressionReport,
    Conv1dSpec,
    apply_conv1d,
    compress,
    conv_to_toeplitz,
    measure_sup_error,
    operator_norm,
    restructure_shallow,
    toeplitz_layer_to_conv,
)
from .decompose import (
    FactorChain,
    FitOptions,
    hankel_factorize,
    lu_approx,
    lu_chain,
    pad_to_square,
    toeplitz_factorize,
)
from .errors import (
    CompressionInfeasibleError,
    ConfigError,
    DataFormatError,
    DimensionError,
    FactorizationError,
    ModelFormatError,
    ParameterError,
    SelectionError,
    SizeError,
    StructnetError,
)
from .identity_approx import SampleDomain, choose_h, rho_apply
from .network import (
    GradientTape,
    Gradients,
    Layer,
    NetworkSpec,
    backward,
    build_network,
    forward,
    loss_eval,
    sgd_step,
)
from .structmat import (
    DenseMatrix,
    HankelMatrix,
    StructuredMatrix,
    ToeplitzMatrix,
    TriangularMatrix,
    embed_rows_hankel,
    embed_rows_toeplitz,
    fft,
    fft_convolve,
    matvec_fft,
    matvec_naive,
    next_pow2,
    parameter_count,
)

__version__ = "0.1.0"
