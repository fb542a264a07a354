"""Fixed-length gradient compression toolkit: adaptive dynamic-range
quantizers with randomized rotation, a quantized projected-SGD optimizer,
distributed mean estimation, and a subgaussian rate-distortion codec."""

from .adaptive import (
    AdaptiveCodeword,
    GainCodeword,
    RangeLadder,
    aguq_decode,
    aguq_quantize,
    atuq_decode,
    atuq_encode,
    geometric_ladder,
    tetra_ladder,
)
from .applications import DmeInstance, DmeResult, RdConfig, RdResult, dme_estimate, rd_quantize
from .errors import CodecError, ConfigError, RotquantError
from .gain_shape import (
    AratqCodeword,
    AratqQuantizer,
    GainShapeConfig,
    UniformGainShapeQuantizer,
    aratq_decode,
    aratq_encode,
    baseline_uniform_gain,
)
from .numerics import (
    RotationOperator,
    SeedBundle,
    fwht,
    hadamard_matrix,
    iterated_log_star,
    next_power_of_two,
    rotate,
    tetration,
)
from .optimize import (
    Domain,
    IdentityQuantizer,
    OracleSpec,
    RunTrace,
    heavy_tailed_oracle,
    make_test_oracles,
    noisy_linear_oracle,
    noisy_quadratic_oracle,
    project,
    quantized_psgd,
    run_trials,
)
from .params import ResolvedParams, derive_params, make_gain_ladder, make_ratq_config
from .ratq import (
    EncodedBlock,
    RatqConfig,
    RatqQuantizer,
    RcsRatqQuantizer,
    SubsampleSet,
    draw_subsample_set,
    load_block,
    overflow_count,
    pack_codewords,
    ratq_decode,
    ratq_encode,
    rcs_decode,
    rcs_encode,
    save_block,
    unpack_codewords,
)
from .scalar_quant import UniformGrid, cuq_decode, cuq_encode

__version__ = "0.1.0"
