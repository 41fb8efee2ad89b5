"""Randomized multipliers for dense linear algebra.

GENP with random preconditioning, randomized low-rank approximation,
numerical-rank search without pivoting, randomized TT compression, and a
Monte Carlo harness for the associated probability bounds.
"""

from .dense import (
    QrFactors,
    SvdFactors,
    cond2,
    leading_basis,
    norm,
    numerical_rank,
    pseudo_inverse,
    qr_positive,
    svd,
    trailing_basis,
    truncate_svd,
)
from .errors import RandlaError
from .generators import (
    MultiplierKind,
    gaussian_matrix,
    illblock_system,
    paper_profile,
    profile_matrix,
    uniform_matrix,
)
from .genp import block_ge, genp_factor, genp_solve, iterative_refine, randomized_genp
from .lowrank import approx_basis, project_onto_basis, proto_lowrank
from .nrank import cond_probe, extremal_sv_estimate, nrank_search
from .rng import RngStream
from .structured import StructuredSpec, circulant, structured_mul, toeplitz
from .tt import DenseTensor, TtTrain, tt_error, tt_randomized, tt_reconstruct, tt_svd, unfold

__version__ = "0.1.0"
