"""Multilinear bases, edit tensors and Tucker regression for activation tensors."""

__version__ = "0.1.0"

from .edits import SelectorSpec, SelectorTerm, assemble_edit_tensor, build_first_order, build_interaction
from .errors import (ContractError, DimensionError, ModeError, NormalisationError, NpyFormatError,
                     TensorEditError, TrainingDiverged)
from .mpca import (FactorBasis, LinearBasis, MultilinearBasis, compute_bases, linear_pca_basis,
                   mpca_project, mpca_reconstruct, scatter_matrix)
from .regression import (RegressionConfig, TrainingPair, TuckerWeights, direction_to_latent, fit,
                         init_weights, loss, materialize, parameter_counts, predict_latent)
from .synth import SyntheticModel, attribute_probe, make_synthetic, mod_metric, sample_pairs
from .tensor import (TensorShape3, fold, gen_inner_product, kronecker, mode_n_product, outer3,
                     unfold, vec)
