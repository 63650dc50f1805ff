"""Kernel multilayer perceptrons trained layer by layer against ideal Gram targets."""
from .errors import (DivergenceError, FormatError, InvalidArgument, InvalidState, KMLPError,
                     NumericalError)
from .kernel import GramMatrix, KernelSpec, eval_kernel, gaussian, gram, lipschitz_estimate
from .network import (KernelLayer, KernelNetwork, identity_init, init_layer, layer_forward,
                      network_forward, rkhs_norms, subsample_centers)
from .targets import IdealGram, dissimilarity, ideal_gram
from .training import (NetSpec, TrainConfig, TrainReport, cross_entropy_risk, evaluate,
                       gradients, hidden_objective, hinge_risk, output_objective, predict,
                       train_layer, train_network)
from .data import LabeledDataset, gen_blobs, gen_rectangles, load_csv, load_idx, split

__version__ = "0.1.0"
