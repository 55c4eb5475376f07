from .mlp import MlpModel, forward, forward_batch, hard_decisions, init_model, loss_and_gradients, zero_model
from .training import TrainingData, TrainingDivergenceError, TrainingRun, fit, train
from .llr import compute_llr, llr_hard_decisions
from .gradcheck import gradient_check
from .persistence import ModelFormatError, load_model, save_model

__all__ = ["MlpModel", "forward", "forward_batch", "hard_decisions", "init_model", "loss_and_gradients",
           "zero_model", "TrainingData", "TrainingDivergenceError", "TrainingRun", "fit", "train",
           "compute_llr", "llr_hard_decisions", "gradient_check", "ModelFormatError", "load_model", "save_model"]
