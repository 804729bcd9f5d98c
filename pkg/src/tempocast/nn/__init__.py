"""From-scratch dense networks (MLP, LSTM, token/channel mixer), Adam, training
loop with early stopping, and model serialization."""

from .adam import AdamState, adam_step
from .backend import lstm_backend_name
from .layers import DenseLayer, MLPNet, mlp_forward
from .lstm import LSTMCell, LSTMNet, lstm_forward, lstm_step
from .mixer import MixerConfig, MixerNet, mixer_forward
from .model import TrainedModel, build_net, load, predict, save
from .training import TrainConfig, TrainResult, train

__all__ = [
    "AdamState",
    "adam_step",
    "lstm_backend_name",
    "DenseLayer",
    "MLPNet",
    "mlp_forward",
    "LSTMCell",
    "LSTMNet",
    "lstm_forward",
    "lstm_step",
    "MixerConfig",
    "MixerNet",
    "mixer_forward",
    "TrainedModel",
    "build_net",
    "load",
    "predict",
    "save",
    "TrainConfig",
    "TrainResult",
    "train",
]
