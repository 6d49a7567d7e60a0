from .agent import NonFiniteLoss, SacAgent, TrainConfig
from .buffer import ReplayBuffer
from .nets import Actor, Critic, NonFiniteActivation
from .train import EvalMetrics, evaluate, load_checkpoint, save_checkpoint, train
