"""Actor and critic networks for the hybrid-action soft actor-critic.

The actor has a shared trunk with two heads: a squashed-Gaussian head for
the continuous (fuel, battery) pair and a categorical head over the four
pit actions. Critics take (observation, continuous action) and output one
Q value per pit action, so expectations over the discrete head are exact.
"""

from __future__ import annotations

import torch
import torch.nn as nn
import torch.nn.functional as F

LOG_STD_MIN = -5.0
LOG_STD_MAX = 2.0
N_PIT = 4
N_CONT = 2
# continuous action bounds: fuel in [0,1], battery in [-1,1]
ACT_LO = torch.tensor([0.0, -1.0])
ACT_HI = torch.tensor([1.0, 1.0])


class NonFiniteActivation(RuntimeError):
    pass


def mlp(sizes, out_dim):
    layers = []
    for a, b in zip(sizes[:-1], sizes[1:]):
        layers += [nn.Linear(a, b), nn.ReLU()]
    layers.append(nn.Linear(sizes[-1], out_dim))
    return nn.Sequential(*layers)


class Actor(nn.Module):
    def __init__(self, obs_dim: int, hidden: tuple[int, ...] = (128, 128)):
        super().__init__()
        sizes = [obs_dim, *hidden]
        trunk = []
        for a, b in zip(sizes[:-1], sizes[1:]):
            trunk += [nn.Linear(a, b), nn.ReLU()]
        self.trunk = nn.Sequential(*trunk)
        self.mean = nn.Linear(hidden[-1], N_CONT)
        self.log_std = nn.Linear(hidden[-1], N_CONT)
        self.logits = nn.Linear(hidden[-1], N_PIT)

    def forward(self, obs: torch.Tensor):
        """Distribution parameters: (mean, log_std, pit log-probs)."""
        h = self.trunk(obs)
        mean = self.mean(h)
        log_std = torch.clamp(self.log_std(h), LOG_STD_MIN, LOG_STD_MAX)
        logp_pit = F.log_softmax(self.logits(h), dim=-1)
        if not (torch.isfinite(mean).all() and torch.isfinite(logp_pit).all()):
            raise NonFiniteActivation("actor produced non-finite outputs")
        return mean, log_std, logp_pit

    def sample(self, obs: torch.Tensor):
        """Reparameterized squashed sample with its log density.

        Returns (action in the physical box, log_prob, pit log-probs).
        """
        mean, log_std, logp_pit = self(obs)
        std = log_std.exp()
        noise = torch.randn_like(mean)
        pre = mean + std * noise
        squashed = torch.tanh(pre)
        logp = (-0.5 * (noise**2) - log_std - 0.9189385332046727).sum(-1)
        logp = logp - torch.log(1.0 - squashed**2 + 1e-6).sum(-1)
        lo = ACT_LO.to(obs.device)
        hi = ACT_HI.to(obs.device)
        action = lo + (squashed + 1.0) * 0.5 * (hi - lo)
        # the affine rescale contributes a constant Jacobian term
        logp = logp - torch.log((hi - lo) * 0.5).sum()
        return action, logp, logp_pit

    def deterministic(self, obs: torch.Tensor):
        mean, _, logp_pit = self(obs)
        squashed = torch.tanh(mean)
        lo = ACT_LO.to(obs.device)
        hi = ACT_HI.to(obs.device)
        action = lo + (squashed + 1.0) * 0.5 * (hi - lo)
        return action, logp_pit.argmax(dim=-1)


class Critic(nn.Module):
    """Q(obs, continuous action) -> one value per pit action."""

    def __init__(self, obs_dim: int, hidden: tuple[int, ...] = (128, 128)):
        super().__init__()
        self.net = mlp([obs_dim + N_CONT, *hidden], N_PIT)

    def forward(self, obs: torch.Tensor, a_cont: torch.Tensor) -> torch.Tensor:
        return self.net(torch.cat([obs, a_cont], dim=-1))
