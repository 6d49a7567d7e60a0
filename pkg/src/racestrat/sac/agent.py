"""Soft actor-critic with a continuous head and a categorical pit head.

Two critics with Polyak-averaged targets; the TD target takes the minimum
of the target critics (pessimism) and adds both heads' entropy terms, each
with its own learned temperature. Rewards are scaled by 1/100 inside the
agent so critic magnitudes stay near unity; evaluation metrics always use
raw environment rewards.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn.functional as F

from ..env import AgentAction
from .nets import Actor, Critic, N_PIT

REWARD_SCALE = 1.0 / 100.0


class NonFiniteLoss(RuntimeError):
    pass


@dataclass
class TrainConfig:
    steps: int = 300_000
    batch_size: int = 256
    lr: float = 3e-4
    gamma: float = 1.0
    tau: float = 0.005
    hidden: tuple[int, ...] = (128, 128)
    buffer_capacity: int = 200_000
    start_steps: int = 2_000          # uniform-random warmup steps
    update_every: int = 1
    target_entropy_cont: float = -2.0
    target_entropy_disc: float = 0.5 * math.log(4.0)
    # pit-head entropy target anneals to this floor over training, so the
    # head explores stop timing early but can commit to a plan late
    target_entropy_disc_final: float = 0.05 * math.log(4.0)
    n_step: int = 5                   # multi-step TD targets (gamma = 1)
    eval_every: int = 5_000
    seed: int = 0
    # training-time disturbance curriculum (evaluation specs stay untouched)
    disturb_prob: float = 0.5
    disturb_magnitude: tuple[float, float] = (0.05, 0.35)
    disturb_lap_frac: tuple[float, float] = (0.1, 0.8)


class SacAgent:
    def __init__(self, obs_dim: int, cfg: TrainConfig):
        torch.manual_seed(cfg.seed)
        self.cfg = cfg
        self.actor = Actor(obs_dim, cfg.hidden)
        self.q1 = Critic(obs_dim, cfg.hidden)
        self.q2 = Critic(obs_dim, cfg.hidden)
        self.q1_t = Critic(obs_dim, cfg.hidden)
        self.q2_t = Critic(obs_dim, cfg.hidden)
        self.q1_t.load_state_dict(self.q1.state_dict())
        self.q2_t.load_state_dict(self.q2.state_dict())
        self.log_alpha_c = torch.zeros(1, requires_grad=True)
        self.log_alpha_d = torch.zeros(1, requires_grad=True)
        self.opt_actor = torch.optim.Adam(self.actor.parameters(), lr=cfg.lr)
        self.opt_q = torch.optim.Adam(
            list(self.q1.parameters()) + list(self.q2.parameters()), lr=cfg.lr
        )
        self.opt_alpha = torch.optim.Adam([self.log_alpha_c, self.log_alpha_d], lr=cfg.lr)

    # Acting -----------------------------------------------------------------

    def act(self, obs: np.ndarray, deterministic: bool = False) -> AgentAction:
        with torch.no_grad():
            t = torch.as_tensor(obs, dtype=torch.float32).unsqueeze(0)
            if deterministic:
                a_cont, a_disc = self.actor.deterministic(t)
                pit = int(a_disc.item())
            else:
                a_cont, _, logp_pit = self.actor.sample(t)
                pit = int(torch.distributions.Categorical(logits=logp_pit).sample().item())
            f, b = a_cont.squeeze(0).tolist()
        return AgentAction(f=f, b=b, ps=pit)

    def pit_probabilities(self, obs: np.ndarray) -> np.ndarray:
        with torch.no_grad():
            t = torch.as_tensor(obs, dtype=torch.float32).unsqueeze(0)
            _, _, logp = self.actor(t)
            return logp.exp().squeeze(0).numpy()

    # Learning ---------------------------------------------------------------

    def compute_targets(self, batch: dict) -> torch.Tensor:
        """Entropy-regularized TD targets from the pessimistic target critics.

        batch rewards may be n-step sums; with gamma = 1 the bootstrap term
        needs no extra discounting.
        """
        cfg = self.cfg
        obs2 = torch.as_tensor(batch["obs2"], dtype=torch.float32)
        reward = torch.as_tensor(batch["reward"], dtype=torch.float32) * REWARD_SCALE
        done = torch.as_tensor(batch["done"], dtype=torch.float32)
        n_step = batch.get("n_step", 1)
        with torch.no_grad():
            a2, logp2, logp_pit2 = self.actor.sample(obs2)
            p2 = logp_pit2.exp()
            q_min = torch.min(self.q1_t(obs2, a2), self.q2_t(obs2, a2))
            alpha_c = self.log_alpha_c.exp()
            alpha_d = self.log_alpha_d.exp()
            v2 = (p2 * (q_min - alpha_d * logp_pit2)).sum(-1) - alpha_c * logp2
            return reward + (cfg.gamma ** n_step) * (1.0 - done) * v2

    def disc_entropy_target(self, progress: float) -> float:
        start = self.cfg.target_entropy_disc
        final = self.cfg.target_entropy_disc_final
        return start + (final - start) * min(1.0, max(0.0, progress))

    def update(self, batch: dict, progress: float = 1.0) -> dict[str, float]:
        cfg = self.cfg
        obs = torch.as_tensor(batch["obs"], dtype=torch.float32)
        a_cont = torch.as_tensor(batch["a_cont"], dtype=torch.float32)
        a_disc = torch.as_tensor(batch["a_disc"], dtype=torch.int64)
        y = self.compute_targets(batch)

        q1_all = self.q1(obs, a_cont)
        q2_all = self.q2(obs, a_cont)
        q1 = q1_all.gather(1, a_disc.unsqueeze(1)).squeeze(1)
        q2 = q2_all.gather(1, a_disc.unsqueeze(1)).squeeze(1)
        loss_q = F.mse_loss(q1, y) + F.mse_loss(q2, y)
        self.opt_q.zero_grad()
        loss_q.backward()
        self.opt_q.step()

        a_new, logp_new, logp_pit = self.actor.sample(obs)
        p = logp_pit.exp()
        q_min = torch.min(self.q1(obs, a_new), self.q2(obs, a_new))
        alpha_c = self.log_alpha_c.exp().detach()
        alpha_d = self.log_alpha_d.exp().detach()
        loss_actor = (
            alpha_c * logp_new
            - (p * q_min).sum(-1)
            + alpha_d * (p * logp_pit).sum(-1)
        ).mean()
        self.opt_actor.zero_grad()
        loss_actor.backward()
        self.opt_actor.step()

        entropy_d = -(p * logp_pit).sum(-1).detach()
        loss_alpha = (
            -self.log_alpha_c * (logp_new.detach() + cfg.target_entropy_cont).mean()
            + self.log_alpha_d * (entropy_d - self.disc_entropy_target(progress)).mean()
        )
        self.opt_alpha.zero_grad()
        loss_alpha.backward()
        self.opt_alpha.step()

        with torch.no_grad():
            for net, tgt in ((self.q1, self.q1_t), (self.q2, self.q2_t)):
                for w, wt in zip(net.parameters(), tgt.parameters()):
                    wt.mul_(1.0 - cfg.tau).add_(cfg.tau * w)

        losses = {
            "q": float(loss_q.item()),
            "actor": float(loss_actor.item()),
            "alpha_c": float(self.log_alpha_c.exp().item()),
            "alpha_d": float(self.log_alpha_d.exp().item()),
            "entropy_d": float(entropy_d.mean().item()),
        }
        if not all(np.isfinite(v) for v in losses.values()):
            raise NonFiniteLoss(f"non-finite training losses: {losses}")
        return losses

    # Persistence ------------------------------------------------------------

    def state_dict(self) -> dict:
        return {
            "version": 1,
            "train_config": vars(self.cfg) | {
                "hidden": list(self.cfg.hidden),
                "disturb_magnitude": list(self.cfg.disturb_magnitude),
                "disturb_lap_frac": list(self.cfg.disturb_lap_frac),
            },
            "shapes": {
                name: [list(p.shape) for p in module.parameters()]
                for name, module in (("actor", self.actor), ("q1", self.q1), ("q2", self.q2))
            },
            "actor": self.actor.state_dict(),
            "q1": self.q1.state_dict(),
            "q2": self.q2.state_dict(),
            "q1_t": self.q1_t.state_dict(),
            "q2_t": self.q2_t.state_dict(),
            "log_alpha_c": self.log_alpha_c.detach().clone(),
            "log_alpha_d": self.log_alpha_d.detach().clone(),
        }

    def load_state_dict(self, payload: dict) -> None:
        self.actor.load_state_dict(payload["actor"])
        self.q1.load_state_dict(payload["q1"])
        self.q2.load_state_dict(payload["q2"])
        self.q1_t.load_state_dict(payload["q1_t"])
        self.q2_t.load_state_dict(payload["q2_t"])
        with torch.no_grad():
            self.log_alpha_c.copy_(payload["log_alpha_c"])
            self.log_alpha_d.copy_(payload["log_alpha_d"])
