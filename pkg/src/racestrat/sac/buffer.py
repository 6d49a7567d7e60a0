"""Uniform-sampling ring replay buffer."""

from __future__ import annotations

import numpy as np


class ReplayBuffer:
    def __init__(self, obs_dim: int, capacity: int, seed: int = 0):
        self.capacity = capacity
        self.obs = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.obs2 = np.zeros((capacity, obs_dim), dtype=np.float32)
        self.a_cont = np.zeros((capacity, 2), dtype=np.float32)
        self.a_disc = np.zeros(capacity, dtype=np.int64)
        self.reward = np.zeros(capacity, dtype=np.float32)
        self.done = np.zeros(capacity, dtype=np.float32)
        self.ptr = 0
        self.size = 0
        self.rng = np.random.default_rng(seed)

    def push(self, obs, a_cont, a_disc, reward, obs2, done):
        i = self.ptr
        self.obs[i] = obs
        self.a_cont[i] = a_cont
        self.a_disc[i] = a_disc
        self.reward[i] = reward
        self.obs2[i] = obs2
        self.done[i] = done
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, batch_size: int) -> dict[str, np.ndarray]:
        idx = self.rng.integers(0, self.size, size=batch_size)
        return {
            "obs": self.obs[idx],
            "a_cont": self.a_cont[idx],
            "a_disc": self.a_disc[idx],
            "reward": self.reward[idx],
            "obs2": self.obs2[idx],
            "done": self.done[idx],
        }

    def __len__(self) -> int:
        return self.size
