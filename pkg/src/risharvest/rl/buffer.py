"""Uniform replay buffer over preallocated float64 rings."""

import numpy as np


class ReplayBuffer:
    def __init__(self, capacity, state_dim, action_dim):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = int(capacity)
        self.state = np.zeros((self.capacity, state_dim))
        self.action = np.zeros((self.capacity, action_dim))
        self.reward = np.zeros(self.capacity)
        self.next_state = np.zeros((self.capacity, state_dim))
        self.done = np.zeros(self.capacity)
        self._next = 0
        self._size = 0

    def __len__(self):
        return self._size

    def add(self, state, action, reward, next_state, done):
        i = self._next
        self.state[i] = state
        self.action[i] = action
        self.reward[i] = reward
        self.next_state[i] = next_state
        self.done[i] = float(done)
        self._next = (i + 1) % self.capacity
        self._size = min(self._size + 1, self.capacity)

    def sample(self, rng, batch_size):
        """Uniform batch without replacement; raises if the buffer is
        smaller than the request."""
        if batch_size > self._size:
            raise ValueError("buffer holds %d < batch %d"
                             % (self._size, batch_size))
        idx = rng.choice(self._size, size=batch_size, replace=False)
        return {
            "state": self.state[idx],
            "action": self.action[idx],
            "reward": self.reward[idx],
            "next_state": self.next_state[idx],
            "done": self.done[idx],
        }
