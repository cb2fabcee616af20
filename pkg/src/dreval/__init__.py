"""dreval - doubly robust off-policy evaluation and optimization for contextual bandit logs."""

__version__ = "0.1.0"
