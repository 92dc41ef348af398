"""Heterogeneous multi-agent RL workbench.

GNN-communicating PPO agents, with (GPPO) and without (HetGPPO) parameter
sharing, on 2D multi-robot tasks, plus the evaluation machinery for
behavioral-typing and noise-resilience studies.
"""

__version__ = "0.1.0"
