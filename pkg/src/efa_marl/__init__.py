"""efa_marl: a desk-scale multi-agent RL workbench.

Subpackages: numerics (arrays/autodiff/layers), envs (particle worlds),
efa (first-mover election), qlearn (value-decomposition Q-learning),
trainer (training/evaluation/ablation), cli (command-line front end).
"""

__version__ = "0.1.0"
