"""
Core planning services for the Pareto MCTS toolkit.

This subpackage contains dominance relations, the bandit lab, the Gaussian-process model,
Dubins motion primitives, ground-truth environments, the Pareto MCTS planner and the mission runner.
"""
