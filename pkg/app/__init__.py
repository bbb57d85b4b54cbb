"""
Pareto MCTS informative-planning toolkit.

This package contains the multi-objective planner, the Gaussian-process environment model,
Dubins motion primitives, the replanning mission simulator, the bandit lab that checks the
Pareto-UCB selection policy, and a thin HTTP API over all of them.
"""
