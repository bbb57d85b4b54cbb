"""
API routing modules for the Pareto MCTS toolkit.

This subpackage organizes the FastAPI routers exposing Pareto fronts, bandit experiments and missions.
"""
