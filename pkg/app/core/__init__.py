"""
Core modules for the Pareto MCTS toolkit.

This subpackage includes configuration, logging and the exception hierarchy shared by every service.
"""
