"""
Custom middleware for the Pareto MCTS toolkit.

This subpackage maps domain exceptions to HTTP responses.
"""
