"""
Pydantic schemas for the Pareto MCTS toolkit.

This subpackage defines validated configuration objects, log records and API request/response bodies.
"""
