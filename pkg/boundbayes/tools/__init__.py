"""Async tools behind the command-line surface."""
