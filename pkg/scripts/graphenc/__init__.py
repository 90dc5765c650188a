"""Syntax-aware graph encoder toolkit.

Library modules for the text front-end, dependency graphs, GCN numerics,
the encoder pipeline, monotonic alignment, the tile-parallel engine and the
tensor container format, plus the ``cli`` entry point.
"""
