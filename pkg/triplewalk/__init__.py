"""
Triple embeddings from knowledge graphs and homogeneous graphs
"""

__version__ = "1.0.0"
