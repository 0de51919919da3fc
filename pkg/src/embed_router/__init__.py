"""Expert-model routing over shared hidden-layer embeddings.

Clients train local autoencoders and publish only 128-dim embeddings;
a central registry of centroids assigns each query to the best expert
dataset and class by cosine similarity.
"""

__version__ = "0.1.0"
