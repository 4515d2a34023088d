"""stylecurator: triplet curation, curriculum composition, and evaluation
for content-preserving style transfer training."""

__version__ = "0.1.0"
