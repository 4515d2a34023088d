"""embed_extractor: batch embedding extraction and aesthetic-head export.

Writes the line-delimited sidecar and head files the curation pipeline
consumes; all coupling to the pipeline is through those file formats.
"""

__version__ = "0.1.0"
