"""Toolkit for learning keyword queries per fact-checked claim and measuring
how web communities discuss and influence each other.

Subpackages cover the pipeline end to end: document ingestion and querying
(`corpus`), claim loading and candidate generation (`claims`), ranking
features (`features`), the learning-to-rank core (`ltr`), per-community word
embeddings (`embeddings`), cross-community event influence (`hawkes`),
lifespan/toxicity/distribution analytics (`analytics`), and orchestration
(`pipeline`, `server`, `cli`).
"""

__version__ = "0.1.0"
