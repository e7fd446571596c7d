"""Population estimation from biased photo collections.

The package turns a pile of annotated wildlife photographs into an abundance
estimate in three moves: learn how much of each photographer's material went
unshared (``features`` + ``models`` + ``bias``), inflate per-collection
sighting counts by the learned coefficient, and feed the corrected counts
through an open-population Jolly-Seber estimator (``jolly_seber``). A
synthetic-world simulator (``synth``) provides ground truth for end-to-end
validation, and ``pipeline`` / the ``photocensus`` CLI wire the stages
together.
"""

__version__ = "0.1.0"
