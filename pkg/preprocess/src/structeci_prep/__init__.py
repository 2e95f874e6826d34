"""Offline preprocessing toolchain for the structeci retrieval engine.

Turns raw sample corpora into the files the engine consumes: one
CoNLL-U dependency parse per sample and a JSONL embedding table for
event surfaces and concept-node labels. The boundary between the two
packages is those file formats, nothing else.
"""

__version__ = "0.1.0"
