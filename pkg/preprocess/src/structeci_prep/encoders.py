"""Embedding backends mapping text keys to fixed-width vectors.

The default backend hashes character trigrams into a small signed
vector. It needs no model files, is fully deterministic, and keeps the
one property retrieval relies on: identical keys get identical vectors
(cosine exactly 1.0), while unrelated keys land close to orthogonal.
A sentence-transformers backend is available when that package and a
model are installed.
"""

from __future__ import annotations

import hashlib
import logging
import math

from .errors import ConfigError

logger = logging.getLogger(__name__)


class HashingTrigramEncoder:
    """Signed feature hashing over character trigrams, L2-normalized."""

    id = "hash3-256-v1"
    dim = 256

    def encode(self, key: str) -> list[float]:
        padded = f" {key.lower()} "
        vector = [0.0] * self.dim
        for start in range(len(padded) - 2):
            trigram = padded[start : start + 3]
            digest = hashlib.md5(trigram.encode("utf-8")).digest()
            value = int.from_bytes(digest[:8], "big")
            sign = -1.0 if value >> 63 else 1.0
            vector[value % self.dim] += sign
        norm = math.sqrt(sum(component * component for component in vector))
        if norm == 0.0:
            vector[0] = 1.0
            return vector
        return [component / norm for component in vector]


class SentenceTransformerEncoder:
    """Dense text encoder via sentence-transformers."""

    def __init__(self, model: str = "all-MiniLM-L6-v2"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ConfigError(
                "sentence-transformers backend requested but the package is "
                "not installed (pip install 'structeci-prep[st]')"
            ) from exc
        try:
            self._model = SentenceTransformer(model)
        except Exception as exc:
            raise ConfigError(f"could not load sentence-transformers model {model!r}: {exc}") from exc
        self.id = f"st/{model}"
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, key: str) -> list[float]:
        return [float(x) for x in self._model.encode(key, normalize_embeddings=True)]


def get_encoder(name: str):
    if name in ("hash3", HashingTrigramEncoder.id):
        return HashingTrigramEncoder()
    if name.startswith("st"):
        _, _, model = name.partition("/")
        return SentenceTransformerEncoder(model) if model else SentenceTransformerEncoder()
    raise ConfigError(f"unknown encoder backend {name!r} (try 'hash3' or 'st/<model>')")
