import numpy as np
import pytest

from linsep.embeddings import EmbeddingRecord, EmbeddingStore


@pytest.fixture
def vector_store():
    """Build a store from {image_id: vector} maps, one token per image."""

    def build(vectors, stage="vision"):
        store = EmbeddingStore()
        for image_id, vec in vectors.items():
            store.add(EmbeddingRecord(image_id, stage, np.asarray([vec], dtype=float)))
        return store

    return build
