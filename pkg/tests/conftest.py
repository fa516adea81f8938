import numpy as np
import pytest

from contrail.corpus import Document, DocumentStore
from contrail.features import WordVectors


def make_doc(i, text, community="news", platform="reddit", kind="post", ts=None, parent=None):
    return Document(
        id=f"d{i}",
        platform=platform,
        community=community,
        kind=kind,
        timestamp=ts if ts is not None else 1_000_000 + i,
        text=text,
        parent_id=parent,
    )


def make_store(texts, **kwargs):
    store = DocumentStore()
    for i, text in enumerate(texts):
        store.add(make_doc(i, text, **kwargs))
    return store.seal()


@pytest.fixture
def toy_vectors():
    rng = np.random.default_rng(11)
    vocab = {f"w{i}": rng.standard_normal(4) for i in range(12)}
    vocab.update({"a": np.array([0.0, 0.0, 0.0, 0.0]), "b": np.array([3.0, 4.0, 0.0, 0.0])})
    return WordVectors(vocab)
