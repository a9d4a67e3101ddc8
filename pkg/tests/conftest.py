import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from vowelprobe import convenc, corpus, synth


@pytest.fixture(scope="session")
def weight_store():
    return convenc.random_weight_store(seed=11)


@pytest.fixture(scope="session")
def mini_corpus(tmp_path_factory):
    """Small synthetic TIMIT-style tree: 16 files, 48 in-range vowel segments."""
    root = tmp_path_factory.mktemp("mini_corpus")
    info = synth.make_synthetic_corpus(root, n_files=16, vowels_per_file=3, seed=5)
    return root, info


@pytest.fixture(scope="session")
def mini_segments(mini_corpus):
    root, _ = mini_corpus
    return corpus.scan_corpus(root)


def make_segment(samples_head: np.ndarray, phone: str = "iy", pad_to: int = 2000) -> corpus.AudioSegment:
    samples = np.zeros(pad_to)
    samples[: len(samples_head)] = samples_head
    vclass = corpus.label_vowel(phone) or corpus.VowelClass.FRONT
    return corpus.AudioSegment(
        samples=samples,
        original_length=len(samples_head),
        phone=phone,
        vclass=vclass,
        source="test/utt",
        speaker="test",
        start=0,
        end=len(samples_head),
    )
