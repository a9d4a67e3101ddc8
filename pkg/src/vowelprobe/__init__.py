"""Front/back vowel probing toolkit.

Corpus preparation, MFCC and formant features, a seven-layer strided conv
encoder, SMO-based SVM grid search, and k-NN mutual information analysis,
wrapped in a FastAPI service with a thin CLI client.
"""

__version__ = "0.1.0"
