"""Pydantic request/response models for the pipeline service.

Paths in requests are server-local; the bundled CLI runs the app in-process
so they resolve on the caller's own filesystem.
"""

from __future__ import annotations

from pydantic import BaseModel, Field


class SynthRequest(BaseModel):
    out_dir: str
    n_files: int = 140
    vowels_per_file: int = 3
    seed: int = 7


class SynthResponse(BaseModel):
    out_dir: str
    files: int
    vowel_segments: int


class PrepareRequest(BaseModel):
    corpus_dir: str
    out_dir: str
    min_duration: int = 1500
    max_duration: int = 2000
    pad_to: int = 2000
    partition: str | None = None


class PrepareResponse(BaseModel):
    manifest: str
    segments: int
    front: int
    back: int


class FeaturesRequest(BaseModel):
    manifest: str
    out_dir: str
    weights: str | None = None
    random_weights_seed: int | None = None
    pooling: str = "mean"


class FeaturesResponse(BaseModel):
    params: dict
    dims: dict[str, int]
    rows: dict[str, int]
    formant_failures: list[str] = Field(default_factory=list)
    checksums: dict[str, str] = Field(default_factory=dict)


class TrainRequest(BaseModel):
    features_dir: str
    out_dir: str
    sets: str = "all"
    folds: int = 5
    seed: int = 42
    test_fraction: float = 0.2
    c_values: list[float] | None = None  # None = full 0.5..5.0 grid
    tol: float = 1e-3
    max_passes: int = 10


class SetResult(BaseModel):
    feature_set: str
    best: dict
    cv_mean_accuracy: float
    test_accuracy: float
    confusion: list[list[int]]
    n_train: int
    n_test: int
    cells_evaluated: int
    scaled: bool


class TrainResponse(BaseModel):
    summary: dict
    results: dict[str, SetResult]


class MiRequest(BaseModel):
    features_dir: str
    out_dir: str
    k: int = 10
    pairs: int = 2000
    max_samples: int = 2000
    seed: int = 0
    reduction: str = "mean_pairs"
    target: str = "mfcc"


class MiResponse(BaseModel):
    target: str
    per_layer: list[float]
    pairs: list[int]
    samples: list[int]
    k: int
    reduction: str
    seed: int


class ReportRequest(BaseModel):
    run_dir: str
    out_dir: str


class ReportResponse(BaseModel):
    report_dir: str
    results: list[dict]
    mi: dict | None = None


class RunRequest(BaseModel):
    corpus_dir: str
    out_dir: str
    weights: str | None = None
    random_weights_seed: int | None = None
    pooling: str = "mean"
    partition: str | None = None
    test_fraction: float = 0.2
    seed: int = 42
    folds: int = 5
    sets: str = "all"
    mi_k: int = 10
    mi_pairs: int = 2000
    mi_max_samples: int = 2000
    mi_target: str = "mfcc"
    c_values: list[float] | None = None
    tol: float = 1e-3
    max_passes: int = 10
    min_duration: int = 1500
    max_duration: int = 2000
    pad_to: int = 2000


class RunResponse(BaseModel):
    out_dir: str
    results: list[dict]
    mi: dict | None = None


class ErrorPayload(BaseModel):
    kind: str  # "config" | "data" | "convergence" | "error"
    message: str
