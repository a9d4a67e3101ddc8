"""FastAPI service wrapping the pipeline stages.

Domain errors surface as HTTP 400 with a typed payload the CLI maps back to
exit codes (config -> 2, data -> 3, convergence -> 4).
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import corpus, experiment, miest, svmkit, synth
from ..errors import VowelProbeError
from . import schemas


def create_app() -> FastAPI:
    app = FastAPI(title="vowelprobe", version="0.1.0")

    @app.exception_handler(VowelProbeError)
    async def domain_error(_request: Request, exc: VowelProbeError):
        payload = schemas.ErrorPayload(kind=exc.kind, message=str(exc))
        return JSONResponse(status_code=400, content={"error": payload.model_dump()})

    @app.get("/health")
    def health():
        return {"status": "ok"}

    @app.post("/synth", response_model=schemas.SynthResponse)
    def synth_corpus(req: schemas.SynthRequest):
        info = synth.make_synthetic_corpus(req.out_dir, req.n_files, req.vowels_per_file, req.seed)
        return schemas.SynthResponse(out_dir=req.out_dir, **info)

    @app.post("/prepare", response_model=schemas.PrepareResponse)
    def prepare(req: schemas.PrepareRequest):
        rules = corpus.SegmentRules(req.min_duration, req.max_duration, req.pad_to)
        info = experiment.stage_prepare(req.corpus_dir, req.out_dir, rules, req.partition)
        return schemas.PrepareResponse(
            manifest=info["manifest"], segments=info["segments"], front=info["front"], back=info["back"]
        )

    @app.post("/features", response_model=schemas.FeaturesResponse)
    def features(req: schemas.FeaturesRequest):
        info = experiment.stage_features(
            req.manifest, req.out_dir,
            weights=req.weights, random_seed=req.random_weights_seed, pooling=req.pooling,
        )
        return schemas.FeaturesResponse(
            params=info["params"],
            dims=info.get("dims", {}),
            rows=info.get("rows", {}),
            formant_failures=info.get("formant_failures", []),
            checksums=info.get("checksums", {}),
        )

    @app.post("/train", response_model=schemas.TrainResponse)
    def train(req: schemas.TrainRequest):
        grid = svmkit.GridSpec(c_values=tuple(req.c_values)) if req.c_values else svmkit.GridSpec()
        info = experiment.stage_train(
            req.features_dir, req.out_dir,
            sets=req.sets, folds=req.folds, seed=req.seed, test_fraction=req.test_fraction,
            grid=grid, tol=req.tol, max_passes=req.max_passes,
        )
        return schemas.TrainResponse(summary=info["summary"], results=info["results"])

    @app.post("/mi", response_model=schemas.MiResponse)
    def mi(req: schemas.MiRequest):
        cfg = miest.MiConfig(req.k, req.max_samples, req.pairs, req.seed, req.reduction)
        info = experiment.stage_mi(req.features_dir, req.out_dir, cfg, req.target)
        return schemas.MiResponse(**info)

    @app.post("/report", response_model=schemas.ReportResponse)
    def report(req: schemas.ReportRequest):
        info = experiment.stage_report(req.run_dir, req.out_dir)
        return schemas.ReportResponse(
            report_dir=str(Path(req.out_dir) / "report"), results=info["results"], mi=info["mi"]
        )

    @app.post("/run", response_model=schemas.RunResponse)
    def run(req: schemas.RunRequest):
        grid = svmkit.GridSpec(c_values=tuple(req.c_values)) if req.c_values else svmkit.GridSpec()
        cfg = experiment.ExperimentConfig(
            corpus_dir=req.corpus_dir, out_dir=req.out_dir,
            weights=req.weights, random_weights_seed=req.random_weights_seed,
            pooling=req.pooling, partition=req.partition,
            test_fraction=req.test_fraction, seed=req.seed, folds=req.folds, sets=req.sets,
            mi_k=req.mi_k, mi_pairs=req.mi_pairs, mi_max_samples=req.mi_max_samples,
            mi_target=req.mi_target, tol=req.tol, max_passes=req.max_passes,
            min_duration=req.min_duration, max_duration=req.max_duration, pad_to=req.pad_to,
            grid=grid,
        )
        summary = experiment.run_experiment(cfg)
        return schemas.RunResponse(out_dir=req.out_dir, results=summary["results"], mi=summary["mi"])

    return app


app = create_app()
