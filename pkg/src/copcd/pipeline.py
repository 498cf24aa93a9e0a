"""End-to-end orchestration: translate -> co-segment -> fit -> detect -> score.

Training uses the (X, Y') co-segmentation; testing re-segments (X, Y). The
fitted marginals (training ECDFs) are reused for the test statistics.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import detector, emfit, metrics, segmentation, translate
from .copula import ChannelPairModels, CopulaMixtureModel, clamp_pseudo_obs
from .dependence import ORIENT_NEGATED, DependenceProfile, empirical_cdf, orient
from .raster import (
    Raster,
    export_graymap,
    load_binary_map,
    load_raster,
    pca_reduce,
    save_binary_map,
    save_raster,
)

MIN_REGION = 10


@dataclass(frozen=True)
class PipelineConfig:
    pre: str = None
    post: str = None
    translated: str = None
    gt: str = None
    out_dir: str = "."
    model: str = None  # pre-fitted model.json, skips EM
    ns_model: int = 1000
    ns_test: int = 2000
    alpha: float = 5.0
    eps: float = 0.01
    theta_max: float = 20.0
    pca: int = None
    compactness: float = 10.0
    translate_method: str = translate.METHOD_HISTOGRAM
    seed: int = 0

    def __post_init__(self):
        if self.ns_model < 10 or self.ns_test < 10:
            raise ValueError("ns_model and ns_test must be >= 10")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")


def worker_count(n_tasks: int) -> int:
    cap = os.environ.get("COMIC_THREADS", "")
    if cap.strip():
        return max(1, min(int(cap), n_tasks))
    return max(1, min(4, n_tasks))


class StageError(Exception):
    """Wraps a failure with the name of the pipeline stage that raised it."""

    def __init__(self, stage: str, cause: Exception):
        super().__init__(f"stage {stage!r}: {cause}")
        self.stage = stage
        self.cause = cause


def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except Exception as exc:
        raise StageError(name, exc) from exc


def fit_channel_pair(x_samples, y_samples, em_config: emfit.EmConfig):
    """Dependence profile + EM fit for one channel pair's feature samples."""
    profile = DependenceProfile.from_samples(x_samples, y_samples)
    n = len(x_samples)
    ecdf_x = empirical_cdf(x_samples)
    ecdf_y = empirical_cdf(y_samples)
    u = clamp_pseudo_obs(ecdf_x(x_samples), n)
    v = clamp_pseudo_obs(orient(ecdf_y(y_samples), profile.tau), n)
    (rho, theta, w), trace = emfit.fit(u, v, profile.tail_mode, em_config)
    model = CopulaMixtureModel(
        rho=rho, theta=theta, w=w, tail_mode=profile.tail_mode,
        orientation=profile.orientation, n_train=n,
    )
    return model, profile, trace


def fit_model_set(feat_x: np.ndarray, feat_y: np.ndarray,
                  em_config: emfit.EmConfig,
                  records: dict | None = None):
    """Fit (or adopt pre-fitted) models for every channel pair.

    Returns (ChannelPairModels, {pair: EmTrace or None}).
    """
    cx = feat_x.shape[1]
    cy = feat_y.shape[1]
    ecdfs_x = tuple(empirical_cdf(feat_x[:, c]) for c in range(cx))
    ecdfs_y = tuple(empirical_cdf(feat_y[:, c]) for c in range(cy))
    pairs = [(c1, c2) for c1 in range(1, cx + 1) for c2 in range(1, cy + 1)]

    models = {}
    traces = {}
    if records is not None:
        for pair in pairs:
            if pair not in records:
                raise ValueError(f"model file lacks channel pair {pair}")
            models[pair] = records[pair]
            traces[pair] = None
    else:
        def job(pair):
            c1, c2 = pair
            return fit_channel_pair(feat_x[:, c1 - 1], feat_y[:, c2 - 1], em_config)

        if len(pairs) > 1 and worker_count(len(pairs)) > 1:
            with ThreadPoolExecutor(max_workers=worker_count(len(pairs))) as pool:
                results = list(pool.map(job, pairs))
        else:
            results = [job(p) for p in pairs]
        for pair, (model, _profile, trace) in zip(pairs, results):
            models[pair] = model
            traces[pair] = trace
    return ChannelPairModels(cx=cx, cy=cy, models=models,
                             ecdfs_x=ecdfs_x, ecdfs_y=ecdfs_y), traces


def cosegment_pair(a: Raster, b: Raster, target: int, compactness: float, seed: int):
    seg_a = segmentation.slic(a, target, compactness, seed)
    seg_b = segmentation.slic(b, target, compactness, seed)
    return segmentation.cosegment(seg_a, seg_b, MIN_REGION)


def write_traces_csv(traces: dict, path: str) -> None:
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["c1", "c2", "iteration", "log_likelihood", "rho", "theta",
                         "w", "mean_gamma1", "status"])
        for (c1, c2), trace in sorted(traces.items()):
            if trace is None:
                continue
            for row in trace.rows:
                writer.writerow([c1, c2, *row, trace.status])


def run_detect(config: PipelineConfig) -> dict:
    """Full detection pipeline; returns a dict of computed artifacts."""
    if config.pre is None or config.post is None:
        raise StageError("load", ValueError("--pre and --post are required"))

    x = _stage("load", load_raster, config.pre)
    y = _stage("load", load_raster, config.post)
    if config.pca is not None:
        x = _stage("pca", pca_reduce, x, min(config.pca, x.channels))
        y = _stage("pca", pca_reduce, y, min(config.pca, y.channels))

    if config.translated is not None:
        y_t = _stage("translate", load_raster, config.translated)
        if (y_t.height, y_t.width, y_t.channels) != (y.height, y.width, y.channels):
            raise StageError("translate",
                             ValueError("translated raster shape mismatch"))
    else:
        spec = translate.TranslationSpec(method=config.translate_method)
        y_t = _stage("translate", translate.translate_baseline, x, y, spec)

    seg_train = _stage("segment", cosegment_pair, x, y_t, config.ns_model,
                       config.compactness, config.seed)
    feat_x_train = _stage("features", segmentation.extract_features, x, seg_train)
    feat_y_train = _stage("features", segmentation.extract_features, y_t, seg_train)

    records = None
    if config.model is not None:
        from .copula import load_model_records

        records = _stage("fit", load_model_records, config.model)
    em_config = emfit.EmConfig(eps=config.eps, theta_max=config.theta_max)
    model_set, traces = _stage("fit", fit_model_set, feat_x_train, feat_y_train,
                               em_config, records)

    seg_test = _stage("segment", cosegment_pair, x, y, config.ns_test,
                      config.compactness, config.seed)
    feat_x_test = _stage("features", segmentation.extract_features, x, seg_test)
    feat_y_test = _stage("features", segmentation.extract_features, y, seg_test)

    t = _stage("detect", detector.test_statistics, feat_x_test, feat_y_test, model_set)
    diff = _stage("detect", detector.fuse_difference, t)
    rep = _stage("detect", detector.representative_vectors, feat_x_test, feat_y_test,
                 diff, config.alpha)
    bcm = _stage("detect", detector.two_stage_bcm, rep, diff, seg_test, config.seed)

    out = {
        "model_set": model_set,
        "traces": traces,
        "seg_train": seg_train,
        "seg_test": seg_test,
        "stat_tensor": t,
        "diff": diff,
        "bcm": bcm,
        "translated": y_t,
    }
    if config.gt is not None:
        gt = _stage("score", load_binary_map, config.gt)
        out["report"] = _stage("score", metrics.score, bcm, gt)
    return out


def write_artifacts(result: dict, config: PipelineConfig) -> None:
    os.makedirs(config.out_dir, exist_ok=True)
    join = lambda name: os.path.join(config.out_dir, name)

    with open(join("model.json"), "w") as fh:
        fh.write(result["model_set"].to_json())
        fh.write("\n")
    write_traces_csv(result["traces"], join("em_trace.csv"))

    seg_test = result["seg_test"]
    di_pixels = result["diff"].di[seg_test.labels - 1]
    save_raster(Raster.from_array(di_pixels.astype(np.float32)), join("di"))
    export_graymap(di_pixels, join("di.pgm"))

    bcm = result["bcm"]
    save_binary_map(bcm, join("bcm"))
    export_graymap(bcm.astype(np.float64) * 255.0, join("bcm.pgm"))

    if "report" in result:
        with open(join("metrics.json"), "w") as fh:
            fh.write(result["report"].to_json())
            fh.write("\n")


def run_fit_pairs(u_samples, v_samples, config: PipelineConfig):
    """Fit a single-pair model directly from raw sample columns."""
    em_config = emfit.EmConfig(eps=config.eps, theta_max=config.theta_max)
    model, profile, trace = fit_channel_pair(u_samples, v_samples, em_config)
    ecdf_u = empirical_cdf(u_samples)
    ecdf_v = empirical_cdf(v_samples)
    model_set = ChannelPairModels(cx=1, cy=1, models={(1, 1): model},
                                  ecdfs_x=(ecdf_u,), ecdfs_y=(ecdf_v,))
    return model_set, {(1, 1): trace}


def run_fit(config: PipelineConfig) -> dict:
    """Training half of the pipeline: translate, co-segment, fit, emit models."""
    if config.pre is None or config.post is None:
        raise StageError("load", ValueError("--pre and --post are required"))
    x = _stage("load", load_raster, config.pre)
    y = _stage("load", load_raster, config.post)
    if config.pca is not None:
        x = _stage("pca", pca_reduce, x, min(config.pca, x.channels))
        y = _stage("pca", pca_reduce, y, min(config.pca, y.channels))
    if config.translated is not None:
        y_t = _stage("translate", load_raster, config.translated)
    else:
        spec = translate.TranslationSpec(method=config.translate_method)
        y_t = _stage("translate", translate.translate_baseline, x, y, spec)
    seg_train = _stage("segment", cosegment_pair, x, y_t, config.ns_model,
                       config.compactness, config.seed)
    feat_x = _stage("features", segmentation.extract_features, x, seg_train)
    feat_y = _stage("features", segmentation.extract_features, y_t, seg_train)
    em_config = emfit.EmConfig(eps=config.eps, theta_max=config.theta_max)
    model_set, traces = _stage("fit", fit_model_set, feat_x, feat_y, em_config)
    return {"model_set": model_set, "traces": traces}
