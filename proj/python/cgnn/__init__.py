"""Two-stage graph-attention IV estimator for networked treatment effects."""

from ._cgnn import (
    CgnnError,
    Fit,
    Instance,
    Network,
    exposure,
    feature_distributions,
    fit,
    kl_divergence,
    load_instance,
    mse,
    peer_weight,
    peer_weights,
    pehe,
    random_network,
    run_pipeline,
    simulate,
)

__all__ = [
    "CgnnError",
    "Fit",
    "Instance",
    "Network",
    "exposure",
    "feature_distributions",
    "fit",
    "kl_divergence",
    "load_instance",
    "mse",
    "peer_weight",
    "peer_weights",
    "pehe",
    "random_network",
    "run_pipeline",
    "simulate",
]
