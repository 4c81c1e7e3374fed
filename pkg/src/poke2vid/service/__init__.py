"""Poke-to-video synthesis over HTTP."""

from .app import (
    AdmissionPool,
    ModelStore,
    PokeRequest,
    ServiceSettings,
    create_app,
    fit_to_native,
    serve,
    synthesize,
)

__all__ = [
    "AdmissionPool",
    "ModelStore",
    "PokeRequest",
    "ServiceSettings",
    "create_app",
    "fit_to_native",
    "serve",
    "synthesize",
]
