"""HTTP diagnosis service and model registry."""
from .app import ApiError, ServiceConfig, create_app
from .registry import (HashMismatch, LoadedModel, ManifestEntry, ModelRegistry,
                       register_model, sha256_hex)
from .store import CubeHandle, CubeStore

__all__ = [
    "create_app", "ServiceConfig", "ApiError",
    "ModelRegistry", "ManifestEntry", "LoadedModel", "register_model",
    "sha256_hex", "HashMismatch", "CubeStore", "CubeHandle",
]
