"""JSON model files.

Only the seed is stored for the frequencies; they are regenerated on load
and compared against a SHA-256 checksum so that a change in the generator
is detected instead of silently producing a different model.
"""

import hashlib
import json

import numpy as np

from ..errors import InvalidParameterError
from ..features import build_feature_map
from ..kernels import KernelSpec
from .ridge import RidgeModel

FORMAT_VERSION = 1


def frequency_checksum(omegas):
    data = np.ascontiguousarray(omegas, dtype="<f8")
    return hashlib.sha256(data.tobytes()).hexdigest()


def model_to_dict(model):
    fmap = model.fmap
    return {
        "format_version": FORMAT_VERSION,
        "spec": fmap.spec.to_dict(),
        "seed": fmap.seed,
        "D": fmap.D,
        "lambda": model.lam,
        "theta": model.Theta.tolist(),
        "freq_checksum": frequency_checksum(fmap.omegas),
    }


def model_from_dict(data):
    if data.get("format_version") != FORMAT_VERSION:
        raise InvalidParameterError(f"unsupported model format {data.get('format_version')!r}")
    try:
        spec = KernelSpec.from_dict(data["spec"])
        fmap = build_feature_map(spec, int(data["D"]), int(data["seed"]))
        Theta = np.asarray(data["theta"], dtype=float)
        lam = float(data["lambda"])
        checksum = data["freq_checksum"]
    except KeyError as exc:
        raise InvalidParameterError(f"model file lacks field {exc}") from None
    if frequency_checksum(fmap.omegas) != checksum:
        raise InvalidParameterError("regenerated frequencies do not match the stored checksum")
    return RidgeModel(fmap, Theta, lam, {"method": "loaded"})


def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model_to_dict(model), fh)
        fh.write("\n")


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return model_from_dict(json.load(fh))
