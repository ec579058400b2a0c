"""leafspec: hyperspectral soybean-leaf SDS diagnosis.

Cube I/O (HSC, MAT v5 subset, ENVI BIL), calibration and binning,
GA band selection with CNN fitness, ten classical classifiers on CNN
features, stratified cross-validation, and an HTTP diagnosis service.
"""
from .cube import CubeError, HyperCube, Stage

__version__ = "0.1.0"
__all__ = ["HyperCube", "Stage", "CubeError", "__version__"]
