"""
Error hierarchy
Every failure raised by the pipeline derives from MFPNetError
"""
from typing import List, Optional


class MFPNetError(Exception):
    """Base class for all pipeline errors"""


class ShapeError(MFPNetError):
    """Tensor or image dimensions do not fit an operation"""


class ConfigurationError(MFPNetError):
    """A configuration value is invalid for the requested architecture or run"""


class DegenerateGeometryError(MFPNetError):
    """Landmark geometry cannot define an alignment (e.g. coincident eye centers)"""


class NumericalError(MFPNetError):
    """An operation produced NaN or Inf"""


class CheckpointError(MFPNetError):
    """Checkpoint file is malformed or does not match the model"""


class LabelingError(MFPNetError):
    """A sequence cannot be labeled under the selected frame policy"""


class LeakageError(MFPNetError):
    """A test-fold subject reached training, ZCA fitting or GAN training"""


class ManifestError(MFPNetError):
    """Manifest failed validation; carries every problem found"""

    def __init__(self, problems: List[str], path: Optional[str] = None):
        self.problems = list(problems)
        self.path = path
        where = f" ({path})" if path else ""
        joined = "; ".join(self.problems)
        super().__init__(f"Manifest invalid{where}: {joined}")


class FoldError(MFPNetError):
    """A cross-validation fold failed; the experiment is aborted"""

    def __init__(self, fold_id: int, cause: Exception):
        self.fold_id = fold_id
        self.cause = cause
        super().__init__(f"fold {fold_id} failed: {type(cause).__name__}: {cause}")
