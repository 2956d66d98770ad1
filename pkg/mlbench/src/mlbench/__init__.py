"""mlbench: classifier comparison over exported router-event datasets."""

from .harness import feature_importance, train_eval

__all__ = ["feature_importance", "train_eval"]
__version__ = "0.1.0"
