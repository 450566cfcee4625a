import math
from enum import Enum
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

# Candidate met features considered for selection, in report order.
CANDIDATE_FEATURES: Tuple[str, ...] = ("WDIR", "WSPD", "GST", "PRES", "ATMP", "WTMP", "DEWP")


class CorrelationMatrix(BaseModel):
    """Pearson correlation matrix. NaN marks entries left undefined by a zero-variance feature."""

    model_config = ConfigDict(frozen=True)

    feature_names: Tuple[str, ...]
    values: Tuple[Tuple[float, ...], ...]
    undefined: Tuple[str, ...] = ()
    row_count: int = 0

    @model_validator(mode="after")
    def check_matrix(self) -> "CorrelationMatrix":
        size = len(self.feature_names)
        if len(self.values) != size or any(len(row) != size for row in self.values):
            raise ValueError("correlation matrix must be square over feature_names")
        for i in range(size):
            if self.values[i][i] != 1.0:
                raise ValueError("diagonal entries must be exactly 1")
            for j in range(size):
                v = self.values[i][j]
                if math.isnan(v):
                    if not math.isnan(self.values[j][i]):
                        raise ValueError("matrix must be symmetric")
                    continue
                if v != self.values[j][i]:
                    raise ValueError("matrix must be symmetric")
                if not -1.0 <= v <= 1.0:
                    raise ValueError("correlations must lie in [-1, 1]")
        return self

    def get(self, a: str, b: str) -> float:
        return self.values[self.feature_names.index(a)][self.feature_names.index(b)]


class ForestConfig(BaseModel):
    tree_count: int = Field(default=100, ge=1)
    max_depth: int = Field(default=12, ge=0)
    min_samples_split: int = Field(default=10, ge=2)
    # None considers every feature at each split; "sqrt" draws ceil(sqrt(F)).
    max_features: Optional[str] = "sqrt"
    bootstrap: bool = True
    compute_oob: bool = False
    n_jobs: int = Field(default=1, ge=1)


class RegressionTree(BaseModel):
    """
    A fitted binary regression tree stored as parallel node arrays in preorder.
    Leaves have feature == -1; internal nodes send x[feature] <= threshold left.
    """

    model_config = ConfigDict(frozen=True)

    feature: Tuple[int, ...]
    threshold: Tuple[float, ...]
    left: Tuple[int, ...]
    right: Tuple[int, ...]
    value: Tuple[float, ...]
    impurity_reduction: Tuple[float, ...]
    n_samples: Tuple[int, ...]

    @model_validator(mode="after")
    def check_nodes(self) -> "RegressionTree":
        if any(gain < 0 for gain in self.impurity_reduction):
            raise ValueError("impurity reduction must be non-negative at every node")
        return self

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depths = [0] * self.node_count
        for node in range(self.node_count):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return max(depths)


class RegressionForest(BaseModel):
    model_config = ConfigDict(frozen=True)

    feature_names: Tuple[str, ...]
    config: ForestConfig
    seed: int
    trees: Tuple[RegressionTree, ...]
    per_feature_gain: Tuple[float, ...]
    total_split_gain: float
    oob_r2: Optional[float] = None

    @model_validator(mode="after")
    def check_gains(self) -> "RegressionForest":
        if len(self.trees) != self.config.tree_count:
            raise ValueError("forest must hold tree_count trees")
        if any(g < 0 for g in self.per_feature_gain):
            raise ValueError("per-feature gains must be non-negative")
        if not math.isclose(sum(self.per_feature_gain), self.total_split_gain, rel_tol=1e-9, abs_tol=1e-12):
            raise ValueError("per-feature gains must sum to the total split gain")
        return self

    @property
    def tree_count(self) -> int:
        return len(self.trees)


class FeatureImportance(BaseModel):
    model_config = ConfigDict(frozen=True)

    weights: Dict[str, float]
    degenerate: bool = False


class DropReason(str, Enum):
    LOW_CORRELATION = "low-correlation"
    REDUNDANT = "redundant"
    LOW_IMPORTANCE = "low-importance"


class SelectionPolicy(BaseModel):
    target: str = "WSPD"
    low_correlation_threshold: float = 0.1
    redundancy_threshold: float = 0.85
    redundancy_blocks: List[Tuple[str, ...]] = [("ATMP", "WTMP", "DEWP")]
    # Features with importance strictly below this are dropped; 0 disables the rule.
    min_importance: float = 0.0


class FeatureSelection(BaseModel):
    model_config = ConfigDict(frozen=True)

    candidates: Tuple[str, ...]
    kept: Tuple[str, ...]
    dropped: Dict[str, DropReason]

    @model_validator(mode="after")
    def check_partition(self) -> "FeatureSelection":
        kept = set(self.kept)
        dropped = set(self.dropped)
        if kept & dropped:
            raise ValueError("a feature cannot be both kept and dropped")
        if kept | dropped != set(self.candidates):
            raise ValueError("kept and dropped must cover the candidate set")
        return self
