"""Route classifiers over the (dv, mp) feature plane.

Three learners share one predict contract: k-nearest neighbours, a
Gaussian/Bernoulli naive Bayes, and a Gini decision tree. Models are
immutable once fitted and serialize to versioned YAML model files.
"""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Protocol

import numpy as np
import yaml

from crossroad.dataset import Dataset
from crossroad.errors import InvalidParameterError, ParseError
from crossroad.models import ROUTES, Route, Sample, validate_mp

logger = logging.getLogger(__name__)

MODEL_FORMAT = "crossroad-model"
MODEL_VERSION = 1
ALGORITHMS = ("knn", "nb", "dt")
FEATURES = ("dv", "mp")

DEFAULT_K = 5
DEFAULT_MAX_DEPTH = 8
VARIANCE_FLOOR = 1e-9
# Tolerance for accepting a zero-gain split under float rounding.
GINI_EPSILON = 1e-12


class TrainedModel(Protocol):
    """Uniform prediction contract of every fitted classifier."""

    algo: str

    def predict(self, dv: float, mp: int) -> Route: ...


def predict_dataset(model: TrainedModel, data: Dataset) -> list[Route]:
    """Predict a route for every sample in a dataset."""
    return [model.predict(s.dv, s.mp) for s in data]


def accuracy(model: TrainedModel, data: Dataset) -> float:
    """Fraction of samples whose label the model reproduces."""
    if len(data) == 0:
        return 0.0
    hits = sum(p is s.label for p, s in zip(predict_dataset(model, data), data))
    return hits / len(data)


# --------------------------------------------------------------------------- #
# k-nearest neighbours
# --------------------------------------------------------------------------- #


@dataclass(frozen=True, eq=False)
class KnnModel:
    """Stored training set plus the neighbour count.

    Attributes:
        k: Odd number of neighbours that vote.
        dv: Training dv values.
        mp: Training mobility patterns (as floats).
        is_turn: Training labels as booleans (True for turn).
    """

    k: int
    dv: np.ndarray
    mp: np.ndarray
    is_turn: np.ndarray
    algo: str = "knn"

    def predict(self, dv: float, mp: int) -> Route:
        """Majority route among the k nearest training points.

        Euclidean distance on the raw (dv, mp) plane; equal distances keep
        training order.
        """
        d_dv = self.dv - dv
        d_mp = self.mp - mp
        distances = np.sqrt(d_dv * d_dv + d_mp * d_mp)
        nearest = np.argsort(distances, kind="stable")[: self.k]
        turns = int(np.count_nonzero(self.is_turn[nearest]))
        return Route.TURN if 2 * turns > self.k else Route.STRAIGHT


def knn_fit(data: Dataset, k: int = DEFAULT_K) -> KnnModel:
    """Store the training set for k-nearest-neighbour voting.

    Single-class data is allowed.

    Raises:
        InvalidParameterError: If k is even, below 1, or above len(data).
    """
    if k < 1 or k % 2 == 0:
        raise InvalidParameterError(f"k must be an odd integer >= 1, got {k}")
    if k > len(data):
        raise InvalidParameterError(f"k={k} exceeds the {len(data)} training samples")
    features = data.features()
    model = KnnModel(
        k=k,
        dv=features[:, 0].copy(),
        mp=features[:, 1].copy(),
        is_turn=np.array([s.label is Route.TURN for s in data], dtype=bool),
    )
    for array in (model.dv, model.mp, model.is_turn):
        array.setflags(write=False)
    return model


# --------------------------------------------------------------------------- #
# Naive Bayes
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class NbClassParams:
    """Per-class naive Bayes parameters.

    Attributes:
        prior: Class frequency in the training set.
        mean: Gaussian mean of dv.
        variance: Gaussian variance of dv (floored).
        p_mp: Laplace-smoothed P(mp = 1).
    """

    prior: float
    mean: float
    variance: float
    p_mp: float

    def log_score(self, dv: float, mp: int) -> float:
        """Return log prior + log Gaussian density + log Bernoulli mass."""
        log_density = -0.5 * math.log(2.0 * math.pi * self.variance) - (
            (dv - self.mean) ** 2
        ) / (2.0 * self.variance)
        log_mass = math.log(self.p_mp if mp == 1 else 1.0 - self.p_mp)
        return math.log(self.prior) + log_density + log_mass


@dataclass(frozen=True)
class NbModel:
    """Gaussian (dv) x Bernoulli (mp) naive Bayes.

    Attributes:
        params: Parameters keyed by route.
    """

    params: dict[Route, NbClassParams]
    algo: str = "nb"

    def scores(self, dv: float, mp: int) -> dict[Route, float]:
        """Return the unnormalized log score of each route.

        Args:
            dv: Velocity difference v2 - v1.
            mp: Mobility pattern (0 or 1).

        Returns:
            Log prior + log density + log mass, keyed by route.
        """
        return {route: self.params[route].log_score(dv, mp) for route in ROUTES}

    def predict(self, dv: float, mp: int) -> Route:
        """Route with the highest log score; an exact tie goes to S."""
        scores = self.scores(dv, mp)
        if scores[Route.TURN] > scores[Route.STRAIGHT]:
            return Route.TURN
        return Route.STRAIGHT


def nb_fit(data: Dataset) -> NbModel:
    """Fit class priors, Gaussian dv parameters and smoothed mp rates.

    Raises:
        DegenerateDatasetError: If either class is missing.
    """
    data.require_both_classes()
    features = data.features()
    labels = np.array([s.label is Route.TURN for s in data], dtype=bool)
    params = {}
    for route, mask in ((Route.STRAIGHT, ~labels), (Route.TURN, labels)):
        dv = features[mask, 0]
        mp = features[mask, 1]
        n = int(mask.sum())
        params[route] = NbClassParams(
            prior=n / len(data),
            mean=float(dv.mean()),
            variance=max(float(dv.var()), VARIANCE_FLOOR),
            p_mp=(float(mp.sum()) + 1.0) / (n + 2.0),
        )
    return NbModel(params=params)


# --------------------------------------------------------------------------- #
# Decision tree
# --------------------------------------------------------------------------- #


@dataclass(frozen=True)
class DtNode:
    """One node of a flattened decision tree.

    Attributes:
        feature: Index into FEATURES, or -1 for a leaf.
        threshold: Split threshold; value <= threshold goes left.
        left: Index of the left child, or -1 for a leaf.
        right: Index of the right child, or -1 for a leaf.
        n_straight: Training S samples reaching this node.
        n_turn: Training T samples reaching this node.
        label: Majority label of the samples reaching this node.
    """

    feature: int
    threshold: float
    left: int
    right: int
    n_straight: int
    n_turn: int
    label: Route

    @property
    def is_leaf(self) -> bool:
        """True when the node has no children."""
        return self.left < 0


@dataclass(frozen=True)
class DtModel:
    """Binary CART tree stored as a flat node list (root at index 0).

    Attributes:
        nodes: Nodes in build order.
        max_depth: Depth limit the tree was grown with, None if unlimited.
    """

    nodes: tuple[DtNode, ...]
    max_depth: int | None = DEFAULT_MAX_DEPTH
    algo: str = "dt"

    def predict(self, dv: float, mp: int) -> Route:
        """Walk from the root; value <= threshold goes left."""
        values = (dv, float(mp))
        node = self.nodes[0]
        while not node.is_leaf:
            node = self.nodes[
                node.left if values[node.feature] <= node.threshold else node.right
            ]
        return node.label

    def depth(self) -> int:
        """Return the length of the longest root-to-leaf path."""
        deepest = 0
        stack = [(0, 0)]
        while stack:
            index, depth = stack.pop()
            node = self.nodes[index]
            deepest = max(deepest, depth)
            if not node.is_leaf:
                stack.append((node.left, depth + 1))
                stack.append((node.right, depth + 1))
        return deepest

    def leaves(self) -> list[DtNode]:
        """Return the leaf nodes in build order."""
        return [node for node in self.nodes if node.is_leaf]


def _majority(n_straight: int, n_turn: int) -> Route:
    """Return the majority route; a tie goes to S."""
    return Route.TURN if n_turn > n_straight else Route.STRAIGHT


def _gini(n_straight: np.ndarray, n_turn: np.ndarray) -> np.ndarray:
    """Gini impurity of class counts, elementwise.

    Args:
        n_straight: S counts (nonzero total with n_turn).
        n_turn: T counts.

    Returns:
        1 - p_S^2 - p_T^2 for each position.
    """
    total = n_straight + n_turn
    return 1.0 - (n_straight / total) ** 2 - (n_turn / total) ** 2


def _best_split(x: np.ndarray, is_turn: np.ndarray) -> tuple[int, float, float] | None:
    """Find the split with the lowest weighted Gini impurity.

    Candidate thresholds are midpoints between consecutive distinct
    sorted values. Ties prefer dv over mp, then the lower threshold.

    Returns:
        (feature, threshold, weighted_gini), or None when every feature
        is constant.
    """
    n = len(is_turn)
    total_turn = int(is_turn.sum())
    best: tuple[int, float, float] | None = None
    for feature in range(len(FEATURES)):
        values = x[:, feature]
        order = np.argsort(values, kind="stable")
        sorted_values = values[order]
        cum_turn = np.cumsum(is_turn[order])[:-1].astype(float)
        distinct = sorted_values[:-1] != sorted_values[1:]
        if not distinct.any():
            continue
        n_left = np.arange(1, n, dtype=float)
        n_right = n - n_left
        left_turn = cum_turn
        right_turn = total_turn - cum_turn
        weighted = (
            n_left * _gini(n_left - left_turn, left_turn)
            + n_right * _gini(n_right - right_turn, right_turn)
        ) / n
        weighted = np.where(distinct, weighted, np.inf)
        position = int(np.argmin(weighted))
        score = float(weighted[position])
        if best is None or score < best[2]:
            threshold = (sorted_values[position] + sorted_values[position + 1]) / 2.0
            best = (feature, float(threshold), score)
    return best


def dt_fit(data: Dataset, max_depth: int | None = DEFAULT_MAX_DEPTH) -> DtModel:
    """Grow a Gini decision tree greedily.

    A node becomes a leaf when it is pure, sits at max_depth, or has no
    split that keeps the weighted impurity at or below its own (which in
    exact arithmetic means every sample shares one feature vector).

    Args:
        data: Training samples with both classes present.
        max_depth: Depth limit (root is depth 0), or None for no limit.

    Raises:
        DegenerateDatasetError: If either class is missing.
        InvalidParameterError: If max_depth is below 1.
    """
    if max_depth is not None and max_depth < 1:
        raise InvalidParameterError(f"max_depth must be >= 1, got {max_depth}")
    data.require_both_classes()
    x = data.features()
    is_turn = np.array([s.label is Route.TURN for s in data], dtype=bool)

    built: list[dict[str, Any]] = []
    pending = [(np.arange(len(data)), 0, -1, "")]
    while pending:
        indices, depth, parent, side = pending.pop()
        n_turn = int(is_turn[indices].sum())
        n_straight = len(indices) - n_turn
        node = {
            "feature": -1,
            "threshold": 0.0,
            "left": -1,
            "right": -1,
            "n_straight": n_straight,
            "n_turn": n_turn,
            "label": _majority(n_straight, n_turn),
        }
        index = len(built)
        built.append(node)
        if parent >= 0:
            built[parent][side] = index

        if n_turn == 0 or n_straight == 0:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        split = _best_split(x[indices], is_turn[indices])
        if split is None:
            continue
        feature, threshold, score = split
        parent_gini = float(_gini(np.float64(n_straight), np.float64(n_turn)))
        if score > parent_gini + GINI_EPSILON:
            continue
        node["feature"] = feature
        node["threshold"] = threshold
        goes_left = x[indices, feature] <= threshold
        # Right pushed first so the left subtree is built (and numbered) first.
        pending.append((indices[~goes_left], depth + 1, index, "right"))
        pending.append((indices[goes_left], depth + 1, index, "left"))

    model = DtModel(nodes=tuple(DtNode(**node) for node in built), max_depth=max_depth)
    logger.debug(
        "Grew decision tree with %d nodes, depth %d", len(model.nodes), model.depth()
    )
    return model


# --------------------------------------------------------------------------- #
# Dispatch and model files
# --------------------------------------------------------------------------- #


def fit(
    algo: str,
    data: Dataset,
    k: int = DEFAULT_K,
    max_depth: int | None = DEFAULT_MAX_DEPTH,
) -> TrainedModel:
    """Fit the named algorithm ("knn", "nb" or "dt")."""
    if algo == "knn":
        return knn_fit(data, k)
    if algo == "nb":
        return nb_fit(data)
    if algo == "dt":
        return dt_fit(data, max_depth)
    raise InvalidParameterError(
        f"Unknown algorithm {algo!r}; expected one of {ALGORITHMS}"
    )


def model_to_dict(model: TrainedModel) -> dict[str, Any]:
    """Convert a model to its model-file mapping."""
    doc: dict[str, Any] = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "algo": model.algo,
        "features": list(FEATURES),
    }
    if isinstance(model, KnnModel):
        doc["k"] = model.k
        doc["training"] = [
            [float(dv), int(mp), Route.TURN.value if turn else Route.STRAIGHT.value]
            for dv, mp, turn in zip(model.dv, model.mp, model.is_turn)
        ]
    elif isinstance(model, NbModel):
        doc["classes"] = {
            route.value: {
                "prior": p.prior,
                "mean": p.mean,
                "variance": p.variance,
                "p_mp": p.p_mp,
            }
            for route, p in model.params.items()
        }
    elif isinstance(model, DtModel):
        doc["max_depth"] = model.max_depth
        doc["nodes"] = [
            {
                "feature": FEATURES[n.feature] if n.feature >= 0 else None,
                "threshold": n.threshold,
                "left": n.left,
                "right": n.right,
                "counts": [n.n_straight, n.n_turn],
                "label": n.label.value,
            }
            for n in model.nodes
        ]
    else:
        raise InvalidParameterError(
            f"Cannot serialize model of type {type(model).__name__}"
        )
    return doc


def _require(doc: dict[str, Any], key: str) -> Any:
    """Return doc[key], raising ParseError when it is absent."""
    if key not in doc:
        raise ParseError(f"Model file is missing required field: {key}")
    return doc[key]


def _route(value: Any) -> Route:
    """Parse an S/T label from a model file."""
    try:
        return Route(value)
    except ValueError as exc:
        raise ParseError(f"Invalid label {value!r} in model file") from exc


def model_from_dict(doc: Any) -> TrainedModel:
    """Rebuild a model from its model-file mapping.

    Raises:
        ParseError: On an unknown format/version/algorithm, a malformed
            parameter block, or parameter values the model cannot use.
    """
    if not isinstance(doc, dict):
        raise ParseError("Model file must contain a mapping")
    if doc.get("format") != MODEL_FORMAT:
        raise ParseError(f"Not a {MODEL_FORMAT} file (format={doc.get('format')!r})")
    if doc.get("version") != MODEL_VERSION:
        raise ParseError(f"Unsupported model file version {doc.get('version')!r}")
    if doc.get("features") != list(FEATURES):
        raise ParseError(f"Feature schema mismatch: {doc.get('features')!r}")
    algo = _require(doc, "algo")

    try:
        if algo == "knn":
            rows = _require(doc, "training")
            dataset = Dataset([_sample(row, i) for i, row in enumerate(rows, start=1)])
            return knn_fit(dataset, int(_require(doc, "k")))
        if algo == "nb":
            classes = _require(doc, "classes")
            params = {
                route: _nb_params(classes[route.value], route) for route in ROUTES
            }
            return NbModel(params=params)
        if algo == "dt":
            nodes = []
            for raw in _require(doc, "nodes"):
                feature = raw["feature"]
                n_straight, n_turn = raw["counts"]
                nodes.append(
                    DtNode(
                        feature=FEATURES.index(feature) if feature is not None else -1,
                        threshold=float(raw["threshold"]),
                        left=int(raw["left"]),
                        right=int(raw["right"]),
                        n_straight=int(n_straight),
                        n_turn=int(n_turn),
                        label=_route(raw["label"]),
                    )
                )
            _check_tree(nodes)
            return DtModel(nodes=tuple(nodes), max_depth=_max_depth(doc))
    except ParseError:
        raise
    except (KeyError, TypeError, ValueError, OverflowError) as exc:
        raise ParseError(f"Malformed {algo} model parameters: {exc}") from exc
    raise ParseError(f"Unknown algorithm {algo!r} in model file")


def _sample(row: Any, index: int) -> Sample:
    """Parse one stored KNN training row ([dv, mp, label])."""
    if not isinstance(row, list) or len(row) != 3:
        raise ParseError(f"Training row {index} must be [dv, mp, label]")
    dv, mp, label = row
    if not math.isfinite(float(dv)):
        raise ParseError(f"Training row {index} has a non-finite dv: {dv!r}")
    return Sample(dv=float(dv), mp=validate_mp(int(mp)), label=_route(label))


def _probability(raw: Any, name: str, route: Route) -> float:
    """Read a model-file probability that must lie strictly in (0, 1)."""
    value = float(raw)
    if not 0.0 < value < 1.0:
        raise ParseError(f"{route.value} {name} must lie in (0, 1), got {raw!r}")
    return value


def _nb_params(raw: dict[str, Any], route: Route) -> NbClassParams:
    """Read one class block of a naive Bayes model file.

    Args:
        raw: The block under ``classes.<S|T>``.
        route: Class the block belongs to (for messages).

    Returns:
        Parameters every log term of the score is defined for.

    Raises:
        ParseError: If the mean is not finite, the variance is not
            positive, or prior/p_mp fall outside (0, 1).
    """
    mean = float(raw["mean"])
    variance = float(raw["variance"])
    if not math.isfinite(mean):
        raise ParseError(f"{route.value} mean must be finite, got {raw['mean']!r}")
    if not (variance > 0.0 and math.isfinite(variance)):
        raise ParseError(
            f"{route.value} variance must be positive, got {raw['variance']!r}"
        )
    return NbClassParams(
        prior=_probability(raw["prior"], "prior", route),
        mean=mean,
        variance=variance,
        p_mp=_probability(raw["p_mp"], "p_mp", route),
    )


def _check_tree(nodes: list[DtNode]) -> None:
    """Reject node lists predict() could not walk.

    Children always come after their parent in build order, so walking
    from the root visits strictly increasing indices and ends at a leaf.

    Raises:
        ParseError: On an empty tree, a node with one child, a child
            index outside the tree or not after its parent, a split
            without a feature, or a leaf whose label disagrees with its
            counts.
    """
    if not nodes:
        raise ParseError("Decision tree has no nodes")
    for index, node in enumerate(nodes):
        if node.n_straight < 0 or node.n_turn < 0:
            raise ParseError(f"Node {index} has negative counts")
        if (node.left < 0) != (node.right < 0):
            raise ParseError(f"Node {index} has exactly one child")
        if node.is_leaf:
            if node.label is not _majority(node.n_straight, node.n_turn):
                raise ParseError(
                    f"Leaf {index} label {node.label.value} disagrees with its "
                    f"counts {node.n_straight}/{node.n_turn}"
                )
            continue
        if node.feature < 0:
            raise ParseError(f"Node {index} has children but no split feature")
        if not math.isfinite(node.threshold):
            raise ParseError(f"Node {index} threshold must be finite")
        for child in (node.left, node.right):
            if not index < child < len(nodes):
                raise ParseError(
                    f"Node {index} child {child} must come after it and lie "
                    f"within the {len(nodes)} nodes"
                )


def _max_depth(doc: dict[str, Any]) -> int | None:
    """Read the optional depth limit of a tree model file."""
    value = doc.get("max_depth")
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, int) or value < 1:
        raise ParseError(f"max_depth must be a positive integer, got {value!r}")
    return value



def save_model(model: TrainedModel, path: str | Path) -> None:
    """Write a model file (YAML, byte-stable for a given model)."""
    text = yaml.safe_dump(
        model_to_dict(model), sort_keys=False, default_flow_style=None
    )
    Path(path).write_text(text, encoding="utf-8", newline="\n")
    logger.info("Saved %s model to %s", model.algo, path)


def load_model(path: str | Path) -> TrainedModel:
    """Read a model file.

    Raises:
        ParseError: If the file is not valid YAML or not a model file.
    """
    try:
        doc = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ParseError(f"Model file is not valid YAML: {exc}") from exc
    model = model_from_dict(doc)
    logger.info("Loaded %s model from %s", model.algo, path)
    return model
