import json
import math
from pathlib import Path
from typing import Any, Dict, List, Tuple, Union

import numpy as np
from pydantic import TypeAdapter

from windcast.configuration.monitor import get_logger
from windcast.models.mod_model import (
    EpochRecord,
    FCNNKind,
    GRUKind,
    ModelKind,
    RidgeKind,
    TrainConfig,
    TrainedModel,
)
from windcast.models.mod_window import Normalizer, WindowedSet, WindowSpec
from windcast.services.svc_networks import NetworkService, Params
from windcast.services.svc_windowing import WindowingService
from windcast.validators.val_errors import DataError, NumericError
from windcast.validators.val_model import ModelValidator

logger = get_logger(__name__)

DOCUMENT_FORMAT = "windcast.model/1"
_kind_adapter = TypeAdapter(ModelKind)


class ModelService:
    @staticmethod
    def ridge_solve(X: np.ndarray, y: np.ndarray, lam: float) -> Tuple[np.ndarray, float]:
        """
        Closed-form ridge regression with an unpenalized intercept.
        Returns (weights, intercept).
        """
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        n, d = X.shape
        design = np.hstack([X, np.ones((n, 1))])
        penalty = np.full(d + 1, lam)
        penalty[-1] = 0.0
        gram = design.T @ design + np.diag(penalty)
        rhs = design.T @ y
        if lam == 0.0 and np.linalg.matrix_rank(gram) < d + 1:
            raise NumericError(
                "ridge normal equations are singular with lambda=0; use lambda > 0",
                code="singular_system",
            )
        try:
            solution = np.linalg.solve(gram, rhs)
        except np.linalg.LinAlgError as exc:
            raise NumericError(
                f"ridge normal equations could not be solved ({exc}); use lambda > 0",
                code="singular_system",
            ) from exc
        return solution[:-1], float(solution[-1])

    @staticmethod
    def fit(windowed: WindowedSet, kind: ModelKind, config: TrainConfig = TrainConfig()) -> TrainedModel:
        """
        Fit a model on the normalized train split, selecting on the val split.

        Ridge is solved in closed form and records a single epoch. Networks train
        with mini-batch Adam, seeded shuffling and early stopping; the returned
        parameters are those of the best validation epoch.
        """
        ModelValidator.validate_splits(len(windowed.train), len(windowed.val))
        normalizer = windowed.normalizer
        X_train, y_train = WindowingService.normalized(windowed.train, normalizer)
        X_val, y_val = WindowingService.normalized(windowed.val, normalizer)
        logger.info("Fitting %s on %d train / %d val samples", kind.kind, len(y_train), len(y_val))

        if isinstance(kind, RidgeKind):
            weights, intercept = ModelService.ridge_solve(X_train.reshape(len(y_train), -1), y_train, kind.lam)
            params = {"weights": weights, "intercept": np.array([intercept])}
            train_loss = float(np.mean((ModelService._forward(kind, params, X_train) - y_train) ** 2))
            val_loss = float(np.mean((ModelService._forward(kind, params, X_val) - y_val) ** 2))
            history = [EpochRecord(epoch=0, train_loss=train_loss, val_loss=val_loss)]
            best_epoch = 0
        else:
            params, history, best_epoch = ModelService._train_network(
                kind, windowed.spec, X_train, y_train, X_val, y_val, config
            )

        return TrainedModel(
            kind=kind,
            spec=windowed.spec,
            parameters=params,
            normalizer=normalizer,
            config=config,
            history=history,
            best_epoch=best_epoch,
        )

    @staticmethod
    def _train_network(
        kind: Union[FCNNKind, GRUKind],
        spec: WindowSpec,
        X_train: np.ndarray,
        y_train: np.ndarray,
        X_val: np.ndarray,
        y_val: np.ndarray,
        config: TrainConfig,
    ) -> Tuple[Params, List[EpochRecord], int]:
        rng = np.random.default_rng(config.seed)
        params = NetworkService.init_params(kind, spec.past_steps, spec.feature_count, rng)
        first_moment = {name: np.zeros_like(value) for name, value in params.items()}
        second_moment = {name: np.zeros_like(value) for name, value in params.items()}
        step = 0
        history: List[EpochRecord] = []
        best_params = {name: value.copy() for name, value in params.items()}
        best_epoch, best_val, stale = 0, math.inf, 0

        for epoch in range(config.max_epochs):
            order = rng.permutation(len(y_train))
            for start in range(0, len(order), config.batch_size):
                batch = order[start:start + config.batch_size]
                _, grads = NetworkService.loss_and_grads(kind, params, X_train[batch], y_train[batch])
                step += 1
                for name in params:
                    first_moment[name] = config.beta1 * first_moment[name] + (1.0 - config.beta1) * grads[name]
                    second_moment[name] = config.beta2 * second_moment[name] + (1.0 - config.beta2) * grads[name] ** 2
                    m_hat = first_moment[name] / (1.0 - config.beta1 ** step)
                    v_hat = second_moment[name] / (1.0 - config.beta2 ** step)
                    params[name] = params[name] - config.learning_rate * m_hat / (np.sqrt(v_hat) + config.epsilon)

            with np.errstate(over="ignore", invalid="ignore"):
                train_loss = NetworkService.loss(kind, params, X_train, y_train)
                val_loss = NetworkService.loss(kind, params, X_val, y_val)
            if not (math.isfinite(val_loss) and math.isfinite(train_loss)):
                last = history[-1].epoch if history else None
                raise NumericError(
                    f"training diverged at epoch {epoch}; last finite epoch: {last}",
                    code="divergence",
                    details={"epoch": epoch, "last_finite_epoch": last},
                )
            history.append(EpochRecord(epoch=epoch, train_loss=train_loss, val_loss=val_loss))
            logger.debug("epoch %d train %.6f val %.6f", epoch, train_loss, val_loss)

            if val_loss < best_val:
                best_val, best_epoch, stale = val_loss, epoch, 0
                best_params = {name: value.copy() for name, value in params.items()}
            else:
                stale += 1
                if stale >= config.early_stop_patience:
                    logger.info("Early stop at epoch %d; best epoch %d", epoch, best_epoch)
                    break
        return best_params, history, best_epoch

    @staticmethod
    def _forward(kind: ModelKind, params: Params, inputs: np.ndarray) -> np.ndarray:
        """Prediction in normalized target space for normalized (N, P, F) inputs."""
        if isinstance(kind, RidgeKind):
            return inputs.reshape(inputs.shape[0], -1) @ params["weights"] + params["intercept"][0]
        return NetworkService.forward(kind, params, inputs)

    @staticmethod
    def predict(model: TrainedModel, inputs: np.ndarray) -> np.ndarray:
        """
        Predictions in original target units for (N, P, F) windows, or a single
        (P, F) window (returned as a length-1 array).
        """
        inputs = np.asarray(inputs, dtype=float)
        ModelValidator.validate_input_shape(inputs, model.input_shape)
        if inputs.ndim == 2:
            inputs = inputs[None]
        z = model.normalizer.apply_inputs(inputs)
        return model.normalizer.invert_target(ModelService._forward(model.kind, model.parameters, z))

    # persistence

    @staticmethod
    def to_document(model: TrainedModel) -> Dict[str, Any]:
        return {
            "format": DOCUMENT_FORMAT,
            "kind": model.kind.model_dump(mode="json"),
            "spec": model.spec.model_dump(mode="json"),
            "parameters": {
                name: {"shape": list(value.shape), "values": value.reshape(-1).tolist()}
                for name, value in model.parameters.items()
            },
            "normalizer": model.normalizer.model_dump(mode="json"),
            "config": model.config.model_dump(mode="json"),
            "history": [record.model_dump(mode="json") for record in model.history],
            "best_epoch": model.best_epoch,
        }

    @staticmethod
    def from_document(document: Dict[str, Any]) -> TrainedModel:
        if document.get("format") != DOCUMENT_FORMAT:
            raise DataError(f"not a model document: format={document.get('format')!r}", code="invalid_model_file")
        parameters = {
            name: np.asarray(entry["values"], dtype=float).reshape(entry["shape"])
            for name, entry in document["parameters"].items()
        }
        return TrainedModel(
            kind=_kind_adapter.validate_python(document["kind"]),
            spec=WindowSpec.model_validate(document["spec"]),
            parameters=parameters,
            normalizer=Normalizer.model_validate(document["normalizer"]),
            config=TrainConfig.model_validate(document["config"]),
            history=[EpochRecord.model_validate(record) for record in document["history"]],
            best_epoch=document["best_epoch"],
        )

    @staticmethod
    def save(model: TrainedModel, path: Union[str, Path]) -> None:
        Path(path).write_text(json.dumps(ModelService.to_document(model), indent=2) + "\n", encoding="utf-8")

    @staticmethod
    def load(path: Union[str, Path]) -> TrainedModel:
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read model file {path}: {exc}", code="invalid_model_file") from exc
        return ModelService.from_document(document)
