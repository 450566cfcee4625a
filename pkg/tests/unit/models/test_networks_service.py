import numpy as np
import pytest

from windcast.models.mod_model import FCNNKind, GRUKind, RidgeKind
from windcast.services.svc_networks import NetworkService
from windcast.validators.val_errors import UsageError


@pytest.fixture
def batch():
    rng = np.random.default_rng(12)
    return rng.normal(size=(4, 6, 3)), rng.normal(size=4)


class TestNetworkService:
    def test_fcnn_gradients_match_finite_differences(self):
        rng = np.random.default_rng(1)
        inputs = rng.normal(size=(5, 4, 2))
        targets = rng.normal(size=5)
        kind = FCNNKind(hidden_sizes=(16, 8), activation="tanh")
        assert NetworkService.grad_check(kind, (inputs, targets), seed=3) < 1e-4

    def test_gru_gradients_match_finite_differences(self, batch):
        assert NetworkService.grad_check(GRUKind(hidden_size=8), batch, seed=4) < 1e-4

    def test_single_window_gradient_check(self, batch):
        inputs, targets = batch
        assert NetworkService.grad_check(GRUKind(hidden_size=3), (inputs[0], targets[0]), seed=5) < 1e-4

    def test_fcnn_layer_shapes(self):
        params = NetworkService.init_params(FCNNKind(hidden_sizes=(16, 8)), 4, 2, np.random.default_rng(0))
        assert [params[f"W{i}"].shape for i in range(3)] == [(8, 16), (16, 8), (8, 1)]
        assert all(not params[f"b{i}"].any() for i in range(3))

    def test_gru_parameter_names(self):
        params = NetworkService.init_params(GRUKind(hidden_size=5), 6, 3, np.random.default_rng(0))
        assert params["W_z"].shape == (3, 5)
        assert params["U_h"].shape == (5, 5)
        assert params["w_out"].shape == (5,)
        assert set(params) == {
            "W_z", "U_z", "b_z", "W_r", "U_r", "b_r", "W_h", "U_h", "b_h", "w_out", "b_out",
        }

    def test_zero_weights_bias_gradient(self):
        kind = FCNNKind(hidden_sizes=(16, 8))
        params = {
            name: np.zeros_like(value)
            for name, value in NetworkService.init_params(kind, 4, 2, np.random.default_rng(0)).items()
        }
        loss, grads = NetworkService.loss_and_grads(kind, params, np.ones((1, 4, 2)), np.array([1.5]))
        assert loss == pytest.approx(2.25)
        assert grads["b2"][0] == pytest.approx(-3.0)
        assert not grads["W0"].any()

    def test_gru_zero_weights_bias_gradient(self, batch):
        inputs, targets = batch
        kind = GRUKind(hidden_size=4)
        params = {
            name: np.zeros_like(value)
            for name, value in NetworkService.init_params(kind, 6, 3, np.random.default_rng(0)).items()
        }
        _, grads = NetworkService.loss_and_grads(kind, params, inputs, targets)
        assert grads["b_out"][0] == pytest.approx(-2.0 * targets.mean())

    def test_forward_shapes(self, batch):
        inputs, _ = batch
        for kind in (FCNNKind(hidden_sizes=(4,)), GRUKind(hidden_size=4)):
            params = NetworkService.init_params(kind, 6, 3, np.random.default_rng(0))
            assert NetworkService.forward(kind, params, inputs).shape == (4,)

    def test_ridge_has_no_network(self, batch):
        with pytest.raises(UsageError):
            NetworkService.grad_check(RidgeKind(), batch)
        with pytest.raises(UsageError):
            NetworkService.init_params(RidgeKind(), 6, 3, np.random.default_rng(0))
