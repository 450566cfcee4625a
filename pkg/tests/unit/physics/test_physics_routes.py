import pytest
from fastapi import FastAPI
from fastapi.testclient import TestClient

from windcast.dependencies.dep_turbine import get_turbine
from windcast.models.mod_turbine import TurbineSpec
from windcast.routers.rou_physics import router

app = FastAPI()
app.include_router(router)


@pytest.fixture
def client():
    app.dependency_overrides[get_turbine] = lambda: TurbineSpec()
    yield TestClient(app)
    app.dependency_overrides.clear()


class TestPhysicsRoutes:
    def test_convert_default_height(self, client):
        response = client.post("/physics/convert", json={"speed": 9.3})
        assert response.status_code == 200
        body = response.json()
        assert body["height"] == 3.8
        assert body["hub_height"] == 100.0
        assert body["band"] == "partial_load"
        assert body["hub_speed"] == pytest.approx(12.387, abs=1e-3)

    def test_convert_above_cut_out(self, client):
        body = client.post("/physics/convert", json={"speed": 20.0}).json()
        assert body["band"] == "cut_out"
        assert body["power_w"] == 0.0

    def test_negative_speed_rejected_by_schema(self, client):
        assert client.post("/physics/convert", json={"speed": -1.0}).status_code == 422

    def test_height_under_roughness_is_a_numeric_error(self, client):
        response = client.post("/physics/convert", json={"speed": 5.0, "height": 0.0001})
        assert response.status_code == 422
        assert response.json()["detail"]["code"] == "domain_error"

    def test_bands(self, client):
        body = client.get("/physics/bands").json()
        assert body["ratio"] == pytest.approx(1.33193, abs=1e-5)
        assert body["start"] == pytest.approx(2.2524, abs=1e-3)
        assert body["rated"] == pytest.approx(9.3098, abs=1e-3)
        assert body["cutoff"] == pytest.approx(18.7697, abs=1e-3)
        assert body["cp"] == pytest.approx(0.3957, abs=1e-4)

    def test_bands_with_inconsistent_turbine(self, client):
        app.dependency_overrides[get_turbine] = lambda: TurbineSpec(rotor_diameter=50.0)
        response = client.get("/physics/bands")
        assert response.status_code == 422
        assert response.json()["detail"]["code"] == "betz_limit"
