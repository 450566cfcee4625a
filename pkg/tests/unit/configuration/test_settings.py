import importlib
import logging
from pathlib import Path

import pytest
from fastapi.testclient import TestClient

from windcast import apimain
from windcast.apimain import app
from windcast.configuration.config import Settings, get_settings
from windcast.configuration.monitor import configure_logging, get_logger
from windcast.validators.val_errors import DataError, NumericError, UsageError


class TestSettings:
    def test_defaults(self, monkeypatch):
        for name in ("WINDCAST_LOG_LEVEL", "WINDCAST_OUTPUT_DIR", "WINDCAST_MASTER_SEED", "WINDCAST_TURBINE_CONFIG"):
            monkeypatch.delenv(name, raising=False)
        settings = Settings(_env_file=None)
        assert settings.master_seed == 42
        assert settings.output_dir == Path("out")
        assert settings.turbine_config is None

    def test_environment_overrides(self, monkeypatch):
        monkeypatch.setenv("WINDCAST_MASTER_SEED", "7")
        monkeypatch.setenv("WINDCAST_MAX_WORKERS", "4")
        settings = Settings()
        assert settings.master_seed == 7
        assert settings.max_workers == 4


class TestLogging:
    def test_loggers_live_under_package_root(self):
        assert get_logger("windcast.services.svc_ingest").name == "windcast.services.svc_ingest"
        assert get_logger("tests").name == "windcast.tests"

    def test_configure_is_idempotent(self):
        root = configure_logging("warning")
        configure_logging("debug")
        assert len([h for h in root.handlers if getattr(h, "_windcast", False)]) == 1
        assert root.level == logging.DEBUG


class TestErrors:
    @pytest.mark.parametrize("error_type, exit_code", [(UsageError, 1), (DataError, 2), (NumericError, 3)])
    def test_exit_codes(self, error_type, exit_code):
        assert error_type("boom").exit_code == exit_code

    def test_context_and_dict(self):
        error = DataError("series too short", code="series_too_short", details={"rows": 5})
        error.with_context("Case 3").with_context("sweep")
        assert str(error) == "series too short (sweep - Case 3)"
        assert error.to_dict() == {
            "code": "series_too_short",
            "message": "series too short",
            "context": "sweep - Case 3",
            "details": {"rows": 5},
        }


class TestApp:
    def test_routers_are_mounted(self):
        paths = {route.path for route in app.routes}
        assert {"/physics/convert", "/physics/bands", "/metrics/evaluate", "/forecast/predict"} <= paths

    def test_openapi_title(self):
        assert TestClient(app).get("/openapi.json").json()["info"]["title"] == "windcast API"

    def test_app_configures_package_logging(self, monkeypatch):
        monkeypatch.setenv("WINDCAST_LOG_LEVEL", "ERROR")
        get_settings.cache_clear()
        try:
            importlib.reload(apimain)
            root = logging.getLogger("windcast")
            assert root.level == logging.ERROR
            assert any(getattr(h, "_windcast", False) for h in root.handlers)
        finally:
            get_settings.cache_clear()
            configure_logging("INFO")
