from windcast.configuration.config import get_settings
from windcast.models.mod_turbine import TurbineSpec
from windcast.services.svc_physics import PhysicsService


def get_turbine() -> TurbineSpec:
    """Turbine from the configured parameters file, or the embedded defaults."""
    settings = get_settings()
    if settings.turbine_config is None:
        return TurbineSpec()
    return PhysicsService.load_turbine(settings.turbine_config)
