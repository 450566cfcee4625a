from fastapi import FastAPI

from windcast import __version__
from windcast.configuration.config import get_settings
from windcast.configuration.monitor import configure_logging
from windcast.routers import rou_forecast, rou_metrics, rou_physics

configure_logging(get_settings().log_level)

app = FastAPI(
    title="windcast API",
    description="Wind speed and power forecasting toolkit",
    version=__version__,
)

app.include_router(rou_physics.router)
app.include_router(rou_metrics.router)
app.include_router(rou_forecast.router)

if __name__ == '__main__':
    import uvicorn
    uvicorn.run(app, host='0.0.0.0', port=8000)
