
from importlib.util import module_from_spec, spec_from_file_location
from pathlib import Path
import sys


ROOT_DIR = Path(__file__).resolve().parent
BACKEND_DIR = ROOT_DIR / "wcperiod" / "backend"
BACKEND_MAIN = BACKEND_DIR / "main.py"

if str(BACKEND_DIR) not in sys.path:
    sys.path.insert(0, str(BACKEND_DIR))

app_spec = spec_from_file_location("wcperiod_app", BACKEND_MAIN)
if app_spec is None or app_spec.loader is None:
    raise RuntimeError(f"Cannot load backend app from: {BACKEND_MAIN}")

backend_main = module_from_spec(app_spec)
app_spec.loader.exec_module(backend_main)
app = backend_main.app


if __name__ == "__main__":
    import os

    import uvicorn

    uvicorn.run(
        app,
        host=os.getenv("WCPERIOD_HOST", "127.0.0.1"),
        port=int(os.getenv("WCPERIOD_PORT", "8000")),
        log_level=backend_main.LOG_LEVEL.lower(),
    )
