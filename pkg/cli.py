from importlib.util import module_from_spec, spec_from_file_location
from pathlib import Path
import sys


ROOT_DIR = Path(__file__).resolve().parent
BACKEND_DIR = ROOT_DIR / "wcperiod" / "backend"
BACKEND_CLI = BACKEND_DIR / "cli.py"

if str(BACKEND_DIR) not in sys.path:
    sys.path.insert(0, str(BACKEND_DIR))

cli_spec = spec_from_file_location("wcperiod_cli", BACKEND_CLI)
if cli_spec is None or cli_spec.loader is None:
    raise RuntimeError(f"Cannot load backend CLI from: {BACKEND_CLI}")

backend_cli = module_from_spec(cli_spec)
cli_spec.loader.exec_module(backend_cli)

if __name__ == "__main__":
    sys.exit(backend_cli.main())
