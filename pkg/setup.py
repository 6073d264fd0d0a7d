#!/usr/bin/env python3
"""
Cycloid solver - one-step environment setup

    python setup.py

1. Checks the Python version
2. Creates solver/venv
3. Installs solver/requirements.txt
4. Creates solver/.env from the template
5. Runs the startup check
"""

import shutil
import subprocess
import sys
from pathlib import Path


class Colors:
    GREEN = '\033[92m'
    YELLOW = '\033[93m'
    RED = '\033[91m'
    BLUE = '\033[94m'
    BOLD = '\033[1m'
    END = '\033[0m'


def print_step(step_num, total, message):
    print(f"\n{Colors.BLUE}{Colors.BOLD}[{step_num}/{total}]{Colors.END} {message}")


def print_success(message):
    print(f"  {Colors.GREEN}✅ {message}{Colors.END}")


def print_warning(message):
    print(f"  {Colors.YELLOW}⚠️  {message}{Colors.END}")


def print_error(message):
    print(f"  {Colors.RED}❌ {message}{Colors.END}")


def run_command(args, cwd=None):
    """Run a command; (ok, stdout, stderr)"""
    try:
        result = subprocess.run(args, cwd=cwd, capture_output=True, text=True)
        return result.returncode == 0, result.stdout, result.stderr
    except OSError as e:
        return False, "", str(e)


def main():
    solver_dir = Path(__file__).parent.absolute() / "solver"
    venv_path = solver_dir / "venv"
    bin_dir = venv_path / ("Scripts" if sys.platform == "win32" else "bin")
    python_path = bin_dir / "python"
    total = 5

    print_step(1, total, "Checking Python version...")
    if sys.version_info < (3, 10):
        print_error(f"Python 3.10+ required, found {sys.version.split()[0]}")
        sys.exit(1)
    print_success(f"Python {sys.version.split()[0]}")

    print_step(2, total, "Creating virtual environment...")
    if venv_path.exists():
        print_success("solver/venv already exists")
    else:
        ok, _, err = run_command([sys.executable, "-m", "venv", str(venv_path)])
        if not ok:
            print_error(f"venv creation failed: {err.strip()}")
            sys.exit(1)
        print_success("solver/venv created")

    print_step(3, total, "Installing dependencies...")
    run_command([str(python_path), "-m", "pip", "install", "--upgrade", "pip", "-q"])
    ok, _, err = run_command([str(python_path), "-m", "pip", "install", "-r", "requirements.txt"], cwd=solver_dir)
    if not ok:
        print_error(f"pip install failed: {err.strip()[-300:]}")
        sys.exit(1)
    print_success("numpy, scipy, pydantic, python-dotenv, colorama, python-json-logger, pytest")

    print_step(4, total, "Creating configuration...")
    env_file, env_example = solver_dir / ".env", solver_dir / ".env.example"
    if env_file.exists():
        print_success(".env already exists")
    else:
        shutil.copy(env_example, env_file)
        print_success(".env created from .env.example")

    print_step(5, total, "Running startup check...")
    ok, out, err = run_command([str(python_path), "test_startup.py"], cwd=solver_dir)
    print(out)
    if not ok:
        print_error(err.strip() or "startup check failed")
        sys.exit(1)

    print(f"""
{Colors.BOLD}📝 NEXT STEPS:{Colors.END}

  cd solver && source venv/bin/activate
  python tools/cycloid_cli.py plane    --model lp:3
  python tools/cycloid_cli.py spectrum --model lp:3 --kmax 6 --probe 19.79
  python tools/cycloid_cli.py cycloid  --model lp:3 --k 5 --svg k5.svg
  python tools/cycloid_cli.py verify   --model euclidean
  python -m pytest tests
""")


if __name__ == "__main__":
    main()
