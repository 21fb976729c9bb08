import os
import subprocess
import sys

import pytest

ACCEPTANCE_SEED = int(os.environ.get("SASFLOW_ACCEPTANCE_SEED", "20240917"))


@pytest.fixture(scope="session")
def verify_runs(tmp_path_factory):
    """Two identical `verify --all` runs; each entry is (process, output directory)."""
    base = tmp_path_factory.mktemp("verify")
    runs = []
    for name in ("first", "second"):
        out = base / name
        cmd = [sys.executable, "-m", "sasflow.cli", "verify", "--all", "--seed", str(ACCEPTANCE_SEED),
               "--no-timestamp", "--out", str(out)]
        proc = subprocess.run(cmd, capture_output=True, text=True)
        runs.append((proc, out))
    return runs


def pytest_terminal_summary(terminalreporter):
    lines = []
    for status in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(status, []):
            props = dict(getattr(rep, "user_properties", []))
            if "criterion" in props and rep.when == "call":
                lines.append((props["criterion"], "PASS" if status == "passed" else "FAIL",
                              props.get("summary", "")))
    if lines:
        terminalreporter.section("acceptance criteria")
        for cid, verdict, summary in sorted(lines):
            terminalreporter.write_line(f"criterion {cid:2d}: {verdict}  {summary}")
