import json
import subprocess
import sys

import pytest

NINE = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9]


def benchmark_cli(args):
    """Run the benchmark CLI as a subprocess; the file formats it writes are
    the only interface this package consumes."""
    proc = subprocess.run([sys.executable, "-m", "mpbandit.cli", *args],
                          capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    return proc


@pytest.fixture(scope="session")
def benchmark_outputs(tmp_path_factory):
    """Small compare / run / lower-bounds outputs to render from."""
    root = tmp_path_factory.mktemp("benchmark")

    compare_cfg = root / "compare.json"
    compare_cfg.write_text(json.dumps({
        "means": NINE, "M": 6, "T": 400, "reps": 16, "seed": 4242,
        "policies": ["mctopm-klucb", "rhorand-klucb", "randtopm-klucb",
                     "centralized-klucb"]}))
    benchmark_cli(["compare", "--config", str(compare_cfg),
                   "--out", str(root / "compare")])

    run_cfg = root / "run.json"
    run_cfg.write_text(json.dumps({
        "means": [0.1, 0.5, 0.9], "M": 2, "T": 400, "reps": 60, "seed": 99,
        "policy": "selfish-klucb"}))
    benchmark_cli(["run", "--config", str(run_cfg),
                   "--out", str(root / "selfish")])

    benchmark_cli(["lower-bounds",
                   "--means", ",".join(str(m) for m in NINE),
                   "--out", str(root / "bounds")])

    return {"compare": root / "compare", "selfish": root / "selfish",
            "bounds": root / "bounds"}
