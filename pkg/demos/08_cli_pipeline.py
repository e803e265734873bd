"""Drive the command-line interface end to end in a temporary directory:
enumerate -> train -> sample -> score -> verify.

Run:  python3 demos/08_cli_pipeline.py        (~30 seconds)
"""

import tempfile
from pathlib import Path

import yaml

from codonflow.cli import main

with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp) / "run"
    config = {
        "seed": 11,
        "threads": 1,
        "policy": {"hidden": 16, "l_max": 16},
        "training": {
            "loss": "subtb",
            "batch_size": 8,
            "n_iterations": 40,
            "epsilon": 0.25,
            "conditional": False,
            "fixed_weights": [0.3, 0.3, 0.4],
            "seed": 11,
        },
        "run": {
            "schedule": "none",
            "protein": "MKTAYIALKE",
            "weights": [0.3, 0.3, 0.4],
            "n_samples": 50,
            "top_n": 10,
            "output_dir": str(out),
        },
    }
    cfg_path = Path(tmp) / "run.yaml"
    cfg_path.write_text(yaml.safe_dump(config, sort_keys=True))

    enum_config = dict(config, run=dict(config["run"], protein="MFK"))
    enum_path = Path(tmp) / "enum.yaml"
    enum_path.write_text(yaml.safe_dump(enum_config, sort_keys=True))

    for argv in (
        ["enumerate", "--config", str(enum_path)],
        ["train", "--config", str(cfg_path)],
    ):
        print(f"\n$ codonflow {' '.join(argv[:1])} ...")
        assert main(argv) == 0

    fasta = Path(tmp) / "candidates.fasta"
    fasta.write_text(">wild\nAUGAAGACCGCU\n>alt\nAUGAAAACAGCA\n")
    config["run"]["checkpoint"] = str(out / "checkpoint.json")
    config["run"]["protein_file"] = str(fasta)
    cfg_path.write_text(yaml.safe_dump(config, sort_keys=True))
    for argv in (
        ["sample", "--config", str(cfg_path)],
        ["score", "--config", str(cfg_path)],
        ["verify", "--config", str(cfg_path)],
    ):
        print(f"\n$ codonflow {' '.join(argv[:1])} ...")
        assert main(argv) == 0

    print("\nartifacts written:")
    for path in sorted(out.rglob("*")):
        if path.is_file():
            print(f"  {path.relative_to(tmp)}  ({path.stat().st_size} bytes)")
