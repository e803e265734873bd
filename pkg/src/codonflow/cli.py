"""Command-line entry point: enumerate | train | sample | score | verify.

Every command is driven by a YAML config (all keys optional) plus four
flags: --config, --seed, --threads, --format. Exit codes: 0 success,
1 verification failure, 2 refused input, 3 numeric abort. With --threads 1
identical seeds produce byte-identical output files.
"""

from __future__ import annotations

import argparse
import csv as csv_mod
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import RunConfig, config_to_dict, load_config
from .curriculum import curriculum_train, write_teacher_trace
from .environment import CodonDesignEnvironment
from .exceptions import (
    CodonflowError,
    ConfigurationError,
    InputError,
    NumericFailureError,
    TrainingAbortError,
)
from .genetic_code import MrnaSequence, Protein
from .metrics import SampleSet, metrics_report, non_dominated_mask
from .objectives import CodonUsageTable, ObjectiveScorer
from .oracle import enumerate_design_space, write_enumeration_csv
from .policy import MlpPolicy, load_checkpoint, save_checkpoint
from .proteins import load_proteins
from .training import rollout_batch, train, write_loss_trace
from .verify import run_standard_checks, verification_report

logger = logging.getLogger("codonflow")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_REFUSED = 2
EXIT_NUMERIC = 3

SAMPLE_CSV_HEADER = "sequence,gc_raw,mfe_pairs,cai,phi_gc,phi_mfe,phi_cai,reward"
SCORE_CSV_HEADER = "name," + SAMPLE_CSV_HEADER


def build_scorer(cfg: RunConfig) -> ObjectiveScorer:
    table = (
        CodonUsageTable.from_file(cfg.run.usage_table)
        if cfg.run.usage_table
        else CodonUsageTable.bundled_human()
    )
    return ObjectiveScorer(table=table, config=cfg.objectives)


def resolve_protein(cfg: RunConfig) -> Protein:
    if cfg.run.protein:
        return Protein(cfg.run.protein)
    if cfg.run.protein_file:
        pool = load_proteins(cfg.run.protein_file, cfg.run.protein_format)
        return pool[0].protein
    raise InputError("no protein given; set run.protein or run.protein_file in the config")


def out_dir(cfg: RunConfig) -> Path:
    path = Path(cfg.run.output_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def write_json(path: Path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(payload, handle, sort_keys=True, indent=2)
        handle.write("\n")


def _objective_row(scorer: ObjectiveScorer, seq: MrnaSequence, weights) -> list[str]:
    vec = scorer.objectives(seq)
    reward = float(scorer.reward_from_phi(vec.phi[None, :], np.asarray(weights))[0])
    return [
        seq.nucleotides,
        repr(vec.gc_raw),
        repr(vec.mfe_raw),
        repr(vec.cai_raw),
        repr(float(vec.phi[0])),
        repr(float(vec.phi[1])),
        repr(float(vec.phi[2])),
        repr(reward),
    ]


# --- commands ----------------------------------------------------------------


def cmd_enumerate(cfg: RunConfig) -> int:
    scorer = build_scorer(cfg)
    protein = resolve_protein(cfg)
    space = enumerate_design_space(protein, scorer, cap=cfg.run.cap)
    directory = out_dir(cfg)
    csv_path = directory / "enumerate.csv"
    write_enumeration_csv(csv_path, space, scorer, cfg.run.weights)
    summary = {
        "size": space.size,
        "Z": space.partition(cfg.run.weights),
        "front_size": int(non_dominated_mask(space.phis).sum()),
    }
    summary_path = directory / "enumerate_summary.json"
    write_json(summary_path, summary)
    print(f"wrote {csv_path} and {summary_path} ({space.size} designs)")
    return EXIT_OK


def _save_abort_checkpoint(directory: Path, exc: TrainingAbortError) -> None:
    if not exc.checkpoint:
        return
    snap = exc.checkpoint
    payload = {
        "aborted_at_iteration": snap.get("iteration"),
        "params": {k: np.asarray(v).tolist() for k, v in snap.get("params", {}).items()},
        "optimizer": snap.get("optimizer"),
    }
    path = directory / "abort_checkpoint.json"
    write_json(path, payload)
    exc.checkpoint_path = str(path)
    logger.error("training aborted; last good parameters saved to %s", path)


def cmd_train(cfg: RunConfig) -> int:
    scorer = build_scorer(cfg)
    directory = out_dir(cfg)
    policy = MlpPolicy(
        hidden=cfg.policy.hidden,
        l_max=cfg.policy.l_max,
        rng=np.random.default_rng(cfg.seed),
    )
    header = {"config": config_to_dict(cfg), "command": "train"}
    schedule = cfg.run.schedule
    try:
        if schedule == "none":
            protein = resolve_protein(cfg)
            env = CodonDesignEnvironment(protein)
            result = train(env, policy, scorer, cfg.training, seed_seq=cfg.seed)
            trace = result.trace
            optimizer = result.optimizer
            extra = {"protein": protein.residues, "schedule": schedule}
            teacher_rows = None
        else:
            if not cfg.run.protein_file:
                raise InputError(
                    f"schedule {schedule!r} needs run.protein_file with a protein pool"
                )
            pool = load_proteins(cfg.run.protein_file, cfg.run.protein_format)
            task_pools = pool.task_pools(cfg.curriculum.tasks)
            result = curriculum_train(
                task_pools,
                policy,
                scorer,
                cfg.curriculum,
                cfg.training,
                schedule=schedule,
                seed=cfg.seed,
            )
            trace = result.loss_trace
            optimizer = result.optimizer
            teacher_rows = result.teacher.trace
            extra = {
                "schedule": schedule,
                "preset": cfg.preset,
                "tasks": [list(t) for t in cfg.curriculum.tasks],
            }
    except TrainingAbortError as exc:
        _save_abort_checkpoint(directory, exc)
        raise
    checkpoint_path = directory / "checkpoint.json"
    save_checkpoint(checkpoint_path, policy, optimizer, cfg.seed, extra=extra)
    trace_path = directory / "loss_trace.csv"
    write_loss_trace(trace_path, trace)
    write_json(directory / "run_header.json", header)
    written = [str(checkpoint_path), str(trace_path)]
    if teacher_rows is not None:
        teacher_path = directory / "teacher_trace.csv"
        write_teacher_trace(teacher_path, teacher_rows)
        written.append(str(teacher_path))
    print("wrote " + ", ".join(written))
    return EXIT_OK


def cmd_sample(cfg: RunConfig) -> int:
    if not cfg.run.checkpoint:
        raise InputError("sampling needs run.checkpoint pointing at a trained policy")
    policy, payload = load_checkpoint(cfg.run.checkpoint)
    scorer = build_scorer(cfg)
    protein = resolve_protein(cfg)
    trained_on = payload.get("extra", {}).get("protein")
    if trained_on is not None and trained_on != protein.residues:
        logger.warning(
            "checkpoint was trained on a different protein (%d residues); "
            "sampling for the requested protein anyway",
            len(trained_on),
        )
    env = CodonDesignEnvironment(protein)
    weights = np.asarray(cfg.run.weights)
    batch = rollout_batch(
        env, policy, scorer, weights, cfg.run.n_samples, 0.0, cfg.seed
    )
    directory = out_dir(cfg)
    samples_path = directory / "samples.csv"
    lines = ["# codonflow samples v1", SAMPLE_CSV_HEADER]
    for design in batch.designs():
        lines.append(",".join(_objective_row(scorer, design, weights)))
    samples_path.write_text("\n".join(lines) + "\n", encoding="utf-8")

    samples = SampleSet.from_actions(protein, batch.actions, scorer, weights, seed=cfg.seed)
    n_unique = len({item.sequence.codon_indices for item in samples.items})
    k = min(cfg.run.top_n, n_unique)
    report = metrics_report(samples, k)
    report.update(
        {
            "requested_K": cfg.run.top_n,
            "protein": protein.residues,
            "weights": list(cfg.run.weights),
            "seed": cfg.seed,
            "n_samples": cfg.run.n_samples,
        }
    )
    if k < cfg.run.top_n:
        report["note"] = (
            f"top_n reduced from {cfg.run.top_n} to {k}: only {n_unique} unique sample(s)"
        )
        logger.warning(report["note"])
    metrics_path = directory / "sample_metrics.json"
    write_json(metrics_path, report)
    print(f"wrote {samples_path} and {metrics_path} ({cfg.run.n_samples} sequences)")
    return EXIT_OK


def _read_nucleotide_records(path, fmt) -> list[tuple[str, str]]:
    if fmt is None:
        fmt = "csv" if str(path).lower().endswith(".csv") else "fasta"
    records: list[tuple[str, str]] = []
    if fmt == "fasta":
        name, chunks, header_line = None, [], 0
        with open(path, "r", encoding="utf-8") as handle:
            for lineno, raw in enumerate(handle, start=1):
                line = raw.strip()
                if not line:
                    continue
                if line.startswith(">"):
                    if name is not None:
                        if not chunks:
                            raise InputError(f"{path}:{header_line}: record has no sequence")
                        records.append((name, "".join(chunks)))
                    name = line[1:].strip() or f"record_{len(records) + 1}"
                    chunks = []
                    header_line = lineno
                else:
                    if name is None:
                        raise InputError(f"{path}:{lineno}: sequence before first '>' header")
                    chunks.append(line)
        if name is not None:
            if not chunks:
                raise InputError(f"{path}:{header_line}: record has no sequence")
            records.append((name, "".join(chunks)))
    elif fmt == "csv":
        with open(path, "r", encoding="utf-8", newline="") as handle:
            reader = csv_mod.DictReader(handle)
            if reader.fieldnames is None:
                raise InputError(f"{path}: empty CSV file")
            fields = {f.lower().strip(): f for f in reader.fieldnames}
            if "sequence" not in fields:
                raise InputError(f"{path}: CSV needs a 'sequence' column")
            for rowno, row in enumerate(reader, start=2):
                seq = (row[fields["sequence"]] or "").strip()
                if not seq:
                    raise InputError(f"{path}:{rowno}: empty sequence cell")
                name = (row.get(fields.get("name", ""), "") or "").strip() or f"row_{rowno}"
                records.append((name, seq))
    else:
        raise ConfigurationError(f"unknown sequence file format {fmt!r}")
    if not records:
        raise InputError(f"{path}: no sequence records found")
    return records


def cmd_score(cfg: RunConfig) -> int:
    if not cfg.run.protein_file:
        raise InputError(
            "scoring needs run.protein_file pointing at nucleotide sequences "
            "(FASTA, or CSV with a 'sequence' column)"
        )
    scorer = build_scorer(cfg)
    records = _read_nucleotide_records(cfg.run.protein_file, cfg.run.protein_format)
    lines = ["# codonflow scores v1", SCORE_CSV_HEADER]
    for name, text in records:
        try:
            seq = MrnaSequence.from_nucleotides(text)
        except InputError as err:
            raise InputError(f"record '{name}': {err}") from err
        lines.append(",".join([name] + _objective_row(scorer, seq, cfg.run.weights)))
    directory = out_dir(cfg)
    path = directory / "scores.csv"
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    print(f"wrote {path} ({len(records)} sequences)")
    return EXIT_OK


def cmd_verify(cfg: RunConfig) -> int:
    results = run_standard_checks(seed=cfg.seed)
    report = verification_report(results)
    directory = out_dir(cfg)
    path = directory / "verify_report.json"
    write_json(path, report)
    for check in results:
        status = "PASS" if check.passed else "FAIL"
        print(f"{status} {check.name}: {check.measured}")
    print(f"wrote {path}")
    return EXIT_OK if report["passed"] else EXIT_VERIFY_FAILED


# --- argument handling -------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="YAML run configuration")
    common.add_argument("--seed", type=int, metavar="N", help="override the config seed")
    common.add_argument(
        "--threads", type=int, metavar="N", help="worker threads (1 = deterministic mode)"
    )
    common.add_argument(
        "--format",
        choices=("fasta", "csv"),
        help="force the protein/sequence file format",
    )
    parser = argparse.ArgumentParser(
        prog="codonflow",
        description="Design synonymous mRNA sequences with a multi-objective "
        "flow-matching sampler, verified against exact enumeration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("enumerate", parents=[common], help="list and score a whole design space")
    sub.add_parser("train", parents=[common], help="train a policy (single protein or curriculum)")
    sub.add_parser("sample", parents=[common], help="sample designs from a trained checkpoint")
    sub.add_parser("score", parents=[common], help="score existing mRNA sequences")
    sub.add_parser("verify", parents=[common], help="run the self-verification checks")
    return parser


def resolve_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = replace(cfg, seed=args.seed)
    if args.threads is not None:
        cfg = replace(cfg, threads=args.threads)
    if args.format is not None:
        cfg = replace(cfg, run=replace(cfg.run, protein_format=args.format))
    return cfg


def _apply_threads(threads: int) -> None:
    if threads == 1:
        # The default deterministic mode: nothing here uses worker threads,
        # so avoid waking the compiler's threading layer at all.
        return
    try:
        import numba

        numba.set_num_threads(threads)
    except (ImportError, ValueError) as err:  # more threads than cores, etc.
        logger.debug("thread count not applied: %s", err)


COMMANDS = {
    "enumerate": cmd_enumerate,
    "train": cmd_train,
    "sample": cmd_sample,
    "score": cmd_score,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args)
        _apply_threads(cfg.threads)
        return COMMANDS[args.command](cfg)
    except (InputError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except TrainingAbortError as exc:
        where = f" (checkpoint: {exc.checkpoint_path})" if exc.checkpoint_path else ""
        print(f"numeric abort: {exc}{where}", file=sys.stderr)
        return EXIT_NUMERIC
    except NumericFailureError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except CodonflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_REFUSED


if __name__ == "__main__":
    sys.exit(main())
