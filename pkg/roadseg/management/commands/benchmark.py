import argparse
from typing import List, Tuple

from roadseg.datagen import SequenceSample
from roadseg.dataio import load_checkpoint, load_dataset, write_metrics_csv
from roadseg.exceptions import ArgumentError
from roadseg.inference import Policy
from roadseg.ledger import record_evaluation, recording_enabled
from roadseg.management.base import MemlaneCommand
from roadseg.metrics import describe_rows, run_evaluation
from roadseg.runconfig import RunConfig, parse_bool

DEFAULT_POLICIES = "always-fast,always-slow,randn:0.7,randn:0.8,randn:0.9,one-in:6,one-in:10,one-in:12"

def _split_list(text: str) -> List[str]:

    return [item.strip() for item in text.split(",") if item.strip()]

def parse_models(specs: List[str]) -> List[Tuple[str, str]]:

    """``name=path`` pairs; a bare path is named after itself."""

    models = []

    for spec in specs:

        name, sep, path = spec.partition("=")

        if not sep:

            name, path = spec, spec

        if not name or not path:

            raise ArgumentError(f"--model expects name=path, got {spec!r}.")

        models.append((name, path))

    return models

class Command(MemlaneCommand):

    help = "Evaluate every model under every policy and write one metrics table"

    defaults = {
        "model": None,
        "data": None,
        "policies": DEFAULT_POLICIES,
        "csv_out": None,
        "frames_limit": 0,
        "warmup": 0,
        "seed": 0,
        "clear_on_slow": True,
        "record": True,
    }
    converters = {
        "model": _split_list,
        "frames_limit": int,
        "warmup": int,
        "seed": int,
        "clear_on_slow": parse_bool,
        "record": parse_bool,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--model", action="append", help="name=path of an MGWT checkpoint; repeatable")
        parser.add_argument("--data", help="MGRD dataset")
        parser.add_argument("--policies", help="Comma-separated policy list")
        parser.add_argument("--csv-out")
        parser.add_argument("--frames-limit", type=int, help="Evaluate only the first N frames of each sequence")
        parser.add_argument("--warmup", type=int)
        parser.add_argument("--seed", type=int, help="Policy PRNG seed")
        parser.add_argument("--clear-on-slow", action=argparse.BooleanOptionalAction)
        parser.add_argument("--record", action=argparse.BooleanOptionalAction, help="Store every row in the ledger")

    def run(self, config: RunConfig) -> None:

        self.require(config, "model", "data")

        models = parse_models(config["model"])
        policies = [
            Policy.parse(text, clear_on_slow=config["clear_on_slow"], seed=config["seed"])
            for text in _split_list(config["policies"])
        ]

        if not policies:

            raise ArgumentError("--policies must name at least one policy.")

        if config["frames_limit"] < 0:

            raise ArgumentError("--frames-limit must be >= 0.")

        samples = load_dataset(config["data"])
        limit = config["frames_limit"]

        if limit:

            samples = [SequenceSample(sample.frames[:limit], sample.masks[:limit], index=sample.index) for sample in samples]

        rows = []

        for name, path in models:

            params = load_checkpoint(path, input_size=samples[0].image_size)

            for policy in policies:

                report = run_evaluation(params, samples, policy, name=name, warmup=config["warmup"])
                rows.append(report.row)

                if self.verbosity >= 2:

                    self.stdout.write(str(report.row))

                if recording_enabled(config["record"]):

                    record_evaluation(
                        report.row,
                        model_path=path,
                        dataset_path=config["data"],
                        schedule=report.combined_schedule(),
                        clear_on_slow=policy.clear_on_slow,
                        arguments=config.as_dict(),
                    )

        self.stdout.write(describe_rows(rows))

        if config["csv_out"]:

            write_metrics_csv(rows, config["csv_out"])

        self.say(f"benchmarked {len(models)} model(s) x {len(policies)} policies")
