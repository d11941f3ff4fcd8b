import argparse
from pathlib import Path

from roadseg.dataio import export_mask, load_checkpoint, load_dataset, write_metrics_csv, write_schedule_csv
from roadseg.inference import Policy
from roadseg.ledger import record_evaluation, recording_enabled
from roadseg.management.base import MemlaneCommand
from roadseg.metrics import run_evaluation
from roadseg.runconfig import RunConfig, parse_bool

class Command(MemlaneCommand):

    help = "Evaluate a checkpoint under one extractor-selection policy"

    defaults = {
        "model": None,
        "data": None,
        "policy": "one-in:10",
        "clear_on_slow": True,
        "seed": 0,
        "name": None,
        "warmup": 0,
        "csv_out": None,
        "masks_out": None,
        "schedule_out": None,
        "record": True,
    }
    converters = {
        "clear_on_slow": parse_bool,
        "seed": int,
        "warmup": int,
        "record": parse_bool,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--model", help="MGWT checkpoint")
        parser.add_argument("--data", help="MGRD dataset")
        parser.add_argument("--policy", help="always-fast, always-slow, one-in:N or randn:THETA")
        parser.add_argument("--clear-on-slow", action=argparse.BooleanOptionalAction, help="Zero the memory before every slow frame")
        parser.add_argument("--seed", type=int, help="Policy PRNG seed")
        parser.add_argument("--name", help="Model name in the report; defaults to the checkpoint file name")
        parser.add_argument("--warmup", type=int, help="Leading frames left out of the FPS figure")
        parser.add_argument("--csv-out")
        parser.add_argument("--masks-out", help="Directory for per-frame PGM masks")
        parser.add_argument("--schedule-out", help="CSV of per-frame extractor decisions")
        parser.add_argument("--record", action=argparse.BooleanOptionalAction, help="Store the result in the ledger")

    def run(self, config: RunConfig) -> None:

        self.require(config, "model", "data")

        policy = Policy.parse(config["policy"], clear_on_slow=config["clear_on_slow"], seed=config["seed"])
        samples = load_dataset(config["data"])
        params = load_checkpoint(config["model"], input_size=samples[0].image_size)
        name = config["name"] or Path(config["model"]).stem
        report = run_evaluation(params, samples, policy, name=name, warmup=config["warmup"], keep_masks=bool(config["masks_out"]))

        self.stdout.write(str(report.row))

        if report.degenerate_sequences:

            self.stdout.write(self.style.WARNING(
                f"{report.degenerate_sequences} sequence(s) have static ground truth; their TC is the raw prediction IoU"
            ))

        if config["csv_out"]:

            write_metrics_csv([report.row], config["csv_out"])

        if config["schedule_out"]:

            write_schedule_csv(report.combined_schedule(), config["schedule_out"])

        if config["masks_out"]:

            directory = Path(config["masks_out"])
            directory.mkdir(parents=True, exist_ok=True)

            for s, masks in enumerate(report.masks):

                for t, mask in enumerate(masks):

                    export_mask(mask, directory / f"seq{s:03d}_frame{t:03d}.pgm")

        if recording_enabled(config["record"]):

            record_evaluation(
                report.row,
                model_path=config["model"],
                dataset_path=config["data"],
                schedule=report.combined_schedule(),
                clear_on_slow=policy.clear_on_slow,
                arguments=config.as_dict(),
            )

        self.say(f"evaluated {name} with {policy.label} on {len(samples)} sequences")
