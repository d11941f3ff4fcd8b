import argparse
import time

from roadseg.architecture import ArchitectureConfig
from roadseg.datagen import flip_augment, split_sequences
from roadseg.dataio import load_dataset, save_checkpoint, write_loss_csv
from roadseg.exceptions import ArgumentError
from roadseg.ledger import record_training, recording_enabled
from roadseg.management.base import MemlaneCommand
from roadseg.runconfig import RunConfig, parse_bool
from roadseg.training import Pipeline, TrainConfig, train, validation_loss

def _optional_float(text: str):

    return None if text.strip().lower() in ("", "none") else float(text)

class Command(MemlaneCommand):

    help = "Train the memory-guided segmentation model (MGWT checkpoint + loss CSV)"

    defaults = {
        "data": None,
        "pipeline": Pipeline.SEQUENTIAL.value,
        "epochs": 30,
        "lr": 1e-3,
        "p_slow": 0.7,
        "seq_len": 6,
        "seed": 42,
        "out": "model.mgwt",
        "loss_csv": None,
        "checkpoint_every": 0,
        "val_fraction": 0.2,
        "augment": False,
        "clip_norm": None,
        "record": True,
    }
    converters = {
        "epochs": int,
        "lr": float,
        "p_slow": float,
        "seq_len": int,
        "seed": int,
        "checkpoint_every": int,
        "val_fraction": float,
        "augment": parse_bool,
        "clip_norm": _optional_float,
        "record": parse_bool,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--data", help="MGRD dataset to train on")
        parser.add_argument("--pipeline", help="batched or sequential")
        parser.add_argument("--epochs", type=int)
        parser.add_argument("--lr", type=float)
        parser.add_argument("--p-slow", type=float, help="Probability of the slow extractor per training frame")
        parser.add_argument("--seq-len", type=int)
        parser.add_argument("--seed", type=int)
        parser.add_argument("--out", help="Output MGWT path")
        parser.add_argument("--loss-csv", help="Defaults to <out>.loss.csv")
        parser.add_argument("--checkpoint-every", type=int, help="Also write <out>.epochNNN every N epochs")
        parser.add_argument("--val-fraction", type=float, help="Fraction of sequences held out for validation")
        parser.add_argument("--augment", action=argparse.BooleanOptionalAction, help="Flip-augment the training split")
        parser.add_argument("--clip-norm", type=float)
        parser.add_argument("--record", action=argparse.BooleanOptionalAction, help="Store the run in the ledger")

    def run(self, config: RunConfig) -> None:

        self.require(config, "data")

        try:

            pipeline = Pipeline(config["pipeline"])

        except ValueError:

            raise ArgumentError(f"--pipeline must be batched or sequential, got {config['pipeline']!r}.")

        if config["checkpoint_every"] < 0:

            raise ArgumentError("--checkpoint-every must be >= 0.")

        train_config = TrainConfig(
            pipeline=pipeline,
            seq_len=config["seq_len"],
            p_slow_train=config["p_slow"],
            epochs=config["epochs"],
            lr=config["lr"],
            seed=config["seed"],
            clip_norm=config["clip_norm"],
        )
        samples = load_dataset(config["data"])
        train_split, val_split = split_sequences(samples, config["val_fraction"])

        if config["augment"]:

            train_split = flip_augment(train_split)

        out = config["out"]
        every = config["checkpoint_every"]
        arch = ArchitectureConfig.from_settings(input_size=samples[0].image_size)
        record = recording_enabled(config["record"])
        epoch_losses = []

        def on_epoch_end(epoch, mean_loss, params):

            epoch_losses.append(mean_loss)

            if every and epoch % every == 0:

                save_checkpoint(f"{out}.epoch{epoch:03d}", params)

            if self.verbosity >= 2:

                self.stdout.write(f"epoch {epoch}: mean_loss={mean_loss:.6f}")

        def ledger(status, duration, val_loss=None):

            record_training(
                pipeline=pipeline.value,
                dataset_path=config["data"],
                output_path=out,
                seed=train_config.seed,
                epoch_losses=epoch_losses,
                arguments=config.as_dict(),
                duration_s=duration,
                val_loss=val_loss,
                status=status,
            )

        started = time.perf_counter()

        try:

            result = train(train_split, train_config, arch=arch, on_epoch_end=on_epoch_end)

        except Exception:

            if record:

                ledger("failed", time.perf_counter() - started)

            raise

        duration = time.perf_counter() - started

        save_checkpoint(out, result.params)
        loss_csv = config["loss_csv"] or f"{out}.loss.csv"
        write_loss_csv(result.epoch_losses, loss_csv)

        val_loss = validation_loss(val_split, train_config, result.params) if val_split else None

        if record:

            ledger("succeeded", duration, val_loss)

        final = f"{result.epoch_losses[-1]:.6f}" if result.epoch_losses else "n/a"
        summary = f"trained {pipeline.value} model on {len(train_split)} sequences for {train_config.epochs} epochs (final loss {final})"

        if val_loss is not None:

            summary += f", val loss {val_loss:.6f} on {len(val_split)} sequences"

        self.say(f"{summary}; wrote {out} and {loss_csv}")
