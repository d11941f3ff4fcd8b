import argparse

from roadseg.datagen import SceneParams, flip_augment, generate
from roadseg.dataio import save_dataset
from roadseg.exceptions import ArgumentError
from roadseg.management.base import MemlaneCommand
from roadseg.runconfig import RunConfig, parse_bool

class Command(MemlaneCommand):

    help = "Generate a synthetic road-video dataset (MGRD)"

    defaults = {
        "seed": 42,
        "sequences": 10,
        "length": 30,
        "size": 64,
        "out": "dataset.mgrd",
        "augment": False,
        "workers": 1,
    }
    converters = {
        "seed": int,
        "sequences": int,
        "length": int,
        "size": int,
        "augment": parse_bool,
        "workers": int,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--seed", type=int)
        parser.add_argument("--sequences", type=int, help="Number of sequences before augmentation")
        parser.add_argument("--length", type=int, help="Frames per sequence")
        parser.add_argument("--size", type=int, help="Square image size in pixels")
        parser.add_argument("--out", help="Output MGRD path")
        parser.add_argument("--augment", action=argparse.BooleanOptionalAction, help="Append horizontally mirrored copies")
        parser.add_argument("--workers", type=int)

    def run(self, config: RunConfig) -> None:

        if config["sequences"] < 1:

            raise ArgumentError("need at least 1 sequence")

        params = SceneParams(
            seed=config["seed"],
            num_sequences=config["sequences"],
            frames_per_sequence=config["length"],
            image_size=config["size"],
        )
        samples = generate(params, workers=config["workers"])

        if config["augment"]:

            samples = flip_augment(samples)

        save_dataset(config["out"], samples)
        self.say(f"wrote {len(samples)} sequences to {config['out']}")
