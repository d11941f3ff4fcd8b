import math

from roadseg.architecture import ArchitectureConfig, describe
from roadseg.datagen import SceneParams, generate
from roadseg.dataio import load_checkpoint
from roadseg.exceptions import ArgumentError
from roadseg.inference import Policy, profile_fps
from roadseg.layers import init_params
from roadseg.management.base import MemlaneCommand
from roadseg.runconfig import RunConfig

FRAMES_PER_CLIP = 30

class Command(MemlaneCommand):

    help = "Measure frames per second of one policy on synthetic frames"

    defaults = {
        "model": None,
        "policy": "always-fast",
        "frames": 200,
        "warmup": 10,
        "size": None,
        "seed": 42,
    }
    converters = {
        "frames": int,
        "warmup": int,
        "size": int,
        "seed": int,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--model", help="MGWT checkpoint; freshly initialized weights when omitted")
        parser.add_argument("--policy")
        parser.add_argument("--frames", type=int)
        parser.add_argument("--warmup", type=int)
        parser.add_argument("--size", type=int, help="Image size; defaults to MEMLANE_ARCH")
        parser.add_argument("--seed", type=int)

    def run(self, config: RunConfig) -> None:

        frames, warmup = config["frames"], config["warmup"]

        if frames < 1:

            raise ArgumentError("--frames must be >= 1.")

        if not 0 <= warmup < frames:

            raise ArgumentError(f"--warmup must be smaller than --frames ({frames}), got {warmup}.")

        policy = Policy.parse(config["policy"], seed=config["seed"])
        arch = ArchitectureConfig.from_settings(input_size=config["size"])

        if config["model"]:

            params = load_checkpoint(config["model"], input_size=arch.input_size)

        else:

            params = init_params(arch, config["seed"])

        scene = SceneParams(
            seed=config["seed"],
            num_sequences=math.ceil(frames / FRAMES_PER_CLIP),
            frames_per_sequence=min(frames, FRAMES_PER_CLIP),
            image_size=arch.input_size,
        )
        stream = [frame for sample in generate(scene) for frame in sample.frames][:frames]
        fps = profile_fps(stream, params, policy, warmup=warmup)

        if self.verbosity >= 2:

            costs = describe(params.arch)
            self.stdout.write(f"policy={policy.label} fast_macs={costs['fast_macs']} slow_macs={costs['slow_macs']} parameters={costs['parameters']}")

        self.say(f"avg_fps={fps:.2f}")
