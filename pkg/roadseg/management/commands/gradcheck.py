from typing import Callable

import numpy as np

from django.core.management.base import CommandError

from roadseg.architecture import ArchitectureConfig, ExtractorKind
from roadseg.exceptions import ArgumentError
from roadseg.layers import ModelParams, init_params
from roadseg.management.base import RUNTIME_ERROR, MemlaneCommand
from roadseg.runconfig import RunConfig
from roadseg.tensor import Tensor, grad_check
from roadseg.training import unrolled_loss

PRECISIONS = {"double": np.float64, "single": np.float32}

def unrolled_check_loss(arch: ArchitectureConfig, seed: int) -> Callable[[ModelParams], Tensor]:

    """Two-frame unroll (slow then fast) on seeded random frames and mask."""

    rng = np.random.default_rng(seed)
    frames = rng.uniform(size=(2, 3, arch.input_size, arch.input_size))
    mask = (rng.uniform(size=(1, arch.input_size, arch.input_size)) > 0.5).astype(np.float64)
    kinds = [ExtractorKind.SLOW, ExtractorKind.FAST]

    return lambda params: unrolled_loss(frames, mask, kinds, params)

class Command(MemlaneCommand):

    help = "Check every parameter gradient against central finite differences"

    defaults = {
        "size": 16,
        "seed": 0,
        "precision": "double",
        "tolerance": 1e-4,
        "step": 1e-5,
        "atol": 1e-8,
        "samples": 8,
    }
    converters = {
        "size": int,
        "seed": int,
        "tolerance": float,
        "step": float,
        "atol": float,
        "samples": int,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--size", type=int, help="Image size of the checked model")
        parser.add_argument("--seed", type=int)
        parser.add_argument("--precision", help="double (default) or single")
        parser.add_argument("--tolerance", type=float, help="Maximum relative error")
        parser.add_argument("--step", type=float, help="Finite-difference step")
        parser.add_argument("--atol", type=float, help="Absolute error below which an entry is not judged")
        parser.add_argument("--samples", type=int, help="Entries checked per parameter tensor; 0 checks all")

    def run(self, config: RunConfig) -> None:

        if config["precision"] not in PRECISIONS:

            raise ArgumentError(f"--precision must be double or single, got {config['precision']!r}.")

        if config["samples"] < 0:

            raise ArgumentError("--samples must be >= 0.")

        if config["atol"] < 0:

            raise ArgumentError("--atol must be >= 0.")

        arch = ArchitectureConfig.from_settings(input_size=config["size"])
        params = init_params(arch, config["seed"])
        report = grad_check(
            unrolled_check_loss(arch, config["seed"]),
            params,
            tolerance=config["tolerance"],
            step=config["step"],
            atol=config["atol"],
            samples_per_param=config["samples"] or None,
            seed=config["seed"],
            dtype=PRECISIONS[config["precision"]],
        )

        for entry in report.entries:

            status = "ok" if entry.passed else "FAIL"
            self.stdout.write(
                f"{entry.name:<28} checked={entry.checked:<5} max_rel={entry.max_rel_error:.3e} "
                f"max_abs={entry.max_abs_error:.3e} below_atol={entry.below_atol:<3} {status}"
            )

        worst = report.worst
        worst_name = worst.name if worst and worst.max_rel_error else "n/a"
        summary = (
            f"max rel err {report.max_rel_error:.3e} at {worst_name} (tolerance {report.tolerance:g}; "
            f"{report.below_atol} entr{'y' if report.below_atol == 1 else 'ies'} below atol {report.atol:g} not judged)"
        )

        if not report.passed:

            failed = [entry.name for entry in report.entries if not entry.passed]

            raise CommandError(
                f"gradcheck failed for {len(failed)} parameter(s): {', '.join(failed)}; {summary}",
                returncode=RUNTIME_ERROR,
            )

        self.say(f"gradcheck passed: {summary}")
