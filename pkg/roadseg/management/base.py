from typing import Any, Callable, Dict

from django.core.management.base import BaseCommand, CommandError, CommandParser

from ..exceptions import ArgumentError, MemlaneError, RunConfigError
from ..runconfig import RunConfig

USAGE_ERROR = 2
RUNTIME_ERROR = 1

class MemlaneCommand(BaseCommand):

    """Base for the roadseg commands.

    Subclasses declare ``defaults`` (every option they accept, keyed like the
    long flag with underscores) and implement ``run``. Flags default to None so
    that a --config file can fill in whatever the command line leaves out.
    """

    defaults: Dict[str, Any] = {}
    converters: Dict[str, Callable[[str], Any]] = {}

    @property
    def command_name(self) -> str:

        return self.__module__.rsplit(".", 1)[-1]

    def add_arguments(self, parser: CommandParser) -> None:

        parser.add_argument("--config", help="Flat key=value file; command-line flags take precedence")

    def handle(self, *args, **options):

        self.verbosity = options.get("verbosity", 1)

        try:

            config = RunConfig.resolve(self.command_name, options, self.defaults, self.converters, options.get("config"))
            self.run(config)

        except (RunConfigError, ArgumentError) as exc:

            raise CommandError(str(exc), returncode=USAGE_ERROR)

        except (MemlaneError, OSError) as exc:

            raise CommandError(str(exc), returncode=RUNTIME_ERROR)

    def run(self, config: RunConfig) -> None:

        raise NotImplementedError

    def require(self, config: RunConfig, *keys: str) -> None:

        missing = [f"--{key.replace('_', '-')}" for key in keys if config.get(key) in (None, "", [])]

        if missing:

            raise ArgumentError(f"Missing required option(s): {', '.join(missing)}.")

    def say(self, message: str) -> None:

        self.stdout.write(self.style.SUCCESS(message))
