from roadseg.dataio import write_metrics_csv
from roadseg.exceptions import ArgumentError
from roadseg.management.base import MemlaneCommand
from roadseg.metrics import describe_rows
from roadseg.models import EvaluationResult
from roadseg.runconfig import RunConfig

class Command(MemlaneCommand):

    help = "Print recorded evaluation results, newest first"

    defaults = {
        "csv_out": None,
        "limit": 0,
    }
    converters = {
        "limit": int,
    }

    def add_arguments(self, parser):

        super().add_arguments(parser)
        parser.add_argument("--csv-out")
        parser.add_argument("--limit", type=int, help="Show at most N rows; 0 shows all")

    def run(self, config: RunConfig) -> None:

        if config["limit"] < 0:

            raise ArgumentError("--limit must be >= 0.")

        rows = EvaluationResult.objects.latest_rows(config["limit"])

        if config["csv_out"]:

            write_metrics_csv(rows, config["csv_out"])

        if not rows:

            self.say("No evaluation results recorded")
            return

        self.stdout.write(describe_rows(rows))
        self.say(f"{len(rows)} evaluation result(s)")
