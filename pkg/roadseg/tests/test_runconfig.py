from django.test import SimpleTestCase
from pathlib import Path
import tempfile

from roadseg.exceptions import RunConfigError
from roadseg.runconfig import RunConfig, parse_bool, read_config_file

DEFAULTS = {"seed": 42, "epochs": 30, "pipeline": "sequential", "augment": False}
CONVERTERS = {"seed": int, "epochs": int, "augment": parse_bool}

class ConfigFileTests(SimpleTestCase):

    """Test the flat key=value file format."""

    def setUp(self) -> None:

        self._tmp = tempfile.TemporaryDirectory()
        self.path = Path(self._tmp.name) / "run.conf"

    def tearDown(self) -> None:

        self._tmp.cleanup()

    def test_comments_blank_lines_and_dashes(self) -> None:

        """Dashed keys become underscored; comments and blanks are skipped."""

        self.path.write_text("# training run\n\nseq-len = 6\npipeline=batched  # inline\n")

        self.assertEqual(read_config_file(self.path), {"seq_len": "6", "pipeline": "batched"})

    def test_malformed_and_duplicate_lines_raise(self) -> None:

        """Lines without '=' and repeated keys are errors naming the line."""

        for text in ("epochs\n", "epochs=1\nepochs=2\n", "=3\n"):

            self.path.write_text(text)

            with self.subTest(text=text), self.assertRaisesMessage(RunConfigError, str(self.path)):

                read_config_file(self.path)

    def test_missing_file_raises(self) -> None:

        """An unreadable config is a configuration error."""

        with self.assertRaises(RunConfigError):

            read_config_file(self.path.with_name("absent.conf"))

    def test_precedence_cli_over_file_over_default(self) -> None:

        """Each value records where it came from."""

        self.path.write_text("seed=7\nepochs=3\n")
        config = RunConfig.resolve("train", {"seed": 1, "epochs": None}, DEFAULTS, CONVERTERS, self.path)

        self.assertEqual(config["seed"], 1)
        self.assertEqual(config["epochs"], 3)
        self.assertEqual(config["pipeline"], "sequential")
        self.assertEqual(config.sources, {"seed": "cli", "epochs": "file", "pipeline": "default", "augment": "default"})

    def test_file_values_are_converted(self) -> None:

        """Booleans and integers from the file arrive typed."""

        self.path.write_text("augment=yes\nepochs=2\n")
        config = RunConfig.resolve("train", {}, DEFAULTS, CONVERTERS, self.path)

        self.assertIs(config["augment"], True)
        self.assertEqual(config["epochs"], 2)

    def test_unknown_keys_and_bad_values_raise(self) -> None:

        """A typo or an unparsable value stops the command."""

        for text in ("epoch=3\n", "epochs=three\n", "augment=maybe\n"):

            self.path.write_text(text)

            with self.subTest(text=text), self.assertRaises(RunConfigError):

                RunConfig.resolve("train", {}, DEFAULTS, CONVERTERS, self.path)

    def test_no_file_uses_defaults(self) -> None:

        """Without a file, unset flags fall back to defaults."""

        config = RunConfig.resolve("train", {"pipeline": None}, DEFAULTS, CONVERTERS)

        self.assertEqual(config.as_dict(), DEFAULTS)

    def test_parse_bool_words(self) -> None:

        """Common spellings of true and false."""

        self.assertTrue(parse_bool(" On "))
        self.assertFalse(parse_bool("0"))

        with self.assertRaises(RunConfigError):

            parse_bool("sure")
