"""Tests for the command-line interface."""

from pathlib import Path

import pytest
import yaml

from crossroad.cli import EXIT_OK, EXIT_RUNTIME, EXIT_USAGE, main
from crossroad.dataset import DATASET_HEADER, load_dataset
from crossroad.registry import REGISTRY_HEADER
from crossroad.scenarios import load_scenarios

DEMO_DIR = Path(__file__).resolve().parent.parent / "demo"


@pytest.fixture
def table2_model(tmp_path) -> Path:
    """A decision tree trained on the two-row demo dataset."""
    path = tmp_path / "model.yaml"
    argv = ["train", "--data", str(DEMO_DIR / "table2.csv"), "--out-model", str(path)]
    assert main(argv) == 0
    return path


@pytest.fixture
def small_data(tmp_path) -> Path:
    path = tmp_path / "data.csv"
    argv = ["generate", "--n-straight", "150", "--n-turn", "150", "--out", str(path)]
    assert main(argv) == 0
    return path


# --------------------------------------------------------------------------- #
# Usage errors
# --------------------------------------------------------------------------- #


class TestUsage:
    """Bad invocations exit 2; runtime failures exit 1."""

    @pytest.mark.parametrize(
        "argv",
        [
            [],
            ["fly"],
            ["train", "--algo", "svm", "--data", "d.csv", "--out-model", "m.yaml"],
            ["train", "--k", "4", "--data", "d.csv", "--out-model", "m.yaml"],
            ["train", "--max-depth", "0", "--data", "d.csv", "--out-model", "m.yaml"],
            ["generate", "--n-turn", "-1", "--out", "d.csv"],
            ["generate", "--label-noise", "1.5", "--out", "d.csv"],
            ["compare", "--data", "d.csv", "--test-fraction", "1.0"],
            ["plate", "recognize", "--in", "x.txt", "--threshold", "256"],
            ["registry", "add", "--file", "r.csv", "--plate", "AB1", "--mp", "2"],
        ],
    )
    def test_exit_usage(self, argv):
        assert main(argv) == EXIT_USAGE

    def test_help(self, capsys):
        assert main(["--help"]) == EXIT_OK
        assert "simulate" in capsys.readouterr().out

    def test_missing_file(self, tmp_path, capsys):
        argv = ["evaluate", "--model", str(tmp_path / "none.yaml"), "--data", "x.csv"]
        code = main(argv)
        assert code == EXIT_RUNTIME
        assert "error:" in capsys.readouterr().err

    def test_single_class_training(self, tmp_path, capsys):
        data = tmp_path / "one.csv"
        data.write_text(f"{DATASET_HEADER}\n-1.0,1,T\n-2.0,0,T\n")
        argv = ["train", "--data", str(data), "--out-model", str(tmp_path / "m.yaml")]
        code = main(argv)
        assert code == EXIT_RUNTIME
        assert not (tmp_path / "m.yaml").exists()

    @pytest.mark.parametrize(
        "edit",
        [
            lambda doc: doc["nodes"][0].update(left=9),
            lambda doc: doc["nodes"][0].update(left=0),
            lambda doc: doc["nodes"][1].update(label="S"),
        ],
    )
    def test_corrupt_tree_file(self, table2_model, edit, capsys):
        doc = yaml.safe_load(table2_model.read_text())
        edit(doc)
        table2_model.write_text(yaml.safe_dump(doc, sort_keys=False))
        argv = ["evaluate", "--model", str(table2_model), "--data"]
        assert main([*argv, str(DEMO_DIR / "table2.csv")]) == EXIT_RUNTIME
        assert "error:" in capsys.readouterr().err

    def test_corrupt_nb_file(self, tmp_path, capsys):
        model = tmp_path / "nb.yaml"
        table2 = str(DEMO_DIR / "table2.csv")
        argv = ["train", "--algo", "nb", "--data", table2, "--out-model", str(model)]
        assert main(argv) == EXIT_OK
        doc = yaml.safe_load(model.read_text())
        doc["classes"]["S"]["variance"] = 0.0
        model.write_text(yaml.safe_dump(doc, sort_keys=False))
        argv = ["evaluate", "--model", str(model), "--data", table2]
        assert main(argv) == EXIT_RUNTIME
        assert "variance" in capsys.readouterr().err



# --------------------------------------------------------------------------- #
# Data and models
# --------------------------------------------------------------------------- #


class TestGenerate:
    """Tests for the generate command."""

    def test_defaults(self, tmp_path, capsys):
        out = tmp_path / "data.csv"
        assert main(["generate", "--out", str(out)]) == EXIT_OK
        assert len(load_dataset(out)) == 2999
        assert "wrote 2999 samples" in capsys.readouterr().out

    def test_empty(self, tmp_path):
        out = tmp_path / "data.csv"
        argv = ["generate", "--n-straight", "0", "--n-turn", "0", "--out", str(out)]
        assert main(argv) == 0
        assert out.read_text() == DATASET_HEADER + "\n"

    def test_byte_identical(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        flags = ["--n-straight", "40", "--n-turn", "40", "--seed", "9"]
        main(["generate", *flags, "--out", str(a)])
        main(["generate", *flags, "--out", str(b)])
        assert a.read_bytes() == b.read_bytes()


class TestTrainEvaluate:
    """Tests for train, evaluate and compare."""

    def test_train_table2(self, tmp_path, capsys):
        out = tmp_path / "model.yaml"
        table2 = str(DEMO_DIR / "table2.csv")
        argv = ["train", "--data", table2, "--out-model", str(out)]
        assert main(argv) == EXIT_OK
        assert "training accuracy: 1.000" in capsys.readouterr().out
        assert out.exists()

    def test_evaluate_tsv(self, table2_model, capsys):
        capsys.readouterr()
        argv = [
            "evaluate",
            "--model",
            str(table2_model),
            "--data",
            str(DEMO_DIR / "table2.csv"),
            "--report",
            "tsv",
        ]
        assert main(argv) == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "class\tprecision\trecall\tf1-score\tsupport"
        assert lines[1] == "S\t1.000\t1.000\t1.000\t1"
        assert lines[2] == "T\t1.000\t1.000\t1.000\t1"

    @pytest.mark.parametrize("algo", ["knn", "nb", "dt"])
    def test_train_each_algo(self, algo, small_data, tmp_path):
        out = tmp_path / f"{algo}.yaml"
        argv = ["train", "--algo", algo, "--data", str(small_data)]
        assert main([*argv, "--out-model", str(out)]) == EXIT_OK
        assert out.exists()

    def test_compare(self, small_data, capsys):
        capsys.readouterr()
        argv = ["compare", "--data", str(small_data), "--report", "tsv"]
        assert main(argv) == EXIT_OK
        out = capsys.readouterr().out
        for algo in ("knn", "nb", "dt"):
            assert f"# {algo}\n" in out
            assert f"{algo} macro-f1 " in out


# --------------------------------------------------------------------------- #
# Simulation
# --------------------------------------------------------------------------- #


class TestSimulate:
    """Tests for the simulate and make-scenarios commands."""

    def _simulate(self, model: Path, registry: Path, *extra: str) -> int:
        return main(
            [
                "simulate",
                "--scenarios",
                str(DEMO_DIR / "scenarios.csv"),
                "--registry",
                str(registry),
                "--model",
                str(model),
                *extra,
            ]
        )

    def test_demo(self, table2_model, capsys):
        capsys.readouterr()
        assert self._simulate(table2_model, DEMO_DIR / "registry.csv") == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        worked = "PLATE=LEA2465 V1=65.500 V2=65.000 DV=-0.500 MP=1 PREDICT="
        assert lines[0].startswith(worked)
        assert lines[1] == "PLATE=TRN3 V1=50.000 V2=47.000 DV=-3.000 MP=1 PREDICT=T"
        assert lines[3] == "PLATE=ZZZ999 UNREGISTERED"

    def test_advise_and_trace(self, table2_model, tmp_path, capsys):
        trace = tmp_path / "trace.yaml"
        code = self._simulate(
            table2_model,
            DEMO_DIR / "registry.csv",
            "--advise",
            "--trace-out",
            str(trace),
        )
        assert code == EXIT_OK
        assert "Vehicle ZZZ999 is not registered" in capsys.readouterr().out
        assert "RegistryMiss" in trace.read_text()

    def test_all_unregistered(self, table2_model, tmp_path, capsys):
        empty = tmp_path / "registry.csv"
        empty.write_text(REGISTRY_HEADER + "\n")
        capsys.readouterr()
        assert self._simulate(table2_model, empty) == EXIT_OK
        assert "no scored runs (4 unregistered)" in capsys.readouterr().out

    def test_verbose_prints_steps(self, table2_model, capsys):
        code = self._simulate(table2_model, DEMO_DIR / "registry.csv", "--verbose")
        assert code == EXIT_OK
        assert "VelocityComputed" in capsys.readouterr().err

    def test_expected_algo(self, table2_model, capsys):
        registry = DEMO_DIR / "registry.csv"
        assert self._simulate(table2_model, registry, "--algo", "dt") == EXIT_OK
        capsys.readouterr()
        assert self._simulate(table2_model, registry, "--algo", "knn") == EXIT_RUNTIME
        assert "expects a knn model" in capsys.readouterr().err


    def test_make_scenarios(self, tmp_path, capsys):
        scenarios, registry = tmp_path / "s.csv", tmp_path / "r.csv"
        argv = [
            "make-scenarios",
            "--n-straight",
            "10",
            "--n-turn",
            "10",
            "--unregistered-fraction",
            "0.5",
            "--out-scenarios",
            str(scenarios),
            "--out-registry",
            str(registry),
        ]
        assert main(argv) == EXIT_OK
        assert len(load_scenarios(scenarios)) == 20
        assert len(registry.read_text().splitlines()) == 11

    def test_workflow_deterministic(self, tmp_path, capsys):
        """Two full runs write identical files and print identical output."""
        names = ("d.csv", "m.yaml", "s.csv", "r.csv", "t.yaml")

        def workflow(root: Path) -> tuple[str, dict[str, bytes]]:
            root.mkdir()
            gen = ["--n-straight", "60", "--n-turn", "60", "--seed", "5"]
            data, model = str(root / "d.csv"), str(root / "m.yaml")
            assert main(["generate", *gen, "--out", data]) == EXIT_OK
            assert main(["train", "--data", data, "--out-model", model]) == EXIT_OK
            argv = ["make-scenarios", *gen, "--unregistered-fraction", "0.2"]
            argv += ["--out-scenarios", str(root / "s.csv")]
            argv += ["--out-registry", str(root / "r.csv")]
            assert main(argv) == EXIT_OK
            capsys.readouterr()
            argv = ["evaluate", "--model", model, "--data", data, "--report", "tsv"]
            assert main(argv) == EXIT_OK
            assert main(
                [
                    "simulate",
                    "--scenarios",
                    str(root / "s.csv"),
                    "--registry",
                    str(root / "r.csv"),
                    "--model",
                    model,
                    "--noise-sigma",
                    "0.5",
                    "--workers",
                    "3",
                    "--trace-out",
                    str(root / "t.yaml"),
                    "--report",
                    "tsv",
                ]
            ) == EXIT_OK
            files = {name: (root / name).read_bytes() for name in names}
            return capsys.readouterr().out, files

        first_out, first_files = workflow(tmp_path / "one")
        second_out, second_files = workflow(tmp_path / "two")
        assert first_out.startswith("class\tprecision\trecall\tf1-score\tsupport\n")
        assert first_out == second_out
        for name in names:
            assert first_files[name] == second_files[name], name



# --------------------------------------------------------------------------- #
# Plate and registry tools
# --------------------------------------------------------------------------- #


class TestPlateCommands:
    """Tests for the plate subcommands."""

    def test_render_recognize(self, tmp_path, capsys):
        image = tmp_path / "plate.txt"
        argv = ["plate", "render", "--text", "LEA2465", "--out", str(image)]
        assert main(argv) == EXIT_OK
        capsys.readouterr()
        assert main(["plate", "recognize", "--in", str(image)]) == EXIT_OK
        assert capsys.readouterr().out == "LEA2465\n"

    def test_render_bad_text(self, tmp_path):
        argv = ["plate", "render", "--text", "lea-1", "--out", str(tmp_path / "p.txt")]
        code = main(argv)
        assert code == EXIT_RUNTIME

    def test_font_info(self, capsys):
        assert main(["plate", "font-info"]) == EXIT_OK
        assert capsys.readouterr().out == "d_min=5 pair=0/8 correctable=2\n"


class TestRegistryCommands:
    """Tests for the registry subcommands."""

    def test_add_list_remove(self, tmp_path, capsys):
        path = str(tmp_path / "registry.csv")
        argv = ["registry", "add", "--file", path, "--plate", "TRN3", "--mp", "1"]
        assert main(argv) == 0
        argv = ["registry", "add", "--file", path, "--plate", "AB12", "--mp", "0"]
        assert main(argv) == 0
        capsys.readouterr()
        assert main(["registry", "list", "--file", path]) == EXIT_OK
        assert capsys.readouterr().out == "AB12,0\nTRN3,1\n"

        argv = ["registry", "remove", "--file", path, "--plate", "AB12"]
        assert main(argv) == EXIT_OK
        assert main(["registry", "list", "--file", path]) == EXIT_OK
        assert capsys.readouterr().out == "TRN3,1\n"

    def test_remove_absent(self, tmp_path, capsys):
        path = str(tmp_path / "registry.csv")
        main(["registry", "add", "--file", path, "--plate", "TRN3", "--mp", "1"])
        argv = ["registry", "remove", "--file", path, "--plate", "NOPE"]
        assert main(argv) == EXIT_OK
        assert "NOPE is not registered" in capsys.readouterr().err

    def test_list_missing_file(self, tmp_path):
        argv = ["registry", "list", "--file", str(tmp_path / "none.csv")]
        assert main(argv) == EXIT_RUNTIME
