import json

import numpy as np
import pytest

from maup.cli import main, parse_sweep_config
from maup.tensors import BitMask, save_tensor


def make_episode_files(tmp_path, seed=0):
    out = tmp_path / "ph"
    rc = main(["phantom", "--family", "disk", "--seed", str(seed), "--out", str(out)])
    assert rc == 0
    return out


def run_args(ph_dir, out_dir, *extra):
    return [
        "run",
        "--support-feat", str(ph_dir / "support_features.maup"),
        "--support-mask", str(ph_dir / "support_mask.maup"),
        "--query-feat", str(ph_dir / "query_features.maup"),
        "--out", str(out_dir),
        *extra,
    ]


class TestRunCommand:
    def test_happy_path(self, tmp_path, capsys):
        ph = make_episode_files(tmp_path)
        rc = main(run_args(ph, tmp_path / "out", "--seed", "4", "--scale", "1"))
        assert rc == 0
        assert (tmp_path / "out" / "prompts.json").exists()
        assert "k_used=" in capsys.readouterr().out

    def test_gt_evaluation_line(self, tmp_path, capsys):
        ph = make_episode_files(tmp_path)
        rc = main(
            run_args(ph, tmp_path / "out", "--scale", "1", "--query-gt", str(ph / "query_gt.maup"))
        )
        assert rc == 0
        assert "surrogate dice" in capsys.readouterr().out

    def test_no_np_flag(self, tmp_path):
        ph = make_episode_files(tmp_path)
        rc = main(run_args(ph, tmp_path / "out", "--no-np"))
        assert rc == 0
        data = json.loads((tmp_path / "out" / "prompts.json").read_text())
        assert data["negatives"] == []

    def test_heatmaps_flag(self, tmp_path):
        ph = make_episode_files(tmp_path)
        rc = main(run_args(ph, tmp_path / "out", "--heatmaps"))
        assert rc == 0
        assert (tmp_path / "out" / "mean.pgm").exists()

    def test_missing_file_exits_two(self, tmp_path, capsys):
        rc = main(
            [
                "run",
                "--support-feat", str(tmp_path / "missing.maup"),
                "--support-mask", str(tmp_path / "missing.maup"),
                "--query-feat", str(tmp_path / "missing.maup"),
                "--out", str(tmp_path / "out"),
            ]
        )
        assert rc == 2
        assert "error" in capsys.readouterr().err

    def test_empty_support_mask_exits_two_with_stage(self, tmp_path, capsys):
        ph = make_episode_files(tmp_path)
        empty = BitMask(np.zeros((32, 32), dtype=np.uint8))
        save_tensor(empty, ph / "support_mask.maup")
        rc = main(run_args(ph, tmp_path / "out"))
        assert rc == 2
        assert "RPG: empty foreground" in capsys.readouterr().err

    def test_full_frame_mask_prints_periphery_flag(self, tmp_path, capsys):
        ph = make_episode_files(tmp_path)
        full = BitMask(np.ones((32, 32), dtype=np.uint8))
        save_tensor(full, ph / "support_mask.maup")
        rc = main(run_args(ph, tmp_path / "out", "--scale", "1"))
        assert rc == 0
        assert "np-disabled-empty-periphery" in capsys.readouterr().out

    def test_usage_error_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            main(["run", "--bogus"])
        assert exc.value.code == 1

    def test_missing_subcommand_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            main([])
        assert exc.value.code == 1


class TestPhantomCommand:
    def test_writes_all_tensors(self, tmp_path):
        out = tmp_path / "ph"
        rc = main(["phantom", "--family", "annulus", "--seed", "3", "--out", str(out)])
        assert rc == 0
        names = {p.name for p in out.iterdir()}
        assert names == {
            "support_features.maup",
            "support_mask.maup",
            "query_features.maup",
            "query_gt.maup",
            "query_intensity.maup",
        }

    def test_unknown_family_exits_one(self):
        with pytest.raises(SystemExit) as exc:
            main(["phantom", "--family", "cube", "--out", "/tmp/x"])
        assert exc.value.code == 1


class TestAblateCommand:
    def write_config(self, tmp_path, text):
        cfg = tmp_path / "sweep.cfg"
        cfg.write_text(text)
        return cfg

    def test_sweep_rows(self, tmp_path, capsys):
        cfg = self.write_config(
            tmp_path,
            """
            # two toggle rows, two region counts, three seeds
            families = disk
            toggles = mmp+ump | mmp+ump+np
            nf = 5, 30
            seeds = 3
            """,
        )
        out = tmp_path / "report.csv"
        rc = main(["ablate", "--config", str(cfg), "--out", str(out)])
        assert rc == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1 + 1 * 2 * 2 * 3
        assert "mean dice" in capsys.readouterr().out

    def test_seed_list_syntax(self, tmp_path):
        cfg = self.write_config(tmp_path, "families = disk\nseeds = 1, 3, 5\n")
        out = tmp_path / "report.csv"
        assert main(["ablate", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert {l.split(",")[5] for l in lines[1:]} == {"1", "3", "5"}

    def test_seed_range_syntax(self, tmp_path):
        cfg = self.write_config(tmp_path, "families = disk\nseeds = 5..7\n")
        out = tmp_path / "report.csv"
        assert main(["ablate", "--config", str(cfg), "--out", str(out)]) == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 4
        assert {l.split(",")[5] for l in lines[1:]} == {"5", "6", "7"}

    def test_bad_toggle_exits_two(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, "toggles = np\n")
        rc = main(["ablate", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert rc == 2
        assert "positive paths" in capsys.readouterr().err

    def test_unknown_toggle_name_exits_two(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, "toggles = mmp+xyz\n")
        rc = main(["ablate", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert rc == 2
        assert "xyz" in capsys.readouterr().err

    def test_bad_config_line(self, tmp_path):
        cfg = self.write_config(tmp_path, "families disk\n")
        rc = main(["ablate", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert rc == 2

    def test_parse_sweep_config_roundtrip(self, tmp_path):
        cfg = self.write_config(tmp_path, "a = 1\nb = two  # comment\n\n# full comment\n")
        assert parse_sweep_config(cfg) == {"a": "1", "b": "two"}

    def test_unknown_family_in_config(self, tmp_path):
        cfg = self.write_config(tmp_path, "families = blob\n")
        rc = main(["ablate", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert rc == 2

    @pytest.mark.parametrize("line", ["gamma = abc", "seeds = x..y", "nf = 1, two"])
    def test_bad_numeric_values_exit_two(self, tmp_path, line, capsys):
        cfg = self.write_config(tmp_path, line + "\n")
        rc = main(["ablate", "--config", str(cfg), "--out", str(tmp_path / "r.csv")])
        assert rc == 2
        assert "error" in capsys.readouterr().err
