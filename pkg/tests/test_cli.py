import subprocess
import sys

import numpy as np
import pytest

from maskkit import GrayImage, bare_grid, gen_mesh
from maskkit.cli import main
from maskkit.pnm import read_gray, read_header_comments, read_mask, write_gray


def run(*argv):
    return main(list(argv))


def csv_rows(text):
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [ln.split(",") for ln in lines[1:]]


class TestGen:
    def test_mesh_seventy_percent_has_35_ones(self, tmp_path):
        out = tmp_path / "m.pbm"
        assert run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7",
                   "--seed", "42", "-o", str(out)) == 0
        mask = read_mask(out)
        assert mask.masked_count == 35

    def test_provenance_header(self, tmp_path):
        out = tmp_path / "m.pbm"
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7",
            "--seed", "42", "-o", str(out))
        comments = read_header_comments(out)
        for expected in ("pattern=mesh", "ratio=0.7", "grid=7x7", "seed=42", "rng=numpy-pcg64"):
            assert expected in comments

    def test_matches_library_generator(self, tmp_path):
        out = tmp_path / "m.pbm"
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7",
            "--seed", "42", "-o", str(out))
        assert read_mask(out).cells == gen_mesh(bare_grid(7, 7), "0.7", 42).cells

    def test_ratio_below_half_exits_2(self, tmp_path, capsys):
        code = run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.4",
                   "--seed", "1", "-o", str(tmp_path / "x.pbm"))
        assert code == 2
        assert "ratio" in capsys.readouterr().err

    def test_square_requires_side(self, tmp_path, capsys):
        code = run("gen", "--pattern", "square", "--grid", "7x7", "--ratio", "0.6",
                   "--seed", "1", "-o", str(tmp_path / "x.pbm"))
        assert code == 2
        assert "--side" in capsys.readouterr().err

    def test_byte_identical_rerun(self, tmp_path):
        a, b = tmp_path / "a.pbm", tmp_path / "b.pbm"
        for out in (a, b):
            run("gen", "--pattern", "random", "--grid", "7x7", "--ratio", "0.6",
                "--seed", "1", "-o", str(out))
        assert a.read_bytes() == b.read_bytes()

    def test_env_seed_fallback(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MASKKIT_SEED", "42")
        a, b = tmp_path / "a.pbm", tmp_path / "b.pbm"
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7", "-o", str(a))
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7",
            "--seed", "42", "-o", str(b))
        # seed line matches, mask body identical
        assert read_mask(a).cells == read_mask(b).cells

    def test_missing_seed_exits_2(self, tmp_path, monkeypatch, capsys):
        monkeypatch.delenv("MASKKIT_SEED", raising=False)
        code = run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7",
                   "-o", str(tmp_path / "x.pbm"))
        assert code == 2
        assert "MASKKIT_SEED" in capsys.readouterr().err


class TestApply:
    def _write_inputs(self, tmp_path, ratio="0.6"):
        img_path = tmp_path / "img.pgm"
        write_gray(img_path, GrayImage.flat(224, 224, 200))
        mask_path = tmp_path / "m.pbm"
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", ratio,
            "--seed", "5", "-o", str(mask_path))
        return img_path, mask_path

    def test_zero_mask_is_identity(self, tmp_path):
        img_path = tmp_path / "img.pgm"
        write_gray(img_path, GrayImage.flat(64, 64, 123))
        mask_path = tmp_path / "z.pbm"
        run("gen", "--pattern", "random", "--grid", "2x2", "--ratio", "0.0",
            "--seed", "1", "-o", str(mask_path))
        out_path = tmp_path / "out.pgm"
        assert run("apply", "--image", str(img_path), "--mask", str(mask_path),
                   "--patch-size", "32", "--fill", "0", "-o", str(out_path)) == 0
        assert (read_gray(out_path).as_array() == 123).all()

    def test_sixty_percent_mesh_fills_30_patches(self, tmp_path):
        img_path, mask_path = self._write_inputs(tmp_path)
        out_path = tmp_path / "out.pgm"
        run("apply", "--image", str(img_path), "--mask", str(mask_path),
            "--patch-size", "32", "--fill", "0", "-o", str(out_path))
        arr = read_gray(out_path).as_array()
        filled = sum(
            (arr[32 * r : 32 * r + 32, 32 * c : 32 * c + 32] == 0).all()
            for r in range(7)
            for c in range(7)
        )
        assert filled == 30
        assert int((arr == 0).sum()) == 30 * 32 * 32

    def test_missing_file_exits_2_with_path(self, tmp_path, capsys):
        code = run("apply", "--image", str(tmp_path / "absent.pgm"),
                   "--mask", str(tmp_path / "m.pbm"), "--patch-size", "32",
                   "--fill", "0", "-o", str(tmp_path / "out.pgm"))
        assert code == 2
        assert "absent.pgm" in capsys.readouterr().err

    def test_geometry_mismatch_exits_2(self, tmp_path, capsys):
        img_path, mask_path = self._write_inputs(tmp_path)
        code = run("apply", "--image", str(img_path), "--mask", str(mask_path),
                   "--patch-size", "16", "--fill", "0", "-o", str(tmp_path / "o.pgm"))
        assert code == 2
        assert "7x7" in capsys.readouterr().err


class TestOcclusion:
    def test_exact_mesh_flagship(self, capsys):
        assert run("occlusion", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.6",
                   "--region", "2x2", "--mode", "exact") == 0
        header, rows = csv_rows(capsys.readouterr().out)
        row = dict(zip(header, rows[0]))
        assert row["pattern"] == "mesh" and row["method"] == "exact"
        assert round(float(row["probability"]), 4) == 0.0431

    def test_exact_random_flagship(self, capsys):
        run("occlusion", "--pattern", "random", "--grid", "7x7", "--ratio", "0.6",
            "--region", "2x2", "--mode", "exact")
        _, rows = csv_rows(capsys.readouterr().out)
        assert round(float(rows[0][5]), 4) == 0.1121

    def test_square_has_no_exact_form(self, capsys):
        code = run("occlusion", "--pattern", "square", "--side", "2", "--grid", "7x7",
                   "--ratio", "0.6", "--region", "2x2", "--mode", "exact")
        assert code == 2
        assert "mc" in capsys.readouterr().err

    def test_masked_count_override_for_count_matching(self, capsys):
        run("occlusion", "--pattern", "random", "--grid", "7x7", "--ratio", "0.6",
            "--region", "2x2", "--mode", "exact", "--masked-count", "30")
        _, rows = csv_rows(capsys.readouterr().out)
        assert float(rows[0][5]) > 0.1121  # 30 masked occlude more than 29
        code = run("occlusion", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.6",
                   "--region", "2x2", "--mode", "exact", "--masked-count", "30")
        assert code == 2

    def test_mc_writes_file(self, tmp_path):
        out = tmp_path / "occ.csv"
        assert run("occlusion", "--pattern", "blockwise", "--grid", "7x7",
                   "--ratio", "0.6", "--region", "2x2", "--mode", "mc",
                   "--trials", "2000", "--seed", "3", "-o", str(out)) == 0
        header, rows = csv_rows(out.read_text())
        row = dict(zip(header, rows[0]))
        assert row["method"] == "monte_carlo" and row["trials"] == "2000"
        assert 0 <= float(row["probability"]) <= 1


class TestStats:
    def test_frequency_grid(self, capsys):
        assert run("stats", "--pattern", "random", "--grid", "3x3", "--ratio", "0.5",
                   "--trials", "500", "--seed", "2") == 0
        header, rows = csv_rows(capsys.readouterr().out)
        assert header == ["col", "row", "frequency"]
        assert len(rows) == 9
        assert all(0 <= float(r[2]) <= 1 for r in rows)


class TestPropagate:
    def test_sparse_constant_active_count(self, tmp_path, capsys):
        mask_path = tmp_path / "m.pbm"
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.6",
            "--seed", "9", "-o", str(mask_path))
        assert run("propagate", "--mask", str(mask_path), "--mode", "sparse",
                   "--layers", "4") == 0
        _, rows = csv_rows(capsys.readouterr().out)
        counts = {r[1] for r in rows}
        assert len(rows) == 5 and counts == {"19"}

    def test_dense_reaches_full(self, tmp_path, capsys):
        mask_path = tmp_path / "m.pbm"
        run("gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.6",
            "--seed", "9", "-o", str(mask_path))
        run("propagate", "--mask", str(mask_path), "--mode", "dense", "--layers", "7")
        _, rows = csv_rows(capsys.readouterr().out)
        assert rows[-1][2] == "1"
        counts = [int(r[1]) for r in rows]
        assert counts == sorted(counts)

    def test_frames_output(self, tmp_path, capsys):
        mask_path = tmp_path / "m.pbm"
        run("gen", "--pattern", "random", "--grid", "3x3", "--ratio", "0.5",
            "--seed", "1", "-o", str(mask_path))
        run("propagate", "--mask", str(mask_path), "--mode", "sparse",
            "--layers", "1", "--frames")
        out = capsys.readouterr().out
        assert "layer 0 (3x3)" in out and "#" in out


class TestMetricsCommand:
    def test_fixture_row(self, tmp_path, capsys):
        csv_path = tmp_path / "preds.csv"
        pairs = [(1, 1)] * 25 + [(0, 1)] * 6 + [(0, 0)] * 146 + [(1, 0)]
        csv_path.write_text("truth,pred\n" + "".join(f"{t},{p}\n" for t, p in pairs))
        assert run("metrics", "--csv", str(csv_path)) == 0
        out = capsys.readouterr().out
        header, rows = csv_rows(out)
        assert header == ["accuracy", "precision", "recall", "f1"]
        assert rows[0] == ["96.1", "80.6", "96.2", "87.7"]

    def test_undefined_cells_empty(self, tmp_path, capsys):
        csv_path = tmp_path / "preds.csv"
        csv_path.write_text("truth,pred\n0,0\n0,0\n")
        run("metrics", "--csv", str(csv_path))
        _, rows = csv_rows(capsys.readouterr().out)
        assert rows[0] == ["100.0", "", "", ""]


class TestWeightsCommand:
    def test_weights_row(self, capsys):
        assert run("weights", "--n0", "1258", "--n1", "166") == 0
        _, rows = csv_rows(capsys.readouterr().out)
        assert rows[0][:2] == ["1258", "166"]
        assert float(rows[0][2]) == pytest.approx(1.1320, abs=1e-4)
        assert float(rows[0][3]) == pytest.approx(8.5783, abs=1e-4)


class TestAugmentCommands:
    def _images(self, tmp_path):
        a, b = tmp_path / "a.pgm", tmp_path / "b.pgm"
        write_gray(a, GrayImage.flat(16, 16, 100))
        write_gray(b, GrayImage.flat(16, 16, 200))
        return a, b

    def test_mixup_fixed_lambda(self, tmp_path, capsys):
        a, b = self._images(tmp_path)
        out = tmp_path / "out.pgm"
        assert run("augment", "mixup", "--a", str(a), "--b", str(b),
                   "--lam", "0.5", "-o", str(out)) == 0
        assert "lam=0.5" in capsys.readouterr().out
        assert (read_gray(out).as_array() == 150).all()

    def test_mixup_sampled_lambda_echoed(self, tmp_path, capsys):
        a, b = self._images(tmp_path)
        out = tmp_path / "out.pgm"
        run("augment", "mixup", "--a", str(a), "--b", str(b),
            "--alpha", "1.0", "--seed", "7", "-o", str(out))
        echo = dict(
            line.split("=", 1) for line in capsys.readouterr().out.splitlines()
        )
        assert echo["seed"] == "7"
        assert 0 <= float(echo["lam"]) <= 1

    def test_cutmix_lambda_law(self, tmp_path, capsys):
        a, b = self._images(tmp_path)
        out = tmp_path / "out.pgm"
        run("augment", "cutmix", "--a", str(a), "--b", str(b),
            "--alpha", "1.0", "--seed", "3", "-o", str(out))
        echo = dict(
            line.split("=", 1) for line in capsys.readouterr().out.splitlines()
        )
        pasted = int((read_gray(out).as_array() == 200).sum())
        assert float(echo["lam"]) == 1 - pasted / 256

    def test_crop_output_size(self, tmp_path):
        a, _ = self._images(tmp_path)
        out = tmp_path / "out.pgm"
        assert run("augment", "crop", "--image", str(a), "--size", "8",
                   "--seed", "2", "-o", str(out)) == 0
        img = read_gray(out)
        assert (img.width, img.height) == (8, 8)

    def test_flip_deterministic(self, tmp_path):
        a, _ = self._images(tmp_path)
        out1, out2 = tmp_path / "o1.pgm", tmp_path / "o2.pgm"
        for out in (out1, out2):
            run("augment", "flip", "--image", str(a), "--p", "0.5",
                "--seed", "6", "-o", str(out))
        assert out1.read_bytes() == out2.read_bytes()


class TestDeterminism:
    def test_all_file_writing_commands_rerun_identically(self, tmp_path):
        img = tmp_path / "img.pgm"
        write_gray(img, GrayImage.flat(64, 64, 90))
        mask = tmp_path / "mask.pbm"
        run("gen", "--pattern", "mesh", "--grid", "4x4", "--ratio", "0.5",
            "--seed", "8", "--parity-mode", "checkerboard", "-o", str(mask))
        commands = [
            ["gen", "--pattern", "blockwise", "--grid", "7x7", "--ratio", "0.6", "--seed", "3"],
            ["gen", "--pattern", "square", "--grid", "7x7", "--side", "2", "--ratio", "0.6", "--seed", "3"],
            ["apply", "--image", str(img), "--mask", str(mask), "--patch-size", "16", "--fill", "0"],
            ["occlusion", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7",
             "--region", "2x2", "--mode", "mc", "--trials", "3000", "--seed", "4"],
            ["stats", "--pattern", "random", "--grid", "3x3", "--ratio", "0.5",
             "--trials", "300", "--seed", "5"],
            ["propagate", "--mask", str(mask), "--mode", "dense", "--layers", "3"],
            ["weights", "--n0", "10", "--n1", "3"],
            ["augment", "crop", "--image", str(img), "--size", "16", "--seed", "2"],
        ]
        for i, argv in enumerate(commands):
            a, b = tmp_path / f"{i}_a.out", tmp_path / f"{i}_b.out"
            assert run(*argv, "-o", str(a)) == 0
            assert run(*argv, "-o", str(b)) == 0
            assert a.read_bytes() == b.read_bytes(), argv


class TestSelfDescribingOutputs:
    FLAG_NAMES = {
        "pattern": "--pattern",
        "ratio": "--ratio",
        "grid": "--grid",
        "seed": "--seed",
        "side": "--side",
        "min_block_area": "--min-block-area",
        "aspect": "--aspect",
        "rounding": "--rounding",
        "parity_mode": "--parity-mode",
    }

    def rebuild_argv(self, path):
        manifest = dict(
            line.split("=", 1) for line in read_header_comments(path) if "=" in line
        )
        argv = [manifest.pop("command")]
        for key, value in manifest.items():
            flag = self.FLAG_NAMES.get(key)
            if flag is not None:
                argv.extend([flag, value])
        return argv

    @pytest.mark.parametrize(
        "argv",
        [
            ["gen", "--pattern", "mesh", "--grid", "7x7", "--ratio", "0.7", "--seed", "42"],
            ["gen", "--pattern", "random", "--grid", "7x7", "--ratio", "0.6", "--seed", "1"],
            ["gen", "--pattern", "square", "--side", "3", "--grid", "7x7", "--ratio", "0.6", "--seed", "2"],
            ["gen", "--pattern", "blockwise", "--grid", "7x7", "--ratio", "0.8", "--seed", "9"],
        ],
    )
    def test_embedded_manifest_reproduces_file(self, tmp_path, argv):
        original = tmp_path / "original.pbm"
        assert run(*argv, "-o", str(original)) == 0
        replayed = tmp_path / "replayed.pbm"
        assert run(*self.rebuild_argv(original), "-o", str(replayed)) == 0
        assert replayed.read_bytes() == original.read_bytes()


class TestEntryPoint:
    def test_installed_script(self):
        proc = subprocess.run(
            [sys.executable, "-m", "maskkit", "--version"],
            capture_output=True,
            text=True,
        )
        assert proc.returncode == 0
        assert "maskkit" in proc.stdout
