from __future__ import annotations

import json

import pytest

from pwdist.cli import EXIT_INPUT, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, main


@pytest.fixture
def corpus(tmp_path):
    path = tmp_path / "corpus.txt"
    lines = [b"123456"] * 12 + [b"qwerty"] * 6 + [b"dragon"] * 4 + [b"letmein"] * 3
    path.write_bytes(b"\n".join(lines) + b"\n")
    return path


def ingest_table(tmp_path, corpus, name="t"):
    out = tmp_path / name
    assert main(["ingest", str(corpus), "--out-dir", str(out), "--seed", "3"]) == EXIT_OK
    return out / "table.tsv"


class TestExitCodes:
    def test_unknown_subcommand_is_usage_error(self, capsys):
        assert main(["frobnicate"]) == EXIT_USAGE
        assert "pwdist-error\tusage" in capsys.readouterr().err

    def test_unknown_flag_is_usage_error(self):
        assert main(["ingest", "--bogus"]) == EXIT_USAGE

    def test_empty_corpus_is_input_error(self, tmp_path, capsys):
        empty = tmp_path / "empty.txt"
        empty.write_bytes(b"")
        code = main(["ingest", str(empty), "--out-dir", str(tmp_path / "o")])
        assert code == EXIT_INPUT
        assert "pwdist-error\tinput" in capsys.readouterr().err

    def test_missing_file_is_input_error(self, tmp_path):
        assert main(["ingest", str(tmp_path / "nope.txt"), "--out-dir", str(tmp_path)]) == EXIT_INPUT

    def test_degenerate_fit_is_numeric_error(self, tmp_path, capsys):
        single = tmp_path / "one.txt"
        single.write_bytes(b"only\nonly\n")
        table = ingest_table(tmp_path, single)
        code = main(["fit", "--table", str(table), "--out-dir", str(tmp_path / "f")])
        assert code == EXIT_NUMERIC
        assert "pwdist-error\tnumeric" in capsys.readouterr().err

    def test_help_exits_zero(self):
        assert main(["--help"]) == 0


class TestIngest:
    def test_writes_table_and_manifest(self, tmp_path, corpus):
        out = tmp_path / "out"
        assert main(["ingest", str(corpus), "--out-dir", str(out), "--seed", "3"]) == EXIT_OK
        table_lines = (out / "table.tsv").read_bytes().splitlines()
        assert table_lines[0] == b"rank\tcount\tpassword"
        assert table_lines[1] == b"1\t12\t123456"
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["command"] == "ingest"
        assert manifest["parameters"]["seed"] == 3
        assert "table.tsv" in manifest["outputs"]
        assert "corpus.txt" in manifest["inputs"]

    def test_user_tab_password_format(self, tmp_path):
        raw = tmp_path / "utp.txt"
        raw.write_bytes(b"alice\tpw1\nbob\tpw1\ncarol\tpw2\nbroken-line\n")
        out = tmp_path / "out"
        code = main(
            ["ingest", str(raw), "--format", "user-tab-password", "--out-dir", str(out)]
        )
        assert code == EXIT_OK
        assert b"1\t2\tpw1" in (out / "table.tsv").read_bytes()

    def test_max_ranks_caps_table(self, tmp_path, corpus):
        out = tmp_path / "capped"
        code = main(["ingest", str(corpus), "--out-dir", str(out), "--max-ranks", "2"])
        assert code == EXIT_OK
        lines = (out / "table.tsv").read_bytes().splitlines()
        assert len(lines) == 3  # header plus two ranks


class TestFit:
    def test_collinear_fixture_reports_ls_raw_one(self, tmp_path, corpus):
        table = ingest_table(tmp_path, corpus)
        out = tmp_path / "fit"
        code = main(
            ["fit", "--table", str(table), "--out-dir", str(out), "--replicates", "10"]
        )
        assert code == EXIT_OK
        rows = {
            line.split("\t")[0]: line.split("\t")
            for line in (out / "fit.tsv").read_text().splitlines()[1:]
        }
        assert float(rows["ls-raw"][1]) == pytest.approx(1.0, abs=1e-9)
        assert rows["mle"][4] != ""  # p_value present
        assert (out / "binned_rank.tsv").exists()
        assert (out / "binned_nk.tsv").exists()

    def test_replicates_zero_skips_p_value(self, tmp_path, corpus):
        table = ingest_table(tmp_path, corpus)
        out = tmp_path / "fit0"
        assert main(["fit", "--table", str(table), "--out-dir", str(out), "--replicates", "0"]) == EXIT_OK
        rows = {
            line.split("\t")[0]: line.split("\t")
            for line in (out / "fit.tsv").read_text().splitlines()[1:]
        }
        assert rows["mle"][4] == ""


class TestStats:
    def test_writes_three_model_rows(self, tmp_path, corpus):
        table = ingest_table(tmp_path, corpus)
        out = tmp_path / "stats"
        assert main(["stats", "--table", str(table), "--out-dir", str(out)]) == EXIT_OK
        lines = (out / "stats.tsv").read_text().splitlines()
        assert [line.split("\t")[0] for line in lines] == ["model", "uniform", "empirical", "zipf"]


class TestCurve:
    def test_reference_equal_to_target_matches_self_curve(self, tmp_path, corpus):
        table = ingest_table(tmp_path, corpus)
        self_out = tmp_path / "self"
        cross_out = tmp_path / "cross"
        assert main(["curve", "--target", str(table), "--out-dir", str(self_out)]) == EXIT_OK
        assert (
            main(
                [
                    "curve",
                    "--target", str(table),
                    "--reference", str(table),
                    "--out-dir", str(cross_out),
                ]
            )
            == EXIT_OK
        )
        assert (self_out / "curve.tsv").read_bytes() == (cross_out / "curve.tsv").read_bytes()

    def test_wordlist_reference(self, tmp_path, corpus):
        table = ingest_table(tmp_path, corpus)
        words = tmp_path / "words.txt"
        words.write_bytes(b"zzz\n123456\naaa\n")
        out = tmp_path / "wl"
        code = main(
            ["curve", "--target", str(table), "--wordlist", str(words), "--out-dir", str(out)]
        )
        assert code == EXIT_OK
        lines = (out / "curve.tsv").read_text().splitlines()
        assert lines[1] == "1\t12\t0.48"  # "123456" sorts first and recovers 12 users


class TestCrack:
    def test_generate_then_attack(self, tmp_path, corpus):
        table = ingest_table(tmp_path, corpus)
        gen = tmp_path / "gen"
        code = main(
            [
                "crack",
                "--corpus", str(corpus),
                "--salt-count", "4",
                "--out-dir", str(gen),
                "--seed", "5",
            ]
        )
        assert code == EXIT_OK
        hashes = gen / "hashes.tsv"
        attack = tmp_path / "attack"
        code = main(
            [
                "crack",
                "--hashes", str(hashes),
                "--ordering", str(table),
                "--out-dir", str(attack),
            ]
        )
        assert code == EXIT_OK
        assert (attack / "curve_users.tsv").exists()
        assert (attack / "curve_distinct.tsv").exists()
        cracked = (attack / "cracked.tsv").read_bytes().splitlines()
        assert len(cracked) - 1 == 25  # every user recovered

    def test_crack_without_inputs_is_usage_error(self, tmp_path):
        assert main(["crack", "--out-dir", str(tmp_path)]) == EXIT_USAGE


class TestMhSim:
    def test_config_file_drives_simulation(self, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text(
            "# tiny flattening run\n"
            "source = zipf\n"
            "s = 0.9\n"
            "n-ranks = 200\n"
            "n-users = 1500\n"
            "backend = exact\n"
            "seed = 11\n"
        )
        out = tmp_path / "sim"
        assert main(["mh-sim", "--config", str(config), "--out-dir", str(out)]) == EXIT_OK
        summary = (out / "summary.tsv").read_text().splitlines()
        assert summary[0] == "mean_asks\tvar_asks\trejected_total"
        accepted = (out / "accepted.tsv").read_bytes().splitlines()
        free = (out / "free.tsv").read_bytes().splitlines()
        assert accepted[0] == b"rank\tcount\tpassword"
        assert len(accepted) > 2 and len(free) > 2

    def test_flag_overrides_config(self, tmp_path):
        config = tmp_path / "sim.cfg"
        config.write_text("source = zipf\ns = 0.9\nn-ranks = 100\nn-users = 4000\n")
        out = tmp_path / "sim"
        code = main(
            ["mh-sim", "--config", str(config), "--n-users", "300", "--out-dir", str(out)]
        )
        assert code == EXIT_OK
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["parameters"]["n_users"] == 300

    def test_ban_file(self, tmp_path):
        ban = tmp_path / "banned.txt"
        ban.write_bytes(b"p00000001\n")
        out = tmp_path / "sim"
        code = main(
            [
                "mh-sim",
                "--source", "zipf",
                "--s", "1.0",
                "--n-ranks", "50",
                "--n-users", "800",
                "--ban-file", str(ban),
                "--out-dir", str(out),
                "--seed", "2",
            ]
        )
        assert code == EXIT_OK
        assert b"\tp00000001" not in (out / "accepted.tsv").read_bytes()
