from __future__ import annotations

from weightgen.cli import main

from conftest import fixture_path


def run(capsys, *argv):
    status = main(list(argv))
    captured = capsys.readouterr()
    return status, captured.out, captured.err


class TestCommands:
    def test_validate(self, capsys):
        status, out, _ = run(capsys, "validate", fixture_path("motzkin.gram"))
        assert status == 0
        assert "axiom: S" in out
        assert "context-free: yes" in out

    def test_validate_all_fixtures(self, capsys):
        for name in ("motzkin.gram", "fibonacci.gram", "motif.gram", "quadtree.gram",
                     "arithmetic.gram", "stemloops.gram", "rna.gram",
                     "rna_helix.gram", "rna_loops.gram"):
            status, _, err = run(capsys, "validate", fixture_path(name))
            assert status == 0, (name, err)

    def test_count_motzkin(self, capsys):
        status, out, _ = run(capsys, "count", fixture_path("motzkin.gram"),
                             "--size", "6", "--uniform")
        assert status == 0
        assert out.strip() == "51"

    def test_count_weighted_fraction(self, capsys):
        status, out, _ = run(capsys, "count", fixture_path("motzkin.gram"),
                             "--size", "2", "--weight", "c=1/2")
        assert status == 0
        assert out.startswith("5/4")

    def test_sample_deterministic(self, capsys):
        args = ("sample", fixture_path("motzkin.gram"), "--size", "15",
                "-m", "5", "--seed", "42")
        s1, out1, _ = run(capsys, *args)
        s2, out2, _ = run(capsys, *args)
        assert s1 == s2 == 0
        assert out1 == out2
        lines = out1.strip().split("\n")
        assert lines[0].startswith("# seed=42 spec=")
        assert len(lines) == 6
        assert all(len(w) == 15 for w in lines[1:])

    def test_sample_tree_format(self, capsys):
        status, out, _ = run(capsys, "sample", fixture_path("motzkin.gram"),
                             "--size", "4", "--seed", "1", "--format", "tree")
        assert status == 0
        assert "(" in out

    def test_freqs(self, capsys):
        status, out, _ = run(capsys, "freqs", fixture_path("motzkin.gram"),
                             "--size", "3", "--uniform")
        assert status == 0
        assert "c\t1/2\t0.5" in out

    def test_freqs_methods_agree(self, capsys):
        _, out_dp, _ = run(capsys, "freqs", fixture_path("motzkin.gram"),
                           "--size", "9", "--method", "dp")
        _, out_pt, _ = run(capsys, "freqs", fixture_path("motzkin.gram"),
                           "--size", "9", "--method", "pointing")
        assert out_dp == out_pt

    def test_fit_round_trip(self, capsys):
        status, out, _ = run(capsys, "fit", fixture_path("motzkin.gram"),
                             "--size", "30", "--target", "c=0.5",
                             "--tolerance", "1e-6")
        assert status == 0
        weight = float([l for l in out.splitlines() if l.startswith("c\t")][0].split("\t")[1])
        _, freqs_out, _ = run(capsys, "freqs", fixture_path("motzkin.gram"),
                              "--size", "30", "--weight", "c=%.10g" % weight,
                              "--atoms", "c")
        decimal = float(freqs_out.strip().split("\n")[-1].split("\t")[2])
        assert abs(decimal - 0.5) < 1e-4

    def test_asympt(self, capsys):
        status, out, _ = run(capsys, "asympt", fixture_path("fibonacci.gram"))
        assert status == 0
        assert out.startswith("rho\t0.61803398")

    def test_solve(self, capsys):
        status, out, _ = run(capsys, "solve", fixture_path("fibonacci.gram"),
                             "--target", "a=0.5")
        assert status == 0
        assert "a\t1.154700538" in out
        assert "# rho 0.5773502" in out

    def test_exact_sample(self, capsys):
        status, out, _ = run(capsys, "exact-sample", fixture_path("motzkin.gram"),
                             "--size", "4", "--occurrences", "a=1,b=1,c=2",
                             "-m", "4", "--seed", "11")
        assert status == 0
        lines = out.strip().split("\n")
        assert lines[0].startswith("# exact table predicted bytes:")
        assert "# fiber size: 6" in out
        words = [l for l in lines if not l.startswith("#")]
        assert len(words) == 4
        assert all(sorted(w) == ["a", "b", "c", "c"] for w in words)


class TestErrors:
    def test_spec_error_exit_code(self, capsys, tmp_path):
        bad = tmp_path / "bad.gram"
        bad.write_text("S -> S ;\n")
        status, _, err = run(capsys, "validate", str(bad))
        assert status == 3
        assert err.startswith("error[EpsilonCycle]")

    def test_syntax_error_position(self, capsys, tmp_path):
        bad = tmp_path / "bad.gram"
        bad.write_text("S -> a\n")
        status, _, err = run(capsys, "count", str(bad), "--size", "1")
        assert status == 3
        assert "error[SyntaxError]" in err

    def test_empty_class_exit_code(self, capsys, tmp_path):
        gram = tmp_path / "even.gram"
        gram.write_text("S -> a a S | _ ;\n")
        status, _, err = run(capsys, "sample", str(gram), "--size", "3", "--seed", "1")
        assert status == 4
        assert "error[EmptyClassAtSize]" in err

    def test_periodic_exit_code(self, capsys, tmp_path):
        gram = tmp_path / "even.gram"
        gram.write_text("S -> a a S | _ ;\n")
        status, _, err = run(capsys, "asympt", str(gram))
        assert status == 4
        assert "error[PeriodicSpec]" in err

    def test_missing_file(self, capsys):
        status, _, err = run(capsys, "validate", "/nonexistent.gram")
        assert status == 3
        assert "error[" in err

    def test_budget_exceeded(self, capsys, monkeypatch):
        monkeypatch.setenv("WEIGHTGEN_MAX_TABLE_BYTES", "10")
        status, _, err = run(capsys, "exact-sample", fixture_path("motzkin.gram"),
                             "--size", "4", "--occurrences", "a=1,b=1,c=2")
        assert status == 5
        assert "error[ResourceBudget]" in err


class TestTableCache:
    def test_cache_round_trip(self, capsys, tmp_path):
        cache = tmp_path / "motzkin.wgct"
        args = ("count", fixture_path("motzkin.gram"), "--size", "10",
                "--uniform", "--table-cache", str(cache))
        s1, out1, _ = run(capsys, *args)
        assert s1 == 0 and cache.exists()
        s2, out2, _ = run(capsys, *args)
        assert s2 == 0 and out1 == out2
