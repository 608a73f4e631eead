import json
import shutil
import subprocess
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from rankinfer.cli.envelope import input_digest, render_csv

COUNTRY_CSV = (
    "country,math_score\n"
    "Australia,491.3600\n"
    "Austria,498.9423\n"
    "Belgium,508.0703\n"
    "Canada,512.0169\n"
    "Chile,417.4066\n"
    "Colombia,390.9323\n"
)

ESTIMATES_CSV = "name,est,se\na,0.0,0.05\nb,10.0,0.05\nc,20.0,0.05\n"


def parse_envelope(stdout):
    return json.loads(stdout)


class TestEnvelope:
    def test_digest_prefix_and_chunking(self):
        d1 = input_digest(b"ab", b"c")
        d2 = input_digest(b"a", b"bc")
        d3 = input_digest(b"abc")
        assert d1.startswith("sha256:")
        assert len({d1, d2, d3}) == 3
        assert input_digest(b"ab", b"c") == d1

    def test_key_order_frozen(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "math_score", "--label", "country"],
            stdin=COUNTRY_CSV,
        )
        assert res.code == 0
        assert list(json.loads(res.stdout).keys()) == [
            "procedure",
            "input_digest",
            "seed",
            "coverage",
            "results",
            "warnings",
        ]

    def test_json_round_trip_stable(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "math_score"], stdin=COUNTRY_CSV
        )
        body = json.loads(res.stdout)
        again = json.dumps(body, indent=2, ensure_ascii=False) + "\n"
        assert again == res.stdout

    def test_render_csv_float_repr(self):
        out = render_csv(["a", "b"], [[1, 0.1], ["x", 2.5]])
        assert out == "a,b\n1,0.1\nx,2.5\n"


class TestRanks:
    def test_country_fixture(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "math_score", "--label", "country"],
            stdin=COUNTRY_CSV,
        )
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert body["procedure"] == "ranks"
        assert body["seed"] is None
        assert body["coverage"] is None
        assert body["warnings"] == []
        results = body["results"]
        assert results["direction"] == "decreasing"
        assert results["omega"] == 0.0
        assert results["labels"] == [
            "Australia",
            "Austria",
            "Belgium",
            "Canada",
            "Chile",
            "Colombia",
        ]
        assert results["irank"] == [4.0, 3.0, 2.0, 1.0, 5.0, 6.0]
        assert results["frank"] == [v / 6 for v in results["irank"]]

    def test_increasing_omega(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "v", "--increasing", "--omega", "0.5"],
            stdin="v\n3\n7\n7\n",
        )
        body = parse_envelope(res.stdout)
        assert body["results"]["irank"] == [1.0, 2.5, 2.5]

    def test_against_reference_column(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "q", "--against", "ref", "--increasing"],
            stdin="q,ref\n5,1\n0,2\n9,3\n",
        )
        body = parse_envelope(res.stdout)
        assert body["results"]["irank"] == [4.0, 1.0, 4.0]

    def test_csv_format(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "math_score", "--label", "country", "--format", "csv"],
            stdin=COUNTRY_CSV,
        )
        lines = res.stdout.splitlines()
        assert lines[0] == "index,label,value,irank,frank"
        assert lines[4] == "4,Canada,512.0169,1.0," + repr(1.0 / 6.0)

    def test_missing_column(self, invoke_cli):
        res = invoke_cli(["ranks", "--column", "nope"], stdin=COUNTRY_CSV)
        assert res.code == 2
        assert "nope" in res.stderr

    def test_output_file_atomic(self, invoke_cli, tmp_path):
        target = tmp_path / "out.json"
        res = invoke_cli(
            ["ranks", "--column", "math_score", "-o", str(target)],
            stdin=COUNTRY_CSV,
        )
        assert res.code == 0
        assert res.stdout == ""
        body = json.loads(target.read_text())
        assert body["procedure"] == "ranks"
        leftovers = [p for p in tmp_path.iterdir() if p.name.startswith(".rankinfer-")]
        assert leftovers == []


class TestCsvErrors:
    @pytest.mark.parametrize(
        "payload,code,fragment",
        [
            ("a,b\n1\n", 2, "row 2 has 1 fields"),
            ("a,a\n1,2\n", 2, "duplicate column"),
            ("a\nfoo\n", 2, "non-numeric cell"),
            ("", 2, "empty input"),
            ("a\nNA\n", 3, "missing value"),
            ("a\ninf\n", 3, "non-finite"),
        ],
    )
    def test_error_taxonomy(self, invoke_cli, payload, code, fragment):
        res = invoke_cli(["ranks", "--column", "a"], stdin=payload)
        assert res.code == code
        assert fragment in res.stderr

    def test_invalid_utf8(self, invoke_cli):
        res = invoke_cli(["ranks", "--column", "a"], stdin=b"\xff\xfe\x00")
        assert res.code == 2
        assert "UTF-8" in res.stderr

    def test_unreadable_file(self, invoke_cli, tmp_path):
        res = invoke_cli(
            ["ranks", "--column", "a", "-i", str(tmp_path / "missing.csv")]
        )
        assert res.code == 2
        assert "cannot read" in res.stderr

    def test_unknown_format_flag(self, invoke_cli):
        res = invoke_cli(
            ["ranks", "--column", "a", "--format", "xml"], stdin="a\n1\n2\n"
        )
        assert res.code == 2

    def test_no_subcommand(self, invoke_cli):
        res = invoke_cli([])
        assert res.code == 2


class TestCsRanks:
    def test_pinned_ranks_with_se_column(self, invoke_cli):
        res = invoke_cli(
            [
                "cs-ranks",
                "--estimates",
                "est",
                "--se",
                "se",
                "--label",
                "name",
                "--seed",
                "7",
            ],
            stdin=ESTIMATES_CSV,
        )
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert body["procedure"] == "cs-ranks"
        assert body["seed"] == 7
        assert body["coverage"] == 0.95
        results = body["results"]
        assert results["mode"] == "marginal"
        assert results["labels"] == ["a", "b", "c"]
        assert results["rank"] == [3, 2, 1]
        assert results["L"] == [3, 2, 1]
        assert results["U"] == [3, 2, 1]

    def test_seeded_runs_byte_identical(self, invoke_cli):
        args = [
            "cs-ranks",
            "--estimates",
            "est",
            "--se",
            "se",
            "--seed",
            "123",
            "--simul",
        ]
        first = invoke_cli(args, stdin=ESTIMATES_CSV)
        second = invoke_cli(args, stdin=ESTIMATES_CSV)
        assert first.stdout == second.stdout

    def test_entropy_seed_recorded(self, invoke_cli):
        args = ["cs-ranks", "--estimates", "est", "--se", "se"]
        a = parse_envelope(invoke_cli(args, stdin=ESTIMATES_CSV).stdout)
        b = parse_envelope(invoke_cli(args, stdin=ESTIMATES_CSV).stdout)
        assert isinstance(a["seed"], int)
        assert 0 <= a["seed"] < 2**64
        assert a["seed"] != b["seed"]

    def test_covariance_file(self, invoke_cli, tmp_path):
        cov = tmp_path / "cov.csv"
        cov.write_text("c1,c2,c3\n0.0025,0,0\n0,0.0025,0\n0,0,0.0025\n")
        res = invoke_cli(
            [
                "cs-ranks",
                "--estimates",
                "est",
                "--cov",
                str(cov),
                "--seed",
                "5",
            ],
            stdin=ESTIMATES_CSV,
        )
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert body["results"]["rank"] == [3, 2, 1]

    def test_covariance_shape_mismatch(self, invoke_cli, tmp_path):
        cov = tmp_path / "cov.csv"
        cov.write_text("c1,c2\n1,0\n0,1\n")
        res = invoke_cli(
            ["cs-ranks", "--estimates", "est", "--cov", str(cov)],
            stdin=ESTIMATES_CSV,
        )
        assert res.code == 2
        assert "3x3" in res.stderr

    def test_se_and_cov_mutually_exclusive(self, invoke_cli, tmp_path):
        cov = tmp_path / "cov.csv"
        cov.write_text("c1,c2,c3\n1,0,0\n0,1,0\n0,0,1\n")
        res = invoke_cli(
            ["cs-ranks", "--estimates", "est", "--se", "se", "--cov", str(cov)],
            stdin=ESTIMATES_CSV,
        )
        assert res.code == 2
        res = invoke_cli(["cs-ranks", "--estimates", "est"], stdin=ESTIMATES_CSV)
        assert res.code == 2

    def test_nonpositive_se_rejected(self, invoke_cli):
        res = invoke_cli(
            ["cs-ranks", "--estimates", "est", "--se", "se"],
            stdin="est,se\n1.0,0.1\n2.0,0.0\n",
        )
        assert res.code == 3

    def test_indices_subset(self, invoke_cli):
        res = invoke_cli(
            [
                "cs-ranks",
                "--estimates",
                "est",
                "--se",
                "se",
                "--seed",
                "1",
                "--indices",
                "3,1",
            ],
            stdin=ESTIMATES_CSV,
        )
        body = parse_envelope(res.stdout)
        assert body["results"]["indices"] == [3, 1]
        assert body["results"]["rank"] == [1, 3]

    def test_indices_out_of_range(self, invoke_cli):
        res = invoke_cli(
            ["cs-ranks", "--estimates", "est", "--se", "se", "--indices", "4"],
            stdin=ESTIMATES_CSV,
        )
        assert res.code == 2

    def test_svg_chart(self, invoke_cli, tmp_path):
        chart = tmp_path / "chart.svg"
        res = invoke_cli(
            [
                "cs-ranks",
                "--estimates",
                "est",
                "--se",
                "se",
                "--seed",
                "2",
                "--svg",
                str(chart),
            ],
            stdin=ESTIMATES_CSV,
        )
        assert res.code == 0
        root = ET.fromstring(chart.read_text())
        rects = [
            el
            for el in root.iter()
            if el.tag.endswith("rect") and el.get("class") == "interval"
        ]
        points = [
            el
            for el in root.iter()
            if el.tag.endswith("circle") and el.get("class") == "point"
        ]
        assert len(rects) == 3
        assert len(points) == 3

    def test_csv_format_output(self, invoke_cli):
        res = invoke_cli(
            [
                "cs-ranks",
                "--estimates",
                "est",
                "--se",
                "se",
                "--seed",
                "3",
                "--format",
                "csv",
            ],
            stdin=ESTIMATES_CSV,
        )
        lines = res.stdout.splitlines()
        assert lines[0] == "index,label,L,rank,U"
        assert lines[1] == "1,1,3,3,3"


class TestTauCommands:
    def test_taubest_members(self, invoke_cli):
        res = invoke_cli(
            [
                "cs-taubest",
                "--estimates",
                "est",
                "--se",
                "se",
                "--tau",
                "1",
                "--seed",
                "11",
                "--label",
                "name",
            ],
            stdin=ESTIMATES_CSV,
        )
        body = parse_envelope(res.stdout)
        assert body["procedure"] == "cs-taubest"
        assert body["results"]["tau"] == 1
        assert body["results"]["members"] == [3]
        assert body["results"]["labels"] == ["c"]

    def test_tauworst_mirrors(self, invoke_cli):
        res = invoke_cli(
            [
                "cs-tauworst",
                "--estimates",
                "est",
                "--se",
                "se",
                "--tau",
                "1",
                "--seed",
                "11",
            ],
            stdin=ESTIMATES_CSV,
        )
        body = parse_envelope(res.stdout)
        assert body["results"]["members"] == [1]


class TestCsMultinom:
    def test_single_column_default(self, invoke_cli):
        res = invoke_cli(["cs-multinom"], stdin="count\n0\n100\n")
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert body["procedure"] == "cs-multinom"
        assert body["seed"] is None
        results = body["results"]
        assert results["method"] == "holm"
        assert results["L"] == [2, 1]
        assert results["U"] == [2, 1]

    def test_column_required_when_ambiguous(self, invoke_cli):
        res = invoke_cli(["cs-multinom"], stdin="a,b\n1,2\n3,4\n")
        assert res.code == 2

    def test_label_column_resolves_ambiguity(self, invoke_cli):
        res = invoke_cli(
            ["cs-multinom", "--label", "name"],
            stdin="name,count\nx,10\ny,20\n",
        )
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert body["results"]["labels"] == ["x", "y"]

    def test_bonferroni_choice_recorded(self, invoke_cli):
        res = invoke_cli(
            ["cs-multinom", "--multcorr", "bonferroni", "--simul"],
            stdin="count\n40\n30\n20\n10\n",
        )
        body = parse_envelope(res.stdout)
        assert body["results"]["method"] == "bonferroni"
        assert body["results"]["mode"] == "simultaneous"

    def test_fractional_counts_rejected(self, invoke_cli):
        res = invoke_cli(["cs-multinom"], stdin="count\n1.5\n2\n")
        assert res.code == 3
        assert "integer" in res.stderr

    def test_negative_counts_rejected(self, invoke_cli):
        res = invoke_cli(["cs-multinom"], stdin="count\n-1\n2\n")
        assert res.code == 3

    def test_all_zero_counts_rejected(self, invoke_cli):
        res = invoke_cli(["cs-multinom"], stdin="count\n0\n0\n")
        assert res.code == 3
        assert "zero" in res.stderr

    def test_single_category_rejected(self, invoke_cli):
        res = invoke_cli(["cs-multinom"], stdin="count\n5\n")
        assert res.code == 3


class TestRankReg:
    IDENT_CSV = "Y,X\n" + "".join(f"{v},{v}\n" for v in range(1, 13))

    def test_identity_fit(self, invoke_cli):
        res = invoke_cli(
            ["rank-reg", "--formula", "r(Y) ~ r(X)"], stdin=self.IDENT_CSV
        )
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert body["procedure"] == "rank-reg"
        results = body["results"]
        assert results["n"] == 12
        names = [c["name"] for c in results["coefficients"]]
        assert names == ["r(X)", "(Intercept)"]
        assert results["coefficients"][0]["estimate"] == pytest.approx(1.0, abs=1e-12)
        assert results["confint"][0]["lower"] <= 1.0 <= results["confint"][0]["upper"]
        assert len(results["vcov"]) == 2
        assert any("asymptotic" in w for w in body["warnings"])

    def test_grouped_six_coefficients(self, invoke_cli):
        rng = np.random.default_rng(0)
        lines = ["Y,X,W,G"]
        for i in range(40):
            lines.append(
                f"{rng.normal():.6f},{rng.normal():.6f},{rng.normal():.6f},"
                f"{'u' if i % 2 else 'v'}"
            )
        res = invoke_cli(
            ["rank-reg", "--formula", "r(Y) ~ (r(X) + W):G"],
            stdin="\n".join(lines) + "\n",
        )
        assert res.code == 0
        body = parse_envelope(res.stdout)
        assert len(body["results"]["coefficients"]) == 6

    def test_malformed_formula_caret(self, invoke_cli):
        res = invoke_cli(
            ["rank-reg", "--formula", "r(Y ~ X"], stdin=self.IDENT_CSV
        )
        assert res.code == 2
        assert "^" in res.stderr

    def test_formula_column_not_in_data(self, invoke_cli):
        res = invoke_cli(
            ["rank-reg", "--formula", "r(Y) ~ r(Z)"], stdin=self.IDENT_CSV
        )
        assert res.code == 2
        assert "Z" in res.stderr

    def test_missing_values_domain_error(self, invoke_cli):
        res = invoke_cli(
            ["rank-reg", "--formula", "r(Y) ~ r(X)"],
            stdin="Y,X\n1,2\nNA,3\n",
        )
        assert res.code == 3

    def test_collinear_exit_code(self, invoke_cli):
        csv = "Y,X,W\n" + "".join(f"{v},{v},{2 * v}\n" for v in range(1, 10))
        res = invoke_cli(["rank-reg", "--formula", "Y ~ X + W"], stdin=csv)
        assert res.code == 3

    def test_csv_format(self, invoke_cli):
        res = invoke_cli(
            ["rank-reg", "--formula", "r(Y) ~ r(X)", "--format", "csv"],
            stdin=self.IDENT_CSV,
        )
        lines = res.stdout.splitlines()
        assert lines[0] == "name,estimate,se,z,p,lower,upper"
        assert lines[1].startswith("r(X),")
        # structured warnings move to stderr in csv mode
        assert "asymptotic" in res.stderr


class TestMisc:
    def test_version_flag(self, invoke_cli):
        res = invoke_cli(["--version"])
        assert res.code == 0
        assert "rankinfer" in res.stdout

    def test_threads_env_does_not_change_bytes(self, invoke_cli, monkeypatch):
        args = [
            "cs-ranks",
            "--estimates",
            "est",
            "--se",
            "se",
            "--seed",
            "99",
            "--simul",
        ]
        monkeypatch.delenv("RANKINFER_THREADS", raising=False)
        serial = invoke_cli(args, stdin=ESTIMATES_CSV).stdout
        monkeypatch.setenv("RANKINFER_THREADS", "3")
        threaded = invoke_cli(args, stdin=ESTIMATES_CSV).stdout
        assert serial == threaded

    @pytest.mark.skipif(
        shutil.which("rankinfer") is None, reason="console script not installed"
    )
    def test_console_script_runs(self):
        proc = subprocess.run(
            ["rankinfer", "ranks", "--column", "math_score"],
            input=COUNTRY_CSV.encode(),
            capture_output=True,
            timeout=60,
        )
        assert proc.returncode == 0
        body = json.loads(proc.stdout)
        assert body["procedure"] == "ranks"
