import csv
import io
import math

import numpy as np
import pytest

from besselsquare.cli_experiments import (
    EXIT_ACCEPTANCE,
    EXIT_CONFIG,
    EXIT_OK,
    ConfigError,
    ScanConfig,
    classify,
    cosine_average,
    fit_slope,
    identity_suite,
    locate_cosine_threshold,
    main,
    region_scan,
    threshold_alpha,
    write_csv,
)


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def parse(text):
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


class TestThreshold:
    def test_examples(self):
        assert threshold_alpha(2, 0, "discrete") == pytest.approx(0.5, abs=1e-15)
        assert threshold_alpha(4 / 3, -0.75, "discrete") == pytest.approx(1.0, abs=1e-15)
        assert threshold_alpha(3, 0, "hankel") == pytest.approx(0.5, abs=1e-15)

    def test_regime_error(self):
        with pytest.raises(ConfigError):
            threshold_alpha(1.2, -0.75)
        with pytest.raises(ConfigError):
            threshold_alpha(5.0, -0.75)
        with pytest.raises(ConfigError):
            threshold_alpha(1.0, 0.0)
        with pytest.raises(ConfigError):
            threshold_alpha(2.0, -1.0)

    @pytest.mark.parametrize("nu", [-0.9, -0.75, -0.6])
    def test_branches_meet_at_two(self, nu):
        lo, hi = threshold_alpha(2 - 1e-9, nu), threshold_alpha(2 + 1e-9, nu)
        assert lo == pytest.approx(hi, abs=1e-8)
        assert threshold_alpha(2, nu) == pytest.approx((2 * nu + 2) / (4 * nu + 4), abs=1e-15)

    @pytest.mark.parametrize("nu", [-0.5, 0.0, 2.0])
    def test_half_at_two(self, nu):
        assert threshold_alpha(2, nu) == 0.5
        ps = np.linspace(1.05, 8, 7000)
        a = np.array([threshold_alpha(p, nu) for p in ps])
        # steps of 1e-3 in p move the threshold by at most about 1e-3
        assert np.max(np.abs(np.diff(a))) < 1e-3 and a.min() >= 0.5


class TestVerdicts:
    def test_fit_slope(self):
        assert fit_slope([10, 20, 40], [3 * 10**0.3, 3 * 20**0.3, 3 * 40**0.3]) == pytest.approx(0.3)

    def test_classify(self):
        assert classify([1, 2, 4], [1, 1.2, 1.44])[1] == "diverging"
        assert classify([1, 2, 4], [1.0, 1.0, 1.0])[1] == "bounded"
        assert classify([1, 2, 4], [1.0, 0.97, 1.03])[1] == "inconclusive"
        assert classify([1, 2, 4], [1.0, 1.03, 1.0])[1] == "bounded"

    def test_scan_config_errors(self):
        with pytest.raises(ConfigError):
            ScanConfig(nu=0.0, p_grid=(2.0,), alpha_grid=(), levels=(8, 16, 32))
        with pytest.raises(ConfigError):
            ScanConfig(nu=0.0, p_grid=(2.0,), alpha_grid=(0.5,), levels=(8, 16, 32))
        with pytest.raises(ConfigError):
            ScanConfig(nu=0.0, p_grid=(2.0,), alpha_grid=(1.0,), levels=(8, 16))
        with pytest.raises(ConfigError):
            ScanConfig(nu=-1.0, p_grid=(2.0,), alpha_grid=(1.0,), levels=(8, 16, 32))

    def test_plancherel_cell_is_bounded(self):
        res = region_scan(ScanConfig(nu=0.0, p_grid=(2.0,), alpha_grid=(1.0,), levels=(8, 16, 32)))
        assert {r.verdict for r in res.rows} == {"bounded"}
        assert all(r.ratio == pytest.approx(1.0, rel=1e-6) for r in res.rows)

    def test_psi_cell_diverges(self):
        cfg = ScanConfig(nu=0.0, p_grid=(1.25,), alpha_grid=(0.6,), levels=(50.0, 100.0, 200.0),
                         side="hankel")
        res = region_scan(cfg)
        assert {r.verdict for r in res.rows} == {"diverging"}
        assert res.rows[0].alpha_crit == pytest.approx(0.8)

    def test_cosine_average(self):
        # int_{1/2}^1 cos^2(x t - b) dt = 1/4 + (sin(2x - 2b) - sin(x - 2b)) / (4x)
        nu, alpha, x = 0.0, 0.9, 7.3
        b = 0.5 * math.pi * (nu + 0.5 + alpha)
        ref = 0.25 + (math.sin(2 * x - 2 * b) - math.sin(x - 2 * b)) / (4 * x)
        assert cosine_average(x, nu, alpha)[0] == pytest.approx(ref, abs=1e-14)
        x0, m = locate_cosine_threshold(nu, alpha)
        assert m >= 0.125 - 1e-9
        assert cosine_average(x0, nu, alpha)[0] == pytest.approx(0.125, abs=1e-12)


class TestOutput:
    def test_csv_header_and_floats(self):
        buf = io.StringIO()
        write_csv([{"a": 0.1, "b": 3}], ("a", "b"), buf, config_hash="abc")
        lines = buf.getvalue().splitlines()
        assert lines[0].startswith("# besselsquare ") and lines[0].endswith(" abc")
        assert lines[1:] == ["a,b", "0.1,3"]

    def test_zeros_command(self, capsys):
        code, out, _ = run(["zeros", "--nu", "0.5", "--truncation", "5"], capsys)
        assert code == EXIT_OK
        rows = parse(out)
        assert [int(r["j"]) for r in rows] == [1, 2, 3, 4, 5]
        for r in rows:
            assert float(r["s"]) == pytest.approx(int(r["j"]) * math.pi, abs=1e-13)
            assert float(r["d"]) == pytest.approx(math.sqrt(math.pi), abs=1e-13)

    def test_config_file(self, tmp_path, capsys):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("# zeros of order -1/2\nnu = -0.5\ntruncation = 3\n")
        code, out, _ = run(["zeros", "--config", str(cfg)], capsys)
        rows = parse(out)
        assert code == EXIT_OK and len(rows) == 3
        assert float(rows[0]["s"]) == pytest.approx(math.pi / 2, abs=1e-13)
        # flags override the file
        code, out, _ = run(["zeros", "--config", str(cfg), "--truncation", "2"], capsys)
        assert len(parse(out)) == 2

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "z.csv"
        code, out, _ = run(["zeros", "--truncation", "2", "--out", str(path)], capsys)
        assert code == EXIT_OK and out == ""
        assert len(parse(path.read_text())) == 2

    def test_svg(self, tmp_path, capsys):
        path = tmp_path / "phase.svg"
        code, _, _ = run(["region-scan", "--nu", "0", "--p", "2", "--alpha", "1",
                          "--truncation", "8,16,32", "--format", "svg", "--out", str(path)], capsys)
        assert code == EXIT_OK
        assert path.read_text().lstrip().startswith("<?xml")

    def test_gsquare(self, capsys):
        code, out, _ = run(["gsquare", "--nu", "0", "--truncation", "16", "--function", "bump"],
                           capsys)
        rows = parse(out)
        assert code == EXIT_OK and rows and all(float(r["G"]) >= 0 for r in rows)


class TestExitCodes:
    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["zeros", "--no-such-flag"])
        assert exc.value.code == EXIT_CONFIG

    def test_bad_order(self, capsys):
        code, _, err = run(["zeros", "--nu=-1"], capsys)
        assert code == EXIT_CONFIG and "config error" in err

    def test_empty_alpha_grid(self, capsys):
        code, _, _ = run(["region-scan", "--alpha", "", "--truncation", "8,16,32"], capsys)
        assert code == EXIT_CONFIG

    def test_bad_number(self, capsys):
        code, _, _ = run(["region-scan", "--p", "two"], capsys)
        assert code == EXIT_CONFIG

    def test_svg_needs_region_scan(self, capsys):
        code, _, _ = run(["zeros", "--format", "svg"], capsys)
        assert code == EXIT_CONFIG

    def test_unknown_identity(self, capsys):
        code, _, _ = run(["identity-suite", "--only", "nonsense"], capsys)
        assert code == EXIT_CONFIG

    def test_identity_suite_malformed_nu(self):
        with pytest.raises(ConfigError):
            identity_suite([-1.5])

    def test_acceptance_failure(self, capsys):
        # the domination inequality fails for the alternating multiplier
        code, out, _ = run(["identity-suite", "--only", "domination", "--nu", "0"], capsys)
        assert code == EXIT_ACCEPTANCE
        assert [r["status"] for r in parse(out)] == ["fail"]

    def test_single_identity_row(self, capsys):
        code, out, _ = run(["identity-suite", "--only", "zeros", "--nu=-0.5,0.5"], capsys)
        rows = parse(out)
        assert code == EXIT_OK
        assert [(r["check"], float(r["nu"]), r["status"]) for r in rows] == [
            ("zeros", -0.5, "pass"), ("zeros", 0.5, "pass")]
