import hashlib
import textwrap

import numpy as np
import pytest

from ersim.cli import EXIT_CONFIG, EXIT_IO, EXIT_NOT_CONVERGED, EXIT_OK, main
from ersim.reporting import (
    read_fit_csv,
    write_decay_histogram_csv,
    write_spectrum_csv,
    _read_table,
)
from ersim.records import DecayHistogram, Spectrum
from ersim.fitting import gaussian_peak


def doc(text):
    return textwrap.dedent(text).strip() + "\n"


LIFETIME_CAVITY = doc("""
    [emitter]
    nu_ion_thz = 195.6
    gamma0_per_s = 892.857142857143
    p_max = 0.8
    [cavity]
    nu_cav_thz = 195.6
    q_factor = 41400
    p_peak = 460
    [sequence]
    t_pulse_us = 1.0
    t_coll_us = 20
    t_rep_us = 60
    n_shots = 40000
    [seed]
    master_seed = 21
""")

LIFETIME_REFERENCE = doc("""
    [emitter]
    nu_ion_thz = 195.6
    gamma0_per_s = 89.2857142857143
    p_max = 0.8
    [cavity]
    nu_cav_thz = 195.6
    q_factor = 41400
    p_peak = 9
    [sequence]
    t_pulse_us = 1.0
    t_coll_us = 6000
    t_rep_us = 8000
    n_shots = 40000
    [seed]
    master_seed = 22
""")

G2_CONFIG = doc("""
    [emitter]
    p_max = 0.4
    [sequence]
    n_shots = 50000
    [seed]
    master_seed = 5
""")


def sha(path):
    return hashlib.sha256(path.read_bytes()).hexdigest()


class TestSimulate:
    def test_same_seed_same_bytes(self, tmp_path):
        cfg = tmp_path / "g2.ini"
        cfg.write_text(G2_CONFIG)
        assert main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "a")]) == EXIT_OK
        assert main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "b")]) == EXIT_OK
        assert sha(tmp_path / "a" / "clicks.ertt") == sha(tmp_path / "b" / "clicks.ertt")
        assert sha(tmp_path / "a" / "run_config.ini") == sha(tmp_path / "b" / "run_config.ini")

    def test_worker_count_does_not_change_bytes(self, tmp_path):
        cfg = tmp_path / "g2.ini"
        cfg.write_text(G2_CONFIG)
        main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "w1"), "--workers", "1"])
        main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "w4"), "--workers", "4"])
        assert sha(tmp_path / "w1" / "clicks.ertt") == sha(tmp_path / "w4" / "clicks.ertt")

    def test_seed_override_changes_stream(self, tmp_path):
        cfg = tmp_path / "g2.ini"
        cfg.write_text(G2_CONFIG)
        main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "a")])
        main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "c"), "--seed", "99"])
        assert sha(tmp_path / "a" / "clicks.ertt") != sha(tmp_path / "c" / "clicks.ertt")
        assert "master_seed = 99" in (tmp_path / "c" / "run_config.ini").read_text()

    def test_ple_requires_grid(self, tmp_path):
        cfg = tmp_path / "single.ini"
        cfg.write_text(G2_CONFIG)
        assert main(["simulate", "ple", "--config", str(cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG

    def test_ple_writes_scan_files(self, tmp_path):
        cfg = tmp_path / "ple.ini"
        cfg.write_text(doc("""
            [emitter]
            p_max = 0.8
            gamma_h_mhz = 50
            [sequence]
            n_shots = 300
            [scan]
            center_thz = 195.6
            span_mhz = 250
            points = 21
            repeats = 2
        """))
        out = tmp_path / "scan"
        assert main(["simulate", "ple", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
        assert (out / "scan_000.csv").exists() and (out / "scan_001.csv").exists()

    def test_missing_config_is_io_error(self, tmp_path):
        code = main(["simulate", "g2", "--config", str(tmp_path / "nope.ini"), "--out", str(tmp_path / "o")])
        assert code == EXIT_IO

    def test_invalid_config_is_config_error(self, tmp_path):
        cfg = tmp_path / "bad.ini"
        cfg.write_text("[sequence]\nt_pulse_us = 70\nt_rep_us = 60\n")
        code = main(["simulate", "g2", "--config", str(cfg), "--out", str(tmp_path / "o")])
        assert code == EXIT_CONFIG


class TestFit:
    def test_gaussian_fit_roundtrip(self, tmp_path):
        x = 195.6e12 + np.linspace(-400e6, 400e6, 81)
        y = gaussian_peak(x, (195.6e12, 173.6e6, 200.0, 1.0))
        write_spectrum_csv(Spectrum(x, y, label="line"), tmp_path / "spec.csv")
        out = tmp_path / "fit.csv"
        assert main(["fit", "gaussian", "--in", str(tmp_path / "spec.csv"), "--out", str(out)]) == EXIT_OK
        fit = read_fit_csv(out)
        assert fit.converged
        assert fit.value("fwhm") == pytest.approx(173.6e6, rel=1e-3)

    def test_flat_histogram_exits_nonconverged(self, tmp_path):
        edges = np.linspace(0.0, 20e-6, 33)
        hist = DecayHistogram(edges, np.full(32, 4.0), total_shots=10)
        write_decay_histogram_csv(hist, tmp_path / "h.csv")
        code = main(["fit", "exponential", "--in", str(tmp_path / "h.csv"), "--out", str(tmp_path / "f.csv")])
        assert code == EXIT_NOT_CONVERGED
        assert read_fit_csv(tmp_path / "f.csv").status == "degenerate"

    def test_missing_input_is_io_error(self, tmp_path):
        code = main(["fit", "gaussian", "--in", str(tmp_path / "no.csv"), "--out", str(tmp_path / "f.csv")])
        assert code == EXIT_IO


class TestG2Command:
    def make_stream(self, tmp_path):
        cfg = tmp_path / "g2.ini"
        cfg.write_text(G2_CONFIG)
        out = tmp_path / "run"
        main(["simulate", "g2", "--config", str(cfg), "--out", str(out)])
        return out / "clicks.ertt"

    def test_rho_one_corrected_equals_raw(self, tmp_path):
        stream = self.make_stream(tmp_path)
        out = tmp_path / "corr.csv"
        assert main(["g2", "--in", str(stream), "--max-offset", "10", "--rho", "1.0", "--out", str(out)]) == EXIT_OK
        _, header, rows = _read_table(out)
        g2_col = header.index("g2")
        corrected_col = header.index("g2_corrected")
        for row in rows:
            assert row[corrected_col] == row[g2_col]

    def test_correlation_table_contents(self, tmp_path):
        stream = self.make_stream(tmp_path)
        out = tmp_path / "corr.csv"
        main(["g2", "--in", str(stream), "--max-offset", "5", "--rho", "0.9", "--out", str(out)])
        _, header, rows = _read_table(out)
        offsets = [int(r[header.index("offset_shots")]) for r in rows]
        assert offsets == list(range(-5, 6))
        zero = rows[5]
        assert float(zero[header.index("g2")]) < 0.05

    def test_bad_stream_is_io_error(self, tmp_path):
        bad = tmp_path / "bad.ertt"
        bad.write_bytes(b"XXXX" + bytes(40))
        code = main(["g2", "--in", str(bad), "--max-offset", "5", "--out", str(tmp_path / "c.csv")])
        assert code == EXIT_IO


class TestReport:
    def test_full_pipeline_reproduces_purcell_factor(self, tmp_path):
        work = tmp_path / "work"
        work.mkdir()
        for name, text in (("cavity", LIFETIME_CAVITY), ("reference", LIFETIME_REFERENCE)):
            cfg = tmp_path / f"{name}.ini"
            cfg.write_text(text)
            out = tmp_path / name
            assert main(["simulate", "lifetime", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
            assert main([
                "fit", "exponential",
                "--in", str(out / "decay_histogram.csv"),
                "--out", str(work / f"fit_exponential_{name}.csv"),
            ]) == EXIT_OK
        report_dir = tmp_path / "report"
        assert main(["report", "--in", str(work), "--out", str(report_dir)]) == EXIT_OK
        summary = dict(
            line.split(" = ")
            for line in (report_dir / "summary.txt").read_text().splitlines()
        )
        p = float(summary["purcell_factor"])
        assert p == pytest.approx(460.0, rel=0.10)
        assert "radiative_linewidth_khz" in summary
        assert float(summary["radiative_linewidth_khz"]) == pytest.approx(65.5, rel=0.10)

    def test_report_deterministic(self, tmp_path):
        work = tmp_path / "work"
        work.mkdir()
        x = 195.6e12 + np.linspace(-400e6, 400e6, 81)
        for i, off in enumerate((0.0, 60e6)):
            y = gaussian_peak(x, (195.6e12 + off, 173.6e6, 200.0, 1.0))
            write_spectrum_csv(Spectrum(x, y, label=f"scan {i}"), work / f"scan_{i:03d}.csv")
        a = tmp_path / "ra"
        b = tmp_path / "rb"
        assert main(["report", "--in", str(work), "--out", str(a)]) == EXIT_OK
        assert main(["report", "--in", str(work), "--out", str(b)]) == EXIT_OK
        assert sha(a / "summary.txt") == sha(b / "summary.txt")
        assert sha(a / "diffusion_map.csv") == sha(b / "diffusion_map.csv")
        summary = (a / "summary.txt").read_text()
        assert "time_averaged_fwhm_mhz" in summary

    def test_missing_directory_is_io_error(self, tmp_path):
        assert main(["report", "--in", str(tmp_path / "none"), "--out", str(tmp_path / "o")]) == EXIT_IO
