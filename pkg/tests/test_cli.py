import csv
import json

import numpy as np
import pytest

from translimit.cli import main

ISO = """
[grid]
n_cells = 16
[scattering]
n_ordinates = 8
n_polar = 4
n_azimuth = 8
"""

LINEAR_HALF = """
[grid]
n_cells = 16
[scattering]
kernel = linear
g_factor = 0.5
n_ordinates = 8
n_polar = 4
n_azimuth = 8
"""

LINEAR_ONE = LINEAR_HALF.replace("g_factor = 0.5", "g_factor = 1.0")

SMOOTH_STUDY = """
[grid]
n_cells = 64
[coefficients.sigma]
kind = sinusoid
offset = 1.0
amplitude = 0.5
frequency = 1.0
[scattering]
n_ordinates = 8
[study]
eps = 0.5 0.25 0.125 0.0625
floor_cells = 32
"""


def write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestCertify:
    def test_isotropic_passes(self, tmp_path):
        cfg = write(tmp_path, ISO)
        assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 0
        payload = json.loads((tmp_path / "certification.json").read_text())
        assert abs(payload["c_K"] - 1.0) < 1e-10
        assert payload["all_passed"] is True
        assert set(payload["passed"]) == {
            "self_adjoint", "contraction", "null_space", "solvability",
        }
        assert abs(payload["sphere"]["c_K"] - 1.0) < 1e-10
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "certification.json" in manifest["outputs"]
        assert len(manifest["config_sha256"]) == 64

    def test_linear_half_passes_with_c_k_two(self, tmp_path):
        cfg = write(tmp_path, LINEAR_HALF)
        assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 0
        payload = json.loads((tmp_path / "certification.json").read_text())
        assert abs(payload["c_K"] - 2.0) < 1e-10

    def test_g_one_fails_with_exit_code_four(self, tmp_path):
        cfg = write(tmp_path, LINEAR_ONE)
        assert main(["certify", "--config", cfg, "--out", str(tmp_path)]) == 4
        payload = json.loads((tmp_path / "certification.json").read_text())
        assert payload["null_space_dim"] == 2
        assert payload["all_passed"] is False


class TestTensor:
    def test_piecewise_sigma_tensor(self, tmp_path):
        cfg = write(tmp_path, """
[grid]
n_cells = 16
[coefficients.sigma]
kind = piecewise
breakpoints = 0.5
values = 1.0 4.0
[scattering]
n_polar = 4
n_azimuth = 8
""")
        assert main(["tensor", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "tensor.csv")
        assert len(rows) == 16
        a11 = np.array([float(r["a11"]) for r in rows])
        np.testing.assert_allclose(a11[:8], 1.0 / 3.0, atol=1e-10)
        np.testing.assert_allclose(a11[8:], 1.0 / 12.0, atol=1e-10)
        summary = json.loads((tmp_path / "tensor_summary.json").read_text())
        assert summary["coercivity_lb"] > 0

    def test_certification_gate(self, tmp_path):
        cfg = write(tmp_path, LINEAR_ONE)
        assert main(["tensor", "--config", cfg, "--out", str(tmp_path)]) == 4


class TestSolve:
    def test_diffusion_cosh_reference(self, tmp_path):
        cfg = write(tmp_path, """
[grid]
n_cells = 256
[study]
reference = cosh
""")
        rc = main(["solve", "--config", cfg, "--mode", "diffusion",
                   "--out", str(tmp_path)])
        assert rc == 0
        ref = json.loads((tmp_path / "reference_error.json").read_text())
        assert ref["max_nodal_error"] < 1e-4
        rows = read_csv(tmp_path / "diffusion_solution.csv")
        assert len(rows) == 257
        assert float(rows[0]["u0"]) == 0.0 and float(rows[-1]["u0"]) == 0.0

    def test_transport_solution_dumps(self, tmp_path):
        cfg = write(tmp_path, ISO)
        rc = main(["solve", "--config", cfg, "--mode", "transport",
                   "--eps", "0.5", "--out", str(tmp_path)])
        assert rc == 0
        rows = read_csv(tmp_path / "transport_solution.csv")
        assert len(rows) == 16 * 8
        assert set(rows[0]) == {"x", "mu", "u"}
        avg = read_csv(tmp_path / "transport_average.csv")
        assert set(avg[0]) == {"x", "u_bar"}
        log = json.loads((tmp_path / "iteration_log.json").read_text())
        assert {"residuals", "spectral_radius_estimate", "iterations"} <= set(log)

    def test_transport_mms_table(self, tmp_path):
        cfg = write(tmp_path, """
[scattering]
n_ordinates = 8
[study]
mms = transport-trig
meshes = 32 64 128
""")
        rc = main(["solve", "--config", cfg, "--mode", "transport",
                   "--eps", "1.0", "--out", str(tmp_path)])
        assert rc == 0
        rows = read_csv(tmp_path / "mms_table.csv")
        assert len(rows) == 3
        assert float(rows[-1]["order"]) >= 1.9

    def test_diffusion_mms_table(self, tmp_path):
        cfg = write(tmp_path, """
[coefficients.sigma]
kind = sinusoid
offset = 1.0
amplitude = 0.5
[study]
mms = diffusion-sin
meshes = 32 64 128
""")
        rc = main(["solve", "--config", cfg, "--mode", "diffusion",
                   "--out", str(tmp_path)])
        assert rc == 0
        rows = read_csv(tmp_path / "mms_table.csv")
        assert float(rows[-1]["order"]) >= 1.9

    def test_missing_config_exits_two(self, tmp_path):
        rc = main(["solve", "--config", str(tmp_path / "nope.ini"),
                   "--mode", "transport", "--out", str(tmp_path)])
        assert rc == 2


class TestStudy:
    def test_smooth_study_outputs(self, tmp_path):
        cfg = write(tmp_path, SMOOTH_STUDY)
        assert main(["study", "--config", cfg, "--out", str(tmp_path)]) == 0
        rows = read_csv(tmp_path / "report.csv")
        assert len(rows) == 4
        assert set(rows[0]) == {"eps", "err_total", "err_fluct", "bdry",
                                "deriv", "remainder", "err_l1", "err_l4"}
        slopes = json.loads((tmp_path / "slopes.json").read_text())
        assert slopes["rate_asserted"] is True
        assert "err_total" in slopes["slopes"]
        assert (tmp_path / "plot_err_total.dat").exists()
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert "report.csv" in manifest["outputs"]

    def test_determinism_byte_identical(self, tmp_path):
        cfg = write(tmp_path, SMOOTH_STUDY)
        out1, out2 = tmp_path / "r1", tmp_path / "r2"
        assert main(["study", "--config", cfg, "--out", str(out1)]) == 0
        assert main(["study", "--config", cfg, "--out", str(out2)]) == 0
        assert (out1 / "report.csv").read_bytes() == (out2 / "report.csv").read_bytes()
        assert (out1 / "slopes.json").read_bytes() == (out2 / "slopes.json").read_bytes()

    def test_discontinuous_flagged(self, tmp_path):
        cfg = write(tmp_path, """
[coefficients.sigma]
kind = piecewise
breakpoints = 0.5
values = 1.0 4.0
[scattering]
n_ordinates = 8
[study]
eps = 0.5 0.25 0.125 0.0625
floor_cells = 32
""")
        assert main(["study", "--config", cfg, "--out", str(tmp_path)]) == 0
        slopes = json.loads((tmp_path / "slopes.json").read_text())
        assert slopes["rate_asserted"] is False
        assert any("rate not asserted" in n for n in slopes["notes"])

    def test_non_geometric_eps_exits_two(self, tmp_path):
        cfg = write(tmp_path, SMOOTH_STUDY.replace(
            "eps = 0.5 0.25 0.125 0.0625", "eps = 0.5 0.3 0.2 0.1"))
        assert main(["study", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_single_eps_exits_two(self, tmp_path):
        cfg = write(tmp_path, SMOOTH_STUDY.replace(
            "eps = 0.5 0.25 0.125 0.0625", "eps = 0.5"))
        assert main(["study", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_missing_eps_exits_two(self, tmp_path):
        cfg = write(tmp_path, ISO)
        assert main(["study", "--config", cfg, "--out", str(tmp_path)]) == 2

    def test_convergence_failure_exits_three_with_partial(self, tmp_path):
        cfg = write(tmp_path, SMOOTH_STUDY + """
[solver]
acceleration = none
max_iterations = 30
""")
        rc = main(["study", "--config", cfg, "--out", str(tmp_path)])
        assert rc == 3
        assert (tmp_path / "report.csv").exists()
