"""End-to-end tests of the command-line interface.

Every command is driven through click's test runner. Exit codes follow
the documented convention: 0 success, 1 bad input or computation error,
2 failed check or verification, 3 inconclusive-only check runs.
"""

import json
import math

import pytest
from click.testing import CliRunner

from displace.cli import main
from displace.displacement import make_builtin, spec_to_dict
from displace.serialize import dumps

E = math.e
E_MINUS_EINV = 2.3504023872876028


@pytest.fixture()
def runner():
    return CliRunner()


def invoke(runner, *args, **kwargs):
    return runner.invoke(main, list(args), **kwargs)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def test_check_d2_on_exponential_passes(runner):
    result = invoke(runner, "check", "--builtin", "exponential",
                    "--which", "d2")
    assert result.exit_code == 0
    report = json.loads(result.stdout)
    assert report["hypothesis"] == "D2-positive"
    assert report["verdict"] == "pass"
    assert report["stats"]["r_hat"] == 1.0


def test_check_default_battery_exponential(runner):
    # the identity rescaling is not subadditive for this space, so the
    # full battery honestly reports one failing hypothesis
    result = invoke(runner, "check", "--builtin", "exponential")
    assert result.exit_code == 2
    lines = result.stdout.strip().splitlines()
    assert len(lines) == 6
    verdicts = {json.loads(line)["hypothesis"]: json.loads(line)["verdict"]
                for line in lines}
    assert verdicts["H2'"] == "fail"
    assert all(v == "pass" for h, v in verdicts.items() if h != "H2'")


def test_check_default_battery_identity_gauge_passes(runner):
    result = invoke(runner, "check", "--builtin", "identity_gauge")
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    # stieltjes specs run five hypothesis checks
    assert len(lines) == 5
    assert all(json.loads(line)["verdict"] == "pass" for line in lines)


def test_check_santiago_subadditivity_fails_honestly(runner):
    # the travel-time matrix contains one violating triple (10 > 4 + 5),
    # so this check exits 2 rather than pretending to pass
    result = invoke(runner, "check", "--builtin", "santiago_graph",
                    "--which", "h2prime")
    assert result.exit_code == 2
    report = json.loads(result.stdout)
    (witness,) = report["witnesses"]
    assert witness["psi_xz"] == 10.0
    assert witness["psi_xy"] + witness["psi_yz"] == 9.0


def test_check_santiago_sqrt_phi_passes(runner):
    result = invoke(runner, "check", "--builtin", "santiago_graph",
                    "--which", "h2prime", "--phi", "sqrt(r)")
    assert result.exit_code == 0


def test_check_inconclusive_only_exits_three(runner):
    result = invoke(runner, "check", "--builtin", "identity_gauge",
                    "--which", "h2prime", "--phi", "r + 1")
    assert result.exit_code == 3
    assert json.loads(result.stdout)["verdict"] == "inconclusive"


def test_check_unknown_which_is_bad_input(runner):
    result = invoke(runner, "check", "--builtin", "exponential",
                    "--which", "h9")
    assert result.exit_code == 1
    assert "error:" in result.stderr


def test_check_unknown_builtin_is_bad_input(runner):
    result = invoke(runner, "check", "--builtin", "nonexistent")
    assert result.exit_code == 1


def test_check_requires_exactly_one_source(runner, tmp_path):
    assert invoke(runner, "check").exit_code == 1
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(dumps(spec_to_dict(make_builtin("exponential"))))
    result = invoke(runner, "check", "--spec", str(spec_file),
                    "--builtin", "exponential")
    assert result.exit_code == 1


def test_check_loads_spec_from_json_file(runner, tmp_path):
    spec_file = tmp_path / "spec.json"
    spec_file.write_text(dumps(spec_to_dict(make_builtin("exponential"))))
    result = invoke(runner, "check", "--spec", str(spec_file), "--which", "h1")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["verdict"] == "pass"


def test_check_output_is_deterministic(runner):
    args = ("check", "--builtin", "exponential", "--which", "h1,h3,d2",
            "--seed", "7")
    first = invoke(runner, *args)
    second = invoke(runner, *args)
    assert first.exit_code == second.exit_code == 0
    assert first.stdout == second.stdout


def test_check_writes_reports_to_file(runner, tmp_path):
    out = tmp_path / "reports.jsonl"
    result = invoke(runner, "check", "--builtin", "exponential",
                    "--which", "h1,d2", "--out", str(out))
    assert result.exit_code == 0
    assert result.stdout == ""
    lines = out.read_text().strip().splitlines()
    assert [json.loads(l)["hypothesis"] for l in lines] == ["H1", "D2-positive"]


# ---------------------------------------------------------------------------
# gauge
# ---------------------------------------------------------------------------

def test_gauge_extraction_table_matches_quadratic(runner, tmp_path):
    table = tmp_path / "table.csv"
    result = invoke(runner, "gauge", "--builtin", "exponential",
                    "--table", str(table))
    assert result.exit_code == 0
    lines = table.read_text().strip().splitlines()
    assert lines[0] == "t,g"
    assert len(lines) == 102
    for line in lines[1:]:
        t_str, g_str = line.split(",")
        t, g = float(t_str), float(g_str)
        assert abs(g - (t * t + t)) <= 1e-6


def test_gauge_identity_csv_to_stdout(runner):
    result = invoke(runner, "gauge", "--gauge", "identity",
                    "--format", "csv", "--grid", "5")
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "t,g"
    assert lines[1] == "0,0"
    assert lines[-1] == "1,1"


def test_gauge_json_round_trips_through_a_file(runner, tmp_path):
    gauge_file = tmp_path / "gauge.json"
    result = invoke(runner, "gauge", "--builtin", "exponential",
                    "--out", str(gauge_file))
    assert result.exit_code == 0
    payload = json.loads(gauge_file.read_text())
    assert payload["domain"] == [0.0, 1.0]
    assert payload["density"] is not None
    # reload through --gauge and sample
    result = invoke(runner, "gauge", "--gauge", str(gauge_file),
                    "--format", "csv", "--grid", "3")
    assert result.exit_code == 0
    mid = result.stdout.strip().splitlines()[2]
    t, g = (float(v) for v in mid.split(","))
    assert t == 0.5
    assert abs(g - 0.75) <= 1e-9


def test_gauge_extract_ref_and_json_default(runner):
    result = invoke(runner, "gauge", "--gauge", "extract:exponential")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["domain"] == [0.0, 1.0]


def test_gauge_missing_file_is_bad_input(runner, tmp_path):
    result = invoke(runner, "gauge", "--gauge", str(tmp_path / "none.json"))
    assert result.exit_code == 1
    assert "error:" in result.stderr


def test_gauge_extract_from_non_smooth_fails(runner):
    result = invoke(runner, "gauge", "--gauge", "extract:santiago_graph")
    assert result.exit_code == 1


# ---------------------------------------------------------------------------
# ball, derive, integrate, path-integrate
# ---------------------------------------------------------------------------

def test_ball_identity_gauge(runner):
    result = invoke(runner, "ball", "--builtin", "identity_gauge",
                    "--x", "0.5", "--r", "0.2")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert abs(payload["lo"] - 0.3) <= 1e-9
    assert abs(payload["hi"] - 0.7) <= 1e-9


def test_ball_rejects_graph_spec(runner):
    result = invoke(runner, "ball", "--builtin", "santiago_graph",
                    "--x", "0", "--r", "1")
    assert result.exit_code == 1


def test_derive_square_against_identity(runner):
    result = invoke(runner, "derive", "--f", "t^2", "--gauge", "identity",
                    "--x", "0.5")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["point_class"] == "continuity"
    assert abs(payload["value"] - 1.0) <= 1e-8


def test_derive_kink_reports_computation_error(runner):
    result = invoke(runner, "derive", "--f", "abs(t - 0.5)",
                    "--gauge", "identity", "--x", "0.5")
    assert result.exit_code == 1
    assert "error:" in result.stderr


def test_integrate_identity_and_custom_upper(runner):
    result = invoke(runner, "integrate", "--f", "t", "--gauge", "identity")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["upper"] == 1.0
    assert abs(payload["value"] - 0.5) <= 1e-10
    result = invoke(runner, "integrate", "--f", "t", "--gauge", "identity",
                    "--upper", "0.5")
    assert abs(json.loads(result.stdout)["value"] - 0.125) <= 1e-10


def test_path_integrate_fixed_base_point(runner):
    result = invoke(runner, "path-integrate", "--f", "1", "--alpha", "0",
                    "--builtin", "exponential")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert abs(payload["value"] - E_MINUS_EINV) <= 1e-9


def test_path_integrate_requires_smooth(runner):
    result = invoke(runner, "path-integrate", "--f", "1", "--alpha", "t",
                    "--builtin", "roundabout")
    assert result.exit_code == 1


# ---------------------------------------------------------------------------
# reconstruction checks
# ---------------------------------------------------------------------------

def test_ftc_identity_integrand_passes(runner):
    result = invoke(runner, "ftc", "--f", "t", "--gauge",
                    "extract:exponential", "--grid", "101", "--tol", "1e-4")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["max_error"] <= 1e-4
    assert payload["violations"] == []


def test_ftc_tight_tolerance_fails(runner):
    result = invoke(runner, "ftc", "--f", "t", "--gauge",
                    "extract:exponential", "--tol", "1e-14")
    assert result.exit_code == 2


def test_ftc2_gauge_function_passes(runner):
    result = invoke(runner, "ftc2", "--f", "t", "--gauge", "identity",
                    "--tol", "1e-6")
    assert result.exit_code == 0
    assert json.loads(result.stdout)["max_error"] <= 1e-6


def test_ftc2_reports_deviation_beyond_tolerance(runner):
    result = invoke(runner, "ftc2", "--f", "t^2", "--gauge", "identity",
                    "--tol", "1e-6")
    assert result.exit_code == 2


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def test_solve_ivp_csv_reaches_e(runner):
    result = invoke(runner, "solve-ivp", "--rhs", "u", "--gauge", "identity",
                    "--u0", "1", "--step", "1e-4")
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "t,u"
    t_final, u_final = (float(v) for v in lines[-1].split(","))
    assert t_final == 1.0
    assert abs(u_final - E) <= 1e-3


def test_solve_ivp_json_with_verification(runner):
    result = invoke(runner, "solve-ivp", "--rhs", "u", "--gauge", "identity",
                    "--u0", "1", "--step", "1e-4", "--format", "json",
                    "--verify-tol", "1e-3")
    assert result.exit_code == 0
    payload = json.loads(result.stdout)
    assert payload["method"] == "g-euler"
    assert payload["residual"]["max_residual"] <= 1e-3


def test_solve_ivp_verification_failure_exits_two(runner):
    result = invoke(runner, "solve-ivp", "--rhs", "u", "--gauge", "identity",
                    "--u0", "1", "--step", "1e-2", "--verify-tol", "1e-9")
    assert result.exit_code == 2
    assert "max_residual" in result.stderr


def test_solve_ivp_bad_expression_is_bad_input(runner):
    result = invoke(runner, "solve-ivp", "--rhs", "q + 1", "--gauge",
                    "identity", "--u0", "1", "--step", "1e-2")
    assert result.exit_code == 1


def test_solve_surface_parabola(runner):
    result = invoke(runner, "solve-surface", "--h", "1", "--gauge",
                    "identity", "--C", "0", "--step", "1e-3")
    assert result.exit_code == 0
    lines = result.stdout.strip().splitlines()
    assert lines[0] == "t,u"
    first_t, first_u = (float(v) for v in lines[1].split(","))
    last_t, last_u = (float(v) for v in lines[-1].split(","))
    assert (first_t, last_t) == (0.0, 1.0)
    assert abs(first_u - 0.5) <= 1e-6
    assert last_u == 0.0


def test_solve_surface_terminal_alias(runner):
    with_alias = invoke(runner, "solve-surface", "--h", "1", "--gauge",
                        "identity", "--C", "0.25", "--step", "1e-2")
    with_name = invoke(runner, "solve-surface", "--h", "1", "--gauge",
                       "identity", "--terminal", "0.25", "--step", "1e-2")
    assert with_alias.exit_code == with_name.exit_code == 0
    assert with_alias.stdout == with_name.stdout


def test_help_exits_zero(runner):
    assert invoke(runner, "--help").exit_code == 0
    assert invoke(runner, "check", "--help").exit_code == 0
