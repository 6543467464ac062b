"""CLI behavior: outputs, determinism, exit codes, manifests."""
import json

from egqft.cli import run

SHORT_EPS_NOTE = "CLI demos use the full default schedule; tests keep commands light."


def _run(capsys, argv):
    code = run(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def test_classify_text(capsys):
    code, out, err = _run(capsys, ["classify", "--model", "scalar_model", "--c", "1"])
    assert code == 0
    assert out.splitlines()[0] == "renormalizable; wAL-eligible"


def test_classify_json(capsys):
    code, out, _ = _run(
        capsys, ["classify", "--model", "scalar_model", "--format", "json"]
    )
    assert code == 0
    payload = json.loads(out)
    assert payload["renormalizability"] == "renormalizable"
    assert payload["wal_eligible"] is True


def test_subpolys_row_counts(capsys):
    code, out, _ = _run(capsys, ["subpolys", "--model", "spinor_qed_massive"])
    assert code == 0
    assert len(out.strip().splitlines()) == 1 + 8  # header + rows
    code, out, _ = _run(capsys, ["subpolys", "--model", "scalar_model"])
    assert len(out.strip().splitlines()) == 1 + 6


def test_omega_output(capsys):
    code, out, _ = _run(
        capsys, ["omega", "--model", "scalar_model", "--ext", "phi=2,psi=0"]
    )
    assert code == 0 and out.strip() == "2"
    code, out, _ = _run(
        capsys,
        ["omega", "--model", "spinor_qed_massive", "--ext", "psi_1=1", "--format", "json"],
    )
    assert code == 0
    assert json.loads(out)["vanishing_sector"] is True


def test_wick_stream_deterministic(capsys):
    argv = ["wick", "--model", "scalar_model", "--args", "L,L"]
    code1, out1, _ = _run(capsys, argv)
    code2, out2, _ = _run(capsys, argv)
    assert code1 == code2 == 0
    assert out1 == out2
    lines = out1.strip().splitlines()
    assert len(lines) == 36
    for line in lines:
        json.loads(line)


def test_pairings_stream(capsys):
    code, out, _ = _run(
        capsys,
        ["pairings", "--model", "scalar_model", "--left", "psi^2", "--right", "psi^2", "--full"],
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert len(lines) == 2
    rec = json.loads(lines[0])
    assert rec["classification"] == "massive"


def test_selfenergy_csv(capsys):
    code, out, _ = _run(
        capsys,
        ["selfenergy", "--model", "scalar_model", "--q2grid", "0:2:3", "--nsub", "central"],
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "q2,re_sigma,im_sigma"
    assert len(lines) == 4
    first = lines[1].split(",")
    assert float(first[1]) == 0.0  # Sigma(0) = 0 after central normalization


def test_manifest_written(tmp_path, capsys):
    man = tmp_path / "m.json"
    code, _, _ = _run(
        capsys,
        ["classify", "--model", "scalar_model", "--manifest", str(man)],
    )
    assert code == 0
    payload = json.loads(man.read_text())
    assert payload["subcommand"] == "classify"
    assert payload["tool_version"]
    assert payload["model_hash"]
    assert payload["wall_time_s"] >= 0


def test_manifest_equality_modulo_walltime(tmp_path, capsys):
    m1, m2 = tmp_path / "1.json", tmp_path / "2.json"
    for m in (m1, m2):
        _run(capsys, ["classify", "--model", "scalar_model", "--manifest", str(m)])
    p1 = json.loads(m1.read_text())
    p2 = json.loads(m2.read_text())
    p1.pop("wall_time_s")
    p2.pop("wall_time_s")
    assert p1 == p2


def test_exit_code_domain_error(capsys):
    code, _, err = _run(capsys, ["omega", "--model", "scalar_model", "--ext", "zz=1"])
    assert code == 1
    assert "unknown field" in err


def test_exit_code_eligibility_error(capsys):
    tmp = "/tmp/egqft_phi3.model"
    with open(tmp, "w") as fh:
        fh.write("[fields]\nphi scalar 0.0 0 0\n[vertices]\ng = 1 * phi^3\n[options]\nc = 1\n")
    code, _, err = _run(capsys, ["omega", "--model", tmp, "--ext", "phi=2"])
    assert code == 1
    assert "eligib" in err


def test_exit_code_usage(capsys):
    assert run(["nonsense"]) == 2
    assert run(["classify"]) == 2  # missing --model


def test_model_file_loading(tmp_path, capsys):
    path = tmp_path / "toy.model"
    path.write_text(
        "[fields]\nphi scalar 0.0 0 0\npsi scalar 1.0 0 0\n"
        "[vertices]\ne = 1/2 * phi*psi^2\n[options]\nc = 1\n"
    )
    code, out, _ = _run(capsys, ["classify", "--model", str(path)])
    assert code == 0 and out.startswith("renormalizable")


def test_sdestimate(capsys):
    code, out, _ = _run(capsys, ["sdestimate", "--target", "delta", "--dim", "4", "--format", "json"])
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["estimate"] - 4.0) < 0.05


def test_adiabatic_cli_json(tmp_path, capsys):
    out = tmp_path / "report.json"
    code, _, _ = _run(
        capsys,
        ["adiabatic", "--model", "scalar_model", "--cmis", "1.0",
         "--family", "gauss", "--neps", "8", "--out", str(out)],
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert payload["c_mis"] == 1.0
    assert not payload["advanced"]["converged"]
    assert abs(payload["advanced"]["log_slope"][1]) > 1e-3


def test_glcheck_cli_csv(capsys):
    code, out, _ = _run(
        capsys,
        ["glcheck", "--model", "scalar_model", "--neps", "6", "--format", "csv"],
    )
    assert code == 0
    lines = out.strip().splitlines()
    assert lines[0] == "eps,abs_difference"
    assert lines[-1].startswith("# fitted decay exponent")
