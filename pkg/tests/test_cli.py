import json


from spinthermo.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_fkg_verify_dyson(capsys):
    code, out, err = run(capsys, "fkg-verify", "--potential", "dyson", "--gamma", "2.2", "--truncation", "32")
    assert code == 0
    assert json.loads(out)["status"] == "class-E-certified"


def test_fkg_verify_antiferromagnet(capsys):
    code, out, _ = run(capsys, "fkg-verify", "--potential", "ising:-1", "--volume", "3")
    data = json.loads(out)
    assert code == 2 and data["status"] == "violated"
    worst = min(data["records"], key=lambda r: r["min_covariance"])
    assert worst["min_covariance"] < 0 and worst["witness_f"] and worst["witness_g"]


def test_fkg_verify_zero_csv(capsys):
    code, out, _ = run(capsys, "fkg-verify", "--potential", "zero", "--format", "csv")
    assert code == 0
    assert out.splitlines()[0] == "n,boundary,min_covariance,witness_f,witness_g"


def test_eigen_approx_outputs(tmp_path, capsys):
    out = tmp_path / "z.csv"
    code, _, _ = run(capsys, "eigen-approx", "--potential", "product-geometric:0.5", "--beta", "2", "--iters", "7", "--depth", "6", "--out", str(out))
    assert code == 0
    header = out.read_text().splitlines()[0]
    assert header == "t,z_value,z_prev,phi_explicit"
    info = json.loads(out.with_suffix(".json").read_text())
    assert info["ratio_spread"] < 0.05
    assert {"lambda", "pressure", "n_iters", "residual", "ratio_sequence", "tail_bound"} <= set(info)


def test_eigen_approx_zero(capsys):
    code, out, _ = run(capsys, "eigen-approx", "--potential", "zero", "--iters", "3", "--depth", "3")
    rows = [l.split(",") for l in out.splitlines()[1:]]
    assert code == 0 and all(float(r[1]) == 1.0 for r in rows)


def test_caps_and_bad_config(capsys):
    assert run(capsys, "eigen-approx", "--iters", "13")[0] == 3
    assert run(capsys, "eigen-approx", "--depth", "21")[0] == 3
    assert run(capsys, "fkg-verify", "--potential", "nonsense")[0] == 4
    assert run(capsys, "pressure", "--gamma", "1.5")[0] == 4


def test_pressure(capsys):
    code, out, _ = run(capsys, "pressure", "--gamma", "3", "--beta", "1", "--truncation", "64")
    data = json.loads(out)
    assert code == 0 and data["margin"] > 0
    assert set(data) >= {"pressure_estimate", "upper_bound", "margin", "gamma", "beta", "K"}


def test_phase(capsys):
    code, out, _ = run(capsys, "phase", "--gamma", "2.5", "--beta", "0.5", "--volume", "8")
    assert code == 0 and out.splitlines()[0].startswith("n,max_gap")


def test_class_check(capsys):
    code, out, _ = run(capsys, "class-check", "--potential", "dyson", "--depth", "6")
    data = json.loads(out)
    assert data["class_E"] is True and data["mirrored"] is True
    _, out, _ = run(capsys, "class-check", "--potential", "dyson", "--field", "0.5", "--depth", "6")
    assert json.loads(out)["mirrored"] is False
    _, out, _ = run(capsys, "class-check", "--potential", "product", "--gamma", "3", "--depth", "6")
    data = json.loads(out)
    assert data["class_E"] is None and data["class_F"]["member"] is True


def test_binary(capsys):
    code, out, _ = run(capsys, "binary")
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,c_phi,L_phi" and len(lines) == 2049


def test_kernel_eigen_and_graph(capsys):
    code, out, _ = run(capsys, "kernel-eigen", "--potential", "product", "--gamma", "3.3", "--depth", "3", "--qdepth", "8")
    assert code == 0 and out.splitlines()[0].startswith("t_embedding,phi_value,quadrature_kind,depth_or_samples")
    code, out, _ = run(capsys, "potential-graph", "--gamma", "1.88", "--depth", "4")
    assert code == 0 and len(out.splitlines()) == 17


def test_json_potential_file(tmp_path, capsys):
    from spinthermo.potential import CouplingSpec, Couplings, Kind

    path = tmp_path / "p.json"
    path.write_text(CouplingSpec(Kind.ISING, 0.0, 1.0, Couplings.power_law(2.2), 16).to_json())
    code_a, out_a, _ = run(capsys, "fkg-verify", "--potential", str(path), "--volume", "2")
    code_b, out_b, _ = run(capsys, "fkg-verify", "--potential", "dyson", "--gamma", "2.2", "--volume", "2")
    assert code_a == code_b == 0 and out_a == out_b
