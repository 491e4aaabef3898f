import json

import numpy as np
import pytest

from conftest import random_unitary

from ncg import (BlockStructure, FiniteSpectralTriple, bundle_to_json,
                 build_triple_from_mass_matrix, full_morita_bundle,
                 triple_from_json, triple_to_json)
from ncg.cli import run


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def standard_triple_file(tmp_path):
    t = build_triple_from_mass_matrix(np.array([[1.0]]))
    return write(tmp_path / "standard.json", triple_to_json(t))


class TestCheckTriple:
    def test_standard_triple_passes(self, standard_triple_file, capsys):
        assert run(["check", "triple", standard_triple_file]) == 0
        out = capsys.readouterr().out
        assert "result: PASS" in out
        assert "triple.even.anticommute_gamma" in out

    def test_identity_grading_fails_with_stable_identifier(self, tmp_path,
                                                           capsys):
        t = build_triple_from_mass_matrix(np.array([[1.0]]))
        bad = FiniteSpectralTriple(t.blocks, t.D, np.eye(4, dtype=complex),
                                   t.epsilon, t.K)
        path = write(tmp_path / "bad.json", triple_to_json(bad))
        assert run(["check", "triple", path]) == 1
        out = capsys.readouterr().out
        assert "FAIL  triple.even.anticommute_gamma" in out
        assert "result: FAIL" in out

    def test_json_format(self, standard_triple_file, capsys):
        assert run(["check", "triple", standard_triple_file,
                    "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["passed"] is True
        ids = [c["id"] for c in payload["checks"]]
        assert "triple.so_real.anticommute_J" in ids
        assert "triple.poincare" in ids
        poincare = next(c for c in payload["checks"]
                        if c["id"] == "triple.poincare")
        assert poincare["status"] == "info"

    def test_malformed_json_is_exit_two(self, tmp_path, capsys):
        path = tmp_path / "broken.json"
        path.write_text('{"blocks": [1,')
        assert run(["check", "triple", str(path)]) == 2
        assert "input error" in capsys.readouterr().out

    def test_shape_error_is_exit_two(self, tmp_path, capsys):
        path = write(tmp_path / "ragged.json",
                     {"blocks": [1, 1],
                      "D": [[[1.0, 0.0]], [[0.0, 0.0], [0.0, 0.0]]]})
        assert run(["check", "triple", str(path)]) == 2
        out = capsys.readouterr().out
        assert "row 1" in out


class TestCheckBundle:
    def test_full_bundle_passes(self, tmp_path, capsys):
        path = write(tmp_path / "bundle.json",
                     bundle_to_json(full_morita_bundle(BlockStructure((1, 2)))))
        assert run(["check", "bundle", path]) == 0
        out = capsys.readouterr().out
        assert "fell.axiom.10" in out and "fell.saturated" in out

    def test_unsaturated_bundle_fails(self, tmp_path, capsys):
        data = {"blocks": [1, 1],
                "fibres": {"1,1": [[[[1.0, 0.0]]]], "2,2": [[[[1.0, 0.0]]]]}}
        path = write(tmp_path / "unsaturated.json", data)
        assert run(["check", "bundle", path]) == 1
        assert "FAIL  fell.saturated" in capsys.readouterr().out


class TestPipelines:
    def test_categorify_then_to_fell(self, standard_triple_file, tmp_path,
                                     capsys):
        cat_path = str(tmp_path / "cat.json")
        fell_path = str(tmp_path / "fell.json")
        assert run(["categorify", standard_triple_file, "-o", cat_path]) == 0
        assert run(["to-fell", cat_path, "-o", fell_path]) == 0
        fell = json.loads((tmp_path / "fell.json").read_text())
        assert fell["hilbert_dim"] == 4
        original = json.loads(open(standard_triple_file).read())
        assert fell["PL"] == original["D"]

    def test_categorify_zero_dirac_is_check_failure(self, tmp_path, capsys):
        t = build_triple_from_mass_matrix(np.array([[0.0]]))
        path = write(tmp_path / "zero.json", triple_to_json(t))
        assert run(["categorify", path, "-o", str(tmp_path / "o.json")]) == 1
        assert "check failed" in capsys.readouterr().out

    def test_fluctuate_writes_conjugated_triple(self, standard_triple_file,
                                                tmp_path, capsys):
        rng = np.random.default_rng(7)
        u = random_unitary(rng, 4)
        terms_path = write(tmp_path / "terms.json",
                           [{"r": 1.0,
                             "U": [[[float(z.real), float(z.imag)]
                                    for z in row] for row in u]}])
        out_path = str(tmp_path / "fluct.json")
        assert run(["fluctuate", standard_triple_file, "--terms", terms_path,
                    "-o", out_path]) == 0
        original = triple_from_json(
            json.loads(open(standard_triple_file).read()))
        result = triple_from_json(json.loads(open(out_path).read()))
        np.testing.assert_allclose(result.D,
                                   u @ original.D @ u.conj().T, atol=1e-12)

    def test_fluctuate_non_unitary_term_is_exit_two(self,
                                                    standard_triple_file,
                                                    tmp_path, capsys):
        terms_path = write(tmp_path / "terms.json",
                           [{"r": 1.0, "U": [[[2.0, 0.0], [0.0, 0.0]],
                                             [[0.0, 0.0], [2.0, 0.0]]]}])
        code = run(["fluctuate", standard_triple_file, "--terms", terms_path,
                    "-o", str(tmp_path / "o.json")])
        assert code == 2


class TestLimit:
    def test_json_report_orders(self, capsys):
        assert run(["limit", "--ns", "64,128", "--profile", "sine:1",
                    "--format", "json"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["rows"][0]["order"] is None
        assert payload["rows"][1]["order"] == pytest.approx(2.0, abs=0.05)

    def test_text_table(self, capsys):
        assert run(["limit", "--ns", "16,32", "--profile", "sine:1",
                    "--theta", "sine:1"]) == 0
        out = capsys.readouterr().out
        assert "flat_error" in out and "fluct_error" in out

    def test_bad_ns_is_exit_two(self, capsys):
        assert run(["limit", "--ns", "64,abc", "--profile", "sine:1"]) == 2

    def test_bad_profile_is_exit_two(self, capsys):
        assert run(["limit", "--ns", "16,32", "--profile", "sawtooth"]) == 2


class TestGrammar:
    def test_unknown_subcommand(self, capsys):
        assert run(["frobnicate"]) == 2

    def test_missing_required_argument(self, capsys):
        assert run(["check"]) == 2

    def test_tol_override_loosens_a_check(self, tmp_path, capsys):
        # A slightly non-self-adjoint Dirac fails at the default
        # tolerance but passes at a loose one.
        t = build_triple_from_mass_matrix(np.array([[1.0]]))
        d = t.D.copy()
        d[0, 1] += 1e-6
        leaky = FiniteSpectralTriple(t.blocks, d, t.gamma, t.epsilon, t.K)
        path = write(tmp_path / "leaky.json", triple_to_json(leaky))
        assert run(["check", "triple", path]) == 1
        capsys.readouterr()
        assert run(["check", "triple", path, "--tol", "1e-3"]) == 0


class TestDeterminism:
    def test_reports_byte_identical_across_runs(self, standard_triple_file,
                                                capsys):
        outputs = []
        for _ in range(2):
            run(["check", "triple", standard_triple_file, "--format", "json"])
            outputs.append(capsys.readouterr().out)
        assert outputs[0] == outputs[1]

        for _ in range(2):
            run(["limit", "--ns", "16,32,64", "--profile", "plane_wave:2",
                 "--theta", "sine:1", "--format", "json"])
            outputs.append(capsys.readouterr().out)
        assert outputs[2] == outputs[3]
