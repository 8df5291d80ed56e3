from __future__ import annotations

from conftest import (
    BANK_OBJECT_TEXT,
    BANK_V1_TEXT,
    BANK_V2_TEXT,
    FIXTURES,
    run_cli,
)
from escher.objects import deserialize
from escher.values import IntVal

V1 = str(FIXTURES / "bank_account_v1.esc")
V2 = str(FIXTURES / "bank_account_v2.esc")
OBJ = str(FIXTURES / "bank_account_v1.eso")

DIFF_GOLDEN = (
    "smo type_changed info STRING -> INTEGER\n"
    "smo removed tot_deposits INTEGER\n"
    "smo removed tot_withdrawals INTEGER\n"
    "smo added balance INTEGER\n"
)


def test_parse_valid_file():
    code, out, _ = run_cli("parse", V1)
    assert code == 0
    assert out == BANK_V1_TEXT


def test_parse_duplicate_attribute(tmp_path):
    bad = tmp_path / "bad.esc"
    bad.write_text("class C feature x: INTEGER x: STRING end", encoding="utf-8")
    code, out, _ = run_cli("parse", str(bad))
    assert code == 1
    assert out.splitlines()[0] == "DuplicateAttribute x"


def test_parse_missing_file():
    code, _, err = run_cli("parse", "no_such_file.esc")
    assert code == 2
    assert "io error" in err


def test_diff_golden():
    code, out, _ = run_cli("diff", V1, V2)
    assert code == 0
    assert out == DIFF_GOLDEN


def test_diff_identical_files():
    code, out, _ = run_cli("diff", V1, V1)
    assert code == 0
    assert out == (
        "smo no_change info STRING\n"
        "smo no_change tot_deposits INTEGER\n"
        "smo no_change tot_withdrawals INTEGER\n"
    )


def test_diff_mismatched_classes(tmp_path):
    other = tmp_path / "other.esc"
    other.write_text("class OTHER feature end", encoding="utf-8")
    code, out, _ = run_cli("diff", V1, str(other))
    assert code == 1
    assert out.startswith("MismatchedClassIdentity")


def test_gen_writes_parseable_transformer(tmp_path):
    out_file = tmp_path / "1_to_2.est"
    code, out, _ = run_cli("gen", V1, V2, str(out_file))
    assert code == 0
    text = out_file.read_text(encoding="utf-8")
    assert text.startswith("transform BANK_ACCOUNT from 1 to 2\n")
    assert "Result.balance := input balance" in text


def test_gen_backwards_stub(tmp_path):
    out_file = tmp_path / "2_to_1.est"
    code, _, _ = run_cli("gen", V2, V1, str(out_file))
    assert code == 0
    assert "transform BANK_ACCOUNT from 2 to 1" in out_file.read_text(encoding="utf-8")


def test_release_and_noop(tmp_path):
    project = tmp_path / "proj"
    project.mkdir()
    working = tmp_path / "work"
    working.mkdir()
    (working / "BANK_ACCOUNT.esc").write_text(BANK_V1_TEXT, encoding="utf-8")
    code, out, _ = run_cli("release", str(working), "--project", str(project))
    assert code == 0
    assert out == "release 1\nclass BANK_ACCOUNT version 1\n"
    code, out, _ = run_cli("release", str(working), "--project", str(project))
    assert code == 0
    assert out == "no-op\n"
    # evolve the class: release 2 with a stub
    (working / "BANK_ACCOUNT.esc").write_text(BANK_V2_TEXT.replace("version 2", "version 1"), encoding="utf-8")
    code, out, _ = run_cli("release", str(working), "--project", str(project))
    assert code == 0
    assert out == "release 2\nclass BANK_ACCOUNT version 2\nstub BANK_ACCOUNT 1 2\n"
    assert (project / "handlers" / "BANK_ACCOUNT" / "1_to_2.est").exists()


def test_migrate_hand_fixed(bank_project):
    code, out, _ = run_cli("migrate", OBJ, "--to-release", "2", "--project", str(bank_project))
    assert code == 0
    assert out == (
        "ESCHER-OBJECTS 1\n"
        "obj 0 BANK_ACCOUNT version 2\n"
        "  balance: INTEGER = 70\n"
        "  info: INTEGER = 42\n"
        "end\n"
    )


def test_migrate_invariant_violation(bank_project_stub):
    code, out, _ = run_cli(
        "migrate", OBJ,
        "--to-release", "2",
        "--inputs", "BANK_ACCOUNT.balance=0",
        "--project", str(bank_project_stub),
    )
    assert code == 1
    assert out.splitlines()[0] == "InvariantViolation BANK_ACCOUNT 0 valid_account"


def test_migrate_no_assert_emits_corrupt_object(bank_project_stub):
    code, out, _ = run_cli(
        "migrate", OBJ,
        "--to-release", "2",
        "--inputs", "BANK_ACCOUNT.balance=0",
        "--no-assert",
        "--project", str(bank_project_stub),
    )
    assert code == 0
    graph = deserialize(out)
    assert graph.records[0].get("balance") == IntVal(0)  # the corrupt object


def test_migrate_missing_transformer(bank_project):
    handler = bank_project / "handlers" / "BANK_ACCOUNT" / "1_to_2.est"
    handler.unlink()
    manifest = bank_project / "escher.manifest"
    manifest.write_text(
        "\n".join(
            line for line in manifest.read_text(encoding="utf-8").splitlines()
            if not line.startswith("transformer")
        ) + "\n",
        encoding="utf-8",
    )
    code, out, _ = run_cli("migrate", OBJ, "--to-release", "2", "--project", str(bank_project))
    assert code == 1
    assert out.splitlines()[0] == "TransformationMissing BANK_ACCOUNT 1 2"


def test_migrate_missing_handler(bank_project):
    import shutil

    shutil.rmtree(bank_project / "handlers")
    manifest = bank_project / "escher.manifest"
    manifest.write_text(
        "\n".join(
            line for line in manifest.read_text(encoding="utf-8").splitlines()
            if not line.startswith("transformer")
        ) + "\n",
        encoding="utf-8",
    )
    code, out, _ = run_cli("migrate", OBJ, "--to-release", "2", "--project", str(bank_project))
    assert code == 1
    assert out.splitlines()[0] == "HandlerMissing BANK_ACCOUNT"


def test_migrate_to_class_version(bank_project):
    code, out, _ = run_cli(
        "migrate", OBJ, "--to", "BANK_ACCOUNT=2", "--project", str(bank_project)
    )
    assert code == 0
    assert "obj 0 BANK_ACCOUNT version 2" in out


def test_migrate_string_input(tmp_path, bank_project_stub):
    obj = tmp_path / "in.eso"
    obj.write_text(BANK_OBJECT_TEXT.replace('"42"', '"oops"'), encoding="utf-8")
    code, out, _ = run_cli(
        "migrate", str(obj),
        "--to-release", "2",
        "--inputs", "BANK_ACCOUNT.balance=99",
        "--project", str(bank_project_stub),
    )
    assert code == 1
    assert out.splitlines()[0].startswith("ConversionFailure STRING_TO_INTEGER")


def test_migrate_multi_hop_and_strict_direct(tmp_path):
    from test_objects import make_chain_repo
    from escher.repository import save_repository

    repo, _ = make_chain_repo(3)
    project = tmp_path / "chain"
    save_repository(repo, project)
    obj = tmp_path / "chain.eso"
    obj.write_text(
        "ESCHER-OBJECTS 1\nobj 0 CHAIN version 1\n  f1: INTEGER = 1\nend\n", encoding="utf-8"
    )
    args = [
        "migrate", str(obj), "--to", "CHAIN=3",
        "--inputs", "CHAIN.f2=2", "--inputs", "CHAIN.f3=3",
        "--project", str(project),
    ]
    code, out, _ = run_cli(*args)
    assert code == 0
    assert "obj 0 CHAIN version 3" in out
    code, out, _ = run_cli(*args, "--strict-direct")
    assert code == 1
    assert out.splitlines()[0] == "TransformationMissing CHAIN 1 3"


def test_migrate_out_file(bank_project, tmp_path):
    out_path = tmp_path / "migrated.eso"
    code, out, _ = run_cli(
        "migrate", OBJ, "--to-release", "2", "--project", str(bank_project),
        "--out", str(out_path),
    )
    assert code == 0
    assert out_path.read_text(encoding="utf-8") == out


def test_per_arraylist_fixture():
    code, out, _ = run_cli("per", str(FIXTURES / "arraylist.hist"))
    assert code == 0
    assert out == "per ArrayList = 0.20\n"


def test_per_java_util_fixture():
    code, out, _ = run_cli("per", str(FIXTURES / "java_util.hist"))
    assert code == 0
    lines = out.splitlines()
    assert "per ArrayList = 0.20" in lines
    assert "per Vector = 1.00" in lines
    assert lines[-1] == "release per = 0.48"


def test_per_project(bank_project):
    code, out, _ = run_cli("per", "--project", str(bank_project))
    assert code == 0
    assert out == "per BANK_ACCOUNT = 0.50\n"


def test_check_pass(tmp_path, bank_project):
    migrated = tmp_path / "migrated.eso"
    run_cli(
        "migrate", OBJ, "--to-release", "2", "--project", str(bank_project),
        "--out", str(migrated),
    )
    code, out, _ = run_cli("check", str(migrated), V2)
    assert code == 0
    assert out == "ok BANK_ACCOUNT 0\n"


def test_check_fails(tmp_path):
    obj = tmp_path / "bad.eso"
    obj.write_text(
        "ESCHER-OBJECTS 1\n"
        "obj 0 BANK_ACCOUNT version 2\n"
        "  balance: INTEGER = 0\n"
        "  info: INTEGER = 1\n"
        "end\n",
        encoding="utf-8",
    )
    code, out, _ = run_cli("check", str(obj), V2)
    assert code == 1
    assert out.splitlines()[0] == "InvariantViolation BANK_ACCOUNT 0 valid_account"


def test_check_v1_object_against_v1_schema():
    code, out, _ = run_cli("check", OBJ, V1)
    assert code == 0
    assert out == "ok BANK_ACCOUNT 0\n"


def test_usage_errors_exit_2(bank_project):
    code, _, _ = run_cli("definitely-not-a-command")
    assert code == 2
    code, _, err = run_cli("migrate", OBJ, "--to-release", "9", "--project", str(bank_project))
    assert code == 2
    assert "release 9" in err
    code, _, _ = run_cli("migrate", OBJ, "--to", "HUH", "--project", str(bank_project))
    assert code == 2


def test_machine_format_matches_text():
    _, text_out, _ = run_cli("diff", V1, V2, "--format", "text")
    _, machine_out, _ = run_cli("diff", V1, V2, "--format", "machine")
    assert text_out == machine_out == DIFF_GOLDEN
