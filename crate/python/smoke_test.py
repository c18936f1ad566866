"""Smoke test for the Python extension.

Builds the extension with cargo, copies it next to a temporary package path
and exercises the main types. Run from the repository root:

    python3 python/smoke_test.py
"""

import json
import pathlib
import shutil
import subprocess
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def build_and_import(tmp):
    subprocess.run(["cargo", "build", "--release", "-p", "cayley-realize-py"], cwd=ROOT, check=True)
    lib = ROOT / "target" / "release" / "libcayley_realize_py.so"
    shutil.copy(lib, pathlib.Path(tmp) / "cayley_realize.so")
    sys.path.insert(0, tmp)
    import cayley_realize

    return cayley_realize


def close(a, b, tol):
    return all(abs(x - y) <= tol for ra, rb in zip(a, b) for x, y in zip(ra, rb))


def main():
    with tempfile.TemporaryDirectory() as tmp:
        cr = build_and_import(tmp)

        # f(z) = z1 + z2 as a pencil with n = 1, m = 0.
        p = cr.Pencil(1, 0, [[[0j]], [[1 + 0j]], [[1.0]]], tag="homogeneous")
        assert p.d == 2
        assert close(p([1 + 1j, 2]), [[3 + 1j]], 1e-14)

        q = cr.generate("pencil_nonhomogeneous", seed=3, d=2, n=2, m=2)
        s = q.synthesize(seed=3)
        assert s.passed, s.report().summary()
        back = s.pencil
        for z in ([1, 1], [0.5 + 2j, 3 - 1j]):
            assert close(back(z), q(z), 1e-7)

        gr = s.gr
        assert gr.unitarity_residual <= 1e-9
        assert gr.verify().passed

        t = cr.Tuple([[[1, 0], [0, 2]], [[3, 0], [0, 0.5 + 1j]]])
        ft = s.eval_on_tuple(t)
        assert close([[ft[0][0]]], q([1, 3]), 1e-9)

        report = q.verify(checks=["cayley_inner", "herglotz_positivity"])
        assert report.passed and len(report.rows()) == 2

        again = cr.loads(q.to_json())
        assert again.to_json() == q.to_json()
        assert json.loads(gr.to_json())["format_version"] == cr.FORMAT_VERSION

        h = cr.generate("pencil_homogeneous", seed=1, d=2)
        try:
            h([0, 0])
        except cr.SingularEvaluationError:
            pass
        else:
            raise AssertionError("expected a singular evaluation")

        try:
            q.synthesize(hermitian=True, seed=1)
        except cr.StageFailureError as e:
            assert "lurking_isometry" in str(e)

        code, out, _ = cr.run_cli(["generate", "--kind", "gr_unitary", "--seed", "2"])
        assert code == 0 and json.loads(out)["kind"] == "gr_realization"
    print("python smoke test passed")


if __name__ == "__main__":
    main()
