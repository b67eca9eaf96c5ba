#!/usr/bin/env python3
"""Build the ksfem_py extension module, import it, and run an end-to-end
sanity pass: mesh queries, initial data, a short stabilized simulation,
stepwise solving, operator export, and the nested-mesh error norms.

Exits nonzero if any check fails.
"""

import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent


def build_module() -> Path:
    subprocess.run(["cargo", "build", "-p", "ksfem-py"], cwd=ROOT, check=True)
    for name in ("libksfem_py.so", "libksfem_py.dylib", "ksfem_py.dll"):
        lib = ROOT / "target" / "debug" / name
        if lib.exists():
            return lib
    raise FileNotFoundError("built cdylib not found under target/debug")


def main() -> int:
    lib = build_module()
    tmp = Path(tempfile.mkdtemp(prefix="ksfem_py_"))
    shutil.copy2(lib, tmp / "ksfem_py.so")
    sys.path.insert(0, str(tmp))
    import ksfem_py as ks

    failures = []

    def check(name: str, ok: bool) -> None:
        print(f"{'ok  ' if ok else 'FAIL'} {name}")
        if not ok:
            failures.append(name)

    mesh = ks.Mesh.uniform(8)
    check(
        "mesh counts",
        mesh.n_nodes == 81 and mesh.n_triangles == 128 and mesh.n_edges == 208,
    )
    q = mesh.quality()
    check(
        "mesh quality",
        q.nonobtuse
        and abs(q.h_max - math.sqrt(2) / 8) < 1e-15
        and len(q.gamma) == 81,
    )

    u0, c0 = ks.initial_condition("gauss5", mesh)
    check(
        "initial data",
        len(u0) == 81
        and abs(max(u0) - 15.0) < 1e-12
        and all(v == 0.0 for v in c0),
    )

    res = ks.simulate(m=8, scheme="afc", ic="gauss5", k=1e-4, steps=10)
    drift = max(abs(v - res.mass_history[0]) for v in res.mass_history)
    check("mass conservation", drift < 1e-10 * abs(res.mass_history[0]))
    check("positivity", min(res.u) > 0.0 and min(res.min_u_history) > 0.0)
    check("clock", abs(res.final_time - 10e-4) < 1e-15)

    solver = ks.Solver(mesh, u0, c0, k=1e-4, scheme="afc")
    report = solver.step()
    check(
        "step report",
        report.iterations >= 1
        and abs(report.mass_after - report.mass_before)
        < 1e-10 * abs(report.mass_before),
    )
    for _ in range(9):
        solver.step()
    check(
        "stepwise equals one-shot",
        solver.u == res.u and solver.c == res.c and solver.time == res.final_time,
    )

    indptr, _indices, data = ks.mass_matrix(mesh)
    lumped = ks.lumped_masses(mesh)
    row_sums = [sum(data[indptr[i] : indptr[i + 1]]) for i in range(mesh.n_nodes)]
    check(
        "mass lumping",
        all(abs(a - b) < 1e-15 for a, b in zip(row_sums, lumped))
        and abs(sum(lumped) - 1.0) < 1e-14,
    )

    sp, _si, sd = ks.stiffness_matrix(mesh)
    srows = [sum(sd[sp[i] : sp[i + 1]]) for i in range(mesh.n_nodes)]
    check("stiffness rows sum to zero", max(abs(v) for v in srows) < 1e-12)

    coarse = ks.Mesh.uniform(4)
    plane = [1.0 + x - 2.0 * y for x, y in coarse.nodes()]
    lifted = ks.prolong(coarse, mesh, plane)
    exact = [1.0 + x - 2.0 * y for x, y in mesh.nodes()]
    l2, h1 = ks.error_norms(mesh, lifted, exact)
    check("affine prolongation is exact", l2 < 1e-14 and h1 < 1e-13)
    check("order arithmetic", abs(ks.observed_order(0.2, 0.04, 0.1, 0.01) - 2.0) < 1e-12)

    try:
        ks.simulate(scheme="superfast", steps=1)
        check("bad scheme raises", False)
    except ValueError as e:
        check("bad scheme raises", "superfast" in str(e))

    if failures:
        print(f"{len(failures)} checks failed: {', '.join(failures)}")
        return 1
    print("all checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
