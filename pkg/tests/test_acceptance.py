"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

The nonlinear big-Dirichlet table check (`dbc_table`) is implemented
faithfully and is expected to fail: the published table for that problem is
not reproducible from its own listing (see the analysis in the project
notes); all other criteria pass.
"""

import io
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

import quad_oracle as oracle
from femscript.dsl import run_source
from femscript.fespace import FeSpace, interpolate
from femscript.fields import Constant, as_field
from femscript.forms import (DirichletBC, FormTerm, TestFunction, TrialFunction,
                             VarForm, as_form, assemble_bilinear, assemble_linear,
                             dirichlet_dofs, dx, dy)
from femscript.linalg import solve_cg, solve_lu
from femscript.mesh import build_from_borders, build_square
from femscript.studies import (FixedPointConfig, ThetaSchemeConfig, circle_border,
                               run_fixed_point, run_heat_study, run_nonlinear_study,
                               run_poisson_study)

from conftest import (ELLNL_DBC0_TABLE, ELLNL_DBC50_TABLE, ELLNL_TABLE, HEAT_TABLE,
                      POISSON_RATES, POISSON_TABLE, delaunay_violations)

U, V = TrialFunction(), TestFunction()
STIFF = dx(U) * dx(V) + dy(U) * dy(V)
MASS = as_form(U) * V
SQUARE_BC = frozenset({1, 2, 3, 4})


@contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[acceptance] {name}: FAIL")
        raise
    print(f"[acceptance] {name}: PASS")


# -- criterion: Poisson golden table ------------------------------------------------

def test_poisson_golden_table():
    with criterion("poisson golden table"):
        t0 = time.perf_counter()
        rows = run_poisson_study(4)
        elapsed = time.perf_counter() - t0
        for row, (N, err) in zip(rows, POISSON_TABLE):
            assert row.N == N
            assert abs(row.error - err) <= 0.05 * err, f"N={N}: {row.error} vs {err}"
        rates = [r.rate_space for r in rows[1:]]
        for got, want in zip(rates, POISSON_RATES):
            assert abs(got - want) <= 0.05
        # rates approach 2 monotonically (within noise)
        for a, b in zip(rates, rates[1:]):
            assert b >= a - 0.02
        assert elapsed < 30.0, f"study took {elapsed:.1f}s"


# -- criterion: heat golden table ------------------------------------------------------

def _check_heat(nref):
    for theta, golden in HEAT_TABLE.items():
        rows = run_heat_study(ThetaSchemeConfig(theta=theta), nref)
        if theta == 0.0:
            for row, err in zip(rows, golden["errors"][:nref]):
                assert abs(row.error - err) <= 0.05 * err, \
                    f"theta=0 N={row.N}: {row.error} vs {err}"
            for row, rate in zip(rows[1:], golden["time_rates"][:nref - 1]):
                assert abs(row.rate_time - rate) <= 0.05
        elif theta == 0.5:
            for row in rows[1:]:
                assert abs(row.rate_time - 2.0) <= 0.05, f"theta=1/2: {row.rate_time}"
        else:
            for row in rows[1:]:
                assert abs(row.rate_time - 1.0) <= 0.05, f"theta=1: {row.rate_time}"


def test_heat_golden_table():
    with criterion("heat golden table (nref=3)"):
        _check_heat(3)


@pytest.mark.slow
def test_heat_golden_table_full():
    with criterion("heat golden table (nref=4, slow)"):
        _check_heat(4)


# -- criterion: nonlinear elliptic studies ------------------------------------------------

def test_nonlinear_cubic_table(disk_meshes):
    with criterion("nonlinear elliptic: cubic problem table"):
        hist = []
        _, _, err = run_fixed_point("ellnl", 16, mesh=disk_meshes[0], history=hist)
        assert err < 1e-10, "fixed point must reach the 1e-10 increment tolerance"
        rows = run_nonlinear_study("ellnl", 5, meshes=disk_meshes)
        for row, ref in zip(rows, ELLNL_TABLE):
            if row.N <= 128:
                assert abs(row.error - ref) <= 0.15 * ref, \
                    f"N={row.N}: {row.error} vs {ref}"
        last_two = [r.rate_space for r in rows[-2:]]
        for rate in last_two:
            assert 1.85 <= rate <= 2.15, f"asymptotic rate {rate} outside [1.85, 2.15]"


def test_nonlinear_dbc_table(disk_meshes):
    """Faithful check of the big-Dirichlet table; expected to fail.

    The published values for this problem are inconsistent with the paper's
    own listing (they nearly coincide with the cubic problem's table, which
    no faithful implementation reproduces on any mesh family we tried);
    see the decisions ledger for the full analysis.
    """
    with criterion("nonlinear elliptic: big-Dirichlet table"):
        failures = []
        for dbc, table in ((0.0, ELLNL_DBC0_TABLE), (50.0, ELLNL_DBC50_TABLE)):
            cfg = FixedPointConfig(dbc=dbc)
            _, _, err = run_fixed_point("ellnl_dbc", 16, cfg, mesh=disk_meshes[0])
            assert err < 1e-10
            rows = run_nonlinear_study("ellnl_dbc", 5, cfg, meshes=disk_meshes)
            for row, ref in zip(rows, table):
                if row.N <= 128 and abs(row.error - ref) > 0.20 * ref:
                    failures.append(f"DBC={dbc} N={row.N}: {row.error:.6g} vs {ref}")
            for rate in [r.rate_space for r in rows[-2:]]:
                if not 1.85 <= rate <= 2.15:
                    failures.append(f"DBC={dbc} rate {rate:.4f} outside [1.85, 2.15]")
        assert not failures, "published table not reproduced: " + "; ".join(failures)


# -- criterion: element matrix oracle suite -----------------------------------------------

def test_element_matrix_oracle(reference_triangle):
    with criterion("element-matrix oracle suite"):
        Vh = FeSpace(reference_triangle, "P1")
        A = assemble_bilinear(VarForm(bilinear_terms=[FormTerm("int2d", STIFF)]),
                              Vh, Vh).to_dense()
        M = assemble_bilinear(VarForm(bilinear_terms=[FormTerm("int2d", MASS)]),
                              Vh, Vh).to_dense()
        stiff_expect = 0.5 * np.array([[2, -1, -1], [-1, 1, 0], [-1, 0, 1]], dtype=float)
        mass_expect = (np.ones((3, 3)) + np.eye(3)) / 24.0
        assert np.abs(A - stiff_expect).max() <= 1e-13
        assert np.abs(M - mass_expect).max() <= 1e-13
        assert np.abs(A - oracle.element_stiffness([0, 0], [1, 0], [0, 1])).max() <= 1e-13
        assert np.abs(M - oracle.element_mass([0, 0], [1, 0], [0, 1])).max() <= 1e-13


# -- criterion: property suites ---------------------------------------------------------

def _poisson_system(N):
    mesh = build_square(N, N)
    Vh = FeSpace(mesh, "P1")
    fh = interpolate(Vh, lambda x, y: 2 * np.pi ** 2 * np.sin(np.pi * x) * np.sin(np.pi * y))
    a = VarForm(bilinear_terms=[FormTerm("int2d", STIFF)],
                dirichlet=[DirichletBC(SQUARE_BC, Constant(0.0))])
    l = VarForm(linear_terms=[FormTerm("int2d", as_form(as_field(fh)) * V)],
                dirichlet=[DirichletBC(SQUARE_BC, Constant(0.0))])
    return assemble_bilinear(a, Vh, Vh), assemble_linear(l, Vh), mesh, Vh


def _heat_system(N):
    mesh = build_square(N, N)
    Vh = FeSpace(mesh, "P1")
    dt = (1.0 / N) ** 2
    lumped = VarForm(bilinear_terms=[FormTerm("int2d", MASS, quad="lumped")])
    stiff = VarForm(bilinear_terms=[FormTerm("int2d", STIFF)])
    A = (assemble_bilinear(lumped, Vh, Vh).scale(1 / dt)
         + assemble_bilinear(stiff, Vh, Vh))
    A = A.with_diagonal(dirichlet_dofs(Vh, SQUARE_BC), 1e30)
    u0 = interpolate(Vh, lambda x, y: np.sin(np.pi * x) * np.sin(np.pi * y))
    Md = assemble_bilinear(lumped, Vh, Vh).diagonal()
    b = Md * u0.dofs / dt
    b[dirichlet_dofs(Vh, SQUARE_BC)] = 0.0
    return A, b


def _ellnl_system(mesh):
    Vh = FeSpace(mesh, "P1")
    Vcoef = interpolate(Vh, lambda x, y: np.sin(x ** 2 + y ** 2 - 1) ** 2)
    fh = interpolate(Vh, lambda x, y: np.cos(x) + y)
    a = VarForm(bilinear_terms=[FormTerm("int2d", STIFF),
                                FormTerm("int2d", as_form(U) * as_field(Vcoef) * V)],
                dirichlet=[DirichletBC(frozenset({1}), Constant(0.0))])
    l = VarForm(linear_terms=[FormTerm("int2d", as_form(as_field(fh)) * V)],
                dirichlet=[DirichletBC(frozenset({1}), Constant(0.0))])
    return assemble_bilinear(a, Vh, Vh), assemble_linear(l, Vh)


def test_property_suites(square16, circle50, disk_meshes):
    with criterion("property suites"):
        # pre-penalty stiffness row sums vanish
        for mesh in (square16, circle50):
            Vh = FeSpace(mesh, "P1")
            S = assemble_bilinear(VarForm(bilinear_terms=[FormTerm("int2d", STIFF)]),
                                  Vh, Vh)
            assert np.abs(S.row_sums()).max() <= 1e-12

        # mass matrix total = domain area; lumped/full row sums agree
        for mesh in (square16, circle50):
            Vh = FeSpace(mesh, "P1")
            M = assemble_bilinear(VarForm(bilinear_terms=[FormTerm("int2d", MASS)]),
                                  Vh, Vh)
            ML = assemble_bilinear(
                VarForm(bilinear_terms=[FormTerm("int2d", MASS, quad="lumped")]),
                Vh, Vh)
            assert abs(M.row_sums().sum() - mesh.total_area()) <= 1e-12
            assert np.abs(M.row_sums() - ML.row_sums()).max() <= 1e-13

        # LU/CG cross agreement on every golden SPD system
        systems = [_poisson_system(16)[:2], _poisson_system(32)[:2],
                   _heat_system(16), _ellnl_system(disk_meshes[0])]
        for A, b in systems:
            x_lu = solve_lu(A, b)
            res = solve_cg(A, b, tol=1e-12)
            assert res.converged
            assert np.linalg.norm(res.x - x_lu) <= 1e-8 * np.linalg.norm(x_lu)

        # penalty reproduces Dirichlet values to 1e-12 relative
        mesh = build_square(12, 12)
        Vh = FeSpace(mesh, "P1")
        g = as_field(lambda x, y: 2.0 + np.sin(x) + y)
        a = VarForm(bilinear_terms=[FormTerm("int2d", STIFF)],
                    dirichlet=[DirichletBC(SQUARE_BC, g)])
        l = VarForm(linear_terms=[FormTerm("int2d", as_form(Constant(1.0)) * V)],
                    dirichlet=[DirichletBC(SQUARE_BC, g)])
        x = solve_lu(assemble_bilinear(a, Vh, Vh), assemble_linear(l, Vh))
        bnd = mesh.vertices_on_labels(SQUARE_BC)
        pts = mesh.points[bnd]
        expect = 2.0 + np.sin(pts[:, 0]) + pts[:, 1]
        assert (np.abs(x[bnd] - expect) / np.abs(expect)).max() <= 1e-12

        # Delaunay in-circle check on desk-scale meshes
        small_disk = build_from_borders([circle_border(24)])
        for mesh in (small_disk, build_square(8, 8)):
            assert mesh.nt <= 500
            assert delaunay_violations(mesh) == 0


# -- criterion: DSL corpus -------------------------------------------------------------

def test_dsl_corpus(tmp_path):
    with criterion("DSL corpus"):
        corpus = sorted((Path(__file__).parent / "corpus").glob("*.edp"))
        assert len(corpus) >= 10
        for path in corpus:
            out = io.StringIO()
            result = run_source(path.read_text(), script_dir=str(tmp_path),
                                stdout=out, stdin=io.StringIO("5\n"), verbosity=0)
            assert result.exit_code == 0, path.name

        # the three solution paths produce bitwise-identical DOF vectors
        template = (Path(__file__).parent / "corpus" / "solve_poisson.edp").read_text()
        solve_u = _dofs_of(template, tmp_path)
        problem_u = _dofs_of(
            template.replace("solve poisson", "problem poisson")
                    .replace("cout <<", "poisson;\ncout <<"), tmp_path)
        varf_src = (Path(__file__).parent / "corpus" / "varf_poisson.edp").read_text()
        varf_aligned = varf_src.replace(
            "varf l( unused ,vh) = int2d (Th)(f*vh); // linear form",
            "varf l( unused ,vh) = int2d (Th)(f*vh) + on(1,2,3,4,unused=0);")
        varf_u = _dofs_of(varf_aligned, tmp_path)
        assert np.array_equal(solve_u, problem_u)
        assert np.array_equal(solve_u, varf_u)

        # solution amplitude against a refined-grid reference
        assert abs(solve_u.max() - 0.0737) <= 0.002

        # scripted values 20, 20, 5 and the loop sums
        out = io.StringIO()
        run_source((Path(__file__).parent / "corpus" / "arrays_matrices.edp").read_text(),
                   script_dir=str(tmp_path), stdout=out, verbosity=0)
        assert out.getvalue().split() == ["20", "20", "5", "5"]
        out = io.StringIO()
        run_source((Path(__file__).parent / "corpus" / "loops.edp").read_text(),
                   script_dir=str(tmp_path), stdout=out, verbosity=0)
        assert out.getvalue().split() == ["55", "11", "55"]


def _dofs_of(source, tmp_path):
    result = run_source(source, script_dir=str(tmp_path),
                        stdout=io.StringIO(), verbosity=0)
    return result.env.lookup("uh").dofs.copy()
