import pathlib

import pytest

import sizetypes as st

PROGRAMS = pathlib.Path(__file__).resolve().parent.parent / "programs"

CHECKED_FILES = ["basics.shp", "progression.shp"]
INFERENCE_FILES = ["basics.shp", "progression.shp", "nonlinear.shp"]


def load_core(name: str) -> st.Program:
    text = (PROGRAMS / name).read_text()
    program = st.parse_program(text)
    st.scope_check(program)
    core = st.desugar(program)
    assert st.validate_restriction(core) == []
    return core


@pytest.fixture(scope="session")
def basics() -> st.Program:
    return load_core("basics.shp")


@pytest.fixture(scope="session")
def progression_program() -> st.Program:
    return load_core("progression.shp")


@pytest.fixture(scope="session")
def nonlinear_program() -> st.Program:
    return load_core("nonlinear.shp")


def eval_function(program: st.Program, fname: str, *literals: str,
                  closures: st.Closures | None = None):
    heap = st.Heap()
    cl = closures if closures is not None else st.closures_from_program(program)
    args = [st.parse_value_literal(text, heap) for text in literals]
    value, heap = st.run_function(cl, fname, args, heap, budget=10_000_000)
    return st.value_to_python(value, heap)
