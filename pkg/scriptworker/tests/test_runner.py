import base64
from pathlib import Path

import pytest

from modelhub_script_worker.runner import execute

DATA = Path(__file__).parent / "data"

STUB_COMPONENTS = [
    {"kind": "InterfaceObject", "name": "feastol"},
    {"kind": "Constraint", "name": "P_limits"},
    {"kind": "Objective", "name": "gen_cost_obj"},
    {"kind": "Problem", "name": "problem"},
    {"kind": "Solver", "name": "solver"},
    {"kind": "Execution", "name": "info"},
    {"kind": "OutputObject", "name": "output_obj"},
]


def payload_for(source, components, inputs=None, files=None):
    return {
        "execution_id": "e-test",
        "source": source,
        "manifest": {"components": components},
        "inputs": inputs or {},
        "attached_files": [
            {
                "name": name,
                "filename": f"{name}.dat",
                "content_b64": base64.b64encode(data).decode(),
            }
            for name, data in (files or {}).items()
        ],
    }


def stub_payload(feastol=1e-3):
    return payload_for(
        (DATA / "stubbed_model.py").read_text(encoding="utf-8"),
        STUB_COMPONENTS,
        inputs={"feastol": {"kind": "scalar", "value": feastol}},
    )


def test_stubbed_model_reports_all_components():
    status, results, log = execute(stub_payload())
    assert status == "success"
    assert {"P_limits", "gen_cost_obj", "problem", "solver", "info", "output_obj"} <= set(
        results
    )
    assert results["info"] == {"status": "solved", "iterations": 3, "objective": 4.2}
    assert results["output_obj"] == ["solved", 3, 4.2]


def test_injected_input_reaches_solver_parameters():
    status, results, _ = execute(stub_payload(feastol=1e-3))
    assert status == "success"
    assert results["solver"]["feastol"] == 1e-3
    assert results["feastol"] == 1e-3


def test_exception_puts_traceback_at_end_of_log():
    source = "x = 1\nraise RuntimeError('model exploded')\n"
    status, results, log = execute(
        payload_for(source, [{"kind": "Variable", "name": "x"}])
    )
    assert status == "error"
    assert results == {}
    tail = "\n".join(log[-10:])
    assert "Traceback" in tail
    assert any("RuntimeError: model exploded" in line for line in log[-3:])


def test_consecutive_jobs_are_isolated():
    # the script counts prior state files; a leak would change the second run
    source = (
        "import os\n"
        "#@ Output Object: seen\n"
        "seen = sorted(f for f in os.listdir('.') if f.endswith('.marker'))\n"
        "open('run.marker', 'w').write('x')\n"
    )
    components = [{"kind": "OutputObject", "name": "seen"}]
    first = execute(payload_for(source, components))
    second = execute(payload_for(source, components))
    assert first[0] == second[0] == "success"
    assert first[1] == second[1]
    assert first[1]["seen"] == []


def test_attached_files_materialize_under_interface_names():
    source = (
        "#@ Interface File: case\n"
        "#@ Output Object: contents\n"
        "contents = open('case').read().strip()\n"
    )
    components = [
        {"kind": "InterfaceFile", "name": "case"},
        {"kind": "OutputObject", "name": "contents"},
    ]
    status, results, log = execute(
        payload_for(
            source,
            components,
            inputs={"case": {"kind": "file", "filename": "grid.m", "sha256": "?"}},
            files={"case": b"14 bus system\n"},
        )
    )
    assert status == "success"
    assert results["contents"] == "14 bus system"
    # the file itself lives on disk, not in script scope: warned as omitted
    assert any("case" in line and "warning" in line for line in log)


def test_vector_and_text_inputs_injected():
    source = "#@ Output Object: echo\necho = {'w': weights, 'label': label}\n"
    components = [{"kind": "OutputObject", "name": "echo"}]
    status, results, _ = execute(
        payload_for(
            source,
            components,
            inputs={
                "weights": {"kind": "vector", "value": [1.0, 2.0]},
                "label": {"kind": "text", "value": "base case"},
            },
        )
    )
    assert status == "success"
    assert results["echo"] == {"w": [1.0, 2.0], "label": "base case"}


def test_missing_component_warns_and_is_omitted():
    source = "x = 1\n"
    components = [
        {"kind": "Variable", "name": "x"},
        {"kind": "OutputObject", "name": "ghost"},
    ]
    status, results, log = execute(payload_for(source, components))
    assert status == "success"
    assert results == {"x": 1}
    assert any("ghost" in line and "warning" in line for line in log)


def test_every_component_in_results_or_warned():
    payload = stub_payload()
    status, results, log = execute(payload)
    for component in STUB_COMPONENTS:
        name = component["name"]
        assert name in results or any(name in line and "warning" in line for line in log)


def test_unserializable_helper_reported_by_type_name():
    source = "#@ Helper Object: conn\nconn = object()\n"
    components = [{"kind": "HelperObject", "name": "conn"}]
    status, results, _ = execute(payload_for(source, components))
    assert status == "success"
    assert results["conn"] == "<object>"


def test_unserializable_output_object_omitted_with_warning():
    source = "#@ Output Object: out\nout = object()\n"
    components = [{"kind": "OutputObject", "name": "out"}]
    status, results, log = execute(payload_for(source, components))
    assert status == "success"
    assert "out" not in results
    assert any("not serializable" in line for line in log)


def test_numpy_style_values_serialized_via_tolist():
    source = (
        "class FakeArray:\n"
        "    def tolist(self):\n"
        "        return [1, 2, 3]\n"
        "#@ Output Object: arr\n"
        "arr = FakeArray()\n"
    )
    components = [{"kind": "OutputObject", "name": "arr"}]
    status, results, _ = execute(payload_for(source, components))
    assert status == "success"
    assert results["arr"] == [1, 2, 3]


def test_wall_clock_timeout():
    source = "import time\ntime.sleep(30)\n"
    status, results, log = execute(payload_for(source, []), timeout=0.5)
    assert status == "error"
    assert any("wall-clock" in line for line in log)


def test_stdout_streamed_in_order():
    source = "\n".join(f"print('line {i}')" for i in range(20))
    batches = []
    status, _, log = execute(payload_for(source, []), log_callback=batches.append)
    assert status == "success"
    streamed = [line for batch in batches for line in batch]
    assert streamed == log
    printed = [line for line in log if line.startswith("line ")]
    assert printed == [f"line {i}" for i in range(20)]
