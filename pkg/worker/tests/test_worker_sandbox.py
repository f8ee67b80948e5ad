"""Confinement behavior: import allowlist, builtins table, rlimits, alarm."""
import subprocess
import sys

import pytest

from forgeworker import sandbox

GRID_TOOL_SET = {"default_model_id": "stub-model", "answer_kind": "grid", "rng_seed": 0}

GRID_PAYLOAD = {
    "examples": [{"input": [[1, 2]], "output": [[1, 2]]}],
    "test_input": [[3, 4]],
}


# --- in-process units -------------------------------------------------------


def test_restricted_builtins_drop_the_dangerous_names():
    table = sandbox.restricted_builtins()
    for gone in ("open", "input", "breakpoint", "exit", "quit"):
        assert gone not in table
    for kept in ("len", "range", "print", "isinstance", "__build_class__", "Exception"):
        assert kept in table
    assert table["__import__"] is sandbox.guarded_import


def test_guarded_import_allows_pure_modules_and_submodules():
    assert sandbox.guarded_import("math").sqrt(4) == 2.0
    assert sandbox.guarded_import("collections.abc") is not None
    counter_mod = sandbox.guarded_import("collections", fromlist=("Counter",))
    assert counter_mod.Counter("aab")["a"] == 2


@pytest.mark.parametrize("name", ["os", "sys", "subprocess", "socket", "pathlib", "shutil"])
def test_guarded_import_refuses_system_modules(name):
    with pytest.raises(ImportError, match="blocked in the agent sandbox"):
        sandbox.guarded_import(name)


def test_guarded_import_refuses_relative_imports():
    with pytest.raises(ImportError):
        sandbox.guarded_import("framework", level=1)


# --- behavior inside a live worker ------------------------------------------


def test_allowed_imports_work_inside_agent_code(worker):
    agent = (
        "import math\n"
        "from collections import Counter\n"
        "def forward(self, taskInfo):\n"
        "    return str(math.floor(2.5) + Counter('aa')['a'])\n"
    )
    done, _ = worker.execute(agent)
    assert done["status"] == "ok"
    assert done["answer"]["content"] == "4"


def test_os_import_is_refused_inside_agent_code(worker):
    done, _ = worker.execute("import os\ndef forward(self, taskInfo):\n    return 'x'\n")
    assert done["status"] == "error"
    assert "import of 'os' is blocked in the agent sandbox" in done["traceback"]


def test_eval_inherits_the_import_guard(worker):
    agent = (
        "def forward(self, taskInfo):\n"
        "    return str(eval(\"__import__('os').getcwd()\"))\n"
    )
    done, _ = worker.execute(agent)
    assert done["status"] == "error"
    assert "blocked in the agent sandbox" in done["traceback"]


def test_open_is_not_defined_for_agent_code(worker):
    agent = "def forward(self, taskInfo):\n    open('/etc/hostname')\n    return 'x'\n"
    done, _ = worker.execute(agent)
    assert done["status"] == "error"
    assert "name 'open' is not defined" in done["traceback"]


def test_transformation_code_is_confined_too(worker):
    agent = '''
def forward(self, taskInfo):
    feedback, correct, wrong = self.run_examples_and_get_feedback("import os\\ndef transform(grid):\\n    return grid")
    return feedback.content
'''
    done, _ = worker.execute(agent, task_payload=GRID_PAYLOAD, tool_set=GRID_TOOL_SET)
    assert done["status"] == "ok"
    content = done["answer"]["content"]
    assert content.startswith("0 of 1 examples correct.")
    assert "import of 'os' is blocked in the agent sandbox" in content


# --- process-level limits (probed in a scratch subprocess) ------------------


def test_memory_limit_binds_and_restores():
    probe = (
        "from forgeworker import sandbox\n"
        "previous = sandbox.set_memory_limit(512 * 1024 * 1024)\n"
        "assert previous is not None\n"
        "try:\n"
        "    hog = bytearray(1 << 30)\n"
        "except MemoryError:\n"
        "    print('allocation refused')\n"
        "else:\n"
        "    raise SystemExit('1 GiB allocation fit under a 512 MiB limit')\n"
        "sandbox.clear_memory_limit(previous)\n"
        "release_check = bytearray(64 * 1024 * 1024)\n"
        "print('limit restored')\n"
    )
    result = subprocess.run([sys.executable, "-c", probe], capture_output=True, text=True, timeout=30)
    assert result.returncode == 0, result.stderr
    assert "allocation refused" in result.stdout
    assert "limit restored" in result.stdout


def test_wall_clock_alarm_interrupts_a_tight_loop():
    probe = (
        "import time\n"
        "from forgeworker import sandbox\n"
        "from forgeworker.framework import WallClockExceeded\n"
        "sandbox.arm_wall_clock(0.3)\n"
        "started = time.monotonic()\n"
        "try:\n"
        "    while True:\n"
        "        pass\n"
        "except WallClockExceeded:\n"
        "    sandbox.disarm_wall_clock()\n"
        "    print(f'interrupted after {time.monotonic() - started:.2f}s')\n"
        "time.sleep(0.5)  # disarmed: no second alarm may arrive\n"
        "print('still alive')\n"
    )
    result = subprocess.run([sys.executable, "-c", probe], capture_output=True, text=True, timeout=30)
    assert result.returncode == 0, result.stderr
    assert "interrupted after 0.3" in result.stdout
    assert "still alive" in result.stdout
