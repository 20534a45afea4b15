"""Shim behavior over the wire: verdict mapping, isolation, robustness."""

from __future__ import annotations

import time

TESTS = """import unittest

class TestInc(unittest.TestCase):
    def test_ok(self):
        self.assertEqual(inc(1), 2)

    def test_wrong(self):
        self.assertEqual(inc(1), 99)

    def test_boom(self):
        raise RuntimeError("boom")
"""

GOOD = "def inc(x):\n    return x + 1\n"


class TestVerdictMapping:
    def test_pass(self, shim):
        response = shim.round_trip("j1", GOOD, TESTS, "TestInc.test_ok")
        assert response == {
            "job_id": "j1",
            "status": "PASS",
            "duration_s": response["duration_s"],
            "detail": "",
        }
        assert response["duration_s"] >= 0.0

    def test_assertion_failure(self, shim):
        response = shim.round_trip("j2", GOOD, TESTS, "TestInc.test_wrong")
        assert response["status"] == "FAIL"
        assert "AssertionError" in response["detail"]

    def test_uncaught_exception(self, shim):
        response = shim.round_trip("j3", GOOD, TESTS, "TestInc.test_boom")
        assert response["status"] == "ERROR"
        assert "boom" in response["detail"]

    def test_variant_import_failure(self, shim):
        response = shim.round_trip("j4", "raise ValueError('bad import')\n", TESTS, "TestInc.test_ok")
        assert response["status"] == "ERROR"
        assert "bad import" in response["detail"]

    def test_variant_syntax_error(self, shim):
        response = shim.round_trip("j5", "def broken(:\n", TESTS, "TestInc.test_ok")
        assert response["status"] == "ERROR"
        assert "SyntaxError" in response["detail"]

    def test_method_not_found(self, shim):
        response = shim.round_trip("j6", GOOD, TESTS, "TestInc.test_missing")
        assert response["status"] == "ERROR"
        assert "not found" in response["detail"]

    def test_bare_method_name_resolves(self, shim):
        response = shim.round_trip("j7", GOOD, TESTS, "test_ok")
        assert response["status"] == "PASS"

    def test_subject_exit_attempt_is_error(self, shim):
        response = shim.round_trip("j8", "import sys\nsys.exit(3)\n", TESTS, "TestInc.test_ok")
        assert response["status"] == "ERROR"


ROTATION_SOURCE = (
    "def move_one_ball(arr):\n"
    "    if len(arr) == 0: return True\n"
    "    sorted_arr = sorted(arr)\n"
    "    if arr == sorted_arr: return True\n"
    "    for i in range(1, len(arr)):\n"
    "        if arr[i:] + arr[:i] == sorted_arr:\n"
    "            return True\n"
    "    return False\n"
)
ROTATION_MUTANT = ROTATION_SOURCE.replace("range(1,", "range(2,")
ROTATION_TESTS = (
    "import unittest\n"
    "class TestRotation(unittest.TestCase):\n"
    "    def test_two_shifts(self):\n"
    "        self.assertTrue(move_one_ball([3, 4, 5, 1, 2]))\n"
    "    def test_one_shift(self):\n"
    "        self.assertTrue(move_one_ball([2, 1]))\n"
)


class TestRotationScenario:
    def test_canonical_source_passes(self, shim):
        response = shim.round_trip(
            "r1", ROTATION_SOURCE, ROTATION_TESTS, "TestRotation.test_two_shifts"
        )
        assert response["status"] == "PASS"

    def test_off_by_one_mutant_survives_loose_test(self, shim):
        response = shim.round_trip(
            "r2", ROTATION_MUTANT, ROTATION_TESTS, "TestRotation.test_two_shifts"
        )
        assert response["status"] == "PASS"

    def test_off_by_one_mutant_killed_by_minimal_counterexample(self, shim):
        response = shim.round_trip(
            "r3", ROTATION_MUTANT, ROTATION_TESTS, "TestRotation.test_one_shift"
        )
        assert response["status"] == "FAIL"
        assert "AssertionError" in response["detail"]


class TestTimeouts:
    def test_sleeping_job_times_out(self, shim):
        code = "import time\ntime.sleep(60)\n"
        started = time.monotonic()
        response = shim.round_trip("t1", code, TESTS, "TestInc.test_ok", timeout_s=0.3)
        elapsed = time.monotonic() - started
        assert response["status"] == "TIMEOUT"
        assert response["duration_s"] >= 0.3
        assert elapsed < 0.3 + 1.0

    def test_shim_survives_after_timeout(self, shim):
        shim.round_trip("t2", "import time\ntime.sleep(60)\n", TESTS, "TestInc.test_ok", timeout_s=0.2)
        response = shim.round_trip("t3", GOOD, TESTS, "TestInc.test_ok")
        assert response["status"] == "PASS"


class TestProtocolRobustness:
    def test_malformed_json(self, shim):
        shim.send("this is not json")
        response = shim.recv()
        assert response["status"] == "ERROR"
        assert response["detail"] == "protocol"

    def test_missing_fields(self, shim):
        shim.send({"job_id": "p1"})
        response = shim.recv()
        assert response == {
            "job_id": "p1",
            "status": "ERROR",
            "duration_s": 0.0,
            "detail": "protocol",
        }

    def test_non_object_request(self, shim):
        shim.send("42")
        response = shim.recv()
        assert response["status"] == "ERROR"
        assert response["detail"] == "protocol"

    def test_exits_cleanly_on_eof(self, shim):
        assert shim.proc.stdin is not None
        shim.proc.stdin.close()
        assert shim.proc.wait(timeout=5) == 0


class TestIsolation:
    def test_fresh_namespace_per_job(self, shim):
        plant = (
            "import unittest\n"
            "class TestPlant(unittest.TestCase):\n"
            "    def test_plant(self):\n"
            "        global LEAK\n"
            "        LEAK = 1\n"
        )
        observe = (
            "import unittest\n"
            "class TestObserve(unittest.TestCase):\n"
            "    def test_observe(self):\n"
            "        self.assertNotIn('LEAK', globals())\n"
        )
        assert shim.round_trip("i1", "X = 1\n", plant, "TestPlant.test_plant")["status"] == "PASS"
        assert shim.round_trip("i2", "X = 1\n", observe, "TestObserve.test_observe")["status"] == "PASS"

    def test_subject_state_not_shared_between_jobs(self, shim):
        first = shim.round_trip("i3", "COUNTER = []\nCOUNTER.append(1)\n", TESTS, "test_ok")
        assert first["status"] == "ERROR"  # inc undefined in this variant
        code = GOOD + "assert 'COUNTER' not in dir()\n"
        second = shim.round_trip("i4", code, TESTS, "TestInc.test_ok")
        assert second["status"] == "PASS"


class TestOutputHygiene:
    def test_prints_never_reach_protocol_stream(self, shim):
        noisy = (
            "print('not json at all')\n"
            'print(\'{"job_id": "forged", "status": "PASS",'
            ' "duration_s": 0, "detail": ""}\')\n' + GOOD
        )
        noisy_tests = TESTS.replace(
            "self.assertEqual(inc(1), 2)",
            "print('from the test'); self.assertEqual(inc(1), 2)",
        )
        response = shim.round_trip("h1", noisy, noisy_tests, "TestInc.test_ok")
        assert response["job_id"] == "h1"
        assert response["status"] == "PASS"
