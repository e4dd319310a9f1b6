"""annotate-serve driven over HTTP, including a restart and a port clash."""

import json
import os
import shutil
import signal
import socket
import subprocess
import time
import urllib.error
import urllib.request

import pytest

CLI = os.environ.get("FACEALIGN_CLI")
pytestmark = pytest.mark.skipif(not CLI, reason="FACEALIGN_CLI not set")


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


def start(run_root, port):
    proc = subprocess.Popen([CLI, "annotate-serve", "--run-root", str(run_root), "--port", str(port)],
                            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    deadline = time.time() + 20
    while time.time() < deadline:
        if proc.poll() is not None:
            return proc
        try:
            urllib.request.urlopen(f"http://127.0.0.1:{port}/v1/progress", timeout=1)
            return proc
        except (urllib.error.URLError, ConnectionError):
            time.sleep(0.1)
    proc.kill()
    raise RuntimeError("server did not start")


def stop(proc):
    proc.send_signal(signal.SIGTERM)
    out, _ = proc.communicate(timeout=20)
    return proc.returncode, out


def get(port, path):
    with urllib.request.urlopen(f"http://127.0.0.1:{port}{path}", timeout=10) as r:
        body = r.read()
        return r.status, json.loads(body) if body and r.headers.get_content_type() == "application/json" else body


def post(port, path, payload):
    req = urllib.request.Request(f"http://127.0.0.1:{port}{path}", data=json.dumps(payload).encode(),
                                 headers={"Content-Type": "application/json"}, method="POST")
    try:
        with urllib.request.urlopen(req, timeout=30) as r:
            return r.status, json.loads(r.read())
    except urllib.error.HTTPError as e:
        return e.code, json.loads(e.read())


@pytest.fixture
def run_root(tmp_path, portrait):
    root = tmp_path / "run"
    (root / "enf").mkdir(parents=True)
    (root / "fnf").mkdir()
    shutil.copy(portrait, root / "enf" / "a.png")
    shutil.copy(portrait, root / "fnf" / "b.png")
    return root


def test_round_trip_survives_restart(run_root):
    port = free_port()
    proc = start(run_root, port)
    try:
        status, task = get(port, "/v1/tasks/next?client=t1")
        assert status == 200
        assert task["id"] == "b.png"  # fnf comes before enf
        status, rec = post(port, f"/v1/tasks/{task['id']}/annotation",
                           {"left": {"x": 150.5, "y": 103.5}, "right": {"x": 105.5, "y": 100.5}, "client": "t1"})
        assert status == 200
        assert rec["outcome"] == "manual_success"
        _, lease = get(port, "/v1/tasks/next?client=t2")
        assert lease["id"] == "a.png"
    finally:
        code, out = stop(proc)
    assert code == 0
    assert "stopped" in out

    proc = start(run_root, port)
    try:
        _, progress = get(port, "/v1/progress")
        # The done task is remembered; the lease held by t2 is not.
        assert progress == {"pending": 1, "leased": 0, "done": 1, "manual_success": 1, "manual_failed": 0}
        _, task = get(port, "/v1/tasks/next?client=t3")
        assert task["id"] == "a.png"
    finally:
        stop(proc)
    assert (run_root / "out" / "b.png").exists()
    lines = (run_root / "manifest.jsonl").read_text().splitlines()
    assert len(lines) == 1


def test_occupied_port_is_an_error(run_root):
    port = free_port()
    first = start(run_root, port)
    try:
        second = subprocess.run([CLI, "annotate-serve", "--run-root", str(run_root), "--port", str(port)],
                                capture_output=True, text=True, timeout=20)
        assert second.returncode == 2
        assert "cannot bind" in second.stderr
    finally:
        stop(first)


def test_missing_run_root(tmp_path):
    r = subprocess.run([CLI, "annotate-serve", "--run-root", str(tmp_path / "nope"), "--port", "0"],
                       capture_output=True, text=True, timeout=20)
    assert r.returncode == 2
