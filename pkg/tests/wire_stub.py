"""Minimal wire-protocol child used to exercise the subprocess client in
isolation: reads JSON request lines, runs the code in a fresh interpreter,
writes JSON response lines."""

import json
import subprocess
import sys
import time


def main() -> None:
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            request = json.loads(line)
            code = request["code"]
            timeout_s = float(request.get("timeout_s", 10))
            stdin_data = request.get("stdin", "")
        except (ValueError, KeyError, TypeError):
            response = {
                "stdout": "",
                "stderr": "protocol error",
                "exit_code": -2,
                "duration_ms": 0,
                "timed_out": False,
            }
            print(json.dumps(response), flush=True)
            continue
        started = time.monotonic()
        try:
            proc = subprocess.run(
                [sys.executable, "-c", code],
                input=stdin_data,
                capture_output=True,
                text=True,
                timeout=timeout_s,
            )
            stdout, stderr, exit_code, timed_out = proc.stdout, proc.stderr, proc.returncode, False
        except subprocess.TimeoutExpired as exc:
            stdout = exc.stdout or ""
            stderr = exc.stderr or ""
            if isinstance(stdout, bytes):
                stdout = stdout.decode("utf-8", "replace")
            if isinstance(stderr, bytes):
                stderr = stderr.decode("utf-8", "replace")
            exit_code, timed_out = -9, True
        duration_ms = int((time.monotonic() - started) * 1000)
        response = {
            "stdout": stdout,
            "stderr": stderr,
            "exit_code": exit_code,
            "duration_ms": duration_ms,
            "timed_out": timed_out,
        }
        print(json.dumps(response), flush=True)


if __name__ == "__main__":
    main()
