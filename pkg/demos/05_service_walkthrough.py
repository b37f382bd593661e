"""
Driving the live service end to end
===================================

Start the HTTP service in a background thread, train a small model,
upload it, run a compressed-time session, inject a tube rupture from
the outside, and read the diagnosis back off the event log.  Only the
public API is used; this is the same surface the operator console
talks to.
"""

import json
import socket
import threading
import time
import urllib.request

import uvicorn

from pwrdiag import pipeline, service
from pwrdiag.plantsim import FaultKind, ScenarioSpec, generate_corpus
from pwrdiag.rbfn import RbfnConfig


def call(method, path, body=None):
    data = None if body is None else json.dumps(body).encode()
    req = urllib.request.Request(
        f"http://127.0.0.1:{PORT}{path}", data=data, method=method,
        headers={"content-type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        return json.loads(resp.read())


# 1. Serve on a free loopback port.
probe = socket.socket()
probe.bind(("127.0.0.1", 0))
PORT = probe.getsockname()[1]
probe.close()

server = uvicorn.Server(uvicorn.Config(
    service.create_app(), host="127.0.0.1", port=PORT, log_level="error"))
threading.Thread(target=server.run, daemon=True).start()
while not server.started:
    time.sleep(0.05)
print(f"service listening on port {PORT}")

# 2. No model yet; the service says so rather than guessing.
print("model state before upload:", call("GET", "/models/current"))

# 3. Train a small diagnoser and upload it over the wire.
corpus = generate_corpus([
    ScenarioSpec(duration_steps=80, rng_seed=21, onset_time=0.0),
    ScenarioSpec(fault_kind=FaultKind.SGTR_A, severity_percent=20.0,
                 onset_time=0.0, duration_steps=80, rng_seed=22),
    ScenarioSpec(fault_kind=FaultKind.SGTR_B, severity_percent=40.0,
                 onset_time=0.0, duration_steps=80, rng_seed=23),
    ScenarioSpec(fault_kind=FaultKind.SGTR_B, severity_percent=20.0,
                 onset_time=0.0, duration_steps=80, rng_seed=24),
])
model = pipeline.train_diagnoser(
    corpus, RbfnConfig(mse_goal=0.002, spread=4.0, max_neurons=120))
meta = call("POST", "/models", pipeline._model_to_json(model))
print(f"uploaded model: {meta['hidden_neurons']} neurons, "
      f"{meta['retained_components']} components")

# 4. Open a session at 100x time compression with a short diagnosis
# window so decisions come quickly.
created = call("POST", "/sessions", {
    "speed": 100, "window_frames": 30, "window_stride": 10,
    "scenario": {"duration_steps": 100000, "noise_sigma": 0.01,
                 "rng_seed": 6, "onset_time": 0.0}})
sid = created["session_id"]
print(f"session {sid}: one frame every {created['tick_period_ms']:.0f} ms")

# Let it idle a moment, then hit it with a 40% rupture on loop B.
time.sleep(0.5)
print("injecting SgtrB at 40%...")
call("POST", f"/sessions/{sid}/fault", {"kind": "SgtrB", "severity": 40})

# 5. Poll until a diagnosis lands on the faulted loop.
decision = None
for _ in range(200):
    info = call("GET", f"/sessions/{sid}")
    decision = info["last_diagnosis"]
    if decision and decision["location_code"] == 2:
        break
    time.sleep(0.1)
assert decision is not None
print(f"diagnosis at t={decision['time']:.0f}s: "
      f"{decision['location_name']}, {decision['size_percent']:.1f}% "
      f"over {decision['window_frames']} frames")

# 6. The event log kept the whole story in order: the injection, the
# threshold alarms as channels left their deadbands, then diagnoses.
log = call("GET", f"/sessions/{sid}/log")
print()
print(f"event log ({log['total']} entries), first ten:")
for entry in log["events"][:10]:
    parts = []
    for key in ("kind", "severity_percent", "channel", "location_name",
                "size_percent", "action"):
        if key in entry["payload"]:
            value = entry["payload"][key]
            parts.append(f"{key}={value:.1f}" if isinstance(value, float)
                         else f"{key}={value}")
    print(f"  t={entry['timestamp']:>6.1f}  {entry['kind']:<16} "
          + ", ".join(parts))

call("POST", f"/sessions/{sid}/control", {"action": "pause"})
server.should_exit = True
print()
print("done; server asked to shut down")
