"""Drive the HTTP service the way the browser UI does, start to finish.

Boots the server on a free port, creates a session on the corridor map,
steers with a few eastward cues, steps the robot, and tails the event
stream. Everything goes over real HTTP; nothing touches the library
directly.

    python3 demos/live_session.py
"""

import json
import math
import socket
import threading
import time
import urllib.error
import urllib.request

import uvicorn

from prefnav.service import app


def call(method, url, body=None):
    data = json.dumps(body).encode() if body is not None else None
    req = urllib.request.Request(url, data=data, method=method,
                                 headers={"Content-Type": "application/json"})
    with urllib.request.urlopen(req) as resp:
        raw = resp.read()
    return json.loads(raw) if raw else None


def tail_events(url, n):
    """First n events from the stream (backlog replays from seq 0)."""
    out = []
    with urllib.request.urlopen(urllib.request.Request(url)) as resp:
        for raw in resp:
            line = raw.decode().strip()
            if line.startswith("data:"):
                out.append(json.loads(line[5:]))
                if len(out) == n:
                    break
    return out


def main():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    base = "http://127.0.0.1:%d/api" % port

    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port,
                                           log_level="warning"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    while not server.started:
        time.sleep(0.05)

    maps = call("GET", base + "/maps")["maps"]
    print("server up on port %d, maps: %s" % (port, [m["id"] for m in maps]))

    made = call("POST", base + "/sessions",
                {"map_id": "corridor", "method": "path_pref",
                 "overrides": {"seed": 5, "iterations": 300}})
    sid = made["session"]["id"]
    goals = made["map"]["goal_candidates"]
    print("session %s on corridor, goal candidates %s" % (sid, goals))

    sess = base + "/sessions/" + sid
    for k in range(3):
        r = call("POST", sess + "/heading", {"angle": 0.0})
        marg = r["belief"]["goal_marginal"]
        print("cue %d: drag east -> snapped %-2s, goal marginal %s"
              % (k + 1, r["heading"],
                 "  ".join("%s %.3f" % (g, p) for g, p in zip(map(tuple, goals), marg))))
        call("POST", sess + "/step")

    ev = None
    while ev is None or ev["status"] == "running":
        ev = call("POST", sess + "/step")
    snap = call("GET", sess)
    print("finished: status %s at %s after %d steps, violations %d"
          % (snap["status"], tuple(snap["location"]), snap["step"],
             snap["violations"]))

    # cues after the terminal step are refused outright
    try:
        call("POST", sess + "/heading", {"angle": math.pi / 2})
    except urllib.error.HTTPError as err:
        print("post-terminal cue refused: %d %s"
              % (err.code, json.loads(err.read())["detail"]))

    events = tail_events(sess + "/events", n=4)
    print("event stream replays from the top: %s"
          % (", ".join("%s@t%d" % (e["type"], e["t"]) for e in events)))

    call("DELETE", sess)
    server.should_exit = True
    thread.join(timeout=5.0)
    print("session deleted, server down")


if __name__ == "__main__":
    main()
