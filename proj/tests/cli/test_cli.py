"""Exit codes and output of the mirror command line."""

import json
import os
import subprocess
import sys
import tempfile

BINARY, FIXTURES = sys.argv[1], sys.argv[2]
failures = []


def run(*args, env=None, root=None):
    full_env = {k: v for k, v in os.environ.items() if not k.startswith("MIRROR_")}
    full_env.update(env or {})
    cmd = [BINARY]
    if root:
        cmd += ["--data-root", root, "--config", os.path.join(root, "config.json")]
    cmd += list(args)
    return subprocess.run(cmd, capture_output=True, text=True, env=full_env, timeout=240)


def check(name, condition, proc=None):
    if condition:
        print(f"ok   {name}")
    else:
        detail = f" (exit {proc.returncode}; stdout {proc.stdout!r}; stderr {proc.stderr!r})" if proc else ""
        print(f"FAIL {name}{detail}")
        failures.append(name)


def fixture(name):
    return os.path.join(FIXTURES, name)


with tempfile.TemporaryDirectory() as root:
    with open(os.path.join(root, "config.json"), "w") as f:
        json.dump({"reducer": {"epochs": 40}, "density": {"resolution": 32}, "embedding": {"max_retries": 0}}, f)

    p = run()
    check("no arguments is a usage error", p.returncode == 1, p)
    p = run("frobnicate")
    check("unknown subcommand is a usage error", p.returncode == 1, p)
    p = run("build", fixture("takeout_watch_history.json"), "--provider", "psychic", root=root)
    check("bad option value is a usage error", p.returncode == 1, p)
    p = run("--help")
    check("help exits cleanly", p.returncode == 0 and "build" in p.stdout, p)

    with open(os.path.join(root, "bad-config.json"), "w") as f:
        json.dump({"reducer": {"kk": 3}}, f)
    p = run("--config", os.path.join(root, "bad-config.json"), "list")
    check("unknown config key is a usage error", p.returncode == 1 and "reducer.kk" in p.stderr, p)

    p = run("build", os.path.join(root, "absent.json"), root=root)
    check("missing input is a data error", p.returncode == 2, p)
    p = run("build", fixture("takeout_malformed.json"), root=root)
    check("malformed export is a data error", p.returncode == 2, p)
    check("malformed export names stage and record", "[stage ingest]" in p.stderr and "[record 2]" in p.stderr, p)

    events = os.path.join(root, "events.jsonl")
    p = run("ingest", fixture("takeout_watch_history.json"), "--transcripts", fixture("transcripts.json"),
            "-o", events, root=root)
    check("ingest writes events", p.returncode == 0 and p.stdout.startswith("9 events written to "), p)
    with open(events) as f:
        lines = [json.loads(line) for line in f if line.strip()]
    check("events file holds one record per line", len(lines) == 9 and all("event_id" in e for e in lines))

    p = run("build", events, "--name", "fixture", root=root)
    check("first build reports built", p.returncode == 0 and p.stdout.startswith("built: "), p)
    p = run("build", events, "--name", "fixture", root=root)
    check("second build reports reused cache", p.returncode == 0 and p.stdout.startswith("reused cache: "), p)
    p = run("--json", "build", events, "--name", "fixture", root=root)
    body = json.loads(p.stdout) if p.returncode == 0 else {}
    check("json output carries id and reuse flag",
          body.get("reused") is True and len(body.get("dataset_id", "")) == 16 and body.get("event_count") == 9, p)
    dataset_id = body.get("dataset_id", "missing")
    check("dataset directory exists", os.path.isfile(os.path.join(body.get("path", "/nonexistent"), "manifest.json")))

    p = run("--json", "build", events, "--name", "fixture", "--seed", "5", root=root)
    other = json.loads(p.stdout) if p.returncode == 0 else {}
    check("a different seed builds a new dataset", other.get("reused") is False and other.get("dataset_id") != dataset_id, p)

    p = run("list", root=root)
    check("list names both datasets", p.returncode == 0 and len(p.stdout.strip().splitlines()) == 2, p)
    p = run("--json", "frames", dataset_id, root=root)
    frames = json.loads(p.stdout).get("frames", []) if p.returncode == 0 else []
    check("frames end with every event", bool(frames) and frames[-1]["count"] == 9, p)
    p = run("export", dataset_id, "--format", "svg", root=root)
    check("svg export", p.returncode == 0 and p.stdout.startswith("<svg"), p)
    p = run("export", "0000000000000000", root=root)
    check("unknown dataset is a data error", p.returncode == 2, p)
    p = run("overlay", dataset_id, other.get("dataset_id", "missing"), root=root)
    check("overlay succeeds", p.returncode == 0 and p.stdout.startswith("overlay "), p)

    p = run("build", events, "--provider", "remote", root=root,
            env={"MIRROR_EMBEDDING_ENDPOINT": "http://127.0.0.1:9/embed"})
    check("unreachable provider exits 3", p.returncode == 3, p)

if failures:
    print(f"{len(failures)} check(s) failed")
    sys.exit(1)
print("all checks passed")
