"""Run the bundled figure recipes through the command-line layer.

Each recipe is a plain configuration file; the output is a CSV table with
the resolved configuration and a summary in its header. The checksums
shipped with the recipes pin the exact bytes.

Run ``python demos/04_recipes.py``.
"""

import json

from pondera import recipes

for name, command in recipes.RUNS:
    status, text = recipes.render_run(name, command)
    summary = [ln[len("# summary "):] for ln in text.splitlines() if ln.startswith("# summary ")]
    rows = sum(1 for ln in text.splitlines() if ln and not ln.startswith("#")) - 1
    print(f"{name:18s} {command:10s} exit {status}  {rows} rows")
    for s in summary:
        k, v = s.split(" = ", 1)
        v = json.loads(v)
        if isinstance(v, list) and len(v) > 4:
            v = f"[{len(v)} values]"
        print(f"    {k} = {v}")

check = recipes.verify()
print("\nchecksums:", "all match" if all(ok for ok, _ in check.values()) else
      ", ".join(k for k, (ok, _) in check.items() if not ok) + " differ")
