# %% [markdown]
# # Benchmarking, and the same thing from the command line
#
# run_benchmark splits the data with seeds base, base+1, ..., trains every
# mode on each split and reports mean +- variance of each metric.

# %%
import json
import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np

from fairbayes import GroupSpec, generate_synthetic
from fairbayes.harness import RunConfig, benchmark_table, run_benchmark

specs = [
    GroupSpec(("A",), 3000, 0.45, [[0.5] * 2, [1.5] * 2]),
    GroupSpec(("B",), 800, 0.30, [[-0.3] * 2, [0.7] * 2]),
    GroupSpec(("O",), 1000, 0.17, [[-0.8] * 2, [0.2] * 2]),
]
data = generate_synthetic(specs, seed=4, privileged=[("A",)])
result = run_benchmark(RunConfig.from_dict({"splits": {"count": 3, "seed": 0}}), data)
print(benchmark_table(result))

# %% [markdown]
# The CLI takes JSON configs; paths inside them are relative to the config file.

# %%
work = Path(tempfile.mkdtemp())
(work / "synth.json").write_text(json.dumps({
    "seed": 4, "sensitive": ["race"], "features": ["x0", "x1"], "privileged": [["A"]],
    "schema_out": "schema.json",
    "groups": [{"values": [g.values[0]], "n": g.n, "base_rate": g.base_rate, "means": np.asarray(g.means).tolist()} for g in specs],
}))
(work / "bench.json").write_text(json.dumps({
    "data": "data.csv", "schema": "schema.json", "splits": {"count": 3, "seed": 0},
}))


def fairbayes(*args):
    out = subprocess.run([sys.executable, "-m", "fairbayes.cli", *args], capture_output=True, text=True)
    print(out.stdout or out.stderr)
    return out.returncode


fairbayes("synth", "--config", str(work / "synth.json"), "--out", str(work / "data.csv"))
fairbayes("benchmark", "--config", str(work / "bench.json"), "--out", str(work / "result.json"))
