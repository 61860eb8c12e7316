# %% [markdown]
# # Instances on disk and the command line
#
# Instances serialise to versioned JSON.  Saving, loading and saving again
# reproduces the bytes.

# %%
import subprocess
import sys
import tempfile
from pathlib import Path

from ckframe import InstanceSpec, gen_instance, load_instance, save_instance

tmp = Path(tempfile.mkdtemp())
inst = gen_instance(InstanceSpec(d=2, n=2, m=3, seed=7))
save_instance(tmp / "a.json", inst)
save_instance(tmp / "b.json", load_instance(tmp / "a.json"))
print((tmp / "a.json").read_bytes() == (tmp / "b.json").read_bytes())

# %% [markdown]
# The same workflow from the shell.

# %%
def ckframe(*args):
    res = subprocess.run([sys.executable, "-m", "ckframe", *args], capture_output=True, text=True)
    print(f"$ ckframe {' '.join(args)}  -> exit {res.returncode}")
    print(res.stdout.strip())

ckframe("gen", "-d", "1", "-n", "2", "-m", "3", "--seed", "1", "-o", str(tmp / "c.json"))
ckframe("bounds", str(tmp / "c.json"), "--kind", "controlled")
ckframe("verify", str(tmp / "c.json"), "--theorem", "sandwich")
ckframe("suite", "--trials", "5", "--reproducible")
