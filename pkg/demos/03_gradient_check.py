"""Finite-difference check of the hand-written backward passes.

Central differences in double precision cannot resolve gradients much
smaller than ulp(loss) / (2 eps), roughly 4e-11 for a loss near 5. The tiny
model (fc 32, encoder 16, decoder 32, four components) has a few hundred
parameters, mostly decoder recurrent weights, whose true gradient is near
that size, so the worst relative error in double sits above 1e-4. Running
the same finite differences in extended precision removes that floor.
Takes about a minute and a half.

    python3 demos/03_gradient_check.py
"""

import time

import numpy as np

from argptr import model as M
from argptr.cli import gradcheck_setup, run_gradcheck

sizes = dict(input_fc_size=32, encoder_hidden=16, decoder_hidden=32)

mc, params, R, links, types = gradcheck_setup(sizes, n=4, seed=0)
loss, grads = M.loss_and_grads(params, mc, R, links, types)
mags = np.concatenate([np.abs(g).ravel() for g in grads.values()])
mags = mags[mags > 0]
print(f"loss {float(loss):.4f}, ulp(loss)/(2 eps) = {np.spacing(float(loss)) / 2e-5:.1e}")
print(f"{(mags < 1e-7).sum()} of {mags.size} nonzero gradient entries are below 1e-7")

for label, dtype in (("double", None), ("extended", np.longdouble)):
    t0 = time.time()
    err = run_gradcheck(sizes, n=4, seed=0, fd_dtype=dtype)
    print(f"{label:>8} finite differences: max relative error {err:.2e} ({time.time() - t0:.1f}s)")
