# coding: utf-8

# # A pointer-generator on a copy task
#
# The task: the headline is the first three tokens of the source. A model that
# can point at source positions should learn it quickly. Training here is
# shortened so the script finishes in well under a minute; the test suite
# runs the full 2,000 steps.

# In[1]:

import tempfile
from pathlib import Path

import numpy as np

from headline_bench.seq2seq import (
    PgnConfig, accuracy, beam_search, copy_task, final_distribution, forward_loss, grad_check, init_params, train,
    write_curve,
)


# The output distribution mixes generation and copying. With the gate at one
# half, a token that is both in the vocabulary and attended gets mass from both.

# In[2]:

final_distribution(0.5, np.full(4, 0.25), [1.0], [2])


# Analytic gradients against central differences on a tiny model.

# In[3]:

tiny = PgnConfig(vocab_size=12, embed_dim=4, hidden_dim=3, init_scale=1.0)
print(grad_check(init_params(tiny), copy_task(2, 12, min_len=4, max_len=6), lam=1.0))


# In[4]:

cfg = PgnConfig(vocab_size=50, embed_dim=32, hidden_dim=32, max_tgt_len=5, seed=0)
data = copy_task(5000, vocab_size=50, seed=0)
held_out = copy_task(300, vocab_size=50, seed=99)
params, curve = train(cfg, data, steps=600, batch_size=32, val=held_out[:100], eval_every=100)
for point in curve:
    print(point)
write_curve(curve, Path(tempfile.mkdtemp()) / "curve.csv")


# In[5]:

print("teacher-forced accuracy:", round(accuracy(params, held_out), 3))


# Decoding with a beam. The decoded ids should be the first three source ids.

# In[6]:

for ex in held_out[:5]:
    print(ex.src, "->", beam_search(params, ex.src, beam=4))


# The loss exposes per-step diagnostics, including the copy gate.

# In[7]:

loss, diag = forward_loss(params, held_out[0].src, held_out[0].tgt)
print(round(loss, 4), [round(float(p), 3) for p in diag["p_gen"]])
