# coding: utf-8

# # Pairwise human evaluation
#
# Export blinded comparison tasks, then aggregate nine votes per item.

# In[1]:

import tempfile
from pathlib import Path

import numpy as np

from headline_bench import Article
from headline_bench.humaneval import DRAW, HUMAN, MODEL, VoteRecord, aggregate, export_tasks, read_key, read_tasks

workdir = Path(tempfile.mkdtemp())


# The task file never says which side is the model. That lives in the key.

# In[2]:

arts = [Article(f"n{i}", f"заголовок {i}", f"текст новости {i}", "ria") for i in range(6)]
export_tasks(arts, [f"сгенерированный {i}" for i in range(6)], seed=1,
             task_path=workdir / "tasks.tsv", key_path=workdir / "key.tsv")
print(read_tasks(workdir / "tasks.tsv")[0])
print(read_key(workdir / "key.tsv"))


# Each item's outcome is the plurality choice, and a tie for first place is a
# draw.

# In[3]:

def votes_for(item, m, h, d):
    return [VoteRecord(item, f"a{k}", c) for k, c in enumerate([MODEL] * m + [HUMAN] * h + [DRAW] * d)]


rng = np.random.default_rng(0)
votes = votes_for("tie", 4, 4, 1)
for i in range(30):
    votes += votes_for(f"x{i}", *rng.multinomial(9, [0.5, 0.4, 0.1]))
summary = aggregate(votes)
print(summary.outcomes["tie"])
print(f"model {summary.model_win_rate:.2f}  draw {summary.draw_rate:.2f}  human {summary.human_win_rate:.2f}")
print("five or more votes:", summary.model_supermajority_rate, summary.human_supermajority_rate)
print("pooled per-vote shares:", summary.pooled_vote_rates)
