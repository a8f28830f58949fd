"""
Training the linear -> quantum -> linear model on zeros and ones
================================================================

A short run on the bundled digit fixture. Each sample costs a few circuit
populations, so even this small run takes a little while.
"""

from pathlib import Path

import numpy as np

from esqnn.mnist import load_mnist, make_binary_split
from esqnn.models import TrainConfig, build_model2, train

data = Path(__file__).resolve().parent.parent / "data" / "mnist01"
images, labels = load_mnist(data)
train_set, val_set = make_binary_split(images, labels, n_train=100, n_val=40, seed=0)

cfg = TrainConfig(eta=1e-4, epochs=10, batch_size=1, repeats=1, optimizer="adam", seed=0)
history = train(build_model2, train_set, val_set, cfg)

print("epoch  train cost  val acc")
print(f"{0:5d}  {history.initial_cost[0]:10.4f}  {history.initial_val_acc[0]:7.2f}")
for e in range(cfg.epochs):
    print(f"{e + 1:5d}  {history.train_cost[0, e]:10.4f}  {history.val_acc[0, e]:7.2f}")
print("final validation RMS error:", np.sqrt(history.val_cost[0, -1]))
