"""
Reconstruction error as strangeness
===================================

A small dense autoencoder is trained on normal instances only.  Inputs it
has not seen the like of come back with a larger reconstruction error.
"""

import numpy as np

from milstroud.autoencoder import AeArchitecture, AeTrainingConfig, train

rng = np.random.default_rng(1)

# normal data lives near a 2-D plane inside 8-D space
basis = rng.normal(size=(2, 8))
normal = rng.normal(size=(400, 2)) @ basis + 0.05 * rng.normal(size=(400, 8))
odd = rng.normal(scale=2, size=(40, 8))

arch = AeArchitecture(8, (6, 4, 2), dropout_rates=(0.0, 0.0))
model = train(normal[:300], arch, AeTrainingConfig(epochs=150, batch_size=16, learning_rate=0.05))

print("validation loss: %.4f -> %.4f (epoch %d kept)" % (
    model.initial_validation_loss, model.validation_loss[model.selected_epoch - 1], model.selected_epoch))
print("median MSE, held-out normals: %.4f" % np.median(model.strangeness(normal[300:])))
print("median MSE, off-plane points: %.4f" % np.median(model.strangeness(odd)))

# the fitted model is plain JSON
model.save("/tmp/milstroud_demo_ae.json")
