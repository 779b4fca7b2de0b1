"""Two-stage feature extraction pipeline: quadrant-sliced backbone features,
autoencoder latents, shallow classifiers, and t-SNE inspection."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
