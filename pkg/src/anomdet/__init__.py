"""Image anomaly detection on a self-contained neural-network core.

Four detectors over one deterministic numpy engine: a supervised CNN
classifier, a convolutional autoencoder scored by reconstruction error
and latent kernel density (KD-CAE), a noise-injected autoencoder
(NI-CAE), and a DCGAN generator/discriminator pair.
"""

__version__ = "0.1.0"
