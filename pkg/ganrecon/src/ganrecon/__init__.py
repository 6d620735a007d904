"""ganrecon: paired image-to-image adversarial trainer.

Consumes image pairs produced by the wavesono pipeline (grayscale PNG/PGM or
f32-raw files) and trains a small U-Net generator against a patch
discriminator with the weighted objective alpha_p * slot + alpha_l1 * L1 +
alpha_adv * adversarial. Everything is seed-reproducible on CPU.
"""

__version__ = "0.1.0"
