"""Fine-tunes compact encoder classifiers on exported gateway datasets and
serves them behind the encoder scoring wire schema."""

__version__ = "0.1.0"
