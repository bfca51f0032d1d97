"""Clinical chatbot safety gateway.

Classifies user queries into a hierarchical intent taxonomy in a single
step and routes each to a guardrail action and tool set, with the dataset
pipeline and evaluation harness needed to build and validate classifiers
for that taxonomy.
"""

__version__ = "0.1.0"
