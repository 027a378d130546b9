"""Bengali math word problems: data, seq2seq equation generation, evaluation.

The package turns Bengali arithmetic word problems into equations with a
small numpy transformer, solves the equations exactly with rational
arithmetic, and scores predictions with BLEU and solution accuracy. See the
submodules: dataset, synth, preprocess, model, equation, metrics, cli.
"""

__version__ = "0.1.0"
