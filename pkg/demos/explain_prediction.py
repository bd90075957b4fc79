"""Explain a single model prediction two ways and cross-check them.

Trains a small MLP on the planted benchmark, picks one positive
document, and attributes its score to input dimensions with LIME (local
ridge surrogate on mask perturbations) and Kernel SHAP (weighted least
squares over coalitions).  The two methods answer slightly different
questions but should broadly agree on which dimensions matter, and SHAP
must satisfy efficiency exactly: base + sum(phi) == model score.
"""

import numpy as np

from warspeech.embed import embed_hashed_ngrams
from warspeech.interpret import kernel_shap, lime_explain
from warspeech.nn.spec import ModelSpec, OptimizerConfig, TrainConfig
from warspeech.nn.training import predict_scores, train
from warspeech.seeds import derive_seed
from warspeech.synth import planted_corpus

DIM = 128


def main() -> None:
    corpus = planted_corpus(n_docs=300, dim=DIM, timesteps=8, embed_seed=0,
                            distractor_chunks=(5, 6, 7), seed=13)
    X = embed_hashed_ngrams(corpus.texts, dim=DIM, seed=0).values.astype(np.float64)
    y = np.asarray(corpus.labels)

    spec = ModelSpec(kind="mlp", input_dim=DIM, hidden_sizes=(128, 32),
                     mlp_dropout=0.0, seed=derive_seed(0, "train:mlp"))
    cfg = TrainConfig(epochs=8, batch_size=32, shuffle_seed=derive_seed(0, "data"))
    opt = OptimizerConfig(kind="adam", learning_rate=0.003)
    params, _ = train(spec, X, y, cfg, opt)

    def score_fn(rows):
        return predict_scores(spec, params, np.asarray(rows, dtype=np.float64))

    doc = int(np.flatnonzero(y == 1)[0])
    x = X[doc]
    background = X.mean(axis=0)
    print(f"explaining doc {doc} (label {y[doc]}), model score {score_fn(x[None])[0]:.4f}\n")

    exp = lime_explain(score_fn, x, background, n_samples=2048,
                       k_features=8, seed=derive_seed(0, "explain:lime:demo"))
    print(f"LIME  (surrogate R^2 {exp.fidelity:.4f}):")
    for dim, weight in exp.selected:
        print(f"  dim {dim:3d}  weight {weight:+.4f}")

    phi, base = kernel_shap(score_fn, x, background, n_coalitions=4096,
                            seed=derive_seed(0, "explain:shap:demo"))
    top = np.argsort(-np.abs(phi))[:8]
    print("\nKernel SHAP:")
    for dim in top:
        print(f"  dim {dim:3d}  phi {phi[dim]:+.4f}")
    gap = abs(base + phi.sum() - score_fn(x[None])[0])
    print(f"\nefficiency check: |base + sum(phi) - f(x)| = {gap:.2e}")

    overlap = len({d for d, _ in exp.selected} & set(int(t) for t in top))
    print(f"agreement: {overlap}/8 of the top dimensions are shared")


if __name__ == "__main__":
    main()
