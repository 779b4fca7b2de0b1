"""Smoke tests for the drfg python bindings: a few frozen oracle values per
exposed operation, plus one tiny end-to-end run through the config path."""

import json
import math
import os
import tempfile
import unittest

import numpy as np

import drfg


class TestNumericCore(unittest.TestCase):
    def test_relu_and_softmax(self):
        np.testing.assert_array_equal(drfg.relu(np.array([-2.0, 0.0, 3.0])), [0.0, 0.0, 3.0])
        p = drfg.softmax(np.array([math.log(1), math.log(2), math.log(3)]))
        np.testing.assert_allclose(p, [1 / 6, 2 / 6, 3 / 6], atol=1e-12)
        self.assertAlmostEqual(drfg.softmax(np.array([1000.0, 0.0]))[0], 1.0, places=12)

    def test_losses(self):
        self.assertAlmostEqual(drfg.mse_loss(np.zeros(2), np.ones(2)), 1.0)
        self.assertAlmostEqual(
            drfg.cce_loss(np.array([0.5, 0.5]), np.array([1.0, 0.0])), math.log(2), places=12
        )

    def test_dense_net_fit_is_deterministic(self):
        rng = np.random.default_rng(0)
        X = rng.normal(size=(16, 3))
        Y = rng.normal(size=(16, 2))

        def run():
            net = drfg.make_dense_net(3, [(5, "relu"), (2, "linear")], seed=7)
            history = drfg.fit(net, X, Y, batch_size=8, epochs=4, loss="mse", shuffle_seed=3)
            return history, drfg.forward(net, np.array([0.1, -0.2, 0.3]))

        h1, out1 = run()
        h2, out2 = run()
        self.assertEqual(h1, h2)
        np.testing.assert_array_equal(out1, out2)
        self.assertEqual(len(h1), 4)

    def test_imaging_roundtrip(self):
        quad = np.full((224, 224, 3), 255.0, dtype=np.float32)
        out = drfg.preprocess(quad, "scale_symmetric")
        self.assertTrue(np.all(out == 1.0))

        img = np.zeros((448, 448, 3), dtype=np.float32)
        img[:224, 224:, :] = 9.0
        quads = drfg.slice_quadrants(img)
        self.assertEqual(len(quads), 4)
        self.assertTrue(np.all(quads[1] == 9.0))
        self.assertTrue(np.all(quads[0] == 0.0))

    def test_gap_and_standardizer(self):
        fmap = np.array([[[1.0], [2.0]], [[3.0], [4.0]]], dtype=np.float32)
        np.testing.assert_allclose(drfg.global_average_pool(fmap), [2.5])

        train = np.array([[0.0, 2.0], [2.0, 2.0]], dtype=np.float32)
        s = drfg.fit_standardizer(train)
        np.testing.assert_allclose(s.means, [1.0, 2.0])
        np.testing.assert_allclose(s.deviations, [1.0, 0.0])
        z = drfg.apply_standardizer(s, np.array([[3.0, 2.0]], dtype=np.float32))
        self.assertAlmostEqual(float(z[0, 0]), 2.0, places=4)
        self.assertEqual(float(z[0, 1]), 0.0)

    def test_metrics_oracle(self):
        cm = drfg.confusion_matrix(np.array([0, 0, 1, 1]), np.array([0, 1, 1, 1]), 2)
        np.testing.assert_array_equal(cm, [[1, 1], [0, 2]])
        m = drfg.classification_metrics(cm)
        self.assertAlmostEqual(m["accuracy"], 0.75, places=4)
        self.assertAlmostEqual(m["precision"], 0.8333, places=4)
        self.assertAlmostEqual(m["recall"], 0.75, places=4)
        self.assertAlmostEqual(m["f1"], 0.7333, places=4)

    def test_svm_hand_case(self):
        X = np.array([[0.0, 0.0], [2.0, 2.0]])
        model = drfg.svm_train(X, np.array([0, 1]), kernel="linear", C=1e6, seed=1)
        pred = drfg.svm_predict(model, np.array([[3.0, 3.0], [0.0, 0.0]]))
        np.testing.assert_array_equal(pred, [1, 0])

    def test_tsne_shapes(self):
        rng = np.random.default_rng(5)
        X = np.vstack([rng.normal(0, 0.1, size=(20, 5)), rng.normal(20, 0.1, size=(20, 5))])
        P, bandwidths, fallbacks = drfg.compute_p_matrix(X, 5.0)
        self.assertEqual(P.shape, (40, 40))
        self.assertAlmostEqual(float(P.sum()), 1.0, places=9)
        self.assertEqual(fallbacks, 0)

        Y, kl = drfg.tsne_embed(X, perplexity=5.0, iterations=250, seed=2)
        self.assertEqual(Y.shape, (40, 2))
        self.assertTrue(np.all(np.isfinite(Y)))
        self.assertEqual(len(kl), 250)

    def test_autoencoder_encode(self):
        net = drfg.build_autoencoder(12, 8, 3, seed=4)
        self.assertEqual(net.depth, 4)
        z = drfg.encode(net, np.zeros(12))
        self.assertEqual(z.shape, (3,))


class TestEndToEnd(unittest.TestCase):
    def test_stub_experiment_through_config(self):
        rng = np.random.default_rng(11)
        with tempfile.TemporaryDirectory() as tmp:
            values = np.vstack(
                [rng.normal(10 * c, 1.0, size=(30, 16)).astype(np.float32) for c in range(3)]
            )
            labels = np.repeat(np.arange(3, dtype=np.int32), 30)
            store = os.path.join(tmp, "blobs.drfg")
            drfg.save_feature_store(store, values, labels, ["a", "b", "c"])

            loaded = drfg.load_feature_store(store)
            np.testing.assert_array_equal(loaded["values"], values)
            self.assertEqual(loaded["classes"], ["a", "b", "c"])

            config = {
                "task": "three_class",
                "n_trials": 2,
                "master_seed": 3,
                "classifiers": ["slp", "svm"],
                "feature_store": "blobs.drfg",
                "autoencoder": {"hidden_dim": 8, "latent_dim": 4},
                "train": {"batch_size": 16, "epochs": 30, "learning_rate": 0.01},
                "tsne": {"enabled": False},
                "output_dir": "out",
            }
            config_path = os.path.join(tmp, "config.json")
            with open(config_path, "w") as f:
                json.dump(config, f)

            report = drfg.run_experiment(config_path)
            self.assertEqual(report["completed_trials"], 2)
            self.assertGreaterEqual(report["aggregates"]["slp"]["accuracy"]["mean"], 0.9)
            self.assertGreaterEqual(report["aggregates"]["svm"]["accuracy"]["mean"], 0.9)
            self.assertTrue(os.path.exists(os.path.join(tmp, "out", "experiment_trials.csv")))


if __name__ == "__main__":
    unittest.main()
