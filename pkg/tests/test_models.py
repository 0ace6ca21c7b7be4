from pathlib import Path

import numpy as np
import pytest

from elmc import gp, mlp, models, pca
from elmc.data import AffineTransform, split
from elmc.datagen import GeneratorSpec, generate_dataset
from elmc.models import TrainingConfig
from elmc.optim import make_rng


def small_ds(name="linear", grid=(6, 6), n=30, seed=0):
    return generate_dataset(GeneratorSpec(name=name, grid_shape=grid,
                                          n_samples=n, seed=seed))


FAST = TrainingConfig(epochs=10, batch_size=8, gp_iters=20)


class TestTrainingConfig:
    def test_dict_round_trip(self):
        cfg = TrainingConfig(epochs=7, widths_disentangle=(16, 4),
                             latent_dim=4, mlp_widths=(8,))
        back = TrainingConfig.from_dict(cfg.to_dict())
        assert back == cfg

    def test_default_widths(self):
        cfg = TrainingConfig()
        wd, wr, latent = cfg.resolve_widths(36)
        assert wd == (72, 36) and wr == (72, 36) and latent == 36

    def test_latent_dim_propagates(self):
        cfg = TrainingConfig(latent_dim=5)
        wd, wr, latent = cfg.resolve_widths(36)
        assert wd == (72, 5) and latent == 5

    def test_bypass(self):
        cfg = TrainingConfig(identity_bypass=True)
        assert cfg.resolve_widths(36) == ((), (), 36)

    def test_bypass_latent_conflict(self):
        cfg = TrainingConfig(identity_bypass=True, latent_dim=4)
        with pytest.raises(ValueError, match="latent_dim"):
            cfg.resolve_widths(36)


class TestLmc:
    def test_train_and_predict_shapes(self):
        ds = small_ds()
        train, test = split(ds, 20, seed=0)
        model = models.train_lmc(train, 3, FAST, seed=0)
        pred = models.predict_lmc(model, test.inputs)
        assert pred.shape == test.fields.shape

    def test_interpolates_training_set(self):
        # rank-3 data with a rank-3 basis: training fields are recovered
        # well once the GPs fit the smooth coefficient maps
        ds = small_ds(n=25)
        cfg = TrainingConfig(gp_iters=300)
        model = models.train_lmc(ds, 3, cfg, seed=0)
        pred = models.predict_lmc(model, ds.inputs)
        assert models.evaluate_mse(pred, ds.fields) < 1e-3

    def test_determinism(self):
        ds = small_ds()
        a = models.train_lmc(ds, 2, FAST, seed=4)
        b = models.train_lmc(ds, 2, FAST, seed=4)
        assert np.array_equal(models.predict_lmc(a, ds.inputs[:3]),
                              models.predict_lmc(b, ds.inputs[:3]))

    def test_too_few_samples(self):
        ds = small_ds(n=1)
        with pytest.raises(ValueError, match="at least 2"):
            models.train_lmc(ds, 1, FAST, seed=0)

    def test_full_rank_reconstructs_training_fields(self):
        # r = m complete basis: PCA round-trip of training fields is exact
        ds = small_ds(n=8)
        model = models.train_lmc(ds, 8, FAST, seed=0)
        Yn = model.normalizer.apply(ds.fields)
        back = pca.reconstruct(model.basis, pca.project(model.basis, Yn))
        assert np.max(np.abs(back - Yn)) <= 1e-8

    def test_zero_gp_means_give_mean_field(self):
        # a GP with zero targets has a zero posterior mean, so the
        # prediction collapses to the PCA mean field
        basis = pca.PcaBasis(mean=np.array([1.0, 2.0, 3.0, 4.0]),
                             basis=np.array([[1.0], [0.0], [0.0], [0.0]]),
                             component_variances=np.array([1.0]))
        hyper = gp.RbfHyperparams(0.0, np.zeros(1), np.log(0.01))
        g = gp.GpModel(hyper, np.array([[0.0], [1.0]]), np.zeros(2))
        model = models.LmcModel(basis=basis, gps=[g],
                                normalizer=AffineTransform(),
                                grid_shape=(2, 2))
        pred = models.predict_lmc(model, np.array([[0.5]]))
        assert np.allclose(pred[0], basis.mean, atol=1e-12)

    def test_rank_one_hand_built_model(self):
        # explicit small-instance oracle: one latent GP on two points,
        # pushed through a known rank-1 basis by hand
        v = np.array([0.6, 0.8])
        mean = np.array([0.25, -0.75])
        basis = pca.PcaBasis(mean=mean, basis=v[:, None],
                             component_variances=np.array([1.0]))
        hyper = gp.RbfHyperparams(0.0, np.zeros(1), np.log(0.01))
        X = np.array([[0.0], [1.0]])
        t = np.array([0.5, -0.5])
        g = gp.GpModel(hyper, X, t)
        model = models.LmcModel(basis=basis, gps=[g],
                                normalizer=AffineTransform(),
                                grid_shape=(1, 2))
        xq = np.array([[0.3]])
        z, _ = gp.predict(g, xq)
        want = mean + z[0] * v
        pred = models.predict_lmc(model, xq)
        assert np.allclose(pred[0], want, atol=1e-10)


class TestElmc:
    def test_train_and_predict_shapes(self):
        ds = small_ds(n=20)
        cfg = TrainingConfig(epochs=5, batch_size=8, gp_iters=10,
                             widths_disentangle=(16, 8), latent_dim=8,
                             widths_reconstruct=(16, 36))
        model = models.train_elmc(ds, 3, cfg, seed=0)
        pred = models.predict_elmc(model, ds.inputs[:4])
        assert pred.shape == (4, 36)

    def test_identity_bypass_equals_lmc(self):
        # with empty MLP halves the composition collapses to plain
        # PCA-GP, so the two trainers must agree to within round-off
        ds = small_ds(name="front", grid=(8, 8), n=24)
        cfg = TrainingConfig(epochs=3, batch_size=8, gp_iters=30,
                             identity_bypass=True)
        em = models.train_elmc(ds, 4, cfg, seed=0)
        lm = models.train_lmc(ds, 4, cfg, seed=0)
        Xq = make_rng(1).random((6, 3))
        pe = models.predict_elmc(em, Xq)
        pl = models.predict_lmc(lm, Xq)
        assert np.max(np.abs(pe - pl)) <= 1e-8

    def test_latent_variances_shape_and_sign(self):
        ds = small_ds(n=15)
        model = models.train_lmc(ds, 2, FAST, seed=0)
        means, variances = models.predict_latent(model, ds.inputs[:5])
        assert means.shape == (5, 2) and variances.shape == (5, 2)
        assert np.all(variances >= 0.0)

    def test_determinism(self):
        ds = small_ds(n=16)
        cfg = TrainingConfig(epochs=4, batch_size=8, gp_iters=10,
                             latent_dim=6)
        a = models.train_elmc(ds, 3, cfg, seed=2)
        b = models.train_elmc(ds, 3, cfg, seed=2)
        assert np.array_equal(models.predict_elmc(a, ds.inputs[:3]),
                              models.predict_elmc(b, ds.inputs[:3]))

    def test_determinism_of_serialized_model(self, tmp_path):
        ds = small_ds(n=12)
        cfg = TrainingConfig(epochs=3, batch_size=6, gp_iters=10, latent_dim=4)
        paths = []
        for run in range(2):
            model = models.train_elmc(ds, 2, cfg, seed=5)
            path = tmp_path / f"run{run}.json"
            models.save_model(model, path)
            paths.append(path)
        assert paths[0].read_bytes() == paths[1].read_bytes()

    def test_prediction_equals_explicit_composition(self):
        ds = small_ds(n=14)
        cfg = TrainingConfig(epochs=3, batch_size=8, gp_iters=10, latent_dim=5)
        model = models.train_elmc(ds, 2, cfg, seed=0)
        Xq = make_rng(3).random((4, 3))
        Z, _ = models.predict_latent(model, Xq)
        explicit = model.normalizer.invert(
            mlp.forward_reconstruct(model.net,
                                    pca.reconstruct(model.basis, Z)))
        assert np.array_equal(models.predict_elmc(model, Xq), explicit)


class TestMlpBaseline:
    def test_train_and_predict_shapes(self):
        ds = small_ds(n=20)
        cfg = TrainingConfig(epochs=10, batch_size=8, mlp_widths=(16,))
        model = models.train_mlp_baseline(ds, cfg, seed=0)
        pred = models.predict_mlp_baseline(model, ds.inputs[:5])
        assert pred.shape == (5, 36)

    def test_input_dim_check(self):
        ds = small_ds(n=10)
        model = models.train_mlp_baseline(ds, FAST, seed=0)
        with pytest.raises(ValueError, match="query dimension"):
            models.predict_mlp_baseline(model, np.zeros((1, 5)))

    def test_zero_epochs_is_initial_forward_pass(self):
        ds = small_ds(n=10)
        cfg = TrainingConfig(epochs=0, mlp_widths=(8,))
        model = models.train_mlp_baseline(ds, cfg, seed=3)
        init = mlp.init_layers(ds.l, (8, ds.d), seed=3)
        want = model.normalizer.invert(
            mlp.forward_layers(init, ds.inputs[:4]))
        assert np.array_equal(models.predict_mlp_baseline(model, ds.inputs[:4]),
                              want)


class TestEvaluateMse:
    def test_zero(self):
        assert models.evaluate_mse(np.ones((2, 2)), np.ones((2, 2))) == 0.0

    def test_hand_value(self):
        assert models.evaluate_mse(np.array([[3.0]]), np.array([[1.0]])) == 4.0

    def test_constant_offset(self):
        rng = make_rng(4)
        truth = rng.normal(size=(3, 5))
        assert models.evaluate_mse(truth + 0.1, truth) == pytest.approx(
            0.01, rel=1e-12)

    def test_naive_loop_oracle(self):
        rng = make_rng(5)
        pred = rng.normal(size=(3, 7))
        truth = rng.normal(size=(3, 7))
        want = sum((pred[i, j] - truth[i, j]) ** 2
                   for i in range(3) for j in range(7)) / 21
        assert abs(models.evaluate_mse(pred, truth) - want) <= 1e-12

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape mismatch"):
            models.evaluate_mse(np.zeros((1, 2)), np.zeros((2, 1)))


class TestPersistence:
    def check_round_trip(self, model, predict, tmp_path, Xq):
        path = tmp_path / "model.json"
        models.save_model(model, path)
        back = models.load_model(path)
        assert np.array_equal(predict(model, Xq), predict(back, Xq))
        # a second save of the loaded model is byte-identical
        path2 = tmp_path / "model2.json"
        models.save_model(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_lmc_round_trip(self, tmp_path):
        ds = small_ds(n=12)
        model = models.train_lmc(ds, 2, FAST, seed=0)
        self.check_round_trip(model, models.predict_lmc, tmp_path, ds.inputs[:4])

    def test_elmc_round_trip(self, tmp_path):
        ds = small_ds(n=12)
        cfg = TrainingConfig(epochs=3, batch_size=6, gp_iters=10, latent_dim=4)
        model = models.train_elmc(ds, 2, cfg, seed=1)
        self.check_round_trip(model, models.predict_elmc, tmp_path, ds.inputs[:4])

    def test_mlp_round_trip(self, tmp_path):
        ds = small_ds(n=12)
        cfg = TrainingConfig(epochs=3, batch_size=6, mlp_widths=(8,))
        model = models.train_mlp_baseline(ds, cfg, seed=2)
        self.check_round_trip(model, models.predict_mlp_baseline, tmp_path,
                              ds.inputs[:4])

    def test_config_preserved(self, tmp_path):
        ds = small_ds(n=10)
        model = models.train_lmc(ds, 2, FAST, seed=0)
        path = tmp_path / "model.json"
        models.save_model(model, path)
        back = models.load_model(path)
        assert back.config == model.config
        assert TrainingConfig.from_dict(back.config) == FAST

    def test_rank_gp_count_mismatch_rejected(self, tmp_path):
        ds = small_ds(n=10)
        model = models.train_lmc(ds, 2, FAST, seed=0)
        path = tmp_path / "model.json"
        models.save_model(model, path)
        import json
        doc = json.loads(path.read_text())
        doc["gps"] = doc["gps"][:1]
        path.write_text(json.dumps(doc))
        with pytest.raises(ValueError, match="rank"):
            models.load_model(path)

    def test_golden_fixture_pinned(self, tmp_path):
        # a hand-built 1-GP, rank-1, 2-layer model serializes to exactly
        # the pinned fixture bytes, guarding the on-disk format
        fixture = Path(__file__).resolve().parent / "fixtures" / "elmc_r1.json"
        dis = mlp.Layer(weight=np.eye(2), bias=np.zeros(2),
                        activation="identity")
        rec = mlp.Layer(weight=np.array([[0.5, -0.25], [1.0, 0.75]]),
                        bias=np.array([0.125, -0.5]), activation="identity")
        net = mlp.MlpNet([dis], [rec], d=2, latent_dim=2)
        basis = pca.PcaBasis(mean=np.array([0.25, -0.75]),
                             basis=np.array([[0.6], [0.8]]),
                             component_variances=np.array([1.5]))
        hyper = gp.RbfHyperparams(0.0, np.array([0.0]), np.log(0.01))
        g = gp.GpModel(hyper, np.array([[0.0], [1.0]]), np.array([0.5, -0.5]))
        model = models.ElmcModel(net=net, basis=basis, gps=[g],
                                 normalizer=AffineTransform(scale=2.0,
                                                            offset=-0.5),
                                 grid_shape=(1, 2), config={})
        path = tmp_path / "model.json"
        models.save_model(model, path)
        assert path.read_bytes() == fixture.read_bytes()
        back = models.load_model(fixture)
        Xq = np.array([[0.25], [0.75]])
        assert np.array_equal(models.predict_elmc(back, Xq),
                              models.predict_elmc(model, Xq))

    def test_bad_schema_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"schema": 99, "kind": "lmc"}\n')
        with pytest.raises(ValueError, match="schema"):
            models.load_model(path)

    def test_unknown_kind_rejected(self, tmp_path):
        path = tmp_path / "model.json"
        path.write_text('{"schema": 1, "kind": "mystery", "grid": [2, 2], '
                        '"normalizer": {"scale": 1, "offset": 0}}\n')
        with pytest.raises(ValueError, match="kind"):
            models.load_model(path)
