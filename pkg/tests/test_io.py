import json

import numpy as np
import pytest

from promplearn import io as promp_io
from promplearn.basis import BasisConfig
from promplearn.errors import FileFormatError
from promplearn.incremental import (StepwiseConfig, add_demonstration,
                                    init_session)
from promplearn.model import Demonstration, sample_trajectory
from promplearn.synthlab import ReferenceSpec, make_reference, sample_dataset


def quick_ref():
    return make_reference(ReferenceSpec(n_basis=5, n_dof=2,
                                        num_via_trajectories=20, seed=0))


class TestTrajectoryFiles:
    def test_round_trip_exact(self, tmp_path):
        ref = quick_ref()
        demo = sample_trajectory(ref, 23, seed=5)
        path = tmp_path / "demo.csv"
        promp_io.save_trajectory(path, demo)
        loaded = promp_io.load_trajectory(path)
        np.testing.assert_array_equal(loaded.states, demo.states)
        np.testing.assert_array_equal(loaded.timestamps, demo.timestamps)

    def test_header_and_columns(self, tmp_path):
        ref = quick_ref()
        demo = sample_trajectory(ref, 8, seed=1)
        path = tmp_path / "demo.csv"
        promp_io.save_trajectory(path, demo)
        header = path.read_text().splitlines()[0]
        assert header == "t,y1,y2"

    def test_phase_recomputed_on_load(self, tmp_path):
        phases = np.linspace(0, 1, 9)
        demo = Demonstration(timestamps=2.0 + 3.0 * phases,
                             states=np.ones((9, 1)), phases=phases)
        path = tmp_path / "demo.csv"
        promp_io.save_trajectory(path, demo)
        loaded = promp_io.load_trajectory(path)
        assert loaded.phases[0] == 0.0 and loaded.phases[-1] == 1.0

    def test_dataset_round_trip(self, tmp_path):
        ref = quick_ref()
        demos = sample_dataset(ref, 4, 12, seed=2)
        promp_io.save_dataset(tmp_path / "set", demos)
        loaded = promp_io.load_dataset(tmp_path / "set")
        assert len(loaded) == 4
        for a, b in zip(demos, loaded):
            np.testing.assert_array_equal(a.states, b.states)

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,y1\n0,1\n1,2\n")
        with pytest.raises(FileFormatError):
            promp_io.load_trajectory(path)

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(FileFormatError):
            promp_io.load_dataset(tmp_path)


class TestPrompFiles:
    def test_round_trip_bitwise(self, tmp_path):
        ref = quick_ref()
        path = tmp_path / "ref.json"
        promp_io.save_promp(path, ref)
        loaded, extras = promp_io.load_promp(path)
        assert extras is None
        np.testing.assert_array_equal(loaded.mu_w, ref.mu_w)
        np.testing.assert_array_equal(loaded.sigma_w, ref.sigma_w)
        np.testing.assert_array_equal(loaded.sigma_y, ref.sigma_y)
        np.testing.assert_array_equal(loaded.basis.centers, ref.basis.centers)
        assert loaded.basis.width == ref.basis.width

    def test_schema_keys(self, tmp_path):
        ref = quick_ref()
        path = tmp_path / "ref.json"
        promp_io.save_promp(path, ref)
        doc = json.loads(path.read_text())
        assert doc["format_version"] == 1
        assert set(doc) == {"format_version", "K", "D", "basis", "mu_w",
                            "sigma_w", "sigma_y"}
        assert len(doc["mu_w"]) == 10
        assert len(doc["sigma_w"]) == 10 and len(doc["sigma_w"][0]) == 10

    def test_small_asymmetry_silently_fixed(self, tmp_path):
        ref = quick_ref()
        path = tmp_path / "ref.json"
        promp_io.save_promp(path, ref)
        doc = json.loads(path.read_text())
        doc["sigma_w"][0][1] += 1e-12
        path.write_text(json.dumps(doc))
        loaded, _ = promp_io.load_promp(path)
        np.testing.assert_array_equal(loaded.sigma_w, loaded.sigma_w.T)

    def test_large_asymmetry_rejected(self, tmp_path):
        ref = quick_ref()
        path = tmp_path / "ref.json"
        promp_io.save_promp(path, ref)
        doc = json.loads(path.read_text())
        doc["sigma_w"][0][1] += 1.0
        path.write_text(json.dumps(doc))
        with pytest.raises(FileFormatError):
            promp_io.load_promp(path)

    def test_unknown_version_rejected(self, tmp_path):
        path = tmp_path / "v9.json"
        path.write_text(json.dumps({"format_version": 9}))
        with pytest.raises(FileFormatError):
            promp_io.load_promp(path)

    def test_invalid_json_rejected(self, tmp_path):
        path = tmp_path / "junk.json"
        path.write_text("{not json")
        with pytest.raises(FileFormatError):
            promp_io.load_promp(path)


class TestResume:
    def test_resume_is_bitwise_identical(self, tmp_path):
        ref = quick_ref()
        demos = sample_dataset(ref, 100, 40, seed=9)
        basis = BasisConfig.create(5, 2)
        cfg = StepwiseConfig(beta=0.75)

        straight = init_session(cfg, basis)
        for demo in demos:
            straight, _ = add_demonstration(straight, demo)

        resumed = init_session(cfg, basis)
        for demo in demos[:50]:
            resumed, _ = add_demonstration(resumed, demo)
        path = tmp_path / "snapshot.json"
        promp_io.save_promp(path, resumed.params, resumed)
        params, extras = promp_io.load_promp(path)
        resumed = promp_io.resume_state(params, extras)
        for demo in demos[50:]:
            resumed, _ = add_demonstration(resumed, demo)

        np.testing.assert_array_equal(straight.params.mu_w,
                                      resumed.params.mu_w)
        np.testing.assert_array_equal(straight.params.sigma_w,
                                      resumed.params.sigma_w)
        np.testing.assert_array_equal(straight.params.sigma_y,
                                      resumed.params.sigma_y)
        np.testing.assert_array_equal(straight.u2, resumed.u2)
        assert straight.n == resumed.n
        assert straight.delta == resumed.delta

    def test_resume_requires_state(self, tmp_path):
        ref = quick_ref()
        path = tmp_path / "ref.json"
        promp_io.save_promp(path, ref)
        params, extras = promp_io.load_promp(path)
        with pytest.raises(FileFormatError):
            promp_io.resume_state(params, extras)

    def test_stepwise_state_schema(self, tmp_path):
        basis = BasisConfig.create(3, 2)
        state = init_session(StepwiseConfig(beta=0.8, delta_min=0.01), basis)
        ref = quick_ref()
        demo = sample_trajectory(ref, 10, seed=3)
        # one update so the accumulators are non-trivial
        state, _ = add_demonstration(
            init_session(StepwiseConfig(beta=0.8, delta_min=0.01),
                         BasisConfig.create(3, 2)), demo)
        path = tmp_path / "s.json"
        promp_io.save_promp(path, state.params, state)
        doc = json.loads(path.read_text())
        sub = doc["stepwise_state"]
        assert set(sub) == {"u1", "u2", "u3", "eta", "t_eff", "n", "beta",
                            "delta_min"}
        assert sub["n"] == 2
        assert sub["beta"] == 0.8
        assert sub["delta_min"] == 0.01
