import numpy as np
import pytest

from clusterexp import models
from clusterexp.mpo import build, contract_open_chain
from clusterexp.pepo import PatchSpec, build_pepo, contract_patch
from clusterexp.serialize import CorruptOperatorError, load_mpo, load_pepo, save_mpo, save_pepo
from clusterexp.validation import validate_mpo

XXZ = models.xxz_term(0.5)


def test_mpo_round_trip(tmp_path):
    mpo, _ = build(XXZ, -0.5j, 5)
    path = tmp_path / "a.mpo"
    save_mpo(mpo, path)
    back = load_mpo(path)
    assert back.p == 5 and back.t == mpo.t
    assert back.virtual.level_dims == (1, 4, 16)
    assert np.array_equal(back.tensor, mpo.tensor)
    assert np.array_equal(back.h.term, XXZ.term)
    assert np.allclose(contract_open_chain(back, 6), contract_open_chain(mpo, 6))


def test_saving_is_deterministic(tmp_path):
    mpo, _ = build(XXZ, -0.5j, 3)
    save_mpo(mpo, tmp_path / "a")
    save_mpo(build(XXZ, -0.5j, 3)[0], tmp_path / "b")
    assert (tmp_path / "a").read_bytes() == (tmp_path / "b").read_bytes()


def test_pepo_round_trip(tmp_path):
    pepo, _ = build_pepo(XXZ, -0.3j)
    path = tmp_path / "a.pepo"
    save_pepo(pepo, path)
    back = load_pepo(path)
    assert back.include_plaquette
    assert np.array_equal(back.tensor, pepo.tensor)
    assert np.allclose(contract_patch(back, PatchSpec(2, 2)), contract_patch(pepo, PatchSpec(2, 2)))


def tensor_offset(path, mpo):
    return path.stat().st_size - 16 * mpo.tensor.size


def test_corrupted_entry_fails_exactness(tmp_path):
    mpo, _ = build(XXZ, -0.5j, 3)
    path = tmp_path / "a.mpo"
    save_mpo(mpo, path)
    raw = bytearray(path.read_bytes())
    off = tensor_offset(path, mpo)
    val = np.frombuffer(bytes(raw[off:off + 8]), dtype="<f8")[0] + 1e-3
    raw[off:off + 8] = np.array([val], dtype="<f8").tobytes()
    path.write_bytes(bytes(raw))
    with pytest.raises(CorruptOperatorError):
        load_mpo(path)
    results = validate_mpo(load_mpo(path, validate=False))
    assert not results[0].passed and results[0].name == "cluster-exactness"


def test_bad_magic_and_truncation(tmp_path):
    mpo, _ = build(XXZ, -0.5j, 2)
    path = tmp_path / "a.mpo"
    save_mpo(mpo, path)
    raw = path.read_bytes()
    path.write_bytes(raw[:-8])
    with pytest.raises(CorruptOperatorError):
        load_mpo(path)
    path.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(CorruptOperatorError):
        load_mpo(path)
    path.write_bytes(raw[:10])
    with pytest.raises(CorruptOperatorError):
        load_mpo(path)
    with pytest.raises(CorruptOperatorError):
        load_pepo(tmp_path / "a.mpo")
