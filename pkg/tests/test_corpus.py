"""Seeded corpus generation and the shipped fixtures."""

import json

import numpy as np
import pytest

from slicesim import dense
from slicesim.cli import fixture_dir
from slicesim.corpus import build, fixture_instances, generate, read_manifest, write_corpus
from slicesim.lattice import dumps_circuit, loads_circuit, validate_circuit


def test_generation_is_byte_identical(tmp_path):
    a = write_corpus(generate("near-identity", 3, 2, "chain", (12, 14)), tmp_path / "a")
    b = write_corpus(generate("near-identity", 3, 2, "chain", (12, 14)), tmp_path / "b")
    for name in sorted(p.name for p in a.parent.iterdir()):
        assert (a.parent / name).read_bytes() == (b.parent / name).read_bytes()
    other = generate("near-identity", 4, 1, "chain", (12,))[0]
    assert (a.parent / "near-identity-chain-s3-000.json").read_text() != dumps_circuit(other.circuit) + "\n"


def test_manifest_describes_each_instance(tmp_path):
    insts = generate("product", 1, 2, "chain", (14,), theta=0.3)
    data = read_manifest(write_corpus(insts, tmp_path))
    assert len(data["instances"]) == 2
    for entry, inst in zip(data["instances"], insts):
        c = loads_circuit((tmp_path / entry["file"]).read_text())
        assert entry["oracle"] == pytest.approx(dense.zero_probability(c), abs=1e-15)
        assert entry["slice_geometry"]["offset"] == 1
        assert all(abs(s["lambda1_normalized"] - 1) < 1e-10 for s in entry["slices"])
    (tmp_path / "manifest.json").write_text(json.dumps({"version": 99, "instances": []}))
    with pytest.raises(ValueError, match="version"):
        read_manifest(tmp_path)


@pytest.mark.parametrize("profile", ["near-identity", "random", "product", "adversarial", "entangled"])
def test_profiles_build_valid_circuits(profile):
    c = build(profile, "chain", 14, np.random.default_rng(0))
    assert validate_circuit(c).ok and c.depth == 2


def test_slabs_and_bad_arguments():
    c = build("near-identity", "slab", 6, np.random.default_rng(0))
    assert c.dims.as_tuple() == (2, 2, 6) and validate_circuit(c).ok
    for kwargs in (dict(profile="bogus"), dict(offset=2), dict(depth=3), dict(profile="entangled", shape="slab")):
        args = dict(profile="near-identity", shape="chain", length=12, rng=np.random.default_rng(0)) | kwargs
        with pytest.raises(ValueError):
            build(**args)


def test_heavy_profiles_meet_their_floor():
    for inst in generate("near-identity", 9, 2, "chain", (14,)):
        assert min(s["weight"] for s in inst.meta["slices"]) >= 0.5


def test_shipped_fixtures_are_current(tmp_path):
    write_corpus(fixture_instances(), tmp_path)
    shipped = fixture_dir()
    for path in sorted(tmp_path.iterdir()):
        assert (shipped / path.name).read_bytes() == path.read_bytes(), path.name
