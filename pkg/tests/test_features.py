import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from texfeat.errors import ConfigMismatchError, FeatureFormatError, ParameterError, StatisticsError
from texfeat.features import (
    BLOCKS,
    FEATURE_INDEX,
    FEATURE_NAMES,
    N_FEATURES,
    ExtractionConfig,
    FeatureTable,
    extract,
    extract_table,
    read_csv,
    require_same_config,
    standardize,
    write_csv,
)
from texfeat.glcm import glcm_all_directions, stats
from texfeat.imageio import GrayImage, LabeledPatch, PatchSource, tile
from texfeat.patterns import histogram, lbp_map, ltp_maps


def _table(rng, n=6, labels=("a", "b")):
    return FeatureTable(
        [labels[i % len(labels)] for i in range(n)],
        [f"img{i}.pgm:0:{i}" for i in range(n)],
        rng.standard_normal((n, N_FEATURES)),
        ExtractionConfig(ltp_t=7),
        {"split_seed": "3"},
    )


def test_layout_constants():
    assert N_FEATURES == 808 == len(FEATURE_NAMES)
    assert FEATURE_INDEX["glcm_0_energy"] == 768
    assert FEATURE_INDEX["glcm_315_variance"] == 807
    assert FEATURE_INDEX["ltp_upper_0"] == 256 and FEATURE_INDEX["ltp_lower_0"] == 512
    assert (BLOCKS["lbp"].stop - BLOCKS["lbp"].start, BLOCKS["ltp"].stop - BLOCKS["ltp"].start,
            BLOCKS["glcm"].stop - BLOCKS["glcm"].start) == (256, 512, 40)


def test_extract_layout_matches_components(rng):
    img = GrayImage(rng.integers(0, 256, (20, 17), dtype=np.uint8))
    cfg = ExtractionConfig(ltp_t=4)
    v = extract(img, cfg)
    assert v.shape == (808,)
    maps = ltp_maps(img, 4)
    assert np.array_equal(v[:256], histogram(lbp_map(img)).bins)
    assert np.array_equal(v[256:512], histogram(maps.upper).bins)
    assert np.array_equal(v[512:768], histogram(maps.lower).bins)
    glcm_block = [x for g in glcm_all_directions(img) for x in stats(g).as_tuple()]
    assert np.array_equal(v[768:], glcm_block)
    for block in ("lbp", "ltp_upper", "ltp_lower"):
        assert abs(v[BLOCKS[block]].sum() - 1) <= 1e-9


def test_constant_patch():
    v = extract(GrayImage(np.full((9, 9), 77, np.uint8)))
    assert v[255] == 1 and v[:255].sum() == 0
    assert v[256] == 1 and v[512] == 1
    assert v[256:768].sum() == 2
    assert np.array_equal(v[768:].reshape(8, 5), np.tile([1.0, 0.0, 1.0, 0.0, 0.0], (8, 1)))


def test_raw_histograms_and_quantized_glcm(rng):
    img = GrayImage(rng.integers(0, 256, (10, 10), dtype=np.uint8))
    v = extract(img, ExtractionConfig(histogram_normalize=False, glcm_levels=16))
    assert v[:256].sum() == 64
    assert v[768 + 3] <= 2 * np.log(16)


def test_determinism_across_threads(rng):
    px = rng.integers(0, 256, (64, 64), dtype=np.uint8)
    patches = tile(GrayImage(px), 16, "x")
    one = extract_table(patches, jobs=1)
    many = extract_table(patches, jobs=4)
    assert one == many
    assert np.array_equal(extract(patches[0]), extract(patches[0]))


def test_config_validation():
    with pytest.raises(ParameterError):
        ExtractionConfig(ltp_t=0)
    with pytest.raises(ParameterError):
        ExtractionConfig(variance_mode="x")
    with pytest.raises(ConfigMismatchError):
        require_same_config(ExtractionConfig(), ExtractionConfig(ltp_t=9))


@settings(max_examples=100, deadline=None)
@given(st.tuples(st.integers(4, 16), st.integers(4, 16)).flatmap(
    lambda hw: arrays(np.uint8, hw, elements=st.integers(0, 200))), st.integers(1, 55))
def test_gray_shift_confined_to_glcm_block(px, shift):
    base = extract(GrayImage(px))
    shifted = extract(GrayImage((px.astype(int) + shift).astype(np.uint8)))
    assert np.array_equal(base[:768], shifted[:768])


def test_gray_shift_changes_glcm_block(rng):
    px = rng.integers(0, 200, (16, 16), dtype=np.uint8)
    base, shifted = extract(GrayImage(px)), extract(GrayImage(px + 40))
    assert np.array_equal(base[:768], shifted[:768])
    # quantized to 4 levels the shift moves values across bin boundaries
    cfg = ExtractionConfig(glcm_levels=4)
    assert not np.array_equal(extract(GrayImage(px), cfg)[768:], extract(GrayImage(px + 40), cfg)[768:])


def test_standardize_constant_dimension(rng):
    t = _table(rng)
    t.values[:, 0] = 5.0
    out, st_ = standardize(t)
    assert (out.values[:, 0] == 0).all()
    assert st_.dev[0] == 0


def test_standardize_two_rows():
    vals = np.zeros((2, N_FEATURES))
    vals[:, 0] = [1, 3]
    out, _ = standardize(FeatureTable(["a", "b"], ["s", "t"], vals))
    assert out.values[:, 0].tolist() == [-1.0, 1.0]


def test_standardize_reapply_has_zero_mean(rng):
    t = _table(rng, 9)
    _, stats_ = standardize(t)
    assert np.abs(stats_.apply(t.values).mean(axis=0)).max() <= 1e-9


def test_standardize_single_row(rng):
    with pytest.raises(StatisticsError):
        standardize(_table(rng, 1))


def test_csv_roundtrip(tmp_path, rng):
    t = _table(rng)
    t.values[0, :3] = [1e-300, -0.0, 0.1 + 0.2]
    t.labels[1] = "has,comma"
    write_csv(t, tmp_path / "a.csv")
    back = read_csv(tmp_path / "a.csv")
    assert back == t
    write_csv(back, tmp_path / "b.csv")
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_csv_header_block(tmp_path, rng):
    write_csv(_table(rng), tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    assert lines[:7] == [
        "# texfeat-format=1", "# ltp_t=7", "# glcm_levels=256", "# glcm_distance=1",
        "# histogram_normalize=true", "# variance_mode=paper", "# split_seed=3",
    ]
    assert lines[7].startswith("label,source,f0,f1,") and lines[7].endswith(",f807")
    assert len(lines[7].split(",")) == 810


@pytest.mark.parametrize("mutate,match", [
    (lambda s: s.replace("# texfeat-format=1", "# texfeat-format=2"), "version"),
    (lambda s: s.replace("# ltp_t=7\n", ""), "missing metadata"),
    (lambda s: s.replace("label,source,f0", "lbl,source,f0"), "column header"),
    (lambda s: s.rstrip("\n") + ",9\n", r":10: 811 columns"),
    (lambda s: s.replace("# glcm_levels=256", "# glcm_levels=many"), "bad metadata"),
])
def test_csv_malformed(tmp_path, rng, mutate, match):
    write_csv(_table(rng, 2), tmp_path / "a.csv")
    text = (tmp_path / "a.csv").read_text()
    (tmp_path / "a.csv").write_text(mutate(text))
    with pytest.raises(FeatureFormatError, match=match):
        read_csv(tmp_path / "a.csv")


def test_csv_non_numeric_cell(tmp_path, rng):
    t = _table(rng, 2)
    write_csv(t, tmp_path / "a.csv")
    lines = (tmp_path / "a.csv").read_text().splitlines()
    cells = lines[-1].split(",")
    cells[2 + 5] = "abc"
    lines[-1] = ",".join(cells)
    (tmp_path / "a.csv").write_text("\n".join(lines) + "\n")
    with pytest.raises(FeatureFormatError, match="column f5"):
        read_csv(tmp_path / "a.csv")


def test_labeled_patch_extract_uses_image(rng):
    img = GrayImage(rng.integers(0, 256, (8, 8), dtype=np.uint8))
    assert np.array_equal(extract(LabeledPatch(img, "a", PatchSource("p"))), extract(img))
