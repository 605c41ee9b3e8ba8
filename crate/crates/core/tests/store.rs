use std::fs;
use std::path::Path;

use image::GrayImage;
use proptest::prelude::*;
use slicewise::store::{generate_phantoms, ingest_slice_stack, DatasetManifest, LabelMask, VolumeGrid};
use slicewise::Error;

fn write_slice(dir: &Path, prefix: &str, z: usize, size: u32, fill: impl Fn(u32, u32) -> u8) {
    let img = GrayImage::from_fn(size, size, |x, y| image::Luma([fill(x, y)]));
    img.save(dir.join(format!("{prefix}_{z:04}.pgm"))).unwrap();
}

/// Square blob in every slice except `empty_z`.
fn write_volume(root: &Path, id: &str, nz: usize, size: u32, empty_z: Option<usize>) {
    let dir = root.join(id);
    fs::create_dir_all(&dir).unwrap();
    for z in 0..nz {
        write_slice(&dir, "img", z, size, |x, y| ((x + y) % 256) as u8);
        let on = Some(z) != empty_z;
        write_slice(&dir, "msk", z, size, |x, y| if on && (4..12).contains(&x) && (4..12).contains(&y) { 255 } else { 0 });
    }
}

#[test]
fn ingest_two_volumes() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    write_volume(&src, "a", 4, 16, None);
    write_volume(&src, "b", 4, 16, Some(2));
    let out = tmp.path().join("ds");
    let m = ingest_slice_stack(&src, "ds", &out).unwrap();

    assert_eq!(m.len(), 2);
    assert_eq!(m.entries[0].labeled_slices, vec![0, 1, 2, 3]);
    assert_eq!(m.entries[1].labeled_slices, vec![0, 1, 3]);
    assert!(m.entries.iter().all(|e| Path::new(&e.volume_path).is_relative()));

    let reloaded = DatasetManifest::load(&out).unwrap();
    assert_eq!(reloaded.to_json(), m.to_json());
    let (vol, mask) = reloaded.load_volume("b").unwrap();
    assert_eq!(vol.dims(), [16, 16, 4]);
    assert_eq!(mask.foreground_count(), 3 * 64);
    // gray level 20 at (10, 10) maps to 20/255
    assert_eq!(vol.slice(0)[10 * 16 + 10], 20.0 / 255.0);
}

#[test]
fn ingest_rejects_mixed_slice_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let src = tmp.path().join("src");
    let dir = src.join("v");
    fs::create_dir_all(&dir).unwrap();
    write_slice(&dir, "img", 0, 64, |_, _| 0);
    write_slice(&dir, "msk", 0, 64, |_, _| 0);
    write_slice(&dir, "img", 1, 32, |_, _| 0);
    write_slice(&dir, "msk", 1, 32, |_, _| 0);
    let err = ingest_slice_stack(&src, "ds", &tmp.path().join("out")).unwrap_err();
    match &err {
        Error::SliceDims { path, expected, found } => {
            assert!(path.ends_with("img_0001.pgm"), "{path:?}");
            assert_eq!((*expected, *found), ((64, 64), (32, 32)));
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(err.to_string().contains("img_0001.pgm"));
}

#[test]
fn ingest_needs_mask_for_every_image() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("src/v");
    fs::create_dir_all(&dir).unwrap();
    write_slice(&dir, "img", 0, 8, |_, _| 0);
    let err = ingest_slice_stack(&tmp.path().join("src"), "ds", &tmp.path().join("out")).unwrap_err();
    assert!(err.to_string().contains("msk_0000.pgm"), "{err}");
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["", "images", "masks"] {
        let d = dir.join(sub);
        let mut names: Vec<_> = fs::read_dir(&d).unwrap().map(|e| e.unwrap().path()).filter(|p| p.is_file()).collect();
        names.sort();
        for p in names {
            out.push((p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap()));
        }
    }
    out
}

#[test]
fn phantoms_are_byte_identical_per_seed() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    generate_phantoms(1, [16, 16, 16], 7, "p", &a).unwrap();
    generate_phantoms(1, [16, 16, 16], 7, "p", &b).unwrap();
    let (fa, fb) = (dir_bytes(&a), dir_bytes(&b));
    assert_eq!(fa.len(), 3);
    assert_eq!(fa, fb);

    let c = tmp.path().join("c");
    generate_phantoms(1, [16, 16, 16], 8, "p", &c).unwrap();
    assert_ne!(dir_bytes(&c), fa);
}

#[test]
fn phantom_set_is_usable() {
    let tmp = tempfile::tempdir().unwrap();
    let m = generate_phantoms(20, [32, 32, 32], 1, "p", tmp.path()).unwrap();
    assert_eq!(m.len(), 20);
    for e in &m.entries {
        assert!(!e.labeled_slices.is_empty(), "{} has no labeled slice", e.volume_id);
        let (_, mask) = m.load_volume(&e.volume_id).unwrap();
        let frac = mask.foreground_count() as f64 / mask.voxels().len() as f64;
        assert!(frac > 0.0 && frac < 0.5, "{}: foreground fraction {frac}", e.volume_id);
        assert_eq!(mask.labeled_slices(), e.labeled_slices);
    }
}

#[test]
fn unknown_volume_id_is_not_found() {
    let tmp = tempfile::tempdir().unwrap();
    let m = generate_phantoms(2, [8, 8, 8], 0, "p", tmp.path()).unwrap();
    assert!(matches!(m.load_volume("x"), Err(Error::NotFound(id)) if id == "x"));
}

#[test]
fn truncated_volume_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("v.vol");
    VolumeGrid::new([2, 2, 2], [1.0; 3], vec![0.5; 8]).unwrap().write(&path).unwrap();
    let bytes = fs::read(&path).unwrap();
    fs::write(&path, &bytes[..bytes.len() - 3]).unwrap();
    match VolumeGrid::read(&path) {
        Err(Error::Corrupted { expected, actual, .. }) => assert_eq!((expected, actual), (32, 29)),
        other => panic!("unexpected {other:?}"),
    }
}

fn dims() -> impl Strategy<Value = [usize; 3]> {
    (1usize..6, 1usize..6, 1usize..6).prop_map(|(x, y, z)| [x, y, z])
}

proptest! {
    #[test]
    fn volume_round_trip(
        (d, v) in dims().prop_flat_map(|d| (Just(d), prop::collection::vec(-1e6f32..1e6, d[0] * d[1] * d[2]))),
        spacing in prop::array::uniform3(0.1f32..5.0),
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("v.vol");
        let vol = VolumeGrid::new(d, spacing, v).unwrap();
        vol.write(&path).unwrap();
        prop_assert_eq!(VolumeGrid::read(&path).unwrap(), vol);
    }

    #[test]
    fn mask_round_trip(
        (d, v) in dims().prop_flat_map(|d| (Just(d), prop::collection::vec(0u8..2, d[0] * d[1] * d[2]))),
    ) {
        let tmp = tempfile::tempdir().unwrap();
        let path = tmp.path().join("m.vol");
        let mask = LabelMask::new(d, v).unwrap();
        mask.write(&path).unwrap();
        let back = LabelMask::read(&path).unwrap();
        prop_assert_eq!(back.labeled_slices(), mask.labeled_slices());
        prop_assert_eq!(back, mask);
    }
}
