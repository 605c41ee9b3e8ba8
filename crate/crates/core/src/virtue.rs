//! Dataset virtue proxies as deterministic manifest transforms.
//!
//! * diversity: keep a fraction of the volumes;
//! * completeness: keep a fraction of each volume's labeled slices;
//! * quality: keep equidistant slices of the annotation and fill the rest by
//!   nearest-neighbor interpolation.
//!
//! Plus the fixed test split, the volume-level train/val split and cyclic
//! upsampling of the train slices. Every transform appends a
//! [`TransformRecord`] to the manifest provenance so that [`replay`] can
//! rebuild it from the original dataset.

use std::path::Path;

use crate::error::{Error, Result};
use crate::metrics::Overlap;
use crate::rng::{ceil_count, keyed_permutation};
use crate::store::{DatasetManifest, LabelMask, Split, TransformRecord};

pub const TEST_FRACTION: f64 = 0.2;
pub const VAL_FRACTION: f64 = 0.2;
pub const UPSAMPLE_FRACTION: f64 = 0.8;

pub mod op {
    pub const SPLIT_TEST: &str = "split_test";
    pub const DIVERSITY: &str = "diversity";
    pub const COMPLETENESS: &str = "completeness";
    pub const QUALITY: &str = "quality";
    pub const SPLIT_TRAIN_VAL: &str = "split_train_val";
    pub const UPSAMPLE: &str = "upsample";
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QualitySpec {
    /// Target IoU in percent; the slice step is searched for.
    Target(f64),
    /// Explicit distance between annotated slices.
    Step(usize),
}

/// One point in (diversity, completeness, quality) space.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VirtueConfig {
    pub diversity: f64,
    pub completeness: f64,
    pub quality: QualitySpec,
    pub seed: u64,
}

impl VirtueConfig {
    pub fn new(diversity: f64, completeness: f64, quality: QualitySpec, seed: u64) -> Result<Self> {
        check_fraction("diversity", diversity)?;
        check_fraction("completeness", completeness)?;
        match quality {
            QualitySpec::Target(q) => check_percent(q)?,
            QualitySpec::Step(0) => return Err(Error::Invalid("slice_step must be >= 1".into())),
            QualitySpec::Step(_) => {}
        }
        Ok(Self {
            diversity,
            completeness,
            quality,
            seed,
        })
    }

    /// The unaltered dataset: (1, 1, 100%).
    pub fn baseline(seed: u64) -> Self {
        Self {
            diversity: 1.0,
            completeness: 1.0,
            quality: QualitySpec::Target(100.0),
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityReport {
    pub slice_step: usize,
    /// Pooled IoU of interpolated vs original labels over the labeled ranges.
    pub achieved_iou: f64,
}

pub(crate) fn check_fraction(name: &str, f: f64) -> Result<()> {
    if f > 0.0 && f <= 1.0 {
        Ok(())
    } else {
        Err(Error::Invalid(format!("{name} must lie in (0, 1], got {f}")))
    }
}

pub(crate) fn check_percent(q: f64) -> Result<()> {
    if (0.0..=100.0).contains(&q) {
        Ok(())
    } else {
        Err(Error::Invalid(format!("quality must lie in [0, 100], got {q}")))
    }
}

/// Partition `m` into entries chosen by the first `k` of the keyed shuffle and the rest,
/// both in manifest order.
fn partition(m: &DatasetManifest, k: usize, seed: u64) -> Vec<bool> {
    let perm = keyed_permutation(m.len(), &m.dataset_id, seed);
    let mut chosen = vec![false; m.len()];
    for &i in &perm[..k] {
        chosen[i] = true;
    }
    chosen
}

fn with_entries(
    m: &DatasetManifest,
    keep: impl Fn(usize) -> bool,
    split: Option<Split>,
    record: TransformRecord,
) -> DatasetManifest {
    let mut out = m.clone();
    out.entries = m
        .entries
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, e)| {
            let mut e = e.clone();
            if let Some(s) = split {
                e.split = s;
            }
            e
        })
        .collect();
    out.provenance.push(record);
    out
}

/// Hold out `⌈fraction·N⌉` volumes as the test set. Returns `(trainval, test)`.
pub fn split_test(m: &DatasetManifest, fraction: f64, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Invalid(format!("test fraction must lie in (0, 1), got {fraction}")));
    }
    if m.len() < 2 {
        return Err(Error::TooFewVolumes(m.len()));
    }
    if let Some(e) = m.entries.iter().find(|e| e.split != Split::Trainval) {
        return Err(Error::Invalid(format!(
            "split_test expects an unsplit dataset, `{}` is already `{}`",
            e.volume_id, e.split
        )));
    }
    let k = ceil_count(fraction, m.len()).min(m.len() - 1);
    let is_test = partition(m, k, seed);
    let rec = |keep: &str| {
        TransformRecord::new(op::SPLIT_TEST, seed)
            .param("fraction", fraction)
            .param("keep", keep)
    };
    let trainval = with_entries(m, |i| !is_test[i], Some(Split::Trainval), rec("trainval"));
    let test = with_entries(m, |i| is_test[i], Some(Split::Test), rec("test"));
    Ok((trainval, test))
}

/// Keep the first `⌈fraction·N⌉` volumes of the keyed shuffle.
pub fn sample_diversity(m: &DatasetManifest, fraction: f64, seed: u64) -> Result<DatasetManifest> {
    check_fraction("diversity", fraction)?;
    if m.is_empty() {
        return Err(Error::Empty("manifest has no volumes"));
    }
    let k = ceil_count(fraction, m.len());
    let keep = partition(m, k, seed);
    let rec = TransformRecord::new(op::DIVERSITY, seed).param("fraction", fraction);
    Ok(with_entries(m, |i| keep[i], None, rec))
}

/// Per volume, keep `⌈fraction·L⌉` of its `L` labeled slices, chosen by the
/// shuffle keyed by `(volume_id, seed)`.
pub fn sample_completeness(m: &DatasetManifest, fraction: f64, seed: u64) -> Result<DatasetManifest> {
    check_fraction("completeness", fraction)?;
    let mut out = m.clone();
    for e in &mut out.entries {
        let l = e.labeled_slices.len();
        if l == 0 {
            return Err(Error::NoLabeledSlices(e.volume_id.clone()));
        }
        let k = ceil_count(fraction, l);
        let perm = keyed_permutation(l, &e.volume_id, seed);
        let mut kept: Vec<usize> = perm[..k].iter().map(|&i| e.labeled_slices[i]).collect();
        kept.sort_unstable();
        e.labeled_slices = kept;
    }
    out.provenance
        .push(TransformRecord::new(op::COMPLETENESS, seed).param("fraction", fraction));
    Ok(out)
}

/// z-indices annotated when every `step`-th slice of `[first, last]` is drawn;
/// `last` is always included.
pub fn kept_slices(first: usize, last: usize, step: usize) -> Vec<usize> {
    let mut kept: Vec<usize> = (first..=last).step_by(step.max(1)).collect();
    if kept.last() != Some(&last) {
        kept.push(last);
    }
    kept
}

pub(crate) fn degrade_with_overlap(
    mask: &LabelMask,
    labeled_z: &[usize],
    step: usize,
) -> Result<(LabelMask, Overlap)> {
    if step == 0 {
        return Err(Error::Invalid("slice_step must be >= 1".into()));
    }
    let (&first, &last) = match (labeled_z.first(), labeled_z.last()) {
        (Some(f), Some(l)) => (f, l),
        _ => return Err(Error::Empty("no labeled slices to interpolate between")),
    };
    let nz = mask.dims()[2];
    if last >= nz || labeled_z.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Invalid(format!(
            "labeled slices must be sorted, unique and below depth {nz}"
        )));
    }

    let kept = kept_slices(first, last, step);
    let mut out = mask.clone();
    // Both neighbors are kept slices; ties go to the lower one.
    let mut seg = 0;
    for z in first..=last {
        while seg + 1 < kept.len() && kept[seg + 1] <= z {
            seg += 1;
        }
        let lo = kept[seg];
        if z == lo {
            continue;
        }
        let hi = kept[seg + 1];
        let src = if z - lo <= hi - z { lo } else { hi };
        out.copy_slice_from(z, mask, src);
    }

    let mut overlap = Overlap::default();
    let n = mask.slice_len();
    overlap.add(
        &out.voxels()[first * n..(last + 1) * n],
        &mask.voxels()[first * n..(last + 1) * n],
    );
    Ok((out, overlap))
}

/// Keep equidistant slices `first, first+step, …, last` and copy the nearest
/// kept slice into every other slice of `[first, last]`.
pub fn degrade_quality(mask: &LabelMask, labeled_z: &[usize], step: usize) -> Result<(LabelMask, QualityReport)> {
    let (out, overlap) = degrade_with_overlap(mask, labeled_z, step)?;
    Ok((
        out,
        QualityReport {
            slice_step: step,
            achieved_iou: overlap.iou(),
        },
    ))
}

/// Pooled achieved IoU of degrading every mask by `step`.
///
/// Each mask is interpolated across its own foreground slice range; masks
/// without foreground are left untouched and contribute nothing.
pub fn pooled_quality(masks: &[LabelMask], step: usize) -> Result<QualityReport> {
    let mut total = Overlap::default();
    for m in masks {
        let z = m.labeled_slices();
        if z.is_empty() {
            continue;
        }
        let (_, o) = degrade_with_overlap(m, &z, step)?;
        total.merge(&o);
    }
    Ok(QualityReport {
        slice_step: step,
        achieved_iou: total.iou(),
    })
}

/// Largest step past which nothing changes: every mask is reduced to its endpoints.
pub fn max_admissible_step(masks: &[LabelMask]) -> usize {
    masks
        .iter()
        .filter_map(|m| {
            let z = m.labeled_slices();
            Some(z.last()? - z.first()?)
        })
        .max()
        .unwrap_or(0)
        .max(1)
}

/// Scan steps upward from 1 and return the last one whose pooled IoU still
/// reaches `target_pct / 100`.
pub fn step_for_target_masks(masks: &[LabelMask], target_pct: f64) -> Result<QualityReport> {
    check_percent(target_pct)?;
    let threshold = target_pct / 100.0;
    let mut best = pooled_quality(masks, 1)?;
    for step in 2..=max_admissible_step(masks) {
        let r = pooled_quality(masks, step)?;
        if r.achieved_iou < threshold {
            break;
        }
        best = r;
    }
    Ok(best)
}

pub fn step_for_target_quality(m: &DatasetManifest, target_pct: f64) -> Result<(usize, QualityReport)> {
    let masks = load_masks(m)?;
    let r = step_for_target_masks(&masks, target_pct)?;
    Ok((r.slice_step, r))
}

fn load_masks(m: &DatasetManifest) -> Result<Vec<LabelMask>> {
    m.entries
        .iter()
        .map(|e| LabelMask::read(&m.resolve(&e.mask_path)))
        .collect()
}

/// Degrade every mask of `m` by `step`, writing the interpolated masks to
/// `out_dir/<volume_id>.vol`. A step of 1 leaves the mask paths alone.
pub fn apply_quality(m: &DatasetManifest, step: usize, out_dir: &Path) -> Result<(DatasetManifest, QualityReport)> {
    if step == 0 {
        return Err(Error::Invalid("slice_step must be >= 1".into()));
    }
    let out_dir = std::path::absolute(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut out = m.clone();
    let mut total = Overlap::default();
    for e in &mut out.entries {
        let mask = LabelMask::read(&m.resolve(&e.mask_path))?;
        let z = mask.labeled_slices();
        if z.is_empty() {
            continue;
        }
        let (degraded, o) = degrade_with_overlap(&mask, &z, step)?;
        total.merge(&o);
        if step > 1 {
            let path = out_dir.join(format!("{}.vol", e.volume_id));
            degraded.write(&path)?;
            e.mask_path = path.to_string_lossy().into_owned();
        }
    }
    out.provenance.push(
        TransformRecord::new(op::QUALITY, 0)
            .param("slice_step", step as u64)
            .param("out_dir", out_dir.to_string_lossy().into_owned()),
    );
    Ok((
        out,
        QualityReport {
            slice_step: step,
            achieved_iou: total.iou(),
        },
    ))
}

/// Volume-level split: `⌈0.2·N⌉` volumes to val. Returns `(train, val)`.
pub fn split_train_val(m: &DatasetManifest, seed: u64) -> Result<(DatasetManifest, DatasetManifest)> {
    if m.len() < 2 {
        return Err(Error::TooFewVolumes(m.len()));
    }
    let k = ceil_count(VAL_FRACTION, m.len()).min(m.len() - 1);
    let is_val = partition(m, k, seed);
    let rec = |keep: &str| TransformRecord::new(op::SPLIT_TRAIN_VAL, seed).param("keep", keep);
    let train = with_entries(m, |i| !is_val[i], Some(Split::Train), rec("train"));
    let val = with_entries(m, |i| is_val[i], Some(Split::Val), rec("val"));
    Ok((train, val))
}

/// Number of training slices every run trains on: `round(0.8 · original)`.
pub fn upsample_target(original_labeled_count: usize) -> usize {
    (UPSAMPLE_FRACTION * original_labeled_count as f64).round() as usize
}

/// Cyclically repeat the train slices (manifest order) up to
/// `round(0.8 · original_labeled_count)` entries.
pub fn upsample_train(train: &DatasetManifest, original_labeled_count: usize) -> Result<Vec<(String, usize)>> {
    cycle_to(train.labeled_pairs(), upsample_target(original_labeled_count))
}

fn cycle_to(pairs: Vec<(String, usize)>, target: usize) -> Result<Vec<(String, usize)>> {
    if pairs.is_empty() {
        return Err(Error::Empty("train set has no labeled slices"));
    }
    if target == 0 {
        return Err(Error::Empty("upsampling target is zero"));
    }
    Ok(pairs.iter().cycle().take(target).cloned().collect())
}

/// Append the upsampling record so consumers of the train manifest can
/// rebuild the slice list with [`training_slices`].
pub fn record_upsample(train: &DatasetManifest, original_labeled_count: usize) -> DatasetManifest {
    let mut out = train.clone();
    out.provenance.push(
        TransformRecord::new(op::UPSAMPLE, 0)
            .param("original_labeled_count", original_labeled_count as u64)
            .param("target_count", upsample_target(original_labeled_count) as u64),
    );
    out
}

/// The ordered training slice list of a train manifest: upsampled when the
/// manifest carries an `upsample` record, its labeled slices otherwise.
pub fn training_slices(train: &DatasetManifest) -> Result<Vec<(String, usize)>> {
    match train.provenance.iter().rev().find(|r| r.op == op::UPSAMPLE) {
        Some(r) => cycle_to(train.labeled_pairs(), r.get_u64("target_count")? as usize),
        None => {
            let pairs = train.labeled_pairs();
            if pairs.is_empty() {
                return Err(Error::Empty("train set has no labeled slices"));
            }
            Ok(pairs)
        }
    }
}

/// Re-apply recorded provenance to the original dataset.
pub fn replay(original: &DatasetManifest, provenance: &[TransformRecord]) -> Result<DatasetManifest> {
    let mut m = original.clone();
    for r in provenance {
        m = match r.op.as_str() {
            op::SPLIT_TEST => {
                let (tv, test) = split_test(&m, r.get_f64("fraction")?, r.seed)?;
                pick(r, tv, test, "trainval", "test")?
            }
            op::DIVERSITY => sample_diversity(&m, r.get_f64("fraction")?, r.seed)?,
            op::COMPLETENESS => sample_completeness(&m, r.get_f64("fraction")?, r.seed)?,
            op::QUALITY => {
                let step = r.get_u64("slice_step")? as usize;
                apply_quality(&m, step, Path::new(r.get_str("out_dir")?))?.0
            }
            op::SPLIT_TRAIN_VAL => {
                let (train, val) = split_train_val(&m, r.seed)?;
                pick(r, train, val, "train", "val")?
            }
            op::UPSAMPLE => record_upsample(&m, r.get_u64("original_labeled_count")? as usize),
            other => return Err(Error::Invalid(format!("unknown transform `{other}`"))),
        };
    }
    Ok(m)
}

fn pick(
    r: &TransformRecord,
    a: DatasetManifest,
    b: DatasetManifest,
    a_name: &str,
    b_name: &str,
) -> Result<DatasetManifest> {
    match r.get_str("keep")? {
        k if k == a_name => Ok(a),
        k if k == b_name => Ok(b),
        k => Err(Error::Invalid(format!("`{}` cannot keep `{k}`", r.op))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::store::ManifestEntry;

    fn manifest(n: usize, labeled: &[usize]) -> DatasetManifest {
        let mut m = DatasetManifest::new("ds", "/nonexistent");
        for i in 0..n {
            m.entries.push(ManifestEntry {
                volume_id: format!("v{i:02}"),
                volume_path: format!("images/v{i:02}.vol"),
                mask_path: format!("masks/v{i:02}.vol"),
                split: Split::Trainval,
                labeled_slices: labeled.to_vec(),
            });
        }
        m
    }

    fn ids(m: &DatasetManifest) -> Vec<&str> {
        m.entries.iter().map(|e| e.volume_id.as_str()).collect()
    }

    #[test]
    fn split_test_counts() {
        let (tv, test) = split_test(&manifest(10, &[0]), 0.2, 1).unwrap();
        assert_eq!((tv.len(), test.len()), (8, 2));
        assert!(test.entries.iter().all(|e| e.split == Split::Test));
        let (tv, test) = split_test(&manifest(3, &[0]), 0.2, 1).unwrap();
        assert_eq!((tv.len(), test.len()), (2, 1));
        let (tv2, _) = split_test(&manifest(3, &[0]), 0.2, 1).unwrap();
        assert_eq!(ids(&tv), ids(&tv2));
    }

    #[test]
    fn split_test_errors() {
        assert!(split_test(&manifest(10, &[0]), 1.0, 1).is_err());
        assert!(split_test(&manifest(10, &[0]), 0.0, 1).is_err());
        assert!(matches!(
            split_test(&manifest(1, &[0]), 0.2, 1),
            Err(Error::TooFewVolumes(1))
        ));
        let (tv, _) = split_test(&manifest(4, &[0]), 0.2, 1).unwrap();
        let (train, _) = split_train_val(&tv, 2).unwrap();
        assert!(split_test(&train, 0.2, 1).is_err());
    }

    /// Independent hand-run of the keyed shuffle for `sample_diversity`.
    #[test]
    fn diversity_matches_hand_shuffle() {
        let m = manifest(10, &[0]);
        let seed = 42;
        // state0 = fnv1a64("ds") ^ seed; next = mix(state += gamma)
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in b"ds" {
            h = (h ^ u64::from(*b)).wrapping_mul(0x100_0000_01b3);
        }
        let mut state = h ^ seed;
        let mut next = || {
            state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
            z ^ (z >> 31)
        };
        let mut idx: Vec<usize> = (0..10).collect();
        for i in (1..10).rev() {
            let j = (next() % (i as u64 + 1)) as usize;
            idx.swap(i, j);
        }
        let mut expected: Vec<String> = idx[..6].iter().map(|i| format!("v{i:02}")).collect();
        expected.sort();

        let out = sample_diversity(&m, 0.6, seed).unwrap();
        assert_eq!(ids(&out), expected);
        assert_eq!(ids(&sample_diversity(&m, 0.6, seed).unwrap()), expected);
    }

    #[test]
    fn diversity_rounding_and_identity() {
        let m = manifest(10, &[0]);
        assert_eq!(sample_diversity(&m, 0.05, 3).unwrap().len(), 1);
        assert_eq!(ids(&sample_diversity(&m, 1.0, 3).unwrap()), ids(&m));
        assert!(sample_diversity(&manifest(0, &[]), 0.5, 3).is_err());
        assert!(sample_diversity(&m, 0.0, 3).is_err());
    }

    #[test]
    fn diversity_prefixes_nest() {
        let m = manifest(20, &[0]);
        let small = sample_diversity(&m, 0.25, 9).unwrap();
        let large = sample_diversity(&m, 0.5, 9).unwrap();
        assert!(ids(&small).iter().all(|id| ids(&large).contains(id)));
    }

    #[test]
    fn completeness_counts() {
        let ten: Vec<usize> = (3..13).collect();
        let out = sample_completeness(&manifest(4, &ten), 0.1, 0).unwrap();
        assert!(out.entries.iter().all(|e| e.labeled_slices.len() == 1));
        let seven: Vec<usize> = (0..7).collect();
        let out = sample_completeness(&manifest(2, &seven), 0.5, 0).unwrap();
        assert!(out.entries.iter().all(|e| e.labeled_slices.len() == 4));
        assert!(out.entries.iter().all(|e| e.labeled_slices.windows(2).all(|w| w[0] < w[1])));
        let same = sample_completeness(&manifest(2, &seven), 1.0, 0).unwrap();
        assert_eq!(same.entries[0].labeled_slices, seven);
    }

    #[test]
    fn completeness_needs_labeled_slices() {
        let mut m = manifest(2, &[1, 2]);
        m.entries[1].labeled_slices.clear();
        match sample_completeness(&m, 0.5, 0) {
            Err(Error::NoLabeledSlices(id)) => assert_eq!(id, "v01"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kept_slice_pattern() {
        assert_eq!(kept_slices(2, 9, 3), vec![2, 5, 8, 9]);
        assert_eq!(kept_slices(2, 8, 3), vec![2, 5, 8]);
        assert_eq!(kept_slices(4, 4, 5), vec![4]);
        assert_eq!(kept_slices(0, 3, 10), vec![0, 3]);
    }

    /// Masks whose slice z is filled with a single voxel at x = z, so every
    /// slice differs and copies are traceable.
    fn staircase(nz: usize) -> LabelMask {
        let nx = nz;
        let mut v = vec![0u8; nx * nz];
        for z in 0..nz {
            v[z * nx + z] = 1;
        }
        LabelMask::new([nx, 1, nz], v).unwrap()
    }

    fn source_of(out: &LabelMask, z: usize) -> usize {
        out.slice(z).iter().position(|&v| v == 1).unwrap()
    }

    #[test]
    fn nearest_neighbor_with_lower_ties() {
        let m = staircase(8);
        let z: Vec<usize> = (1..8).collect();
        let (out, r) = degrade_quality(&m, &z, 2).unwrap();
        // kept: 1, 3, 5, 7
        let sources: Vec<usize> = (0..8).map(|z| source_of(&out, z)).collect();
        assert_eq!(sources, vec![0, 1, 1, 3, 3, 5, 5, 7]);
        // 7 slices of 1 voxel each, 3 copies wrong: |∩| = 4, |∪| = 4 + 2·3
        assert_eq!(r.achieved_iou, 4.0 / 10.0);

        let (out, _) = degrade_quality(&m, &z, 4).unwrap();
        // kept: 1, 5, 7; z = 3 ties between 1 and 5 -> 1
        let sources: Vec<usize> = (0..8).map(|z| source_of(&out, z)).collect();
        assert_eq!(sources, vec![0, 1, 1, 1, 5, 5, 5, 7]);
    }

    #[test]
    fn step_one_is_identity() {
        let m = staircase(6);
        let (out, r) = degrade_quality(&m, &[0, 1, 2, 3, 4, 5], 1).unwrap();
        assert_eq!(out, m);
        assert_eq!(r.achieved_iou, 1.0);
    }

    #[test]
    fn constant_mask_is_unaffected() {
        let v: Vec<u8> = (0..5 * 4).map(|i| u8::from(i % 5 < 2)).collect();
        let m = LabelMask::new([5, 1, 4], v).unwrap();
        for step in 1..6 {
            let (out, r) = degrade_quality(&m, &[0, 1, 2, 3], step).unwrap();
            assert_eq!(r.achieved_iou, 1.0);
            assert_eq!(out, m);
        }
    }

    #[test]
    fn degrade_validates_input() {
        let m = staircase(4);
        assert!(degrade_quality(&m, &[], 1).is_err());
        assert!(degrade_quality(&m, &[0, 1], 0).is_err());
        assert!(degrade_quality(&m, &[0, 9], 1).is_err());
        // step beyond the range degenerates to endpoints only
        let (out, _) = degrade_quality(&m, &[0, 1, 2, 3], 50).unwrap();
        let sources: Vec<usize> = (0..4).map(|z| source_of(&out, z)).collect();
        assert_eq!(sources, vec![0, 0, 3, 3]);
    }

    #[test]
    fn target_scan_extremes() {
        let masks = vec![staircase(9)];
        assert_eq!(step_for_target_masks(&masks, 100.0).unwrap().slice_step, 1);
        assert_eq!(step_for_target_masks(&masks, 0.0).unwrap().slice_step, 8);
        assert!(step_for_target_masks(&masks, 101.0).is_err());
    }

    #[test]
    fn train_val_split() {
        let (train, val) = split_train_val(&manifest(10, &[0]), 4).unwrap();
        assert_eq!((train.len(), val.len()), (8, 2));
        let (train, val) = split_train_val(&manifest(2, &[0]), 4).unwrap();
        assert_eq!((train.len(), val.len()), (1, 1));
        let (again, _) = split_train_val(&manifest(10, &[0]), 4).unwrap();
        let (train, _) = split_train_val(&manifest(10, &[0]), 4).unwrap();
        assert_eq!(ids(&again), ids(&train));
        assert!(matches!(
            split_train_val(&manifest(1, &[0]), 4),
            Err(Error::TooFewVolumes(1))
        ));
    }

    #[test]
    fn upsampling_is_cyclic() {
        let mut m = manifest(1, &[0, 1, 2]);
        // target = round(0.8 * 9) = 7
        let s = upsample_train(&m, 9).unwrap();
        let zs: Vec<usize> = s.iter().map(|p| p.1).collect();
        assert_eq!(zs, vec![0, 1, 2, 0, 1, 2, 0]);
        // round(0.8 * 100) = 80 independent of the train set
        assert_eq!(upsample_train(&m, 100).unwrap().len(), 80);
        // exactly the target: slices once (0.8 * 3.75 -> 3)
        let one: Vec<usize> = upsample_train(&m, 4).unwrap().iter().map(|p| p.1).collect();
        assert_eq!(one, vec![0, 1, 2]);
        m.entries[0].labeled_slices.clear();
        assert!(upsample_train(&m, 10).is_err());
    }

    #[test]
    fn training_slices_follow_upsample_record() {
        let m = manifest(2, &[4, 5]);
        assert_eq!(training_slices(&m).unwrap().len(), 4);
        let up = record_upsample(&m, 10);
        assert_eq!(training_slices(&up).unwrap(), upsample_train(&m, 10).unwrap());
    }

    #[test]
    fn replay_reproduces_manifest_bytes() {
        let m = manifest(12, &[1, 2, 3, 4, 5, 6]);
        let (tv, _) = split_test(&m, 0.2, 0).unwrap();
        let d = sample_diversity(&tv, 0.5, 7).unwrap();
        let c = sample_completeness(&d, 0.5, 8).unwrap();
        let (_, val) = split_train_val(&c, 9).unwrap();
        let val = record_upsample(&val, 40);
        let again = replay(&m, &val.provenance).unwrap();
        assert_eq!(again.to_json(), val.to_json());
    }
}
