use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::genmodel::VideoRecord;
use crate::math::floor;
use crate::randomize::Range;

/// Half-open azimuth band `[min, max)` in degrees, read modulo 360; `max`
/// may exceed 360 to wrap past north.
pub fn in_azimuth_band(band: &Range, azimuth: f64) -> bool {
    let norm = |a: f64| a - 360.0 * floor(a / 360.0);
    let (a, lo) = (norm(azimuth), norm(band.min));
    let width = band.max - band.min;
    if width >= 360.0 {
        return true;
    }
    let offset = norm(a - lo);
    offset < width
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct HeldOut {
    pub azimuth_bands: Vec<Range>,
    pub texture_ids: Vec<String>,
    pub humanoid_ids: Vec<String>,
}

impl HeldOut {
    fn is_empty(&self) -> bool {
        self.azimuth_bands.is_empty() && self.texture_ids.is_empty() && self.humanoid_ids.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SplitCriterion {
    Loso { scene: String },
    Disjoint { held_out: HeldOut },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub criterion: SplitCriterion,
    pub train: Vec<String>,
    pub test: Vec<String>,
    /// Videos that belong to neither side.
    pub excluded: Vec<String>,
}

impl SplitSpec {
    /// Disjointness, and coverage of `all` by train, test and excluded.
    pub fn check(&self, all: &[&str]) -> bool {
        let train: BTreeSet<&str> = self.train.iter().map(String::as_str).collect();
        let test: BTreeSet<&str> = self.test.iter().map(String::as_str).collect();
        let excl: BTreeSet<&str> = self.excluded.iter().map(String::as_str).collect();
        let every: BTreeSet<&str> = all.iter().copied().collect();
        train.is_disjoint(&test)
            && train.is_disjoint(&excl)
            && test.is_disjoint(&excl)
            && train.len() + test.len() + excl.len() == every.len()
            && train
                .iter()
                .chain(&test)
                .chain(&excl)
                .all(|v| every.contains(v))
    }
}

/// Test on one scene, train on all others.
pub fn build_loso_split(records: &[VideoRecord], scene: &str) -> Result<SplitSpec, HarnessError> {
    let scenes: BTreeSet<&str> = records.iter().map(|r| r.scene_id.as_str()).collect();
    if !scenes.contains(scene) {
        return Err(HarnessError::UnknownScene {
            scene: scene.into(),
            known: scenes.into_iter().collect::<Vec<_>>().join(", "),
        });
    }
    let (test, train): (Vec<&VideoRecord>, Vec<&VideoRecord>) =
        records.iter().partition(|r| r.scene_id == scene);
    Ok(SplitSpec {
        criterion: SplitCriterion::Loso {
            scene: scene.into(),
        },
        train: train.into_iter().map(|r| r.video_id.clone()).collect(),
        test: test.into_iter().map(|r| r.video_id.clone()).collect(),
        excluded: Vec::new(),
    })
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Match {
    Full,
    Partial,
    None,
}

fn combine(a: Match, b: Match) -> Match {
    match (a, b) {
        (Match::Full, Match::Full) => Match::Full,
        (Match::None, Match::None) => Match::None,
        _ => Match::Partial,
    }
}

fn factor_matches(record: &VideoRecord, held: &HeldOut) -> Match {
    let mut factors: Vec<Match> = Vec::new();
    let flag = |b: bool| if b { Match::Full } else { Match::None };
    if !held.azimuth_bands.is_empty() {
        let az = record.nuisance.camera.azimuth;
        factors.push(flag(
            held.azimuth_bands.iter().any(|b| in_azimuth_band(b, az)),
        ));
    }
    if !held.texture_ids.is_empty() {
        let t = &record.nuisance.textures;
        let hits = [&t.sky, &t.floor, &t.body]
            .iter()
            .filter(|c| held.texture_ids.contains(&c.texture.id))
            .count();
        factors.push(match hits {
            3 => Match::Full,
            0 => Match::None,
            _ => Match::Partial,
        });
    }
    if !held.humanoid_ids.is_empty() {
        factors.push(flag(held.humanoid_ids.contains(&record.humanoid_id)));
    }
    factors.into_iter().reduce(combine).unwrap_or(Match::None)
}

/// Factor-disjoint split. A video is a test video when every held-out
/// factor is fully held out for it (its azimuth lies in a held band, all
/// three of its textures are held, its humanoid is held); a training video
/// when none is; anything in between is excluded and counted.
pub fn build_disjoint_split(
    records: &[VideoRecord],
    held: &HeldOut,
) -> Result<SplitSpec, HarnessError> {
    if held.is_empty() {
        return Err(HarnessError::NothingHeldOut);
    }
    let present = records.iter().any(|r| {
        let t = &r.nuisance.textures;
        held.azimuth_bands
            .iter()
            .any(|b| in_azimuth_band(b, r.nuisance.camera.azimuth))
            || [&t.sky, &t.floor, &t.body]
                .iter()
                .any(|c| held.texture_ids.contains(&c.texture.id))
            || held.humanoid_ids.contains(&r.humanoid_id)
    });
    if !present {
        return Err(HarnessError::NothingHeldOut);
    }
    let mut spec = SplitSpec {
        criterion: SplitCriterion::Disjoint {
            held_out: held.clone(),
        },
        train: Vec::new(),
        test: Vec::new(),
        excluded: Vec::new(),
    };
    for r in records {
        let side = match factor_matches(r, held) {
            Match::Full => &mut spec.test,
            Match::None => &mut spec.train,
            Match::Partial => &mut spec.excluded,
        };
        side.push(r.video_id.clone());
    }
    if spec.train.is_empty() || spec.test.is_empty() {
        return Err(HarnessError::EmptySide {
            train: spec.train.len(),
            test: spec.test.len(),
            excluded: spec.excluded.len(),
        });
    }
    Ok(spec)
}
