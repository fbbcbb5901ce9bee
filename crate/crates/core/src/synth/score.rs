use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{GroundTruth, MoverKind};
use crate::error::{Error, Result};
use crate::experiments::MoverRecord;
use crate::genres::adjusted_mutual_information;
use crate::model::GenreTaxonomy;

/// Precision and recall of one mover detection path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub planted: usize,
    pub detected: usize,
    pub true_positives: usize,
    /// Detected movers whose origin and destination both match the plant.
    pub regions_correct: usize,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
}

/// How well a pipeline run recovered the planted structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub genre_ami: Option<f64>,
    pub genre_artists: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub short_term: Option<Detection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub long_term: Option<Detection>,
    pub planted_alpha: f64,
    /// Destination-ward adoption effect measured by the pipeline: the
    /// negated mean normalized paired difference of the long-term shift
    /// test. Zero under no adoption and increasing in the planted rate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adoption_effect: Option<f64>,
}

impl RecoveryReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Pipeline artifacts to score; absent parts are skipped.
#[derive(Debug, Clone, Copy, Default)]
pub struct PipelineOutputs<'a> {
    pub taxonomy: Option<&'a GenreTaxonomy>,
    /// Listeners the detection paths looked at; planted movers outside it
    /// do not count against recall. All planted listeners when absent.
    pub considered: Option<&'a BTreeSet<String>>,
    pub short_term_movers: Option<&'a [MoverRecord]>,
    pub long_term_movers: Option<&'a [MoverRecord]>,
    /// Mean normalized paired difference of the long-term shift test.
    pub mean_normalized_difference: Option<f64>,
}

fn ratio(a: usize, b: usize) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

fn detection(truth: &GroundTruth, considered: &BTreeSet<&str>, kind: MoverKind, found: &[MoverRecord]) -> Detection {
    let planted = truth
        .listeners
        .iter()
        .filter(|(id, t)| t.kind == kind && considered.contains(id.as_str()))
        .count();
    let mut tp = 0;
    let mut regions_correct = 0;
    for m in found {
        let t = &truth.listeners[&m.listener_id];
        if t.kind == kind {
            tp += 1;
            if t.origin == m.origin && t.destination == Some(m.destination) {
                regions_correct += 1;
            }
        }
    }
    Detection {
        planted,
        detected: found.len(),
        true_positives: tp,
        regions_correct,
        precision: ratio(tp, found.len()),
        recall: ratio(tp, planted),
    }
}

/// Compare pipeline outputs with the plant. Any listener or artist id that
/// the plant does not know is an error: the outputs came from other data.
pub fn score_recovery(truth: &GroundTruth, outputs: PipelineOutputs<'_>) -> Result<RecoveryReport> {
    let unknown_listener = |id: &str| -> Result<()> {
        if truth.listeners.contains_key(id) {
            Ok(())
        } else {
            Err(Error::IdMismatch(format!(
                "listener {id} is not in the ground truth (seed {}, id tag {})",
                truth.seed, truth.id_tag
            )))
        }
    };
    let considered: BTreeSet<&str> = match outputs.considered {
        Some(c) => {
            for id in c {
                unknown_listener(id)?;
            }
            c.iter().map(String::as_str).collect()
        }
        None => truth.listeners.keys().map(String::as_str).collect(),
    };
    for m in outputs.short_term_movers.into_iter().chain(outputs.long_term_movers).flatten() {
        unknown_listener(&m.listener_id)?;
    }

    let mut genre_ami = None;
    let mut genre_artists = 0;
    if let Some(tax) = outputs.taxonomy {
        let mut planted = Vec::new();
        let mut derived = Vec::new();
        for (artist, &g) in &tax.artist_to_genre {
            let p = truth.artist_genre.get(artist).ok_or_else(|| {
                Error::IdMismatch(format!("artist {artist} is not in the ground truth (seed {})", truth.seed))
            })?;
            planted.push(*p);
            derived.push(g);
        }
        genre_artists = planted.len();
        if genre_artists > 0 {
            genre_ami = Some(adjusted_mutual_information(&planted, &derived)?);
        }
    }

    Ok(RecoveryReport {
        seed: truth.seed,
        genre_ami,
        genre_artists,
        short_term: outputs
            .short_term_movers
            .map(|f| detection(truth, &considered, MoverKind::ShortTerm, f)),
        long_term: outputs
            .long_term_movers
            .map(|f| detection(truth, &considered, MoverKind::LongTerm, f)),
        planted_alpha: truth.config.adoption,
        adoption_effect: outputs.mean_normalized_difference.map(|d| -d),
    })
}
