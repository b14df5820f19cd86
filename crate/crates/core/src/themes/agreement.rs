use std::collections::BTreeMap;

use nomiclaw_stats::{cohens_kappa, KappaResult, StatsError};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ids::stable_hash;
use crate::themes::annotate::Annotation;
use crate::themes::classify::{RowKey, Stage, StageText};
use crate::themes::{ThemeCode, ThemeError};

/// Agreement level below which a stage is flagged.
pub const KAPPA_BAR: f64 = 0.7;

/// One line of the human-annotation exchange file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleRow {
    pub run_id: String,
    pub round: u32,
    pub agent_id: String,
    pub stage: Stage,
    pub text: String,
    /// Left blank for the human annotator.
    #[serde(default)]
    pub human_label: String,
}

impl SampleRow {
    pub fn key(&self) -> RowKey {
        RowKey { run_id: self.run_id.clone(), round: self.round, agent_id: self.agent_id.clone() }
    }
}

/// Splits `total` over strata proportionally to their sizes: floors first,
/// then the largest remainders (earlier strata win ties).
fn allocate(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut alloc: Vec<usize> = sizes.iter().map(|s| s * total / n).collect();
    let mut rem: Vec<(usize, usize)> = sizes.iter().enumerate().map(|(i, s)| ((s * total) % n, i)).collect();
    rem.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let short = total - alloc.iter().sum::<usize>();
    for &(_, i) in rem.iter().take(short) {
        alloc[i] += 1;
    }
    alloc
}

/// Seeded sample without replacement, stratified by stage, of
/// `round(fraction * n)` texts. Output is ordered by stage, then row key.
pub fn sample_for_agreement(texts: &[StageText], fraction: f64, seed: u64) -> Result<Vec<SampleRow>, ThemeError> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(ThemeError::Input(format!("sample fraction must be in (0, 1], got {fraction}")));
    }
    let total = (fraction * texts.len() as f64).round() as usize;
    let strata: Vec<Vec<&StageText>> =
        Stage::ALL.iter().map(|s| texts.iter().filter(|t| t.stage == *s).collect()).collect();
    let sizes: Vec<usize> = strata.iter().map(Vec::len).collect();
    let alloc = allocate(&sizes, total);
    let mut out = Vec::with_capacity(total);
    for ((stage, mut members), k) in Stage::ALL.iter().zip(strata).zip(alloc) {
        members.sort_by(|a, b| a.key.cmp(&b.key));
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stable_hash(&[stage.as_str()]));
        members.shuffle(&mut rng);
        let mut chosen: Vec<&StageText> = members.into_iter().take(k).collect();
        chosen.sort_by(|a, b| a.key.cmp(&b.key));
        out.extend(chosen.into_iter().map(|t| SampleRow {
            run_id: t.key.run_id.clone(),
            round: t.key.round,
            agent_id: t.key.agent_id.clone(),
            stage: t.stage,
            text: t.text.clone(),
            human_label: String::new(),
        }));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementRow {
    pub stage: Stage,
    pub classifier: String,
    pub n: usize,
    /// `None` when chance agreement is 1 and kappa is undefined.
    pub kappa: Option<KappaResult>,
    pub below_bar: bool,
}

/// Cohen's kappa between the human labels and each classifier, per stage.
/// Every stage must be present in the human file and every sampled item
/// must carry a valid label and a model label.
pub fn agreement_report(human: &[SampleRow], annotations: &[Annotation]) -> Result<Vec<AgreementRow>, ThemeError> {
    let unlabeled: Vec<String> =
        human.iter().filter(|r| r.human_label.trim().is_empty()).map(|r| format!("{} {}", r.key(), r.stage)).collect();
    if !unlabeled.is_empty() {
        return Err(ThemeError::MissingLabels(unlabeled));
    }
    for stage in Stage::ALL {
        if !human.iter().any(|r| r.stage == stage) {
            return Err(ThemeError::Input(format!("no human labels for stage `{stage}`")));
        }
    }
    let mut human_codes = Vec::with_capacity(human.len());
    for r in human {
        let code: ThemeCode =
            r.human_label.parse().map_err(|e| ThemeError::Input(format!("{} {}: {e}", r.key(), r.stage)))?;
        human_codes.push(code);
    }
    let mut model: BTreeMap<&str, BTreeMap<(RowKey, Stage), ThemeCode>> = BTreeMap::new();
    for a in annotations {
        model.entry(a.classifier.as_str()).or_default().insert((a.key.clone(), a.stage), a.code);
    }
    let mut out = Vec::new();
    for stage in Stage::ALL {
        for (classifier, labels) in &model {
            let (mut h, mut m, mut missing) = (Vec::new(), Vec::new(), Vec::new());
            for (row, code) in human.iter().zip(&human_codes).filter(|(r, _)| r.stage == stage) {
                match labels.get(&(row.key(), stage)) {
                    Some(mc) => {
                        h.push(*code);
                        m.push(*mc);
                    }
                    None => missing.push(format!("{} {stage} ({classifier})", row.key())),
                }
            }
            if !missing.is_empty() {
                return Err(ThemeError::MissingLabels(missing));
            }
            let kappa = match cohens_kappa(&h, &m) {
                Ok(k) => Some(k),
                Err(StatsError::UndefinedKappa) => None,
                Err(e) => return Err(ThemeError::Input(e.to_string())),
            };
            let below_bar = kappa.is_none_or(|k| k.kappa < KAPPA_BAR);
            out.push(AgreementRow { stage, classifier: classifier.to_string(), n: h.len(), kappa, below_bar });
        }
    }
    Ok(out)
}
