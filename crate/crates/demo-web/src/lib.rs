//! wasm-bindgen exports for the static demo page in `www/`. Every function
//! returns a JSON string so the page needs no generated bindings beyond
//! plain strings and numbers.

use std::sync::OnceLock;

use asr_noise::alignment::EditOp;
use asr_noise::augment::{per_alignment, substitute_augment};
use asr_noise::confusion::{build_rs_table, ConfusionTable};
use asr_noise::generator::nucleus::{nucleus as nucleus_ids, tempered_probabilities};
use asr_noise::lexicon::{bundled_term_frequencies, PronouncingDict};
use asr_noise::rng::seeded;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn dict() -> &'static PronouncingDict {
    static DICT: OnceLock<PronouncingDict> = OnceLock::new();
    DICT.get_or_init(PronouncingDict::bundled)
}

fn rs_table() -> &'static ConfusionTable {
    static TABLE: OnceLock<ConfusionTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        build_rs_table(dict(), &bundled_term_frequencies(), 2).expect("bundled data builds")
    })
}

#[derive(Serialize)]
struct Step {
    op: &'static str,
    orig: Option<String>,
    gen: Option<String>,
}

#[derive(Serialize)]
struct PerView {
    orig_phones: Vec<String>,
    gen_phones: Vec<String>,
    steps: Vec<Step>,
    edits: usize,
    /// `null` when the original has no phones.
    per: Option<f64>,
}

fn per_view(orig: &str, gen: &str) -> PerView {
    let pair = per_alignment(dict(), orig, gen);
    let steps = pair
        .ops
        .iter()
        .map(|op| match op {
            EditOp::Match(p) => Step { op: "match", orig: Some(p.clone()), gen: Some(p.clone()) },
            EditOp::Substitute { reference, hypothesis } => Step {
                op: "sub",
                orig: Some(reference.clone()),
                gen: Some(hypothesis.clone()),
            },
            EditOp::Delete(p) => Step { op: "del", orig: Some(p.clone()), gen: None },
            EditOp::Insert(p) => Step { op: "ins", orig: None, gen: Some(p.clone()) },
        })
        .collect();
    let per = (!pair.reference.is_empty()).then(|| pair.distance as f64 / pair.reference.len() as f64);
    PerView {
        orig_phones: pair.reference,
        gen_phones: pair.hypothesis,
        steps,
        edits: pair.distance,
        per,
    }
}

/// Phones of both texts, their alignment and the phone edit rate.
#[wasm_bindgen]
pub fn per_explain(orig: &str, gen: &str) -> String {
    serde_json::to_string(&per_view(orig, gen)).expect("serializable")
}

#[derive(Serialize)]
struct Substituted {
    text: String,
    per: Option<f64>,
}

fn substitute_view(text: &str, proportion: f64, seed: u64) -> Substituted {
    let mut rng = seeded(seed);
    let out = substitute_augment(rs_table(), text, proportion, &mut rng);
    let per = per_view(text, &out).per;
    Substituted { text: out, per }
}

/// One phonetic-neighbour substitution pass over `text`.
#[wasm_bindgen]
pub fn substitute(text: &str, proportion: f64, seed: u32) -> String {
    serde_json::to_string(&substitute_view(text, proportion, u64::from(seed))).expect("serializable")
}

#[derive(Serialize)]
struct NucleusView {
    probs: Vec<f64>,
    kept: Vec<usize>,
    mass: f64,
}

#[derive(Serialize)]
struct Failure {
    error: String,
}

fn nucleus_view(logits: &str, top_p: f64, temperature: f64) -> Result<NucleusView, String> {
    let logits: Vec<f64> = logits
        .split([',', ' '])
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("not a number: {s:?}")))
        .collect::<Result<_, _>>()?;
    if logits.is_empty() {
        return Err("no logits".into());
    }
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err("top-p must be in (0, 1]".into());
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err("temperature must be positive".into());
    }
    let probs = tempered_probabilities(&logits, temperature);
    let kept = nucleus_ids(&probs, top_p);
    let mass = kept.iter().map(|&i| probs[i]).sum();
    Ok(NucleusView { probs, kept, mass })
}

/// Tempered probabilities of comma-separated logits and the nucleus that
/// survives `top_p`.
#[wasm_bindgen]
pub fn nucleus(logits: &str, top_p: f64, temperature: f64) -> String {
    match nucleus_view(logits, top_p, temperature) {
        Ok(v) => serde_json::to_string(&v),
        Err(error) => serde_json::to_string(&Failure { error }),
    }
    .expect("serializable")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn per_matches_library() {
        let v = per_view("The priest tied the knot.", "The priest told the knot.");
        assert_eq!(v.edits, 2);
        assert_eq!(v.orig_phones.len(), 15);
        assert!((v.per.unwrap() - 2.0 / 15.0).abs() < 1e-12);
        let subs = v.steps.iter().filter(|s| s.op != "match").count();
        assert_eq!(subs, 2);
    }

    #[test]
    fn empty_original_has_no_rate() {
        let v: serde_json::Value = serde_json::from_str(&per_explain("", "hi")).unwrap();
        assert!(v["per"].is_null());
    }

    #[test]
    fn substitution_is_seeded() {
        let text = "turn on the kitchen lights";
        let a = substitute_view(text, 1.0, 7);
        assert_eq!(a.text, substitute_view(text, 1.0, 7).text);
        assert_ne!(a.text, text);
        assert_eq!(substitute_view(text, 0.0, 7).text, text);
    }

    #[test]
    fn nucleus_cut() {
        let v = nucleus_view("2, 1, 0, -5", 0.8, 1.0).unwrap();
        assert_eq!(v.kept, vec![0, 1]);
        assert!(v.mass >= 0.8);
        let s: f64 = v.probs.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert_eq!(nucleus_view("1 1", 0.5, 1.0).unwrap().kept, vec![0]);
        assert!(nucleus("", 0.9, 1.0).contains("error"));
        assert!(nucleus("1, x", 0.9, 1.0).contains("not a number"));
        assert!(nucleus("1", 0.0, 1.0).contains("error"));
    }
}
