use crate::alignment::{align, levenshtein_distance, AlignedPair};
use crate::error::{Error, Result};
use crate::lexicon::PronouncingDict;

/// Phone edit rate: phone-level edit distance between the original and the
/// generated text, divided by the number of phones in the original.
pub fn per_score(dict: &PronouncingDict, original: &str, generated: &str) -> Result<f64> {
    let orig = dict.phones(original);
    if orig.is_empty() {
        return Err(Error::EmptyPhones);
    }
    let generated = dict.phones(generated);
    let distance = levenshtein_distance(orig.as_slice(), generated.as_slice());
    Ok(distance as f64 / orig.len() as f64)
}

/// The phone alignment behind a score, for display.
pub fn per_alignment(dict: &PronouncingDict, original: &str, generated: &str) -> AlignedPair<String> {
    align(dict.phones(original).as_slice(), dict.phones(generated).as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;

    const CLEAN: &str = "The priest tied the knot.";

    #[test]
    fn table_rows() {
        let d = PronouncingDict::bundled();
        let cases = [
            ("The priest told the knot.", 2.0 / 15.0),
            ("The priest down the knot", 3.0 / 15.0),
            ("The priest to you, you.", 7.0 / 15.0),
            ("The priest tied the night.", 1.0 / 15.0),
            ("The priest tied the knot.Dot.", 3.0 / 15.0),
        ];
        for (noisy, want) in cases {
            let got = per_score(&d, CLEAN, noisy).unwrap();
            assert!((got - want).abs() < 1e-12, "{noisy}: {got}");
        }
    }

    #[test]
    fn identity_is_zero() {
        let d = PronouncingDict::bundled();
        assert_eq!(per_score(&d, CLEAN, CLEAN).unwrap(), 0.0);
    }

    #[test]
    fn empty_original_is_an_error() {
        let d = PronouncingDict::bundled();
        assert!(matches!(per_score(&d, "", "x"), Err(Error::EmptyPhones)));
        assert!(matches!(per_score(&d, " ... ", "x"), Err(Error::EmptyPhones)));
    }

    #[test]
    fn alignment_distance_agrees() {
        let d = PronouncingDict::bundled();
        let a = per_alignment(&d, CLEAN, "The priest told the knot.");
        assert_eq!(a.distance, 2);
        assert_eq!(a.reference.len(), 15);
    }
}
