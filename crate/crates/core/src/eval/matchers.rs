use std::sync::OnceLock;

use num_traits::Float;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::EvalError;

/// Default relative tolerance for numeric answers.
pub const DEFAULT_TOLERANCE: f64 = 0.05;
/// Absolute threshold used when the ground truth is zero.
pub const ZERO_ABS_TOLERANCE: f64 = 1e-6;

/// Accepts `pred` when `|pred - gt| <= tol * |gt|`, or `|pred| <= 1e-6` for a
/// zero ground truth. A few ulps of slack keep decimal boundaries such as
/// 0.3 vs 0.315 on the accepted side.
pub fn numeric_tolerance_match<T: Float>(gt: T, pred: T, tol: T) -> Result<bool, EvalError> {
    if !gt.is_finite() || !pred.is_finite() || !tol.is_finite() {
        return Err(EvalError::Domain("non-finite operand to the tolerance matcher".into()));
    }
    if tol < T::zero() {
        return Err(EvalError::Domain("negative tolerance".into()));
    }
    let diff = (pred - gt).abs();
    if gt == T::zero() {
        let abs = T::from(ZERO_ABS_TOLERANCE).expect("representable");
        return Ok(diff <= abs);
    }
    let slack = T::from(4.0).expect("representable") * T::epsilon() * gt.abs().max(pred.abs());
    Ok(diff <= tol * gt.abs() + slack)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Binary {
    Yes,
    No,
    Unknown,
}

const YES: &[&str] = &["yes", "yeah", "yep", "true", "correct", "affirmative", "indeed"];
/// Affirming adverbs that flip to a negation when followed by "not".
const STRONG: &[&str] = &["absolutely", "definitely", "certainly", "surely", "of course"];
const NO: &[&str] = &["no", "not", "nope", "false", "incorrect", "never", "negative"];

/// First polar token wins; "absolutely not" and the like read as a negation.
pub fn binary_match(prediction: &str) -> Binary {
    let lower = prediction.to_lowercase().replace("of course", "of_course");
    let tokens: Vec<&str> =
        lower.split(|c: char| !(c.is_alphanumeric() || c == '_' || c == '\'')).filter(|t| !t.is_empty()).collect();
    for (i, t) in tokens.iter().enumerate() {
        let t = t.replace('_', " ");
        let t = t.trim_end_matches("n't");
        if YES.contains(&t) {
            return Binary::Yes;
        }
        if STRONG.contains(&t) {
            return if tokens.get(i + 1) == Some(&"not") { Binary::No } else { Binary::Yes };
        }
        if NO.contains(&t) || tokens[i].ends_with("n't") {
            return Binary::No;
        }
    }
    Binary::Unknown
}

fn number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?").expect("valid regex"))
}

fn single_number_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?\s*(?:%|[A-Za-z°µ/][A-Za-z0-9°µ/^]*)?$")
            .expect("valid regex")
    })
}

/// Drops thousands separators ("12,345" -> "12345") and normalises the minus sign.
fn clean_numeric_text(text: &str) -> String {
    let chars: Vec<char> = text.replace('\u{2212}', "-").chars().collect();
    let mut out = String::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        let between_digits = i > 0
            && chars[i - 1].is_ascii_digit()
            && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())
            && chars.get(i + 1..i + 4).is_some_and(|w| w.iter().all(char::is_ascii_digit));
        if c == ',' && between_digits {
            continue;
        }
        out.push(c);
    }
    out
}

/// The last numeric literal in free text.
pub fn extract_last_number(text: &str) -> Option<f64> {
    let cleaned = clean_numeric_text(text);
    number_re().find_iter(&cleaned).last().and_then(|m| m.as_str().parse().ok())
}

/// The value of a ground truth that is a single number, optionally followed
/// by a percent sign or one unit token.
pub fn parse_numeric_gt(text: &str) -> Option<f64> {
    let cleaned = clean_numeric_text(text.trim());
    let cleaned = cleaned.trim_end_matches('.');
    if !single_number_re().is_match(cleaned) {
        return None;
    }
    number_re().find(cleaned).and_then(|m| m.as_str().parse().ok())
}

/// Lower-cases, drops articles and surrounding punctuation, collapses spaces.
pub fn normalize_answer(text: &str) -> String {
    text.to_lowercase()
        .split(|c: char| c.is_whitespace())
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty() && !matches!(*t, "a" | "an" | "the"))
        .collect::<Vec<_>>()
        .join(" ")
}

pub fn exact_match(gt: &str, pred: &str) -> bool {
    normalize_answer(gt) == normalize_answer(pred)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_examples() {
        assert!(numeric_tolerance_match(100.0, 104.0, 0.05).unwrap());
        assert!(!numeric_tolerance_match(100.0, 106.0, 0.05).unwrap());
        assert!(numeric_tolerance_match(0.0, 0.0, 0.05).unwrap());
        assert!(numeric_tolerance_match(100.0, 105.0, 0.05).unwrap());
        assert!(numeric_tolerance_match(0.3, 0.315, 0.05).unwrap());
        assert!(numeric_tolerance_match(42.0f32, 43.0f32, 0.05f32).unwrap());
        assert!(numeric_tolerance_match(f64::NAN, 1.0, 0.05).is_err());
    }

    #[test]
    fn binary_examples() {
        assert_eq!(binary_match("Yes, the trend increases."), Binary::Yes);
        assert_eq!(binary_match("no."), Binary::No);
        assert_eq!(binary_match("It depends."), Binary::Unknown);
        assert_eq!(binary_match("Absolutely not"), Binary::No);
        assert_eq!(binary_match("It doesn't"), Binary::No);
    }

    #[test]
    fn numbers() {
        assert_eq!(extract_last_number("The answer is 43"), Some(43.0));
        assert_eq!(extract_last_number("from 1,234 to 12,345.5 units"), Some(12345.5));
        assert_eq!(extract_last_number("about 12%"), Some(12.0));
        assert_eq!(extract_last_number("none"), None);
        assert_eq!(parse_numeric_gt("42"), Some(42.0));
        assert_eq!(parse_numeric_gt("12.5%"), Some(12.5));
        assert_eq!(parse_numeric_gt("3.2 t/ha"), Some(3.2));
        assert_eq!(parse_numeric_gt("Subplot 3"), None);
        assert_eq!(parse_numeric_gt("2 x 2"), None);
    }

    #[test]
    fn normalization() {
        assert!(exact_match("Paris", "paris."));
        assert!(exact_match("The Line chart", "line chart"));
        assert!(!exact_match("Paris", "London"));
    }
}
