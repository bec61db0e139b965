use crate::error::{Error, Result};
use crate::tasks::ResponseSchema;

/// Reads the number(s) a model answered with.
///
/// A strict pass accepts only text that is exactly the expected shape
/// (`85`, `85.5`, `(50, 75)`, `50, 75`), ignoring surrounding whitespace
/// and a trailing period. Otherwise the first numbers in reading order are
/// taken. Every value must lie in `bounds`.
pub fn parse_numeric_response(text: &str, schema: ResponseSchema, bounds: (f64, f64)) -> Result<Vec<f64>> {
    let values = parse_strict(text, schema)
        .or_else(|| {
            let found = extract_numbers(text, schema == ResponseSchema::OneNumber);
            (found.len() >= schema.arity()).then(|| found[..schema.arity()].to_vec())
        })
        .ok_or_else(|| Error::Parse {
            text: truncate(text, 200),
        })?;
    let (lo, hi) = bounds;
    if let Some(&v) = values.iter().find(|v| !(lo..=hi).contains(*v)) {
        return Err(Error::OutOfBounds { value: v, lo, hi });
    }
    Ok(values)
}

fn truncate(text: &str, max: usize) -> String {
    match text.char_indices().nth(max) {
        Some((i, _)) => format!("{}...", &text[..i]),
        None => text.to_owned(),
    }
}

fn parse_strict(text: &str, schema: ResponseSchema) -> Option<Vec<f64>> {
    let t = text.trim();
    let t = t.strip_suffix('.').unwrap_or(t).trim();
    match schema {
        ResponseSchema::OneNumber => strict_number(t).map(|v| vec![v]),
        ResponseSchema::TwoNumbers => {
            let inner = t
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .or_else(|| t.strip_prefix('[').and_then(|s| s.strip_suffix(']')))
                .unwrap_or(t);
            let mut parts = inner.split(',');
            let a = strict_number(parts.next()?.trim())?;
            let b = strict_number(parts.next()?.trim())?;
            parts.next().is_none().then(|| vec![a, b])
        }
    }
}

fn strict_number(s: &str) -> Option<f64> {
    let body = s.strip_prefix(['-', '+']).unwrap_or(s);
    let valid = !body.is_empty()
        && body.chars().all(|c| c.is_ascii_digit() || c == '.')
        && body.chars().filter(|&c| c == '.').count() <= 1
        && body.chars().any(|c| c.is_ascii_digit());
    if !valid {
        return None;
    }
    s.parse().ok()
}

/// Decimal numbers in reading order. A leading `-` counts as a sign only
/// when it does not follow a letter or digit, so "2040-2050" yields 2040 and
/// 2050. With `thousands`, groupings like `3,000` read as one number.
fn extract_numbers(text: &str, thousands: bool) -> Vec<f64> {
    let b = text.as_bytes();
    let digit = |i: usize| b.get(i).is_some_and(u8::is_ascii_digit);
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        if b[i].is_ascii_alphabetic() {
            // Digits inside words ("GPT4") are not answers.
            while i < b.len() && b[i].is_ascii_alphanumeric() {
                i += 1;
            }
            continue;
        }
        let prev_alnum = i > 0 && b[i - 1].is_ascii_alphanumeric();
        let signed = b[i] == b'-' && !prev_alnum && (digit(i + 1) || (b.get(i + 1) == Some(&b'.') && digit(i + 2)));
        if !(digit(i) || (b[i] == b'.' && digit(i + 1)) || signed) {
            i += 1;
            continue;
        }
        let mut s = String::new();
        if signed {
            s.push('-');
            i += 1;
        }
        while digit(i) {
            s.push(b[i] as char);
            i += 1;
            if thousands && b.get(i) == Some(&b',') && (1..=3).all(|k| digit(i + k)) && !digit(i + 4) {
                i += 1;
            }
        }
        if b.get(i) == Some(&b'.') && digit(i + 1) {
            s.push('.');
            i += 1;
            while digit(i) {
                s.push(b[i] as char);
                i += 1;
            }
        }
        if let Ok(v) = s.parse::<f64>() {
            out.push(v);
        }
    }
    out
}
