/// Shortest text that parses back to the same `f64` when it has at most 17
/// significant digits; otherwise 17 significant digits in scientific form.
pub fn fmt17(v: f64) -> String {
    let short = format!("{v}");
    if short.parse::<f64>().ok() == Some(v) && significant_digits(&short) <= 17 {
        short
    } else {
        format!("{v:.16e}")
    }
}

fn significant_digits(s: &str) -> usize {
    let mantissa = s.split(['e', 'E']).next().unwrap_or("");
    let digits: String = mantissa.chars().filter(char::is_ascii_digit).collect();
    digits.trim_start_matches('0').len()
}
