//! Deterministic numeric formatting: 9 significant digits, fixed locale,
//! positional within a readable exponent window, scientific outside it.

/// Formats with 9 significant digits. The output is locale-free and
/// deterministic, so reports re-generated from the same inputs are
/// byte-identical.
pub fn sig9(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let formatted = format!("{:.8e}", x);
    let (mantissa_str, exp_str) = formatted.split_once('e').expect("e-notation");
    let exp: i32 = exp_str.parse().expect("valid exponent");
    let negative = mantissa_str.starts_with('-');
    let digits: String = mantissa_str.chars().filter(|c| c.is_ascii_digit()).collect();
    debug_assert_eq!(digits.len(), 9);

    let rendered = if (-4..=12).contains(&exp) {
        let point = exp + 1;
        let body = if point <= 0 {
            let mut s = String::from("0.");
            for _ in 0..(-point) {
                s.push('0');
            }
            s.push_str(&digits);
            s
        } else if point as usize >= digits.len() {
            let mut s = digits.clone();
            for _ in 0..(point as usize - digits.len()) {
                s.push('0');
            }
            s
        } else {
            format!("{}.{}", &digits[..point as usize], &digits[point as usize..])
        };
        trim_fraction(body)
    } else {
        let mut mantissa = digits.clone();
        while mantissa.len() > 1 && mantissa.ends_with('0') {
            mantissa.pop();
        }
        let mantissa = if mantissa.len() == 1 {
            mantissa
        } else {
            format!("{}.{}", &mantissa[..1], &mantissa[1..])
        };
        format!("{mantissa}e{exp}")
    };
    if negative {
        format!("-{rendered}")
    } else {
        rendered
    }
}

/// Rounds through the 9-significant-digit representation, for values that
/// are emitted as JSON numbers rather than strings.
pub fn sig9_round(x: f64) -> f64 {
    sig9(x).parse().unwrap_or(x)
}

fn trim_fraction(mut s: String) -> String {
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    s
}
