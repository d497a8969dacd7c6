//! Text formats accepted on the command line.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Parses `[-]a[.b][(+|-)c[.d]i]` with decimal digits and no whitespace.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let bad = || Error::Parse(format!("malformed complex literal '{s}', expected a, a+bi or a-bi"));
    let bytes = s.as_bytes();
    let (re_len, re) = decimal(bytes, true).ok_or_else(bad)?;
    let rest = &bytes[re_len..];
    if rest.is_empty() {
        return Ok(Complex64::new(re, 0.0));
    }
    let sign = match rest[0] {
        b'+' => 1.0,
        b'-' => -1.0,
        _ => return Err(bad()),
    };
    let (im_len, im) = decimal(&rest[1..], false).ok_or_else(bad)?;
    if &rest[1 + im_len..] != b"i" {
        return Err(bad());
    }
    Ok(Complex64::new(re, sign * im))
}

/// Length and value of `[-]digits[.digits]` at the start of `b`.
fn decimal(b: &[u8], allow_minus: bool) -> Option<(usize, f64)> {
    let mut i = 0;
    if allow_minus && b.first() == Some(&b'-') {
        i = 1;
    }
    let int_start = i;
    while i < b.len() && b[i].is_ascii_digit() {
        i += 1;
    }
    if i == int_start {
        return None;
    }
    if i < b.len() && b[i] == b'.' {
        let frac_start = i + 1;
        i = frac_start;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        if i == frac_start {
            return None;
        }
    }
    let text = std::str::from_utf8(&b[..i]).ok()?;
    text.parse::<f64>().ok().filter(|v| v.is_finite()).map(|v| (i, v))
}

/// Parses an inclusive range `a..b`, a comma list, or a single order.
pub fn parse_orders(s: &str) -> Result<Vec<u32>> {
    let bad = |why: &str| Error::Parse(format!("malformed order list '{s}': {why}"));
    let num = |t: &str| -> Result<u32> {
        if t.is_empty() || !t.bytes().all(|c| c.is_ascii_digit()) {
            return Err(bad("orders are non-negative integers"));
        }
        t.parse::<u32>().map_err(|_| bad("order too large"))
    };
    let out: Vec<u32> = if let Some((a, b)) = s.split_once("..") {
        let (a, b) = (num(a)?, num(b)?);
        if a > b {
            return Err(bad("empty range"));
        }
        if b - a > 10_000 {
            return Err(bad("range has more than 10000 orders"));
        }
        (a..=b).collect()
    } else {
        s.split(',').map(num).collect::<Result<_>>()?
    };
    Ok(out)
}
