//! Shortest round-trip decimal formatting shared by the text formats.

use std::fmt::Write;

/// Appends `x` using the shortest representation that parses back to the
/// same `f64`. Plain notation in the usual range, exponent notation outside.
pub(crate) fn push_f64(out: &mut String, x: f64) {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e15).contains(&a) {
        write!(out, "{x}").unwrap();
    } else {
        write!(out, "{x:e}").unwrap();
    }
}

pub(crate) fn push_values(out: &mut String, values: &[f64]) {
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        push_f64(out, *v);
    }
}

pub(crate) fn fmt_f64(x: f64) -> String {
    let mut s = String::new();
    push_f64(&mut s, x);
    s
}
