//! Number formatting and unit-suffixed quantity parsing.

use crate::error::{Error, Result};

/// Shortest decimal representation of `x` rounded to `digits` significant digits.
///
/// Used for every number written to disk so that outputs do not depend on
/// the last few bits of platform libm results.
pub fn fmt_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{:.*e}", digits.saturating_sub(1), x)
        .parse()
        .expect("scientific formatting parses back");
    format!("{rounded}")
}

/// 12 significant digits, the precision of every emitted artifact.
pub fn fmt12(x: f64) -> String {
    fmt_sig(x, 12)
}

/// Unit suffixes carry a decimal exponent, applied before parsing so that
/// `26.6mV` is exactly the double nearest to 0.0266.
fn parse_with_units(s: &str, what: &str, units: &[(&str, i32)]) -> Result<f64> {
    let t = s.trim();
    let (num, exp) = units
        .iter()
        .find_map(|&(suffix, exp)| t.strip_suffix(suffix).map(|n| (n.trim(), exp)))
        .unwrap_or((t, 0));
    let bad = || Error::Validation(format!("cannot parse {what} `{s}`"));
    let (mantissa, e) = match num.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i32>().map_err(|_| bad())?),
        None => (num, 0),
    };
    mantissa.parse::<f64>().map_err(|_| bad())?;
    let v: f64 = format!("{mantissa}e{}", e + exp).parse().map_err(|_| bad())?;
    if !v.is_finite() {
        return Err(Error::Validation(format!("{what} `{s}` is not finite")));
    }
    Ok(v)
}

/// Parses a time such as `16.8ms`, `-100ms`, `1us`, `0.5s` or a bare number of seconds.
pub fn parse_duration(s: &str) -> Result<f64> {
    parse_with_units(
        s,
        "time",
        &[("ms", -3), ("us", -6), ("µs", -6), ("ns", -9), ("s", 0)],
    )
}

/// Parses a current such as `150nA`, `24pA`, `1.5uA` or a bare number of amperes.
pub fn parse_current(s: &str) -> Result<f64> {
    parse_with_units(
        s,
        "current",
        &[
            ("mA", -3),
            ("uA", -6),
            ("µA", -6),
            ("nA", -9),
            ("pA", -12),
            ("fA", -15),
            ("A", 0),
        ],
    )
}

/// Parses a voltage such as `26.6mV`, `3.3V` or a bare number of volts.
pub fn parse_voltage(s: &str) -> Result<f64> {
    parse_with_units(s, "voltage", &[("mV", -3), ("uV", -6), ("µV", -6), ("V", 0)])
}

/// Parses a capacitance such as `10pF` or `10fF`.
pub fn parse_capacitance(s: &str) -> Result<f64> {
    parse_with_units(
        s,
        "capacitance",
        &[("uF", -6), ("nF", -9), ("pF", -12), ("fF", -15), ("F", 0)],
    )
}

/// Parses the value of parameter `name`, accepting the unit suffix its
/// prefix implies (`i_*` currents, `tau_*` times, `c_*` capacitances, ...).
pub fn parse_param_value(name: &str, s: &str) -> Result<f64> {
    if name.starts_with("i_") {
        parse_current(s)
    } else if name.starts_with("tau_") || name == "pulse_width" {
        parse_duration(s)
    } else if name.starts_with("c_") {
        parse_capacitance(s)
    } else if name.starts_with("v_") || name == "u_t" || name == "sigma_vth" {
        parse_voltage(s)
    } else {
        parse_with_units(s, name, &[])
    }
}

/// `start:stop:step` grid, inclusive of `stop` when it lands on the grid.
pub fn parse_range(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Validation(format!("range `{s}` must be start:stop:step")));
    }
    let start = parse_duration(parts[0])?;
    let stop = parse_duration(parts[1])?;
    let step = parse_duration(parts[2])?;
    linspace_step(start, stop, step)
}

pub fn linspace_step(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if step <= 0.0 || !step.is_finite() {
        return Err(Error::Validation(format!("range step must be > 0, got {step}")));
    }
    if start > stop {
        return Err(Error::Validation(format!("range start {start} exceeds stop {stop}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}
