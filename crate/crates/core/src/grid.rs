//! Density grids written as `a:b:step` or as comma-separated values.
//!
//! Values are parsed as exact rationals (`0.05`, `1/3`, `2`), so a grid such
//! as `0:1:0.05` has exactly 21 points and hits both endpoints.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Parses a decimal (`0.125`, `-3`, `.5`) or fraction (`1/3`) literal.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let err = || Error::Parse(format!("not a number: {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(BigRational::new(num, den));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty()
        || !int_part
            .chars()
            .chain(frac_part.chars())
            .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let numerator: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| err())?
    };
    let denominator = num_traits::pow(BigInt::from(10), frac_part.len());
    let value = BigRational::new(numerator, denominator);
    Ok(if negative { -value } else { value })
}

/// Expands a grid specification into exact values, in order.
pub fn parse_grid(spec: &str) -> Result<Vec<BigRational>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    let parts: Vec<&str> = spec.split(':').collect();
    match parts.as_slice() {
        [start, end, step] => {
            let (start, end, step) = (
                parse_rational(start)?,
                parse_rational(end)?,
                parse_rational(step)?,
            );
            if step <= BigRational::zero() {
                return Err(Error::Parse(format!(
                    "grid step must be positive in {spec:?}"
                )));
            }
            let mut values = Vec::new();
            let mut k = 0u64;
            loop {
                let v = &start + &step * BigRational::from_integer(k.into());
                if v > end {
                    break;
                }
                values.push(v);
                k += 1;
            }
            Ok(values)
        }
        [_] => spec.split(',').map(parse_rational).collect(),
        _ => Err(Error::Parse(format!("expected a:b:step, got {spec:?}"))),
    }
}

/// Grid values as doubles.
pub fn to_f64(values: &[BigRational]) -> Vec<f64> {
    values
        .iter()
        .map(|v| v.to_f64().unwrap_or(f64::NAN))
        .collect()
}

/// Fails unless every value lies in `[0, 1]`.
pub fn check_densities(values: &[BigRational]) -> Result<()> {
    let one = BigRational::from_integer(1.into());
    match values
        .iter()
        .find(|v| **v < BigRational::zero() || **v > one)
    {
        Some(v) => Err(Error::InvalidArgument(format!(
            "density {v} outside [0, 1]"
        ))),
        None => Ok(()),
    }
}
