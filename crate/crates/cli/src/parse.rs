use anyhow::Result;
use exfact_core::Vec3;

use crate::usage;

fn number(s: &str, flag: &str) -> Result<f64> {
    let x: f64 = s.trim().parse().map_err(|_| usage(format!("{flag}: '{s}' is not a number")))?;
    if !x.is_finite() {
        return Err(usage(format!("{flag}: '{s}' is not finite")));
    }
    Ok(x)
}

/// `x,y,z`; missing trailing components are zero.
pub fn vec3(s: &str, flag: &str) -> Result<Vec3> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.is_empty() || parts.len() > 3 {
        return Err(usage(format!("{flag}: expected 1 to 3 comma-separated components, got '{s}'")));
    }
    let mut v = Vec3::zeros();
    for (a, p) in parts.iter().enumerate() {
        v[a] = number(p, flag)?;
    }
    Ok(v)
}

/// Comma list `a,b,c` or inclusive range `start:stop:count`.
pub fn values(s: &str, flag: &str) -> Result<Vec<f64>> {
    if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(usage(format!("{flag}: range must be start:stop:count, got '{s}'")));
        }
        let (a, b) = (number(parts[0], flag)?, number(parts[1], flag)?);
        let n: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| usage(format!("{flag}: count '{}' is not a positive integer", parts[2])))?;
        return match n {
            0 => Err(usage(format!("{flag}: count must be positive"))),
            1 => Ok(vec![a]),
            _ => Ok((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()),
        };
    }
    let v = s.split(',').map(|p| number(p, flag)).collect::<Result<Vec<f64>>>()?;
    if v.is_empty() {
        return Err(usage(format!("{flag}: empty list")));
    }
    Ok(v)
}

/// Exactly `n` comma-separated numbers.
pub fn fixed(s: &str, n: usize, flag: &str) -> Result<Vec<f64>> {
    let v = s.split(',').map(|p| number(p, flag)).collect::<Result<Vec<f64>>>()?;
    if v.len() != n {
        return Err(usage(format!("{flag}: expected {n} comma-separated numbers, got '{s}'")));
    }
    Ok(v)
}
