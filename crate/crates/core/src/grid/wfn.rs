//! WFN-CSV reader and writer.
//!
//! ```text
//! # dim=2
//! # n=65,65
//! # origin=-10,-10
//! # spacing=0.3125,0.3125
//! 0,0,1.0000000000000000e-30,0.0000000000000000e0
//! ...
//! ```
//!
//! Rows are in row-major order (last index fastest). A product grid
//! (nuclear × electronic) adds `# nuclear_dims=<k>`; its first `k` axes are the
//! nuclear ones.

use std::io::{BufRead, Write};

use num_complex::Complex64 as C64;

use super::{ComplexField, GridSpec};
use crate::error::{Error, Result};

/// Fixed 17-significant-digit formatting used for every numeric output.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct WfnData {
    pub n: Vec<usize>,
    pub origin: Vec<f64>,
    pub spacing: Vec<f64>,
    pub nuclear_dims: Option<usize>,
    pub values: Vec<C64>,
}

impl WfnData {
    pub fn from_field(f: &ComplexField) -> Self {
        Self {
            n: f.spec.n().to_vec(),
            origin: f.spec.origin().to_vec(),
            spacing: f.spec.spacing().to_vec(),
            nuclear_dims: None,
            values: f.values.clone(),
        }
    }

    /// Product-grid data, nuclear axes first.
    pub fn from_product(nuclear: &GridSpec, electronic: &GridSpec, values: Vec<C64>) -> Self {
        let cat = |a: &[f64], b: &[f64]| a.iter().chain(b).cloned().collect::<Vec<f64>>();
        Self {
            n: nuclear.n().iter().chain(electronic.n()).cloned().collect(),
            origin: cat(nuclear.origin(), electronic.origin()),
            spacing: cat(nuclear.spacing(), electronic.spacing()),
            nuclear_dims: Some(nuclear.dim()),
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n.len()
    }

    pub fn to_field(&self) -> Result<ComplexField> {
        let spec = GridSpec::new(self.n.clone(), self.origin.clone(), self.spacing.clone())?;
        ComplexField::new(spec, self.values.clone())
    }

    /// Nuclear and electronic grids of a product-grid file.
    pub fn product_grids(&self) -> Result<(GridSpec, GridSpec)> {
        let k = self
            .nuclear_dims
            .ok_or_else(|| Error::Config("file has no nuclear_dims header".into()))?;
        if k == 0 || k >= self.dim() {
            return Err(Error::Config(format!("nuclear_dims={k} leaves no electronic axes")));
        }
        let nuc = GridSpec::new(self.n[..k].to_vec(), self.origin[..k].to_vec(), self.spacing[..k].to_vec())?;
        let el = GridSpec::new(self.n[k..].to_vec(), self.origin[k..].to_vec(), self.spacing[k..].to_vec())?;
        Ok((nuc, el))
    }
}

pub fn write_wfn(mut w: impl Write, data: &WfnData) -> Result<()> {
    let join_f = |v: &[f64]| v.iter().map(|x| fmt17(*x)).collect::<Vec<_>>().join(",");
    writeln!(w, "# dim={}", data.dim())?;
    writeln!(w, "# n={}", data.n.iter().map(|k| k.to_string()).collect::<Vec<_>>().join(","))?;
    writeln!(w, "# origin={}", join_f(&data.origin))?;
    writeln!(w, "# spacing={}", join_f(&data.spacing))?;
    if let Some(k) = data.nuclear_dims {
        writeln!(w, "# nuclear_dims={k}")?;
    }
    let d = data.dim();
    let mut idx = vec![0usize; d];
    for v in &data.values {
        for i in &idx {
            write!(w, "{i},")?;
        }
        writeln!(w, "{},{}", fmt17(v.re), fmt17(v.im))?;
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < data.n[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    Ok(())
}

fn perr(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize, key: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|t| t.trim().parse::<T>().map_err(|_| perr(line, format!("bad {key} entry '{t}'"))))
        .collect()
}

pub fn read_wfn(r: impl BufRead) -> Result<WfnData> {
    let mut dim: Option<usize> = None;
    let mut n: Option<Vec<usize>> = None;
    let mut origin: Option<Vec<f64>> = None;
    let mut spacing: Option<Vec<f64>> = None;
    let mut nuclear_dims = None;
    let mut values: Vec<C64> = Vec::new();
    let mut expected = 0usize;
    let mut idx: Vec<usize> = Vec::new();
    let mut last_line = 0;

    for (k, line) in r.lines().enumerate() {
        let lineno = k + 1;
        last_line = lineno;
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('#') {
            if !values.is_empty() {
                return Err(perr(lineno, "header line after data rows"));
            }
            let (key, val) = h
                .trim()
                .split_once('=')
                .ok_or_else(|| perr(lineno, format!("malformed header '{t}'")))?;
            match key.trim() {
                "dim" => dim = Some(val.trim().parse().map_err(|_| perr(lineno, "bad dim"))?),
                "n" => n = Some(parse_list(val, lineno, "n")?),
                "origin" => origin = Some(parse_list(val, lineno, "origin")?),
                "spacing" => spacing = Some(parse_list(val, lineno, "spacing")?),
                "nuclear_dims" => {
                    nuclear_dims = Some(val.trim().parse().map_err(|_| perr(lineno, "bad nuclear_dims"))?)
                }
                other => return Err(perr(lineno, format!("unknown header key '{other}'"))),
            }
            continue;
        }
        if values.is_empty() && idx.is_empty() {
            // first data row: the header must be complete
            let d = dim.ok_or_else(|| perr(lineno, "missing '# dim=' header"))?;
            let nn = n.as_ref().ok_or_else(|| perr(lineno, "missing '# n=' header"))?;
            let o = origin.as_ref().ok_or_else(|| perr(lineno, "missing '# origin=' header"))?;
            let s = spacing.as_ref().ok_or_else(|| perr(lineno, "missing '# spacing=' header"))?;
            if d == 0 || nn.len() != d || o.len() != d || s.len() != d {
                return Err(perr(lineno, format!("header lists do not match dim={d}")));
            }
            expected = nn.iter().product();
            idx = vec![0; d];
        }
        let d = idx.len();
        let nn = n.as_ref().unwrap();
        if values.len() == expected {
            return Err(perr(lineno, format!("more rows than the {expected} declared by n")));
        }
        let fields: Vec<&str> = t.split(',').collect();
        if fields.len() != d + 2 {
            return Err(perr(lineno, format!("expected {} fields, found {}", d + 2, fields.len())));
        }
        for a in 0..d {
            let i: usize = fields[a].trim().parse().map_err(|_| perr(lineno, "bad index"))?;
            if i != idx[a] {
                return Err(perr(lineno, format!("index {i} on axis {a} out of row-major order")));
            }
        }
        let re: f64 = fields[d].trim().parse().map_err(|_| perr(lineno, "bad real part"))?;
        let im: f64 = fields[d + 1].trim().parse().map_err(|_| perr(lineno, "bad imaginary part"))?;
        values.push(C64::new(re, im));
        for a in (0..d).rev() {
            idx[a] += 1;
            if idx[a] < nn[a] {
                break;
            }
            idx[a] = 0;
        }
    }
    let Some(nn) = n else {
        return Err(perr(last_line.max(1), "missing '# n=' header"));
    };
    if values.len() != expected || values.is_empty() {
        return Err(perr(
            last_line + 1,
            format!("found {} rows, n declares {}", values.len(), nn.iter().product::<usize>()),
        ));
    }
    Ok(WfnData { n: nn, origin: origin.unwrap(), spacing: spacing.unwrap(), nuclear_dims, values })
}
