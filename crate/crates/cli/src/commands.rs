use std::io::BufReader;
use std::sync::Arc;

use anyhow::Result;
use exfact_core::atom::CompensationReport;
use exfact_core::ef::{
    berry_connection, compute_geometry, constancy, curl, gauge_transform, momentum_expectation, split_flagging_nodes,
    BoModel, ConditionalSource, EfPair, FullWavefunction, GeometryOptions, ZeroConditional,
};
use exfact_core::eom::decoupled::DecoupledOscillators;
use exfact_core::eom::{convergence_ratio, corrupt_epsilon, eom_residuals, EomResidualReport};
use exfact_core::grid::wfn::{fmt17, read_wfn, write_wfn, WfnData};
use exfact_core::grid::{GridSpec, RealField, Stencil};
use exfact_core::harmonium::{
    bo_compensation, bo_state, coefficient_scan, harmonium_compensation, scan_csv, solve, HarmoniumParams, ScanMode,
};
use exfact_core::hydrogen::{packet_compensation, HydrogenPacket};
use exfact_core::units::{ParticleSpec, UniformField, UnitSystem};
use exfact_core::Vec3;
use serde::Serialize;
use serde_json::{json, Value};

use crate::args::*;
use crate::output::OutDir;
use crate::{parse, usage, Outcome};

/// Hydrogen nucleus to electron mass ratio.
pub const PROTON_MASS: f64 = 1836.15267343;

fn positive(x: f64, flag: &str) -> Result<()> {
    if !(x.is_finite() && x > 0.0) {
        return Err(usage(format!("{flag} must be positive, got {x}")));
    }
    Ok(())
}

fn harmonium_params(a: &HarmoniumArgs, units: UnitSystem, default_mass: f64) -> Result<HarmoniumParams> {
    let k = parse::vec3(&a.k, "--k")?;
    Ok(HarmoniumParams::new(
        a.mass.unwrap_or(default_mass),
        a.electron_mass,
        a.omega0,
        UniformField::along_z(a.b),
        k,
        units,
    )?)
}

fn oscillators(h: &HarmoniumArgs, d: &DecoupledArgs, units: UnitSystem) -> DecoupledOscillators {
    DecoupledOscillators {
        nuclear_mass: h.mass.unwrap_or(1.0),
        electron_mass: h.electron_mass,
        k_nuclear: d.k_nuclear,
        k_electron: d.k_electron,
        units,
    }
}

/// Nuclear and electronic grids from the grid flags and per-model defaults
/// `(n, nuclear half-width, electronic half-width)`.
fn grids(g: &GridArgs, dim: usize, defaults: (usize, f64, f64)) -> Result<(GridSpec, GridSpec)> {
    let n = g.n.unwrap_or(defaults.0);
    let ne = g.n_electronic.unwrap_or(n);
    let next = g.nuclear_extent.unwrap_or(defaults.1);
    let ext = g.extent.unwrap_or(defaults.2);
    positive(next, "--nuclear-extent")?;
    positive(ext, "--extent")?;
    Ok((GridSpec::cube(dim, n, -next, next)?, GridSpec::cube(dim, ne, -ext, ext)?))
}

fn index_cols(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|a| format!("{prefix}{a}")).collect()
}

fn index_prefix(g: &GridSpec, i: usize) -> String {
    g.unravel(i)[..g.dim()].iter().map(|k| format!("{k},")).collect()
}

pub fn harmonium_scan(a: ScanArgs, cfg: &Value) -> Result<Outcome> {
    let mut out = OutDir::create(&a.common.out)?;
    let ratios = parse::values(&a.ratio, "--ratio")?;
    let bs = parse::values(&a.b, "--b")?;
    let mode = match a.mode {
        ScanModeArg::MassRatio => ScanMode::MassRatio,
        ScanModeArg::Field => ScanMode::Field,
    };
    let rows = coefficient_scan(&ratios, &bs, mode)?;
    out.write("harmonium_scan.csv", scan_csv(&rows).as_bytes())?;
    out.finish("harmonium-scan", cfg)?;
    Ok(Outcome { pass: true, message: format!("{} rows written to {}", rows.len(), a.common.out.display()) })
}

pub fn compensate(a: CompensateArgs, cfg: &Value) -> Result<Outcome> {
    let mut out = OutDir::create(&a.common.out)?;
    let units = a.common.units()?;
    positive(a.tol, "--tol")?;
    let stencil = Stencil::from(a.stencil);
    let report = match a.model {
        CompensateModel::Harmonium | CompensateModel::HarmoniumBo => {
            let p = harmonium_params(&a.harmonium, units, 1.0)?;
            let dim = a.dim.unwrap_or(2);
            if !(2..=3).contains(&dim) {
                return Err(usage("--dim must be 2 or 3 for the harmonium models"));
            }
            let (gn, ge) = grids(&a.grid, dim, (129, 1.0, 10.0))?;
            if a.model == CompensateModel::Harmonium {
                harmonium_compensation(&p, &gn, &ge, stencil, a.tol)?.0
            } else {
                bo_compensation(&p, &gn, &ge, stencil, a.tol)?.0
            }
        }
        CompensateModel::HydrogenPacket => {
            if a.dim.is_some_and(|d| d != 3) {
                return Err(usage("the hydrogen wave-packet is three-dimensional; --dim must be 3"));
            }
            let p1 = parse::vec3(&a.p1, "--p1")?;
            let p2 = parse::vec3(&a.p2, "--p2")?;
            let pk = HydrogenPacket::hydrogenic(
                p1,
                p2,
                a.harmonium.mass.unwrap_or(PROTON_MASS),
                a.harmonium.electron_mass,
                units,
            )?;
            let mut g = a.grid.clone();
            g.n_electronic = g.n_electronic.or(Some(41));
            let (gn, ge) = grids(&g, 3, (9, 1.0, 12.0))?;
            packet_compensation(&pk, a.t, &gn, &ge, stencil, a.tol)?
        }
    };
    let mut doc = serde_json::to_value(&report)?;
    let m = doc.as_object_mut().expect("report object");
    let a0 = m.remove("a0").unwrap_or(Value::Null);
    m.insert("A0".into(), a0);
    m.insert("expect_fail".into(), json!(a.expect_fail));
    out.write_json("compensation.json", &doc)?;
    out.finish("compensate", cfg)?;
    let eps = report.epsilon_constancy.as_ref().map(|c| c.metric);
    let message = format!(
        "{}: A_tot constancy {:.3e}, epsilon constancy {}, max curvature {:.3e} (tol {:.1e}){}",
        report.model,
        report.a_tot_constancy.metric,
        eps.map_or("n/a".to_string(), |e| format!("{e:.3e}")),
        report.curvature_max,
        a.tol,
        if a.expect_fail { ", failure expected" } else { "" },
    );
    Ok(Outcome { pass: report.pass != a.expect_fail, message })
}

pub fn counterexample(a: CounterexampleArgs, cfg: &Value) -> Result<Outcome> {
    let mut out = OutDir::create(&a.common.out)?;
    let units = a.common.units()?;
    positive(a.h, "--h")?;
    positive(a.tol, "--tol")?;
    let p1 = parse::vec3(&a.p1, "--p1")?;
    let p2 = parse::vec3(&a.p2, "--p2")?;
    let pk = match (a.e1, a.e2) {
        (None, None) => HydrogenPacket::hydrogenic(p1, p2, a.mass, a.electron_mass, units)?,
        (Some(e1), Some(e2)) => HydrogenPacket::new(p1, p2, e1, e2, a.mass, a.electron_mass, units)?,
        _ => return Err(usage("--e1 and --e2 must be given together")),
    };
    let rx = parse::values(&a.rx, "--rx")?;
    let ts = parse::values(&a.t, "--t")?;
    let closed = |r: &Vec3, t: f64| -> Result<f64> {
        if a.general_curl {
            Ok(pk.berry_curvature(r, t)[1])
        } else {
            Ok(pk.berry_curvature_hy(r, t)?)
        }
    };
    let period = pk.period();
    let mut csv = String::from("Rx,t,Hy_closed_form,Hy_numeric_curl,abs_diff\n");
    let mut max_diff: f64 = 0.0;
    let mut max_hy: f64 = 0.0;
    let mut period_mismatch: f64 = 0.0;
    let mut rows = 0usize;
    let mut row = |csv: &mut String, r: &Vec3, t: f64, hy: f64| -> f64 {
        let num = pk.numeric_curl(r, t, a.h)[1];
        let d = (hy - num).abs();
        csv.push_str(&format!("{},{},{},{},{}\n", fmt17(r[0]), fmt17(t), fmt17(hy), fmt17(num), fmt17(d)));
        rows += 1;
        d
    };
    let mut base = Vec::with_capacity(ts.len() * rx.len());
    for &t in &ts {
        for &x in &rx {
            let r = Vec3::new(x, a.ry, a.rz);
            let hy = closed(&r, t)?;
            max_hy = max_hy.max(hy.abs());
            max_diff = max_diff.max(row(&mut csv, &r, t, hy));
            base.push((r, t, hy));
        }
    }
    // One period later every row must repeat.
    if period.is_finite() {
        for (r, t, hy) in &base {
            let later = closed(r, t + period)?;
            period_mismatch = period_mismatch.max((later - hy).abs());
            max_diff = max_diff.max(row(&mut csv, r, t + period, later));
        }
    }
    csv.push_str(&format!("max_abs_diff,,,,{}\n", fmt17(max_diff)));
    out.write("counterexample.csv", csv.as_bytes())?;
    let pass = max_diff < a.tol && period_mismatch <= 1e-12;
    out.write_json(
        "counterexample.json",
        &json!({
            "rows": rows,
            "max_abs_diff": max_diff,
            "max_abs_hy": max_hy,
            "period": if period.is_finite() { Some(period) } else { None },
            "period_max_mismatch": period_mismatch,
            "tolerance": a.tol,
            "general_curl": a.general_curl,
            "pass": pass,
        }),
    )?;
    out.finish("counterexample", cfg)?;
    Ok(Outcome {
        pass,
        message: format!("{rows} rows, max |diff| {max_diff:.3e}, max |H_y| {max_hy:.3e}, period mismatch {period_mismatch:.1e}"),
    })
}

#[derive(Serialize)]
struct EomLevel {
    n_nuclear: usize,
    n_electronic: usize,
    residuals: EomResidualReport,
    gauge_transformed: Option<EomResidualReport>,
}

/// `θ = c_x X + c_y Y + c_xx X² + c_xy XY + c_yy Y²` on a planar grid.
fn polynomial_theta(g: &GridSpec, c: &[f64]) -> RealField {
    RealField::from_fn(g, |p| c[0] * p[0] + c[1] * p[1] + c[2] * p[0] * p[0] + c[3] * p[0] * p[1] + c[4] * p[1] * p[1])
}

pub fn eom_residual(a: EomArgs, cfg: &Value) -> Result<Outcome> {
    let mut out = OutDir::create(&a.common.out)?;
    let units = a.common.units()?;
    positive(a.tol, "--tol")?;
    let window = parse::fixed(&a.ratio_window, 2, "--ratio-window")?;
    let gauge = a.gauge.as_deref().map(|s| parse::fixed(s, 5, "--gauge")).transpose()?;
    match a.model {
        EomModel::Harmonium => {
            let p = harmonium_params(&a.harmonium, units, 1.0)?;
            let sol = solve(&p)?;
            let stencil = a.stencil.map(Stencil::from).unwrap_or(Stencil::Central2);
            let opts = GeometryOptions { stencil };
            let n = a.grid.n.unwrap_or(65);
            let ne = a.grid.n_electronic.unwrap_or(n);
            let mut levels = Vec::new();
            for (n, ne) in [(n, ne), (2 * n - 1, 2 * ne - 1)] {
                let g = GridArgs { n: Some(n), n_electronic: Some(ne), ..a.grid.clone() };
                let (gn, ge) = grids(&g, 2, (n, 1.0, 10.0))?;
                let pair = sol.ef_pair(&gn, &ge)?;
                let op = sol.separation(2)?.bo_model(stencil).on_grid(&ge);
                let evaluate = |pair: &EfPair| -> Result<EomResidualReport> {
                    let mut geo = compute_geometry(pair, &op, &p.nucleus(), &p.field, &p.units, opts)?;
                    if let Some(d) = a.corrupt_epsilon {
                        corrupt_epsilon(&mut geo, d, 0);
                    }
                    Ok(eom_residuals(pair, &geo, &op, &p.nucleus(), &p.units)?)
                };
                let residuals = evaluate(&pair)?;
                let gauge_transformed = match &gauge {
                    Some(c) => Some(evaluate(&gauge_transform(&pair, &polynomial_theta(&gn, c), None)?)?),
                    None => None,
                };
                levels.push(EomLevel { n_nuclear: n, n_electronic: ne, residuals, gauge_transformed });
            }
            let ratio_n = convergence_ratio(levels[0].residuals.nuclear_residual, levels[1].residuals.nuclear_residual);
            let ratio_e =
                convergence_ratio(levels[0].residuals.electronic_residual, levels[1].residuals.electronic_residual);
            let in_window = |r: f64| r >= window[0] && r <= window[1];
            let gauge_ok = levels.iter().all(|l| match &l.gauge_transformed {
                Some(g) => {
                    g.nuclear_residual <= 2.0 * l.residuals.nuclear_residual
                        && g.electronic_residual <= 2.0 * l.residuals.electronic_residual
                }
                None => true,
            });
            let pass = in_window(ratio_n) && in_window(ratio_e) && gauge_ok;
            out.write_json(
                "eom.json",
                &json!({
                    "model": "harmonium",
                    "levels": levels,
                    "ratio_nuclear": ratio_n,
                    "ratio_electronic": ratio_e,
                    "ratio_window": window,
                    "corrupt_epsilon": a.corrupt_epsilon,
                    "gauge_within_2x": gauge.as_ref().map(|_| gauge_ok),
                    "pass": pass,
                }),
            )?;
            out.finish("eom-residual", cfg)?;
            Ok(Outcome {
                pass,
                message: format!("refinement ratios: nuclear {ratio_n:.4}, electronic {ratio_e:.4}; gauge check {}", match gauge {
                    Some(_) if gauge_ok => "ok",
                    Some(_) => "failed",
                    None => "skipped",
                }),
            })
        }
        EomModel::Decoupled => {
            let osc = oscillators(&a.harmonium, &a.decoupled, units);
            let stencil = a.stencil.map(Stencil::from).unwrap_or(Stencil::Richardson);
            let (gn, ge) = grids(&a.grid, 1, (2049, 10.0, 10.0))?;
            let pair = osc.pair(&gn, &ge)?;
            let op = osc.model(stencil).on_grid(&ge);
            let nucleus = ParticleSpec::new(osc.nuclear_mass, 1)?;
            let mut geo =
                compute_geometry(&pair, &op, &nucleus, &UniformField::zero(), &units, GeometryOptions { stencil })?;
            if let Some(d) = a.corrupt_epsilon {
                corrupt_epsilon(&mut geo, d, 0);
            }
            let r = eom_residuals(&pair, &geo, &op, &nucleus, &units)?;
            let pass = r.nuclear_residual < a.tol && r.electronic_residual < a.tol;
            let message =
                format!("residuals: nuclear {:.3e}, electronic {:.3e} (tol {:.1e})", r.nuclear_residual, r.electronic_residual, a.tol);
            out.write_json(
                "eom.json",
                &json!({
                    "model": "decoupled",
                    "residuals": r,
                    "tolerance": a.tol,
                    "corrupt_epsilon": a.corrupt_epsilon,
                    "pass": pass,
                }),
            )?;
            out.finish("eom-residual", cfg)?;
            Ok(Outcome { pass, message })
        }
    }
}

/// Electronic Hamiltonian supplied to `ef-extract` for `ε`.
pub struct ExtractHamiltonian {
    pub model: BoModel,
    pub nucleus: ParticleSpec,
    pub field: UniformField,
}

pub struct ExtractOptions {
    pub r_ref: Vec3,
    pub chi_floor: Option<f64>,
    pub stencil: Stencil,
    pub units: UnitSystem,
    pub hamiltonian: Option<ExtractHamiltonian>,
}

/// Files and summary produced by `ef-extract`.
pub struct ExtractProducts {
    pub files: Vec<(&'static str, Vec<u8>)>,
    pub summary: Value,
}

/// Nuclear points at least two layers from the boundary whose stencils avoid nodes.
fn usable_points(g: &GridSpec, valid: &[bool]) -> Vec<usize> {
    (0..g.len())
        .filter(|&i| {
            g.is_interior(i, 2)
                && (0..g.dim()).all(|ax| {
                    let m = g.unravel(i)[ax];
                    let s = g.stride(ax);
                    (1..=3).all(|k| (m < k || valid[i - k * s]) && (m + k >= g.n()[ax] || valid[i + k * s]))
                })
                && valid[i]
        })
        .collect()
}

/// Factorizes `psi` and renders every `ef-extract` output.
pub fn extract(psi: &FullWavefunction, opts: &ExtractOptions) -> Result<ExtractProducts> {
    // The input is a stationary snapshot: in the reference-point gauge Φ carries no time dependence.
    let zero: Arc<dyn ConditionalSource> = Arc::new(ZeroConditional::new(psi.nuclear.clone(), psi.electronic.clone()));
    let pair = split_flagging_nodes(psi, &opts.r_ref, opts.chi_floor)?.with_time_derivatives(None, Some(zero));
    let gn = pair.nuclear().clone();
    let d = gn.dim();
    let idx_header = index_cols("i", d).join(",");
    let mut files: Vec<(&'static str, Vec<u8>)> = Vec::new();

    let mut chi = Vec::new();
    write_wfn(&mut chi, &WfnData::from_field(&pair.chi))?;
    files.push(("chi.csv", chi));

    let norms = pair.partial_norms();
    let mut s = format!("{idx_header},norm,valid\n");
    for (i, n) in norms.iter().enumerate() {
        s.push_str(&format!("{}{},{}\n", index_prefix(&gn, i), fmt17(*n), u8::from(pair.valid[i])));
    }
    files.push(("phi_norms.csv", s.into_bytes()));

    let (a_berry, imag_residue) = berry_connection(&pair, opts.stencil, &opts.units)?;
    let mut s = format!("{idx_header},{}\n", index_cols("A", d).join(","));
    for i in 0..gn.len() {
        let comps: Vec<String> = a_berry.components.iter().map(|c| fmt17(c[i])).collect();
        s.push_str(&format!("{}{}\n", index_prefix(&gn, i), comps.join(",")));
    }
    files.push(("a_berry.csv", s.into_bytes()));

    let curv = curl(&a_berry, opts.stencil)?;
    let mut s = idx_header.clone();
    for (a, b) in &curv.pairs {
        s.push_str(&format!(",F{}{}", a + 1, b + 1));
    }
    s.push('\n');
    for i in 0..gn.len() {
        s.push_str(&index_prefix(&gn, i).trim_end_matches(',').to_string());
        for v in &curv.values {
            s.push_str(&format!(",{}", fmt17(v[i])));
        }
        s.push('\n');
    }
    files.push(("curvature.csv", s.into_bytes()));

    let mut s = format!("{idx_header}\n");
    for i in (0..gn.len()).filter(|&i| !pair.valid[i]) {
        s.push_str(index_prefix(&gn, i).trim_end_matches(','));
        s.push('\n');
    }
    files.push(("nodes.csv", s.into_bytes()));

    let usable = usable_points(&gn, &pair.valid);
    let comps: Vec<&[f64]> = a_berry.components.iter().map(|c| c.as_slice()).collect();
    let mut summary = json!({
        "nuclear_grid": gn,
        "electronic_grid": pair.electronic(),
        "gauge": pair.gauge_tag,
        "nodes": pair.invalid_points().len(),
        "partial_norm_max_deviation": usable.iter().map(|&i| (norms[i] - 1.0).abs()).fold(0.0, f64::max),
        "a_berry_imag_residue": imag_residue,
        "a_berry_constancy": constancy(&comps, &usable, 0.0),
        "berry_curvature_max": curv.max_abs_over(&usable),
    });

    if let Some(h) = &opts.hamiltonian {
        let op = h.model.on_grid(pair.electronic());
        let geo =
            compute_geometry(&pair, &op, &h.nucleus, &h.field, &opts.units, GeometryOptions { stencil: opts.stencil })?;
        let mut s = format!("{idx_header},epsilon,h_bo,q\n");
        for i in 0..gn.len() {
            s.push_str(&format!(
                "{}{},{},{}\n",
                index_prefix(&gn, i),
                fmt17(geo.epsilon.values[i]),
                fmt17(geo.h_bo.values[i]),
                fmt17(geo.q.values[i])
            ));
        }
        files.push(("epsilon.csv", s.into_bytes()));
        let interior = geo.interior();
        let report = CompensationReport::from_geometry("extracted", &geo, &h.field, pair.electronic(), None, 1e-6);
        let momentum = momentum_expectation(&pair.chi, &geo.a_total, &h.nucleus, &opts.units, opts.stencil)?;
        let m = summary.as_object_mut().expect("summary object");
        m.insert("a_tot_mean".into(), json!(report.a_tot_mean));
        m.insert("a_tot_constancy".into(), json!(report.a_tot_constancy));
        m.insert("epsilon_mean".into(), json!(report.epsilon_mean));
        m.insert("epsilon_constancy".into(), json!(report.epsilon_constancy));
        m.insert("epsilon_imag_residue".into(), json!(geo.epsilon_imag_residue));
        m.insert("curvature_max".into(), json!(geo.curvature.max_abs_over(&interior)));
        m.insert("momentum".into(), json!([momentum[0], momentum[1], momentum[2]]));
    }
    Ok(ExtractProducts { files, summary })
}

pub fn ef_extract(a: ExtractArgs, cfg: &Value) -> Result<Outcome> {
    let mut out = OutDir::create(&a.common.out)?;
    let units = a.common.units()?;
    if let Some(f) = a.chi_floor {
        positive(f, "--chi-floor")?;
    }
    let file = std::fs::File::open(&a.input).map_err(|e| usage(format!("cannot open {}: {e}", a.input.display())))?;
    let data = read_wfn(BufReader::new(file))?;
    let (gn, ge) = data.product_grids()?;
    let psi = FullWavefunction::new(gn, ge.clone(), data.values)?;
    let stencil = Stencil::from(a.stencil);
    let hamiltonian = match a.hamiltonian {
        HamiltonianArg::None => None,
        HamiltonianArg::Harmonium => {
            let p = harmonium_params(&a.harmonium, units, 1.0)?;
            Some(ExtractHamiltonian {
                model: solve(&p)?.separation(ge.dim())?.bo_model(stencil),
                nucleus: p.nucleus(),
                field: p.field,
            })
        }
        HamiltonianArg::Decoupled => {
            let osc = oscillators(&a.harmonium, &a.decoupled, units);
            Some(ExtractHamiltonian {
                model: osc.model(stencil),
                nucleus: ParticleSpec::new(osc.nuclear_mass, 1)?,
                field: UniformField::zero(),
            })
        }
    };
    let opts = ExtractOptions {
        r_ref: parse::vec3(&a.r_ref, "--r-ref")?,
        chi_floor: a.chi_floor,
        stencil,
        units,
        hamiltonian,
    };
    let products = extract(&psi, &opts)?;
    for (name, bytes) in &products.files {
        out.write(name, bytes)?;
    }
    out.write_json("summary.json", &products.summary)?;
    out.finish("ef-extract", cfg)?;
    Ok(Outcome {
        pass: true,
        message: format!("{} nuclear points, {} node(s)", psi.nuclear.len(), products.summary["nodes"]),
    })
}

/// `Ψ` of a model on its product grid, as written by `export-wfn`.
pub fn export_data(a: &ExportArgs) -> Result<(GridSpec, GridSpec, FullWavefunction)> {
    let units = a.common.units()?;
    if !(1..=3).contains(&a.dim) {
        return Err(usage("--dim must be 1, 2 or 3"));
    }
    let pair = match a.model {
        ExportModel::Harmonium | ExportModel::HarmoniumBo => {
            if a.dim == 1 {
                return Err(usage("the harmonium models need --dim 2 or 3"));
            }
            let p = harmonium_params(&a.harmonium, units, 1.0)?;
            let (gn, ge) = grids(&a.grid, a.dim, (33, 1.0, 10.0))?;
            if a.model == ExportModel::Harmonium {
                solve(&p)?.ef_pair(&gn, &ge)?
            } else {
                bo_state(&p)?.pair(&gn, &ge)?
            }
        }
        ExportModel::Decoupled => {
            let (gn, ge) = grids(&a.grid, a.dim, (33, 5.0, 10.0))?;
            oscillators(&a.harmonium, &a.decoupled, units).pair(&gn, &ge)?
        }
    };
    let psi = FullWavefunction::from_pair(&pair);
    Ok((pair.nuclear().clone(), pair.electronic().clone(), psi))
}

pub fn export_wfn(a: ExportArgs, cfg: &Value) -> Result<Outcome> {
    let mut out = OutDir::create(&a.common.out)?;
    if a.file.contains('/') || a.file.contains('\\') || a.file == "manifest.json" {
        return Err(usage("--file must be a plain file name other than manifest.json"));
    }
    let (gn, ge, psi) = export_data(&a)?;
    let mut buf = Vec::new();
    write_wfn(&mut buf, &WfnData::from_product(&gn, &ge, psi.values))?;
    out.write(&a.file, &buf)?;
    out.finish("export-wfn", cfg)?;
    Ok(Outcome { pass: true, message: format!("{} points written to {}", gn.len() * ge.len(), a.file) })
}
