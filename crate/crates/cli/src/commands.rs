use std::fs;

use rayon::prelude::*;

use ribbonlim::frames::{centerline_and_directors, evaluate_j, integrate_frame, FramePath, Profile};
use ribbonlim::geometry::{adapted_coefficients, contravariant_assembly, frame_coefficients};
use ribbonlim::quadratic_forms::{alpha_constants, SymMat2};
use ribbonlim::reduced_density::{qbar, RibbonModel};
use ribbonlim::surface::{corrugate, rank_one_field, ruled_surface, target_field, transverse_grid, width_bound, RibbonMesh};
use ribbonlim::variational::{clamped_minimize, spontaneous_profile, ClampedSpec};

use crate::config::Config;
use crate::error::CliError;
use crate::table::{self, Report};

pub struct Outputs {
    pub out: Option<String>,
    pub mesh: Option<String>,
    pub flat: Option<String>,
    pub centerline: Option<String>,
    pub profile: Option<String>,
}

pub fn emit(path: Option<&str>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input("out", format!("{p}: {e}"))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn report(cfg: &Config, command: &str) -> Report {
    let mut header = vec![("command".to_string(), command.to_string())];
    header.extend(cfg.header());
    Report::new(&header)
}

/// Grid `lo..=hi` with exact endpoints.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let d = (n - 1) as f64;
    (0..n)
        .map(|i| {
            let i = i as f64;
            (lo * (d - i) + hi * i) / d + 0.0
        })
        .collect()
}

pub fn alphas(cfg: &Config, out: &Outputs) -> Result<(), CliError> {
    let a = alpha_constants(&cfg.rigidity()?)?;
    let line = format!("alpha_plus {:.12} alpha_minus {:.12}", a.plus, a.minus);
    println!("{line}");
    if let Some(p) = &out.out {
        let mut r = report(cfg, "alphas");
        r.line(&line);
        emit(Some(p), &r.into_string())?;
    }
    Ok(())
}

pub fn density_table(cfg: &Config, out: &Outputs) -> Result<(), CliError> {
    let model = cfg.model()?;
    let at = cfg.f64("density_table.at")?;
    let chart = model.chart();
    let (lo, hi) = (chart.nodes()[0], chart.nodes()[chart.len() - 1]);
    if !(lo..=hi).contains(&at) {
        return Err(CliError::input("density_table.at", format!("{at} lies outside [{lo}, {hi}]")));
    }
    let ctx = model.context_at(at)?;
    let points = |k: &str| -> Result<usize, CliError> {
        let key = format!("density_table.{k}_points");
        let n = cfg.usize(&key)?;
        if n == 0 {
            return Err(CliError::input(key, "must be positive"));
        }
        Ok(n)
    };
    let mus = linspace(cfg.f64("density_table.mu_min")?, cfg.f64("density_table.mu_max")?, points("mu")?);
    let taus = linspace(cfg.f64("density_table.tau_min")?, cfg.f64("density_table.tau_max")?, points("tau")?);
    let rows: Vec<[f64; 4]> = mus
        .par_iter()
        .flat_map_iter(|&mu| {
            let ctx = &ctx;
            taus.iter().map(move |&tau| {
                let v = qbar(ctx, mu, tau);
                [mu, tau, v.value, v.gamma_star]
            })
        })
        .collect();
    let mut r = report(cfg, "density-table");
    r.line("mu,tau,qbar,gamma_star");
    for row in &rows {
        r.row(row);
    }
    emit(out.out.as_deref(), &r.into_string())
}

fn frame_path(cfg: &Config, model: &RibbonModel, profile: &Profile) -> Result<FramePath, CliError> {
    let n = profile.len();
    let coeffs = frame_coefficients(model.chart(), &profile.mu, &profile.tau, &vec![0.0; n])?;
    integrate_frame(&coeffs, &cfg.matrix3("frame.r0")?, &profile.nodes).map_err(|e| CliError::from_ribbon_input("frame.r0", e))
}

fn write_centerline(path: &str, cfg: &Config, model: &RibbonModel, profile: &Profile) -> Result<(), CliError> {
    let fp = frame_path(cfg, model, profile)?;
    let dirs = centerline_and_directors(&fp, model.chart())?;
    let mut r = report(cfg, "centerline");
    r.line("t,y1,y2,y3,d1x,d1y,d1z,d2x,d2y,d2z,d3x,d3y,d3z");
    for i in 0..fp.len() {
        let mut row = vec![profile.nodes[i]];
        for v in [dirs.y[i], dirs.d1[i], dirs.d2[i], dirs.d3[i]] {
            row.extend(v.iter());
        }
        r.row(&row);
    }
    emit(Some(path), &r.into_string())
}

/// Ruled strip over a det-zero field given in chart coordinates.
fn strip(cfg: &Config, model: &RibbonModel, field: &[SymMat2]) -> Result<RibbonMesh, CliError> {
    let chart = model.chart();
    let rank_one = rank_one_field(field, chart)?;
    let coeffs = adapted_coefficients(chart, field)?;
    let r0 = cfg.matrix3("frame.r0")?;
    let path = integrate_frame(&coeffs, &r0, chart.nodes()).map_err(|e| CliError::from_ribbon_input("frame.r0", e))?;
    let eta = width_bound(&rank_one, chart, cfg.f64("surface.margin")?, cfg.f64("surface.eta_max")?)
        .map_err(|e| CliError::from_ribbon_input("surface", e))?;
    let points = cfg.usize("surface.width_points")?;
    if points < 2 {
        return Err(CliError::input("surface.width_points", "need at least 2"));
    }
    Ok(ruled_surface(&path, &rank_one, chart, eta, &transverse_grid(eta, points))?)
}

fn write_mesh(cfg: &Config, mesh: &RibbonMesh, out: &Outputs, mesh_to_stdout: bool) -> Result<(), CliError> {
    let mut obj = Vec::new();
    mesh.write_obj(&mut obj).expect("writing to memory");
    let obj = String::from_utf8(obj).expect("ascii output");
    match (&out.mesh, mesh_to_stdout) {
        (Some(p), _) => emit(Some(p), &obj)?,
        (None, true) => emit(None, &obj)?,
        _ => {}
    }
    if let Some(p) = &out.flat {
        let mut csv = Vec::new();
        mesh.write_flat_csv(&mut csv).expect("writing to memory");
        let mut r = report(cfg, "flat-coordinates");
        r.line(String::from_utf8(csv).expect("ascii output").trim_end());
        emit(Some(p), &r.into_string())?;
    }
    Ok(())
}

pub fn spontaneous(cfg: &Config, out: &Outputs) -> Result<(), CliError> {
    let model = cfg.model()?;
    let tol = cfg.f64("spontaneous.tolerance")?;
    let contexts = model.contexts()?;
    let mut r = report(cfg, "spontaneous");
    let profile = match cfg.str("spontaneous.mode")? {
        "free" => {
            let s = spontaneous_profile(&model, tol).map_err(|e| CliError::from_ribbon_input("spontaneous.tolerance", e))?;
            r.comment("energy", table::num(s.energy));
            s.profile
        }
        "clamped" => {
            let mut spec = ClampedSpec::straight(model.chart().length());
            spec.r0 = cfg.matrix3("frame.r0")?;
            spec.y_target = cfg.vector3("spontaneous.clamped.y_target")?;
            spec.r_target = cfg.matrix3("spontaneous.clamped.r_target")?;
            spec.penalty = cfg.f64("spontaneous.clamped.penalty")?;
            spec.knots = cfg.usize("spontaneous.clamped.knots")?;
            spec.budget = cfg.usize("spontaneous.clamped.budget")?;
            let c = clamped_minimize(&model, &spec).map_err(|e| CliError::from_ribbon_input("spontaneous.clamped", e))?;
            r.comment("energy", table::num(c.energy));
            r.comment("objective", table::num(c.objective));
            r.comment("position_residual", table::num(c.position_residual));
            r.comment("rotation_residual", table::num(c.rotation_residual));
            r.comment("evaluations", c.evaluations);
            if let Some(w) = &c.warning {
                eprintln!("warning [variational]: {w}");
                r.comment("warning", w);
            }
            c.profile
        }
        other => return Err(CliError::input("spontaneous.mode", format!("unknown mode '{other}' (free, clamped)"))),
    };
    r.line("t,mu,tau,gamma_star,qbar");
    for (i, ctx) in contexts.iter().enumerate() {
        let v = qbar(ctx, profile.mu[i], profile.tau[i]);
        r.row(&[profile.nodes[i], profile.mu[i], profile.tau[i], v.gamma_star, v.value]);
    }
    emit(out.out.as_deref(), &r.into_string())?;
    if let Some(p) = &out.centerline {
        write_centerline(p, cfg, &model, &profile)?;
    }
    if out.mesh.is_some() || out.flat.is_some() {
        let cells = cfg.usize("surface.cells")?;
        let c = corrugate(&model, &profile, cells).map_err(|e| CliError::from_ribbon_input("surface.cells", e))?;
        let mesh = strip(cfg, &model, &c.nodal)?;
        write_mesh(cfg, &mesh, out, false)?;
    }
    Ok(())
}

/// Profile from `--profile` (columns `t, mu, tau`), or the spontaneous one.
fn input_profile(cfg: &Config, model: &RibbonModel, out: &Outputs) -> Result<Profile, CliError> {
    let Some(path) = &out.profile else {
        return Ok(spontaneous_profile(model, cfg.f64("spontaneous.tolerance")?)?.profile);
    };
    let rows = table::read(path, "profile", &["t", "mu", "tau"], &["gamma_star"])?;
    let nodes = model.chart().nodes();
    if rows.len() != nodes.len() {
        return Err(CliError::input(
            "profile",
            format!("{path}: {} rows for a chart with {} nodes", rows.len(), nodes.len()),
        ));
    }
    for (i, (row, &t)) in rows.iter().zip(nodes).enumerate() {
        if (row[0] - t).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(CliError::input("profile", format!("{path}: row {} has t = {} but the chart node is {t}", i + 1, row[0])));
        }
    }
    let gamma = if rows.iter().all(|r| !r[3].is_nan()) {
        Some(rows.iter().map(|r| r[3]).collect())
    } else {
        None
    };
    Profile::new(nodes.to_vec(), rows.iter().map(|r| r[1]).collect(), rows.iter().map(|r| r[2]).collect(), gamma)
        .map_err(|e| CliError::from_ribbon_input("profile", e))
}

pub fn reconstruct(cfg: &Config, out: &Outputs) -> Result<(), CliError> {
    let model = cfg.model()?;
    let profile = input_profile(cfg, &model, out)?;
    let chart = model.chart();
    // on-constraint completion γ = τ²/μ
    let field = (0..chart.len())
        .map(|i| {
            let (mu, tau) = (profile.mu[i], profile.tau[i]);
            let gamma = if mu != 0.0 { tau * tau / mu } else { 0.0 };
            contravariant_assembly(chart.frame(i), mu, tau, gamma)
        })
        .collect::<ribbonlim::Result<Vec<_>>>()?;
    let mesh = strip(cfg, &model, &field)?;
    write_mesh(cfg, &mesh, out, true)?;
    if let Some(p) = &out.centerline {
        write_centerline(p, cfg, &model, &profile)?;
    }
    Ok(())
}

pub fn corrugate_cmd(cfg: &Config, out: &Outputs) -> Result<(), CliError> {
    let model = cfg.model()?;
    let profile = input_profile(cfg, &model, out)?;
    let cells = cfg.usize("surface.cells")?;
    let c = corrugate(&model, &profile, cells).map_err(|e| CliError::from_ribbon_input("surface.cells", e))?;
    let j = evaluate_j(&profile, &model.contexts()?)? / model.chart().length();
    let defect = c.defect(|t| target_field(&model, &profile, t).unwrap_or(SymMat2::ZERO));
    let mut r = report(cfg, "corrugate");
    r.comment("mean_energy", table::num(c.mean_energy()));
    r.comment("mean_relaxed", table::num(c.mean_relaxed()));
    r.comment("mean_qbar", table::num(j));
    r.comment("defect", table::num(defect));
    r.line("t,m11,m12,m22,det");
    for (t, m) in model.chart().nodes().iter().zip(&c.nodal) {
        r.row(&[*t, m.m11, m.m12, m.m22, m.det()]);
    }
    emit(out.out.as_deref(), &r.into_string())?;
    if out.mesh.is_some() || out.flat.is_some() {
        let mesh = strip(cfg, &model, &c.nodal)?;
        write_mesh(cfg, &mesh, out, false)?;
    }
    Ok(())
}
