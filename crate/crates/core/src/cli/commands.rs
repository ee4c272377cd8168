//! The six pipelines behind the command-line front end.

use super::config::{CorrelateMethod, Correlator, RunConfig, Solver};
use super::output::{read_spectrum_csv, ArtifactSink};
use super::svg;
use crate::correlations::{
    gaussian_packet, overlap_f, overlap_norm, phi_phi_closed_form, unfold, CorrelatorRequest, ModeSet, OverlapOptions, SeriesValue,
    WavePacketPair,
};
use crate::error::{Error, Result};
use crate::inverse::{reconstruct, roundtrip_validate, InverseProblem};
use crate::profiles::{coordinate_map, symmetric_nodes, Descriptor, TLLModel};
use crate::pwt::classify_pwt;
use crate::semiclassics::{weyl_check, wkb_report, WeylCheck};
use crate::sl::{
    assemble_coefficients, closed_form_gegenbauer, eigenfunctions, liouville_transform, solve_spectrum_fd, solve_spectrum_shooting, EigenMode,
    FdOptions, GridKind, SLSpectrum, ShootingOptions, SturmLiouville,
};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

/// Spectrum (and optionally modes) of the configured model.
pub struct Solved {
    pub model: TLLModel,
    pub spectrum: SLSpectrum,
    pub modes: Option<Vec<EigenMode>>,
    pub v0: f64,
    pub method: &'static str,
}

fn fd_options(cfg: &RunConfig, n_max: usize) -> FdOptions {
    let mut base = cfg.numeric.fd_base_points;
    // Eight cells per node of the highest mode keep the Richardson table in its asymptotic range.
    while base < 8 * n_max + 1 {
        base = 2 * base - 1;
    }
    FdOptions { base_points: base, levels: cfg.numeric.fd_levels, grid: GridKind::Auto, ..FdOptions::default() }
}

pub fn solve(cfg: &RunConfig, n_max: usize, need_modes: bool) -> Result<Solved> {
    let model = cfg.build_model()?;
    let gb = cfg.gegenbauer();
    let solver = cfg.numeric.solver;
    if solver == Solver::ClosedForm || (solver == Solver::Auto && gb.is_some()) {
        let g = gb.ok_or_else(|| Error::Usage("solver = \"closed_form\" needs a square-root velocity with constant or power-law K".into()))?;
        let c = closed_form_gegenbauer(g.alpha, g.v, g.k, &model.geometry, n_max, g.massive)?;
        return Ok(Solved { model, spectrum: c.spectrum, modes: Some(c.modes), v0: c.v0, method: "closed_form" });
    }
    let coeffs = assemble_coefficients(&model)?;
    let use_fd = solver == Solver::Fd || (solver == Solver::Auto && coeffs.singular_ends());
    let (spectrum, method) = if use_fd {
        (solve_spectrum_fd(&coeffs, n_max, &fd_options(cfg, n_max))?, "finite_difference")
    } else {
        (solve_spectrum_shooting(&coeffs, n_max, &ShootingOptions::default())?, "shooting")
    };
    let modes = if need_modes { Some(eigenfunctions(&coeffs, &spectrum)?) } else { None };
    Ok(Solved { v0: coeffs.v0, model, spectrum, modes, method })
}

/// One-line outcome printed by the front end.
pub type Summary = String;

#[derive(Serialize)]
struct SpectrumDoc<'a> {
    method: &'a str,
    v0: f64,
    conformal_period: f64,
    spectrum: &'a SLSpectrum,
    weyl: Option<WeylCheck>,
}

fn spectrum_rows(s: &SLSpectrum) -> Vec<Vec<f64>> {
    let ee = s.energy_errors();
    (0..s.len()).map(|n| vec![n as f64, s.lambdas[n], s.energies[n], if ee[n].is_finite() { ee[n] } else { f64::NAN }]).collect()
}

fn write_spectrum_csv(sink: &mut ArtifactSink, s: &Solved) -> Result<()> {
    let meta = vec![("method".to_string(), s.method.to_string()), ("v0".to_string(), s.v0.to_string())];
    sink.write_csv("spectrum.csv", &meta, &["n", "lambda", "energy", "energy_error"], &spectrum_rows(&s.spectrum))?;
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<Summary> {
    let s = solve(cfg, cfg.numeric.n_max, false)?;
    write_spectrum_csv(sink, &s)?;
    let l = cfg.model.length;
    let weyl = if s.spectrum.len() >= 50 { Some(weyl_check(&assemble_coefficients(&s.model)?, &s.spectrum)?) } else { None };
    sink.write_json("spectrum.json", &SpectrumDoc { method: s.method, v0: s.v0, conformal_period: l / s.v0, spectrum: &s.spectrum, weyl })?;
    if cfg.output.svg {
        let e: Vec<(f64, f64)> = s.spectrum.energies.iter().enumerate().map(|(n, e)| (n as f64, *e)).collect();
        let lin: Vec<(f64, f64)> = (0..s.spectrum.len()).map(|n| (n as f64, std::f64::consts::PI * n as f64 * s.v0 / l)).collect();
        sink.write_svg("spectrum.svg", &svg::line_plot("Spectrum", &[("E_n", e), ("pi n v0 / L", lin)], "n", "E_n"))?;
    }
    let n = s.spectrum.len() - 1;
    let mut out = format!("spectrum: {} levels ({}), E_1 = {:.10}, E_{n} = {:.10}", n + 1, s.method, s.spectrum.energies[1], s.spectrum.energies[n]);
    if let Some(w) = weyl {
        out.push_str(&format!(", Weyl gap {:.3e}", w.ratio_gap));
    }
    Ok(out)
}

pub fn check_pwt(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<Summary> {
    let s = solve(cfg, cfg.numeric.n_max, true)?;
    let modes = s.modes.as_ref().expect("modes requested");
    let v = classify_pwt(&s.model, &s.spectrum, modes, cfg.numeric.eps_spec, cfg.numeric.eps_parity)?;
    write_spectrum_csv(sink, &s)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        method: &'a str,
        v0: f64,
        verdict: &'a crate::pwt::PWTVerdict,
        energies: &'a [f64],
    }
    sink.write_json("verdict.json", &Doc { method: s.method, v0: s.v0, verdict: &v, energies: &s.spectrum.energies })?;
    Ok(v.summary())
}

#[derive(Serialize)]
struct CorrelateDoc {
    correlator: Correlator,
    method: CorrelateMethod,
    x_prime: f64,
    epsilon: f64,
    n_modes: Option<usize>,
    v0: f64,
    transfer_time: f64,
    /// max_x |C(x, T) - C(-x, 0)| when T lies on the time grid.
    mirror_defect: Option<f64>,
    max_truncation: Option<f64>,
    all_converged: Option<bool>,
}

pub fn correlate(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<Summary> {
    let c = &cfg.correlate;
    let l = cfg.model.length;
    let xs = symmetric_nodes(l, c.x_points);
    let x_prime = c.x_prime.unwrap_or(-0.375 * l);
    let model = cfg.build_model()?;
    let v0 = coordinate_map(&model, 1e-12)?.v0;
    let period = l / v0;
    let t_max = c.t_max.unwrap_or(2.0 * period);
    let ts: Vec<f64> = (0..c.t_points).map(|i| t_max * i as f64 / (c.t_points - 1) as f64).collect();
    let (field, epsilon, n_modes, trunc): (Vec<Vec<Complex64>>, f64, Option<usize>, Option<(f64, bool)>) = match c.method {
        CorrelateMethod::ClosedForm => {
            if c.correlator != Correlator::PhiPhi {
                return Err(Error::Usage("the closed form covers phi_phi only".into()));
            }
            let k = match (&model.k.descriptor, model.has_potential()) {
                (Descriptor::Constant { value }, false) => *value,
                _ => return Err(Error::Usage("the closed form needs constant K and no potential".into())),
            };
            let eps = cfg.numeric.epsilon.unwrap_or(0.01 * l);
            let map = unfold(&model)?;
            let f = ts
                .par_iter()
                .map(|&t| xs.iter().map(|&x| phi_phi_closed_form(&map, k, x, x_prime, t, 0.0, eps)).collect::<Result<Vec<_>>>())
                .collect::<Result<Vec<_>>>()?;
            (f, eps, None, None)
        }
        CorrelateMethod::Series => {
            let n_modes = cfg.numeric.n_modes;
            let s = solve(cfg, cfg.numeric.n_max.max(n_modes - 1), true)?;
            let modes = s.modes.as_ref().expect("modes requested");
            let set = ModeSet::new(modes, &s.spectrum.energies, s.v0)?;
            let eps = cfg.numeric.epsilon.unwrap_or(0.0);
            let cells: Vec<Vec<SeriesValue>> = ts
                .par_iter()
                .map(|&t| {
                    xs.iter()
                        .map(|&x| {
                            let req = CorrelatorRequest::new(x, x_prime, t, 0.0, n_modes).with_epsilon(eps);
                            match c.correlator {
                                Correlator::PhiPhi => set.phi_phi(&req),
                                Correlator::PhiTheta => set.phi_theta(&req),
                                Correlator::ThetaTheta => set.theta_theta(&req),
                            }
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            let flat = cells.iter().flatten();
            let max_trunc = flat.clone().map(|v| v.truncation).fold(0.0, f64::max);
            let all_conv = flat.clone().all(|v| v.converged);
            let f = cells.iter().map(|r| r.iter().map(|v| v.value).collect()).collect();
            (f, eps, Some(n_modes), Some((max_trunc, all_conv)))
        }
    };
    let nx = xs.len();
    let mirror_defect = ts.iter().position(|t| (t - period).abs() <= 1e-12 * period).map(|it| {
        (0..nx).map(|i| (field[it][i] - field[0][nx - 1 - i]).norm()).fold(0.0, f64::max)
    });
    let rows: Vec<Vec<f64>> = ts
        .iter()
        .enumerate()
        .flat_map(|(it, &t)| {
            let field = &field;
            xs.iter().enumerate().map(move |(ix, &x)| {
                let z = field[it][ix];
                vec![x, t, z.re, z.im, z.norm()]
            })
        })
        .collect();
    let meta = vec![
        ("correlator".to_string(), format!("{:?}", c.correlator)),
        ("x_prime".to_string(), x_prime.to_string()),
        ("transfer_time".to_string(), period.to_string()),
    ];
    sink.write_csv("correlate.csv", &meta, &["x", "t", "re", "im", "abs"], &rows)?;
    let doc = CorrelateDoc {
        correlator: c.correlator,
        method: c.method,
        x_prime,
        epsilon,
        n_modes,
        v0,
        transfer_time: period,
        mirror_defect,
        max_truncation: trunc.map(|t| t.0),
        all_converged: trunc.map(|t| t.1),
    };
    sink.write_json("correlate.json", &doc)?;
    if cfg.output.svg {
        let re: Vec<Vec<f64>> = field.iter().map(|r| r.iter().map(|z| z.re).collect()).collect();
        let ab: Vec<Vec<f64>> = field.iter().map(|r| r.iter().map(|z| z.norm()).collect()).collect();
        sink.write_svg("correlate_re.svg", &svg::heatmap("Re C(x, t)", &xs, &ts, &re, "x", "t"))?;
        sink.write_svg("correlate_abs.svg", &svg::heatmap("|C(x, t)|", &xs, &ts, &ab, "x", "t"))?;
    }
    let mut out = format!("correlate: {} x {} grid, T = {:.10}", ts.len(), nx, period);
    if let Some(d) = mirror_defect {
        out.push_str(&format!(", mirror defect at T = {d:.3e}"));
    }
    if let Some((t, ok)) = trunc {
        out.push_str(&format!(", truncation {t:.3e}{}", if ok { "" } else { " (not converged)" }));
    }
    Ok(out)
}

pub fn invert(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<Summary> {
    let ic = cfg.invert.as_ref().ok_or_else(|| Error::Usage("invert needs an [invert] section".into()))?;
    let target = read_spectrum_csv(&ic.target)?;
    let model = cfg.build_model()?;
    let problem = InverseProblem {
        target_energies: target.clone(),
        v: model.v.clone(),
        basis_size: ic.basis_size,
        regularization: ic.regularization,
        k0: ic.k0,
        grid_points: cfg.numeric.grid_points,
    };
    let r = reconstruct(&problem, ic.max_iters, ic.tol)?;
    #[derive(Serialize)]
    struct Doc<'a> {
        fit: &'a crate::inverse::FitResult,
        positivity_ok: bool,
        bc_defect: f64,
    }
    sink.write_json("invert.json", &Doc { fit: &r.fit, positivity_ok: r.positivity_ok, bc_defect: r.bc_defect })?;
    let q_rows: Vec<Vec<f64>> = r.y.iter().zip(&r.qhat_fit).map(|(y, q)| vec![*y, *q]).collect();
    sink.write_csv("qhat.csv", &[], &["y", "qhat"], &q_rows)?;
    let mut out = format!(
        "invert: c0 = {:.8e}, c = {:?}, spectral residual {:.3e}",
        r.fit.c0,
        r.coefficients.iter().map(|c| format!("{c:.8e}")).collect::<Vec<_>>(),
        r.spectral_residual
    );
    match &r.k_recovered {
        Some(k) => {
            let xs = model.geometry.nodes();
            let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x, k.value(x)]).collect();
            sink.write_csv("k_recovered.csv", &[("k0".to_string(), ic.k0.to_string())], &["x", "K"], &rows)?;
            let n_check = ic.n_check.unwrap_or(target.len() - 1);
            let rt = roundtrip_validate(&r, &model.v, n_check)?;
            sink.write_json("roundtrip.json", &rt)?;
            out.push_str(&format!(", round-trip max error {:.3e}, {}", rt.max_error, rt.verdict.summary()));
        }
        None => out.push_str(", no positive K exists for the fitted potential"),
    }
    Ok(out)
}

pub fn wkb(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<Summary> {
    let model = cfg.build_model()?;
    let coeffs = assemble_coefficients(&model)?;
    let map = coordinate_map(&model, 1e-12)?;
    let form = liouville_transform(&coeffs, &map)?;
    let n_max = cfg.numeric.n_max.max(cfg.wkb.fit_max);
    let spectrum = solve_spectrum_fd(&form, n_max, &fd_options(cfg, n_max))?;
    let rep = wkb_report(&form, &spectrum, cfg.wkb.fit_min..=cfg.wkb.fit_max)?;
    let rows: Vec<Vec<f64>> = (0..rep.big_lambdas.len())
        .map(|n| vec![n as f64, rep.big_lambdas[n], rep.phase_shifts[n], rep.phase_residuals[n].unwrap_or(f64::NAN)])
        .collect();
    sink.write_csv("wkb.csv", &[], &["n", "Lambda", "phase_shift", "phase_residual"], &rows)?;
    sink.write_json("wkb.json", &rep)?;
    if cfg.output.svg {
        let p: Vec<(f64, f64)> = rep.phase_shifts.iter().enumerate().map(|(n, s)| (n as f64, *s)).collect();
        sink.write_svg("wkb.svg", &svg::line_plot("Phase shift pi n - L sqrt(Lambda_n)", &[("shift", p)], "n", "phase"))?;
    }
    let exp = rep.decay_exponent.map_or("n/a".to_string(), |e| format!("{e:.3}"));
    Ok(format!(
        "wkb: a1 = {:.6e}, a2 + Delta = {:.6e}, moments {}, decay exponent {exp}",
        rep.a1,
        rep.a2 + rep.delta,
        if rep.pwt_moment_ok { "compatible with PWT" } else { "exclude PWT" }
    ))
}

pub fn overlap(cfg: &RunConfig, sink: &mut ArtifactSink) -> Result<Summary> {
    let oc = &cfg.overlap;
    let l = cfg.model.length;
    let model = cfg.build_model()?;
    let map = unfold(&model)?;
    let x = model.geometry.nodes();
    let center = oc.center.unwrap_or(-0.375 * l);
    let sigma = oc.sigma.unwrap_or(0.05 * l);
    let xi = gaussian_packet(&x, center, sigma);
    let zero = vec![Complex64::new(0.0, 0.0); x.len()];
    let pair = WavePacketPair::specular(x, xi, zero, oc.k)?.with_weights(oc.weights.0, oc.weights.1);
    let opts = OverlapOptions { epsilon: cfg.numeric.epsilon, nodes: cfg.numeric.quadrature_order, ..OverlapOptions::default() };
    let norm = overlap_norm(&pair, &map, 1, &opts)?;
    let period = l / map.vbar0;
    let nt = oc.t_points;
    let fr: Vec<f64> = (0..nt).map(|i| if nt == 1 { oc.t_from } else { oc.t_from + (oc.t_to - oc.t_from) * i as f64 / (nt - 1) as f64 }).collect();
    let vals = fr.par_iter().map(|f| overlap_f(&pair, &map, f * period, &opts)).collect::<Result<Vec<_>>>()?;
    let nm = norm.modulus();
    let rows: Vec<Vec<f64>> = fr
        .iter()
        .zip(&vals)
        .map(|(f, r)| vec![f * period, *f, r.value.re, r.value.im, r.modulus(), r.modulus() / nm, r.tolerance()])
        .collect();
    let meta = vec![("norm".to_string(), nm.to_string()), ("transfer_time".to_string(), period.to_string())];
    sink.write_csv("overlap.csv", &meta, &["t", "t_over_T", "re", "im", "abs", "ratio", "tolerance"], &rows)?;
    let (imax, max_ratio) = rows.iter().enumerate().map(|(i, r)| (i, r[5])).fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    #[derive(Serialize)]
    struct Doc<'a> {
        transfer_time: f64,
        norm: &'a crate::correlations::OverlapResult,
        max_ratio: f64,
        t_over_t_at_max: f64,
        values: &'a [crate::correlations::OverlapResult],
    }
    sink.write_json("overlap.json", &Doc { transfer_time: period, norm: &norm, max_ratio, t_over_t_at_max: fr[imax], values: &vals })?;
    if cfg.output.svg {
        let p: Vec<(f64, f64)> = rows.iter().map(|r| (r[1], r[5])).collect();
        sink.write_svg("overlap.svg", &svg::line_plot("|F(t)| / |<1|1>|", &[("ratio", p)], "t / T", "ratio"))?;
    }
    Ok(format!("overlap: |<1|1>| = {:.8e}, max |F|/norm = {:.8} at t/T = {:.4}, tolerance {:.2e}", nm, max_ratio, fr[imax], norm.tolerance()))
}
