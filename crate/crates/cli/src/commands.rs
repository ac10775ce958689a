use crate::args::{Command, RunConfig};
use crate::envelope::{Cell, ResultEnvelope, DURATION_KEY};
use crate::CliError;
use lauewalk_core::crystal::{
    borrmann_profile, integrated_intensities, linspace, pendellosung_scan, thickness_scan, BladeSpec, PostSelect,
};
use lauewalk_core::ddref::{dd_amplitudes, dd_blade_angles, qi_dd_crosscheck, DDParams, REFERENCE_CONTRAST_H};
use lauewalk_core::interferometer::{contrast, contrast_vs_planes, fringe_scan, InterferometerSpec};
use lauewalk_core::lattice::{derive_coefficients, BeamState, SplitterParams, UNITARITY_TOL};
use std::time::Instant;

pub fn run(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let start = Instant::now();
    let mut env = match rc.command {
        Command::Splitter => splitter(rc),
        Command::Borrmann => borrmann(rc),
        Command::Pendellosung => pendellosung(rc),
        Command::Integrated => integrated(rc),
        Command::ThicknessScan => thickness(rc),
        Command::Interferometer => interferometer(rc),
        Command::ContrastSweep => contrast_sweep(rc),
        Command::Ddref => ddref(rc),
        Command::Crosscheck => crosscheck(rc),
    }?;
    let mut meta = vec![("lauewalk_version".to_string(), Cell::from(env!("CARGO_PKG_VERSION")))];
    meta.extend(rc.echo().into_iter().map(|(k, v)| (k.to_string(), v)));
    meta.append(&mut env.meta);
    meta.push((DURATION_KEY.to_string(), start.elapsed().as_secs_f64().into()));
    env.meta = meta;
    Ok(env)
}

fn params(rc: &RunConfig) -> Result<SplitterParams, CliError> {
    Ok(SplitterParams::new(rc.xi, rc.theta, rc.zeta)?)
}

fn thickness_meta(env: &mut ResultEnvelope, rc: &RunConfig, planes: usize) {
    if let Some(tau) = rc.plane_thickness_um {
        env.meta("thickness_um", tau * planes as f64);
    }
}

fn splitter(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let p = params(rc)?;
    let c = derive_coefficients(&p);
    let mut env = ResultEnvelope::new(&["coefficient", "re", "im", "abs"]);
    for (name, z) in [("t_a", c.t_a()), ("t_b", c.t_b()), ("r_a", c.r_a()), ("r_b", c.r_b())] {
        env.push_row(vec![name.into(), z.re.into(), z.im.into(), z.norm().into()]);
    }
    env.meta("theta_reduced", p.was_reduced());
    env.meta("unitarity_defect", c.unitarity_defect());
    env.meta("unitarity_tol", UNITARITY_TOL);
    Ok(env)
}

fn borrmann(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let blade = BladeSpec::new(rc.planes, params(rc)?)?;
    let prof = borrmann_profile(&blade, &BeamState::ray_up(0));
    let mut env = ResultEnvelope::new(&["j", "intensity_T", "intensity_R"]);
    for r in &prof.rows {
        env.push_row(vec![r.node.into(), r.intensity_t.into(), r.intensity_r.into()]);
    }
    let (it, ir) = integrated_intensities(&blade, &BeamState::ray_up(0));
    env.meta("I_T", it);
    env.meta("I_R", ir);
    env.meta("reflected_mirror_defect", prof.reflected_mirror_defect());
    env.meta("skewness_T", prof.transmitted_stats().map(|s| s.skewness));
    env.meta("iqr_T", prof.transmitted_stats().map(|s| s.interquartile_width()));
    env.meta("iqr_R", prof.reflected_stats().map(|s| s.interquartile_width()));
    thickness_meta(&mut env, rc, rc.planes);
    Ok(env)
}

fn pendellosung(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let select = match (rc.lattice_node, rc.node) {
        (Some(j), _) => PostSelect::Lattice(j),
        (None, Some(k)) => PostSelect::ExitNode(k),
        (None, None) => PostSelect::ExitNode(rc.planes as i64 / 2),
    };
    let grid = linspace(rc.theta_min, rc.theta_max, rc.theta_points);
    let scan = pendellosung_scan(rc.planes, select, &grid, rc.xi, rc.zeta)?;
    let mut env = ResultEnvelope::new(&["theta", "I_T", "I_R"]);
    for r in &scan.rows {
        env.push_row(vec![r.parameter.into(), r.value_t.into(), r.value_r.into()]);
    }
    env.meta("lattice_index", select.lattice_index(rc.planes));
    thickness_meta(&mut env, rc, rc.planes);
    Ok(env)
}

fn integrated(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let blade = BladeSpec::new(rc.planes, params(rc)?)?;
    let (it, ir) = integrated_intensities(&blade, &BeamState::ray_up(0));
    let mut env = ResultEnvelope::new(&["N", "I_T", "I_R"]);
    env.push_row(vec![rc.planes.into(), it.into(), ir.into()]);
    thickness_meta(&mut env, rc, rc.planes);
    Ok(env)
}

fn thickness(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let scan = thickness_scan(params(rc)?, rc.n_min, rc.n_max)?;
    let mut env = ResultEnvelope::new(&["N", "I_T", "I_R"]);
    for r in &scan.rows {
        env.push_row(vec![(r.parameter as usize).into(), r.value_t.into(), r.value_r.into()]);
    }
    if let Some(tau) = rc.plane_thickness_um {
        env.meta("plane_thickness_um", tau);
    }
    Ok(env)
}

fn interferometer(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let spec = InterferometerSpec::identical(rc.blades, rc.planes, params(rc)?)?;
    let series = fringe_scan(&spec, &rc.chi_grid(), &BeamState::ray_up(0))?;
    let mut env = ResultEnvelope::new(&["chi", "I_O", "I_H", "I_discarded"]);
    for r in &series.rows {
        env.push_row(vec![r.chi.into(), r.i_o.into(), r.i_h.into(), r.i_discarded.into()]);
    }
    match contrast(&series) {
        Ok(c) => {
            env.meta("contrast_O", c.contrast_o);
            env.meta("contrast_H", c.contrast_h);
            env.meta("coeff_A", c.coeff_a);
            env.meta("coeff_B", c.coeff_b);
        }
        Err(e) => env.meta("contrast", format!("undefined: {e}")),
    }
    Ok(env)
}

fn contrast_sweep(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    if rc.blades != 3 {
        return Err(CliError::Usage(format!("contrast-sweep is defined for 3 blades (got {})", rc.blades)));
    }
    let sweep = contrast_vs_planes(params(rc)?, rc.n_min, rc.n_max, rc.chi_points)?;
    let mut env = ResultEnvelope::new(&["N", "contrast_O", "contrast_H", "coeff_A", "coeff_B"]);
    let mut undefined = 0usize;
    for row in &sweep.rows {
        match &row.result {
            Ok(c) => env.push_row(vec![
                row.planes.into(),
                c.contrast_o.into(),
                c.contrast_h.into(),
                c.coeff_a.into(),
                c.coeff_b.into(),
            ]),
            Err(_) => {
                undefined += 1;
                env.push_row(vec![row.planes.into(), Cell::Null, Cell::Null, Cell::Null, Cell::Null]);
            }
        }
    }
    if undefined == sweep.rows.len() {
        let reason = sweep.rows[0].result.as_ref().err().map(ToString::to_string).unwrap_or_default();
        return Err(CliError::Runtime(format!("contrast undefined for every plane count: {reason}")));
    }
    env.meta("undefined_rows", undefined);
    Ok(env)
}

fn dd_params(rc: &RunConfig, a: f64, eta: f64) -> Result<DDParams, CliError> {
    Ok(DDParams::full(a, eta, rc.z_over_d, 0.0, 0.0)?)
}

fn ddref(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let a = rc.a.unwrap_or(1.0);
    let etas = match rc.eta {
        Some(eta) => vec![eta],
        None => linspace(rc.eta_min, rc.eta_max, rc.eta_points),
    };
    let mut env = ResultEnvelope::new(&["eta", "abs_t", "abs_r", "T", "R", "phi", "rho", "vartheta"]);
    for eta in etas {
        let p = dd_params(rc, a, eta)?;
        let amp = dd_amplitudes(&p);
        let g = dd_blade_angles(&p);
        env.push_row(vec![
            eta.into(),
            amp.t.norm().into(),
            amp.r.norm().into(),
            amp.t.norm_sqr().into(),
            amp.r.norm_sqr().into(),
            g.phi.into(),
            g.rho.into(),
            g.vartheta.into(),
        ]);
    }
    env.meta("A_resolved", a);
    Ok(env)
}

fn crosscheck(rc: &RunConfig) -> Result<ResultEnvelope, CliError> {
    let blade = BladeSpec::new(rc.planes, params(rc)?)?;
    let dd = dd_params(rc, rc.a.unwrap_or(rc.theta), rc.eta.unwrap_or(0.0))?;
    let rep = qi_dd_crosscheck(&blade, &dd)?;
    let qi = rep.qi_contrast.as_ref().ok();
    let mut env = ResultEnvelope::new(&["quantity", "lattice", "analytic"]);
    let rows: [(&str, Cell, Cell); 7] = [
        ("I_T", rep.qi_intensity_t.into(), rep.dd_intensity_t.into()),
        ("I_R", rep.qi_intensity_r.into(), rep.dd_intensity_r.into()),
        ("contrast_H", qi.map(|c| c.contrast_h).into(), rep.analytic_contrast_h.into()),
        (
            "fringe_residual",
            qi.map(|c| c.residual_o.max(c.residual_h)).into(),
            rep.analytic_fringe_residual.into(),
        ),
        ("phi", Cell::Null, rep.dd_angles.phi.into()),
        ("rho", Cell::Null, rep.dd_angles.rho.into()),
        ("vartheta", rep.theta.into(), rep.dd_angles.vartheta.into()),
    ];
    for (name, l, a) in rows {
        env.push_row(vec![name.into(), l, a]);
    }
    env.meta("implied_tau_over_delta", rep.implied_tau_over_delta);
    env.meta("intensity_deviation", rep.intensity_deviation);
    env.meta("contrast_deviation", rep.contrast_deviation);
    env.meta("reference_contrast_H", REFERENCE_CONTRAST_H);
    env.meta("deviation_from_reference", rep.deviation_from_reference);
    if let Err(e) = &rep.qi_contrast {
        env.meta("lattice_contrast", format!("undefined: {e}"));
    }
    Ok(env)
}
