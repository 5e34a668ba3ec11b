//! Precondition checks that can be decided from a config alone.

use std::f64::consts::PI;

use axisym::grid::MIN_NODES;
use axisym::specfun::{
    exterior_beta_threshold, in_s_exterior, in_s_interior, interior_second_family, radial_eigenvalue, K_MAX, TOL_SPEC,
};
use serde::Serialize;

use crate::config::{Scenario, ScenarioConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub field: &'static str,
    pub message: String,
}

fn push(out: &mut Vec<Violation>, field: &'static str, message: impl Into<String>) {
    out.push(Violation {
        field,
        message: message.into(),
    });
}

/// Every violated precondition; empty means the config is runnable.
pub fn validate_config(cfg: &ScenarioConfig) -> Vec<Violation> {
    let mut out = Vec::new();
    check_grid(cfg, &mut out);
    check_step(cfg, &mut out);
    match cfg.scenario {
        Scenario::BlowupExterior => {
            check_exterior(cfg, &mut out);
            check_blowup_data(cfg, &mut out);
        }
        Scenario::BlowupInterior => {
            check_interior(cfg, &mut out);
            check_blowup_data(cfg, &mut out);
        }
        Scenario::GlobalDecay => check_decay(cfg, &mut out),
        Scenario::EllipticConvergence => {
            check_exterior(cfg, &mut out);
            check_interior(cfg, &mut out);
        }
        Scenario::OracleSweep => check_oracle(cfg, &mut out),
    }
    if out.is_empty() {
        if let Err(e) = crate::scenarios::admissibility_gate(cfg) {
            push(&mut out, "data", e.to_string());
        }
    }
    out
}

fn check_grid(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let g = &cfg.grid;
    if g.nr < MIN_NODES || g.nz < MIN_NODES {
        push(out, "grid", format!("nr and nz must be at least {MIN_NODES}"));
    }
    let uses_exterior = matches!(cfg.scenario, Scenario::BlowupExterior | Scenario::EllipticConvergence);
    if uses_exterior && !(g.r_max.is_finite() && g.r_max > 1.0) {
        push(out, "grid.r_max", "r_max must exceed 1");
    }
}

fn check_step(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let s = &cfg.step;
    if !(s.cfl > 0.0 && s.cfl <= 1.0) {
        push(out, "step.cfl", "cfl must lie in (0, 1]");
    }
    if !(s.dt_min > 0.0) {
        push(out, "step.dt_min", "dt_min must be positive");
    }
    if !(s.dt >= s.dt_min) {
        push(out, "step.dt", "dt must be at least dt_min");
    }
    if !(s.blowup_factor > 1.0) {
        push(out, "step.blowup_factor", "blowup_factor must exceed 1");
    }
    if s.max_steps == 0 {
        push(out, "step.max_steps", "max_steps must be positive");
    }
    if let Some(t) = s.t_end {
        if !(t > 0.0) {
            push(out, "step.t_end", "t_end must be positive");
        }
    }
    if !(s.resolution_cap > 0.0) {
        push(out, "step.resolution_cap", "resolution_cap must be positive");
    }
    if !(cfg.model.nu >= 0.0) {
        push(out, "model.nu", "viscosity must be nonnegative");
    }
}

fn check_exterior(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let alpha = cfg.model.alpha;
    let beta = cfg.exterior_beta();
    let thr = exterior_beta_threshold::<f64>();
    if !(beta >= thr) {
        push(
            out,
            "model.beta",
            format!("beta below the exterior threshold 2+2√(1+π²/4) = {thr:.5}"),
        );
    }
    if (beta - 2.0 * alpha).abs() > 1e-12 * beta.abs().max(1.0) {
        push(out, "model.alpha", "exterior runs need alpha = beta/2");
    }
    if beta > 0.0 {
        match in_s_exterior(beta, K_MAX, TOL_SPEC) {
            Ok(m) if !m.member => push(
                out,
                "model.beta",
                format!(
                    "beta coincides with the exterior resonance −kK′(k)/K(k) at k = {}",
                    m.nearest_k
                ),
            ),
            Ok(m) if !m.denominator_ok => push(
                out,
                "model.beta",
                format!("beta makes the exterior mode k = {} unsolvable", m.denominator_k),
            ),
            Ok(_) => {}
            Err(e) => push(out, "model.beta", e.to_string()),
        }
    }
}

fn check_interior(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let lambda1 = radial_eigenvalue::<f64>(1).expect("first radial eigenvalue");
    let root = lambda1.sqrt();
    let alpha = cfg.model.alpha;
    if !(alpha > 0.0 && alpha < root) {
        push(
            out,
            "model.alpha",
            format!("interior alpha must satisfy 0 < alpha < √λ₁ = {root:.5}"),
        );
        return;
    }
    let related = lambda1 / alpha * alpha.tanh();
    let bound = interior_second_family(lambda1);
    if !(related > bound) {
        push(
            out,
            "model.alpha",
            format!("interior beta = (λ₁/alpha)·tanh(alpha) = {related:.5} must exceed √λ₁·coth(√λ₁) = {bound:.5}"),
        );
    }
    if cfg.scenario == Scenario::BlowupInterior {
        if let Some(beta) = cfg.model.beta {
            if (beta - related).abs() > 1e-9 * related {
                push(
                    out,
                    "model.beta",
                    format!("interior beta must equal (λ₁/alpha)·tanh(alpha) = {related:.10}"),
                );
            }
        }
    }
    let beta = related;
    match in_s_interior(beta, K_MAX, TOL_SPEC) {
        Ok(m) if !m.member => push(
            out,
            "model.beta",
            format!("beta resonant with interior mode k = {}", m.nearest_k),
        ),
        Ok(_) => {}
        Err(e) => push(out, "model.beta", e.to_string()),
    }
    let hz = 1.0 / (cfg.grid.nz.max(2) - 1) as f64;
    if !(hz * beta < 1.0) {
        push(
            out,
            "grid.nz",
            format!("interior Robin stencil needs hz·beta < 1, got {:.3}", hz * beta),
        );
    }
}

fn check_blowup_data(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let d = &cfg.data;
    if !(d.s > 0.0 && d.c > 0.0) {
        push(out, "data", "data s and c must be positive");
    }
    if !d.b.is_finite() {
        push(out, "data.b", "b must be finite");
    }
}

fn check_decay(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let m = cfg.model.m;
    if !(m > 0.0) {
        push(out, "model.m", "M must be positive");
    }
    if !(cfg.data.decay_amplitude >= 0.0) {
        push(out, "data.decay_amplitude", "decay amplitude must be nonnegative");
    }
    if !(cfg.step.clip_tol >= 0.0) {
        push(out, "step.clip_tol", "clip_tol must be nonnegative");
    }
}

fn check_oracle(cfg: &ScenarioConfig, out: &mut Vec<Violation>) {
    let o = &cfg.oracle;
    if o.y0.is_empty() || o.y0.iter().any(|&y| !(y > 0.0)) {
        push(out, "oracle.y0", "oracle y0 values must be positive");
    }
    if let Some(c0) = o.c0 {
        if !(c0 > 0.0) {
            push(out, "oracle.c0", "c0 must be positive");
        }
    } else if !(cfg.model.alpha >= 1.0 + (1.0 + PI * PI / 4.0).sqrt()) {
        push(out, "model.alpha", "c0 needs alpha at or above 1+√(1+π²/4)");
    }
    if !(o.dt > 0.0) {
        push(out, "oracle.dt", "oracle dt must be positive");
    }
    if !(o.horizon > 0.0 && o.horizon < 1.0) {
        push(out, "oracle.horizon", "horizon must lie in (0, 1)");
    }
}
