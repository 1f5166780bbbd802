use crate::config::{default_fig1_grid, Format, RunConfig};
use crate::output::{float, to_json, Table};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;
use sta_cost::cost::cost_report;
use sta_cost::modes::{bogoliubov, solve_protocol_mode, ModeSolverOptions, ReferenceMode};
use sta_cost::oracle::{linear_response_variances, run_oracle_with_samples};
use sta_cost::oscillatory::{f_asymptote, f_curve_with};
use sta_cost::protocol::Shape;
use sta_cost::wigner::{self, RecursionReport, WignerEigenstate};
use sta_cost::{BogoliubovCoefficients, Error, FrequencyProtocol};

/// Rendered output and the exit code it should produce.
pub struct Output {
    pub text: String,
    pub code: u8,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, code: 0 }
    }
}

fn render(table: &Table, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Csv => Ok(table.to_csv()),
        Format::Json => table.to_json(),
    }
}

fn protocol(cfg: &RunConfig) -> anyhow::Result<FrequencyProtocol> {
    Ok(FrequencyProtocol::from_spec(cfg.require_protocol()?)?)
}

/// Flattens nested objects and arrays into dotted column names.
fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match v {
        Value::Object(m) => m.iter().for_each(|(k, v)| flatten(&key(k), v, out)),
        Value::Array(a) => a.iter().enumerate().for_each(|(i, v)| flatten(&key(&i.to_string()), v, out)),
        Value::Number(n) => out.push((prefix.to_string(), n.as_f64().map_or_else(|| n.to_string(), float))),
        Value::Null => out.push((prefix.to_string(), String::new())),
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Bool(b) => out.push((prefix.to_string(), b.to_string())),
    }
}

fn record<T: Serialize>(value: &T, format: Format) -> anyhow::Result<String> {
    match format {
        Format::Json => to_json(value),
        Format::Csv => {
            let mut cells = Vec::new();
            flatten("", &serde_json::to_value(value)?, &mut cells);
            let (h, r): (Vec<String>, Vec<String>) = cells.into_iter().unzip();
            Ok(format!("{}\n{}\n", h.join(","), r.join(",")))
        }
    }
}

/// t, ω, Ω², dΩ²/dt on the window grid (or the tabulated sample times).
pub fn cmd_protocol(cfg: &RunConfig, format: Format) -> anyhow::Result<Output> {
    let p = protocol(cfg)?;
    p.require_valid()?;
    let w = p.window();
    let grid: Vec<f64> = match p.shape() {
        Shape::Tabulated { samples, .. } => samples.iter().map(|s| s[0]).filter(|&t| w.contains(t)).collect(),
        Shape::Arctan { .. } => w.uniform_grid(cfg.grid.points),
    };
    let mut table = Table::new(&["t", "omega", "Omega2", "dOmega2_dt"]);
    for t in grid {
        table.push_floats(&[t, p.omega(t)?, p.counterdiabatic_frequency(t)?, p.counterdiabatic_rate(t)?]);
    }
    Ok(Output::ok(render(&table, format)?))
}

#[derive(Serialize)]
struct ModesJson<'a> {
    t: &'a [f64],
    f: &'a [sta_cost::Complex64],
    fdot: &'a [sta_cost::Complex64],
    wronskian_drift: f64,
    bogoliubov: BogoliubovCoefficients,
    beta_sq: f64,
    normalization_residual: f64,
}

pub fn cmd_modes(cfg: &RunConfig, format: Format) -> anyhow::Result<Output> {
    let p = protocol(cfg)?;
    let sec = cfg.modes;
    let opts = ModeSolverOptions { output_points: sec.output_points, ..cfg.tolerances.ode() };
    let mode = solve_protocol_mode(&p, sec.drive, sec.vacuum, &opts)?;
    let b = bogoliubov(&mode, &ReferenceMode::at_window_end(&p, sec.vacuum)?);
    log::info!("|beta|^2 = {:e}, Wronskian drift = {:e}", b.beta_sq(), mode.wronskian_drift);
    let text = match format {
        Format::Csv => {
            let mut buf = Vec::new();
            mode.write_csv(&mut buf)?;
            String::from_utf8(buf)?
        }
        Format::Json => to_json(&ModesJson {
            t: &mode.grid,
            f: &mode.f,
            fdot: &mode.fdot,
            wronskian_drift: mode.wronskian_drift,
            bogoliubov: b,
            beta_sq: b.beta_sq(),
            normalization_residual: b.normalization_residual(),
        })?,
    };
    Ok(Output::ok(text))
}

pub fn cmd_fcurve(cfg: &RunConfig, format: Format) -> anyhow::Result<Output> {
    let sec = cfg.fcurve.as_ref().ok_or_else(|| Error::Config("`fcurve` section is required".into()))?;
    let opts = cfg.tolerances.quad();
    let points: Vec<_> = sec.x.par_iter().map(|&x| f_curve_with(x, sec.y, &opts)).collect::<Result<_, _>>()?;
    let mut table = Table::new(&["x", "y", "F", "err_estimate", "truncation_bound"]);
    for pt in points {
        table.push_floats(&[pt.x, pt.y, pt.value, pt.abs_error_estimate, pt.truncation_bound]);
    }
    Ok(Output::ok(render(&table, format)?))
}

/// F[x, y] next to π e^{−2x}. Rows that fail or miss the accuracy budget are
/// still written, flagged, and turn the exit code to 3.
pub fn cmd_fig1(cfg: &RunConfig, format: Format) -> anyhow::Result<Output> {
    let sec = &cfg.fig1;
    let grid = sec.x_grid.clone().unwrap_or_else(default_fig1_grid);
    if let Some(x) = grid.iter().find(|x| !(**x > 0.0 && x.is_finite())) {
        return Err(Error::Config(format!("fig1.x_grid must be positive, got {x}")).into());
    }
    let opts = cfg.tolerances.quad();
    let rows: Vec<_> = grid.par_iter().map(|&x| (x, f_curve_with(x, sec.y, &opts))).collect();
    let mut table = Table::new(&["x", "F_xy", "pi_exp_minus_2x", "err_estimate", "flag"]);
    let mut code = 0;
    for (x, r) in rows {
        let (f, err, flag) = match r {
            Ok(pt) => {
                let err = pt.abs_error_estimate + pt.truncation_bound;
                if err <= sec.rel_budget * pt.value {
                    (pt.value, err, "ok")
                } else {
                    (pt.value, err, "accuracy")
                }
            }
            Err(e @ Error::Config(_)) => return Err(e.into()),
            Err(e) => {
                log::error!("F[{x}, {}] failed: {e}", sec.y);
                (f64::NAN, f64::NAN, "failed")
            }
        };
        if flag != "ok" {
            code = 3;
        }
        table.push(vec![float(x), float(f), float(f_asymptote(x)), float(err), flag.to_string()]);
    }
    Ok(Output { text: render(&table, format)?, code })
}

pub fn cmd_cost(cfg: &RunConfig, format: Format) -> anyhow::Result<Output> {
    let p = protocol(cfg)?;
    let d = cfg.require_drive()?;
    let r = cost_report(&p, d, &cfg.system, cfg.cost.n_initial, cfg.cost.domain, &cfg.tolerances.quad())?;
    Ok(Output::ok(record(&r, format)?))
}

pub fn cmd_oracle(cfg: &RunConfig, format: Format, seed: Option<u64>) -> anyhow::Result<Output> {
    let p = protocol(cfg)?;
    let sec = cfg.oracle.as_ref().ok_or_else(|| Error::Config("`oracle` section is required".into()))?;
    let mut d = *cfg.require_drive()?;
    if let Some(target) = sec.variance_target {
        d = linear_response_variances(&p, &d, target)?;
    }
    let (report, samples) = run_oracle_with_samples(&p, &d, &cfg.system, &sec.sample_spec(seed))?;
    if let Some(path) = &sec.samples_csv {
        let mut t = Table::new(&["k", "theta0", "P0", "beta_sq", "beta_lin_sq", "rejected"]);
        for s in &samples {
            t.push(vec![
                s.k.to_string(),
                float(s.theta0),
                float(s.p0),
                float(s.beta_sq),
                float(s.beta_lin_sq),
                s.rejected.to_string(),
            ]);
        }
        crate::output::emit(&t.to_csv(), Some(path))?;
    }
    Ok(Output::ok(record(&report, format)?))
}

#[derive(Serialize)]
struct WignerRow {
    n: u32,
    recursions: RecursionReport,
    ode_residual: f64,
    origin_value: f64,
    decomposition: wigner::Decomposition,
    quoted: [f64; 3],
}

pub fn cmd_wigner(cfg: &RunConfig, format: Format) -> anyhow::Result<Output> {
    let sec = cfg.wigner;
    let hbar = cfg.system.hbar;
    if !(sec.j_min > 0.0 && sec.j_max > sec.j_min && sec.j_points >= 2) {
        return Err(Error::Config("wigner J grid needs 0 < j_min < j_max and j_points >= 2".into()).into());
    }
    let (a, b) = (sec.j_min.ln(), sec.j_max.ln());
    let m = (sec.j_points - 1) as f64;
    let grid: Vec<f64> = (0..sec.j_points).map(|i| hbar * (a + (b - a) * i as f64 / m).exp()).collect();
    let mut rows = Vec::new();
    for n in 0..=sec.n_max {
        let state = WignerEigenstate::new(n, hbar)?;
        rows.push(WignerRow {
            n,
            recursions: wigner::verify_recursions(n, &grid, hbar)?,
            ode_residual: wigner::max_ode_residual(&state, &grid),
            origin_value: state.evaluate(0.0),
            decomposition: wigner::final_state_decomposition(n, sec.nu, sec.mu, hbar)?,
            quoted: wigner::quoted_coefficients(n, sec.nu, sec.mu),
        });
    }
    let text = match format {
        Format::Json => to_json(&rows)?,
        Format::Csv => {
            let mut t = Table::new(&[
                "n",
                "residual_position",
                "residual_derivative",
                "residual_second_derivative",
                "ode_residual",
                "origin_value",
                "down",
                "diagonal",
                "up",
                "quoted_down",
                "quoted_diagonal",
                "quoted_up",
            ]);
            for r in &rows {
                let mut row = vec![r.n.to_string()];
                row.extend(
                    [
                        r.recursions.position,
                        r.recursions.derivative,
                        r.recursions.second_derivative,
                        r.ode_residual,
                        r.origin_value,
                        r.decomposition.down,
                        r.decomposition.diagonal,
                        r.decomposition.up,
                        r.quoted[0],
                        r.quoted[1],
                        r.quoted[2],
                    ]
                    .map(float),
                );
                t.push(row);
            }
            t.to_csv()
        }
    };
    Ok(Output::ok(text))
}
