//! Time series of loads and available generation, and zero-order-hold
//! resampling into per-step problem instances.
//!
//! Scenario CSV schema (UTF-8): header `t,Pl_<bus>...,Ql_<bus>...,Pav_<gen>...`
//! with one row per data sample and decimal per-unit values. Load columns may
//! be omitted for buses whose static case values should apply; availability
//! columns are required for every generator. The sample rate is inferred from
//! the `t` column, which must be uniformly spaced.
//!
//! A scenario is immutable after load or synthesis; [`instance_at`] is pure
//! and safe for concurrent use.

use std::path::Path;
use std::sync::Arc;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::Error;
use crate::lifted::ProblemInstance;
use crate::network::{ConstantMatrices, NetworkModel};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioStep {
    /// Active load per regular bus, pu.
    pub pl: Vec<f64>,
    /// Reactive load per regular bus, pu.
    pub ql: Vec<f64>,
    /// Available active power per generator ordinal, pu.
    pub p_av: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    /// Data samples per second.
    pub data_hz: f64,
    pub steps: Vec<ScenarioStep>,
    /// Provenance string for report headers.
    pub source: String,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn duration_s(&self) -> f64 {
        self.steps.len() as f64 / self.data_hz
    }

    pub fn validate(&self, model: &NetworkModel) -> Result<()> {
        if !(self.data_hz > 0.0) {
            return Err(Error::Domain("scenario data rate must be positive".into()));
        }
        for (k, s) in self.steps.iter().enumerate() {
            for (name, v, want) in [
                ("Pl", &s.pl, model.n()),
                ("Ql", &s.ql, model.n()),
                ("Pav", &s.p_av, model.n_gens()),
            ] {
                if v.len() != want {
                    return Err(Error::Dimension {
                        context: format!("scenario step {k} {name}"),
                        expected: want,
                        got: v.len(),
                    });
                }
                if v.iter().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite {
                        context: format!("scenario step {k} {name}"),
                    });
                }
            }
            if s.p_av.iter().any(|&x| x < 0.0) {
                return Err(Error::Domain(format!(
                    "scenario step {k}: negative availability"
                )));
            }
        }
        Ok(())
    }
}

/// A scenario that repeats the instance's loads for `steps` samples.
pub fn constant_scenario(inst: &ProblemInstance, data_hz: f64, steps: usize) -> Scenario {
    Scenario {
        data_hz,
        steps: vec![
            ScenarioStep {
                pl: inst.pl.clone(),
                ql: inst.ql.clone(),
                p_av: inst.p_av.clone(),
            };
            steps
        ],
        source: "constant".into(),
    }
}

// ---------------------------------------------------------------------------
// CSV I/O
// ---------------------------------------------------------------------------

enum Column {
    Time,
    Pl(usize),
    Ql(usize),
    Pav(usize),
}

/// Loads and validates a scenario CSV against a model. Buses without load
/// columns keep their static case values; every generator must have an
/// availability column.
pub fn load_scenario(path: impl AsRef<Path>, model: &NetworkModel) -> Result<Scenario> {
    let path = path.as_ref();
    let display = path.display().to_string();
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::io(display.clone(), e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let mut columns = Vec::with_capacity(headers.len());
    let mut seen_pl = vec![false; model.n()];
    let mut seen_ql = vec![false; model.n()];
    let mut seen_pav = vec![false; model.n_gens()];
    let find_bus = |id_text: &str, col: &str| -> Result<usize> {
        let id: u32 = id_text.parse().map_err(|_| {
            Error::parse_at(display.clone(), format!("column {col}"), "bad bus id")
        })?;
        model
            .buses
            .iter()
            .position(|b| b.ext_id == id)
            .ok_or_else(|| {
                Error::parse_at(
                    display.clone(),
                    format!("column {col}"),
                    format!("unknown bus {id}"),
                )
            })
    };
    for (ci, name) in headers.iter().enumerate() {
        let col = if ci == 0 && name == "t" {
            Column::Time
        } else if let Some(id) = name.strip_prefix("Pl_") {
            let b = find_bus(id, name)?;
            if std::mem::replace(&mut seen_pl[b], true) {
                return Err(Error::parse_at(
                    display.clone(),
                    format!("column {name}"),
                    "duplicate column",
                ));
            }
            Column::Pl(b)
        } else if let Some(id) = name.strip_prefix("Ql_") {
            let b = find_bus(id, name)?;
            if std::mem::replace(&mut seen_ql[b], true) {
                return Err(Error::parse_at(
                    display.clone(),
                    format!("column {name}"),
                    "duplicate column",
                ));
            }
            Column::Ql(b)
        } else if let Some(id) = name.strip_prefix("Pav_") {
            let b = find_bus(id, name)?;
            let k = model.gen_at(b).ok_or_else(|| {
                Error::parse_at(
                    display.clone(),
                    format!("column {name}"),
                    "bus hosts no generator",
                )
            })?;
            if std::mem::replace(&mut seen_pav[k], true) {
                return Err(Error::parse_at(
                    display.clone(),
                    format!("column {name}"),
                    "duplicate column",
                ));
            }
            Column::Pav(k)
        } else {
            return Err(Error::parse_at(
                display.clone(),
                format!("column {}", ci + 1),
                format!("unrecognized column '{name}'"),
            ));
        };
        columns.push(col);
    }
    if !matches!(columns.first(), Some(Column::Time)) {
        return Err(Error::parse(display.clone(), "first column must be 't'"));
    }
    if let Some(k) = seen_pav.iter().position(|&s| !s) {
        return Err(Error::parse(
            display.clone(),
            format!(
                "missing availability column Pav_{} for generator",
                model.ext_id(model.generators[k].bus)
            ),
        ));
    }

    let static_pl: Vec<f64> = model.buses.iter().map(|b| b.pl).collect();
    let static_ql: Vec<f64> = model.buses.iter().map(|b| b.ql).collect();
    let mut times = Vec::new();
    let mut steps = Vec::new();
    for (ri, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != columns.len() {
            return Err(Error::parse_at(
                display.clone(),
                format!("row {}", ri + 2),
                format!("expected {} cells, got {}", columns.len(), record.len()),
            ));
        }
        let mut step = ScenarioStep {
            pl: static_pl.clone(),
            ql: static_ql.clone(),
            p_av: vec![0.0; model.n_gens()],
        };
        for (ci, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                Error::parse_at(
                    display.clone(),
                    format!("row {}, column {}", ri + 2, ci + 1),
                    format!("non-numeric cell '{cell}'"),
                )
            })?;
            match columns[ci] {
                Column::Time => times.push(value),
                Column::Pl(b) => step.pl[b] = value,
                Column::Ql(b) => step.ql[b] = value,
                Column::Pav(k) => step.p_av[k] = value,
            }
        }
        steps.push(step);
    }
    if steps.is_empty() {
        return Err(Error::parse(display.clone(), "scenario has no data rows"));
    }

    let data_hz = if times.len() >= 2 {
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::parse(display.clone(), "time column must increase"));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(Error::parse(
                    display.clone(),
                    "time column must be uniformly spaced",
                ));
            }
        }
        1.0 / dt
    } else {
        1.0
    };

    let scenario = Scenario {
        data_hz,
        steps,
        source: display,
    };
    scenario.validate(model)?;
    Ok(scenario)
}

/// Writes the scenario in the CSV schema with full load and availability
/// columns in internal bus order.
pub fn write_scenario(
    path: impl AsRef<Path>,
    scenario: &Scenario,
    model: &NetworkModel,
) -> Result<()> {
    let path = path.as_ref();
    let display = path.display().to_string();
    scenario.validate(model)?;
    let mut out = String::new();
    out.push('t');
    for b in &model.buses {
        out.push_str(&format!(",Pl_{}", b.ext_id));
    }
    for b in &model.buses {
        out.push_str(&format!(",Ql_{}", b.ext_id));
    }
    for g in &model.generators {
        out.push_str(&format!(",Pav_{}", model.ext_id(g.bus)));
    }
    out.push('\n');
    for (k, step) in scenario.steps.iter().enumerate() {
        out.push_str(&format!("{}", k as f64 / scenario.data_hz));
        for v in step.pl.iter().chain(&step.ql).chain(&step.p_av) {
            out.push_str(&format!(",{v}"));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(display, e))
}

// ---------------------------------------------------------------------------
// Synthesis
// ---------------------------------------------------------------------------

/// Parameters for synthesizing a load/availability stream.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub duration_s: f64,
    pub data_hz: f64,
    /// Relative sinusoidal load swing, in `[0, 1)`.
    pub amplitude: f64,
    /// Sinusoid period, seconds.
    pub period_s: f64,
    /// Standard deviation of additive load noise, pu.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            duration_s: 60.0,
            data_hz: 1.0,
            amplitude: 0.2,
            period_s: 30.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }
}

/// Synthesizes loads `base * (1 + amplitude * sin(2 pi k / (period * hz) +
/// phase_i)) + noise` around the case's static values, with availability
/// following a clipped bump profile scaled by the same amplitude. Fully
/// deterministic under the seed; `amplitude = 0, noise = 0` yields a
/// constant stream.
pub fn synth_scenario(model: &NetworkModel, spec: &SynthSpec) -> Result<Scenario> {
    if !(spec.duration_s > 0.0 && spec.data_hz > 0.0 && spec.period_s > 0.0) {
        return Err(Error::Domain(
            "synthesis requires positive duration, rate, and period".into(),
        ));
    }
    if !(0.0..1.0).contains(&spec.amplitude) {
        return Err(Error::Domain(format!(
            "amplitude must lie in [0, 1) to keep loads positive, got {}",
            spec.amplitude
        )));
    }
    if spec.noise_sigma < 0.0 {
        return Err(Error::Domain("noise sigma must be nonnegative".into()));
    }

    let n = model.n();
    let steps_total = (spec.duration_s * spec.data_hz).round() as usize;
    if steps_total == 0 {
        return Err(Error::Domain("synthesis horizon is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let phases: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(0.0..2.0 * std::f64::consts::PI))
        .collect();

    let samples_per_period = spec.period_s * spec.data_hz;
    let mut steps = Vec::with_capacity(steps_total);
    for k in 0..steps_total {
        let angle = 2.0 * std::f64::consts::PI * k as f64 / samples_per_period;
        let mut pl = Vec::with_capacity(n);
        let mut ql = Vec::with_capacity(n);
        for i in 0..n {
            let wave = 1.0 + spec.amplitude * (angle + phases[i]).sin();
            let noise_p = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * sample_normal(&mut rng)
            } else {
                0.0
            };
            let noise_q = if spec.noise_sigma > 0.0 {
                spec.noise_sigma * sample_normal(&mut rng)
            } else {
                0.0
            };
            pl.push(model.buses[i].pl * wave + noise_p);
            ql.push(model.buses[i].ql * wave + noise_q);
        }
        // Availability: bump over the horizon, dipping by `amplitude` at the
        // edges, clipped at zero.
        let frac = if steps_total > 1 {
            k as f64 / (steps_total - 1) as f64
        } else {
            0.5
        };
        let bump = (std::f64::consts::PI * frac).sin().max(0.0).powi(2);
        let p_av = model
            .generators
            .iter()
            .map(|g| (g.p_av_max * (1.0 - spec.amplitude * (1.0 - bump))).max(0.0))
            .collect();
        steps.push(ScenarioStep { pl, ql, p_av });
    }
    Ok(Scenario {
        data_hz: spec.data_hz,
        steps,
        source: format!("synth(seed={})", spec.seed),
    })
}

fn sample_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen_range(0.0..1.0);
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

// ---------------------------------------------------------------------------
// Resampling
// ---------------------------------------------------------------------------

/// Number of solver steps covering the scenario horizon at `solver_hz`.
pub fn solver_steps(scenario: &Scenario, solver_hz: f64) -> usize {
    (scenario.duration_s() * solver_hz).round() as usize
}

/// Zero-order-hold resampling: solver step `k` at `solver_hz` sees the most
/// recent data sample at or before `k / solver_hz`. The instance carries the
/// effective data timestamp.
pub fn instance_at(
    scenario: &Scenario,
    model: &Arc<NetworkModel>,
    matrices: &Arc<ConstantMatrices>,
    k: usize,
    solver_hz: f64,
) -> Result<ProblemInstance> {
    if !(solver_hz > 0.0) {
        return Err(Error::Domain("solver rate must be positive".into()));
    }
    let limit = solver_steps(scenario, solver_hz);
    if k >= limit {
        return Err(Error::IndexOutOfRange {
            context: "scenario solver step".into(),
            index: k,
            limit,
        });
    }
    let data_idx = ((k as f64 * scenario.data_hz / solver_hz).floor() as usize)
        .min(scenario.steps.len() - 1);
    let step = &scenario.steps[data_idx];
    Ok(ProblemInstance {
        model: model.clone(),
        matrices: matrices.clone(),
        pl: step.pl.clone(),
        ql: step.ql.clone(),
        p_av: step.p_av.clone(),
        timestamp: data_idx as f64 / scenario.data_hz,
    })
}
