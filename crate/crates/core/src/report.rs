//! Machine-readable outputs: CSV tables with lossless float formatting,
//! the expansion snapshot, and the pass/fail summary.

use serde::{Deserialize, Serialize};

use crate::expansion::{ExpansionStack, LinStats};
use crate::prandtl_linear::LayerStack;

/// 17 significant digits: round-trips f64 exactly.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write one CSV: a header row and formatted records.
pub fn csv_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Parse a CSV produced by `csv_table` back into float columns (non-float
/// cells are skipped by the caller).
pub fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .map(|l| l.split(',').map(|s| s.to_string()).collect())
        .collect()
}

/// One acceptance-style check in the summary document.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Criterion {
    pub criterion_id: String,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

impl Criterion {
    /// value must not exceed threshold
    pub fn at_most(id: &str, value: f64, threshold: f64) -> Criterion {
        Criterion {
            criterion_id: id.to_string(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }

    /// value must be at least threshold
    pub fn at_least(id: &str, value: f64, threshold: f64) -> Criterion {
        Criterion {
            criterion_id: id.to_string(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub criteria: Vec<Criterion>,
    pub all_pass: bool,
}

impl Summary {
    pub fn new(criteria: Vec<Criterion>) -> Summary {
        let all_pass = criteria.iter().all(|c| c.pass);
        Summary { criteria, all_pass }
    }
}

/// Persisted expansion state: grids, per-order layer fields, outer traces
/// and far-field constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Snapshot {
    pub alpha: f64,
    pub eta: f64,
    pub batchelor_wood_a: f64,
    pub order: usize,
    pub fixed_point_iterations: usize,
    pub contraction_ratio: f64,
    pub a_inf: Vec<f64>,
    pub layer: LayerStack,
    pub euler_traces: Vec<Vec<f64>>,
    pub corrector_slopes: Vec<f64>,
    pub lin_stats: Vec<LinStats>,
}

impl Snapshot {
    pub fn from_stack(stack: &ExpansionStack) -> Snapshot {
        Snapshot {
            alpha: stack.params.alpha,
            eta: stack.params.eta,
            batchelor_wood_a: stack.params.a,
            order: stack.order,
            fixed_point_iterations: stack.von_mises.iterations,
            contraction_ratio: stack.von_mises.final_contraction_ratio,
            a_inf: stack.layer.a_inf.clone(),
            layer: stack.layer.clone(),
            euler_traces: stack
                .euler
                .iter()
                .map(|o| o.boundary_trace.values().to_vec())
                .collect(),
            corrector_slopes: stack
                .euler
                .iter()
                .map(|o| o.corrector.as_ref().map(|c| c.a_lin).unwrap_or(0.0))
                .collect(),
            lin_stats: stack.lin_stats.clone(),
        }
    }
}

/// Human-readable build log.
pub fn build_log(stack: &ExpansionStack) -> String {
    let mut s = String::new();
    s.push_str(&format!(
        "expansion build: alpha = {}, eta = {}, order = {}\n",
        stack.params.alpha, stack.params.eta, stack.order
    ));
    s.push_str(&format!("batchelor-wood constant a = {:.16}\n", stack.params.a));
    s.push_str(&format!(
        "von Mises fixed point: {} iterations, contraction ratio {:.3e}\n",
        stack.von_mises.iterations, stack.von_mises.final_contraction_ratio
    ));
    for st in &stack.lin_stats {
        s.push_str(&format!(
            "order {}: A_inf = {:.16e}, gmres iterations {}, linear residual {:.3e}\n",
            st.order, st.a_inf, st.gmres_iterations, st.residual
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_roundtrips() {
        for &x in &[0.1, 1.0 / 3.0, 2.5e-11, -7.123456789012345e88, 0.0] {
            let s = fmt_float(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(x, back, "{s}");
        }
    }

    #[test]
    fn csv_roundtrip_identical_floats() {
        let rows = vec![
            vec![fmt_float(0.1), fmt_float(1.0 / 3.0)],
            vec![fmt_float(-2.0), fmt_float(5e-300)],
        ];
        let text = csv_table(&["a", "b"], &rows);
        let parsed = parse_csv(&text);
        assert_eq!(parsed[1][0].parse::<f64>().unwrap(), 0.1);
        assert_eq!(parsed[1][1].parse::<f64>().unwrap(), 1.0 / 3.0);
        assert_eq!(parsed[2][1].parse::<f64>().unwrap(), 5e-300);
    }

    #[test]
    fn summary_pass_logic() {
        let s = Summary::new(vec![
            Criterion::at_most("x", 1.0, 2.0),
            Criterion::at_least("y", 3.0, 2.5),
        ]);
        assert!(s.all_pass);
        let s2 = Summary::new(vec![Criterion::at_most("x", 3.0, 2.0)]);
        assert!(!s2.all_pass);
    }
}
