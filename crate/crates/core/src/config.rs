//! Run configuration: a flat key-value text format with dotted sections,
//! strict validation, and a canonical serialization (parse-serialize-parse
//! is a fixpoint).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expansion::ExpansionConfig;
use crate::fields::PeriodicField;
use crate::prandtl::PhysicalParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub alpha: f64,
    pub eta: f64,
    /// (mode number, cosine coefficient, sine coefficient)
    pub f_modes: Vec<(usize, f64, f64)>,
    /// strictly decreasing ladder in (0, 0.5]
    pub epsilons: Vec<f64>,
    pub order: usize,
    pub grid: GridConfig,
    pub tol: TolConfig,
    pub output_dir: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub n_theta: usize,
    pub n_r: usize,
    pub n_y: usize,
    pub y_max: f64,
    pub n_psi: usize,
    pub psi_pad: f64,
    pub grading: f64,
    pub r_min: f64,
    pub n_r_euler: usize,
    pub n_interior: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TolConfig {
    pub fixed_point: f64,
    pub newton: f64,
    pub krylov: f64,
    pub delta: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            alpha: 1.0,
            eta: 0.05,
            f_modes: vec![(1, 1.0, 0.0)],
            epsilons: vec![0.1, 0.07, 0.05, 0.035],
            order: 2,
            grid: GridConfig {
                n_theta: 64,
                n_r: 384,
                n_y: 401,
                y_max: 20.0,
                n_psi: 801,
                psi_pad: 2.0,
                grading: 4.0,
                r_min: 0.004,
                n_r_euler: 513,
                n_interior: 96,
            },
            tol: TolConfig {
                fixed_point: 1e-11,
                newton: 1e-9,
                krylov: 1e-6,
                delta: 0.0,
            },
            output_dir: "out".to_string(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.alpha <= 0.0 {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if self.eta < 0.0 {
            return bad(format!("eta must be nonnegative, got {}", self.eta));
        }
        if self.epsilons.is_empty() {
            return bad("epsilons must be nonempty".into());
        }
        for &e in &self.epsilons {
            if !(0.0 < e && e <= 0.5) {
                return bad(format!("epsilons entries must lie in (0, 0.5], got {e}"));
            }
        }
        if self.epsilons.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilons must be strictly decreasing".into());
        }
        if self.order > 2 {
            return bad(format!("order must be in 0..=2, got {}", self.order));
        }
        if self.grid.n_theta < 4 || !self.grid.n_theta.is_power_of_two() {
            return bad(format!("grid.n_theta must be a power of two >= 4, got {}", self.grid.n_theta));
        }
        if self.grid.n_y < 9 || self.grid.n_r < 16 || self.grid.n_psi < 9 {
            return bad("grid sizes too small".into());
        }
        if self.grid.y_max <= 0.0 || self.grid.psi_pad < 0.0 {
            return bad("grid.y_max must be positive and grid.psi_pad nonnegative".into());
        }
        if !(0.0 < self.grid.r_min && self.grid.r_min < 0.5) {
            return bad(format!("grid.r_min must lie in (0, 0.5), got {}", self.grid.r_min));
        }
        for (n, _, _) in &self.f_modes {
            if *n == 0 || *n >= self.grid.n_theta / 2 {
                return bad(format!("f mode number {n} outside 1..{}", self.grid.n_theta / 2));
            }
        }
        if self.tol.fixed_point <= 0.0 || self.tol.newton <= 0.0 || self.tol.krylov <= 0.0 {
            return bad("tolerances must be positive".into());
        }
        if self.tol.delta < 0.0 {
            return bad("tol.delta must be nonnegative".into());
        }
        Ok(())
    }

    /// The wall perturbation as a periodic field on the configured grid.
    pub fn f_field(&self) -> Result<PeriodicField> {
        let modes = self.f_modes.clone();
        PeriodicField::from_fn(self.grid.n_theta, move |t| {
            modes
                .iter()
                .map(|&(n, c, s)| c * (n as f64 * t).cos() + s * (n as f64 * t).sin())
                .sum()
        })
    }

    pub fn physical_params(&self) -> Result<PhysicalParams> {
        PhysicalParams::new(self.alpha, self.eta, self.f_field()?)
    }

    pub fn expansion_config(&self) -> ExpansionConfig {
        ExpansionConfig {
            n_theta: self.grid.n_theta,
            y_max: self.grid.y_max,
            n_y: self.grid.n_y,
            psi_pad: self.grid.psi_pad,
            n_psi: self.grid.n_psi,
            n_r_euler: self.grid.n_r_euler,
            fixed_point_tol: self.tol.fixed_point,
            fixed_point_max_iter: 25,
            krylov_tol: (self.tol.krylov * 1e-6).max(1e-13),
            krylov_max_iter: 400,
            delta: self.tol.delta,
        }
    }

    /// Canonical text form; `parse` of the output reproduces the config.
    pub fn serialize_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("alpha = {}\n", self.alpha));
        s.push_str(&format!("eta = {}\n", self.eta));
        let modes: Vec<String> = self
            .f_modes
            .iter()
            .map(|(n, c, si)| format!("{n}:{c}:{si}"))
            .collect();
        s.push_str(&format!("f_modes = {}\n", modes.join(", ")));
        let eps: Vec<String> = self.epsilons.iter().map(|e| format!("{e}")).collect();
        s.push_str(&format!("epsilons = {}\n", eps.join(", ")));
        s.push_str(&format!("order = {}\n", self.order));
        s.push_str(&format!("grid.n_theta = {}\n", self.grid.n_theta));
        s.push_str(&format!("grid.n_r = {}\n", self.grid.n_r));
        s.push_str(&format!("grid.n_y = {}\n", self.grid.n_y));
        s.push_str(&format!("grid.y_max = {}\n", self.grid.y_max));
        s.push_str(&format!("grid.n_psi = {}\n", self.grid.n_psi));
        s.push_str(&format!("grid.psi_pad = {}\n", self.grid.psi_pad));
        s.push_str(&format!("grid.grading = {}\n", self.grid.grading));
        s.push_str(&format!("grid.r_min = {}\n", self.grid.r_min));
        s.push_str(&format!("grid.n_r_euler = {}\n", self.grid.n_r_euler));
        s.push_str(&format!("grid.n_interior = {}\n", self.grid.n_interior));
        s.push_str(&format!("tol.fixed_point = {}\n", self.tol.fixed_point));
        s.push_str(&format!("tol.newton = {}\n", self.tol.newton));
        s.push_str(&format!("tol.krylov = {}\n", self.tol.krylov));
        s.push_str(&format!("tol.delta = {}\n", self.tol.delta));
        s.push_str(&format!("output_dir = {}\n", self.output_dir));
        s
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Config(format!("line {}: expected key = value", lineno + 1)));
            };
            cfg.set(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Apply one `key=value` assignment (config file line or --override).
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let parse_f64 = |v: &str| -> Result<f64> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as a number")))
        };
        let parse_usize = |v: &str| -> Result<usize> {
            v.parse()
                .map_err(|_| Error::Config(format!("{key}: cannot parse '{v}' as an integer")))
        };
        match key {
            "alpha" => self.alpha = parse_f64(value)?,
            "eta" => self.eta = parse_f64(value)?,
            "order" => self.order = parse_usize(value)?,
            "output_dir" => self.output_dir = value.to_string(),
            "f_modes" => {
                let mut modes = Vec::new();
                for part in value.split(',') {
                    let fields: Vec<&str> = part.trim().split(':').collect();
                    if fields.len() != 3 {
                        return Err(Error::Config(format!(
                            "f_modes: expected n:cos:sin, got '{}'",
                            part.trim()
                        )));
                    }
                    modes.push((
                        fields[0].parse().map_err(|_| {
                            Error::Config(format!("f_modes: bad mode number '{}'", fields[0]))
                        })?,
                        fields[1].parse().map_err(|_| {
                            Error::Config(format!("f_modes: bad coefficient '{}'", fields[1]))
                        })?,
                        fields[2].parse().map_err(|_| {
                            Error::Config(format!("f_modes: bad coefficient '{}'", fields[2]))
                        })?,
                    ));
                }
                self.f_modes = modes;
            }
            "epsilons" => {
                let mut eps = Vec::new();
                for part in value.split(',') {
                    eps.push(part.trim().parse().map_err(|_| {
                        Error::Config(format!("epsilons: cannot parse '{}'", part.trim()))
                    })?);
                }
                self.epsilons = eps;
            }
            "grid.n_theta" => self.grid.n_theta = parse_usize(value)?,
            "grid.n_r" => self.grid.n_r = parse_usize(value)?,
            "grid.n_y" => self.grid.n_y = parse_usize(value)?,
            "grid.y_max" => self.grid.y_max = parse_f64(value)?,
            "grid.n_psi" => self.grid.n_psi = parse_usize(value)?,
            "grid.psi_pad" => self.grid.psi_pad = parse_f64(value)?,
            "grid.grading" => self.grid.grading = parse_f64(value)?,
            "grid.r_min" => self.grid.r_min = parse_f64(value)?,
            "grid.n_r_euler" => self.grid.n_r_euler = parse_usize(value)?,
            "grid.n_interior" => self.grid.n_interior = parse_usize(value)?,
            "tol.fixed_point" => self.tol.fixed_point = parse_f64(value)?,
            "tol.newton" => self.tol.newton = parse_f64(value)?,
            "tol.krylov" => self.tol.krylov = parse_f64(value)?,
            "tol.delta" => self.tol.delta = parse_f64(value)?,
            other => return Err(Error::Config(format!("unknown key '{other}'"))),
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_fixpoint() {
        let cfg = RunConfig::default();
        let text = cfg.serialize_text();
        let back = RunConfig::parse(&text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(text, back.serialize_text());
        // a second cycle changes nothing
        let back2 = RunConfig::parse(&back.serialize_text()).unwrap();
        assert_eq!(back, back2);
    }

    #[test]
    fn validation_names_the_field() {
        let mut cfg = RunConfig::default();
        cfg.epsilons = vec![0.1, 0.0];
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("epsilons"));
        let mut cfg2 = RunConfig::default();
        cfg2.grid.n_theta = 48;
        assert!(cfg2.validate().unwrap_err().to_string().contains("n_theta"));
        let mut cfg3 = RunConfig::default();
        assert!(cfg3.set("grid.unknown", "1").is_err());
        cfg3.set("eta", "0.02").unwrap();
        assert_eq!(cfg3.eta, 0.02);
    }

    #[test]
    fn parse_handles_comments_and_overrides() {
        let text = "alpha = 2.0  # wall speed\n\n# comment line\neta = 0.01\nf_modes = 2:0.5:0.25\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.alpha, 2.0);
        assert_eq!(cfg.f_modes, vec![(2, 0.5, 0.25)]);
        // f field evaluates the configured modes
        let f = cfg.f_field().unwrap();
        let t = crate::TAU / 64.0 * 3.0;
        let expect = 0.5 * (2.0 * t).cos() + 0.25 * (2.0 * t).sin();
        assert!((f.values()[3] - expect).abs() < 1e-14);
    }
}
