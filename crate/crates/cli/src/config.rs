//! Run configuration: defaults, flat `key = value` files and flag overrides.
//!
//! The file format is one `key = value` pair per line; `#` starts a comment
//! and blank lines are ignored. Lists are comma separated. Every key accepted
//! in a file is also accepted as a `--key` flag with `_` spelled `-`.

use std::fmt::Write as _;
use std::path::PathBuf;

use quasilin::verify::Tolerances;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Radial,
    Solve2d,
    Verify,
    Bounds,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Radial => "radial",
            Mode::Solve2d => "solve2d",
            Mode::Verify => "verify",
            Mode::Bounds => "bounds",
            Mode::Sweep => "sweep",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [
            Mode::Radial,
            Mode::Solve2d,
            Mode::Verify,
            Mode::Bounds,
            Mode::Sweep,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub problem: String,
    pub g: Option<String>,
    pub f: Option<String>,
    pub n: usize,
    pub s_limit: Option<f64>,
    pub domain: Option<String>,
    pub h: Option<f64>,
    pub h_r: Option<f64>,
    pub radius: Option<f64>,
    pub beta: Vec<f64>,
    pub lambda: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_max: f64,
    pub alpha_steps: usize,
    pub validity_radii: Vec<f64>,
    pub existence_bracket: [f64; 2],
    pub ladder: Vec<f64>,
    pub order_study: bool,
    pub tolerances: Tolerances,
    pub tol_newton: f64,
    pub tol_shoot: f64,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            mode,
            problem: "euclidean".into(),
            g: None,
            f: None,
            n: 2,
            s_limit: None,
            domain: None,
            h: None,
            h_r: None,
            radius: None,
            beta: vec![1.0, 1.5, 2.0],
            lambda: vec![0.25, 0.5, 0.75, 0.9, 1.0],
            alpha: Vec::new(),
            alpha_max: 1.0,
            alpha_steps: 100,
            validity_radii: Vec::new(),
            existence_bracket: [0.1, 5.0],
            ladder: Vec::new(),
            order_study: true,
            tolerances: Tolerances::default(),
            tol_newton: 1e-10,
            tol_shoot: 1e-10,
            out_dir: PathBuf::from("."),
        }
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let value = value.trim();
        let num = |v: &str| -> Result<f64, String> {
            v.trim()
                .parse::<f64>()
                .map_err(|e| format!("`{key}`: cannot parse `{v}` as a number ({e})"))
        };
        let list = |v: &str| -> Result<Vec<f64>, String> {
            v.split(',')
                .filter(|s| !s.trim().is_empty())
                .map(num)
                .collect()
        };
        let opt_str = |v: &str| (!v.is_empty()).then(|| v.to_string());
        match key {
            "mode" => {
                self.mode = Mode::parse(value).ok_or_else(|| format!("unknown mode `{value}`"))?
            }
            "problem" => self.problem = value.to_string(),
            "g" => self.g = opt_str(value),
            "f" => self.f = opt_str(value),
            "n" => self.n = value.parse().map_err(|e| format!("`n`: {e}"))?,
            "s_limit" => {
                self.s_limit = if value.is_empty() {
                    None
                } else {
                    Some(num(value)?)
                }
            }
            "domain" => self.domain = opt_str(value),
            "h" => self.h = Some(num(value)?),
            "h_r" => {
                self.h_r = if value.is_empty() {
                    None
                } else {
                    Some(num(value)?)
                }
            }
            "R" => self.radius = Some(num(value)?),
            "beta" => self.beta = list(value)?,
            "lambda" => self.lambda = list(value)?,
            "alpha" => self.alpha = list(value)?,
            "alpha_max" => self.alpha_max = num(value)?,
            "alpha_steps" => {
                self.alpha_steps = value.parse().map_err(|e| format!("`alpha_steps`: {e}"))?
            }
            "validity_radii" => self.validity_radii = list(value)?,
            "existence_bracket" => {
                let v = list(value)?;
                self.existence_bracket = v
                    .try_into()
                    .map_err(|_| "`existence_bracket` takes two radii".to_string())?;
            }
            "ladder" => self.ladder = list(value)?,
            "order_study" => {
                self.order_study = value
                    .parse()
                    .map_err(|_| format!("`order_study`: expected true or false, got `{value}`"))?
            }
            "tol_bound" => self.tolerances.bound_relative = num(value)?,
            "tol_minimum_principle" => self.tolerances.minimum_principle = num(value)?,
            "tol_gradient_ceiling" => self.tolerances.gradient_ceiling = num(value)?,
            "tol_inequality" => self.tolerances.inequality = num(value)?,
            "tol_constancy" => self.tolerances.constancy = num(value)?,
            "tol_newton" => self.tol_newton = num(value)?,
            "tol_shoot" => self.tol_shoot = num(value)?,
            "out_dir" => self.out_dir = PathBuf::from(value),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Applies every pair of a flat config file.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected `key = value`", lineno + 1))?;
            self.set(key.trim(), value)
                .map_err(|e| format!("line {}: {e}", lineno + 1))?;
        }
        Ok(())
    }

    /// The flat file that reproduces this configuration.
    pub fn to_flat(&self) -> String {
        fn join(v: &[f64]) -> String {
            v.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
        }
        let t = &self.tolerances;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("mode", self.mode.name().into());
        put("problem", self.problem.clone());
        if let Some(g) = &self.g {
            put("g", g.clone());
        }
        if let Some(f) = &self.f {
            put("f", f.clone());
        }
        put("n", self.n.to_string());
        if let Some(s) = self.s_limit {
            put("s_limit", s.to_string());
        }
        if let Some(d) = &self.domain {
            put("domain", d.clone());
        }
        if let Some(h) = self.h {
            put("h", h.to_string());
        }
        if let Some(h) = self.h_r {
            put("h_r", h.to_string());
        }
        if let Some(r) = self.radius {
            put("R", r.to_string());
        }
        put("beta", join(&self.beta));
        put("lambda", join(&self.lambda));
        put("alpha", join(&self.alpha));
        put("alpha_max", self.alpha_max.to_string());
        put("alpha_steps", self.alpha_steps.to_string());
        put("validity_radii", join(&self.validity_radii));
        put("existence_bracket", join(&self.existence_bracket));
        put("ladder", join(&self.ladder));
        put("order_study", self.order_study.to_string());
        put("tol_bound", t.bound_relative.to_string());
        put("tol_minimum_principle", t.minimum_principle.to_string());
        put("tol_gradient_ceiling", t.gradient_ceiling.to_string());
        put("tol_inequality", t.inequality.to_string());
        put("tol_constancy", t.constancy.to_string());
        put("tol_newton", self.tol_newton.to_string());
        put("tol_shoot", self.tol_shoot.to_string());
        put("out_dir", self.out_dir.display().to_string());
        out
    }

    /// Checks the invariants that do not need the library.
    pub fn validate(&self) -> Result<(), String> {
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_bound", t.bound_relative),
            ("tol_minimum_principle", t.minimum_principle),
            ("tol_gradient_ceiling", t.gradient_ceiling),
            ("tol_inequality", t.inequality),
            ("tol_constancy", t.constancy),
            ("tol_newton", self.tol_newton),
            ("tol_shoot", self.tol_shoot),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("`{name}` must be positive, got {v}"));
            }
        }
        let positive = |name: &str, v: Option<f64>| -> Result<(), String> {
            match v {
                None => Err(format!("{} needs `{name}`", self.mode.name())),
                Some(x) if !(x > 0.0 && x.is_finite()) => {
                    Err(format!("`{name}` must be positive, got {x}"))
                }
                Some(_) => Ok(()),
            }
        };
        if let Some(h) = self.h_r {
            positive("h_r", Some(h))?;
        }
        match self.mode {
            Mode::Radial => positive("R", self.radius)?,
            Mode::Solve2d | Mode::Verify => {
                self.domain
                    .as_ref()
                    .ok_or_else(|| format!("{} needs `domain`", self.mode.name()))?;
                positive("h", self.h)?;
            }
            Mode::Sweep => {
                self.domain.as_ref().ok_or("sweep needs `domain`")?;
                if self.ladder.is_empty() {
                    positive("h", self.h)?;
                }
                for &h in &self.ladder {
                    positive("ladder", Some(h))?;
                }
            }
            Mode::Bounds => {
                if self.alpha.is_empty() {
                    positive("alpha_max", Some(self.alpha_max))?;
                    if self.alpha_steps == 0 {
                        return Err("`alpha_steps` must be at least 1".into());
                    }
                }
                for &a in &self.alpha {
                    positive("alpha", Some(a))?;
                }
                for &r in &self.validity_radii {
                    positive("validity_radii", Some(r))?;
                }
                let [lo, hi] = self.existence_bracket;
                if !(lo > 0.0 && hi > lo) {
                    return Err(format!(
                        "`existence_bracket` must satisfy 0 < lo < hi, got {lo},{hi}"
                    ));
                }
            }
        }
        if matches!(self.mode, Mode::Solve2d | Mode::Verify | Mode::Sweep) {
            if self.lambda.is_empty() {
                return Err("`lambda` schedule is empty".into());
            }
            let mut prev = 0.0;
            for &l in &self.lambda {
                if !(l > prev && l <= 1.0) {
                    return Err(format!(
                        "`lambda` must increase within (0, 1], got {:?}",
                        self.lambda
                    ));
                }
                prev = l;
            }
        }
        if matches!(self.mode, Mode::Verify | Mode::Sweep) && self.beta.is_empty() {
            return Err("`beta` list is empty".into());
        }
        Ok(())
    }

    /// Load values for the bounds table.
    pub fn alpha_values(&self) -> Vec<f64> {
        if self.alpha.is_empty() {
            (1..=self.alpha_steps)
                .map(|k| self.alpha_max * k as f64 / self.alpha_steps as f64)
                .collect()
        } else {
            self.alpha.clone()
        }
    }

    /// Grid spacings for the sweep.
    pub fn ladder_values(&self) -> Vec<f64> {
        if self.ladder.is_empty() {
            let h = self.h.unwrap_or(f64::NAN);
            vec![h, h / 2.0, h / 4.0]
        } else {
            self.ladder.clone()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Recognised keys in dump order.
    pub const KEYS: &[&str] = &[
        "mode",
        "problem",
        "g",
        "f",
        "n",
        "s_limit",
        "domain",
        "h",
        "h_r",
        "R",
        "beta",
        "lambda",
        "alpha",
        "alpha_max",
        "alpha_steps",
        "validity_radii",
        "existence_bracket",
        "ladder",
        "order_study",
        "tol_bound",
        "tol_minimum_principle",
        "tol_gradient_ceiling",
        "tol_inequality",
        "tol_constancy",
        "tol_newton",
        "tol_shoot",
        "out_dir",
    ];

    #[test]
    fn flat_dump_round_trips() {
        let mut cfg = RunConfig::new(Mode::Verify);
        cfg.domain = Some("ellipse:a=2,b=1".into());
        cfg.h = Some(0.1 / 3.0);
        cfg.beta = vec![1.0, 1.25];
        cfg.tolerances.inequality = 3e-7;
        cfg.g = Some("pow:1,1,-0.5".into());
        let mut back = RunConfig::new(Mode::Bounds);
        back.apply_file(&cfg.to_flat()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn every_key_is_dumped_or_optional() {
        let mut cfg = RunConfig::new(Mode::Radial);
        cfg.apply_file(
            "R = 1\nh_r = 0.001\ns_limit = 1\ndomain = disk:R=1\nh = 0.1\ng = const:1\nf = const:1",
        )
        .unwrap();
        let flat = cfg.to_flat();
        for key in KEYS {
            assert!(
                flat.lines().any(|l| l.starts_with(&format!("{key} = "))),
                "{key}"
            );
        }
    }

    #[test]
    fn comments_and_errors() {
        let mut cfg = RunConfig::new(Mode::Radial);
        cfg.apply_file("# header\n\nR = 2 # trailing\n").unwrap();
        assert_eq!(cfg.radius, Some(2.0));
        assert!(cfg
            .apply_file("bogus = 1")
            .unwrap_err()
            .contains("unknown key"));
        assert!(cfg.apply_file("R").unwrap_err().contains("line 1"));
        assert!(cfg.apply_file("R = x").is_err());
    }

    #[test]
    fn validation_rules() {
        let mut cfg = RunConfig::new(Mode::Verify);
        assert!(cfg.validate().unwrap_err().contains("domain"));
        cfg.domain = Some("disk:R=1".into());
        cfg.h = Some(0.05);
        assert!(cfg.validate().is_ok());
        cfg.tolerances.bound_relative = 0.0;
        assert!(cfg.validate().unwrap_err().contains("tol_bound"));
        cfg.tolerances.bound_relative = 1e-3;
        cfg.lambda = vec![0.5, 0.25, 1.0];
        assert!(cfg.validate().is_err());
        let radial = RunConfig::new(Mode::Radial);
        assert!(radial.validate().unwrap_err().contains("`R`"));
        assert!(RunConfig::new(Mode::Bounds).validate().is_ok());
    }

    #[test]
    fn default_ladders() {
        let mut cfg = RunConfig::new(Mode::Sweep);
        cfg.h = Some(0.1);
        assert_eq!(cfg.ladder_values(), vec![0.1, 0.05, 0.025]);
        let b = RunConfig::new(Mode::Bounds);
        let a = b.alpha_values();
        assert_eq!(a.len(), 100);
        assert_eq!(*a.last().unwrap(), 1.0);
    }
}
