//! Flat `key = value` run configuration.
//!
//! Blank lines and lines starting with `#` are ignored. Every key is
//! optional; see [`RunConfig::default`] and [`KEYS`] for the defaults.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::evolution::{Family, InitialDataSpec, PulseMode, MAX_CFL};

/// Recognised keys with their defaults, as shown by `--help`.
pub const KEYS: &[(&str, &str)] = &[
    ("mass", "1.0"),
    ("r_star_min", "-100.0"),
    ("r_star_max", "200.0"),
    ("n_points", "4096"),
    ("l_max", "2"),
    ("modes", "all (l, m) with 1 <= l <= l_max, as `l:m, l:m, ...`"),
    ("family", "pulse (coulomb | pulse | mixed)"),
    ("q_e", "0.0"),
    ("q_b", "0.0"),
    ("pulse_center", "20.0"),
    ("pulse_width", "3.0"),
    ("amplitude_phi0", "1.0 (`re` or `re, im`)"),
    ("amplitude_phi2", "0.0 (`re` or `re, im`)"),
    ("t_final", "100.0"),
    ("cfl", "0.25 (at most 0.5)"),
    ("output_every", "1.0"),
    ("coulomb_steps", "1000"),
    ("certify_radius", "1000.0"),
    ("certify_depth", "48"),
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mass: f64,
    pub r_star_min: f64,
    pub r_star_max: f64,
    pub n_points: usize,
    pub l_max: u32,
    /// Explicit mode list; `None` means every mode up to `l_max`.
    pub modes: Option<Vec<(u32, i32)>>,
    pub family: Family,
    pub q_e: f64,
    pub q_b: f64,
    pub pulse_center: f64,
    pub pulse_width: f64,
    pub amplitude_phi0: Complex64,
    pub amplitude_phi2: Complex64,
    pub t_final: f64,
    pub cfl: f64,
    pub output_every: f64,
    pub coulomb_steps: usize,
    pub certify_radius: f64,
    pub certify_depth: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mass: 1.0,
            r_star_min: -100.0,
            r_star_max: 200.0,
            n_points: 4096,
            l_max: 2,
            modes: None,
            family: Family::Pulse,
            q_e: 0.0,
            q_b: 0.0,
            pulse_center: 20.0,
            pulse_width: 3.0,
            amplitude_phi0: Complex64::new(1.0, 0.0),
            amplitude_phi2: Complex64::new(0.0, 0.0),
            t_final: 100.0,
            cfl: 0.25,
            output_every: 1.0,
            coulomb_steps: 1000,
            certify_radius: 1000.0,
            certify_depth: 48,
        }
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::config(key, format!("cannot parse {v:?} as {}", std::any::type_name::<T>())))
}

fn parse_complex(key: &str, v: &str) -> Result<Complex64> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    match parts.as_slice() {
        [re] => Ok(Complex64::new(parse_num(key, re)?, 0.0)),
        [re, im] => Ok(Complex64::new(parse_num(key, re)?, parse_num(key, im)?)),
        _ => Err(Error::config(key, format!("expected `re` or `re, im`, got {v:?}"))),
    }
}

fn parse_modes(v: &str) -> Result<Vec<(u32, i32)>> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (l, m) = item
                .split_once(':')
                .ok_or_else(|| Error::config("modes", format!("expected `l:m`, got {item:?}")))?;
            Ok((parse_num("modes", l.trim())?, parse_num("modes", m.trim())?))
        })
        .collect()
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", lineno + 1), "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "mass" => c.mass = parse_num(key, value)?,
            "r_star_min" => c.r_star_min = parse_num(key, value)?,
            "r_star_max" => c.r_star_max = parse_num(key, value)?,
            "n_points" => c.n_points = parse_num(key, value)?,
            "l_max" => c.l_max = parse_num(key, value)?,
            "modes" => c.modes = Some(parse_modes(value)?),
            "family" => {
                c.family = match value {
                    "coulomb" => Family::Coulomb,
                    "pulse" => Family::Pulse,
                    "mixed" => Family::Mixed,
                    _ => return Err(Error::config(key, format!("unknown family {value:?}"))),
                }
            }
            "q_e" => c.q_e = parse_num(key, value)?,
            "q_b" => c.q_b = parse_num(key, value)?,
            "pulse_center" => c.pulse_center = parse_num(key, value)?,
            "pulse_width" => c.pulse_width = parse_num(key, value)?,
            "amplitude_phi0" => c.amplitude_phi0 = parse_complex(key, value)?,
            "amplitude_phi2" => c.amplitude_phi2 = parse_complex(key, value)?,
            "t_final" => c.t_final = parse_num(key, value)?,
            "cfl" => c.cfl = parse_num(key, value)?,
            "output_every" => c.output_every = parse_num(key, value)?,
            "coulomb_steps" => c.coulomb_steps = parse_num(key, value)?,
            "certify_radius" => c.certify_radius = parse_num(key, value)?,
            "certify_depth" => c.certify_depth = parse_num(key, value)?,
            _ => return Err(Error::config(key, "unknown key")),
        }
    }
    c.validate()?;
    Ok(c)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("must be positive and finite, got {v}")))
            }
        };
        positive("mass", self.mass)?;
        positive("t_final", self.t_final)?;
        positive("output_every", self.output_every)?;
        positive("pulse_width", self.pulse_width)?;
        positive("certify_radius", self.certify_radius)?;
        if !(self.r_star_min.is_finite() && self.r_star_max.is_finite()) || self.r_star_min >= self.r_star_max {
            return Err(Error::config("r_star_max", "must exceed r_star_min"));
        }
        if self.n_points < 16 {
            return Err(Error::config("n_points", format!("must be at least 16, got {}", self.n_points)));
        }
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return Err(Error::config("cfl", format!("must lie in (0, {MAX_CFL}], got {}", self.cfl)));
        }
        if self.certify_radius <= 3.0 * self.mass {
            return Err(Error::config("certify_radius", "must exceed 3 mass"));
        }
        if let Some(modes) = &self.modes {
            for &(l, m) in modes {
                if l == 0 || l > 64 || m.unsigned_abs() > l {
                    return Err(Error::config("modes", format!("invalid mode {l}:{m}")));
                }
            }
        }
        if self.l_max > 64 {
            return Err(Error::config("l_max", "must be at most 64"));
        }
        if self.family != Family::Coulomb {
            let margin = 4.0 * self.pulse_width;
            if self.pulse_center - margin < self.r_star_min || self.pulse_center + margin > self.r_star_max {
                return Err(Error::config("pulse_center", "pulse must sit 4 widths inside the grid"));
            }
        }
        Ok(())
    }

    /// Radiative modes to evolve.
    pub fn mode_list(&self) -> Vec<(u32, i32)> {
        match &self.modes {
            Some(m) => m.clone(),
            None => (1..=self.l_max)
                .flat_map(|l| (-(l as i32)..=l as i32).map(move |m| (l, m)))
                .collect(),
        }
    }

    pub fn initial_data(&self) -> InitialDataSpec {
        InitialDataSpec {
            family: self.family,
            q_e: self.q_e,
            q_b: self.q_b,
            center: self.pulse_center,
            width: self.pulse_width,
            modes: self
                .mode_list()
                .into_iter()
                .map(|(l, m)| PulseMode {
                    l,
                    m,
                    amplitude_phi0: self.amplitude_phi0,
                    amplitude_phi2: self.amplitude_phi2,
                })
                .collect(),
        }
    }

    /// Grid refined by an integer factor, keeping the node set nested.
    pub fn refined(&self, factor: usize) -> Self {
        let mut c = self.clone();
        c.n_points = (self.n_points - 1) * factor + 1;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_gives_defaults() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        assert_eq!(c.mass, 1.0);
        assert_eq!(c.l_max, 2);
        assert_eq!(c.t_final, 100.0);
        assert_eq!(c.mode_list().len(), 8);
    }

    #[test]
    fn range_errors_name_the_key() {
        for (text, key) in [
            ("mass = -1", "mass"),
            ("cfl = 0.9", "cfl"),
            ("n_points = 3", "n_points"),
            ("bogus = 1", "bogus"),
            ("t_final = abc", "t_final"),
            ("modes = 1:2", "modes"),
        ] {
            match parse_config(text) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn parses_all_value_kinds() {
        let c = parse_config(
            "# comment\nfamily = mixed\nq_e = 1\nmodes = 1:0, 2:-1\namplitude_phi2 = 0.5, -0.25\nn_points=513\n",
        )
        .unwrap();
        assert_eq!(c.family, Family::Mixed);
        assert_eq!(c.modes, Some(vec![(1, 0), (2, -1)]));
        assert_eq!(c.amplitude_phi2, Complex64::new(0.5, -0.25));
        assert_eq!(c.refined(2).n_points, 1025);
    }
}
