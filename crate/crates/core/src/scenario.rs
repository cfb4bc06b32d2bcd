//! Deployment geometry, large-scale fading and algorithm tolerances.
//!
//! Powers are handled in mW throughout; dBm only appears in parameter
//! names carrying the `_dbm` suffix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Full parameter set of one deployment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub pos_alice: Point,
    pub pos_bob: Point,
    pub pos_grace: Point,
    pub pos_willie: Point,
    pub pos_ris: Point,

    pub chi_ab: f64,
    pub chi_aw: f64,
    pub chi_ar: f64,
    pub chi_rb: f64,
    pub chi_rg: f64,
    pub chi_rw: f64,
    pub l0_db: f64,
    pub d0_m: f64,

    pub lambda_ab: f64,
    pub lambda_aw: f64,
    pub lambda_ar: f64,
    pub lambda_rb: f64,
    pub lambda_rg: f64,
    pub lambda_rw: f64,

    pub sigma2_b_dbm: f64,
    pub sigma2_g_dbm: f64,
    pub sigma2_w_dbm: f64,
    pub pt_dbm: f64,

    pub k: usize,
    pub k_n: usize,
    pub k_m: usize,

    pub epsilon: f64,
    pub rg_min_bps: f64,
    pub omega: f64,
    pub zeta1: f64,
    pub zeta2: f64,
    pub zeta3: f64,
    pub rho0: f64,
    pub c1: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            pos_alice: Point::new(0.0, 0.0),
            pos_bob: Point::new(90.0, 0.0),
            pos_grace: Point::new(90.0, 10.0),
            pos_willie: Point::new(80.0, -5.0),
            pos_ris: Point::new(80.0, 5.0),
            chi_ab: 3.0,
            chi_aw: 3.0,
            chi_ar: 2.0,
            chi_rb: 2.0,
            chi_rg: 2.0,
            chi_rw: 2.0,
            l0_db: 30.0,
            d0_m: 1.0,
            lambda_ab: 1.0,
            lambda_aw: 1.0,
            lambda_ar: 1.0,
            lambda_rb: 1.0,
            lambda_rg: 1.0,
            lambda_rw: 1.0,
            sigma2_b_dbm: -90.0,
            sigma2_g_dbm: -90.0,
            sigma2_w_dbm: -90.0,
            pt_dbm: 25.0,
            k: 64,
            k_n: 32,
            k_m: 32,
            epsilon: 0.05,
            rg_min_bps: 1.0,
            omega: 0.01,
            zeta1: 1e-4,
            zeta2: 1e-4,
            zeta3: 1e-4,
            rho0: 10.0,
            c1: 0.5,
            seed: 1,
        }
    }
}

/// Linear path losses of every link plus the covertness aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossSet {
    pub l_ab: f64,
    pub l_aw: f64,
    pub l_ar: f64,
    pub l_rb: f64,
    pub l_rg: f64,
    pub l_rw: f64,
    /// `L_ar * L_rw / L_aw`.
    pub phi: f64,
    /// Mean of the reflected power at Willie, `lambda_ar * lambda_rw * K_n`.
    pub lambda_n: f64,
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    10.0 * mw.log10()
}

/// Linear path loss `10^(L0/10) * (d/d0)^chi`.
pub fn path_loss(d: f64, d0: f64, chi: f64, l0_db: f64) -> Result<f64> {
    if !(d > 0.0) || !d.is_finite() {
        return Err(Error::domain(format!("distance must be positive, got {d}")));
    }
    if !(d0 > 0.0) {
        return Err(Error::domain(format!("reference distance must be positive, got {d0}")));
    }
    Ok(10f64.powf(l0_db / 10.0) * (d / d0).powf(chi))
}

impl Scenario {
    pub fn pt_mw(&self) -> f64 {
        dbm_to_mw(self.pt_dbm)
    }
    pub fn sigma2_b(&self) -> f64 {
        dbm_to_mw(self.sigma2_b_dbm)
    }
    pub fn sigma2_g(&self) -> f64 {
        dbm_to_mw(self.sigma2_g_dbm)
    }
    pub fn sigma2_w(&self) -> f64 {
        dbm_to_mw(self.sigma2_w_dbm)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = [
            ("pos_alice_m", self.pos_alice),
            ("pos_bob_m", self.pos_bob),
            ("pos_grace_m", self.pos_grace),
            ("pos_willie_m", self.pos_willie),
            ("pos_ris_m", self.pos_ris),
        ];
        for (k, p) in pos {
            if !p.x.is_finite() || !p.y.is_finite() {
                return Err(Error::param(k, "coordinates must be finite"));
            }
        }
        for (k, v) in [
            ("chi_ab", self.chi_ab),
            ("chi_aw", self.chi_aw),
            ("chi_ar", self.chi_ar),
            ("chi_rb", self.chi_rb),
            ("chi_rg", self.chi_rg),
            ("chi_rw", self.chi_rw),
            ("d0_m", self.d0_m),
            ("lambda_ab", self.lambda_ab),
            ("lambda_aw", self.lambda_aw),
            ("lambda_ar", self.lambda_ar),
            ("lambda_rb", self.lambda_rb),
            ("lambda_rg", self.lambda_rg),
            ("lambda_rw", self.lambda_rw),
            ("rho0", self.rho0),
            ("zeta1", self.zeta1),
            ("zeta2", self.zeta2),
            ("zeta3", self.zeta3),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::param(k, format!("must be positive and finite, got {v}")));
            }
        }
        for (k, v) in [
            ("l0_db", self.l0_db),
            ("sigma2_b_dbm", self.sigma2_b_dbm),
            ("sigma2_g_dbm", self.sigma2_g_dbm),
            ("sigma2_w_dbm", self.sigma2_w_dbm),
            ("pt_dbm", self.pt_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::param(k, "must be finite"));
            }
        }
        if self.k_n + self.k_m != self.k {
            return Err(Error::param(
                "k",
                format!("k_n + k_m = {} differs from k = {}", self.k_n + self.k_m, self.k),
            ));
        }
        if self.k_m == 0 {
            return Err(Error::param("k_m", "at least one transmitting element is required"));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::param("epsilon", "must lie in (0, 1]"));
        }
        if !(self.rg_min_bps >= 0.0) || !self.rg_min_bps.is_finite() {
            return Err(Error::param("rg_min_bps", "must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::param("omega", "must lie in [0, 1]"));
        }
        if !(self.c1 > 0.0 && self.c1 < 1.0) {
            return Err(Error::param("c1", "must lie in (0, 1)"));
        }
        Ok(())
    }

    pub fn path_losses(&self) -> Result<PathLossSet> {
        let pl = |a: &Point, b: &Point, chi: f64| path_loss(a.dist(b), self.d0_m, chi, self.l0_db);
        let l_ab = pl(&self.pos_alice, &self.pos_bob, self.chi_ab)?;
        let l_aw = pl(&self.pos_alice, &self.pos_willie, self.chi_aw)?;
        let l_ar = pl(&self.pos_alice, &self.pos_ris, self.chi_ar)?;
        let l_rb = pl(&self.pos_ris, &self.pos_bob, self.chi_rb)?;
        let l_rg = pl(&self.pos_ris, &self.pos_grace, self.chi_rg)?;
        let l_rw = pl(&self.pos_ris, &self.pos_willie, self.chi_rw)?;
        Ok(PathLossSet {
            l_ab,
            l_aw,
            l_ar,
            l_rb,
            l_rg,
            l_rw,
            phi: l_ar * l_rw / l_aw,
            lambda_n: self.lambda_ar * self.lambda_rw * self.k_n as f64,
        })
    }

    /// Names accepted by [`Scenario::set`].
    pub const KEYS: &'static [&'static str] = &[
        "pos_alice_m",
        "pos_bob_m",
        "pos_grace_m",
        "pos_willie_m",
        "pos_ris_m",
        "ris_x_m",
        "ris_y_m",
        "chi_ab",
        "chi_aw",
        "chi_ar",
        "chi_rb",
        "chi_rg",
        "chi_rw",
        "l0_db",
        "d0_m",
        "lambda_ab",
        "lambda_aw",
        "lambda_ar",
        "lambda_rb",
        "lambda_rg",
        "lambda_rw",
        "sigma2_dbm",
        "sigma2_b_dbm",
        "sigma2_g_dbm",
        "sigma2_w_dbm",
        "pt_dbm",
        "k",
        "k_n",
        "k_m",
        "epsilon",
        "rg_min_bps",
        "omega",
        "zeta1",
        "zeta2",
        "zeta3",
        "rho0",
        "c1",
        "seed",
    ];

    /// Set one parameter from its textual value. Element counts are set
    /// independently; call [`Scenario::validate`] once all keys are applied.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let num = || -> Result<f64> {
            value
                .parse::<f64>()
                .map_err(|_| Error::param(key, format!("expected a number, got `{value}`")))
        };
        let count = || -> Result<usize> {
            value
                .parse::<usize>()
                .map_err(|_| Error::param(key, format!("expected a non-negative integer, got `{value}`")))
        };
        let point = || -> Result<Point> {
            let parts: Vec<&str> = value.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(Error::param(key, format!("expected `x, y`, got `{value}`")));
            }
            let x = parts[0].parse::<f64>();
            let y = parts[1].parse::<f64>();
            match (x, y) {
                (Ok(x), Ok(y)) => Ok(Point::new(x, y)),
                _ => Err(Error::param(key, format!("expected `x, y`, got `{value}`"))),
            }
        };
        match key {
            "pos_alice_m" => self.pos_alice = point()?,
            "pos_bob_m" => self.pos_bob = point()?,
            "pos_grace_m" => self.pos_grace = point()?,
            "pos_willie_m" => self.pos_willie = point()?,
            "pos_ris_m" => self.pos_ris = point()?,
            "ris_x_m" => self.pos_ris.x = num()?,
            "ris_y_m" => self.pos_ris.y = num()?,
            "chi_ab" => self.chi_ab = num()?,
            "chi_aw" => self.chi_aw = num()?,
            "chi_ar" => self.chi_ar = num()?,
            "chi_rb" => self.chi_rb = num()?,
            "chi_rg" => self.chi_rg = num()?,
            "chi_rw" => self.chi_rw = num()?,
            "l0_db" => self.l0_db = num()?,
            "d0_m" => self.d0_m = num()?,
            "lambda_ab" => self.lambda_ab = num()?,
            "lambda_aw" => self.lambda_aw = num()?,
            "lambda_ar" => self.lambda_ar = num()?,
            "lambda_rb" => self.lambda_rb = num()?,
            "lambda_rg" => self.lambda_rg = num()?,
            "lambda_rw" => self.lambda_rw = num()?,
            "sigma2_dbm" => {
                let v = num()?;
                self.sigma2_b_dbm = v;
                self.sigma2_g_dbm = v;
                self.sigma2_w_dbm = v;
            }
            "sigma2_b_dbm" => self.sigma2_b_dbm = num()?,
            "sigma2_g_dbm" => self.sigma2_g_dbm = num()?,
            "sigma2_w_dbm" => self.sigma2_w_dbm = num()?,
            "pt_dbm" => self.pt_dbm = num()?,
            "k" => self.k = count()?,
            "k_n" => self.k_n = count()?,
            "k_m" => self.k_m = count()?,
            "epsilon" => self.epsilon = num()?,
            "rg_min_bps" => self.rg_min_bps = num()?,
            "omega" => self.omega = num()?,
            "zeta1" => self.zeta1 = num()?,
            "zeta2" => self.zeta2 = num()?,
            "zeta3" => self.zeta3 = num()?,
            "rho0" => self.rho0 = num()?,
            "c1" => self.c1 = num()?,
            "seed" => {
                self.seed = value
                    .parse::<u64>()
                    .map_err(|_| Error::param(key, format!("expected an unsigned integer, got `{value}`")))?
            }
            _ => return Err(Error::param(key, "unknown parameter")),
        }
        Ok(())
    }

    /// Apply a list of `(key, value)` overrides and re-establish
    /// `k = k_n + k_m`. When only some of the three counts were given the
    /// missing one is derived; `k_n` alone keeps `k` and adjusts `k_m`.
    pub fn apply<'a, I>(&mut self, pairs: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a str, &'a str)>,
    {
        let (mut set_k, mut set_kn, mut set_km) = (false, false, false);
        for (k, v) in pairs {
            self.set(k, v)?;
            match k {
                "k" => set_k = true,
                "k_n" => set_kn = true,
                "k_m" => set_km = true,
                _ => {}
            }
        }
        match (set_k, set_kn, set_km) {
            (true, true, true) | (false, false, false) => {}
            (false, _, _) => self.k = self.k_n + self.k_m,
            (true, true, false) => self.k_m = self.k.saturating_sub(self.k_n),
            (true, false, true) => self.k_n = self.k.saturating_sub(self.k_m),
            (true, false, false) => {
                self.k_n = self.k / 2;
                self.k_m = self.k - self.k_n;
            }
        }
        self.validate()
    }

    /// Set a numeric parameter during a sweep. `k_n` keeps `k` fixed.
    pub fn set_numeric(&mut self, key: &str, value: f64) -> Result<()> {
        match key {
            "k_n" => {
                let kn = as_count(key, value)?;
                if kn > self.k {
                    return Err(Error::param(key, format!("{kn} exceeds k = {}", self.k)));
                }
                self.k_n = kn;
                self.k_m = self.k - kn;
            }
            "k_m" => {
                let km = as_count(key, value)?;
                if km > self.k {
                    return Err(Error::param(key, format!("{km} exceeds k = {}", self.k)));
                }
                self.k_m = km;
                self.k_n = self.k - km;
            }
            "k" | "seed" => {
                let v = as_count(key, value)?;
                self.set(key, &v.to_string())?;
            }
            _ => self.set(key, &format!("{value:e}"))?,
        }
        Ok(())
    }
}

fn as_count(key: &str, value: f64) -> Result<usize> {
    if value < 0.0 || value.fract() != 0.0 || !value.is_finite() {
        return Err(Error::param(key, format!("expected a non-negative integer, got {value}")));
    }
    Ok(value as usize)
}

/// Line number, key and value of one config entry.
pub type ConfigEntry = (usize, String, String);

/// Parse the flat `key = value` configuration text. Blank lines and `#`
/// comments are ignored. Returns the pairs with their line numbers.
pub fn parse_config(text: &str) -> Result<Vec<ConfigEntry>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Config {
                line: line_no,
                msg: format!("expected `key = value`, got `{line}`"),
            });
        };
        let k = k.trim();
        if k.is_empty() {
            return Err(Error::Config {
                line: line_no,
                msg: "empty key".into(),
            });
        }
        out.push((line_no, k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Build a scenario from defaults plus config text. Keys outside the
/// scenario namespace (those containing a `.`) are returned untouched.
pub fn scenario_from_config(text: &str) -> Result<(Scenario, Vec<ConfigEntry>)> {
    let mut sc = Scenario::default();
    let rest = sc.apply_config(text)?;
    Ok((sc, rest))
}

impl Scenario {
    /// Apply config text on top of the current values. Errors carry the
    /// offending line; keys containing a `.` are returned untouched.
    pub fn apply_config(&mut self, text: &str) -> Result<Vec<ConfigEntry>> {
        let mut rest = Vec::new();
        let mut own = Vec::new();
        for (line, k, v) in parse_config(text)? {
            if k.contains('.') {
                rest.push((line, k, v));
            } else if Scenario::KEYS.contains(&k.as_str()) {
                own.push((line, k, v));
            } else {
                return Err(Error::Config {
                    line,
                    msg: format!("unknown key `{k}`"),
                });
            }
        }
        for (line, k, v) in &own {
            let mut probe = self.clone();
            probe.set(k, v).map_err(|e| Error::Config {
                line: *line,
                msg: e.to_string(),
            })?;
        }
        self.apply(own.iter().map(|(_, k, v)| (k.as_str(), v.as_str())))
            .map_err(|e| Error::Config {
                line: own.last().map(|o| o.0).unwrap_or(0),
                msg: e.to_string(),
            })?;
        Ok(rest)
    }
}
