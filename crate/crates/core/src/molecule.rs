//! Molecular constants, shipped presets and config-file ingestion.
//!
//! Energies are frequencies in MHz; fields are in Gauss.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::angmom::HalfInt;
use crate::error::{CrmError, Result};

/// Nuclear magneton over Planck's constant, MHz per Gauss.
pub const NUCLEAR_MAGNETON_MHZ_PER_GAUSS: f64 = 7.622593e-4;

/// Environment variable holding extra preset directories (`:`-separated).
pub const PRESET_PATH_VAR: &str = "CRM_PRESET_PATH";

const BUILTIN_PRESETS: &[(&str, &str)] = &[
    ("krb", include_str!("../../../presets/krb.toml")),
    ("spinless", include_str!("../../../presets/spinless.toml")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Nucleus {
    pub spin: HalfInt,
    /// Nuclear electric quadrupole coupling `(eqQ)`, MHz.
    pub eqq: f64,
    /// Spin–rotation constant, MHz.
    pub spin_rotation: f64,
    pub g_factor: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MoleculeSpec {
    pub name: String,
    /// Rotational constant, MHz.
    pub b_e: f64,
    pub nuclei: [Nucleus; 2],
    /// Tensor spin–spin constant, MHz.
    pub c3: f64,
    /// Scalar spin–spin constant, MHz.
    pub c4: f64,
    pub g_r: f64,
}

/// Magnetic field strength along the space-fixed Z axis.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct FieldPoint {
    gauss: f64,
}

impl FieldPoint {
    pub fn new(gauss: f64) -> Result<Self> {
        if gauss.is_finite() && gauss >= 0.0 {
            Ok(FieldPoint { gauss })
        } else {
            Err(CrmError::Domain(format!(
                "magnetic field must be finite and non-negative, got {gauss} G"
            )))
        }
    }

    pub fn zero() -> Self {
        FieldPoint { gauss: 0.0 }
    }

    pub fn gauss(self) -> f64 {
        self.gauss
    }

    /// `g μ_N B / h` in MHz for a given g-factor.
    pub fn zeeman_mhz(self, g_factor: f64) -> f64 {
        g_factor * NUCLEAR_MAGNETON_MHZ_PER_GAUSS * self.gauss
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NucleusConfig {
    twice_spin: i32,
    #[serde(rename = "eqQ_MHz")]
    eqq_mhz: f64,
    #[serde(rename = "c_sr_MHz", default, skip_serializing_if = "Option::is_none")]
    c_sr_mhz: Option<f64>,
    g_factor: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MoleculeConfig {
    name: String,
    #[serde(rename = "B_e_MHz")]
    b_e_mhz: f64,
    #[serde(rename = "c3_MHz", default, skip_serializing_if = "Option::is_none")]
    c3_mhz: Option<f64>,
    #[serde(rename = "c4_MHz")]
    c4_mhz: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    g_r: Option<f64>,
    nuclei: Vec<NucleusConfig>,
}

impl MoleculeSpec {
    /// Parses and validates a TOML molecule description.
    pub fn from_toml_str(source: &str) -> Result<Self> {
        let raw: MoleculeConfig =
            toml::from_str(source).map_err(|e| CrmError::Config(e.to_string()))?;
        let name = raw.name.clone();
        let nuclei: [NucleusConfig; 2] = raw.nuclei.try_into().map_err(|v: Vec<_>| {
            CrmError::Config(format!(
                "nuclei: expected exactly 2 entries, found {}",
                v.len()
            ))
        })?;
        let nuclei = nuclei.map(|n| Nucleus {
            spin: HalfInt::from_twice(n.twice_spin),
            eqq: n.eqq_mhz,
            spin_rotation: n.c_sr_mhz.unwrap_or(0.0),
            g_factor: n.g_factor,
        });
        let spec = MoleculeSpec {
            name,
            b_e: raw.b_e_mhz,
            nuclei,
            c3: raw.c3_mhz.unwrap_or(0.0),
            c4: raw.c4_mhz,
            g_r: raw.g_r.unwrap_or(0.0),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| CrmError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    /// Looks up `name_or_path` as a file, then in `$CRM_PRESET_PATH`, then
    /// among the built-in presets.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        let as_path = Path::new(name_or_path);
        if as_path.is_file() {
            return Self::from_file(as_path);
        }
        if let Some(dirs) = env::var_os(PRESET_PATH_VAR) {
            for dir in env::split_paths(&dirs) {
                let candidate: PathBuf = dir.join(format!("{name_or_path}.toml"));
                if candidate.is_file() {
                    return Self::from_file(&candidate);
                }
            }
        }
        Self::preset(name_or_path)
    }

    pub fn preset(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase();
        BUILTIN_PRESETS
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, text)| Self::from_toml_str(text))
            .unwrap_or_else(|| Err(CrmError::UnknownMolecule(name.to_owned())))
    }

    pub fn preset_names() -> impl Iterator<Item = &'static str> {
        BUILTIN_PRESETS.iter().map(|(n, _)| *n)
    }

    pub fn krb() -> Self {
        Self::preset("krb").expect("built-in KRb preset is valid")
    }

    pub fn spinless() -> Self {
        Self::preset("spinless").expect("built-in spinless preset is valid")
    }

    pub fn to_toml_string(&self) -> String {
        let raw = MoleculeConfig {
            name: self.name.clone(),
            b_e_mhz: self.b_e,
            c3_mhz: Some(self.c3),
            c4_mhz: self.c4,
            g_r: Some(self.g_r),
            nuclei: self
                .nuclei
                .iter()
                .map(|n| NucleusConfig {
                    twice_spin: n.spin.twice(),
                    eqq_mhz: n.eqq,
                    c_sr_mhz: Some(n.spin_rotation),
                    g_factor: n.g_factor,
                })
                .collect(),
        };
        toml::to_string(&raw).expect("molecule spec serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |message: String| {
            Err(CrmError::Validation {
                molecule: self.name.clone(),
                message,
            })
        };
        if !(self.b_e.is_finite() && self.b_e > 0.0) {
            return fail(format!("B_e must be positive and finite, got {}", self.b_e));
        }
        for (label, value) in [("c3", self.c3), ("c4", self.c4), ("g_r", self.g_r)] {
            if !value.is_finite() {
                return fail(format!("{label} must be finite"));
            }
        }
        for (i, n) in self.nuclei.iter().enumerate() {
            let idx = i + 1;
            if n.spin.twice() < 0 {
                return fail(format!("nucleus {idx}: spin must be non-negative"));
            }
            for (label, value) in [
                ("eqQ", n.eqq),
                ("c_sr", n.spin_rotation),
                ("g_factor", n.g_factor),
            ] {
                if !value.is_finite() {
                    return fail(format!("nucleus {idx}: {label} must be finite"));
                }
            }
            if n.spin.twice() < 2 && n.eqq != 0.0 {
                return fail(format!(
                    "nucleus {idx}: eqQ must vanish for I = {} < 1 (no quadrupole moment)",
                    n.spin
                ));
            }
        }
        Ok(())
    }

    pub fn spins(&self) -> (HalfInt, HalfInt) {
        (self.nuclei[0].spin, self.nuclei[1].spin)
    }

    /// Dimension of the nuclear-spin space, `(2I1+1)(2I2+1)`.
    pub fn bath_dimension(&self) -> usize {
        self.nuclei
            .iter()
            .map(|n| (n.spin.twice() + 1) as usize)
            .product()
    }

    /// Rotational period `1/(2 B_e)` in μs.
    pub fn rotational_period_us(&self) -> f64 {
        0.5 / self.b_e
    }

    pub fn has_hyperfine(&self) -> bool {
        self.c3 != 0.0
            || self.nuclei
                .iter()
                .any(|n| n.eqq != 0.0 || n.spin_rotation != 0.0)
    }

    /// Copy with every rotation–spin coupling constant set to zero.
    pub fn without_coupling(&self) -> Self {
        let mut spec = self.clone();
        spec.c3 = 0.0;
        for n in &mut spec.nuclei {
            n.eqq = 0.0;
            n.spin_rotation = 0.0;
        }
        spec
    }

    /// Copy with every hyperfine constant (couplings and `c4`) set to zero.
    pub fn without_hyperfine(&self) -> Self {
        let mut spec = self.without_coupling();
        spec.c4 = 0.0;
        spec
    }
}

/// Lower and upper edges of the accepted `|eqQ₂|/B_e` band.
pub const QUADRUPOLE_RATIO_BAND: (f64, f64) = (0.4e-3, 1.6e-3);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RatioReport {
    /// Nucleus 2 carries no quadrupole moment.
    NotApplicable,
    Pass { ratio: f64 },
    Flagged { ratio: f64 },
}

/// Checks `|eqQ₂|/B_e` against the band around `0.8e-3`.
pub fn quadrupole_ratio_report(spec: &MoleculeSpec) -> RatioReport {
    let nucleus = &spec.nuclei[1];
    if nucleus.spin.twice() < 2 {
        return RatioReport::NotApplicable;
    }
    let ratio = nucleus.eqq.abs() / spec.b_e;
    let (lo, hi) = QUADRUPOLE_RATIO_BAND;
    if (lo..=hi).contains(&ratio) {
        RatioReport::Pass { ratio }
    } else {
        RatioReport::Flagged { ratio }
    }
}
