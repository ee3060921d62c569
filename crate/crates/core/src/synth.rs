//! Seeded synthetic transcripts calibrated to published department means.
//!
//! A module mark is `method mean + ability + noise`, clamped to [0, 100],
//! where the total spread of a mark is `mark_sd`. The per-student ability
//! term is off by default (`ability_sd = 0`), so marks are independent draws
//! around the method means. Every department draws from its own stream of
//! the master seed.

use std::collections::BTreeMap;

use rand::distr::weighted::WeightedIndex;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mai::{categorize, ClassTables};
use crate::model::{AssessmentMethod, Department, TranscriptRecord};
use crate::stats::table_one;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepartmentConfig {
    pub students: usize,
    pub modules_per_year: usize,
    pub exam_mean: f64,
    pub coursework_mean: f64,
    pub mixed_mean: f64,
    pub mark_sd: f64,
    /// Relative usage of each ratio class, in class-table order. Empty means uniform.
    pub class_weights: Vec<f64>,
}

impl Default for DepartmentConfig {
    fn default() -> Self {
        Self::calibrated(Department::CS)
    }
}

impl DepartmentConfig {
    /// Defaults with the published means of `department`.
    pub fn calibrated(department: Department) -> Self {
        let row = table_one().iter().find(|r| r.department == department).expect("every department has a reference row");
        DepartmentConfig {
            students: 200,
            modules_per_year: 8,
            exam_mean: row.exam,
            coursework_mean: row.coursework,
            mixed_mean: row.mixed,
            mark_sd: 12.0,
            class_weights: Vec::new(),
        }
    }

    fn mean_for(&self, method: AssessmentMethod) -> f64 {
        match method {
            AssessmentMethod::Exam => self.exam_mean,
            AssessmentMethod::Coursework => self.coursework_mean,
            AssessmentMethod::Both => self.mixed_mean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub missing_method_rate: f64,
    pub markless_rate: f64,
    /// Year-2 mark shift per unit of a student's year-1 mean index above the
    /// department mean. 0 plants nothing.
    pub mai_outcome_coupling: f64,
    /// Spread of a per-student term shared by all their modules; must not
    /// exceed any `mark_sd`. Nonzero values make the year-1 index informative
    /// about year 2 even without coupling, because it explains part of the
    /// year-1 average.
    pub ability_sd: f64,
    pub departments: BTreeMap<Department, DepartmentConfig>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 0,
            missing_method_rate: 0.0,
            markless_rate: 0.0,
            mai_outcome_coupling: 0.0,
            ability_sd: 0.0,
            departments: BTreeMap::from([(Department::CS, DepartmentConfig::calibrated(Department::CS))]),
        }
    }
}

impl SynthConfig {
    /// Parses the TOML key/value form:
    ///
    /// ```text
    /// seed = 42
    /// missing_method_rate = 0.1
    /// [departments.CS]
    /// students = 500
    /// ```
    ///
    /// Department sections start from that department's calibrated defaults.
    pub fn from_toml(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            seed: Option<u64>,
            missing_method_rate: Option<f64>,
            markless_rate: Option<f64>,
            mai_outcome_coupling: Option<f64>,
            ability_sd: Option<f64>,
            #[serde(default)]
            departments: BTreeMap<String, toml::Table>,
        }
        let raw: Raw = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let defaults = SynthConfig::default();
        let mut departments = BTreeMap::new();
        for (name, table) in raw.departments {
            let dept: Department = name.parse()?;
            let mut merged =
                toml::Table::try_from(DepartmentConfig::calibrated(dept)).map_err(|e| Error::Config(e.to_string()))?;
            merged.extend(table);
            let cfg: DepartmentConfig = merged.try_into().map_err(|e: toml::de::Error| Error::Config(format!("{dept}: {e}")))?;
            departments.insert(dept, cfg);
        }
        let cfg = SynthConfig {
            seed: raw.seed.unwrap_or(defaults.seed),
            missing_method_rate: raw.missing_method_rate.unwrap_or(defaults.missing_method_rate),
            markless_rate: raw.markless_rate.unwrap_or(defaults.markless_rate),
            mai_outcome_coupling: raw.mai_outcome_coupling.unwrap_or(defaults.mai_outcome_coupling),
            ability_sd: raw.ability_sd.unwrap_or(defaults.ability_sd),
            departments: if departments.is_empty() { defaults.departments } else { departments },
        };
        cfg.check()?;
        Ok(cfg)
    }

    pub fn check(&self) -> Result<()> {
        let rate = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        rate("missing_method_rate", self.missing_method_rate)?;
        rate("markless_rate", self.markless_rate)?;
        if !self.mai_outcome_coupling.is_finite() {
            return Err(Error::Config("mai_outcome_coupling must be finite".into()));
        }
        if self.ability_sd.is_nan() || self.ability_sd < 0.0 {
            return Err(Error::Config("ability_sd must be >= 0".into()));
        }
        for (d, c) in &self.departments {
            for (name, m) in [("exam_mean", c.exam_mean), ("coursework_mean", c.coursework_mean), ("mixed_mean", c.mixed_mean)] {
                if !(0.0..=100.0).contains(&m) {
                    return Err(Error::Config(format!("{d}: {name} must be in [0, 100]")));
                }
            }
            if c.mark_sd.is_nan() || c.mark_sd <= 0.0 {
                return Err(Error::Config(format!("{d}: mark_sd must be > 0")));
            }
            if self.ability_sd > c.mark_sd {
                return Err(Error::Config(format!("{d}: ability_sd exceeds mark_sd")));
            }
            if c.modules_per_year == 0 {
                return Err(Error::Config(format!("{d}: modules_per_year must be >= 1")));
            }
            if c.class_weights.iter().any(|w| w.is_nan() || *w < 0.0) {
                return Err(Error::Config(format!("{d}: class weights must be >= 0")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct SynthReport {
    pub records: usize,
    pub clamped: usize,
    pub clamped_fraction: f64,
    pub methods_blanked: usize,
    pub markless_injected: usize,
}

const YEARS: u8 = 2;

fn round1(v: f64) -> f64 {
    (v * 10.0).round() / 10.0
}

fn dept_rng(seed: u64, department: Department, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(purpose * 16 + department as u64);
    rng
}

fn generate_department(
    department: Department,
    cfg: &DepartmentConfig,
    ability_sd: f64,
    tables: &ClassTables,
    seed: u64,
    clamped: &mut usize,
) -> Result<Vec<TranscriptRecord>> {
    let table = tables.get(department);
    let weights = if cfg.class_weights.is_empty() {
        vec![1.0; table.len()]
    } else if cfg.class_weights.len() == table.len() {
        cfg.class_weights.clone()
    } else {
        return Err(Error::Config(format!(
            "{department}: {} class weights for {} classes",
            cfg.class_weights.len(),
            table.len()
        )));
    };
    let class_dist = WeightedIndex::new(&weights).map_err(|e| Error::Config(format!("{department}: {e}")))?;
    let mut rng = dept_rng(seed, department, 1);

    // module catalogue: three times as many modules per year as a student takes
    let pool = cfg.modules_per_year * 3;
    let catalogue: Vec<Vec<(String, (u8, u8))>> = (1..=YEARS)
        .map(|year| {
            (0..pool).map(|m| (format!("{department}{year}{m:03}"), table.classes()[class_dist.sample(&mut rng)])).collect()
        })
        .collect();

    let ability = Normal::new(0.0, ability_sd).expect("checked sd");
    let residual = Normal::new(0.0, (cfg.mark_sd.powi(2) - ability_sd.powi(2)).sqrt()).expect("checked sd");
    let split = Normal::new(0.0, 5.0).expect("constant sd");

    let mut out = Vec::with_capacity(cfg.students * cfg.modules_per_year * YEARS as usize);
    for s in 0..cfg.students {
        let regno = format!("{department}{s:05}");
        let program = format!("{department}P{}", rng.random_range(1..=3));
        let a = ability.sample(&mut rng);
        for year in 1..=YEARS {
            let modules = sample(&mut rng, pool, cfg.modules_per_year);
            for m in modules.iter() {
                let (code, (exw, cww)) = &catalogue[year as usize - 1][m];
                let method = match exw {
                    100 => AssessmentMethod::Exam,
                    0 => AssessmentMethod::Coursework,
                    _ => AssessmentMethod::Both,
                };
                let raw = cfg.mean_for(method) + a + residual.sample(&mut rng);
                if !(0.0..=100.0).contains(&raw) {
                    *clamped += 1;
                }
                let mm = round1(raw.clamp(0.0, 100.0));
                let (exam_mark, cswk_mark) = match method {
                    AssessmentMethod::Exam => (Some(mm), None),
                    AssessmentMethod::Coursework => (None, Some(mm)),
                    AssessmentMethod::Both => {
                        let e = round1((mm + split.sample(&mut rng)).clamp(0.0, 100.0));
                        let c = round1((100.0 * mm - f64::from(*exw) * e) / f64::from(*cww));
                        if (0.0..=100.0).contains(&c) {
                            (Some(e), Some(c))
                        } else {
                            (Some(mm), Some(mm))
                        }
                    }
                };
                out.push(TranscriptRecord {
                    regno: regno.clone(),
                    module_code: code.clone(),
                    program_code: program.clone(),
                    department,
                    module_mark: Some(mm),
                    exam_mark,
                    cswk_mark,
                    exam_weighting: Some(*exw),
                    cswk_weighting: Some(*cww),
                    assessment_method: Some(method),
                    year_of_study: year,
                });
            }
        }
    }
    Ok(out)
}

/// Generates transcripts for every configured department, in department
/// order. Output depends only on `config` (and the class tables).
pub fn generate(config: &SynthConfig, tables: &ClassTables) -> Result<(Vec<TranscriptRecord>, SynthReport)> {
    config.check()?;
    let mut report = SynthReport::default();
    let mut records = Vec::new();
    for (&dept, cfg) in &config.departments {
        let mut part = generate_department(dept, cfg, config.ability_sd, tables, config.seed, &mut report.clamped)?;
        part = plant_mai_signal(part, tables, config.mai_outcome_coupling);

        // blanking draws both uniforms for every record so the pattern does
        // not depend on the rates
        let mut rng = dept_rng(config.seed, dept, 2);
        for r in &mut part {
            let (u_method, u_mark): (f64, f64) = (rng.random(), rng.random());
            if u_method < config.missing_method_rate {
                r.assessment_method = None;
                report.methods_blanked += 1;
            }
            if u_mark < config.markless_rate {
                r.module_mark = None;
                report.markless_injected += 1;
            }
        }
        records.extend(part);
    }
    report.records = records.len();
    report.clamped_fraction = if records.is_empty() { 0.0 } else { report.clamped as f64 / records.len() as f64 };
    Ok((records, report))
}

/// Shifts every mark of a student in year 2 or later by
/// `coupling * (student's year-1 mean index - department mean of those)`,
/// clamped to [0, 100]. Coupling 0 returns the records unchanged.
pub fn plant_mai_signal(records: Vec<TranscriptRecord>, tables: &ClassTables, coupling: f64) -> Vec<TranscriptRecord> {
    if coupling == 0.0 {
        return records;
    }
    let mut per_student: BTreeMap<(Department, &str), (f64, usize)> = BTreeMap::new();
    for r in records.iter().filter(|r| r.year_of_study == 1) {
        let Some((e, c)) = r.weighting_pair() else { continue };
        let Ok(mai) = categorize(e, c, tables.get(r.department)) else { continue };
        let acc = per_student.entry((r.department, r.regno.as_str())).or_default();
        acc.0 += f64::from(mai);
        acc.1 += 1;
    }
    let mut dept_mean: BTreeMap<Department, (f64, usize)> = BTreeMap::new();
    for ((d, _), (sum, n)) in &per_student {
        let acc = dept_mean.entry(*d).or_default();
        acc.0 += sum / *n as f64;
        acc.1 += 1;
    }
    let shifts: BTreeMap<(Department, String), f64> = per_student
        .iter()
        .map(|((d, regno), (sum, n))| {
            let (total, count) = dept_mean[d];
            ((*d, regno.to_string()), coupling * (sum / *n as f64 - total / count as f64))
        })
        .collect();
    records
        .into_iter()
        .map(|mut r| {
            if r.year_of_study >= 2 {
                if let Some(&shift) = shifts.get(&(r.department, r.regno.clone())) {
                    let apply = |m: Option<f64>| m.map(|v| round1((v + shift).clamp(0.0, 100.0)));
                    r.module_mark = apply(r.module_mark);
                    r.exam_mark = apply(r.exam_mark);
                    r.cswk_mark = apply(r.cswk_mark);
                }
            }
            r
        })
        .collect()
}
