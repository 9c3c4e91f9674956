//! JSON documents for instances and solutions, and synthetic instance
//! generators.
//!
//! An instance document looks like
//!
//! ```json
//! {
//!   "locations": ["v1", "v2"],
//!   "components": ["e1", "e2"],
//!   "monitoring": {"v1": ["e1"], "v2": ["e1", "e2"]},
//!   "p": {"v1": 0.5, "v2": 0.9},
//!   "r_D": 1,
//!   "r_A": 1
//! }
//! ```
//!
//! with an optional free-form `geometry` object.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::colgen::{Certificates, EquilibriumResult};
use crate::error::{Error, Result, ValidationError};
use crate::game::{DetectorSet, InspectionInstance, MarginalAttackVector, MixedDefenderStrategy};

/// Identifier of the random stream written into generated metadata.
pub const RNG_ALGORITHM: &str = "ChaCha8Rng/rand_chacha-0.3/seed_from_u64";

const PLACEMENT_RETRIES: usize = 100;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    locations: Vec<String>,
    components: Vec<String>,
    monitoring: BTreeMap<String, Vec<String>>,
    p: BTreeMap<String, f64>,
    #[serde(rename = "r_D")]
    r_d: usize,
    #[serde(rename = "r_A")]
    r_a: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    geometry: Option<Value>,
}

fn schema(err: serde_json::Error) -> Error {
    ValidationError::Schema(err.to_string()).into()
}

fn index_of(names: &[String]) -> HashMap<&str, usize> {
    names.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect()
}

pub fn parse_instance(text: &str) -> Result<InspectionInstance> {
    let doc: InstanceDoc = serde_json::from_str(text).map_err(schema)?;
    let loc_index = index_of(&doc.locations);
    let comp_index = index_of(&doc.components);

    for name in doc.monitoring.keys().chain(doc.p.keys()) {
        if !loc_index.contains_key(name.as_str()) {
            return Err(ValidationError::UnknownLocationName(name.clone()).into());
        }
    }
    let mut monitoring = Vec::with_capacity(doc.locations.len());
    let mut detection = Vec::with_capacity(doc.locations.len());
    for loc in &doc.locations {
        let comps = doc.monitoring.get(loc).ok_or_else(|| ValidationError::MissingEntry {
            field: "monitoring",
            location: loc.clone(),
        })?;
        let ids = comps
            .iter()
            .map(|c| {
                comp_index
                    .get(c.as_str())
                    .copied()
                    .ok_or_else(|| Error::from(ValidationError::UnknownComponentName(c.clone())))
            })
            .collect::<Result<Vec<_>>>()?;
        monitoring.push(ids);
        detection.push(*doc.p.get(loc).ok_or_else(|| ValidationError::MissingEntry {
            field: "p",
            location: loc.clone(),
        })?);
    }
    let instance = InspectionInstance::new(doc.locations, doc.components, monitoring, detection, doc.r_d, doc.r_a)?;
    Ok(match doc.geometry {
        Some(g) => instance.with_metadata(g),
        None => instance,
    })
}

pub fn instance_to_json(instance: &InspectionInstance) -> String {
    let names = instance.component_names();
    let doc = InstanceDoc {
        locations: instance.location_names().to_vec(),
        components: names.to_vec(),
        monitoring: instance
            .location_names()
            .iter()
            .enumerate()
            .map(|(v, loc)| {
                let comps = instance.monitoring_set(v).iter().map(|&e| names[e].clone()).collect();
                (loc.clone(), comps)
            })
            .collect(),
        p: instance
            .location_names()
            .iter()
            .cloned()
            .zip(instance.detection_probs().iter().copied())
            .collect(),
        r_d: instance.r_d(),
        r_a: instance.r_a(),
        geometry: instance.metadata().cloned(),
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("instance documents always serialize");
    out.push('\n');
    out
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SupportAtom {
    set: Vec<String>,
    prob: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateDoc {
    attacker_best_response: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    defender_best_response: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    defender_bound_only: bool,
    /// `null` when the factor is unbounded.
    alpha: Option<f64>,
    epsilon: f64,
    guaranteed: bool,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Diagnostics {
    iterations: usize,
    columns: usize,
    wall_ms: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ResultDoc {
    value: f64,
    #[serde(rename = "sigma_D")]
    sigma_d: Vec<SupportAtom>,
    #[serde(rename = "rho_A")]
    rho_a: Vec<f64>,
    certificates: CertificateDoc,
    diagnostics: Diagnostics,
}

/// Result document; names come from `instance`. `wall_ms` is written as given,
/// so callers that want reproducible bytes clear it first.
pub fn serialize_result(result: &EquilibriumResult, instance: &InspectionInstance) -> String {
    let locs = instance.location_names();
    let c = &result.certificates;
    let doc = ResultDoc {
        value: result.value,
        sigma_d: result
            .sigma_d
            .support()
            .iter()
            .map(|(s, p)| SupportAtom {
                set: s.members().iter().map(|&v| locs[v].clone()).collect(),
                prob: *p,
            })
            .collect(),
        rho_a: result.rho_a.values().to_vec(),
        certificates: CertificateDoc {
            attacker_best_response: c.attacker_best_response,
            defender_best_response: c.defender_best_response,
            defender_bound_only: c.defender_bound_only,
            alpha: result.alpha_used.is_finite().then_some(result.alpha_used),
            epsilon: result.epsilon_used,
            guaranteed: c.guaranteed,
        },
        diagnostics: Diagnostics {
            iterations: result.iterations,
            columns: result.columns_generated,
            wall_ms: result.wall_ms,
        },
    };
    let mut out = serde_json::to_string_pretty(&doc).expect("result documents always serialize");
    out.push('\n');
    out
}

pub fn parse_result(text: &str, instance: &InspectionInstance) -> Result<EquilibriumResult> {
    let doc: ResultDoc = serde_json::from_str(text).map_err(schema)?;
    let loc_index = index_of(instance.location_names());
    let support = doc
        .sigma_d
        .into_iter()
        .map(|atom| {
            let ids = atom
                .set
                .iter()
                .map(|n| {
                    loc_index
                        .get(n.as_str())
                        .copied()
                        .ok_or_else(|| Error::from(ValidationError::UnknownLocationName(n.clone())))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((DetectorSet::new(ids), atom.prob))
        })
        .collect::<Result<Vec<_>>>()?;
    let sigma_d = MixedDefenderStrategy::new(support)?;
    for (s, _) in sigma_d.support() {
        instance.check_detector_set(s, true)?;
    }
    if doc.rho_a.len() != instance.m() {
        return Err(ValidationError::LengthMismatch {
            expected: instance.m(),
            actual: doc.rho_a.len(),
        }
        .into());
    }
    let rho_a = MarginalAttackVector::new(doc.rho_a, instance.r_a())?;
    let c = doc.certificates;
    Ok(EquilibriumResult {
        sigma_d,
        rho_a,
        value: doc.value,
        alpha_used: c.alpha.unwrap_or(f64::INFINITY),
        epsilon_used: c.epsilon,
        iterations: doc.diagnostics.iterations,
        columns_generated: doc.diagnostics.columns,
        certificates: Certificates {
            attacker_best_response: c.attacker_best_response,
            defender_best_response: c.defender_best_response,
            defender_bound_only: c.defender_bound_only,
            guaranteed: c.guaranteed,
        },
        wall_ms: doc.diagnostics.wall_ms,
    })
}

/// Reads a bare JSON array of numbers, or an object with a `values` or
/// `rho_A` array.
pub fn parse_vector(text: &str) -> Result<Vec<f64>> {
    let value: Value = serde_json::from_str(text).map_err(schema)?;
    let array = match &value {
        Value::Array(_) => &value,
        Value::Object(map) => map
            .get("values")
            .or_else(|| map.get("rho_A"))
            .ok_or_else(|| ValidationError::Schema("expected an array or an object with \"values\"".into()))?,
        _ => return Err(ValidationError::Schema("expected an array of numbers".into()).into()),
    };
    serde_json::from_value(array.clone()).map_err(schema)
}

/// Parameters of the geometric generator. Everything lives in the unit
/// square; components are straight segments and a location monitors every
/// segment meeting the disc of `radius` around it.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometricConfig {
    pub n: usize,
    pub m_target: usize,
    pub radius: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub r_a_fraction: f64,
    pub r_d: usize,
    pub seed: u64,
}

impl Default for GeometricConfig {
    fn default() -> Self {
        Self {
            n: 20,
            m_target: 60,
            radius: 0.15,
            p_low: 0.5,
            p_high: 1.0,
            r_a_fraction: 0.02,
            r_d: 1,
            seed: 0,
        }
    }
}

type Point = (f64, f64);

fn segment_distance(c: Point, a: Point, b: Point) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((c.0 - a.0) * dx + (c.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    let (px, py) = (a.0 + t * dx, a.1 + t * dy);
    ((c.0 - px).powi(2) + (c.1 - py).powi(2)).sqrt()
}

fn check_geometric(cfg: &GeometricConfig) -> Result<()> {
    let bad = |msg: String| Err(ValidationError::Config(msg).into());
    if cfg.n == 0 || cfg.m_target == 0 {
        return bad("n and m must be positive".into());
    }
    if !(cfg.radius > 0.0 && cfg.radius.is_finite()) {
        return bad(format!("radius must be positive, got {}", cfg.radius));
    }
    if !(cfg.p_low > 0.0 && cfg.p_low <= cfg.p_high && cfg.p_high <= 1.0) {
        return bad(format!("need 0 < p_low <= p_high <= 1, got [{}, {}]", cfg.p_low, cfg.p_high));
    }
    if !(cfg.r_a_fraction > 0.0 && cfg.r_a_fraction <= 1.0) {
        return bad(format!("r_A fraction must be in (0, 1], got {}", cfg.r_a_fraction));
    }
    if cfg.r_d == 0 || cfg.r_d > cfg.n {
        return Err(ValidationError::DefenderBudget { r_d: cfg.r_d, n: cfg.n }.into());
    }
    Ok(())
}

fn uniform_p(rng: &mut ChaCha8Rng, low: f64, high: f64) -> f64 {
    if low == high {
        low
    } else {
        rng.gen_range(low..=high)
    }
}

pub fn generate_geometric(cfg: &GeometricConfig) -> Result<InspectionInstance> {
    check_geometric(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let point = |rng: &mut ChaCha8Rng| -> Point { (rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)) };

    let mut locations: Vec<Point> = (0..cfg.n).map(|_| point(&mut rng)).collect();
    let scale = 1.0 / (cfg.m_target as f64).sqrt();
    let mut segments: Vec<(Point, Point)> = Vec::with_capacity(cfg.m_target);
    let mut discarded = 0usize;
    for _ in 0..cfg.m_target {
        let mut placed = false;
        for _ in 0..PLACEMENT_RETRIES {
            let a = point(&mut rng);
            let angle = rng.gen_range(0.0..std::f64::consts::TAU);
            let len = scale * rng.gen_range(0.5..1.5);
            let b = (
                (a.0 + len * angle.cos()).clamp(0.0, 1.0),
                (a.1 + len * angle.sin()).clamp(0.0, 1.0),
            );
            if locations.iter().any(|&c| segment_distance(c, a, b) <= cfg.radius) {
                segments.push((a, b));
                placed = true;
                break;
            }
        }
        if !placed {
            discarded += 1;
        }
    }
    if segments.is_empty() {
        return Err(Error::Generation("no component could be placed within reach of a location".into()));
    }

    let covers = |c: Point| -> Vec<usize> {
        segments
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| segment_distance(c, a, b) <= cfg.radius)
            .map(|(e, _)| e)
            .collect()
    };
    let mut monitoring = Vec::with_capacity(cfg.n);
    for (v, loc) in locations.iter_mut().enumerate() {
        let mut set = covers(*loc);
        let mut tries = 0;
        while set.is_empty() {
            if tries == PLACEMENT_RETRIES {
                return Err(Error::Generation(format!("location {} monitors nothing after retries", v + 1)));
            }
            *loc = point(&mut rng);
            set = covers(*loc);
            tries += 1;
        }
        monitoring.push(set);
    }
    let detection: Vec<f64> = (0..cfg.n).map(|_| uniform_p(&mut rng, cfg.p_low, cfg.p_high)).collect();

    let m = segments.len();
    let r_a = ((cfg.r_a_fraction * m as f64).ceil() as usize).clamp(1, m);
    let metadata = json!({
        "generator": "unit-square-segments",
        "rng": RNG_ALGORITHM,
        "seed": cfg.seed,
        "radius": cfg.radius,
        "discarded_components": discarded,
        "locations": locations.iter().map(|p| [p.0, p.1]).collect::<Vec<_>>(),
        "segments": segments.iter().map(|(a, b)| [a.0, a.1, b.0, b.1]).collect::<Vec<_>>(),
    });
    Ok(InspectionInstance::from_indices(m, monitoring, detection, cfg.r_d, r_a)?.with_metadata(metadata))
}

/// Parameters of the abstract set-system generator used for small test pools.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomSetsConfig {
    pub n: usize,
    pub m: usize,
    /// Probability that a location monitors a given component.
    pub density: f64,
    pub p_low: f64,
    pub p_high: f64,
    pub r_d: usize,
    pub r_a: usize,
    pub seed: u64,
}

/// Each location monitors each component independently with probability
/// `density`; empty monitoring sets and unmonitored components are then
/// patched with one uniformly chosen membership each.
pub fn generate_random_sets(cfg: &RandomSetsConfig) -> Result<InspectionInstance> {
    if !(cfg.p_low > 0.0 && cfg.p_low <= cfg.p_high && cfg.p_high <= 1.0) {
        return Err(ValidationError::Config(format!("need 0 < p_low <= p_high <= 1, got [{}, {}]", cfg.p_low, cfg.p_high)).into());
    }
    if !(0.0..=1.0).contains(&cfg.density) || cfg.n == 0 || cfg.m == 0 {
        return Err(ValidationError::Config("need n, m > 0 and density in [0, 1]".into()).into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut member = vec![vec![false; cfg.m]; cfg.n];
    for row in member.iter_mut() {
        for x in row.iter_mut() {
            *x = rng.gen_bool(cfg.density);
        }
    }
    for row in member.iter_mut() {
        if !row.contains(&true) {
            row[rng.gen_range(0..cfg.m)] = true;
        }
    }
    for e in 0..cfg.m {
        if !member.iter().any(|row| row[e]) {
            member[rng.gen_range(0..cfg.n)][e] = true;
        }
    }
    let monitoring = member
        .iter()
        .map(|row| row.iter().enumerate().filter(|(_, &b)| b).map(|(e, _)| e).collect())
        .collect();
    let detection = (0..cfg.n).map(|_| uniform_p(&mut rng, cfg.p_low, cfg.p_high)).collect();
    let metadata = json!({ "generator": "random-sets", "rng": RNG_ALGORITHM, "seed": cfg.seed });
    Ok(InspectionInstance::from_indices(cfg.m, monitoring, detection, cfg.r_d, cfg.r_a)?.with_metadata(metadata))
}
