//! Pairwise compatibility kernel and the graph synergy score.
//!
//! Synergy of a complete assignment is the mean kernel weight over the
//! formation's edges, so it lies in `[0, 1]` whatever the graph size. The
//! kernel is a weighted sum of per-trait weights: categorical traits use an
//! affinity table (1 for equal values, 0 otherwise, unless overridden) and
//! numeric traits decay as `1 / (1 + |x - y| / scale)`.
//!
//! Two routes compute the same numbers: [`WeightKernel`] works on item
//! records by name and serves as the reference; [`CompiledKernel`] works on
//! a pool's interned codes and drives the search. Both sum traits in schema
//! order and edges in graph order, so they agree bit for bit.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::constraints::PartialState;
use crate::domain::{FormationGraph, Item, Pool, TraitKind, TraitSchema, TraitValue, Violation};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum TraitRule {
    /// Symmetric affinity overrides keyed by the ordered value pair.
    Categorical { affinities: BTreeMap<(String, String), f64> },
    Numeric { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightKernel {
    weights: Vec<f64>,
    rules: Vec<TraitRule>,
}

/// Kernel section of a puzzle file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    /// Relative trait weights; traits left out weigh zero. Normalized to sum 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trait_weights: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub affinities: Vec<AffinitySpec>,
    /// Numeric scale overrides.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub scales: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffinitySpec {
    #[serde(rename = "trait")]
    pub trait_name: String,
    pub a: String,
    pub b: String,
    pub weight: f64,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

fn normalized(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 && total.is_finite() {
        raw.into_iter().map(|w| w / total).collect()
    } else {
        raw
    }
}

#[inline]
fn decay(x: f64, y: f64, scale: f64) -> f64 {
    1.0 / (1.0 + (x - y).abs() / scale)
}

impl WeightKernel {
    /// Equality affinities, the schema's scales, and trait weights
    /// proportional to each trait's `synergy_weight`.
    pub fn default_for(schema: &TraitSchema) -> Self {
        let rules = schema
            .traits
            .iter()
            .map(|t| match t.kind {
                TraitKind::Categorical => TraitRule::Categorical {
                    affinities: BTreeMap::new(),
                },
                TraitKind::Numeric => TraitRule::Numeric {
                    scale: t.numeric_scale(),
                },
            })
            .collect();
        let weights = normalized(schema.traits.iter().map(|t| t.synergy_weight).collect());
        WeightKernel { weights, rules }
    }

    pub fn from_spec(schema: &TraitSchema, spec: &KernelSpec) -> Result<Self> {
        let mut kernel = WeightKernel::default_for(schema);
        let col = |name: &str| {
            schema
                .position(name)
                .ok_or_else(|| Error::SchemaMismatch(format!("kernel references unknown trait `{name}`")))
        };
        if let Some(weights) = &spec.trait_weights {
            let mut raw = vec![0.0; schema.len()];
            for (name, w) in weights {
                raw[col(name)?] = *w;
            }
            kernel.weights = normalized(raw);
        }
        for (name, scale) in &spec.scales {
            match &mut kernel.rules[col(name)?] {
                TraitRule::Numeric { scale: s } => *s = *scale,
                TraitRule::Categorical { .. } => {
                    return Err(Error::SchemaMismatch(format!("scale given for categorical trait `{name}`")))
                }
            }
        }
        for aff in &spec.affinities {
            match &mut kernel.rules[col(&aff.trait_name)?] {
                TraitRule::Categorical { affinities } => {
                    affinities.insert(pair_key(&aff.a, &aff.b), aff.weight);
                }
                TraitRule::Numeric { .. } => {
                    return Err(Error::SchemaMismatch(format!(
                        "affinity given for numeric trait `{}`",
                        aff.trait_name
                    )))
                }
            }
        }
        Ok(kernel)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rules(&self) -> &[TraitRule] {
        &self.rules
    }

    pub fn violations(&self, schema: &TraitSchema) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.weights.len() != schema.len() || self.rules.len() != schema.len() {
            out.push(Violation::error("kernel", "kernel does not cover the schema's traits"));
            return out;
        }
        let total: f64 = self.weights.iter().sum();
        if self.weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
            out.push(Violation::error(
                "kernel.trait_weights",
                "trait weights must be non-negative with a positive total",
            ));
        }
        for (rule, def) in self.rules.iter().zip(&schema.traits) {
            match rule {
                TraitRule::Numeric { scale } if !(scale.is_finite() && *scale > 0.0) => {
                    out.push(Violation::error(
                        format!("kernel.scales.{}", def.name),
                        format!("scale {scale} must be positive"),
                    ));
                }
                TraitRule::Categorical { affinities } => {
                    for ((a, b), w) in affinities {
                        if !(0.0..=1.0).contains(w) {
                            out.push(Violation::error(
                                format!("kernel.affinities.{}", def.name),
                                format!("affinity ({a}, {b}) = {w} outside [0, 1]"),
                            ));
                        }
                    }
                }
                _ => {}
            }
        }
        out
    }

    fn trait_weight(&self, col: usize, a: &TraitValue, b: &TraitValue) -> Option<f64> {
        match (&self.rules[col], a, b) {
            (TraitRule::Categorical { affinities }, TraitValue::Categorical(x), TraitValue::Categorical(y)) => {
                let default = if x == y { 1.0 } else { 0.0 };
                Some(if affinities.is_empty() {
                    default
                } else {
                    affinities.get(&pair_key(x, y)).copied().unwrap_or(default)
                })
            }
            (TraitRule::Numeric { scale }, TraitValue::Numeric(x), TraitValue::Numeric(y)) => {
                Some(decay(*x as f64, *y as f64, *scale))
            }
            _ => None,
        }
    }

    /// Weighted sum of per-trait weights between two items, in `[0, 1]`.
    pub fn pair_weight(&self, a: &Item, b: &Item) -> Result<f64> {
        if a.values.len() != self.rules.len() || b.values.len() != self.rules.len() {
            return Err(Error::SchemaMismatch(format!(
                "items `{}` and `{}` do not match a {}-trait kernel",
                a.id,
                b.id,
                self.rules.len()
            )));
        }
        let mut acc = 0.0;
        for (col, w) in self.weights.iter().enumerate() {
            let tw = self
                .trait_weight(col, &a.values[col], &b.values[col])
                .ok_or_else(|| Error::SchemaMismatch(format!("trait {col} of `{}`/`{}` has the wrong kind", a.id, b.id)))?;
            acc += w * tw;
        }
        Ok(acc)
    }
}

/// Free-function form of [`WeightKernel::pair_weight`].
pub fn pair_weight(kernel: &WeightKernel, a: &Item, b: &Item) -> Result<f64> {
    kernel.pair_weight(a, b)
}

/// Mean pair weight over the formation's edges. An edgeless formation
/// scores 1.
pub fn solution_synergy(
    kernel: &WeightKernel,
    schema: &TraitSchema,
    items: &[&Item],
    graph: &FormationGraph,
) -> Result<f64> {
    if items.len() != graph.node_count() {
        return Err(Error::InvalidAssignment(format!(
            "{} items for {} nodes",
            items.len(),
            graph.node_count()
        )));
    }
    if kernel.rules.len() != schema.len() {
        return Err(Error::SchemaMismatch("kernel does not cover the schema".into()));
    }
    let edges = graph.edges();
    if edges.is_empty() {
        return Ok(1.0);
    }
    let mut total = 0.0;
    for &(u, v) in edges {
        total += kernel.pair_weight(items[u], items[v])?;
    }
    Ok(total / edges.len() as f64)
}

#[derive(Debug, Clone)]
enum CompiledRule {
    Table { card: usize, table: Vec<f64> },
    Equality,
    Decay { scale: f64 },
}

/// A [`WeightKernel`] bound to one pool's value codes.
#[derive(Debug, Clone)]
pub struct CompiledKernel {
    terms: Vec<(usize, f64, CompiledRule)>,
}

impl CompiledKernel {
    pub fn new(kernel: &WeightKernel, pool: &Pool) -> Self {
        let mut terms = Vec::new();
        for (col, (&w, rule)) in kernel.weights.iter().zip(&kernel.rules).enumerate() {
            if w == 0.0 {
                continue;
            }
            let compiled = match rule {
                TraitRule::Numeric { scale } => CompiledRule::Decay { scale: *scale },
                TraitRule::Categorical { affinities } if affinities.is_empty() => CompiledRule::Equality,
                TraitRule::Categorical { affinities } => {
                    let dict = pool.dictionary(col);
                    let card = dict.len();
                    let mut table = vec![0.0; card * card];
                    for (i, a) in dict.iter().enumerate() {
                        for (j, b) in dict.iter().enumerate() {
                            let default = if i == j { 1.0 } else { 0.0 };
                            table[i * card + j] = affinities.get(&pair_key(a, b)).copied().unwrap_or(default);
                        }
                    }
                    CompiledRule::Table { card, table }
                }
            };
            terms.push((col, w, compiled));
        }
        CompiledKernel { terms }
    }

    #[inline]
    pub fn pair(&self, pool: &Pool, a: usize, b: usize) -> f64 {
        let ra = pool.row(a);
        let rb = pool.row(b);
        let mut acc = 0.0;
        for (col, w, rule) in &self.terms {
            let (x, y) = (ra[*col], rb[*col]);
            let tw = match rule {
                CompiledRule::Equality => {
                    if x == y {
                        1.0
                    } else {
                        0.0
                    }
                }
                CompiledRule::Table { card, table } => table[x as usize * card + y as usize],
                CompiledRule::Decay { scale } => decay(x as f64, y as f64, *scale),
            };
            acc += w * tw;
        }
        acc
    }

    /// Synergy of a complete assignment given as pool positions per node.
    pub fn synergy(&self, pool: &Pool, graph: &FormationGraph, items: &[usize]) -> f64 {
        let edges = graph.edges();
        if edges.is_empty() {
            return 1.0;
        }
        let mut total = 0.0;
        for &(u, v) in edges {
            total += self.pair(pool, items[u], items[v]);
        }
        total / edges.len() as f64
    }
}

/// Sum of pair weights between `candidate` and the already-visited
/// neighbours of `node`; zero when none is visited.
pub fn neighbor_score(
    kernel: &CompiledKernel,
    pool: &Pool,
    candidate: usize,
    node: usize,
    partial: &PartialState,
    graph: &FormationGraph,
) -> f64 {
    let mut score = 0.0;
    for &nb in graph.neighbors(node) {
        if let Some(item) = partial.item_at(nb) {
            score += kernel.pair(pool, candidate, item);
        }
    }
    score
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::TraitDef;

    fn cat_schema(n: usize) -> TraitSchema {
        TraitSchema::new((0..n).map(|i| TraitDef::categorical(format!("c{i}"))).collect())
    }

    fn cat_item(id: &str, vals: &[&str]) -> Item {
        Item::new(id, vals.iter().map(|v| TraitValue::from(*v)).collect(), 1.0)
    }

    #[test]
    fn identical_items_weigh_one() {
        let schema = TraitSchema::new(vec![TraitDef::categorical("race"), TraitDef::numeric("level", 3.0)]);
        let k = WeightKernel::default_for(&schema);
        let a = Item::new("a", vec!["elf".into(), 7.into()], 1.0);
        assert_eq!(k.pair_weight(&a, &a.clone()).unwrap(), 1.0);
    }

    #[test]
    fn full_disagreement_weighs_zero() {
        let k = WeightKernel::default_for(&cat_schema(3));
        let a = cat_item("a", &["x", "y", "z"]);
        let b = cat_item("b", &["p", "q", "r"]);
        assert_eq!(k.pair_weight(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn half_agreement() {
        let k = WeightKernel::default_for(&cat_schema(4));
        let a = cat_item("a", &["x", "y", "z", "w"]);
        let b = cat_item("b", &["x", "y", "q", "r"]);
        // Two of four equally weighted traits agree: 2 * 0.25 + 2 * 0.
        assert_eq!(k.pair_weight(&a, &b).unwrap(), 0.5);
    }

    #[test]
    fn schema_mismatch_detected() {
        let k = WeightKernel::default_for(&cat_schema(2));
        let a = cat_item("a", &["x"]);
        assert!(matches!(k.pair_weight(&a, &a), Err(Error::SchemaMismatch(_))));
        let schema = TraitSchema::new(vec![TraitDef::numeric("n", 1.0)]);
        let k = WeightKernel::default_for(&schema);
        let b = cat_item("b", &["x"]);
        assert!(k.pair_weight(&b, &b).is_err());
    }

    #[test]
    fn numeric_decay_and_symmetry() {
        let schema = TraitSchema::new(vec![TraitDef::numeric("level", 2.0)]);
        let k = WeightKernel::default_for(&schema);
        let a = Item::new("a", vec![3.into()], 0.0);
        let b = Item::new("b", vec![7.into()], 0.0);
        // 1 / (1 + 4 / 2)
        assert!((k.pair_weight(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(k.pair_weight(&a, &b).unwrap(), k.pair_weight(&b, &a).unwrap());
    }

    #[test]
    fn overrides_apply_symmetrically() {
        let schema = TraitSchema::new(vec![TraitDef::categorical("race"), TraitDef::numeric("level", 2.0)]);
        let spec = KernelSpec {
            trait_weights: Some([("race".to_string(), 3.0), ("level".to_string(), 1.0)].into()),
            affinities: vec![AffinitySpec {
                trait_name: "race".into(),
                a: "orc".into(),
                b: "elf".into(),
                weight: 0.4,
            }],
            scales: [("level".to_string(), 5.0)].into(),
        };
        let k = WeightKernel::from_spec(&schema, &spec).unwrap();
        assert_eq!(k.weights(), &[0.75, 0.25]);
        let a = Item::new("a", vec!["elf".into(), 5.into()], 0.0);
        let b = Item::new("b", vec!["orc".into(), 5.into()], 0.0);
        let w = k.pair_weight(&a, &b).unwrap();
        assert!((w - (0.75 * 0.4 + 0.25)).abs() < 1e-15);
        assert_eq!(w, k.pair_weight(&b, &a).unwrap());
        assert!(k.violations(&schema).is_empty());

        let bad = KernelSpec {
            scales: [("race".to_string(), 5.0)].into(),
            ..KernelSpec::default()
        };
        assert!(WeightKernel::from_spec(&schema, &bad).is_err());
        let unknown = KernelSpec {
            trait_weights: Some([("nation".to_string(), 1.0)].into()),
            ..KernelSpec::default()
        };
        assert!(WeightKernel::from_spec(&schema, &unknown).is_err());
    }

    #[test]
    fn synergy_extremes() {
        let schema = cat_schema(2);
        let k = WeightKernel::default_for(&schema);
        let g = FormationGraph::cycle(4);
        let same: Vec<Item> = (0..4).map(|i| cat_item(&format!("s{i}"), &["x", "y"])).collect();
        let refs: Vec<&Item> = same.iter().collect();
        assert_eq!(solution_synergy(&k, &schema, &refs, &g).unwrap(), 1.0);
        let diff: Vec<Item> = (0..4)
            .map(|i| cat_item(&format!("d{i}"), &[&format!("x{i}"), &format!("y{i}")]))
            .collect();
        let refs: Vec<&Item> = diff.iter().collect();
        assert_eq!(solution_synergy(&k, &schema, &refs, &g).unwrap(), 0.0);
    }

    #[test]
    fn arrangement_changes_synergy() {
        // Seven goblins and three elves on a 2x5 grid: clustering the elves
        // together scores strictly higher than scattering them.
        let schema = cat_schema(1);
        let k = WeightKernel::default_for(&schema);
        let g = FormationGraph::grid(2, 5);
        let items: Vec<Item> = (0..10)
            .map(|i| cat_item(&format!("h{i}"), &[if i < 7 { "goblin" } else { "elf" }]))
            .collect();
        // nodes 0..5 front row, 5..10 back row
        let scattered = [7, 0, 8, 1, 9, 2, 3, 4, 5, 6];
        let clustered = [0, 1, 2, 7, 8, 3, 4, 5, 6, 9];
        let score = |order: &[usize]| {
            let refs: Vec<&Item> = order.iter().map(|&i| &items[i]).collect();
            solution_synergy(&k, &schema, &refs, &g).unwrap()
        };
        assert!(score(&clustered) > score(&scattered));
    }

    #[test]
    fn compiled_matches_reference_bitwise() {
        let schema = TraitSchema::new(vec![
            TraitDef::categorical("race"),
            TraitDef::categorical("nation").with_synergy_weight(0.0),
            TraitDef::numeric("level", 3.0).with_synergy_weight(2.0),
        ]);
        let spec = KernelSpec {
            affinities: vec![AffinitySpec {
                trait_name: "race".into(),
                a: "elf".into(),
                b: "orc".into(),
                weight: 0.3,
            }],
            ..KernelSpec::default()
        };
        let items: Vec<Item> = (0..12)
            .map(|i| {
                let race = ["elf", "orc", "human"][i % 3];
                Item::new(format!("h{i}"), vec![race.into(), format!("n{}", i % 2).as_str().into(), (((i * 7) % 11) as u32).into()], 1.0)
            })
            .collect();
        let pool = Pool::new(schema.clone(), items).unwrap();
        for k in [WeightKernel::default_for(&schema), WeightKernel::from_spec(&schema, &spec).unwrap()] {
            let ck = CompiledKernel::new(&k, &pool);
            for a in 0..pool.len() {
                for b in 0..pool.len() {
                    assert_eq!(ck.pair(&pool, a, b), k.pair_weight(pool.item(a), pool.item(b)).unwrap());
                }
            }
        }
    }
}
