//! Seeded synthetic pools.
//!
//! Items are drawn one after another from a single xoshiro256** stream
//! seeded with the caller's seed: each categorical trait in declaration
//! order (uniform over its values), then the level (uniform over the
//! inclusive range), then one standard normal for the price. Prices are
//! log-normal and grow with level, rounded to cents.

use serde::{Deserialize, Serialize};

use crate::domain::{Item, Pool, TraitDef, TraitSchema, TraitValue, MAX_TRAITS};
use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CategoricalSpec {
    pub name: String,
    pub values: Vec<String>,
    pub synergy_weight: f64,
}

impl CategoricalSpec {
    fn new(name: &str, values: &[&str], synergy_weight: f64) -> Self {
        CategoricalSpec {
            name: name.into(),
            values: values.iter().map(|v| v.to_string()).collect(),
            synergy_weight,
        }
    }

    fn numbered(name: &str, prefix: &str, count: usize, synergy_weight: f64) -> Self {
        CategoricalSpec {
            name: name.into(),
            values: (1..=count).map(|i| format!("{prefix}{i}")).collect(),
            synergy_weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelSpec {
    pub name: String,
    pub min: u32,
    pub max: u32,
    pub scale: f64,
    pub synergy_weight: f64,
}

/// `price = base · exp(per_level · (level − min) + sigma · z)`, z standard normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceModel {
    pub base: f64,
    pub per_level: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub size: usize,
    pub id_prefix: String,
    pub categorical: Vec<CategoricalSpec>,
    pub level: LevelSpec,
    pub price: PriceModel,
}

impl PoolSpec {
    /// Race, nation, religion, hometown and level. Religion and hometown
    /// take no part in synergy, so distinctness requirements on them do not
    /// fight the synergy threshold.
    pub fn with_size(size: usize) -> Self {
        PoolSpec {
            size,
            id_prefix: "h".into(),
            categorical: vec![
                CategoricalSpec::new("race", &["goblin", "elf", "human", "orc"], 0.5),
                CategoricalSpec::new("nation", &["north", "south", "east"], 0.2),
                CategoricalSpec::numbered("religion", "faith-", 10, 0.0),
                CategoricalSpec::numbered("hometown", "town-", 8, 0.0),
            ],
            level: LevelSpec {
                name: "level".into(),
                min: 1,
                max: 15,
                scale: 8.0,
                synergy_weight: 0.3,
            },
            price: PriceModel {
                base: 5.0,
                per_level: 0.18,
                sigma: 0.35,
            },
        }
    }

    pub fn schema(&self) -> TraitSchema {
        let mut traits: Vec<TraitDef> = self
            .categorical
            .iter()
            .map(|c| TraitDef::categorical(&c.name).with_synergy_weight(c.synergy_weight))
            .collect();
        traits.push(TraitDef::numeric(&self.level.name, self.level.scale).with_synergy_weight(self.level.synergy_weight));
        TraitSchema::new(traits)
    }

    fn check(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidSpec(m));
        if self.size == 0 {
            return bad("pool size must be at least 1".into());
        }
        if self.categorical.len() + 1 > MAX_TRAITS {
            return bad(format!("at most {MAX_TRAITS} traits"));
        }
        for c in &self.categorical {
            if c.values.is_empty() {
                return bad(format!("trait `{}` has no values", c.name));
            }
        }
        if self.level.min > self.level.max {
            return bad(format!("level range {}..={} is empty", self.level.min, self.level.max));
        }
        let p = &self.price;
        if !(p.base.is_finite() && p.base > 0.0 && p.per_level.is_finite() && p.sigma.is_finite() && p.sigma >= 0.0) {
            return bad("price model needs a positive base and finite non-negative spread".into());
        }
        if let Some(v) = self.schema().violations().into_iter().next() {
            return bad(format!("{}: {}", v.field, v.message));
        }
        Ok(())
    }
}

impl Default for PoolSpec {
    fn default() -> Self {
        PoolSpec::with_size(500)
    }
}

fn id_width(size: usize) -> usize {
    (size.saturating_sub(1)).to_string().len().max(4)
}

pub fn generate_pool(spec: &PoolSpec, seed: u64) -> Result<Pool> {
    spec.check()?;
    let mut rng = Rng::new(seed);
    let width = id_width(spec.size);
    let span = (spec.level.max - spec.level.min) as u64 + 1;
    let items = (0..spec.size)
        .map(|i| {
            let mut values: Vec<TraitValue> = spec
                .categorical
                .iter()
                .map(|c| c.values[rng.index(c.values.len())].as_str().into())
                .collect();
            let level = spec.level.min + rng.below(span) as u32;
            values.push(level.into());
            let z = rng.normal();
            let raw = spec.price.base * (spec.price.per_level * (level - spec.level.min) as f64 + spec.price.sigma * z).exp();
            let price = ((raw * 100.0).round() / 100.0).max(0.01);
            Item::new(format!("{}{i:0width$}", spec.id_prefix), values, price)
        })
        .collect();
    Pool::new(spec.schema(), items).map_err(|e| Error::InvalidSpec(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::persistence::{parse_pool, pool_to_json};

    #[test]
    fn empty_request_is_rejected() {
        assert!(matches!(generate_pool(&PoolSpec::with_size(0), 1), Err(Error::InvalidSpec(_))));
        let mut spec = PoolSpec::with_size(3);
        spec.level.min = 9;
        spec.level.max = 2;
        assert!(matches!(generate_pool(&spec, 1), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn deterministic_and_round_trips() {
        let a = pool_to_json(&generate_pool(&PoolSpec::default(), 42).unwrap());
        let b = pool_to_json(&generate_pool(&PoolSpec::default(), 42).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, pool_to_json(&generate_pool(&PoolSpec::default(), 43).unwrap()));
        let pool = parse_pool(&a).unwrap();
        assert_eq!(pool.len(), 500);
        assert_eq!(pool.item(0).id, "h0000");
        assert_eq!(pool.item(499).id, "h0499");
    }

    #[test]
    fn prices_track_level() {
        let pool = generate_pool(&PoolSpec::with_size(2000), 3).unwrap();
        let col = pool.schema().position("level").unwrap();
        let mean_price = |lo: u32, hi: u32| {
            let prices: Vec<f64> = (0..pool.len())
                .filter(|&i| (lo..=hi).contains(&pool.code(i, col)))
                .map(|i| pool.price(i))
                .collect();
            prices.iter().sum::<f64>() / prices.len() as f64
        };
        assert!(mean_price(11, 15) > 2.0 * mean_price(1, 5));
        assert!((0..pool.len()).all(|i| pool.price(i) >= 0.01));
    }
}
