use serde::{Deserialize, Serialize};

use crate::domain::{Item, Pool, TraitSchema};
use crate::error::Result;

use super::{from_json, to_json};

/// On-disk pool: the trait schema followed by item records whose `values`
/// list follows the schema's trait order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolFile {
    pub schema: TraitSchema,
    pub items: Vec<Item>,
}

impl PoolFile {
    pub fn into_pool(self) -> Result<Pool> {
        Pool::new(self.schema, self.items)
    }
}

impl From<&Pool> for PoolFile {
    fn from(pool: &Pool) -> Self {
        PoolFile {
            schema: pool.schema().clone(),
            items: pool.items().to_vec(),
        }
    }
}

pub fn parse_pool(text: &str) -> Result<Pool> {
    from_json::<PoolFile>(text)?.into_pool()
}

pub fn pool_to_json(pool: &Pool) -> String {
    to_json(&PoolFile::from(pool))
}
