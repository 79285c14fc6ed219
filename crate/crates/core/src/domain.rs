//! Core data model: trait schema, items and pools, the formation graph,
//! requirements, puzzles and solutions, plus puzzle validation and the
//! reference feasibility evaluation.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::synergy::{self, WeightKernel};

/// Upper bound on traits per item.
pub const MAX_TRAITS: usize = 8;

/// Linear requirement count above which validation warns.
pub const SOFT_LINEAR_LIMIT: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitKind {
    Categorical,
    Numeric,
}

fn default_synergy_weight() -> f64 {
    1.0
}

fn is_default_weight(w: &f64) -> bool {
    *w == 1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraitDef {
    pub name: String,
    pub kind: TraitKind,
    /// Distance scale of the numeric decay kernel; ignored for categorical traits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scale: Option<f64>,
    /// Relative contribution to synergy under the default kernel.
    #[serde(
        default = "default_synergy_weight",
        skip_serializing_if = "is_default_weight"
    )]
    pub synergy_weight: f64,
}

impl TraitDef {
    pub fn categorical(name: impl Into<String>) -> Self {
        TraitDef {
            name: name.into(),
            kind: TraitKind::Categorical,
            scale: None,
            synergy_weight: 1.0,
        }
    }

    pub fn numeric(name: impl Into<String>, scale: f64) -> Self {
        TraitDef {
            name: name.into(),
            kind: TraitKind::Numeric,
            scale: Some(scale),
            synergy_weight: 1.0,
        }
    }

    pub fn with_synergy_weight(mut self, weight: f64) -> Self {
        self.synergy_weight = weight;
        self
    }

    pub fn numeric_scale(&self) -> f64 {
        self.scale.unwrap_or(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraitSchema {
    pub traits: Vec<TraitDef>,
}

impl TraitSchema {
    pub fn new(traits: Vec<TraitDef>) -> Self {
        TraitSchema { traits }
    }

    pub fn len(&self) -> usize {
        self.traits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.traits.is_empty()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.traits.iter().position(|t| t.name == name)
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.traits.is_empty() || self.traits.len() > MAX_TRAITS {
            out.push(Violation::error(
                "schema.traits",
                format!("schema must define 1..={MAX_TRAITS} traits, found {}", self.traits.len()),
            ));
        }
        let mut seen = HashSet::new();
        for (i, t) in self.traits.iter().enumerate() {
            if !seen.insert(t.name.as_str()) {
                out.push(Violation::error(
                    format!("schema.traits[{i}].name"),
                    format!("duplicate trait name `{}`", t.name),
                ));
            }
            if t.kind == TraitKind::Numeric {
                match t.scale {
                    Some(s) if s.is_finite() && s > 0.0 => {}
                    _ => out.push(Violation::error(
                        format!("schema.traits[{i}].scale"),
                        format!("numeric trait `{}` needs a positive finite scale", t.name),
                    )),
                }
            }
            if !(t.synergy_weight.is_finite() && t.synergy_weight >= 0.0) {
                out.push(Violation::error(
                    format!("schema.traits[{i}].synergy_weight"),
                    format!("synergy weight of `{}` must be finite and non-negative", t.name),
                ));
            }
        }
        out
    }
}

/// A trait value: a categorical symbol or a non-negative integer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TraitValue {
    Numeric(u32),
    Categorical(String),
}

impl TraitValue {
    pub fn kind(&self) -> TraitKind {
        match self {
            TraitValue::Numeric(_) => TraitKind::Numeric,
            TraitValue::Categorical(_) => TraitKind::Categorical,
        }
    }

    pub fn as_number(&self) -> Option<f64> {
        match self {
            TraitValue::Numeric(v) => Some(*v as f64),
            TraitValue::Categorical(_) => None,
        }
    }
}

impl fmt::Display for TraitValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraitValue::Numeric(v) => write!(f, "{v}"),
            TraitValue::Categorical(s) => f.write_str(s),
        }
    }
}

impl From<&str> for TraitValue {
    fn from(s: &str) -> Self {
        TraitValue::Categorical(s.to_string())
    }
}

impl From<u32> for TraitValue {
    fn from(v: u32) -> Self {
        TraitValue::Numeric(v)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: String,
    pub values: Vec<TraitValue>,
    pub price: f64,
}

impl Item {
    pub fn new(id: impl Into<String>, values: Vec<TraitValue>, price: f64) -> Self {
        Item {
            id: id.into(),
            values,
            price,
        }
    }
}

/// Items indexed by id, with categorical values interned per trait so the
/// search loops work on integer codes.
#[derive(Debug, Clone)]
pub struct Pool {
    schema: TraitSchema,
    items: Vec<Item>,
    index: HashMap<String, usize>,
    /// Row-major `items × traits`; categorical values map to dictionary
    /// positions, numeric values are stored as-is.
    codes: Vec<u32>,
    dictionaries: Vec<Vec<String>>,
    lookups: Vec<HashMap<String, u32>>,
    /// One past the largest code per trait.
    code_bounds: Vec<u32>,
}

impl PartialEq for Pool {
    fn eq(&self, other: &Self) -> bool {
        self.schema == other.schema && self.items == other.items
    }
}

impl Pool {
    pub fn new(schema: TraitSchema, items: Vec<Item>) -> Result<Self> {
        if let Some(v) = schema.violations().into_iter().next() {
            return Err(Error::SchemaMismatch(format!("{}: {}", v.field, v.message)));
        }
        let width = schema.len();
        let mut index = HashMap::with_capacity(items.len());
        let mut codes = Vec::with_capacity(items.len() * width);
        let mut dictionaries = vec![Vec::new(); width];
        let mut lookups: Vec<HashMap<String, u32>> = vec![HashMap::new(); width];
        for (i, item) in items.iter().enumerate() {
            if index.insert(item.id.clone(), i).is_some() {
                return Err(Error::SchemaMismatch(format!(
                    "items[{i}]: duplicate item id `{}`",
                    item.id
                )));
            }
            if !(item.price.is_finite() && item.price >= 0.0) {
                return Err(Error::SchemaMismatch(format!(
                    "items[{i}] (`{}`): price must be finite and non-negative",
                    item.id
                )));
            }
            if item.values.len() != width {
                return Err(Error::SchemaMismatch(format!(
                    "items[{i}] (`{}`): {} values for {} traits",
                    item.id,
                    item.values.len(),
                    width
                )));
            }
            for (col, (value, def)) in item.values.iter().zip(&schema.traits).enumerate() {
                match (value, def.kind) {
                    (TraitValue::Numeric(v), TraitKind::Numeric) => codes.push(*v),
                    (TraitValue::Categorical(s), TraitKind::Categorical) => {
                        let next = dictionaries[col].len() as u32;
                        let code = *lookups[col].entry(s.clone()).or_insert_with(|| {
                            dictionaries[col].push(s.clone());
                            next
                        });
                        codes.push(code);
                    }
                    _ => {
                        return Err(Error::SchemaMismatch(format!(
                            "items[{i}] (`{}`): value `{value}` does not fit {:?} trait `{}`",
                            item.id, def.kind, def.name
                        )))
                    }
                }
            }
        }
        let mut code_bounds = vec![0u32; width];
        for row in codes.chunks(width.max(1)) {
            for (bound, &c) in code_bounds.iter_mut().zip(row) {
                *bound = (*bound).max(c.saturating_add(1));
            }
        }
        Ok(Pool {
            schema,
            items,
            index,
            codes,
            dictionaries,
            lookups,
            code_bounds,
        })
    }

    pub fn schema(&self) -> &TraitSchema {
        &self.schema
    }

    pub fn items(&self) -> &[Item] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn item(&self, idx: usize) -> &Item {
        &self.items[idx]
    }

    pub fn price(&self, idx: usize) -> f64 {
        self.items[idx].price
    }

    pub fn lookup(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Resolves item ids to pool positions.
    pub fn resolve<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter()
            .map(|id| {
                self.lookup(id.as_ref())
                    .ok_or_else(|| Error::UnknownItemId(id.as_ref().to_string()))
            })
            .collect()
    }

    #[inline]
    /// Every code in column `col` is below this.
    pub fn code_bound(&self, col: usize) -> u32 {
        self.code_bounds[col]
    }

    pub fn code(&self, item: usize, col: usize) -> u32 {
        self.codes[item * self.schema.len() + col]
    }

    #[inline]
    pub fn row(&self, item: usize) -> &[u32] {
        let w = self.schema.len();
        &self.codes[item * w..(item + 1) * w]
    }

    /// Code of `value` in column `col`, or `None` if no item carries it.
    pub fn value_code(&self, col: usize, value: &TraitValue) -> Option<u32> {
        match value {
            TraitValue::Numeric(v) => Some(*v),
            TraitValue::Categorical(s) => self.lookups[col].get(s).copied(),
        }
    }

    /// Distinct categorical values seen in column `col`, in first-seen order.
    pub fn dictionary(&self, col: usize) -> &[String] {
        &self.dictionaries[col]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "GraphRepr", into = "GraphRepr")]
pub struct FormationGraph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct GraphRepr {
    nodes: usize,
    edges: Vec<(usize, usize)>,
}

impl From<GraphRepr> for FormationGraph {
    fn from(r: GraphRepr) -> Self {
        FormationGraph::new(r.nodes, r.edges)
    }
}

impl From<FormationGraph> for GraphRepr {
    fn from(g: FormationGraph) -> Self {
        GraphRepr {
            nodes: g.node_count,
            edges: g.edges,
        }
    }
}

impl FormationGraph {
    /// Builds the graph as given; malformed edges are kept for
    /// [`validate_puzzle`] to report and left out of the adjacency lists.
    pub fn new(node_count: usize, edges: Vec<(usize, usize)>) -> Self {
        let mut adjacency = vec![Vec::new(); node_count];
        for &(u, v) in &edges {
            if u != v && u < node_count && v < node_count {
                adjacency[u].push(v);
                adjacency[v].push(u);
            }
        }
        FormationGraph {
            node_count,
            edges,
            adjacency,
        }
    }

    pub fn path(n: usize) -> Self {
        FormationGraph::new(n, (1..n).map(|i| (i - 1, i)).collect())
    }

    pub fn cycle(n: usize) -> Self {
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        if n > 2 {
            edges.push((0, n - 1));
        }
        FormationGraph::new(n, edges)
    }

    pub fn complete(n: usize) -> Self {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v));
            }
        }
        FormationGraph::new(n, edges)
    }

    /// `rows × cols` grid with 4-neighbour edges.
    pub fn grid(rows: usize, cols: usize) -> Self {
        let mut edges = Vec::new();
        for r in 0..rows {
            for c in 0..cols {
                let n = r * cols + c;
                if c + 1 < cols {
                    edges.push((n, n + 1));
                }
                if r + 1 < rows {
                    edges.push((n, n + cols));
                }
            }
        }
        FormationGraph::new(rows * cols, edges)
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.adjacency[node]
    }

    pub fn is_connected(&self) -> bool {
        if self.node_count == 0 {
            return false;
        }
        let mut seen = vec![false; self.node_count];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &v in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == self.node_count
    }

    pub fn violations(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.node_count == 0 {
            out.push(Violation::error("graph.nodes", "formation needs at least one node"));
            return out;
        }
        let mut seen = HashSet::new();
        let mut well_formed = true;
        for (i, &(u, v)) in self.edges.iter().enumerate() {
            if u == v {
                well_formed = false;
                out.push(Violation::error(format!("graph.edges[{i}]"), format!("self-loop on node {u}")));
            } else if u >= self.node_count || v >= self.node_count {
                well_formed = false;
                out.push(Violation::error(
                    format!("graph.edges[{i}]"),
                    format!("edge ({u}, {v}) outside [0, {})", self.node_count),
                ));
            } else if !seen.insert((u.min(v), u.max(v))) {
                out.push(Violation::error(format!("graph.edges[{i}]"), format!("duplicate edge ({u}, {v})")));
            }
        }
        if well_formed && !self.is_connected() {
            out.push(Violation::error("graph", "formation graph is not connected"));
        }
        out
    }
}

/// One puzzle requirement. Linear variants depend only on which items are
/// selected; `SynergyAtLeast` depends on the arrangement as well.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Requirement {
    MinSum {
        #[serde(rename = "trait")]
        trait_name: String,
        bound: f64,
    },
    MinCount {
        #[serde(rename = "trait")]
        trait_name: String,
        value: TraitValue,
        bound: u32,
    },
    MaxCount {
        #[serde(rename = "trait")]
        trait_name: String,
        value: TraitValue,
        bound: u32,
    },
    MinDistinct {
        #[serde(rename = "trait")]
        trait_name: String,
        bound: u32,
    },
    MaxPerValue {
        #[serde(rename = "trait")]
        trait_name: String,
        cap: u32,
    },
    SynergyAtLeast {
        threshold: f64,
    },
}

impl Requirement {
    pub fn min_sum(t: &str, bound: f64) -> Self {
        Requirement::MinSum {
            trait_name: t.into(),
            bound,
        }
    }

    pub fn min_count(t: &str, value: impl Into<TraitValue>, bound: u32) -> Self {
        Requirement::MinCount {
            trait_name: t.into(),
            value: value.into(),
            bound,
        }
    }

    pub fn max_count(t: &str, value: impl Into<TraitValue>, bound: u32) -> Self {
        Requirement::MaxCount {
            trait_name: t.into(),
            value: value.into(),
            bound,
        }
    }

    pub fn min_distinct(t: &str, bound: u32) -> Self {
        Requirement::MinDistinct {
            trait_name: t.into(),
            bound,
        }
    }

    pub fn max_per_value(t: &str, cap: u32) -> Self {
        Requirement::MaxPerValue {
            trait_name: t.into(),
            cap,
        }
    }

    pub fn synergy(threshold: f64) -> Self {
        Requirement::SynergyAtLeast { threshold }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, Requirement::SynergyAtLeast { .. })
    }

    pub fn trait_name(&self) -> Option<&str> {
        match self {
            Requirement::MinSum { trait_name, .. }
            | Requirement::MinCount { trait_name, .. }
            | Requirement::MaxCount { trait_name, .. }
            | Requirement::MinDistinct { trait_name, .. }
            | Requirement::MaxPerValue { trait_name, .. } => Some(trait_name),
            Requirement::SynergyAtLeast { .. } => None,
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Requirement::MinSum { trait_name, bound } => write!(f, "sum({trait_name}) >= {bound}"),
            Requirement::MinCount { trait_name, value, bound } => {
                write!(f, "count({trait_name} = {value}) >= {bound}")
            }
            Requirement::MaxCount { trait_name, value, bound } => {
                write!(f, "count({trait_name} = {value}) <= {bound}")
            }
            Requirement::MinDistinct { trait_name, bound } => write!(f, "distinct({trait_name}) >= {bound}"),
            Requirement::MaxPerValue { trait_name, cap } => write!(f, "per-value({trait_name}) <= {cap}"),
            Requirement::SynergyAtLeast { threshold } => write!(f, "synergy >= {threshold}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Puzzle {
    pub name: String,
    pub schema: TraitSchema,
    pub graph: FormationGraph,
    pub requirements: Vec<Requirement>,
    pub kernel: WeightKernel,
}

impl Puzzle {
    /// A puzzle scored with the schema's default kernel.
    pub fn new(
        name: impl Into<String>,
        schema: TraitSchema,
        graph: FormationGraph,
        requirements: Vec<Requirement>,
    ) -> Self {
        let kernel = WeightKernel::default_for(&schema);
        Puzzle {
            name: name.into(),
            schema,
            graph,
            requirements,
            kernel,
        }
    }

    pub fn node_count(&self) -> usize {
        self.graph.node_count()
    }

    pub fn synergy_threshold(&self) -> Option<f64> {
        self.requirements.iter().find_map(|r| match r {
            Requirement::SynergyAtLeast { threshold } => Some(*threshold),
            _ => None,
        })
    }

    pub fn linear_requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.requirements.iter().filter(|r| r.is_linear())
    }

    /// The same puzzle with its synergy requirement dropped.
    pub fn linear_only(&self) -> Puzzle {
        Puzzle {
            requirements: self.linear_requirements().cloned().collect(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub field: String,
    pub message: String,
    pub severity: Severity,
}

impl Violation {
    pub fn error(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
            severity: Severity::Error,
        }
    }

    pub fn warning(field: impl Into<String>, message: impl Into<String>) -> Self {
        Violation {
            field: field.into(),
            message: message.into(),
            severity: Severity::Warning,
        }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

/// Lists every broken invariant of `puzzle`. Too many linear requirements is
/// reported as a warning; everything else is an error.
pub fn validate_puzzle(puzzle: &Puzzle) -> Vec<Violation> {
    let mut out = puzzle.schema.violations();
    out.extend(puzzle.graph.violations());
    let n = puzzle.graph.node_count() as u32;
    let mut synergy_seen = 0;
    for (i, req) in puzzle.requirements.iter().enumerate() {
        let field = format!("requirements[{i}]");
        if let Some(name) = req.trait_name() {
            let Some(col) = puzzle.schema.position(name) else {
                out.push(Violation::error(&field, format!("unknown trait `{name}`")));
                continue;
            };
            let kind = puzzle.schema.traits[col].kind;
            match req {
                Requirement::MinSum { bound, .. } => {
                    if kind != TraitKind::Numeric {
                        out.push(Violation::error(&field, format!("min_sum needs a numeric trait, `{name}` is categorical")));
                    }
                    if !(bound.is_finite() && *bound >= 0.0) {
                        out.push(Violation::error(&field, format!("bound {bound} must be finite and non-negative")));
                    }
                }
                Requirement::MinCount { value, bound, .. } | Requirement::MaxCount { value, bound, .. } => {
                    if value.kind() != kind {
                        out.push(Violation::error(&field, format!("value `{value}` does not fit {kind:?} trait `{name}`")));
                    }
                    if *bound > n {
                        out.push(Violation::error(&field, format!("bound {bound} exceeds node count {n}")));
                    }
                }
                Requirement::MinDistinct { bound, .. } => {
                    if *bound > n {
                        out.push(Violation::error(&field, format!("bound {bound} exceeds node count {n}")));
                    }
                }
                Requirement::MaxPerValue { .. } | Requirement::SynergyAtLeast { .. } => {}
            }
        } else if let Requirement::SynergyAtLeast { threshold } = req {
            synergy_seen += 1;
            if !(0.0..=1.0).contains(threshold) {
                out.push(Violation::error(&field, format!("synergy threshold {threshold} outside [0, 1]")));
            }
            if synergy_seen > 1 {
                out.push(Violation::error(&field, "at most one synergy requirement per puzzle"));
            }
        }
    }
    let linear = puzzle.linear_requirements().count();
    if linear > SOFT_LINEAR_LIMIT {
        out.push(Violation::warning(
            "requirements",
            format!("{linear} linear requirements; search cost grows with each one beyond {SOFT_LINEAR_LIMIT}"),
        ));
    }
    out.extend(puzzle.kernel.violations(&puzzle.schema));
    out
}

/// A complete assignment: `items[node]` is a pool position. Synergy and
/// fitness (total price) are cached at construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub items: Vec<usize>,
    pub synergy: f64,
    pub fitness: f64,
}

impl Solution {
    pub fn item_ids<'p>(&self, pool: &'p Pool) -> Vec<&'p str> {
        self.items.iter().map(|&i| pool.item(i).id.as_str()).collect()
    }

    /// Ordering used everywhere a deterministic ranking is needed: price,
    /// then the gene sequence.
    pub fn canonical_cmp(&self, other: &Solution) -> std::cmp::Ordering {
        self.fitness
            .total_cmp(&other.fitness)
            .then_with(|| self.items.cmp(&other.items))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequirementCheck {
    pub requirement: Requirement,
    pub satisfied: bool,
    /// The quantity the requirement bounds (sum, count, distinct count,
    /// largest per-value multiplicity, or synergy).
    pub observed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub checks: Vec<RequirementCheck>,
    pub synergy: f64,
    pub fitness: f64,
}

impl FeasibilityReport {
    pub fn feasible(&self) -> bool {
        self.checks.iter().all(|c| c.satisfied)
    }

    pub fn linear_feasible(&self) -> bool {
        self.checks
            .iter()
            .filter(|c| c.requirement.is_linear())
            .all(|c| c.satisfied)
    }
}

/// Total price of the selected items. Summed in pool order so that every
/// arrangement of the same selection costs exactly the same.
pub fn selection_price(pool: &Pool, items: &[usize]) -> f64 {
    let mut sorted = items.to_vec();
    sorted.sort_unstable();
    sorted.iter().map(|&i| pool.price(i)).sum()
}

/// Checks an assignment from scratch against every requirement.
///
/// This is the reference route: it reads trait values through the item
/// records and scores synergy with the by-name kernel, independently of the
/// interned codes the search uses.
pub fn evaluate(solution: &Solution, puzzle: &Puzzle, pool: &Pool) -> Result<FeasibilityReport> {
    evaluate_assignment(&solution.items, puzzle, pool)
}

pub fn evaluate_assignment(items: &[usize], puzzle: &Puzzle, pool: &Pool) -> Result<FeasibilityReport> {
    let n = puzzle.graph.node_count();
    if items.len() != n {
        return Err(Error::InvalidAssignment(format!(
            "{} items for {n} nodes",
            items.len()
        )));
    }
    let mut seen = HashSet::with_capacity(n);
    for &i in items {
        if i >= pool.len() {
            return Err(Error::UnknownItemId(format!("#{i}")));
        }
        if !seen.insert(i) {
            return Err(Error::InvalidAssignment(format!(
                "item `{}` assigned twice",
                pool.item(i).id
            )));
        }
    }
    if pool.schema() != &puzzle.schema {
        return Err(Error::SchemaMismatch("pool and puzzle schemas differ".into()));
    }
    let selected: Vec<&Item> = items.iter().map(|&i| pool.item(i)).collect();
    let fitness = selection_price(pool, items);
    let synergy = synergy::solution_synergy(&puzzle.kernel, &puzzle.schema, &selected, &puzzle.graph)?;

    let column = |name: &str| -> Result<usize> {
        puzzle
            .schema
            .position(name)
            .ok_or_else(|| Error::SchemaMismatch(format!("unknown trait `{name}`")))
    };
    let mut checks = Vec::with_capacity(puzzle.requirements.len());
    for req in &puzzle.requirements {
        let (observed, satisfied) = match req {
            Requirement::MinSum { trait_name, bound } => {
                let col = column(trait_name)?;
                let sum: f64 = selected
                    .iter()
                    .map(|it| it.values[col].as_number().unwrap_or(0.0))
                    .sum();
                (sum, sum >= *bound)
            }
            Requirement::MinCount { trait_name, value, bound } => {
                let col = column(trait_name)?;
                let c = selected.iter().filter(|it| &it.values[col] == value).count();
                (c as f64, c >= *bound as usize)
            }
            Requirement::MaxCount { trait_name, value, bound } => {
                let col = column(trait_name)?;
                let c = selected.iter().filter(|it| &it.values[col] == value).count();
                (c as f64, c <= *bound as usize)
            }
            Requirement::MinDistinct { trait_name, bound } => {
                let col = column(trait_name)?;
                let d = selected.iter().map(|it| &it.values[col]).collect::<HashSet<_>>().len();
                (d as f64, d >= *bound as usize)
            }
            Requirement::MaxPerValue { trait_name, cap } => {
                let col = column(trait_name)?;
                let mut counts: BTreeMap<&TraitValue, usize> = BTreeMap::new();
                for it in &selected {
                    *counts.entry(&it.values[col]).or_default() += 1;
                }
                let worst = counts.values().copied().max().unwrap_or(0);
                (worst as f64, worst <= *cap as usize)
            }
            Requirement::SynergyAtLeast { threshold } => (synergy, synergy >= *threshold),
        };
        checks.push(RequirementCheck {
            requirement: req.clone(),
            satisfied,
            observed,
        });
    }
    Ok(FeasibilityReport {
        checks,
        synergy,
        fitness,
    })
}
