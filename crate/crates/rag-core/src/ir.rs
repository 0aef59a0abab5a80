//! The typed action-graph IR: nodes, edges, identities, and the low-level
//! construction and environment-lineage queries everything else builds on.
//!
//! A recipe compiles to a DAG whose nodes are ingredient roots and actions
//! (process / transfer / plate / plugin). Intermediate items are implicit:
//! the output of a producer node is addressed by a [`PpcRef`] handle rather
//! than by a node of its own, and its environment is recovered by walking
//! the material lineage backwards.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::span::SourceSpan;

/// Sentinel used for both fields of the unassigned environment φ.
pub const UNASSIGNED: &str = "unassigned";

// ---------------------------------------------------------------------------
// Identities
// ---------------------------------------------------------------------------

/// Opaque node identifier. Parse-derived graphs use source labels; generated
/// ids follow `<type>_<ordinal>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub String);

impl NodeId {
    pub fn new(id: impl Into<String>) -> Self {
        NodeId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<&str> for NodeId {
    fn from(s: &str) -> Self {
        NodeId(s.to_string())
    }
}

/// Handle to the implicit partially-processed component produced by a
/// Process, Transfer, or Plugin node. Never materialized as a graph node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PpcRef {
    pub producing_node: NodeId,
}

// ---------------------------------------------------------------------------
// Entity types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ingredient {
    pub name: String,
    pub quantity: f64,
    pub unit: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub form: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modifiers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub instance_tag: Option<char>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub pose: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tilt_degrees: Option<f64>,
}

/// A `(container, location, optional geometry)` context tuple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub container: String,
    pub location: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

impl Environment {
    pub fn new(container: impl Into<String>, location: impl Into<String>) -> Self {
        Self {
            container: container.into(),
            location: location.into(),
            geometry: None,
        }
    }

    /// The distinguished initial environment φ.
    pub fn unassigned() -> Self {
        Self::new(UNASSIGNED, UNASSIGNED)
    }

    pub fn is_unassigned(&self) -> bool {
        self.container == UNASSIGNED && self.location == UNASSIGNED && self.geometry.is_none()
    }

    /// Stable string key for grouping and ordering by structural identity.
    pub fn key(&self) -> String {
        match &self.geometry {
            None => format!("{}|{}", self.container, self.location),
            Some(g) => match g.tilt_degrees {
                None => format!("{}|{}|{}", self.container, self.location, g.pose),
                Some(t) => format!("{}|{}|{}|{}", self.container, self.location, g.pose, t),
            },
        }
    }
}

impl fmt::Display for Environment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_unassigned() {
            write!(f, "φ")
        } else {
            write!(f, "{} @ {}", self.container, self.location)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RampPoint {
    pub offset_seconds: u32,
    pub temp_c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TemperatureKind {
    Constant { temp_c: f64 },
    Range { low_c: f64, high_c: f64 },
    Ramp { points: Vec<RampPoint> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemperatureSpec {
    #[serde(flatten)]
    pub kind: TemperatureKind,
    /// Qualitative term the numeric range was normalized from, e.g. "medium heat".
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source_phrase: Option<String>,
}

impl TemperatureSpec {
    pub fn low_c(&self) -> f64 {
        match &self.kind {
            TemperatureKind::Constant { temp_c } => *temp_c,
            TemperatureKind::Range { low_c, .. } => *low_c,
            TemperatureKind::Ramp { points } => {
                points.iter().map(|p| p.temp_c).fold(f64::INFINITY, f64::min)
            }
        }
    }

    pub fn high_c(&self) -> f64 {
        match &self.kind {
            TemperatureKind::Constant { temp_c } => *temp_c,
            TemperatureKind::Range { high_c, .. } => *high_c,
            TemperatureKind::Ramp { points } => {
                points.iter().map(|p| p.temp_c).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }
}

/// Classification of an outcome predicate. Shared with the technique
/// lexicon's postcondition vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeClass {
    Doneness,
    Texture,
    Color,
    Aroma,
    Custom,
}

impl OutcomeClass {
    pub const ALL: [OutcomeClass; 5] = [
        OutcomeClass::Doneness,
        OutcomeClass::Texture,
        OutcomeClass::Color,
        OutcomeClass::Aroma,
        OutcomeClass::Custom,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            OutcomeClass::Doneness => "doneness",
            OutcomeClass::Texture => "texture",
            OutcomeClass::Color => "color",
            OutcomeClass::Aroma => "aroma",
            OutcomeClass::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|c| c.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationCondition {
    Duration {
        seconds: u32,
    },
    Outcome {
        class: OutcomeClass,
        predicate: String,
    },
    AllOf {
        conditions: Vec<TerminationCondition>,
    },
    AnyOf {
        conditions: Vec<TerminationCondition>,
    },
}

impl TerminationCondition {
    /// Duration implied by the condition, if any: `AllOf` waits for the
    /// longest timed sub-condition, `AnyOf` fires at the shortest.
    pub fn implied_duration(&self) -> Option<u32> {
        match self {
            TerminationCondition::Duration { seconds } => Some(*seconds),
            TerminationCondition::Outcome { .. } => None,
            TerminationCondition::AllOf { conditions } => {
                conditions.iter().filter_map(|c| c.implied_duration()).max()
            }
            TerminationCondition::AnyOf { conditions } => {
                conditions.iter().filter_map(|c| c.implied_duration()).min()
            }
        }
    }
}

/// Value supplied for a technique parameter. `Word` is an enum member or
/// bare token; its type is checked during lexicon resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Word(String),
    Number(f64),
    Duration { seconds: u32 },
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Word(w) => write!(f, "{w}"),
            ParamValue::Number(n) => write!(f, "{n}"),
            ParamValue::Duration { seconds } => write!(f, "{seconds} s"),
        }
    }
}

/// Reference into the versioned technique lexicon. `requirement` is a
/// semantic-version range with caret semantics by default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TechniqueRef {
    pub id: String,
    pub requirement: String,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    pub params: std::collections::BTreeMap<String, ParamValue>,
}

impl TechniqueRef {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            requirement: "*".to_string(),
            params: Default::default(),
        }
    }
}

// ---------------------------------------------------------------------------
// Node payloads
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessPayload {
    pub technique: TechniqueRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tool: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub temperature: Option<TemperatureSpec>,
    pub termination: TerminationCondition,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub modifiers: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub expected_duration_seconds: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    Place,
    Pour,
    Scrape,
    Ladle,
    Drain,
    Lift,
}

impl TransferMode {
    pub const ALL: [TransferMode; 6] = [
        TransferMode::Place,
        TransferMode::Pour,
        TransferMode::Scrape,
        TransferMode::Ladle,
        TransferMode::Drain,
        TransferMode::Lift,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            TransferMode::Place => "place",
            TransferMode::Pour => "pour",
            TransferMode::Scrape => "scrape",
            TransferMode::Ladle => "ladle",
            TransferMode::Drain => "drain",
            TransferMode::Lift => "lift",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.iter().copied().find(|m| m.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferScope {
    Whole,
    Partial,
    ResidualOnly,
}

impl TransferScope {
    pub fn name(&self) -> &'static str {
        match self {
            TransferScope::Whole => "whole",
            TransferScope::Partial => "partial",
            TransferScope::ResidualOnly => "residual_only",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [TransferScope::Whole, TransferScope::Partial, TransferScope::ResidualOnly]
            .into_iter()
            .find(|m| m.name() == s)
    }
}

/// Moved amount for partial transfers. Percentages are stored as written
/// (`portion 50%` keeps 50.0) so formatting round-trips exactly; the unit
/// fraction is `percent / 100`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Portion {
    Fraction { percent: f64 },
    Absolute { quantity: f64, unit: String },
}

impl Portion {
    /// Unit fraction in (0, 1] when quantified as a percentage.
    pub fn fraction(&self) -> Option<f64> {
        match self {
            Portion::Fraction { percent } => Some(percent / 100.0),
            Portion::Absolute { .. } => None,
        }
    }
}

/// Where a transfer puts its item: a concrete environment or the implicit
/// output of another producer (the moved item then inherits that PPC's
/// environment).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TransferDestination {
    Environment {
        /// Name of the `env` declaration this came from, if any.
        #[serde(skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        env: Environment,
    },
    Ppc { node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferPayload {
    pub destination: TransferDestination,
    pub mode: TransferMode,
    pub scope: TransferScope,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub portion: Option<Portion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlatePayload {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub arrangement_notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvMapping {
    /// Environment name in the host recipe.
    pub host_env: String,
    /// Environment name inside the plugin recipe it replaces.
    pub plugin_env: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PluginPayload {
    /// Import path as written in the source.
    pub recipe_ref: String,
    pub expanded: bool,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub env_mappings: Vec<EnvMapping>,
    /// The embedded, independently parsed sub-recipe. `None` only for
    /// hand-built graphs that never resolved the import.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sub_recipe: Option<Box<RecipeGraph>>,
}

/// Ingredient root: the ingredient plus the environment it starts in
/// (φ unless declared otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngredientRoot {
    pub ingredient: Ingredient,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_env_name: Option<String>,
    pub initial_environment: Environment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node_kind", rename_all = "snake_case")]
pub enum NodePayload {
    Ingredient(IngredientRoot),
    Process(ProcessPayload),
    Transfer(TransferPayload),
    Plate(PlatePayload),
    Plugin(PluginPayload),
}

impl NodePayload {
    pub fn kind_name(&self) -> &'static str {
        match self {
            NodePayload::Ingredient(_) => "ingredient",
            NodePayload::Process(_) => "process",
            NodePayload::Transfer(_) => "transfer",
            NodePayload::Plate(_) => "plate",
            NodePayload::Plugin(_) => "plugin",
        }
    }

    /// Producers have an implicit PPC output; ingredient roots and plates
    /// do not (a plate's output is the final dish).
    pub fn is_producer(&self) -> bool {
        matches!(
            self,
            NodePayload::Process(_) | NodePayload::Transfer(_) | NodePayload::Plugin(_)
        )
    }

    pub fn is_action(&self) -> bool {
        !matches!(self, NodePayload::Ingredient(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub payload: NodePayload,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

// ---------------------------------------------------------------------------
// Edges
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaterialRole {
    /// Ingredient/PPC flowing into a process or plate.
    Input,
    /// The item a transfer moves.
    From,
    /// The destination binding of a transfer whose target is a PPC.
    To,
}

impl MaterialRole {
    pub fn name(&self) -> &'static str {
        match self {
            MaterialRole::Input => "input",
            MaterialRole::From => "from",
            MaterialRole::To => "to",
        }
    }
}

/// Offset of an interjection relative to its parent process. Percentages
/// are stored as written (`at 50%` keeps 50.0); the unit fraction must lie
/// in (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InterjectionOffset {
    Absolute { seconds: u32 },
    Fraction { percent: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InterjectionBehavior {
    /// Pauses the parent; active time is preserved, wall clock extends.
    Breaking,
    /// Fires every `repeat_every_seconds` within the parent window.
    Repeating,
    /// Single instance alongside the parent without pausing it.
    Overlay,
}

impl InterjectionBehavior {
    pub fn name(&self) -> &'static str {
        match self {
            InterjectionBehavior::Breaking => "breaking",
            InterjectionBehavior::Repeating => "repeating",
            InterjectionBehavior::Overlay => "overlay",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [
            InterjectionBehavior::Breaking,
            InterjectionBehavior::Repeating,
            InterjectionBehavior::Overlay,
        ]
        .into_iter()
        .find(|b| b.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "edge_kind", rename_all = "snake_case")]
pub enum EdgeKind {
    Material {
        role: MaterialRole,
    },
    Precedence,
    /// Timing edge from an interjected sub-action to its parent process.
    /// Carries material flow for lineage purposes (the sub-action's output
    /// merges into the parent) but no start-after-end constraint.
    Interjection {
        offset: InterjectionOffset,
        behavior: InterjectionBehavior,
        #[serde(skip_serializing_if = "Option::is_none")]
        repeat_every_seconds: Option<u32>,
    },
}

impl EdgeKind {
    pub fn is_material(&self) -> bool {
        matches!(self, EdgeKind::Material { .. })
    }

    pub fn is_interjection(&self) -> bool {
        matches!(self, EdgeKind::Interjection { .. })
    }

    /// Rank used when sorting edges canonically.
    pub fn sort_rank(&self) -> u8 {
        match self {
            EdgeKind::Material { role } => *role as u8,
            EdgeKind::Precedence => 3,
            EdgeKind::Interjection { .. } => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub src: NodeId,
    pub dst: NodeId,
    #[serde(flatten)]
    pub kind: EdgeKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub span: Option<SourceSpan>,
}

impl Edge {
    pub fn material(src: impl Into<NodeId>, dst: impl Into<NodeId>, role: MaterialRole) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            kind: EdgeKind::Material { role },
            span: None,
        }
    }

    pub fn precedence(src: impl Into<NodeId>, dst: impl Into<NodeId>) -> Self {
        Edge {
            src: src.into(),
            dst: dst.into(),
            kind: EdgeKind::Precedence,
            span: None,
        }
    }
}

impl From<String> for NodeId {
    fn from(s: String) -> Self {
        NodeId(s)
    }
}

// ---------------------------------------------------------------------------
// Graph construction errors
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("duplicate node id `{0}`")]
    DuplicateId(NodeId),
    #[error("edge endpoint `{0}` does not exist")]
    UnknownEndpoint(NodeId),
    #[error("interjection edge must terminate at a process node, but `{0}` is a {1}")]
    InterjectionTargetNotProcess(NodeId, &'static str),
    #[error("repeating interjection requires a repeat interval")]
    RepeatingWithoutInterval,
    #[error("`{id}` is a {kind} and has no consumable output")]
    NotAProducer { id: NodeId, kind: &'static str },
    #[error("node `{0}` does not exist")]
    NoSuchNode(NodeId),
}

/// Failure to determine the environment of a PPC.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("merge at `{node}` joins inputs living in different environments: {}",
            .candidates.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(", "))]
    MergeAmbiguity {
        node: NodeId,
        candidates: Vec<Environment>,
    },
    #[error("environment of a plate output is undefined (`{0}` is the final dish)")]
    UndefinedForPlate(NodeId),
    #[error("material lineage of `{0}` is cyclic")]
    CyclicLineage(NodeId),
    #[error("node `{0}` does not exist")]
    NoSuchNode(NodeId),
}

// ---------------------------------------------------------------------------
// RecipeGraph
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexiconRequirement {
    pub name: String,
    pub range: String,
}

/// The compiled action graph. Nodes keep insertion order (which mirrors the
/// source for parse-derived graphs); lookups go through an id index.
#[derive(Debug, Clone, Default)]
pub struct RecipeGraph {
    pub name: String,
    nodes: Vec<Node>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    /// Named environment declarations, for reference-preserving output.
    pub environments: std::collections::BTreeMap<String, Environment>,
    pub lexicon_requirement: Option<LexiconRequirement>,
    pub metadata: std::collections::BTreeMap<String, String>,
}

impl PartialEq for RecipeGraph {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.nodes == other.nodes
            && self.edges == other.edges
            && self.environments == other.environments
            && self.lexicon_requirement == other.lexicon_requirement
            && self.metadata == other.metadata
    }
}

/// Serialized shape of a graph: document order for nodes and edges, the id
/// index rebuilt on the way back in.
#[derive(Serialize, Deserialize)]
struct GraphRepr {
    name: String,
    nodes: Vec<Node>,
    edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    environments: std::collections::BTreeMap<String, Environment>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lexicon_requirement: Option<LexiconRequirement>,
    #[serde(default, skip_serializing_if = "std::collections::BTreeMap::is_empty")]
    metadata: std::collections::BTreeMap<String, String>,
}

impl Serialize for RecipeGraph {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        GraphRepr {
            name: self.name.clone(),
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
            environments: self.environments.clone(),
            lexicon_requirement: self.lexicon_requirement.clone(),
            metadata: self.metadata.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RecipeGraph {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        let repr = GraphRepr::deserialize(deserializer)?;
        let mut graph = RecipeGraph::new(repr.name);
        graph.environments = repr.environments;
        graph.lexicon_requirement = repr.lexicon_requirement;
        graph.metadata = repr.metadata;
        for node in repr.nodes {
            graph
                .add_node(node)
                .map_err(|e| D::Error::custom(e.to_string()))?;
        }
        for edge in repr.edges {
            graph
                .add_edge(edge)
                .map_err(|e| D::Error::custom(e.to_string()))?;
        }
        Ok(graph)
    }
}

impl RecipeGraph {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            ..Default::default()
        }
    }

    // -- construction --

    /// Insert a node. Graph invariants are NOT enforced here; validation is
    /// a separate pass.
    pub fn add_node(&mut self, node: Node) -> Result<NodeId, GraphError> {
        if self.index.contains_key(node.id.as_str()) {
            return Err(GraphError::DuplicateId(node.id));
        }
        let id = node.id.clone();
        self.index.insert(id.0.clone(), self.nodes.len());
        self.nodes.push(node);
        Ok(id)
    }

    /// Insert an edge. Both endpoints must exist and edge-kind local rules
    /// must hold; cycles are allowed here and caught by the validator.
    pub fn add_edge(&mut self, edge: Edge) -> Result<(), GraphError> {
        let Some(dst) = self.node(&edge.dst) else {
            return Err(GraphError::UnknownEndpoint(edge.dst));
        };
        if self.node(&edge.src).is_none() {
            return Err(GraphError::UnknownEndpoint(edge.src));
        }
        if let EdgeKind::Interjection {
            behavior,
            repeat_every_seconds,
            ..
        } = &edge.kind
        {
            if !matches!(dst.payload, NodePayload::Process(_)) {
                return Err(GraphError::InterjectionTargetNotProcess(
                    edge.dst,
                    dst.payload.kind_name(),
                ));
            }
            if *behavior == InterjectionBehavior::Repeating && repeat_every_seconds.is_none() {
                return Err(GraphError::RepeatingWithoutInterval);
            }
        }
        self.edges.push(edge);
        Ok(())
    }

    /// Next free generated id of the form `<kind>_<ordinal>`.
    pub fn generate_id(&self, kind: &str) -> NodeId {
        let mut ordinal = self.nodes.len();
        loop {
            let candidate = format!("{kind}_{ordinal}");
            if !self.index.contains_key(&candidate) {
                return NodeId(candidate);
            }
            ordinal += 1;
        }
    }

    // -- accessors --

    pub fn node(&self, id: &NodeId) -> Option<&Node> {
        self.index.get(id.as_str()).map(|&i| &self.nodes[i])
    }

    pub(crate) fn node_mut(&mut self, id: &NodeId) -> Option<&mut Node> {
        self.index.get(id.as_str()).map(|&i| &mut self.nodes[i])
    }

    pub fn nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn ingredient_roots(&self) -> impl Iterator<Item = &Node> {
        self.nodes
            .iter()
            .filter(|n| matches!(n.payload, NodePayload::Ingredient(_)))
    }

    pub fn action_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(|n| n.payload.is_action())
    }

    /// Edges into `id`.
    pub fn in_edges<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| &e.dst == id)
    }

    pub fn out_edges<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.edges.iter().filter(move |e| &e.src == id)
    }

    pub fn material_in_edges<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.in_edges(id).filter(|e| e.kind.is_material())
    }

    pub fn material_out_edges<'a>(&'a self, id: &'a NodeId) -> impl Iterator<Item = &'a Edge> + 'a {
        self.out_edges(id).filter(|e| e.kind.is_material())
    }

    /// The interjection edge leaving `id`, if this node is an interjected
    /// sub-action.
    pub fn interjection_parent(&self, id: &NodeId) -> Option<&Edge> {
        self.edges.iter().find(|e| &e.src == id && e.kind.is_interjection())
    }

    /// Handle to the implicit output of a producer node.
    pub fn ppc_of(&self, id: &NodeId) -> Result<PpcRef, GraphError> {
        let node = self
            .node(id)
            .ok_or_else(|| GraphError::NoSuchNode(id.clone()))?;
        if node.payload.is_producer() {
            Ok(PpcRef {
                producing_node: id.clone(),
            })
        } else {
            Err(GraphError::NotAProducer {
                id: id.clone(),
                kind: node.payload.kind_name(),
            })
        }
    }

    /// Nodes whose material output nothing consumes. Interjection edges
    /// count as consumption (the sub-action's output merges into its
    /// parent); precedence edges do not.
    pub fn material_sinks(&self) -> Vec<&Node> {
        self.nodes
            .iter()
            .filter(|n| {
                !self
                    .out_edges(&n.id)
                    .any(|e| e.kind.is_material() || e.kind.is_interjection())
            })
            .collect()
    }

    // -- environment lineage --

    /// Environment of the item produced by (or sitting at) `id`, walking the
    /// material lineage back to the most recent governing transfer or the
    /// root's initial environment. Resilient to malformed graphs: cycles and
    /// ambiguous merges come back as errors rather than hangs.
    ///
    /// Exposed to validated-graph consumers via
    /// [`crate::validate::ValidatedGraph::environment_of`].
    pub(crate) fn environment_of_raw(&self, id: &NodeId) -> Result<Environment, EnvError> {
        let mut memo = HashMap::new();
        let mut visiting = Vec::new();
        self.env_rec(id, &mut memo, &mut visiting)
    }

    fn env_rec(
        &self,
        id: &NodeId,
        memo: &mut HashMap<NodeId, Result<Environment, EnvError>>,
        visiting: &mut Vec<NodeId>,
    ) -> Result<Environment, EnvError> {
        if let Some(cached) = memo.get(id) {
            return cached.clone();
        }
        if visiting.contains(id) {
            return Err(EnvError::CyclicLineage(id.clone()));
        }
        let node = self
            .node(id)
            .ok_or_else(|| EnvError::NoSuchNode(id.clone()))?;
        visiting.push(id.clone());
        let result = match &node.payload {
            NodePayload::Ingredient(root) => Ok(root.initial_environment.clone()),
            NodePayload::Transfer(t) => match &t.destination {
                TransferDestination::Environment { env, .. } => Ok(env.clone()),
                TransferDestination::Ppc { node: target } => self.env_rec(target, memo, visiting),
            },
            NodePayload::Plugin(_) => Ok(Environment::unassigned()),
            NodePayload::Plate(_) => Err(EnvError::UndefinedForPlate(id.clone())),
            NodePayload::Process(_) => {
                // A process never changes its item's environment: it inherits
                // from its material inputs, including interjected additions.
                // Interjected sub-actions with no material inputs of their own
                // act on the parent's in-flight content and contribute nothing.
                let mut sources: Vec<NodeId> = self
                    .material_in_edges(id)
                    .filter(|e| matches!(e.kind, EdgeKind::Material { role: MaterialRole::Input }))
                    .map(|e| e.src.clone())
                    .collect();
                for e in self.in_edges(id).filter(|e| e.kind.is_interjection()) {
                    if self.material_in_edges(&e.src).next().is_some() {
                        sources.push(e.src.clone());
                    }
                }
                if sources.is_empty() {
                    // No material inputs: an interjected action working on the
                    // parent's content takes the parent's environment.
                    if let Some(parent_edge) = self.interjection_parent(id) {
                        let parent = parent_edge.dst.clone();
                        self.env_rec(&parent, memo, visiting)
                    } else {
                        Ok(Environment::unassigned())
                    }
                } else {
                    let mut envs: Vec<Environment> = Vec::new();
                    for src in &sources {
                        let env = self.env_rec(src, memo, visiting)?;
                        if !envs.contains(&env) {
                            envs.push(env);
                        }
                    }
                    if envs.len() == 1 {
                        Ok(envs.pop().expect("nonempty"))
                    } else {
                        envs.sort_by_key(Environment::key);
                        Err(EnvError::MergeAmbiguity {
                            node: id.clone(),
                            candidates: envs,
                        })
                    }
                }
            }
        };
        visiting.pop();
        memo.insert(id.clone(), result.clone());
        result
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ingredient_node(id: &str) -> Node {
        Node {
            id: NodeId::new(id),
            payload: NodePayload::Ingredient(IngredientRoot {
                ingredient: Ingredient {
                    name: id.to_string(),
                    quantity: 4.0,
                    unit: "count".to_string(),
                    form: None,
                    modifiers: vec![],
                    instance_tag: Some('A'),
                },
                initial_env_name: None,
                initial_environment: Environment::unassigned(),
            }),
            span: None,
        }
    }

    fn transfer_node(id: &str, env: Environment) -> Node {
        Node {
            id: NodeId::new(id),
            payload: NodePayload::Transfer(TransferPayload {
                destination: TransferDestination::Environment { name: None, env },
                mode: TransferMode::Place,
                scope: TransferScope::Whole,
                portion: None,
            }),
            span: None,
        }
    }

    fn process_node(id: &str) -> Node {
        Node {
            id: NodeId::new(id),
            payload: NodePayload::Process(ProcessPayload {
                technique: TechniqueRef::new("dry_fry"),
                tool: None,
                temperature: None,
                termination: TerminationCondition::Outcome {
                    class: OutcomeClass::Custom,
                    predicate: "browned and cooked through".to_string(),
                },
                modifiers: vec![],
                expected_duration_seconds: Some(720),
            }),
            span: None,
        }
    }

    #[test]
    fn add_node_returns_id_and_rejects_duplicates() {
        let mut g = RecipeGraph::new("t");
        let id = g.add_node(ingredient_node("sausages")).unwrap();
        assert_eq!(id.as_str(), "sausages");
        assert_eq!(g.node_count(), 1);
        let err = g.add_node(ingredient_node("sausages")).unwrap_err();
        assert_eq!(err, GraphError::DuplicateId(NodeId::new("sausages")));
    }

    #[test]
    fn three_adds_three_distinct_nodes() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("a")).unwrap();
        g.add_node(ingredient_node("b")).unwrap();
        g.add_node(ingredient_node("c")).unwrap();
        assert_eq!(g.node_count(), 3);
        let ids: std::collections::BTreeSet<_> = g.nodes().map(|n| n.id.clone()).collect();
        assert_eq!(ids.len(), 3);
    }

    #[test]
    fn add_edge_rejects_unknown_endpoints() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("a")).unwrap();
        let err = g
            .add_edge(Edge::material("a", "ghost", MaterialRole::From))
            .unwrap_err();
        assert_eq!(err, GraphError::UnknownEndpoint(NodeId::new("ghost")));
    }

    #[test]
    fn interjection_edges_only_target_processes() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("a")).unwrap();
        g.add_node(transfer_node("t1", Environment::new("pan", "stove")))
            .unwrap();
        g.add_node(process_node("p1")).unwrap();
        let interject = |dst: &str, every: Option<u32>| Edge {
            src: NodeId::new("t1"),
            dst: NodeId::new(dst),
            kind: EdgeKind::Interjection {
                offset: InterjectionOffset::Fraction { percent: 50.0 },
                behavior: if every.is_some() {
                    InterjectionBehavior::Repeating
                } else {
                    InterjectionBehavior::Breaking
                },
                repeat_every_seconds: every,
            },
            span: None,
        };
        assert!(matches!(
            g.add_edge(interject("a", None)),
            Err(GraphError::InterjectionTargetNotProcess(..))
        ));
        assert!(g.add_edge(interject("p1", Some(120))).is_ok());
        // Repeating without an interval is rejected outright.
        let mut bad = interject("p1", Some(120));
        if let EdgeKind::Interjection {
            repeat_every_seconds, ..
        } = &mut bad.kind
        {
            *repeat_every_seconds = None;
        }
        if let EdgeKind::Interjection { behavior, .. } = &mut bad.kind {
            *behavior = InterjectionBehavior::Repeating;
        }
        assert_eq!(
            g.add_edge(bad).unwrap_err(),
            GraphError::RepeatingWithoutInterval
        );
    }

    #[test]
    fn ppc_of_producers_only() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("a")).unwrap();
        g.add_node(transfer_node("t1", Environment::new("pan", "stove")))
            .unwrap();
        g.add_node(process_node("p1")).unwrap();
        g.add_node(Node {
            id: NodeId::new("final"),
            payload: NodePayload::Plate(PlatePayload {
                arrangement_notes: vec![],
            }),
            span: None,
        })
        .unwrap();

        assert_eq!(
            g.ppc_of(&NodeId::new("p1")).unwrap().producing_node,
            NodeId::new("p1")
        );
        assert!(g.ppc_of(&NodeId::new("t1")).is_ok());
        assert!(matches!(
            g.ppc_of(&NodeId::new("a")),
            Err(GraphError::NotAProducer { .. })
        ));
        assert!(matches!(
            g.ppc_of(&NodeId::new("final")),
            Err(GraphError::NotAProducer { .. })
        ));
    }

    #[test]
    fn environment_walks_lineage() {
        // sausages(φ) --from--> t1(to pan@stove) --input--> p1
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("sausages")).unwrap();
        g.add_node(transfer_node("t1", Environment::new("pan", "stove")))
            .unwrap();
        g.add_node(process_node("p1")).unwrap();
        g.add_edge(Edge::material("sausages", "t1", MaterialRole::From))
            .unwrap();
        g.add_edge(Edge::material("t1", "p1", MaterialRole::Input))
            .unwrap();

        // Root not yet transferred: φ.
        assert!(g
            .environment_of_raw(&NodeId::new("sausages"))
            .unwrap()
            .is_unassigned());
        // Transfer overrides.
        assert_eq!(
            g.environment_of_raw(&NodeId::new("t1")).unwrap(),
            Environment::new("pan", "stove")
        );
        // Process persists.
        assert_eq!(
            g.environment_of_raw(&NodeId::new("p1")).unwrap(),
            Environment::new("pan", "stove")
        );
    }

    #[test]
    fn transfer_to_ppc_inherits_target_environment() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("veg")).unwrap();
        g.add_node(ingredient_node("pesto")).unwrap();
        g.add_node(transfer_node("t_veg", Environment::new("pan", "stove")))
            .unwrap();
        let mut onto = transfer_node("t_pesto", Environment::unassigned());
        if let NodePayload::Transfer(t) = &mut onto.payload {
            t.destination = TransferDestination::Ppc {
                node: NodeId::new("t_veg"),
            };
        }
        g.add_node(onto).unwrap();
        g.add_edge(Edge::material("veg", "t_veg", MaterialRole::From))
            .unwrap();
        g.add_edge(Edge::material("pesto", "t_pesto", MaterialRole::From))
            .unwrap();
        g.add_edge(Edge::material("t_veg", "t_pesto", MaterialRole::To))
            .unwrap();
        assert_eq!(
            g.environment_of_raw(&NodeId::new("t_pesto")).unwrap(),
            Environment::new("pan", "stove")
        );
    }

    #[test]
    fn merge_with_differing_environments_is_ambiguous() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("a")).unwrap();
        g.add_node(ingredient_node("b")).unwrap();
        g.add_node(transfer_node("ta", Environment::new("pan", "stove")))
            .unwrap();
        g.add_node(transfer_node("tb", Environment::new("pot", "stove")))
            .unwrap();
        g.add_node(process_node("merge")).unwrap();
        g.add_edge(Edge::material("a", "ta", MaterialRole::From)).unwrap();
        g.add_edge(Edge::material("b", "tb", MaterialRole::From)).unwrap();
        g.add_edge(Edge::material("ta", "merge", MaterialRole::Input))
            .unwrap();
        g.add_edge(Edge::material("tb", "merge", MaterialRole::Input))
            .unwrap();
        assert!(matches!(
            g.environment_of_raw(&NodeId::new("merge")),
            Err(EnvError::MergeAmbiguity { .. })
        ));
    }

    #[test]
    fn merge_with_equal_environments_is_fine() {
        let mut g = RecipeGraph::new("t");
        let pan = Environment::new("pan", "stove");
        g.add_node(ingredient_node("a")).unwrap();
        g.add_node(ingredient_node("b")).unwrap();
        g.add_node(transfer_node("ta", pan.clone())).unwrap();
        g.add_node(transfer_node("tb", pan.clone())).unwrap();
        g.add_node(process_node("merge")).unwrap();
        g.add_edge(Edge::material("a", "ta", MaterialRole::From)).unwrap();
        g.add_edge(Edge::material("b", "tb", MaterialRole::From)).unwrap();
        g.add_edge(Edge::material("ta", "merge", MaterialRole::Input))
            .unwrap();
        g.add_edge(Edge::material("tb", "merge", MaterialRole::Input))
            .unwrap();
        assert_eq!(g.environment_of_raw(&NodeId::new("merge")).unwrap(), pan);
    }

    #[test]
    fn cyclic_material_lineage_reported_not_hung() {
        let mut g = RecipeGraph::new("t");
        g.add_node(process_node("p1")).unwrap();
        g.add_node(process_node("p2")).unwrap();
        g.add_edge(Edge::material("p1", "p2", MaterialRole::Input))
            .unwrap();
        g.add_edge(Edge::material("p2", "p1", MaterialRole::Input))
            .unwrap();
        assert!(matches!(
            g.environment_of_raw(&NodeId::new("p1")),
            Err(EnvError::CyclicLineage(_) | EnvError::MergeAmbiguity { .. })
        ));
    }

    #[test]
    fn generated_ids_do_not_collide() {
        let mut g = RecipeGraph::new("t");
        g.add_node(ingredient_node("transfer_1")).unwrap();
        let id = g.generate_id("transfer");
        assert!(g.node(&id).is_none());
    }

    #[test]
    fn unassigned_environment_is_phi() {
        let phi = Environment::unassigned();
        assert!(phi.is_unassigned());
        assert_eq!(phi.to_string(), "φ");
        assert!(!Environment::new("pan", "stove").is_unassigned());
    }

    #[test]
    fn implied_durations_combine() {
        let c = TerminationCondition::AllOf {
            conditions: vec![
                TerminationCondition::Duration { seconds: 120 },
                TerminationCondition::Outcome {
                    class: OutcomeClass::Color,
                    predicate: "browned".into(),
                },
                TerminationCondition::Duration { seconds: 300 },
            ],
        };
        assert_eq!(c.implied_duration(), Some(300));
        let c = TerminationCondition::AnyOf {
            conditions: vec![
                TerminationCondition::Duration { seconds: 120 },
                TerminationCondition::Duration { seconds: 300 },
            ],
        };
        assert_eq!(c.implied_duration(), Some(120));
    }
}
