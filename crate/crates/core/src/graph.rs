//! Classical electronic configurations, resonant (facilitated) manifolds and
//! the laser-coupling graph between them.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, Ordering};

use crate::error::{Error, Result};
use crate::params::{PhysicalParams, PotentialModel};

/// Largest atom count for exhaustive enumeration of configurations.
pub const MAX_ATOMS: usize = 16;

/// Classical spin configuration; `true` marks a Rydberg (↑) atom.
///
/// Ordering is lexicographic in the bitstring written by tweezer index, so
/// `0011 < 0101 < 1001`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ElectronicConfig {
    bits: Vec<bool>,
}

impl ElectronicConfig {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    /// Configuration of `n` atoms from the integer whose binary expansion,
    /// most significant bit first, is the bitstring.
    pub fn from_index(index: usize, n: usize) -> Self {
        Self {
            bits: (0..n).map(|k| index >> (n - 1 - k) & 1 == 1).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_excited(&self, atom: usize) -> bool {
        self.bits[atom]
    }

    pub fn excitations(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Pairs (k, l), k < l, with both atoms in the Rydberg state.
    pub fn excited_pairs(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut pairs = Vec::new();
        for k in 0..n {
            for l in k + 1..n {
                if self.bits[k] && self.bits[l] {
                    pairs.push((k, l));
                }
            }
        }
        pairs
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.bits.iter().zip(&other.bits).filter(|(a, b)| a != b).count()
    }

    /// Arrow notation, e.g. `↑↑↓↓`.
    pub fn arrows(&self) -> String {
        self.bits.iter().map(|&b| if b { '↑' } else { '↓' }).collect()
    }
}

impl fmt::Display for ElectronicConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for ElectronicConfig {
    type Err = Error;

    /// Accepts `0`/`1`, `d`/`u` or `↓`/`↑`.
    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '1' | 'u' | 'U' | '↑' => Ok(true),
                '0' | 'd' | 'D' | '↓' => Ok(false),
                other => Err(Error::InvalidParameter(format!(
                    "invalid character {other:?} in configuration {s:?}"
                ))),
            })
            .collect::<Result<Vec<_>>>()?;
        if bits.is_empty() {
            return Err(Error::InvalidParameter("empty configuration".into()));
        }
        Ok(Self { bits })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    Dumbbell,
    Triangle,
    Tetrahedron,
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dumbbell" => Ok(Self::Dumbbell),
            "triangle" => Ok(Self::Triangle),
            "tetrahedron" => Ok(Self::Tetrahedron),
            _ => Err(Error::InvalidParameter(format!("unknown geometry preset {s:?}"))),
        }
    }
}

/// Equilibrium tweezer positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    positions: Vec<[f64; 3]>,
    preset: Option<Preset>,
}

impl Geometry {
    /// Custom arrangement; rejects coincident atoms.
    pub fn custom(positions: Vec<[f64; 3]>) -> Result<Self> {
        if positions.is_empty() || positions.len() > MAX_ATOMS {
            return Err(Error::InvalidParameter(format!(
                "need between 1 and {MAX_ATOMS} atoms, got {}",
                positions.len()
            )));
        }
        let g = Self {
            positions,
            preset: None,
        };
        for k in 0..g.len() {
            for l in k + 1..g.len() {
                if !(g.distance(k, l) > 0.0) {
                    return Err(Error::DegenerateGeometry(k, l));
                }
            }
        }
        Ok(g)
    }

    pub fn preset(preset: Preset, d: f64) -> Self {
        let positions = match preset {
            Preset::Dumbbell => vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0]],
            Preset::Triangle => vec![[0.0, 0.0, 0.0], [d, 0.0, 0.0], [0.5 * d, 0.5 * 3f64.sqrt() * d, 0.0]],
            Preset::Tetrahedron => {
                let s = d / (2.0 * std::f64::consts::SQRT_2);
                vec![[s, s, s], [s, -s, -s], [-s, s, -s], [-s, -s, s]]
            }
        };
        Self {
            positions,
            preset: Some(preset),
        }
    }

    pub fn dumbbell(d: f64) -> Self {
        Self::preset(Preset::Dumbbell, d)
    }

    pub fn triangle(d: f64) -> Self {
        Self::preset(Preset::Triangle, d)
    }

    pub fn tetrahedron(d: f64) -> Self {
        Self::preset(Preset::Tetrahedron, d)
    }

    pub fn preset_kind(&self) -> Option<Preset> {
        self.preset
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    /// r0^{(k,l)} = r0^{(k)} − r0^{(l)}.
    pub fn separation(&self, k: usize, l: usize) -> [f64; 3] {
        let (a, b) = (self.positions[k], self.positions[l]);
        [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
    }

    pub fn distance(&self, k: usize, l: usize) -> f64 {
        let s = self.separation(k, l);
        (s[0] * s[0] + s[1] * s[1] + s[2] * s[2]).sqrt()
    }

    /// Geometry with atoms relabelled: atom `i` of the result is atom
    /// `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            positions: perm.iter().map(|&i| self.positions[i]).collect(),
            preset: self.preset,
        }
    }
}

/// How the detuning is fixed relative to the nearest-neighbour interaction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningRule {
    /// Δ = −m·V(d); `m = 1` is the facilitation condition.
    Facilitation(f64),
    Explicit(f64),
}

impl DetuningRule {
    pub fn resolve(&self, v_d: f64) -> f64 {
        match *self {
            Self::Facilitation(m) => -m * v_d,
            Self::Explicit(delta) => delta,
        }
    }
}

impl FromStr for DetuningRule {
    type Err = Error;

    /// `-V`, `-3V`, or a plain number for an explicit detuning.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Some(m) = t.strip_prefix('-').and_then(|r| r.strip_suffix('V')) {
            if m.is_empty() {
                return Ok(Self::Facilitation(1.0));
            }
            return m
                .parse::<f64>()
                .map(Self::Facilitation)
                .map_err(|_| Error::InvalidParameter(format!("bad detuning rule {s:?}")));
        }
        t.parse::<f64>()
            .map(Self::Explicit)
            .map_err(|_| Error::InvalidParameter(format!("bad detuning rule {s:?}")))
    }
}

/// Δ·(number of ↑) + Σ_{k<l} V(r0^{(k,l)}) n_k n_l.
pub fn diagonal_energy(
    config: &ElectronicConfig,
    geometry: &Geometry,
    delta: f64,
    model: &PotentialModel,
    params: &PhysicalParams,
) -> Result<f64> {
    if config.len() != geometry.len() {
        return Err(Error::DimensionMismatch {
            expected: geometry.len(),
            got: config.len(),
        });
    }
    let mut e = delta * config.excitations() as f64;
    for (k, l) in config.excited_pairs() {
        e += model.radial(params, geometry.distance(k, l))?.0;
    }
    Ok(e)
}

/// Degenerate manifold of classical configurations with the laser-coupling
/// adjacency between them.
#[derive(Debug, Clone, PartialEq)]
pub struct ResonantGraph {
    pub nodes: Vec<ElectronicConfig>,
    /// Symmetric 0/1 matrix; 1 iff the nodes differ by a single spin flip.
    pub adjacency: DMatrix<f64>,
    pub manifold_energy: f64,
}

impl ResonantGraph {
    /// Graph over explicitly chosen nodes, linking single spin flips.
    pub fn from_nodes(nodes: Vec<ElectronicConfig>, manifold_energy: f64) -> Self {
        let n = nodes.len();
        let adjacency = DMatrix::from_fn(n, n, |i, j| if nodes[i].hamming(&nodes[j]) == 1 { 1.0 } else { 0.0 });
        Self {
            nodes,
            adjacency,
            manifold_energy,
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.len())
            .map(|i| self.adjacency.row(i).iter().filter(|&&a| a != 0.0).count())
            .collect()
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.len();
        let mut e = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.adjacency[(i, j)] != 0.0 {
                    e.push((i, j));
                }
            }
        }
        e
    }

    pub fn index_of(&self, config: &ElectronicConfig) -> Option<usize> {
        self.nodes.iter().position(|c| c == config)
    }

    /// Edge list, one `i j` line per edge with i < j.
    pub fn edge_list(&self) -> String {
        self.edges().iter().map(|(i, j)| format!("{i} {j}\n")).collect()
    }

    /// Node table mapping index to bitstring.
    pub fn node_table(&self) -> serde_json::Value {
        let nodes: Vec<_> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, c)| {
                serde_json::json!({
                    "index": i,
                    "bits": c.to_string(),
                    "excitations": c.excitations(),
                })
            })
            .collect();
        serde_json::json!({
            "manifold_energy": self.manifold_energy,
            "nodes": nodes,
        })
    }

    fn is_connected(&self) -> bool {
        if self.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.len()];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for (j, s) in seen.iter_mut().enumerate() {
                if self.adjacency[(i, j)] != 0.0 && !*s {
                    *s = true;
                    stack.push(j);
                }
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Enumerates all 2^N configurations and keeps those degenerate with `seed`.
///
/// Two energies match when they differ by at most
/// `rel_tol · max(|E_seed|, ω)`.
pub fn build_resonant_manifold(
    geometry: &Geometry,
    delta: f64,
    model: &PotentialModel,
    params: &PhysicalParams,
    seed: &ElectronicConfig,
    rel_tol: f64,
) -> Result<ResonantGraph> {
    let n = geometry.len();
    if n == 0 || n > MAX_ATOMS {
        return Err(Error::InvalidParameter(format!(
            "exhaustive enumeration supports 1..={MAX_ATOMS} atoms, got {n}"
        )));
    }
    if seed.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: seed.len(),
        });
    }
    static WARNED: AtomicBool = AtomicBool::new(false);
    if params.rabi != 0.0 && (params.rabi / delta).abs() > 0.1 && !WARNED.swap(true, Ordering::Relaxed) {
        log::warn!(
            "|Ω/Δ| = {:.3} > 0.1: the resonant manifold is only approximately decoupled",
            (params.rabi / delta).abs()
        );
    }
    let seed_energy = diagonal_energy(seed, geometry, delta, model, params)?;
    let window = rel_tol * seed_energy.abs().max(params.omega);
    let energies = (0..1usize << n)
        .into_par_iter()
        .map(|i| {
            let c = ElectronicConfig::from_index(i, n);
            diagonal_energy(&c, geometry, delta, model, params).map(|e| (c, e))
        })
        .collect::<Result<Vec<_>>>()?;
    let nodes = energies
        .into_iter()
        .filter(|(_, e)| (e - seed_energy).abs() <= window)
        .map(|(c, _)| c)
        .collect();
    Ok(ResonantGraph::from_nodes(nodes, seed_energy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TopologyKind {
    Path,
    Ring,
    Star,
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Topology {
    pub kind: TopologyKind,
    /// Vertex degrees sorted in descending order.
    pub degrees: Vec<usize>,
}

pub fn graph_classify(graph: &ResonantGraph) -> Topology {
    let mut degrees = graph.degrees();
    degrees.sort_unstable_by(|a, b| b.cmp(a));
    let n = degrees.len();
    let edges: usize = degrees.iter().sum::<usize>() / 2;
    let connected = graph.is_connected();
    let kind = if !connected {
        TopologyKind::Other
    } else if n == 1 || (edges == n - 1 && degrees[0] <= 2) {
        TopologyKind::Path
    } else if n >= 3 && degrees.iter().all(|&d| d == 2) {
        TopologyKind::Ring
    } else if n >= 4 && edges == n - 1 && degrees[0] == n - 1 {
        TopologyKind::Star
    } else {
        TopologyKind::Other
    };
    Topology { kind, degrees }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_model() -> (PotentialModel, PhysicalParams) {
        let params = PhysicalParams::new(1.0, 0.1, 1.0).unwrap();
        (PotentialModel::power_law(1.0, 6), params)
    }

    fn cfg(s: &str) -> ElectronicConfig {
        s.parse().unwrap()
    }

    #[test]
    fn diagonal_energies() {
        let (m, p) = unit_model();
        let tet = Geometry::tetrahedron(1.0);
        let e = diagonal_energy(&cfg("1100"), &tet, -1.0, &m, &p).unwrap();
        assert!((e - -1.0).abs() < 1e-12);
        assert_eq!(diagonal_energy(&cfg("0000"), &tet, -1.0, &m, &p).unwrap(), 0.0);
        let db = Geometry::dumbbell(1.0);
        let e = diagonal_energy(&cfg("11"), &db, -1.0, &m, &p).unwrap();
        assert!((e - -1.0).abs() < 1e-12);
        assert!(diagonal_energy(&cfg("110"), &db, -1.0, &m, &p).is_err());
    }

    #[test]
    fn dumbbell_path() {
        let (m, p) = unit_model();
        let g = build_resonant_manifold(&Geometry::dumbbell(1.0), -1.0, &m, &p, &cfg("01"), 1e-9).unwrap();
        let names: Vec<_> = g.nodes.iter().map(|c| c.to_string()).collect();
        assert_eq!(names, ["01", "10", "11"]);
        assert_eq!(g.edges(), vec![(0, 2), (1, 2)]);
        let t = graph_classify(&g);
        assert_eq!(t.kind, TopologyKind::Path);
        assert_eq!(t.degrees, vec![2, 1, 1]);
    }

    #[test]
    fn triangle_ring() {
        let (m, p) = unit_model();
        let g = build_resonant_manifold(&Geometry::triangle(1.0), -1.0, &m, &p, &cfg("001"), 1e-9).unwrap();
        assert_eq!(g.len(), 6);
        assert!(!g.nodes.contains(&cfg("000")));
        assert!(!g.nodes.contains(&cfg("111")));
        let t = graph_classify(&g);
        assert_eq!(t.kind, TopologyKind::Ring);
        assert_eq!(t.degrees, vec![2; 6]);
    }

    #[test]
    fn tetrahedron_manifolds() {
        let (m, p) = unit_model();
        let tet = Geometry::tetrahedron(1.0);
        let g = build_resonant_manifold(&tet, -1.0, &m, &p, &cfg("1000"), 1e-9).unwrap();
        assert_eq!(g.len(), 10);
        for (c, d) in g.nodes.iter().zip(g.degrees()) {
            match c.excitations() {
                1 => assert_eq!(d, 3),
                2 => assert_eq!(d, 2),
                k => panic!("unexpected {k}-excitation node"),
            }
        }
        let star = build_resonant_manifold(&tet, -3.0, &m, &p, &cfg("1110"), 1e-9).unwrap();
        assert_eq!(star.len(), 5);
        let t = graph_classify(&star);
        assert_eq!(t.kind, TopologyKind::Star);
        assert_eq!(t.degrees, vec![4, 1, 1, 1, 1]);
        let centre = star.index_of(&cfg("1111")).unwrap();
        assert_eq!(star.degrees()[centre], 4);
    }

    #[test]
    fn manifold_is_symmetric_under_relabelling() {
        let (m, p) = unit_model();
        let tet = Geometry::tetrahedron(1.0);
        let g = build_resonant_manifold(&tet, -1.0, &m, &p, &cfg("1000"), 1e-9).unwrap();
        for perm in [[1, 0, 2, 3], [3, 2, 1, 0], [1, 2, 3, 0]] {
            let relabel = |c: &ElectronicConfig| ElectronicConfig::new(perm.iter().map(|&i| c.is_excited(i)).collect());
            let h = build_resonant_manifold(&tet.permuted(&perm), -1.0, &m, &p, &cfg("1000"), 1e-9).unwrap();
            let mut mapped: Vec<_> = g.nodes.iter().map(relabel).collect();
            mapped.sort();
            assert_eq!(mapped, h.nodes);
            for (i, j) in g.edges() {
                let a = h.index_of(&relabel(&g.nodes[i])).unwrap();
                let b = h.index_of(&relabel(&g.nodes[j])).unwrap();
                assert_eq!(h.adjacency[(a, b)], 1.0);
            }
        }
    }

    #[test]
    fn adjacency_symmetric_zero_diagonal() {
        let (m, p) = unit_model();
        let g = build_resonant_manifold(&Geometry::tetrahedron(1.0), -1.0, &m, &p, &cfg("1000"), 1e-9).unwrap();
        assert_eq!(g.adjacency, g.adjacency.transpose());
        assert!(g.adjacency.diagonal().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn export_formats() {
        let (m, p) = unit_model();
        let g = build_resonant_manifold(&Geometry::dumbbell(1.0), -1.0, &m, &p, &cfg("01"), 1e-9).unwrap();
        assert_eq!(g.edge_list(), "0 2\n1 2\n");
        let table = g.node_table();
        assert_eq!(table["nodes"][2]["bits"], "11");
        assert_eq!(table["nodes"][0]["index"], 0);
    }

    #[test]
    fn config_parsing() {
        assert_eq!(cfg("↑↓"), cfg("10"));
        assert_eq!(cfg("ud"), cfg("10"));
        assert!("1x".parse::<ElectronicConfig>().is_err());
        assert_eq!(cfg("0110").arrows(), "↓↑↑↓");
        assert_eq!(ElectronicConfig::from_index(6, 4), cfg("0110"));
    }

    #[test]
    fn detuning_rules() {
        assert_eq!("-V".parse::<DetuningRule>().unwrap(), DetuningRule::Facilitation(1.0));
        assert_eq!("-3V".parse::<DetuningRule>().unwrap(), DetuningRule::Facilitation(3.0));
        assert_eq!("-2.5".parse::<DetuningRule>().unwrap(), DetuningRule::Explicit(-2.5));
        assert!("V".parse::<DetuningRule>().is_err());
        assert_eq!(DetuningRule::Facilitation(3.0).resolve(2.0), -6.0);
    }

    #[test]
    fn coincident_atoms_rejected() {
        assert_eq!(
            Geometry::custom(vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0; 3]]),
            Err(Error::DegenerateGeometry(0, 2))
        );
    }

    #[test]
    fn presets_have_equal_edges() {
        for g in [
            Geometry::dumbbell(2.0),
            Geometry::triangle(2.0),
            Geometry::tetrahedron(2.0),
        ] {
            for k in 0..g.len() {
                for l in k + 1..g.len() {
                    assert!((g.distance(k, l) - 2.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn classify_other() {
        let nodes = vec![cfg("00"), cfg("11")];
        let g = ResonantGraph::from_nodes(nodes, 0.0);
        assert_eq!(graph_classify(&g).kind, TopologyKind::Other);
    }
}
