//! Discrete Bayesian networks with named, multi-level variables.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::data::LevelTable;
use crate::error::{Error, Result};
use crate::graph::topological_order;
use crate::seed;

/// Tolerance on the sum of each conditional distribution.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

/// Conditional probability table of one variable.
///
/// Rows enumerate parent configurations with the first parent varying
/// fastest; each row holds `card` probabilities, one per level.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Cpt {
    pub parents: Vec<usize>,
    pub parent_cards: Vec<usize>,
    pub card: usize,
    pub probs: Vec<f64>,
}

impl Cpt {
    pub fn n_rows(&self) -> usize {
        self.parent_cards.iter().product()
    }

    /// Row for the parent levels found in a full assignment of all nodes.
    #[inline]
    pub fn row_index(&self, assignment: &[u8]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (k, &p) in self.parents.iter().enumerate() {
            idx += assignment[p] as usize * stride;
            stride *= self.parent_cards[k];
        }
        idx
    }

    /// Row for parent levels given in parent order.
    pub fn row_of(&self, parent_levels: &[usize]) -> usize {
        let mut idx = 0;
        let mut stride = 1;
        for (k, &lvl) in parent_levels.iter().enumerate() {
            idx += lvl * stride;
            stride *= self.parent_cards[k];
        }
        idx
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.card..(r + 1) * self.card]
    }

    pub fn validate(&self, name: &str) -> Result<()> {
        if self.parents.len() != self.parent_cards.len() {
            return Err(Error::InvalidGraph(format!("`{name}`: parent cardinalities missing")));
        }
        if self.probs.len() != self.n_rows() * self.card {
            return Err(Error::InvalidGraph(format!(
                "`{name}`: table has {} entries, expected {}",
                self.probs.len(),
                self.n_rows() * self.card
            )));
        }
        for r in 0..self.n_rows() {
            let row = self.row(r);
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(Error::InvalidGraph(format!("`{name}`: row {r} leaves [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                return Err(Error::InvalidGraph(format!("`{name}`: row {r} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Draws a level for the row selected by `assignment`.
    #[inline]
    pub fn draw<R: Rng + ?Sized>(&self, assignment: &[u8], rng: &mut R) -> u8 {
        let row = self.row(self.row_index(assignment));
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        for (k, &p) in row.iter().enumerate() {
            acc += p;
            if u < acc {
                return k as u8;
            }
        }
        // rounding left `u` above the cumulative sum: take the last level
        // with positive mass
        row.iter().rposition(|&p| p > 0.0).unwrap_or(0) as u8
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteNet {
    names: Vec<String>,
    levels: Vec<Vec<String>>,
    cpts: Vec<Cpt>,
    order: Vec<usize>,
}

impl DiscreteNet {
    pub fn new(names: Vec<String>, levels: Vec<Vec<String>>, cpts: Vec<Cpt>) -> Result<Self> {
        let n = names.len();
        if levels.len() != n || cpts.len() != n {
            return Err(Error::InvalidGraph("names, levels and tables disagree in length".into()));
        }
        for v in 0..n {
            if names[..v].contains(&names[v]) {
                return Err(Error::InvalidGraph(format!("duplicate variable `{}`", names[v])));
            }
            let lv = &levels[v];
            if lv.is_empty() || lv.len() > u8::MAX as usize {
                return Err(Error::InvalidGraph(format!("`{}` has {} levels", names[v], lv.len())));
            }
            if (1..lv.len()).any(|k| lv[..k].contains(&lv[k])) {
                return Err(Error::InvalidGraph(format!("`{}` repeats a level name", names[v])));
            }
            let cpt = &cpts[v];
            if cpt.card != lv.len() {
                return Err(Error::InvalidGraph(format!("`{}`: table width mismatch", names[v])));
            }
            for (k, &p) in cpt.parents.iter().enumerate() {
                if p >= n {
                    return Err(Error::NodeOutOfRange { index: p, len: n });
                }
                if cpt.parent_cards.get(k) != Some(&levels[p].len()) {
                    return Err(Error::InvalidGraph(format!(
                        "`{}`: cardinality of parent `{}` disagrees",
                        names[v], names[p]
                    )));
                }
            }
            cpt.validate(&names[v])?;
        }
        let edges: Vec<(usize, usize)> =
            cpts.iter().enumerate().flat_map(|(v, c)| c.parents.iter().map(move |&p| (p, v))).collect();
        let order = topological_order(n, &edges)?;
        Ok(Self { names, levels, cpts, order })
    }

    pub fn node_count(&self) -> usize {
        self.names.len()
    }

    pub fn edge_count(&self) -> usize {
        self.cpts.iter().map(|c| c.parents.len()).sum()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn levels(&self, v: usize) -> &[String] {
        &self.levels[v]
    }

    pub fn cpt(&self, v: usize) -> &Cpt {
        &self.cpts[v]
    }

    pub fn parents(&self, v: usize) -> &[usize] {
        &self.cpts[v].parents
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.order
    }

    pub fn descendants(&self, v: usize) -> Vec<usize> {
        let n = self.node_count();
        let mut mark = vec![false; n];
        for &u in &self.order {
            if self.parents(u).iter().any(|&p| p == v || mark[p]) {
                mark[u] = true;
            }
        }
        (0..n).filter(|&u| mark[u]).collect()
    }

    /// Network over the remaining variables after removing `drop`.
    ///
    /// Exact (the marginal of the kept variables is unchanged) whenever the
    /// dropped set is closed under taking descendants.
    pub fn without(&self, drop: &[usize]) -> Result<Self> {
        let n = self.node_count();
        let mut new_index = vec![None; n];
        let mut next = 0;
        for (v, slot) in new_index.iter_mut().enumerate() {
            if !drop.contains(&v) {
                *slot = Some(next);
                next += 1;
            }
        }
        let mut names = Vec::new();
        let mut levels = Vec::new();
        let mut cpts = Vec::new();
        for v in 0..n {
            if new_index[v].is_none() {
                continue;
            }
            let mut cpt = self.cpts[v].clone();
            for p in cpt.parents.iter_mut() {
                *p = new_index[*p].ok_or_else(|| {
                    Error::InvalidArgument(format!(
                        "`{}` depends on dropped variable `{}`",
                        self.names[v], self.names[*p]
                    ))
                })?;
            }
            names.push(self.names[v].clone());
            levels.push(self.levels[v].clone());
            cpts.push(cpt);
        }
        Self::new(names, levels, cpts)
    }

    /// Ancestral sampling of every variable.
    pub fn sample(&self, n: usize, seed_value: u64) -> LevelTable {
        let m = self.node_count();
        let mut rng = seed::rng(seed_value, &[seed::stream::SAMPLE]);
        let mut values = vec![0u8; n * m];
        for row in values.chunks_exact_mut(m) {
            for &v in &self.order {
                row[v] = self.cpts[v].draw(row, &mut rng);
            }
        }
        LevelTable { names: self.names.clone(), levels: self.levels.clone(), values }
    }
}
